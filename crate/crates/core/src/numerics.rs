//! Small dense complex linear algebra and the real special functions used
//! by the analysis.
//!
//! Matrices here are tiny (at most `M x M` with `M` the transmit antenna
//! count), so everything is a plain row-major `Vec` with hand-written
//! kernels.

use std::ops::{Deref, DerefMut, Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::RandomStream;

/// Tolerance on the Gram determinant below which a matrix is treated as
/// rank deficient.
pub const RANK_TOL: f64 = 1e-12;

/// Norm below which a projection onto a subspace is treated as degenerate.
pub const PROJECTION_TOL: f64 = 1e-12;

/// Dense complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    /// Standard basis vector `e_i` of length `len`.
    pub fn basis(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.0[i] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    /// Hermitian inner product `selfᴴ other`.
    pub fn dot(&self, other: &ComplexVector) -> Complex64 {
        inner(&self.0, &other.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, factor: Complex64) -> ComplexVector {
        Self(self.0.iter().map(|z| z * factor).collect())
    }

    pub fn scale_real(&self, factor: f64) -> ComplexVector {
        Self(self.0.iter().map(|z| z * factor).collect())
    }

    /// Unit-norm copy; `None` if the norm is not positive.
    pub fn normalized(&self) -> Option<ComplexVector> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale_real(1.0 / n))
    }

    pub fn add(&self, other: &ComplexVector) -> ComplexVector {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &ComplexVector) -> ComplexVector {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Deref for ComplexVector {
    type Target = [Complex64];
    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for ComplexVector {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

impl From<Vec<Complex64>> for ComplexVector {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

/// `aᴴ b` over slices of equal length.
#[inline]
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter()
        .zip(b)
        .fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
        Self { rows, cols, data }
    }

    /// Stacks equally long rows.
    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[ComplexVector]) -> Self {
        let rows = columns.first().map_or(0, |c| c.len());
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged columns");
            for i in 0..rows {
                m[(i, j)] = c[i];
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn conj_transpose(&self) -> ComplexMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].conj();
            }
        }
        t
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> ComplexVector {
        assert_eq!(x.len(), self.cols);
        ComplexVector(
            (0..self.rows)
                .map(|i| {
                    self.row(i)
                        .iter()
                        .zip(x)
                        .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b)
                })
                .collect(),
        )
    }

    /// `Aᴴ x`, without materialising the transpose.
    pub fn conj_transpose_mul_vec(&self, x: &[Complex64]) -> ComplexVector {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        ComplexVector(out)
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `A Aᴴ`.
    pub fn gram(&self) -> ComplexMatrix {
        let mut g = Self::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..=i {
                let v = inner(self.row(j), self.row(i));
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    /// Largest absolute entry of `A - B`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Orthonormal basis `Q` (M x N) of the span of the conjugated rows of `h`
/// (N x M), i.e. of the columns of `hᴴ`.
///
/// Modified Gram-Schmidt with a second orthogonalisation pass. The squared
/// pivot norms multiply to the Gram determinant `det(h hᴴ)`, which is
/// checked against [`RANK_TOL`].
pub fn orthonormal_basis(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (n, m) = (h.rows(), h.cols());
    if n > m {
        return Err(Error::RankDeficient);
    }
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut gram_det = 1.0;
    for i in 0..n {
        let mut v: Vec<Complex64> = h.row(i).iter().map(|z| z.conj()).collect();
        let mut pivot_sqr = 0.0;
        for pass in 0..2 {
            for q in &basis {
                let r = inner(q, &v);
                for (vk, qk) in v.iter_mut().zip(q) {
                    *vk -= r * qk;
                }
            }
            if pass == 0 {
                // Second pass only refines direction; the pivot comes from the first.
                pivot_sqr = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
        gram_det *= pivot_sqr;
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(nrm > 0.0) {
            return Err(Error::RankDeficient);
        }
        for vk in &mut v {
            *vk /= nrm;
        }
        basis.push(v);
    }
    if !(gram_det.abs() >= RANK_TOL) {
        return Err(Error::RankDeficient);
    }
    let cols: Vec<ComplexVector> = basis.into_iter().map(ComplexVector).collect();
    Ok(ComplexMatrix::from_columns(&cols))
}

/// `Q Qᴴ c / ‖Q Qᴴ c‖` for `Q` with orthonormal columns.
pub fn subspace_project_unit(c: &[Complex64], q: &ComplexMatrix) -> Result<ComplexVector> {
    let coeffs = q.conj_transpose_mul_vec(c);
    let proj = q.mul_vec(&coeffs);
    let nrm = proj.norm();
    if !(nrm > PROJECTION_TOL) {
        return Err(Error::DegenerateProjection);
    }
    Ok(proj.scale_real(1.0 / nrm))
}

/// Cholesky factor `L` of a Hermitian positive definite matrix, `A = L Lᴴ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: ComplexMatrix,
}

impl Cholesky {
    /// Factors `a`; fails with `RankDeficient` when `det(a) < RANK_TOL`
    /// or a pivot is not positive.
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        let n = a.rows();
        assert_eq!(n, a.cols());
        let mut l = ComplexMatrix::zeros(n, n);
        let mut det = 1.0;
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) {
                return Err(Error::RankDeficient);
            }
            det *= d;
            let djj = d.sqrt();
            l[(j, j)] = Complex64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        if !(det >= RANK_TOL) {
            return Err(Error::RankDeficient);
        }
        Ok(Self { l })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> ComplexVector {
        let n = self.l.rows();
        let l = &self.l;
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)].conj() * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        ComplexVector(x)
    }
}

/// `(H Hᴴ)⁻¹ H v`.
pub fn gram_solve(h: &ComplexMatrix, v: &[Complex64]) -> Result<ComplexVector> {
    let chol = Cholesky::new(&h.gram())?;
    Ok(chol.solve(&h.mul_vec(v)))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_pos(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "beta requires positive arguments, got ({a}, {b})"
        )));
    }
    Ok(ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?)
}

/// Beta function evaluated in the log domain.
pub fn beta_function(a: f64, b: f64) -> Result<f64> {
    Ok(ln_beta(a, b)?.exp())
}

/// Exact binomial coefficient for `n <= 64`.
pub fn binomial(n: u32, k: u32) -> Result<u64> {
    if k > n {
        return Err(Error::Domain(format!("binomial({n}, {k}) needs k <= n")));
    }
    if n > 64 {
        return Err(Error::Domain(format!("binomial supports n <= 64, got {n}")));
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    Ok(acc as u64)
}

/// Haar-distributed `m x m` unitary: Gram-Schmidt on a complex Gaussian
/// matrix (positive real diagonal in the implied `R`).
pub fn haar_unitary(m: usize, rng: &mut RandomStream) -> ComplexMatrix {
    assert!(m >= 1);
    loop {
        let mut g = ComplexMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                g[(i, j)] = rng.complex_gaussian();
            }
        }
        // Rows of g are the conjugated columns we orthonormalise; the basis
        // is returned column-wise, so Q spans the columns of gᴴ.
        if let Ok(q) = orthonormal_basis(&g) {
            return q;
        }
    }
}
