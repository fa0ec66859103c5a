//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line.
//!
//! A criterion listed as known-red is one whose tolerance the model under
//! test does not reach; it keeps its tolerance, reports `FAIL` with the
//! measured numbers, and does not abort the suite. Should it start passing
//! the test panics so the record can be updated.

use std::io::Write;
use std::time::{Duration, Instant};

use coopfb::analysis::mode_switch;
use coopfb::cooperation::{acquire_global_csi, acquire_local_csi, assign_roles, build_global_matrix};
use coopfb::link::{
    decompose_received, draw_symbols, quantized_effective_channel, simulate_symbol_path,
    split_against_codeword,
};
use coopfb::model::{db_to_linear, derive_trial_rng, gen_channel, Purpose};
use coopfb::montecarlo::{
    run_experiment, trial_channel, trial_codebook, trial_local_codebook, ExperimentId,
    ExperimentOptions, ExperimentResult,
};
use coopfb::numerics::{inner, ComplexVector};
use coopfb::qbc::Combiner;
use coopfb::{Mode, SystemConfig};
use serde_json::Value;

fn report(id: u32, name: &str, pass: bool, detail: &str, known_red: Option<&str>) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let note = match (pass, known_red) {
        (false, Some(why)) => format!(" [known red: {why}]"),
        _ => String::new(),
    };
    // Written to the raw handle so the line survives output capture.
    let _ = writeln!(std::io::stderr(), "{verdict} criterion {id:>2} {name}: {detail}{note}");
    match (pass, known_red) {
        (false, None) => panic!("criterion {id} failed: {detail}"),
        (true, Some(_)) => panic!("criterion {id} now passes; update its known-red status"),
        _ => {}
    }
}

fn agg<'a>(r: &'a ExperimentResult, path: &[&str]) -> &'a Value {
    let mut v = r.aggregates.get(path[0]).unwrap_or_else(|| panic!("missing {}", path[0]));
    for p in &path[1..] {
        v = v.get(p).unwrap_or_else(|| panic!("missing {p}"));
    }
    v
}

fn agg_f64(r: &ExperimentResult, path: &[&str]) -> f64 {
    agg(r, path).as_f64().unwrap_or(f64::NAN)
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// One cooperation unit per trial; the MU is chosen by the role rule.
struct Unit {
    decomposition_error: f64,
    global_sum: f64,
    local_sum: f64,
}

fn cooperative_unit(cfg: &SystemConfig, t: u64) -> Unit {
    let cb = trial_codebook(cfg, t, 0);
    let lcb = trial_local_codebook(cfg, t, 0);
    let ch = [trial_channel(cfg, t, 0, 0), trial_channel(cfg, t, 1, 0)];
    let local = [
        acquire_local_csi(&ch[0], &lcb).unwrap(),
        acquire_local_csi(&ch[1], &lcb).unwrap(),
    ];
    let g = [build_global_matrix(&ch[0], &local[1]), build_global_matrix(&ch[1], &local[0])];
    let csi: Vec<_> = (0..2)
        .map(|u| acquire_global_csi(u, &g[u], &cb, cfg.rho).unwrap())
        .collect();
    let roles = assign_roles(csi[0].0.clone(), csi[1].0.clone());
    let (mu, au) = (roles.mu, roles.au);
    let z_bar = &csi[mu].1;
    let m = roles.mu_csi.cdi;

    let mut rng = derive_trial_rng(cfg.seed, t, Purpose::Symbols);
    let s = draw_symbols(cfg.m, &mut rng);
    let (obs, y) = simulate_symbol_path(&ch[mu], &ch[au], &local[au], z_bar, &cb, &s, cfg.rho, &mut rng);
    let terms = decompose_received(&g[mu], &local[au], z_bar, &cb, m, &s, cfg.rho, &obs.noise_bar);
    let decomposition_error = (terms.recombine() - y).norm() / y.norm();

    let qu = quantized_effective_channel(&g[mu], z_bar);
    let split = split_against_codeword(&qu, cb.codeword(m));
    let global_sum = split.error_direction.as_ref().map_or(f64::NAN, |e| {
        (0..cfg.m)
            .filter(|&l| l != m)
            .map(|l| inner(e, cb.codeword(l)).norm_sqr())
            .sum()
    });
    let local_sum = local[au].error_direction.as_ref().map_or(f64::NAN, |e| {
        (0..cfg.m).map(|l| inner(e, cb.codeword(l)).norm_sqr()).sum()
    });
    Unit { decomposition_error, global_sum, local_sum }
}

fn unit_cfg() -> SystemConfig {
    SystemConfig::new(4, 2, 8, 10.0, 8).with_seed(11)
}

#[test]
fn criterion_01_decomposition_exactness() {
    let cfg = unit_cfg();
    let start = Instant::now();
    let worst = (0..1000)
        .map(|t| cooperative_unit(&cfg, t).decomposition_error)
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let pass = worst <= 1e-10 && elapsed < Duration::from_secs(10);
    report(
        1,
        "four-term decomposition",
        pass,
        &format!("max relative error {worst:.3e} over 1000 trials (tol 1e-10), {:.2} s (limit 10 s)", secs(elapsed)),
        None,
    );
}

#[test]
fn criterion_02_orthogonality_identities() {
    let cfg = unit_cfg();
    let (mut g_dev, mut l_dev) = (0.0f64, 0.0f64);
    for t in 0..1000 {
        let u = cooperative_unit(&cfg, t);
        g_dev = g_dev.max((u.global_sum - 1.0).abs());
        l_dev = l_dev.max((u.local_sum - 1.0).abs());
    }
    let pass = g_dev <= 1e-10 && l_dev <= 1e-10;
    report(
        2,
        "orthogonality identities",
        pass,
        &format!("max |sum-1|: global {g_dev:.3e}, local {l_dev:.3e} over 1000 trials (tol 1e-10)"),
        None,
    );
}

#[test]
fn criterion_03_local_error_mean() {
    let mut o = ExperimentOptions::defaults(ExperimentId::Fig3);
    o.cfg.trials = 10_000;
    o.bcl = (2..=10).collect();
    let start = Instant::now();
    let r = run_experiment(ExperimentId::Fig3, &o).unwrap();
    let elapsed = start.elapsed();
    let mut pass = elapsed < Duration::from_secs(60);
    let mut parts = Vec::new();
    for row in &r.rows {
        let (b, mc, prop, cmp) = (row[0] as u32, row[1], row[2], row[3]);
        let rel = (mc - prop).abs() / mc;
        if [6, 8, 10].contains(&b) {
            pass &= rel <= 0.05;
            parts.push(format!("Bcl={b} rel {rel:.4}"));
        }
        if b >= 6 {
            pass &= (mc - prop).abs() < (mc - cmp).abs();
        }
    }
    report(
        3,
        "local error vs closed form",
        pass,
        &format!("{} (tol 0.05); closer than comparison at Bcl>=6; {:.1} s (limit 60 s)", parts.join(", "), secs(elapsed)),
        None,
    );
}

#[test]
fn criterion_04_beta_and_chi_squared_moments() {
    let cfg = SystemConfig::new(4, 2, 8, 10.0, 4).with_seed(4);
    let n = 100_000u64;
    let (mut err_sum, mut norm_sum) = (0.0, 0.0);
    for t in 0..n {
        let ch = gen_channel(&cfg, 0, &mut derive_trial_rng(cfg.seed, t, Purpose::Channel { user: 0 }));
        let mut rng = derive_trial_rng(cfg.seed, t, Purpose::Test(4));
        let c = ComplexVector::new((0..cfg.m).map(|_| rng.complex_gaussian()).collect())
            .normalized()
            .unwrap();
        err_sum += 1.0 - Combiner::new(&ch.h).unwrap().alignment(&c);
        let lcb = trial_local_codebook(&cfg, t, 0);
        norm_sum += acquire_local_csi(&ch, &lcb).unwrap().virtual_channel.norm_sqr();
    }
    let err = err_sum / n as f64;
    let norm = norm_sum / n as f64;
    let err_target = (cfg.m - cfg.n) as f64 / cfg.m as f64;
    let norm_target = (cfg.m - cfg.n + 1) as f64;
    let (re, rn) = ((err - err_target).abs() / err_target, (norm - norm_target).abs() / norm_target);
    report(
        4,
        "beta and chi-squared moments",
        re <= 0.01 && rn <= 0.01,
        &format!("error mean {err:.5} vs {err_target} (rel {re:.4}), |h_virt|^2 mean {norm:.5} vs {norm_target} (rel {rn:.4}), tol 0.01"),
        None,
    );
}

#[test]
fn criterion_05_effective_norm_distribution() {
    let o = ExperimentOptions::defaults(ExperimentId::Fig9);
    assert_eq!((o.cfg.trials, o.cfg.b_cl, &o.n_values[..]), (10_000, 8, &[2usize, 3][..]));
    let r = run_experiment(ExperimentId::Fig9, &o).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2, 3] {
        let key = format!("n{n}");
        let model = agg_f64(&r, &["ks", &key, "direct_vs_model"]);
        let sur = agg_f64(&r, &["ks", &key, "direct_vs_surrogate"]);
        pass &= model <= 0.03 && sur <= 0.03;
        parts.push(format!("N={n}: KS model {model:.4}, KS surrogate {sur:.4}"));
    }
    report(
        5,
        "effective norm vs Gamma model",
        pass,
        &format!("{} (tol 0.03)", parts.join("; ")),
        Some("at N=3 the Gamma model is off by a population KS near 0.026, and 10^4-sample noise carries it past 0.03"),
    );
}

#[test]
fn criterion_06_sinr_cdf_upper_tail() {
    let mut o = ExperimentOptions::defaults(ExperimentId::Fig6);
    o.rho_db = vec![0.0, 10.0, 20.0];
    let r = run_experiment(ExperimentId::Fig6, &o).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for db in [0.0, 10.0, 20.0] {
        let ks = agg_f64(&r, &["ks", &format!("rho_db_{db}"), "approx_upper"]);
        pass &= ks <= 0.03;
        parts.push(format!("rho={}: {ks:.4}", db_to_linear(db)));
    }
    report(
        6,
        "approximated SINR cdf upper tail",
        pass,
        &format!("KS on F>=0.5 {} (tol 0.03)", parts.join(", ")),
        Some("the closed-form cdf drops the Gamma(2) tail polynomial; exact-ingredient sampling gives KS 0.085-0.165"),
    );
}

#[test]
fn criterion_07_sum_rate_agreement() {
    let mut o = ExperimentOptions::defaults(ExperimentId::Fig7);
    o.configs = vec![(3, 4)];
    o.k_values = vec![50, 100, 200, 400];
    assert_eq!(o.cfg.trials, 10_000);
    let start = Instant::now();
    let r = run_experiment(ExperimentId::Fig7, &o).unwrap();
    let elapsed = start.elapsed();
    let k = r.column("k").unwrap();
    let gaps = r.column("rel_gap").unwrap();
    let max400 = k
        .iter()
        .zip(&gaps)
        .filter(|(k, _)| **k == 400.0)
        .map(|(_, g)| *g)
        .fold(0.0, |a: f64, g| if g.is_nan() { f64::INFINITY } else { a.max(g) });
    let mean50 = agg_f64(&r, &["gaps", "n3_bcl4_k50", "mean_rel_gap"]);
    let mean400 = agg_f64(&r, &["gaps", "n3_bcl4_k400", "mean_rel_gap"]);
    let pass = max400 <= 0.05 && mean50 > mean400 && elapsed < Duration::from_secs(600);
    report(
        7,
        "sum-rate agreement",
        pass,
        &format!(
            "K=400 max rel gap {max400:.4} (tol 0.05); mean gap K=50 {mean50:.4} > K=400 {mean400:.4}; {:.1} s (limit 600 s)",
            secs(elapsed)
        ),
        None,
    );
}

#[test]
fn criterion_08_mode_switch_crossing() {
    let o = ExperimentOptions::defaults(ExperimentId::Fig8);
    assert_eq!((o.cfg.m, o.cfg.n, o.cfg.b_cl), (4, 3, 6));
    let r = run_experiment(ExperimentId::Fig8, &o).unwrap();
    let first = |key: &str| agg(&r, &[key]).as_array().and_then(|a| a.first()).and_then(|v| v.as_f64());
    let (mc, an) = (first("crossing_mc_db"), first("crossing_analytic_db"));
    let (pass, detail) = match (mc, an) {
        (Some(a), Some(b)) => (
            (a - b).abs() <= 0.3,
            format!("Monte Carlo {a:.3} dB, closed form {b:.3} dB, gap {:.3} dB (tol 0.3)", (a - b).abs()),
        ),
        _ => (false, format!("missing crossing: mc {mc:?}, closed form {an:?}")),
    };
    report(8, "mode-switch crossing", pass, &detail, None);
}

#[test]
fn criterion_09_cooperation_benefit() {
    let mut o = ExperimentOptions::defaults(ExperimentId::Fig8);
    o.cfg.n = 2;
    o.cfg.b_cl = 4;
    o.cfg.k = 200;
    let r = run_experiment(ExperimentId::Fig8, &o).unwrap();
    let mut losing = Vec::new();
    let mut not_coop = Vec::new();
    for row in &r.rows {
        let (db, conv, coop) = (row[0], row[1], row[2]);
        if db < 0.0 {
            continue;
        }
        if coop < conv {
            losing.push(format!("{db}"));
        }
        match mode_switch(o.cfg.k, o.cfg.m, o.cfg.n, db_to_linear(db), o.cfg.b_cl) {
            Ok(d) if d.mode == Mode::Cooperative => {}
            Ok(_) => not_coop.push(format!("{db}:conventional")),
            Err(_) => not_coop.push(format!("{db}:invalid-regime")),
        }
    }
    let pass = losing.is_empty() && not_coop.is_empty();
    report(
        9,
        "cooperation benefit",
        pass,
        &format!(
            "rho>=0 dB points with coop<conv: [{}]; points where mode_switch is not cooperative: [{}]",
            losing.join(", "),
            not_coop.join(", ")
        ),
        Some("halving the reports loses at 0-1 dB, and the conventional estimate leaves its regime from 20 dB"),
    );
}

fn csv_for(id: ExperimentId, workers: usize) -> String {
    let mut o = ExperimentOptions::defaults(id);
    o.cfg.trials = 60;
    o.cfg.seed = 2024;
    o.workers = workers;
    if id == ExperimentId::Fig7 {
        o.k_values = vec![8, 16];
        o.cfg.k = 16;
    }
    if id == ExperimentId::Fig3 {
        o.bcl = vec![2, 5];
    }
    coopfb::cli::format_csv(&run_experiment(id, &o).unwrap())
}

#[test]
fn criterion_10_determinism() {
    use ExperimentId::*;
    let mut mismatches = Vec::new();
    for id in [Fig3, Fig5, Fig6, Fig7, Fig8, Fig9, Sweep] {
        let base = csv_for(id, 1);
        for workers in [2, 3, 1] {
            if csv_for(id, workers) != base {
                mismatches.push(format!("{}@{workers}", id.name()));
            }
        }
    }

    // Through the binary: two runs, different worker counts, same bytes.
    let exe = env!("CARGO_BIN_EXE_coopfb");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (d, w) in dirs.iter().zip(["1", "3"]) {
        let st = std::process::Command::new(exe)
            .args(["fig8", "--trials", "40", "--seed", "9", "--rho-db", "0..10:5", "--workers", w])
            .env("COOPFB_OUT_DIR", d.path())
            .output()
            .unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    }
    let a = std::fs::read(dirs[0].path().join("fig8.csv")).unwrap();
    let b = std::fs::read(dirs[1].path().join("fig8.csv")).unwrap();
    if a != b {
        mismatches.push("cli fig8".into());
    }
    report(
        10,
        "determinism",
        mismatches.is_empty(),
        &format!("7 experiments x workers {{1,2,3}} plus CLI; mismatches: [{}]", mismatches.join(", ")),
        None,
    );
}
