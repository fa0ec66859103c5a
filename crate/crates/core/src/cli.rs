//! Command-line front end.
//!
//! Option precedence is built-in experiment defaults, then a TOML file
//! (`--config`), then flags. Each experiment writes `<id>.csv`,
//! `<id>.json` (summary) and `<id>.manifest.json` into the output
//! directory, which is `--out`, else `$COOPFB_OUT_DIR`, else `results`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::mode_switch;
use crate::error::{Error, Result};
use crate::model::{db_to_linear, CodebookMode, Mode};
use crate::montecarlo::{run_experiment, ExperimentId, ExperimentOptions, ExperimentResult};

pub const OUT_DIR_ENV: &str = "COOPFB_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "results";

/// Columns holding counts rather than measurements; printed as integers.
const INTEGER_COLUMNS: &[&str] = &["bcl", "k", "n"];

#[derive(Debug, Parser)]
#[command(name = "coopfb", version, about = "Cooperative limited-feedback MU-MIMO simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean local quantization error vs cooperation-link bits.
    Fig3(CommonArgs),
    /// Cdfs of local/global errors and interference terms.
    Fig5(CommonArgs),
    /// SINR cdfs against the closed form.
    Fig6(CommonArgs),
    /// Numerical vs closed-form cooperative sum rate.
    Fig7(CommonArgs),
    /// Conventional, cooperative and adaptive sum rates.
    Fig8(CommonArgs),
    /// Cdf of the global effective norm.
    Fig9(CommonArgs),
    /// Sum-rate sweep of one mode.
    Sweep(CommonArgs),
    /// Closed-form mode advice, no simulation.
    Analyze(CommonArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CodebookArg {
    Haar,
    Dft,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Conventional,
    Cooperative,
    Adaptive,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Conventional => Mode::Conventional,
            ModeArg::Cooperative => Mode::Cooperative,
            ModeArg::Adaptive => Mode::Adaptive,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Transmit antennas.
    #[arg(long)]
    pub m: Option<usize>,
    /// Receive antennas per user.
    #[arg(long)]
    pub n: Option<usize>,
    /// Users.
    #[arg(long)]
    pub k: Option<usize>,
    /// Cooperation-link bits: `6`, `2..10` or `4,6,8`. The first value is
    /// used where a single budget is needed.
    #[arg(long, allow_hyphen_values = true)]
    pub bcl: Option<String>,
    /// SNR grid in dB: `10`, `-5..25`, `0..20:5` or `0,10,20`.
    #[arg(long = "rho-db", allow_hyphen_values = true)]
    pub rho_db: Option<String>,
    /// User counts for fig7 and analyze.
    #[arg(long = "k-values")]
    pub k_values: Option<String>,
    /// Antenna counts for fig9.
    #[arg(long = "n-values")]
    pub n_values: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML file with any of the options above.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub codebook: Option<CodebookArg>,
    /// Draw one global codebook for the whole run.
    #[arg(long)]
    pub fixed_codebook: bool,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

/// Options accepted in a `--config` file. Grids use the flag syntax.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub bcl: Option<String>,
    pub rho_db: Option<String>,
    pub k_values: Option<String>,
    pub n_values: Option<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub codebook: Option<String>,
    pub fixed_codebook: Option<bool>,
    pub mode: Option<String>,
}

/// Provenance record written next to the data files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub experiment: String,
    pub config: Value,
    /// Git-style object hash (`sha256("blob <len>\0" ‖ config json)`).
    pub config_hash: String,
    pub outputs: Vec<PathBuf>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Parses `a`, `a..b` (inclusive), `a..b:step` or `a,b,c`.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse grid '{s}'"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let s = s.trim();
    if let Some((lo, rest)) = s.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((h, st)) => (num(h)?, num(st)?),
            None => (num(rest)?, 1.0),
        };
        let lo = num(lo)?;
        if !(step > 0.0) || hi < lo {
            return Err(bad());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| lo + step * i as f64).collect());
    }
    let v: Vec<f64> = s.split(',').map(num).collect::<Result<_>>()?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(bad());
    }
    Ok(v)
}

/// Integer form of [`parse_f64_list`].
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    parse_f64_list(s)?
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::Config(format!("'{s}' must contain non-negative integers")))
            }
        })
        .collect()
}

fn parse_codebook(s: &str) -> Result<CodebookMode> {
    match s {
        "haar" => Ok(CodebookMode::Haar),
        "dft" => Ok(CodebookMode::Dft),
        _ => Err(Error::Config(format!("unknown codebook '{s}'"))),
    }
}

fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "conventional" => Ok(Mode::Conventional),
        "cooperative" => Ok(Mode::Cooperative),
        "adaptive" => Ok(Mode::Adaptive),
        _ => Err(Error::Config(format!("unknown mode '{s}'"))),
    }
}

fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Resolves defaults, file and flags into experiment options.
pub fn resolve_options(id: ExperimentId, args: &CommonArgs) -> Result<ExperimentOptions> {
    let file = match &args.config {
        Some(p) => load_file(p)?,
        None => FileConfig::default(),
    };
    let mut o = ExperimentOptions::defaults(id);
    o.workers = 0;

    macro_rules! pick {
        ($field:ident) => {
            args.$field.clone().or(file.$field.clone())
        };
    }
    if let Some(v) = pick!(m) {
        o.cfg.m = v;
    }
    if let Some(v) = pick!(n) {
        o.cfg.n = v;
        o.n_values = vec![v];
    }
    if let Some(v) = pick!(k) {
        o.cfg.k = v;
        o.k_values = vec![v];
    }
    if let Some(s) = pick!(bcl) {
        let v = parse_usize_list(&s)?;
        o.bcl = v.iter().map(|&b| b as u32).collect();
        o.cfg.b_cl = *o.bcl.first().ok_or(Error::EmptyInput)?;
        if args.n.is_some() || file.n.is_some() {
            o.configs = vec![(o.cfg.n, o.cfg.b_cl)];
        }
    }
    if let Some(s) = pick!(rho_db) {
        o.rho_db = parse_f64_list(&s)?;
        o.cfg.rho = db_to_linear(*o.rho_db.first().ok_or(Error::EmptyInput)?);
    }
    if let Some(s) = pick!(k_values) {
        o.k_values = parse_usize_list(&s)?;
    }
    if let Some(s) = pick!(n_values) {
        o.n_values = parse_usize_list(&s)?;
    }
    if let Some(v) = pick!(trials) {
        o.cfg.trials = v;
    }
    if let Some(v) = pick!(seed) {
        o.cfg.seed = v;
    }
    if let Some(v) = pick!(workers) {
        o.workers = v;
    }
    if let Some(c) = args.codebook {
        o.cfg.codebook_mode = match c {
            CodebookArg::Haar => CodebookMode::Haar,
            CodebookArg::Dft => CodebookMode::Dft,
        };
    } else if let Some(s) = &file.codebook {
        o.cfg.codebook_mode = parse_codebook(s)?;
    }
    o.cfg.fixed_global_codebook = args.fixed_codebook || file.fixed_codebook.unwrap_or(false);
    if let Some(m) = args.mode {
        o.mode = m.into();
    } else if let Some(s) = &file.mode {
        o.mode = parse_mode(s)?;
    }
    if id == ExperimentId::Fig7 {
        // K grid drives the run; cfg.k only has to admit the largest.
        o.cfg.k = *o.k_values.iter().max().ok_or(Error::EmptyInput)?;
    }
    if o.rho_db.is_empty() || o.cfg.trials == 0 {
        return Err(Error::Config("need at least one SNR point and one trial".into()));
    }
    o.cfg.validate()?;
    Ok(o)
}

/// Canonical JSON of the resolved options.
pub fn options_json(o: &ExperimentOptions) -> Value {
    json!({
        "system": o.cfg,
        "rho_db": o.rho_db,
        "bcl": o.bcl,
        "k_values": o.k_values,
        "n_values": o.n_values,
        "configs": o.configs,
        "mode": o.mode.to_string(),
    })
}

/// Git-style object hash of a byte string, with SHA-256 as the digest.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// 17 significant digits; exact round trip for every finite f64.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn format_csv(r: &ExperimentResult) -> String {
    let mut out = r.columns.join(",");
    out.push('\n');
    let int_col: Vec<bool> = r.columns.iter().map(|c| INTEGER_COLUMNS.contains(&c.as_str())).collect();
    for row in &r.rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            if int_col[i] {
                let _ = write!(out, "{}", *v as i64);
            } else {
                out.push_str(&format_float(*v));
            }
        }
        out.push('\n');
    }
    out
}

pub fn summary_json(r: &ExperimentResult, config: &Value) -> Value {
    json!({
        "experiment": r.experiment,
        "config": config,
        "aggregates": Value::Object(r.aggregates.clone()),
        "seed": r.seed,
        "resample_count": r.resample_count,
    })
}

/// Output directory: flag, else environment, else `results`.
pub fn output_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

/// Runs one experiment and writes its files. Returns the manifest.
pub fn run_and_write(id: ExperimentId, opts: &ExperimentOptions, dir: &Path) -> Result<RunManifest> {
    let result = run_experiment(id, opts)?;
    let config = options_json(opts);
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{}.csv", id.name()));
    let summary = dir.join(format!("{}.json", id.name()));
    let manifest_path = dir.join(format!("{}.manifest.json", id.name()));
    std::fs::write(&csv, format_csv(&result))?;
    let pretty = |v: &Value| serde_json::to_string_pretty(v).expect("json values serialize") + "\n";
    std::fs::write(&summary, pretty(&summary_json(&result, &config)))?;
    let canonical = serde_json::to_vec(&config).expect("json values serialize");
    let manifest = RunManifest {
        experiment: id.name().into(),
        config_hash: content_hash(&canonical),
        config,
        outputs: vec![csv, summary],
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).expect("serializable") + "\n")?;
    Ok(manifest)
}

/// Closed-form decision table over the K and SNR grids.
pub fn analyze_table(opts: &ExperimentOptions) -> Result<String> {
    let c = &opts.cfg;
    let mut out = format!(
        "# M={} N={} Bcl={}\n{:>6} {:>8} {:>12} {:>12} {:>12}  decision\n",
        c.m, c.n, c.b_cl, "K", "rho_db", "R_prop", "R_conv", "delta_R"
    );
    for &k in &opts.k_values {
        for &db in &opts.rho_db {
            let d = mode_switch(k, c.m, c.n, db_to_linear(db), c.b_cl)?;
            let _ = writeln!(
                out,
                "{k:>6} {db:>8.2} {:>12.6} {:>12.6} {:>12.6}  {}",
                d.rate_cooperative, d.rate_conventional, d.delta_rate, d.mode
            );
        }
    }
    Ok(out)
}

fn id_of(cmd: &Command) -> (Option<ExperimentId>, &CommonArgs) {
    match cmd {
        Command::Fig3(a) => (Some(ExperimentId::Fig3), a),
        Command::Fig5(a) => (Some(ExperimentId::Fig5), a),
        Command::Fig6(a) => (Some(ExperimentId::Fig6), a),
        Command::Fig7(a) => (Some(ExperimentId::Fig7), a),
        Command::Fig8(a) => (Some(ExperimentId::Fig8), a),
        Command::Fig9(a) => (Some(ExperimentId::Fig9), a),
        Command::Sweep(a) => (Some(ExperimentId::Sweep), a),
        Command::Analyze(a) => (None, a),
    }
}

/// Exit status for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        _ => 1,
    }
}

/// Executes a parsed command line, printing to stdout/stderr.
pub fn execute(cli: &Cli) -> Result<()> {
    let (id, args) = id_of(&cli.command);
    match id {
        Some(id) => {
            let opts = resolve_options(id, args)?;
            let dir = output_dir(args.out.as_deref());
            let m = run_and_write(id, &opts, &dir)?;
            for p in &m.outputs {
                println!("{}", p.display());
            }
        }
        None => {
            let opts = resolve_options(ExperimentId::Fig8, args)?;
            print!("{}", analyze_table(&opts)?);
        }
    }
    Ok(())
}

/// Entry point used by the binary. Returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
