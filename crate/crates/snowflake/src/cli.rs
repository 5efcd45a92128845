//! Command-line surface: configuration merging, subcommand dispatch, and the
//! SVG/CSV/JSON emitters.
//!
//! All artifacts embed the tool version and the effective configuration, and
//! are byte-deterministic for a fixed configuration and seed.

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::complexmaps::SlitBlock;
use crate::error::{Error, Result};
use crate::operator::{
    assemble_p_matrix, certify_lower_bound, critical_radius, fit_rational, power_iteration,
    BoundCertificate, CertificateMode, RationalTestFunction, SpectrumParams,
};
use crate::search::{spectrum_table, sweep, NuStrategy, SpectrumTable, SweepResult};
use crate::snowflake::{default_generations, make_rotations, mc_integral_means, McEstimate,
    SnowflakeRealization};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Flat configuration shared by all subcommands; a JSON file provides base
/// values and command-line flags override individual fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub l: f64,
    pub s: f64,
    pub k: u32,
    pub t: f64,
    /// Exponent list for the table command (falls back to a default grid).
    pub t_list: Option<Vec<f64>>,
    pub n_grid: Option<usize>,
    pub m_angles: Option<usize>,
    /// Override for the operator interval endpoint R (default: critical radius).
    pub radius: Option<f64>,
    pub seed: u64,
    pub mode: CertificateMode,
    /// Radial node count for bound certificates.
    pub bound_points: usize,
    /// Explicit ν coefficients (numerator degree 5, denominator degree 1);
    /// absent ⇒ reference ν in paper mode, refitted ν otherwise.
    pub nu_numerator: Option<Vec<f64>>,
    pub nu_denominator: Option<Vec<f64>>,
    /// Snowflake generation count (render/mc); absent ⇒ per-command default.
    pub generations: Option<usize>,
    /// Circle radius for rendering.
    pub render_radius: f64,
    pub render_samples: usize,
    /// Monte Carlo sample count and evaluation radii.
    pub samples: usize,
    pub radii: Option<Vec<f64>>,
    /// Sweep ranges.
    pub k_list: Option<Vec<u32>>,
    pub l_list: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            l: 73.0,
            s: 1.002,
            k: 13,
            t: 1.0,
            t_list: None,
            n_grid: None,
            m_angles: None,
            radius: None,
            seed: 0,
            mode: CertificateMode::PaperConstants,
            bound_points: 3000,
            nu_numerator: None,
            nu_denominator: None,
            generations: None,
            render_radius: 1.02,
            render_samples: 1024,
            samples: 10_000,
            radii: None,
            k_list: None,
            l_list: None,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "snowflake",
    version,
    about = "Random conformal snowflakes and integral-means spectrum bounds"
)]
pub struct Cli {
    /// JSON configuration file; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker thread cap (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output path (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub l: Option<f64>,
    #[arg(long, global = true)]
    pub s: Option<f64>,
    #[arg(long, global = true)]
    pub k: Option<u32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long = "n-grid", global = true)]
    pub n_grid: Option<usize>,
    #[arg(long = "m-angles", global = true)]
    pub m_angles: Option<usize>,
    /// Operator interval endpoint R.
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Error-budget mode: paper-constants | heuristic.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a snowflake boundary to SVG.
    Render {
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Dominant eigenvalue of the discretized operator (JSON report).
    Eigen,
    /// Certified lower bound on the average integral-means spectrum
    /// (certificate JSON plus ratio CSV).
    Bound {
        #[arg(long = "bound-points")]
        bound_points: Option<usize>,
    },
    /// Eigenvalue and lower bound over a list of exponents t (CSV).
    Table {
        /// Comma-separated exponent list.
        #[arg(long = "t-list", value_delimiter = ',', allow_hyphen_values = true)]
        t_list: Option<Vec<f64>>,
    },
    /// Coarse (k, l) eigenvalue ranking (CSV).
    Sweep {
        #[arg(long = "k-list", value_delimiter = ',')]
        k_list: Option<Vec<u32>>,
        #[arg(long = "l-list", value_delimiter = ',')]
        l_list: Option<Vec<f64>>,
    },
    /// Monte Carlo cross-check of the integral-means growth (CSV).
    Mc {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
    },
}

fn parse_mode(s: &str) -> Result<CertificateMode> {
    match s {
        "paper-constants" => Ok(CertificateMode::PaperConstants),
        "heuristic" => Ok(CertificateMode::Heuristic),
        other => Err(Error::InvalidConfig(format!(
            "mode must be paper-constants or heuristic, got {other}"
        ))),
    }
}

/// Merge a config file (if any) with flag overrides into the effective config.
pub fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg: RunConfig = match &cli.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::InvalidConfig(format!("config file: {e}")))?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.l {
        cfg.l = v;
    }
    if let Some(v) = cli.s {
        cfg.s = v;
    }
    if let Some(v) = cli.k {
        cfg.k = v;
    }
    if let Some(v) = cli.t {
        cfg.t = v;
    }
    if let Some(v) = cli.n_grid {
        cfg.n_grid = Some(v);
    }
    if let Some(v) = cli.m_angles {
        cfg.m_angles = Some(v);
    }
    if let Some(v) = cli.radius {
        cfg.radius = Some(v);
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(m) = &cli.mode {
        cfg.mode = parse_mode(m)?;
    }
    match &cli.command {
        Command::Render { generations, samples } => {
            if let Some(g) = generations {
                cfg.generations = Some(*g);
            }
            if let Some(n) = samples {
                cfg.render_samples = *n;
            }
        }
        Command::Bound { bound_points } => {
            if let Some(p) = bound_points {
                cfg.bound_points = *p;
            }
        }
        Command::Table { t_list } => {
            if let Some(ts) = t_list {
                cfg.t_list = Some(ts.clone());
            }
        }
        Command::Sweep { k_list, l_list } => {
            if let Some(ks) = k_list {
                cfg.k_list = Some(ks.clone());
            }
            if let Some(ls) = l_list {
                cfg.l_list = Some(ls.clone());
            }
        }
        Command::Mc { samples, generations } => {
            if let Some(n) = samples {
                cfg.samples = *n;
            }
            if let Some(g) = generations {
                cfg.generations = Some(*g);
            }
        }
        Command::Eigen => {}
    }
    Ok(cfg)
}

fn config_echo(cfg: &RunConfig) -> String {
    serde_json::to_string(cfg).expect("config serializes")
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, content)?;
            Ok(())
        }
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

fn csv_header(cfg: &RunConfig, extra: &[(&str, String)]) -> String {
    let mut s = String::new();
    s.push_str(&format!("# conformal-snowflake v{VERSION}\n"));
    s.push_str(&format!("# config = {}\n", config_echo(cfg)));
    for (k, v) in extra {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s
}

// ---------------------------------------------------------------------------
// subcommand implementations

fn resolve_block(cfg: &RunConfig) -> Result<SlitBlock> {
    SlitBlock::new(cfg.l, cfg.s)
}

fn resolve_radius(cfg: &RunConfig, block: &SlitBlock) -> Result<f64> {
    match cfg.radius {
        Some(r) => {
            let rc = critical_radius(block, cfg.k)?;
            if r < rc {
                return Err(Error::InvalidConfig(format!(
                    "radius {r} below the critical radius {rc:.4}"
                )));
            }
            Ok(r)
        }
        None => critical_radius(block, cfg.k),
    }
}

fn resolve_nu(
    cfg: &RunConfig,
    block: &SlitBlock,
    params: &SpectrumParams,
    r_max: f64,
    n: usize,
    m: usize,
) -> Result<RationalTestFunction> {
    match (&cfg.nu_numerator, &cfg.nu_denominator) {
        (Some(num), Some(den)) => {
            if num.len() != 6 || den.len() != 2 {
                return Err(Error::InvalidConfig(
                    "nu needs 6 numerator and 2 denominator coefficients".into(),
                ));
            }
            Ok(RationalTestFunction {
                numerator: [num[0], num[1], num[2], num[3], num[4], num[5]],
                denominator: [den[0], den[1]],
            })
        }
        (None, None) => match cfg.mode {
            CertificateMode::PaperConstants => Ok(RationalTestFunction::reference()),
            CertificateMode::Heuristic => {
                let op = assemble_p_matrix(block, params, n, m, r_max)?;
                let eig = power_iteration(&op, 1e-10, 100_000)?;
                fit_rational(&eig, &op.grid)
            }
        },
        _ => Err(Error::InvalidConfig(
            "nu numerator and denominator must be given together".into(),
        )),
    }
}

pub fn cmd_render(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<()> {
    let block = resolve_block(cfg)?;
    let n = cfg.generations.unwrap_or(3);
    let real = SnowflakeRealization::new(block, cfg.k, make_rotations(cfg.seed, n + 1))?;
    let pts = real.render_boundary(cfg.render_samples, cfg.render_radius)?;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &pts {
        x0 = x0.min(p.re);
        x1 = x1.max(p.re);
        y0 = y0.min(p.im);
        y1 = y1.max(p.im);
    }
    let margin = 0.05 * ((x1 - x0).max(y1 - y0));
    let (vx, vy) = (x0 - margin, y0 - margin);
    let (vw, vh) = (x1 - x0 + 2.0 * margin, y1 - y0 + 2.0 * margin);
    let mut d = String::new();
    for (i, p) in pts.iter().enumerate() {
        let c = if i == 0 { 'M' } else { 'L' };
        d.push_str(&format!("{c}{:.6} {:.6}", p.re, p.im));
    }
    d.push('Z');
    let svg = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <!-- conformal-snowflake v{VERSION} config={} -->\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         viewBox=\"{:.6} {:.6} {:.6} {:.6}\">\n\
         <path d=\"{d}\" fill=\"none\" stroke=\"black\" stroke-width=\"{:.6}\"/>\n\
         </svg>\n",
        config_echo(cfg),
        vx,
        vy,
        vw,
        vh,
        0.002 * vw.max(vh),
    );
    write_output(out, &svg)
}

#[derive(Serialize)]
struct EigenReport<'a> {
    version: &'a str,
    config: &'a RunConfig,
    r_max: f64,
    lambda: f64,
    log_k_lambda: f64,
    residual: f64,
    iterations: usize,
    clamped_samples: usize,
    eigenvector: Vec<f64>,
}

pub fn cmd_eigen(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<()> {
    let block = resolve_block(cfg)?;
    let params = SpectrumParams::new(cfg.t, cfg.k)?;
    let r_max = resolve_radius(cfg, &block)?;
    let n = cfg.n_grid.unwrap_or(1000);
    let m = cfg.m_angles.unwrap_or(500);
    let op = assemble_p_matrix(&block, &params, n, m, r_max)?;
    let eig = power_iteration(&op, 1e-10, 100_000)?;
    let report = EigenReport {
        version: VERSION,
        config: cfg,
        r_max,
        lambda: eig.lambda,
        log_k_lambda: eig.log_lambda(cfg.k),
        residual: eig.residual,
        iterations: eig.iterations,
        clamped_samples: op.clamped,
        eigenvector: eig.vector,
    };
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write_output(out, &json)
}

#[derive(Serialize)]
struct BoundReport<'a> {
    version: &'a str,
    config: &'a RunConfig,
    certificate: &'a BoundCertificate,
}

fn bound_csv(cfg: &RunConfig, cert: &BoundCertificate) -> String {
    let mut csv = csv_header(
        cfg,
        &[
            ("min_ratio", fmt(cert.min_ratio)),
            ("beta_lower", fmt(cert.beta_lower)),
        ],
    );
    csv.push_str("r,i_value,ratio\n");
    let radii = cert.node_radii();
    for (&r, &i) in radii.iter().zip(&cert.i_values) {
        let ratio = r.powf(cert.params.prefactor_exp()) * i / cert.nu.eval(r);
        csv.push_str(&format!("{},{},{}\n", fmt(r), fmt(i), fmt(ratio)));
    }
    csv
}

/// Bound certificate: JSON to `out`, per-node ratio data to `out` + ".csv".
/// A vacuous bound still writes both artifacts before the error returns.
pub fn cmd_bound(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<()> {
    let block = resolve_block(cfg)?;
    let params = SpectrumParams::new(cfg.t, cfg.k)?;
    let r_max = resolve_radius(cfg, &block)?;
    let n = cfg.n_grid.unwrap_or(1000);
    let m = cfg.m_angles.unwrap_or(500);
    let nu = resolve_nu(cfg, &block, &params, r_max, n, m)?;
    let write_artifacts = |cert: &BoundCertificate| -> Result<()> {
        let report = BoundReport { version: VERSION, config: cfg, certificate: cert };
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        write_output(out, &json)?;
        if let Some(path) = out {
            let csv_path = sibling_csv(path);
            std::fs::write(csv_path, bound_csv(cfg, cert))?;
        }
        Ok(())
    };
    match certify_lower_bound(&block, &params, &nu, r_max, cfg.bound_points, cfg.mode) {
        Ok(cert) => write_artifacts(&cert),
        Err(Error::BoundVacuous { min_ratio, certificate }) => {
            write_artifacts(&certificate)?;
            Err(Error::BoundVacuous { min_ratio, certificate })
        }
        Err(e) => Err(e),
    }
}

fn sibling_csv(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".csv");
    PathBuf::from(os)
}

fn table_csv(cfg: &RunConfig, table: &SpectrumTable) -> String {
    let mut csv = csv_header(cfg, &[]);
    csv.push_str("t,log_k_lambda,bound,t2_over_4,upper,note\n");
    for row in &table.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt(row.t),
            row.log_lambda.map(fmt).unwrap_or_default(),
            fmt(row.bound),
            fmt(row.reference),
            row.upper.map(fmt).unwrap_or_default(),
            row.note.clone().unwrap_or_default().replace(',', ";"),
        ));
    }
    csv
}

pub fn cmd_table(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<()> {
    let block = resolve_block(cfg)?;
    let t_values = cfg
        .t_list
        .clone()
        .unwrap_or_else(|| vec![-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0]);
    let strategy = match (&cfg.nu_numerator, cfg.mode) {
        (Some(_), _) => NuStrategy::Reference,
        (None, CertificateMode::PaperConstants) => NuStrategy::RefitPerT,
        (None, CertificateMode::Heuristic) => NuStrategy::RefitPerT,
    };
    let table = spectrum_table(
        &block,
        cfg.k,
        &t_values,
        cfg.n_grid.unwrap_or(1000),
        cfg.m_angles.unwrap_or(400),
        strategy,
        cfg.bound_points.min(600),
        None,
    )?;
    write_output(out, &table_csv(cfg, &table))
}

fn sweep_csv(cfg: &RunConfig, res: &SweepResult) -> String {
    let mut csv = csv_header(cfg, &[]);
    // wall_ms deliberately left out: artifacts are byte-deterministic
    csv.push_str("k,l,s,t,log_k_lambda,n_grid,m_angles,r_max,note\n");
    for c in &res.cells {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c.k,
            fmt(c.l),
            fmt(c.s),
            fmt(c.t),
            c.log_lambda.map(fmt).unwrap_or_default(),
            c.n_grid,
            c.m_angles,
            c.r_max.map(fmt).unwrap_or_default(),
            c.note.clone().unwrap_or_default().replace(',', ";"),
        ));
    }
    csv
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<()> {
    let k_values = cfg.k_list.clone().unwrap_or_else(|| (11..=15).collect());
    let l_values = cfg
        .l_list
        .clone()
        .unwrap_or_else(|| vec![50.0, 60.0, 70.0, 73.0, 80.0, 90.0]);
    let res = sweep(
        &k_values,
        &l_values,
        cfg.s,
        cfg.t,
        cfg.n_grid.unwrap_or(300),
        cfg.m_angles.unwrap_or(200),
    )?;
    write_output(out, &sweep_csv(cfg, &res))
}

fn mc_csv(cfg: &RunConfig, est: &McEstimate) -> String {
    let mut csv = csv_header(
        cfg,
        &[
            ("slope", fmt(est.slope)),
            ("generations", est.generations.to_string()),
            ("rejected", est.rejected.to_string()),
            ("rejection_warning", est.rejection_warning.to_string()),
        ],
    );
    csv.push_str("r,mean,std_error\n");
    for ((&r, &m), &se) in est.radii.iter().zip(&est.means).zip(&est.std_errors) {
        csv.push_str(&format!("{},{},{}\n", fmt(r), fmt(m), fmt(se)));
    }
    csv
}

/// Default Monte Carlo radii: r − 1 log-spaced over [5e−5, 2e−2].
pub fn default_mc_radii() -> Vec<f64> {
    let (lo, hi, n) = (5e-5_f64, 2e-2_f64, 10);
    (0..n)
        .map(|i| 1.0 + lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

pub fn cmd_mc(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<()> {
    let block = resolve_block(cfg)?;
    let radii = cfg.radii.clone().unwrap_or_else(default_mc_radii);
    let generations = cfg
        .generations
        .unwrap_or_else(|| default_generations(cfg.k, &radii));
    let est = mc_integral_means(
        &block,
        cfg.k,
        cfg.t,
        generations,
        &radii,
        cfg.samples,
        cfg.seed,
    )?;
    write_output(out, &mc_csv(cfg, &est))
}

// ---------------------------------------------------------------------------
// dispatch and exit codes

/// 0 success; 2 validation; 3 convergence/resolution; 4 vacuous bound; 5 I/O.
pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_)
        | Error::Domain(_)
        | Error::Degenerate(_)
        | Error::UnsupportedParameter(_)
        | Error::NoFixedPoint { .. }
        | Error::FitRejected { .. } => 2,
        Error::InsufficientResolution { .. } | Error::NonConvergence { .. } => 3,
        Error::BoundVacuous { .. } => 4,
        Error::Io(_) | Error::Json(_) => 5,
    }
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        // ignore the error if a pool is already installed (tests, repeat calls)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let cfg = effective_config(cli)?;
    match &cli.command {
        Command::Render { .. } => cmd_render(&cfg, &cli.out),
        Command::Eigen => cmd_eigen(&cfg, &cli.out),
        Command::Bound { .. } => cmd_bound(&cfg, &cli.out),
        Command::Table { .. } => cmd_table(&cfg, &cli.out),
        Command::Sweep { .. } => cmd_sweep(&cfg, &cli.out),
        Command::Mc { .. } => cmd_mc(&cfg, &cli.out),
    }
}

/// Entry point used by the binary: parse, dispatch, map errors to exit codes.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with success exits
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
