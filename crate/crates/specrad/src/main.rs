//! Command-line front end: config ingestion, method dispatch and
//! JSON/CSV reporting.
//!
//! Exit codes: 0 success, 1 config or usage error, 2 reconciliation
//! failure (two certified methods produced disjoint brackets).

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use specrad::cocycle::spectral_exponent;
use specrad::config::{Method, OutputFormat, RunConfig};
use specrad::ergopt::{
    commutative_vp, cycle_enumeration_oracle, karp_max_mean_cycle, classical_shift_radius,
    periodic_orbit_vp, WordGraph,
};
use specrad::error::SpecradError;
use specrad::estimate::{reconcile, ExponentEstimate};
use specrad::lift::{lift_to_bd, weighted_endo_radius_inner};
use specrad::linalg::MatrixNorm;
use specrad::projext::{extension_vp, mobius_spectral_radius};
use specrad::report::Report;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "specrad", version, about = "Spectral radii of weighted composition operators and spectral exponents of matrix cocycles")]
struct Cli {
    /// Number of worker threads for internal parallelism
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Path to a JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Override the configured method list (comma separated: gelfand,karp,periodic,extension)
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Override n_max
    #[arg(long)]
    n_max: Option<usize>,
    /// Override the maximum cycle length for periodic-orbit searches
    #[arg(long)]
    max_cycle_len: Option<usize>,
    /// Override the number of fiber samples for the extension principle
    #[arg(long)]
    fiber_samples: Option<usize>,
    /// Override the seed for sampled methods
    #[arg(long)]
    seed: Option<u64>,
    /// Override the matrix norm
    #[arg(long)]
    norm: Option<String>,
    /// Emit JSON (default)
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV
    #[arg(long)]
    csv: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral exponent of a weight over a partial dynamical system
    Exponent(CommonOpts),
    /// Cross-check max-mean-cycle against the brute-force cycle oracle
    Oracle(CommonOpts),
    /// Spectral radius of a 2x2 matrix via its Moebius transformation
    Mobius {
        /// Matrix "a,b;c,d"; entries are "re" or "re:im"
        #[arg(long)]
        matrix: String,
    },
    /// Classical weighted shift from a sequence config
    Shift(CommonOpts),
    /// Inner-field weighted endomorphism via both reduction routes
    Lift(CommonOpts),
    /// Validate a configuration file
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 1 {
        // a failure here only means a pool already exists; harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SpecradError::ReconcileFailure(_, _) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn log_enabled() -> bool {
    matches!(
        std::env::var("SPECRAD_LOG").as_deref(),
        Ok("debug") | Ok("trace")
    )
}

fn load_config(opts: &CommonOpts) -> Result<RunConfig, SpecradError> {
    let mut cfg = RunConfig::from_file(&opts.config)?;
    if !opts.method.is_empty() {
        cfg.methods = opts
            .method
            .iter()
            .map(|m| parse_method(m))
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(n) = opts.n_max {
        cfg.n_max = n;
    }
    if let Some(l) = opts.max_cycle_len {
        cfg.max_cycle_len = Some(l);
    }
    if let Some(f) = opts.fiber_samples {
        cfg.fiber_samples = f;
    }
    if let Some(s) = opts.seed {
        cfg.seed = Some(s);
    }
    if let Some(n) = &opts.norm {
        cfg.norm = parse_norm(n)?;
    }
    if opts.csv {
        cfg.output = OutputFormat::Csv;
    } else if opts.json {
        cfg.output = OutputFormat::Json;
    }
    cfg.validate()?;
    if log_enabled() {
        eprintln!(
            "specrad: resolved config: {}",
            serde_json::to_string(&cfg).expect("config serializes")
        );
    }
    Ok(cfg)
}

fn parse_method(name: &str) -> Result<Method, SpecradError> {
    match name {
        "gelfand" => Ok(Method::Gelfand),
        "karp" => Ok(Method::Karp),
        "periodic" => Ok(Method::Periodic),
        "extension" => Ok(Method::Extension),
        other => Err(SpecradError::InvalidArgument(format!(
            "unknown method `{other}` (expected gelfand|karp|periodic|extension)"
        ))),
    }
}

fn parse_norm(name: &str) -> Result<MatrixNorm, SpecradError> {
    match name {
        "l1" => Ok(MatrixNorm::L1),
        "l2" => Ok(MatrixNorm::L2),
        "linf" => Ok(MatrixNorm::LInf),
        other => Err(SpecradError::InvalidArgument(format!(
            "unknown norm `{other}` (expected l1|l2|linf)"
        ))),
    }
}

fn emit(cfg: &RunConfig, report: &Report) {
    match cfg.output {
        OutputFormat::Json => println!("{}", report.to_json()),
        OutputFormat::Csv => print!("{}", report.to_csv()),
    }
}

fn run(cmd: Command) -> Result<(), SpecradError> {
    match cmd {
        Command::Exponent(opts) => {
            let cfg = load_config(&opts)?;
            let sys = cfg.build_system()?.ok_or_else(|| SpecradError::Config {
                path: "system".into(),
                message: "the exponent subcommand needs a system".into(),
            })?;
            let mut w = cfg.build_weight(&sys)?;
            if let Some(field) = cfg.build_field(&sys, w.dim)? {
                w = specrad::lift::effective_weight(&w, &field)?;
            }
            let max_len = cfg.max_cycle_len.unwrap_or_else(|| sys.state_count().min(10));
            let mut estimates: Vec<ExponentEstimate> = Vec::new();
            for m in &cfg.methods {
                let est = match m {
                    Method::Gelfand => {
                        let mut e =
                            spectral_exponent(&w, &sys, cfg.n_max, cfg.norm, cfg.max_cycle_len)?;
                        e.method = "gelfand".into();
                        e
                    }
                    Method::Karp => commutative_vp(&w, &sys, cfg.n_max)?,
                    Method::Periodic => periodic_orbit_vp(&w, &sys, cfg.n_max, max_len, cfg.norm)?,
                    Method::Extension => extension_vp(
                        &w,
                        &sys,
                        cfg.n_max,
                        cfg.fiber_samples,
                        cfg.seed.expect("validated"),
                        cfg.norm,
                    )?,
                };
                estimates.push(est);
            }
            let reconciled = reconcile(&estimates)?;
            let report = Report::new(estimates, Some(reconciled));
            emit(&cfg, &report);
            Ok(())
        }
        Command::Oracle(opts) => {
            let cfg = load_config(&opts)?;
            let sys = cfg.build_system()?.ok_or_else(|| SpecradError::Config {
                path: "system".into(),
                message: "the oracle subcommand needs a system".into(),
            })?;
            let w = cfg.build_weight(&sys)?;
            let g = WordGraph::from_system(&sys, &w)?;
            let (karp, witness) = karp_max_mean_cycle(&g);
            let brute = cycle_enumeration_oracle(&g, g.node_count);
            if (karp - brute).abs() > 1e-12
                && !(karp == f64::NEG_INFINITY && brute == f64::NEG_INFINITY)
            {
                return Err(SpecradError::ReconcileFailure(
                    "karp".into(),
                    "cycle-oracle".into(),
                ));
            }
            let mut karp_est = ExponentEstimate::new(karp, karp, "karp", g.node_count);
            if let Some(cycle) = witness {
                karp_est =
                    karp_est.with_witness(specrad::estimate::Witness::Orbit { states: cycle });
            }
            let oracle_est = ExponentEstimate::new(brute, brute, "cycle-oracle", g.node_count);
            let report = Report::new(vec![karp_est, oracle_est], None);
            emit(&cfg, &report);
            Ok(())
        }
        Command::Mobius { matrix } => {
            let m = parse_mobius_matrix(&matrix)?;
            let rep = mobius_spectral_radius(m[0], m[1], m[2], m[3])?;
            println!(
                "{}",
                serde_json::to_string_pretty(&rep).expect("report serializes")
            );
            Ok(())
        }
        Command::Shift(opts) => {
            let cfg = load_config(&opts)?;
            let spec = cfg.build_shift_spec()?;
            let est = classical_shift_radius(&spec, cfg.n_max)?;
            let report = Report::new(vec![est], None);
            emit(&cfg, &report);
            Ok(())
        }
        Command::Lift(opts) => {
            let cfg = load_config(&opts)?;
            let sys = cfg.build_system()?.ok_or_else(|| SpecradError::Config {
                path: "system".into(),
                message: "the lift subcommand needs a system".into(),
            })?;
            let a = cfg.build_weight(&sys)?;
            let field = cfg.build_field(&sys, a.dim)?.ok_or_else(|| SpecradError::Config {
                path: "field".into(),
                message: "the lift subcommand needs an inner field".into(),
            })?;
            let max_len = cfg.max_cycle_len.unwrap_or_else(|| sys.state_count().min(10));
            let inner =
                weighted_endo_radius_inner(&a, &field, &sys, cfg.n_max, max_len, cfg.norm)?;
            let lifted = lift_to_bd(&a, &field, &sys)?;
            let mut via_lift =
                spectral_exponent(&lifted, &sys, cfg.n_max, cfg.norm, cfg.max_cycle_len)?;
            via_lift.method = "lifted".into();
            let reconciled = reconcile(&[inner.clone(), via_lift.clone()])?;
            let report = Report::new(vec![inner, via_lift], Some(reconciled));
            emit(&cfg, &report);
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = RunConfig::from_file(&config)?;
            cfg.validate()?;
            println!("ok");
            Ok(())
        }
    }
}

/// "a,b;c,d" with entries "re" or "re:im".
fn parse_mobius_matrix(text: &str) -> Result<[Complex64; 4], SpecradError> {
    let rows: Vec<&str> = text.split(';').collect();
    if rows.len() != 2 {
        return Err(SpecradError::InvalidArgument(
            "matrix must have two rows separated by `;`".into(),
        ));
    }
    let mut out = [Complex64::ZERO; 4];
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 2 {
            return Err(SpecradError::InvalidArgument(format!(
                "row {} must have two entries separated by `,`",
                i + 1
            )));
        }
        for (j, cell) in cells.iter().enumerate() {
            out[2 * i + j] = parse_complex_cell(cell.trim())?;
        }
    }
    Ok(out)
}

fn parse_complex_cell(cell: &str) -> Result<Complex64, SpecradError> {
    let bad = || SpecradError::InvalidArgument(format!("cannot parse complex entry `{cell}`"));
    if let Some((re, im)) = cell.split_once(':') {
        Ok(Complex64::new(
            re.trim().parse().map_err(|_| bad())?,
            im.trim().parse().map_err(|_| bad())?,
        ))
    } else {
        Ok(Complex64::from(cell.parse::<f64>().map_err(|_| bad())?))
    }
}
