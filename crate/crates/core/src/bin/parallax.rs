use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use parallax_core::credence::dominance;
use parallax_core::experiments::{
    log_spaced_desc, run_diagnostics_summary, run_parallax_sweep, run_tail_sweep, run_risk_sweep, Growth,
    SweepConfig,
};
use parallax_core::inference::{derive_seed, mcmc_sample, ppc_replicates, Engine, McmcConfig};
use parallax_core::io::{
    batch_estimate, estimate_measurement, fmt_f64, ingest_catalog, mas_to_arcsec, write_diagnostics_rows,
    write_estimates, write_risk_rows, write_sweep, write_tail_rows, ColumnMap, RunConfig, DEFAULT_CATALOG_SCALE,
};
use parallax_core::model::{melo_distance, Measurement};
use parallax_core::{Error, PriorSpec};

#[derive(Parser)]
#[command(name = "parallax", version, about = "Distance estimation from noisy parallaxes under heavy-tailed priors")]
struct Cli {
    /// Flat key=value configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Exit with status 4 when any row, point or chain reports a numerical problem.
    #[arg(long, global = true)]
    strict: bool,
    /// Output file (stdout when omitted).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct PriorArgs {
    /// Prior family, e.g. half_cauchy, gamma, weibull.
    #[arg(long)]
    prior: Option<String>,
    /// Distance scale L applied to the family's scale slot.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    shape: Option<f64>,
    /// Extra family parameter, e.g. --param location=0.5 (repeatable).
    #[arg(long = "param", value_parser = parse_key_val)]
    params: Vec<(String, f64)>,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    #[arg(long, value_parser = parse_engine)]
    engine: Option<Engine>,
    #[arg(long)]
    seed: Option<u64>,
    /// Total draws per chain including warmup.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
}

#[derive(Args, Clone)]
struct MeasurementArgs {
    /// Observed parallax (mas unless --arcsec).
    #[arg(long, allow_hyphen_values = true)]
    parallax: f64,
    /// Parallax standard error (mas unless --arcsec).
    #[arg(long)]
    parallax_error: f64,
    /// Read the measurement in arcseconds instead of milliarcseconds.
    #[arg(long)]
    arcsec: bool,
}

#[derive(Args, Clone, Default)]
struct SweepArgs {
    #[arg(long = "j")]
    j: Option<usize>,
    #[arg(long)]
    sigma_omega: Option<f64>,
    #[arg(long)]
    omega_min: Option<f64>,
    #[arg(long)]
    omega_max: Option<f64>,
    /// Comma-separated prior names (default: the six-prior simulation catalog).
    #[arg(long, value_delimiter = ',')]
    priors: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Posterior distance summary for one measurement.
    Estimate {
        #[command(flatten)]
        measurement: MeasurementArgs,
        #[command(flatten)]
        prior: PriorArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long, default_value = "star")]
        source_id: String,
    },
    /// Estimates for every row of a catalog CSV.
    Batch {
        catalog: PathBuf,
        #[command(flatten)]
        prior: PriorArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "source_id")]
        id_column: String,
        #[arg(long, default_value = "parallax")]
        parallax_column: String,
        #[arg(long, default_value = "parallax_error")]
        error_column: String,
        /// Write rejected rows (line, reason) to this CSV.
        #[arg(long)]
        rejects: Option<PathBuf>,
    },
    /// Squared-error sweep over true distances for a set of priors.
    Simulate {
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Draw the observed parallax with noise instead of using 1/r_true.
        #[arg(long)]
        noisy: bool,
    },
    /// Posterior tail probability P(r > c(omega)) as omega shrinks.
    TailSweep {
        #[command(flatten)]
        prior: PriorArgs,
        #[arg(long, default_value = "inverse-square", value_parser = parse_growth)]
        growth: Growth,
        #[arg(long, default_value_t = 1.0)]
        omega_hi: f64,
        #[arg(long, default_value_t = 0.01)]
        omega_lo: f64,
        #[arg(long, default_value_t = 25)]
        count: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma_omega: f64,
    },
    /// Posterior risk of the distance estimate at several reference distances.
    RiskSweep {
        #[command(flatten)]
        prior: PriorArgs,
        #[arg(long, value_delimiter = ',', default_value = "2,5,10")]
        r0: Vec<f64>,
        /// Likelihood precision A = 1/(2 sigma_omega^2).
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
    },
    /// Mean split-R-hat and ESS per prior over an MCMC sweep.
    Diagnose {
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Replicated parallaxes from the posterior predictive distribution.
    Ppc {
        #[command(flatten)]
        measurement: MeasurementArgs,
        #[command(flatten)]
        prior: PriorArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
    },
    /// Tail dominance relation between two priors.
    Dominance { first: String, second: String },
}

fn parse_key_val(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v = v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_growth(s: &str) -> Result<Growth, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure carrying the process exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::Domain { .. }
            | Error::ImproperPosterior(_)
            | Error::NotApplicable(_)
            | Error::InvalidGep(_) => 2,
            Error::EmptyCatalog | Error::Io(_) => 3,
            _ => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 3, message: e.to_string() }
    }
}

fn soft_failure(strict: bool, what: String) -> Result<(), Failure> {
    log::warn!("{what}");
    if strict {
        Err(Failure { code: 4, message: what })
    } else {
        Ok(())
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure { code: 3, message: format!("{}: {e}", p.display()) })?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn overrides(prior: Option<&PriorArgs>, run: Option<&RunArgs>, sweep: Option<&SweepArgs>) -> RunConfig {
    let mut c = RunConfig::default();
    if let Some(p) = prior {
        c.prior_name = p.prior.clone();
        c.prior_scale = p.scale;
        c.prior_shape = p.shape;
    }
    if let Some(r) = run {
        c.engine = r.engine;
        c.seed = r.seed;
        c.mcmc_draws = r.draws;
        c.mcmc_warmup = r.warmup;
        c.mcmc_chains = r.chains;
    }
    if let Some(s) = sweep {
        c.sweep_j = s.j;
        c.sweep_sigma_omega = s.sigma_omega;
        c.sweep_omega_min = s.omega_min;
        c.sweep_omega_max = s.omega_max;
    }
    c
}

fn build_prior(cfg: &RunConfig, extra: &[(String, f64)], default_scale: Option<f64>) -> Result<PriorSpec, Failure> {
    let name = cfg.prior_name.as_deref().unwrap_or("half_cauchy");
    let mut params: BTreeMap<String, f64> = extra.iter().cloned().collect();
    if let Some(s) = cfg.prior_scale {
        params.insert("scale".into(), s);
    }
    if let Some(s) = cfg.prior_shape {
        params.insert("shape".into(), s);
    }
    Ok(PriorSpec::from_params(name, &params, default_scale)?)
}

fn require_seed(cfg: &RunConfig, why: &str) -> Result<u64, Failure> {
    cfg.seed.ok_or_else(|| Failure { code: 2, message: format!("{why} is randomized; pass --seed") })
}

fn measurement(args: &MeasurementArgs) -> Result<Measurement, Failure> {
    let (w, s) = if args.arcsec {
        (args.parallax, args.parallax_error)
    } else {
        (mas_to_arcsec(args.parallax), mas_to_arcsec(args.parallax_error))
    };
    Ok(Measurement::new(w, s)?)
}

fn sweep_config(cfg: &RunConfig, sweep: &SweepArgs, default_scale: Option<f64>) -> Result<SweepConfig, Failure> {
    let base = SweepConfig::default();
    let priors = if sweep.priors.is_empty() {
        base.priors.clone()
    } else {
        sweep
            .priors
            .iter()
            .map(|n| PriorSpec::from_params(n, &BTreeMap::new(), default_scale))
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(SweepConfig {
        j: cfg.sweep_j.unwrap_or(base.j),
        omega_min: cfg.sweep_omega_min.unwrap_or(base.omega_min),
        omega_max: cfg.sweep_omega_max.unwrap_or(base.omega_max),
        sigma_omega: cfg.sweep_sigma_omega.unwrap_or(base.sigma_omega),
        priors,
        engine: cfg.engine.unwrap_or(base.engine),
        mcmc: cfg.mcmc(base.mcmc),
        seed: cfg.seed.unwrap_or(base.seed),
        ..base
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file_cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Estimate { measurement: ma, prior, run, format, source_id } => {
            let cfg = file_cfg.merge(overrides(Some(prior), Some(run), None));
            let engine = cfg.engine.unwrap_or(Engine::Quadrature);
            if engine == Engine::Mcmc {
                require_seed(&cfg, "the mcmc engine")?;
            }
            let default_scale = if ma.arcsec { None } else { Some(DEFAULT_CATALOG_SCALE) };
            let p = build_prior(&cfg, &prior.params, default_scale)?;
            let m = measurement(ma)?;
            let rec = estimate_measurement(source_id, &m, &p, engine, &cfg.mcmc(McmcConfig::default()))?;
            let mut w = output(out)?;
            match format {
                Format::Json => {
                    let mut v = serde_json::to_value(&rec).map_err(|e| Failure { code: 4, message: e.to_string() })?;
                    v["melo_distance_pc"] = serde_json::json!(melo_distance(&m));
                    v["prior"] = serde_json::to_value(p).map_err(|e| Failure { code: 4, message: e.to_string() })?;
                    serde_json::to_writer_pretty(&mut w, &v).map_err(|e| Failure { code: 3, message: e.to_string() })?;
                    writeln!(w)?;
                }
                Format::Csv => write_estimates(&mut w, std::slice::from_ref(&rec))?,
            }
            w.flush()?;
            if rec.flags.contains("unstable") {
                soft_failure(cli.strict, format!("{}: {}", rec.source_id, rec.flags))?;
            }
        }
        Command::Batch { catalog, prior, run, id_column, parallax_column, error_column, rejects } => {
            let cfg = file_cfg.merge(overrides(Some(prior), Some(run), None));
            let engine = cfg.engine.unwrap_or(Engine::Quadrature);
            if engine == Engine::Mcmc {
                require_seed(&cfg, "the mcmc engine")?;
            }
            let p = build_prior(&cfg, &prior.params, Some(DEFAULT_CATALOG_SCALE))?;
            if !p.is_proper() {
                return Err(Error::ImproperPosterior(p.name()).into());
            }
            let columns = ColumnMap {
                source_id: id_column.clone(),
                parallax: parallax_column.clone(),
                parallax_error: error_column.clone(),
            };
            let cat = ingest_catalog(catalog, &columns)?;
            for r in &cat.rejects {
                log::warn!("line {}: {}", r.line, r.reason);
            }
            if let Some(path) = rejects {
                let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
                w.write_record(["line", "reason"]).map_err(Error::from)?;
                for r in &cat.rejects {
                    w.write_record([r.line.to_string(), r.reason.clone()]).map_err(Error::from)?;
                }
                w.flush()?;
            }
            if cat.rows.is_empty() {
                return Err(Error::EmptyCatalog.into());
            }
            let recs = batch_estimate(&cat.rows, &p, engine, &cfg.mcmc(McmcConfig::default()));
            let mut w = output(out)?;
            write_estimates(&mut w, &recs)?;
            w.flush()?;
            let bad = recs.iter().filter(|r| r.flags.contains("error") || r.flags.contains("unstable")).count();
            if bad > 0 {
                soft_failure(cli.strict, format!("{bad} of {} rows flagged", recs.len()))?;
            }
        }
        Command::Simulate { sweep, run, noisy } => {
            let cfg = file_cfg.merge(overrides(None, Some(run), Some(sweep)));
            if *noisy || cfg.engine == Some(Engine::Mcmc) {
                require_seed(&cfg, "this sweep")?;
            }
            let sc = SweepConfig { noisy: *noisy, ..sweep_config(&cfg, sweep, None)? };
            let recs = run_parallax_sweep(&sc)?;
            let mut w = output(out)?;
            write_sweep(&mut w, &recs)?;
            w.flush()?;
            let bad = recs.iter().filter(|r| r.error.is_some()).count();
            if bad > 0 {
                soft_failure(cli.strict, format!("{bad} of {} sweep points failed", recs.len()))?;
            }
        }
        Command::TailSweep { prior, growth, omega_hi, omega_lo, count, sigma_omega } => {
            let cfg = file_cfg.merge(overrides(Some(prior), None, None));
            let p = build_prior(&cfg, &prior.params, None)?;
            let rows = run_tail_sweep(&p, *growth, &log_spaced_desc(*omega_hi, *omega_lo, *count), *sigma_omega)?;
            let mut w = output(out)?;
            write_tail_rows(&mut w, p.name(), &rows)?;
            w.flush()?;
        }
        Command::RiskSweep { prior, r0, a, omega } => {
            let cfg = file_cfg.merge(overrides(Some(prior), None, None));
            let p = build_prior(&cfg, &prior.params, None)?;
            let rows = run_risk_sweep(&p, r0, *a, *omega)?;
            let mut w = output(out)?;
            write_risk_rows(&mut w, p.name(), &rows)?;
            w.flush()?;
        }
        Command::Diagnose { sweep, run } => {
            let mut cfg = file_cfg.merge(overrides(None, Some(run), Some(sweep)));
            require_seed(&cfg, "diagnose")?;
            cfg.mcmc_chains = cfg.mcmc_chains.or(Some(4));
            let sc = sweep_config(&cfg, sweep, None)?;
            let rows = run_diagnostics_summary(&sc)?;
            let mut w = output(out)?;
            write_diagnostics_rows(&mut w, &rows)?;
            w.flush()?;
            let excluded: usize = rows.iter().map(|r| r.excluded).sum();
            if excluded > 0 {
                soft_failure(cli.strict, format!("{excluded} sweep points excluded from diagnostics"))?;
            }
        }
        Command::Ppc { measurement: ma, prior, run, replicates } => {
            let cfg = file_cfg.merge(overrides(Some(prior), Some(run), None));
            let seed = require_seed(&cfg, "ppc")?;
            let default_scale = if ma.arcsec { None } else { Some(DEFAULT_CATALOG_SCALE) };
            let p = build_prior(&cfg, &prior.params, default_scale)?;
            let m = measurement(ma)?;
            let cs = mcmc_sample(&p, &m, &cfg.mcmc(McmcConfig::default()))?;
            if cs.unstable() {
                soft_failure(cli.strict, format!("sampler unstable: {} divergent transitions", cs.divergent()))?;
            }
            let reps = ppc_replicates(&m, &cs, *replicates, derive_seed(seed, u64::MAX));
            let below = reps.iter().filter(|&&v| v <= m.omega()).count();
            log::info!("posterior predictive P(omega_rep <= omega) = {}", below as f64 / reps.len().max(1) as f64);
            let mut w = output(out)?;
            writeln!(w, "replicate,omega_rep_arcsec")?;
            for (i, v) in reps.iter().enumerate() {
                writeln!(w, "{i},{}", fmt_f64(*v))?;
            }
            w.flush()?;
        }
        Command::Dominance { first, second } => {
            let a = PriorSpec::from_params(first, &BTreeMap::new(), None)?;
            let b = PriorSpec::from_params(second, &BTreeMap::new(), None)?;
            let rel = dominance(&a.tail_metadata().pcred, &b.tail_metadata().pcred);
            let mut w = output(out)?;
            writeln!(w, "{rel}")?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
