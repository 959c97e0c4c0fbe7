//! Catalog ingestion, batch estimation, CSV/JSON output and the flat
//! `key=value` configuration file.
//!
//! Floats are written with 17 significant digits so that a CSV round trip
//! reproduces every value exactly.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{DiagnosticsRow, RiskRow, SweepRecord, TailRow};
use crate::inference::{
    derive_seed, mcmc_sample, quadrature_posterior, sample_quantile, Engine, GridConfig, McmcConfig, RiskOutcome,
};
use crate::model::{mle_distance, Measurement};
use crate::priors::PriorSpec;

/// Scale `L` (parsecs) applied to catalog priors that do not set one.
pub const DEFAULT_CATALOG_SCALE: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogRow {
    pub source_id: String,
    pub parallax_mas: f64,
    pub parallax_error_mas: f64,
}

/// Names of the catalog columns holding each field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub source_id: String,
    pub parallax: String,
    pub parallax_error: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            source_id: "source_id".into(),
            parallax: "parallax".into(),
            parallax_error: "parallax_error".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based line number in the input file.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub rows: Vec<CatalogRow>,
    pub rejects: Vec<Reject>,
}

pub fn mas_to_arcsec(mas: f64) -> f64 {
    mas / 1000.0
}

fn parse_row(rec: &csv::StringRecord, idx: (usize, usize, usize)) -> std::result::Result<CatalogRow, String> {
    let field = |i: usize| rec.get(i).map(str::trim).ok_or_else(|| format!("missing field {}", i + 1));
    let num = |i: usize, what: &str| -> std::result::Result<f64, String> {
        let s = field(i)?;
        s.parse::<f64>().map_err(|_| format!("{what} `{s}` is not a number"))
    };
    let source_id = field(idx.0)?.to_string();
    if source_id.is_empty() {
        return Err("empty source_id".into());
    }
    let parallax_mas = num(idx.1, "parallax")?;
    if !parallax_mas.is_finite() {
        return Err(format!("parallax {parallax_mas} is not finite"));
    }
    let parallax_error_mas = num(idx.2, "parallax_error")?;
    if !(parallax_error_mas > 0.0 && parallax_error_mas.is_finite()) {
        return Err(format!("parallax_error {parallax_error_mas} must be positive and finite"));
    }
    Ok(CatalogRow { source_id, parallax_mas, parallax_error_mas })
}

/// Reads a CSV catalog with a header row; malformed rows are collected with
/// their line numbers instead of aborting.
pub fn read_catalog<R: Read>(input: R, columns: &ColumnMap) -> Result<Catalog> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Config(format!("catalog has no column `{name}`")))
    };
    let idx = (find(&columns.source_id)?, find(&columns.parallax)?, find(&columns.parallax_error)?);
    let mut cat = Catalog { rows: Vec::new(), rejects: Vec::new() };
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        match parse_row(&rec, idx) {
            Ok(row) => cat.rows.push(row),
            Err(reason) => cat.rejects.push(Reject { line, reason }),
        }
    }
    if cat.rows.is_empty() && cat.rejects.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    Ok(cat)
}

pub fn ingest_catalog(path: &Path, columns: &ColumnMap) -> Result<Catalog> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_catalog(file, columns)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub source_id: String,
    pub omega_arcsec: f64,
    pub sigma_omega_arcsec: f64,
    pub naive_distance_pc: Option<f64>,
    pub posterior_median_pc: Option<f64>,
    pub quantile_16_pc: Option<f64>,
    pub quantile_84_pc: Option<f64>,
    pub prior_name: String,
    pub engine: Engine,
    /// `;`-separated markers: `nonpositive_parallax`, `unstable`, `error: ...`.
    pub flags: String,
}

/// Estimate for one measurement in arcseconds. Unlike [`batch_estimate`],
/// posterior failures are returned as errors.
pub fn estimate_measurement(
    source_id: &str,
    m: &Measurement,
    prior: &PriorSpec,
    engine: Engine,
    mcmc: &McmcConfig,
) -> Result<EstimateRecord> {
    let mut flags = Vec::new();
    let [median, lo, hi] = match engine {
        Engine::Quadrature => {
            let g = quadrature_posterior(prior, m, &GridConfig::default())?;
            [g.quantile(0.5), g.quantile(0.16), g.quantile(0.84)]
        }
        Engine::Mcmc => {
            let cs = mcmc_sample(prior, m, mcmc)?;
            if cs.unstable() {
                flags.push("unstable");
            }
            let d = cs.distances();
            [sample_quantile(&d, 0.5), sample_quantile(&d, 0.16), sample_quantile(&d, 0.84)]
        }
    };
    let naive = mle_distance(m);
    if naive.is_none() {
        flags.insert(0, "nonpositive_parallax");
    }
    Ok(EstimateRecord {
        source_id: source_id.to_string(),
        omega_arcsec: m.omega(),
        sigma_omega_arcsec: m.sigma_omega(),
        naive_distance_pc: naive,
        posterior_median_pc: Some(median),
        quantile_16_pc: Some(lo),
        quantile_84_pc: Some(hi),
        prior_name: prior.name().to_string(),
        engine,
        flags: flags.join(";"),
    })
}

fn estimate_row(row: &CatalogRow, prior: &PriorSpec, engine: Engine, mcmc: &McmcConfig) -> EstimateRecord {
    let omega = mas_to_arcsec(row.parallax_mas);
    let sigma = mas_to_arcsec(row.parallax_error_mas);
    let m = match Measurement::new(omega, sigma) {
        Ok(m) => m,
        Err(e) => return failed_row(row, omega, sigma, None, prior, engine, e),
    };
    estimate_measurement(&row.source_id, &m, prior, engine, mcmc)
        .unwrap_or_else(|e| failed_row(row, omega, sigma, mle_distance(&m), prior, engine, e))
}

fn failed_row(
    row: &CatalogRow,
    omega: f64,
    sigma: f64,
    naive: Option<f64>,
    prior: &PriorSpec,
    engine: Engine,
    e: Error,
) -> EstimateRecord {
    let mut flags = Vec::new();
    if naive.is_none() {
        flags.push("nonpositive_parallax".to_string());
    }
    flags.push(format!("error: {e}"));
    EstimateRecord {
        source_id: row.source_id.clone(),
        omega_arcsec: omega,
        sigma_omega_arcsec: sigma,
        naive_distance_pc: naive,
        posterior_median_pc: None,
        quantile_16_pc: None,
        quantile_84_pc: None,
        prior_name: prior.name().to_string(),
        engine,
        flags: flags.join(";"),
    }
}

/// Distance estimates for every catalog row, in input order. Row failures
/// are flagged, never fatal. MCMC rows use seeds derived from `mcmc.seed`
/// and the row index.
pub fn batch_estimate(rows: &[CatalogRow], prior: &PriorSpec, engine: Engine, mcmc: &McmcConfig) -> Vec<EstimateRecord> {
    rows.par_iter()
        .enumerate()
        .map(|(i, row)| {
            let cfg = McmcConfig { seed: derive_seed(mcmc.seed, i as u64), ..*mcmc };
            estimate_row(row, prior, engine, &cfg)
        })
        .collect()
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Config(format!("{what}: `{s}` is not a number")))
}

fn parse_opt(s: &str, what: &str) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(s, what).map(Some)
    }
}

const ESTIMATE_HEADER: [&str; 10] = [
    "source_id",
    "omega_arcsec",
    "sigma_omega_arcsec",
    "naive_distance_pc",
    "posterior_median_pc",
    "quantile_16_pc",
    "quantile_84_pc",
    "prior_name",
    "engine",
    "flags",
];

pub fn write_estimates<W: Write>(out: W, records: &[EstimateRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(ESTIMATE_HEADER)?;
    for r in records {
        w.write_record([
            r.source_id.clone(),
            fmt_f64(r.omega_arcsec),
            fmt_f64(r.sigma_omega_arcsec),
            fmt_opt(r.naive_distance_pc),
            fmt_opt(r.posterior_median_pc),
            fmt_opt(r.quantile_16_pc),
            fmt_opt(r.quantile_84_pc),
            r.prior_name.clone(),
            r.engine.to_string(),
            r.flags.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_estimates<R: Read>(input: R) -> Result<Vec<EstimateRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(ESTIMATE_HEADER.iter().copied()) {
        return Err(Error::Config(format!("unexpected estimate header: {headers:?}")));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let f = |i: usize| rec.get(i).unwrap_or("");
            Ok(EstimateRecord {
                source_id: f(0).to_string(),
                omega_arcsec: parse_f64(f(1), "omega_arcsec")?,
                sigma_omega_arcsec: parse_f64(f(2), "sigma_omega_arcsec")?,
                naive_distance_pc: parse_opt(f(3), "naive_distance_pc")?,
                posterior_median_pc: parse_opt(f(4), "posterior_median_pc")?,
                quantile_16_pc: parse_opt(f(5), "quantile_16_pc")?,
                quantile_84_pc: parse_opt(f(6), "quantile_84_pc")?,
                prior_name: f(7).to_string(),
                engine: f(8).parse()?,
                flags: f(9).to_string(),
            })
        })
        .collect()
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// Long-format sweep table: one row per (design point, prior).
pub fn write_sweep<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["index", "omega", "omega_obs", "r_true", "f", "prior", "r_hat", "sq_err", "rhat", "ess", "error"])?;
    for r in records {
        w.write_record([
            r.index.to_string(),
            fmt_f64(r.omega),
            fmt_f64(r.omega_obs),
            fmt_f64(r.r_true),
            fmt_f64(r.f),
            r.prior.clone(),
            fmt_opt(r.r_hat),
            fmt_opt(r.sq_err),
            fmt_opt(r.rhat),
            fmt_opt(r.ess),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tail_rows<W: Write>(out: W, prior: &str, rows: &[TailRow]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["prior", "omega", "threshold", "tail_probability"])?;
    for r in rows {
        w.write_record([prior.to_string(), fmt_f64(r.omega), fmt_f64(r.threshold), fmt_f64(r.tail_probability)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_risk_rows<W: Write>(out: W, prior: &str, rows: &[RiskRow]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["prior", "r0", "risk", "status", "lower_bound"])?;
    for r in rows {
        let (value, status) = match &r.risk {
            RiskOutcome::Finite { value, .. } => (fmt_f64(*value), "finite"),
            RiskOutcome::Divergent { .. } => (String::new(), "divergent"),
        };
        w.write_record([prior.to_string(), fmt_f64(r.r0), value, status.to_string(), fmt_opt(r.lower_bound)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics_rows<W: Write>(out: W, rows: &[DiagnosticsRow]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["prior", "mean_ess", "mean_rhat", "points", "excluded"])?;
    for r in rows {
        w.write_record([
            r.prior.clone(),
            fmt_f64(r.mean_ess),
            fmt_f64(r.mean_rhat),
            r.points.to_string(),
            r.excluded.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Settings read from a `key=value` file or given on the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub prior_name: Option<String>,
    pub prior_scale: Option<f64>,
    pub prior_shape: Option<f64>,
    pub engine: Option<Engine>,
    pub seed: Option<u64>,
    pub mcmc_draws: Option<usize>,
    pub mcmc_warmup: Option<usize>,
    pub mcmc_chains: Option<usize>,
    pub sweep_j: Option<usize>,
    pub sweep_sigma_omega: Option<f64>,
    pub sweep_omega_min: Option<f64>,
    pub sweep_omega_max: Option<f64>,
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str, line: usize) -> Result<T> {
    v.parse::<T>().map_err(|_| Error::Config(format!("line {line}: bad value `{v}` for `{key}`")))
}

impl RunConfig {
    /// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected key=value, got `{content}`")))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "prior.name" => c.prior_name = Some(v.to_string()),
                "prior.scale" => c.prior_scale = Some(parse_value(k, v, line)?),
                "prior.shape" => c.prior_shape = Some(parse_value(k, v, line)?),
                "engine" => c.engine = Some(v.parse().map_err(|e: Error| Error::Config(format!("line {line}: {e}")))?),
                "seed" => c.seed = Some(parse_value(k, v, line)?),
                "mcmc.draws" => c.mcmc_draws = Some(parse_value(k, v, line)?),
                "mcmc.warmup" => c.mcmc_warmup = Some(parse_value(k, v, line)?),
                "mcmc.chains" => c.mcmc_chains = Some(parse_value(k, v, line)?),
                "sweep.J" => c.sweep_j = Some(parse_value(k, v, line)?),
                "sweep.sigma_omega" => c.sweep_sigma_omega = Some(parse_value(k, v, line)?),
                "sweep.omega_min" => c.sweep_omega_min = Some(parse_value(k, v, line)?),
                "sweep.omega_max" => c.sweep_omega_max = Some(parse_value(k, v, line)?),
                other => return Err(Error::Config(format!("line {line}: unknown key `{other}`"))),
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Values from `overrides` win where set.
    pub fn merge(self, overrides: RunConfig) -> RunConfig {
        RunConfig {
            prior_name: overrides.prior_name.or(self.prior_name),
            prior_scale: overrides.prior_scale.or(self.prior_scale),
            prior_shape: overrides.prior_shape.or(self.prior_shape),
            engine: overrides.engine.or(self.engine),
            seed: overrides.seed.or(self.seed),
            mcmc_draws: overrides.mcmc_draws.or(self.mcmc_draws),
            mcmc_warmup: overrides.mcmc_warmup.or(self.mcmc_warmup),
            mcmc_chains: overrides.mcmc_chains.or(self.mcmc_chains),
            sweep_j: overrides.sweep_j.or(self.sweep_j),
            sweep_sigma_omega: overrides.sweep_sigma_omega.or(self.sweep_sigma_omega),
            sweep_omega_min: overrides.sweep_omega_min.or(self.sweep_omega_min),
            sweep_omega_max: overrides.sweep_omega_max.or(self.sweep_omega_max),
        }
    }

    /// Prior from `prior.name`, `prior.scale` and `prior.shape`; `default_scale`
    /// applies when no scale is given.
    pub fn prior(&self, default_name: &str, default_scale: Option<f64>) -> Result<PriorSpec> {
        let name = self.prior_name.as_deref().unwrap_or(default_name);
        let mut params = BTreeMap::new();
        if let Some(s) = self.prior_scale {
            params.insert("scale".to_string(), s);
        }
        if let Some(s) = self.prior_shape {
            params.insert("shape".to_string(), s);
        }
        PriorSpec::from_params(name, &params, default_scale)
    }

    pub fn mcmc(&self, base: McmcConfig) -> McmcConfig {
        McmcConfig {
            n_draws: self.mcmc_draws.unwrap_or(base.n_draws),
            n_warmup: self.mcmc_warmup.unwrap_or(base.n_warmup),
            n_chains: self.mcmc_chains.unwrap_or(base.n_chains),
            seed: self.seed.unwrap_or(base.seed),
            ..base
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog(text: &str) -> Result<Catalog> {
        read_catalog(text.as_bytes(), &ColumnMap::default())
    }

    #[test]
    fn accepts_and_rejects_rows() {
        let cat = catalog("source_id,parallax,parallax_error\ns1,2.0,0.3\ns2,1.0,0\ns3,-0.4,0.2\ns4,abc,0.1\n").unwrap();
        let ids: Vec<&str> = cat.rows.iter().map(|r| r.source_id.as_str()).collect();
        assert_eq!(ids, ["s1", "s3"]);
        assert_eq!(cat.rows[1].parallax_mas, -0.4);
        assert_eq!(cat.rejects.len(), 2);
        assert_eq!(cat.rejects[0].line, 3);
        assert!(cat.rejects[0].reason.contains("parallax_error"));
        assert_eq!(cat.rejects[1].line, 5);
    }

    #[test]
    fn missing_column_and_empty_file() {
        let err = catalog("source_id,plx,parallax_error\ns1,2,0.3\n").unwrap_err();
        assert_eq!(err, Error::Config("catalog has no column `parallax`".into()));
        assert_eq!(catalog("").unwrap_err(), Error::EmptyCatalog);
        assert_eq!(catalog("source_id,parallax,parallax_error\n").unwrap_err(), Error::EmptyCatalog);
    }

    #[test]
    fn custom_column_map() {
        let map = ColumnMap { source_id: "id".into(), parallax: "plx".into(), parallax_error: "e_plx".into() };
        let cat = read_catalog("e_plx,id,plx\n0.3,a,2.0\n".as_bytes(), &map).unwrap();
        assert_eq!(cat.rows[0], CatalogRow { source_id: "a".into(), parallax_mas: 2.0, parallax_error_mas: 0.3 });
    }

    #[test]
    fn conversion_is_exact_where_representable() {
        assert_eq!(mas_to_arcsec(2.0), 0.002);
        for &x in &[2.0, -0.4, 0.3, 1.2345, 17.0, 0.001, 123.456] {
            assert_eq!(mas_to_arcsec(x) * 1000.0, x, "{x}");
        }
        // whenever some double y satisfies y * 1000 == x, the conversion returns one
        let mut state = 0x1234_5678_9abc_def1u64;
        for _ in 0..100_000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = f64::from_bits(0x3f00_0000_0000_0000 + (state >> 12) % 0x0100_0000_0000_0000);
            let y = mas_to_arcsec(x);
            let any = [y.next_down(), y, y.next_up()].iter().any(|v| v * 1000.0 == x);
            assert!(!any || y * 1000.0 == x, "{x}");
        }
    }

    #[test]
    fn batch_example_rows() {
        let rows = vec![
            CatalogRow { source_id: "a".into(), parallax_mas: 2.0, parallax_error_mas: 0.3 },
            CatalogRow { source_id: "b".into(), parallax_mas: -0.4, parallax_error_mas: 0.3 },
        ];
        let prior = PriorSpec::from_params("half_cauchy", &BTreeMap::new(), Some(DEFAULT_CATALOG_SCALE)).unwrap();
        assert_eq!(prior, PriorSpec::HalfCauchy { scale: 1000.0 });
        let out = batch_estimate(&rows, &prior, Engine::Quadrature, &McmcConfig::default());
        assert_eq!(out[0].omega_arcsec, 0.002);
        assert!((out[0].naive_distance_pc.unwrap() - 500.0).abs() < 1e-9);
        assert!(out[1].naive_distance_pc.is_none());
        assert!(out[1].posterior_median_pc.is_some_and(|v| v.is_finite() && v > 0.0));
        assert_eq!(out[1].flags, "nonpositive_parallax");
        let lo = out[0].quantile_16_pc.unwrap();
        assert!(lo < out[0].posterior_median_pc.unwrap() && out[0].posterior_median_pc.unwrap() < out[0].quantile_84_pc.unwrap());
    }

    #[test]
    fn batch_flags_failures_without_aborting() {
        let rows = vec![CatalogRow { source_id: "a".into(), parallax_mas: 1.0, parallax_error_mas: 0.3 }];
        let out = batch_estimate(&rows, &PriorSpec::ImproperUniform, Engine::Quadrature, &McmcConfig::default());
        assert!(out[0].posterior_median_pc.is_none());
        assert!(out[0].flags.starts_with("error: "), "{}", out[0].flags);
    }

    #[test]
    fn estimate_csv_round_trip_is_exact() {
        let recs = vec![
            EstimateRecord {
                source_id: "x,1".into(),
                omega_arcsec: 0.1 + 0.2,
                sigma_omega_arcsec: 1.0 / 3.0,
                naive_distance_pc: None,
                posterior_median_pc: Some(std::f64::consts::PI * 1e5),
                quantile_16_pc: Some(f64::MIN_POSITIVE),
                quantile_84_pc: Some(1e300),
                prior_name: "half_cauchy".into(),
                engine: Engine::Mcmc,
                flags: "nonpositive_parallax;unstable".into(),
            },
            EstimateRecord {
                source_id: "y".into(),
                omega_arcsec: -4e-4,
                sigma_omega_arcsec: 3e-4,
                naive_distance_pc: Some(2500.0),
                posterior_median_pc: None,
                quantile_16_pc: None,
                quantile_84_pc: None,
                prior_name: "gamma".into(),
                engine: Engine::Quadrature,
                flags: String::new(),
            },
        ];
        let mut buf = Vec::new();
        write_estimates(&mut buf, &recs).unwrap();
        let back = read_estimates(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
        let mut again = Vec::new();
        write_estimates(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn config_parsing_and_override() {
        let c = RunConfig::parse("# comment\nprior.name = gamma\nprior.scale=1000\nseed=7\nsweep.J=50 # trailing\nengine=mcmc\n").unwrap();
        assert_eq!(c.prior_name.as_deref(), Some("gamma"));
        assert_eq!((c.prior_scale, c.seed, c.sweep_j, c.engine), (Some(1000.0), Some(7), Some(50), Some(Engine::Mcmc)));
        let merged = c.clone().merge(RunConfig { seed: Some(9), ..RunConfig::default() });
        assert_eq!((merged.seed, merged.sweep_j), (Some(9), Some(50)));
        assert_eq!(c.prior("half_cauchy", None).unwrap(), PriorSpec::Gamma { shape: 3.0, rate: 1e-3 });
        assert!(RunConfig::parse("bogus=1").is_err());
        assert!(RunConfig::parse("seed").is_err());
        assert!(RunConfig::parse("seed=abc").is_err());
    }
}
