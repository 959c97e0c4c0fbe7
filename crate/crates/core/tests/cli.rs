use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use parallax_core::io::read_estimates;

fn parallax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parallax")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_catalog(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("catalog.csv");
    fs::write(
        &path,
        "source_id,parallax,parallax_error\n\
         a,2.0,0.3\n\
         b,-0.4,0.5\n\
         c,1.1,0.0\n\
         d,0.9,abc\n\
         e,10.0,0.1\n",
    )
    .unwrap();
    path
}

#[test]
fn estimate_json_reports_median_and_naive_distance() {
    let o = parallax(&["estimate", "--parallax", "2.0", "--parallax-error", "0.3", "--prior", "half_cauchy"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["naive_distance_pc"].as_f64().unwrap() - 500.0).abs() < 1e-9);
    let median = v["posterior_median_pc"].as_f64().unwrap();
    assert!(median > 500.0 && median < 560.0, "{median}");
}

#[test]
fn negative_parallax_is_flagged_not_fatal() {
    let o = parallax(&["estimate", "--parallax", "-0.5", "--parallax-error", "0.3", "--format", "csv"]);
    assert!(o.status.success());
    let recs = read_estimates(stdout(&o).as_bytes()).unwrap();
    assert_eq!(recs.len(), 1);
    assert!(recs[0].naive_distance_pc.is_none());
    assert!(recs[0].flags.contains("nonpositive_parallax"));
    assert!(recs[0].posterior_median_pc.unwrap() > 0.0);
}

#[test]
fn exit_codes_follow_failure_class() {
    let improper =
        parallax(&["estimate", "--parallax", "2", "--parallax-error", "0.3", "--prior", "improper_uniform"]);
    assert_eq!(improper.status.code(), Some(2));
    let unknown = parallax(&["estimate", "--parallax", "2", "--parallax-error", "0.3", "--prior", "nope"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert_eq!(parallax(&["estimate", "--parallax", "2"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "source_id,parallax,parallax_error\n").unwrap();
    assert_eq!(parallax(&["batch", empty.to_str().unwrap()]).status.code(), Some(3));
    let missing = dir.path().join("missing.csv");
    assert_eq!(parallax(&["batch", missing.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn batch_writes_estimates_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = write_catalog(dir.path());
    let out = dir.path().join("est.csv");
    let rejects = dir.path().join("rejects.csv");
    let o = parallax(&[
        "batch",
        catalog.to_str().unwrap(),
        "--prior",
        "half_cauchy",
        "--out",
        out.to_str().unwrap(),
        "--rejects",
        rejects.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = read_estimates(fs::File::open(&out).unwrap()).unwrap();
    let ids: Vec<&str> = recs.iter().map(|r| r.source_id.as_str()).collect();
    assert_eq!(ids, ["a", "b", "e"]);
    assert!((recs[0].omega_arcsec - 0.002).abs() < 1e-18);
    assert!(recs[1].flags.contains("nonpositive_parallax"));
    let rej = fs::read_to_string(&rejects).unwrap();
    assert_eq!(rej.lines().count(), 3, "{rej}");
    assert!(!fs::read_to_string(&out).unwrap().contains('\r'));
}

#[test]
fn mcmc_batch_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = write_catalog(dir.path());
    let run = |seed: &str| {
        let o = parallax(&[
            "batch",
            catalog.to_str().unwrap(),
            "--engine",
            "mcmc",
            "--seed",
            seed,
            "--draws",
            "800",
            "--warmup",
            "300",
            "--chains",
            "2",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    let first = run("5");
    assert_eq!(first, run("5"));
    assert_ne!(first, run("6"));
}

#[test]
fn config_file_sets_defaults_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("run.cfg");
    fs::write(&good, "# demo\nprior.name = reciprocal_gaussian\nengine = quadrature\n").unwrap();
    let o = parallax(&[
        "--config",
        good.to_str().unwrap(),
        "estimate",
        "--parallax",
        "2.0",
        "--parallax-error",
        "0.3",
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_estimates(stdout(&o).as_bytes()).unwrap()[0].prior_name, "reciprocal_gaussian");

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "prior.colour = blue\n").unwrap();
    let o = parallax(&["--config", bad.to_str().unwrap(), "estimate", "--parallax", "2", "--parallax-error", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tail_sweep_and_dominance_outputs() {
    let o = parallax(&["tail-sweep", "--prior", "half_cauchy", "--count", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6, "{text}");

    let o = parallax(&["dominance", "gamma", "half_cauchy"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "SECOND_DOMINATES");
}

#[test]
fn risk_sweep_reports_divergence() {
    let o = parallax(&["risk-sweep", "--prior", "half_cauchy", "--r0", "2,5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("prior,r0,risk,status,lower_bound"), "{text}");
    assert_eq!(text.lines().filter(|l| l.contains("divergent")).count(), 2, "{text}");
}
