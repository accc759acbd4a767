//! Executes a parsed config and writes its outputs.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use margin_lab::dataset::DatasetSource;
use margin_lab::descent::run_gd;
use margin_lab::export::{trajectory_json, write_json, write_online_csv, write_trajectory_csv, Provenance};
use margin_lab::online::{run_online_sgd, run_perceptron, OrderSpec};
use margin_lab::two_layer::run_gd_nn;
use margin_lab::verify::{default_checks, fingerprint, run_suite, BoundReport, Verdict};
use margin_lab::{Dataset, GdConfig, LossSpec, StepsizeMode, Trajectory, TwoLayerNet};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::bench::{bench_step_complexity, write_bench_csv, write_timing_csv, BenchSpec};
use crate::config::{Command, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    VerificationFailed,
}

/// Hex SHA-256 of the canonical config.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    Sha256::digest(cfg.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn need<'a, T>(v: &'a Option<T>, key: &str) -> Result<&'a T, String> {
    v.as_ref().ok_or_else(|| format!("missing required key '{key}'"))
}

fn err(e: margin_lab::Error) -> String {
    e.to_string()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>, String> {
    let path = dir.join(name);
    fs::File::create(&path).map(BufWriter::new).map_err(|e| format!("cannot create {}: {e}", path.display()))
}

/// Runs the command, writing files into `out_dir`. Returns the list of
/// files written alongside the outcome.
pub fn execute(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(Outcome, Vec<PathBuf>), String> {
    fs::create_dir_all(out_dir).map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let hash = config_hash(cfg);
    let mut written = Vec::new();
    let mut emit = |name: &str| {
        written.push(out_dir.join(name));
        create(out_dir, name)
    };

    let build = |src: &DatasetSource| -> Result<(Dataset, Provenance), String> {
        let ds = src.build().map_err(err)?;
        let prov = Provenance::new(hash.clone(), cfg.seed, format!("{src} {}", fingerprint(&ds)));
        Ok((ds, prov))
    };

    let outcome = match cfg.command {
        Command::Gen => {
            let (ds, prov) = build(need(&cfg.dataset, "dataset")?)?;
            let report = ds.validate();
            if !report.passed() {
                let msgs: Vec<String> = report.failures().map(|f| format!("{f:?}")).collect();
                return Err(format!("generated dataset failed validation: {}", msgs.join("; ")));
            }
            let mut out = emit("dataset.txt")?;
            prov.write_header(&mut out).map_err(err)?;
            ds.write_to(&mut out).map_err(err)?;
            out.flush().map_err(|e| e.to_string())?;
            Outcome::Success
        }
        Command::Run | Command::RunNn => {
            let (ds, prov) = build(need(&cfg.dataset, "dataset")?)?;
            let loss = LossSpec::new(*need(&cfg.loss, "loss")?, ds.len()).map_err(err)?;
            let steps = *need(&cfg.steps, "steps")?;
            let gd = match *need(&cfg.stepsize, "stepsize")? {
                StepsizeMode::Adaptive(eta) => GdConfig::adaptive(loss, eta, steps),
                StepsizeMode::Constant(eta) => GdConfig::constant(loss, eta, steps),
            }
            .with_record_every(cfg.record_every);
            let traj: Trajectory = if cfg.command == Command::Run {
                run_gd(&ds, &gd).map_err(err)?
            } else {
                let act = *need(&cfg.activation, "activation")?;
                let net = TwoLayerNet::zeros(ds.dim(), *need(&cfg.width, "width")?, act).map_err(err)?;
                run_gd_nn(&ds, &net, &gd).map_err(err)?
            };
            write_trajectory_csv(emit("trajectory.csv")?, &traj, &prov).map_err(err)?;
            write_json(emit("trajectory.json")?, &trajectory_json(&traj, &prov)).map_err(err)?;
            let last = traj.last();
            println!(
                "t={} log_risk={:.6} log_avg_risk={:.6} min_margin={:.6} status={:?}",
                last.t, last.risk.log_value, last.avg_risk.log_value, last.min_margin, traj.status
            );
            Outcome::Success
        }
        Command::Perceptron => {
            let (ds, prov) = build(need(&cfg.dataset, "dataset")?)?;
            let spec = cfg.order.clone().unwrap_or(OrderSpec::Cyclic);
            let len = cfg.order_len.unwrap_or(ds.rows());
            let order = spec.build(&ds, len).map_err(err)?;
            let run = match (cfg.loss, cfg.stepsize) {
                (Some(kind), Some(StepsizeMode::Constant(eta))) => {
                    let loss = LossSpec::new(kind, ds.len()).map_err(err)?;
                    run_online_sgd(&ds, &order, &loss, eta, None).map_err(err)?
                }
                (None, None) => run_perceptron(&ds, &order, None).map_err(err)?,
                _ => return Err("online SGD needs both 'loss' and a constant 'stepsize'".into()),
            };
            write_online_csv(emit("online.csv")?, &run, &prov).map_err(err)?;
            write_json(emit("online.json")?, &json!({ "provenance": prov, "run": run })).map_err(err)?;
            println!("steps={} mistakes={} separated_at={:?}", len, run.total_mistakes(), run.separated_at);
            Outcome::Success
        }
        Command::Verify => {
            let checks: Vec<_> = default_checks()
                .into_iter()
                .filter(|c| cfg.claims.is_empty() || cfg.claims.iter().any(|k| k == c.claim))
                .collect();
            if checks.is_empty() {
                return Err(format!("no checks match claims {:?}", cfg.claims));
            }
            let reports = run_suite(checks);
            let prov = Provenance::new(hash.clone(), cfg.seed, "default suite");
            write_json(emit("reports.json")?, &json!({ "provenance": prov, "reports": reports })).map_err(err)?;
            print_summary(&reports);
            if reports.iter().all(BoundReport::passed) {
                Outcome::Success
            } else {
                Outcome::VerificationFailed
            }
        }
        Command::Bench => {
            let spec = BenchSpec {
                gammas: cfg.gammas.clone(),
                epsilons: cfg.epsilons.clone(),
                mode: cfg.bench_mode,
                max_steps: cfg.max_steps,
                dim: cfg.bench_dim,
                samples: cfg.bench_samples,
                seed: cfg.seed.unwrap_or(0),
            };
            let cells = bench_step_complexity(&spec).map_err(err)?;
            let prov = Provenance::new(
                hash.clone(),
                Some(spec.seed),
                format!("random:d={},n={},gamma=<grid>,seed={}", spec.dim, spec.samples, spec.seed),
            );
            write_bench_csv(emit("bench.csv")?, &spec, &cells, &prov).map_err(err)?;
            write_timing_csv(emit("bench_timing.csv")?, &cells).map_err(err)?;
            Outcome::Success
        }
    };
    Ok((outcome, written))
}

/// One row per report, worst first within each claim.
pub fn print_summary(reports: &[BoundReport]) {
    println!("{:<24} {:>8} {:>8} {:>14}  context", "claim", "verdict", "points", "worst slack");
    for r in reports {
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Refused => "refused",
        };
        println!("{:<24} {:>8} {:>8} {:>14.6e}  {}", r.claim, verdict, r.points.len(), r.worst_slack, r.context);
        if let Some(p) = r.first_failure() {
            println!("    first failure: {} at t={} observed={:.6e} bound={:.6e}", p.label, p.t, p.observed, p.bound);
        }
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    println!("{} reports, {} failing", reports.len(), failed);
}
