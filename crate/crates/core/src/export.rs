//! CSV and JSON writers for trajectories, online runs and reports. Output is
//! a pure function of its inputs, so identical runs give identical bytes.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::descent::Trajectory;
use crate::error::Result;
use crate::online::OnlineRun;

/// Iterates are embedded in JSON only while `d · T` stays below this.
pub const MAX_JSON_ITERATE_ENTRIES: usize = 1_000_000;

/// Identifies what produced an output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub dataset: String,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: Option<u64>, dataset: impl Into<String>) -> Self {
        Self {
            version: crate::VERSION.to_string(),
            config_hash: config_hash.into(),
            seed,
            dataset: dataset.into(),
        }
    }

    /// `# key = value` comment lines.
    pub fn write_header<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "# margin-lab {}", self.version)?;
        writeln!(out, "# config_sha256 = {}", self.config_hash)?;
        match self.seed {
            Some(s) => writeln!(out, "# seed = {s}")?,
            None => writeln!(out, "# seed = none")?,
        }
        writeln!(out, "# dataset = {}", self.dataset)?;
        Ok(())
    }
}

pub const TRAJECTORY_COLUMNS: [&str; 8] =
    ["t", "log_eta_t", "log_risk", "log_avg_risk", "phi", "min_margin", "avg_min_margin", "descent_violated"];

/// One row per recorded step. The stepsize is always written in log form
/// since adaptive stepsizes overflow `f64` long before the risk hits zero.
pub fn write_trajectory_csv<W: Write>(mut out: W, traj: &Trajectory, prov: &Provenance) -> Result<()> {
    prov.write_header(&mut out)?;
    writeln!(out, "{}", TRAJECTORY_COLUMNS.join(","))?;
    for r in &traj.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.t,
            r.log_eta,
            r.risk.log_value,
            r.avg_risk.log_value,
            r.phi,
            r.min_margin,
            r.avg_min_margin,
            r.descent_violated as u8
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Trajectory summary; iterates included when `d · T ≤ 10⁶`.
pub fn trajectory_json(traj: &Trajectory, prov: &Provenance) -> Value {
    let d = traj.records.first().map_or(0, |r| r.iterate.len());
    let include = d.saturating_mul(traj.records.len()) <= MAX_JSON_ITERATE_ENTRIES;
    let records: Vec<Value> = traj
        .records
        .iter()
        .map(|r| {
            let mut v = json!({
                "t": r.t,
                "log_eta_t": r.log_eta,
                "log_risk": r.risk.log_value,
                "log_avg_risk": r.avg_risk.log_value,
                "phi": r.phi,
                "min_margin": r.min_margin,
                "avg_min_margin": r.avg_min_margin,
                "min_log_risk": r.min_log_risk,
                "descent_violated": r.descent_violated,
            });
            if include {
                v["iterate"] = json!(r.iterate);
                v["avg_iterate"] = json!(r.avg_iterate);
            }
            v
        })
        .collect();
    json!({
        "provenance": prov,
        "status": traj.status,
        "any_descent_violation": traj.any_descent_violation,
        "iterates_included": include,
        "records": records,
    })
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// `t, index, mistakes, separated` per online step (1-based data index).
pub fn write_online_csv<W: Write>(mut out: W, run: &OnlineRun, prov: &Provenance) -> Result<()> {
    prov.write_header(&mut out)?;
    writeln!(out, "t,index,mistakes,separated")?;
    for (t, &i) in run.order.iter().enumerate() {
        let sep = run.separated_at.is_some_and(|s| s <= t + 1);
        writeln!(out, "{},{},{},{}", t + 1, i + 1, run.mistakes[t + 1], sep as u8)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_random_separable;
    use crate::descent::{run_gd, GdConfig};
    use crate::losses::LossSpec;

    fn sample() -> Trajectory {
        let ds = gen_random_separable(3, 8, 0.2, 1).unwrap();
        run_gd(&ds, &GdConfig::adaptive(LossSpec::exp(8), 5.0, 4)).unwrap()
    }

    #[test]
    fn csv_layout() {
        let prov = Provenance::new("abc", Some(7), "random");
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &sample(), &prov).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# margin-lab "));
        assert_eq!(lines[2], "# seed = 7");
        assert_eq!(lines[4], TRAJECTORY_COLUMNS.join(","));
        assert_eq!(lines.len(), 5 + 5);
        assert!(lines[5].starts_with("0,"));
        assert!(lines[5..].iter().all(|l| l.split(',').count() == 8));
    }

    #[test]
    fn json_iterate_cap() {
        let prov = Provenance::new("abc", None, "random");
        let v = trajectory_json(&sample(), &prov);
        assert_eq!(v["iterates_included"], true);
        assert_eq!(v["records"][0]["iterate"].as_array().unwrap().len(), 3);
        assert_eq!(v["provenance"]["seed"], Value::Null);
    }
}
