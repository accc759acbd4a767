//! Step-complexity benchmark: how many steps each method needs to push the
//! averaged-iterate risk below `ε` (risk mode) or to separate the data
//! (separator mode).

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use margin_lab::dataset::gen_random_separable;
use margin_lab::descent::run_gd;
use margin_lab::export::Provenance;
use margin_lab::online::{run_perceptron, OrderSpec};
use margin_lab::{GdConfig, LossSpec, Result, StopRule};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    Risk,
    Separator,
}

impl fmt::Display for BenchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchMode::Risk => "risk",
            BenchMode::Separator => "separator",
        })
    }
}

impl FromStr for BenchMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "risk" => Ok(BenchMode::Risk),
            "separator" => Ok(BenchMode::Separator),
            _ => Err(format!("bench_mode must be risk or separator, got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    ConstantGd,
    SmallAdaptiveGd,
    LargeAdaptiveGd,
    Perceptron,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ConstantGd => "constant-gd",
            Method::SmallAdaptiveGd => "small-adaptive-gd",
            Method::LargeAdaptiveGd => "large-adaptive-gd",
            Method::Perceptron => "perceptron",
        })
    }
}

/// `4 ln(1/ε)/γ² + 4`: large enough that the averaged risk is below `ε`
/// after `⌈1/γ²⌉` steps.
pub fn large_adaptive_eta(gamma: f64, eps: f64) -> f64 {
    4.0 * (1.0 / eps).ln() / (gamma * gamma) + 4.0
}

#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub gammas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub mode: BenchMode,
    pub max_steps: usize,
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub method: Method,
    pub gamma: f64,
    /// `ε` in risk mode, the sample count in separator mode.
    pub target: f64,
    pub eta: Option<f64>,
    /// `None` when the budget ran out.
    pub steps: Option<usize>,
    pub wall: Duration,
}

fn cell(spec: &BenchSpec, method: Method, gamma: f64, target: f64) -> Result<BenchCell> {
    let started = Instant::now();
    let ds = gen_random_separable(spec.dim, spec.samples, gamma, spec.seed)?;
    let n = ds.len();
    let (eta, steps) = if method == Method::Perceptron {
        // Counted in updates: presentations without a mistake are free.
        let order = OrderSpec::Cyclic.build(&ds, spec.max_steps)?;
        let run = run_perceptron(&ds, &order, None)?;
        (None, run.separated_at.map(|s| run.mistakes[s]))
    } else {
        let (rule, eps) = match spec.mode {
            BenchMode::Risk => (StopRule::AvgLogRiskBelow(target.ln()), target),
            // Exponential-loss risk below 1/n certifies a separator.
            BenchMode::Separator => (StopRule::AvgSeparates, 1.0 / n as f64),
        };
        let loss = LossSpec::exp(n);
        let cfg = match method {
            Method::ConstantGd => GdConfig::constant(loss, 1.0, spec.max_steps),
            Method::SmallAdaptiveGd => GdConfig::adaptive(loss, 1.0, spec.max_steps),
            _ => GdConfig::adaptive(loss, large_adaptive_eta(gamma, eps), spec.max_steps),
        };
        let eta = cfg.mode.eta();
        let traj = run_gd(&ds, &cfg.with_record_every(spec.max_steps).with_stop(rule))?;
        let last = traj.last();
        let hit = match rule {
            StopRule::AvgLogRiskBelow(ln_eps) => last.avg_risk.log_value <= ln_eps,
            StopRule::AvgSeparates => last.avg_min_margin > 0.0,
            StopRule::IterateSeparates => last.min_margin > 0.0,
        };
        (Some(eta), hit.then_some(last.t))
    };
    Ok(BenchCell { method, gamma, target, eta, steps, wall: started.elapsed() })
}

/// Runs every (method, γ, target) cell concurrently; rows come back sorted.
pub fn bench_step_complexity(spec: &BenchSpec) -> Result<Vec<BenchCell>> {
    let mut jobs = Vec::new();
    let methods: &[Method] = match spec.mode {
        BenchMode::Risk => &[Method::ConstantGd, Method::SmallAdaptiveGd, Method::LargeAdaptiveGd],
        BenchMode::Separator => &[Method::ConstantGd, Method::SmallAdaptiveGd, Method::LargeAdaptiveGd, Method::Perceptron],
    };
    let targets: Vec<f64> = match spec.mode {
        BenchMode::Risk => spec.epsilons.clone(),
        BenchMode::Separator => vec![spec.samples as f64],
    };
    for &m in methods {
        for &g in &spec.gammas {
            for &t in &targets {
                jobs.push((m, g, t));
            }
        }
    }
    let mut cells = jobs.into_par_iter().map(|(m, g, t)| cell(spec, m, g, t)).collect::<Result<Vec<_>>>()?;
    cells.sort_by(|a, b| {
        (a.method, a.gamma, a.target).partial_cmp(&(b.method, b.gamma, b.target)).expect("finite grid values")
    });
    Ok(cells)
}

fn steps_field(c: &BenchCell, max_steps: usize) -> String {
    c.steps.map_or_else(|| format!(">{max_steps}"), |s| s.to_string())
}

/// Deterministic results table; wall time lives in [`write_timing_csv`].
pub fn write_bench_csv<W: Write>(mut out: W, spec: &BenchSpec, cells: &[BenchCell], prov: &Provenance) -> Result<()> {
    prov.write_header(&mut out)?;
    let target = match spec.mode {
        BenchMode::Risk => "epsilon",
        BenchMode::Separator => "n",
    };
    writeln!(out, "method,gamma,{target},eta,steps")?;
    for c in cells {
        let eta = c.eta.map_or_else(String::new, |e| e.to_string());
        writeln!(out, "{},{},{},{eta},{}", c.method, c.gamma, c.target, steps_field(c, spec.max_steps))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_timing_csv<W: Write>(mut out: W, cells: &[BenchCell]) -> Result<()> {
    writeln!(out, "method,gamma,target,wall_ms")?;
    for c in cells {
        writeln!(out, "{},{},{},{:.3}", c.method, c.gamma, c.target, c.wall.as_secs_f64() * 1e3)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mode: BenchMode) -> BenchSpec {
        BenchSpec {
            gammas: vec![0.1],
            epsilons: vec![1e-2, 1e-6, 1e-12],
            mode,
            max_steps: 20_000,
            dim: 10,
            samples: 100,
            seed: 0,
        }
    }

    #[test]
    fn large_adaptive_is_accuracy_independent() {
        let cells = bench_step_complexity(&spec(BenchMode::Risk)).unwrap();
        let large: Vec<_> = cells.iter().filter(|c| c.method == Method::LargeAdaptiveGd).collect();
        assert_eq!(large.len(), 3);
        assert!(large.iter().all(|c| c.steps.is_some_and(|s| s <= 100)), "{large:?}");
    }

    #[test]
    fn small_adaptive_grows_with_accuracy() {
        let cells = bench_step_complexity(&spec(BenchMode::Risk)).unwrap();
        let small: Vec<usize> =
            cells.iter().filter(|c| c.method == Method::SmallAdaptiveGd).map(|c| c.steps.unwrap()).collect();
        assert!(small.windows(2).all(|w| w[0] > w[1]), "sorted by eps ascending: {small:?}");
    }

    #[test]
    fn perceptron_separates_within_mistake_bound() {
        let cells = bench_step_complexity(&spec(BenchMode::Separator)).unwrap();
        let p = cells.iter().find(|c| c.method == Method::Perceptron).unwrap();
        assert!(p.steps.is_some_and(|s| s <= 100), "{p:?}");
        assert_eq!(cells.len(), 4);
    }

    #[test]
    fn eta_policy() {
        assert!((large_adaptive_eta(0.1, (-1.0f64).exp()) - 404.0).abs() < 1e-9);
    }
}
