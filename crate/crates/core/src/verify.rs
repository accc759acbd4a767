//! Executable checks of the risk bounds, lower-bound constructions, and the
//! inequalities they rest on. Every check returns a [`BoundReport`] holding
//! `(observed, bound)` pairs; a report passes when every pair satisfies
//! `observed ≤ bound + tolerance` (strictly `<` for strict points).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    gen_alternate_lb, gen_batch_lb, gen_online_lb, gen_random_separable, gen_stable2pt, BatchLbShape,
    Certificate, Dataset,
};
use crate::descent::{
    averaged_risk_log_bound, general_loss_log_bound, grad_phi, grad_risk, phi, risk, run_gd, GdConfig,
    Trajectory,
};
use crate::error::Result;
use crate::losses::{LossKind, LossSpec};
use crate::numeric::{dot, norm};
use crate::online::{run_online_sgd, run_perceptron, OnlineRun, OrderSpec};
use crate::two_layer::{
    network_comparator_inequality, network_key_inequality, network_log_bound, run_gd_nn, Activation,
    BaseActivation, TwoLayerNet,
};

/// Log-domain bound comparisons.
pub const BOUND_TOL: f64 = 1e-6;
/// Algebraic zero patterns.
pub const ZERO_TOL: f64 = 1e-14;
/// Inequality slacks.
pub const SLACK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Preconditions of the claim do not hold; nothing was checked.
    Refused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckPoint {
    pub label: String,
    pub t: usize,
    pub observed: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub strict: bool,
}

impl CheckPoint {
    /// `bound + tolerance - observed`; non-negative (positive if strict) when the point holds.
    pub fn slack(&self) -> f64 {
        self.bound + self.tolerance - self.observed
    }

    pub fn holds(&self) -> bool {
        let s = self.slack();
        if self.strict {
            s > 0.0
        } else {
            s >= 0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub claim: String,
    /// Dataset fingerprint and run parameters.
    pub context: String,
    pub points: Vec<CheckPoint>,
    pub verdict: Verdict,
    /// Smallest slack over all points; `inf` when there are none.
    pub worst_slack: f64,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(claim: impl Into<String>, context: impl Into<String>) -> Self {
        Self {
            claim: claim.into(),
            context: context.into(),
            points: Vec::new(),
            verdict: Verdict::Pass,
            worst_slack: f64::INFINITY,
            notes: Vec::new(),
        }
    }

    pub fn refused(claim: impl Into<String>, context: impl Into<String>, reason: impl Into<String>) -> Self {
        let mut r = Self::new(claim, context);
        r.verdict = Verdict::Refused;
        r.notes.push(reason.into());
        r
    }

    pub fn check(&mut self, label: &str, t: usize, observed: f64, bound: f64, tolerance: f64) {
        self.push(label, t, observed, bound, tolerance, false);
    }

    pub fn check_strict(&mut self, label: &str, t: usize, observed: f64, bound: f64, tolerance: f64) {
        self.push(label, t, observed, bound, tolerance, true);
    }

    fn push(&mut self, label: &str, t: usize, observed: f64, bound: f64, tolerance: f64, strict: bool) {
        let p = CheckPoint { label: label.to_string(), t, observed, bound, tolerance, strict };
        // NaN slack counts as a failure.
        let s = p.slack();
        self.worst_slack = if s.is_nan() { f64::NEG_INFINITY } else { self.worst_slack.min(s) };
        if !p.holds() {
            self.verdict = Verdict::Fail;
        }
        self.points.push(p);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckPoint> {
        self.points.iter().filter(|p| !p.holds())
    }

    /// The failing point with the smallest `t`, for reproduction.
    pub fn first_failure(&self) -> Option<&CheckPoint> {
        self.failures().min_by_key(|p| p.t)
    }

    fn absorb(&mut self, other: BoundReport) {
        for p in other.points {
            self.push(&p.label, p.t, p.observed, p.bound, p.tolerance, p.strict);
        }
        if other.verdict == Verdict::Refused {
            self.verdict = Verdict::Refused;
        }
        self.notes.extend(other.notes);
    }
}

/// FNV-1a over the dataset contents; stable across platforms and runs.
pub fn fingerprint(ds: &Dataset) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    eat(&(ds.dim() as u64).to_le_bytes());
    for i in 0..ds.rows() {
        for v in ds.row(i) {
            eat(&v.to_bits().to_le_bytes());
        }
        eat(&ds.label(i).to_bits().to_le_bytes());
        eat(&ds.multiplicity(i).to_le_bytes());
    }
    for v in &ds.certificate().w_star {
        eat(&v.to_bits().to_le_bytes());
    }
    eat(&ds.gamma().to_bits().to_le_bytes());
    format!("{}#{h:016x}", ds.origin)
}

fn ctx(ds: &Dataset, extra: impl AsRef<str>) -> String {
    format!("{} {}", fingerprint(ds), extra.as_ref())
}

fn is_exp_or_log(loss: &LossSpec) -> bool {
    matches!(loss.kind, LossKind::Exp | LossKind::Log)
}

// ---- upper bounds ------------------------------------------------------------

/// Adaptive GD from the origin; at every `t ≥ 1` the log-risk of the averaged
/// iterate must sit below the closed-form bound.
pub fn check_averaged_risk_bound(ds: &Dataset, loss: &LossSpec, eta: f64, steps: usize) -> BoundReport {
    const CLAIM: &str = "averaged-risk-bound";
    let context = ctx(ds, format!("loss={} eta={eta} T={steps}", loss.kind));
    if !is_exp_or_log(loss) {
        return BoundReport::refused(CLAIM, context, "needs exponential or logistic loss");
    }
    let loss = loss.with_n(ds.len());
    match run_gd(ds, &GdConfig::adaptive(loss, eta, steps)) {
        Ok(traj) => {
            let mut r = BoundReport::new(CLAIM, context);
            for rec in traj.records.iter().filter(|r| r.t >= 1) {
                let bound = averaged_risk_log_bound(ds.gamma(), eta, rec.t);
                r.check("log-avg-risk", rec.t, rec.avg_risk.log_value, bound, BOUND_TOL);
            }
            let burn = (1.0 / (ds.gamma() * ds.gamma())).ceil() as usize;
            if let Some(rec) = traj.records.iter().find(|r| r.t == burn) {
                r.check("post-burn-in", burn, rec.avg_risk.log_value, -ds.gamma().powi(2) * eta / 4.0, BOUND_TOL);
            }
            note_status(&mut r, &traj);
            r
        }
        Err(e) => BoundReport::refused(CLAIM, context, e.to_string()),
    }
}

/// Same comparison for any loss with a Lipschitz transformed objective,
/// against `ln ℓ(((γ²(t+1))² - C) η / (4γ²(t+1)))`.
pub fn check_general_loss_bound(ds: &Dataset, loss: &LossSpec, eta: f64, steps: usize) -> BoundReport {
    const CLAIM: &str = "general-loss-bound";
    let loss = loss.with_n(ds.len());
    let context = ctx(ds, format!("loss={} eta={eta} T={steps}", loss.kind));
    let traj = match run_gd(ds, &GdConfig::adaptive(loss, eta, steps)) {
        Ok(t) => t,
        Err(e) => return BoundReport::refused(CLAIM, context, e.to_string()),
    };
    let mut r = BoundReport::new(CLAIM, context);
    for rec in traj.records.iter().filter(|r| r.t >= 1) {
        match general_loss_log_bound(&loss, ds.gamma(), eta, rec.t) {
            Ok(bound) => r.check("log-avg-risk", rec.t, rec.avg_risk.log_value, bound, BOUND_TOL),
            Err(e) => return BoundReport::refused(CLAIM, r.context, e.to_string()),
        }
    }
    note_status(&mut r, &traj);
    r
}

fn note_status(r: &mut BoundReport, traj: &Trajectory) {
    if traj.diverged() {
        r.note(format!("run stopped early: {:?}", traj.status));
        r.verdict = Verdict::Fail;
    }
    if traj.any_descent_violation {
        r.note("risk increased at some step");
    }
}

/// Two-layer network with adaptive GD from zero hidden weights: the running
/// minimum of the log-risk against `κ - ((αγ²(t+1))² - 1) η / (4γ²(t+1))`.
pub fn check_network_bound(ds: &Dataset, net: &TwoLayerNet, loss: &LossSpec, eta: f64, steps: usize) -> BoundReport {
    const CLAIM: &str = "network-bound";
    let act = *net.activation();
    let context = ctx(ds, format!("m={} act={act} loss={} eta={eta} T={steps}", net.m(), loss.kind));
    if net.weights().iter().any(|&w| w != 0.0) {
        return BoundReport::refused(CLAIM, context, "hidden weights must start at zero");
    }
    let loss = loss.with_n(ds.len());
    match run_gd_nn(ds, net, &GdConfig::adaptive(loss, eta, steps)) {
        Ok(traj) => {
            let mut r = BoundReport::new(CLAIM, context);
            for rec in traj.records.iter().filter(|r| r.t >= 1) {
                let bound = network_log_bound(act.alpha, act.kappa, ds.gamma(), eta, rec.t);
                r.check("min-log-risk", rec.t, rec.min_log_risk, bound, BOUND_TOL);
            }
            note_status(&mut r, &traj);
            r
        }
        Err(e) => BoundReport::refused(CLAIM, context, e.to_string()),
    }
}

// ---- stable regime -----------------------------------------------------------

/// Lower-bound mechanisms on the two-point instance: for each `η`, a
/// monotone risk sequence forces `η ≤ ℓ(0)/(q r)` with `r = 0.1`, `q = 0.5`;
/// the first step is `η x̄`; `‖w_t‖ ≤ η t`; and the risk stays above
/// `ℓ(η t)/n` at both the iterate and the average.
pub fn check_stable_regime(gamma: f64, loss: &LossSpec, etas: &[f64], steps: usize) -> BoundReport {
    const CLAIM: &str = "stable-regime";
    let ds = match gen_stable2pt(gamma) {
        Ok(ds) => ds,
        Err(e) => return BoundReport::refused(CLAIM, format!("stable2pt(gamma={gamma})"), e.to_string()),
    };
    let context = ctx(&ds, format!("loss={} etas={etas:?} T={steps}", loss.kind));
    if !is_exp_or_log(loss) {
        return BoundReport::refused(CLAIM, context, "needs exponential or logistic loss");
    }
    let loss = loss.with_n(ds.len());
    let (r_dist, q) = (0.1, 0.5);
    let ell0 = loss.eval(0.0).expect("finite");
    let cap = ell0 / (q * r_dist);
    let mean = ds.mean_feature();
    let premise = premise_fraction(&ds, r_dist);
    let mut rep = BoundReport::new(CLAIM, context);
    rep.note(format!("step cap l(0)/(q r) = {cap}; fraction of points with x.xbar < -r is {premise}"));

    for &eta in etas {
        let traj = match run_gd(&ds, &GdConfig::adaptive(loss, eta, steps)) {
            Ok(t) => t,
            Err(e) => return BoundReport::refused(CLAIM, rep.context, e.to_string()),
        };
        let w1 = &traj.records[1].iterate;
        let err = w1.iter().zip(&mean).map(|(a, m)| (a - eta * m).abs()).fold(0.0, f64::max);
        rep.check("first-step", 1, err, 0.0, SLACK_TOL * eta.max(1.0));
        if !traj.any_descent_violation {
            rep.check("monotone-implies-cap", steps, eta, cap, 0.0);
        } else {
            rep.note(format!("eta={eta}: risk increased at some step"));
        }
        if eta >= 10.0 * cap {
            let monotone = !traj.any_descent_violation as u8 as f64;
            rep.check("ten-times-cap-increases", steps, monotone, 0.0, 0.0);
        }
        let ln_n = (ds.len() as f64).ln();
        for rec in traj.records.iter().filter(|r| r.t >= 1) {
            let et = eta * rec.t as f64;
            rep.check("norm-growth", rec.t, norm(&rec.iterate), et, 1e-9 * et);
            let floor = loss.ln_eval(et) - ln_n;
            rep.check("risk-floor", rec.t, floor, rec.risk.log_value, BOUND_TOL);
            rep.check("avg-risk-floor", rec.t, floor, rec.avg_risk.log_value, BOUND_TOL);
        }
    }
    rep
}

fn premise_fraction(ds: &Dataset, r: f64) -> f64 {
    let mean = ds.mean_feature();
    let hit: u64 = (0..ds.rows())
        .filter(|&i| dot(ds.row(i), &mean) < -r)
        .map(|i| ds.multiplicity(i))
        .sum();
    hit as f64 / ds.len() as f64
}

/// One adaptive step from the origin on a dataset with all labels `+1`
/// where a fraction `≥ q` of points has `xᵀx̄ < -r`: whenever the risk does
/// not increase, `η ≤ ℓ(0)/(q r)`.
pub fn check_stepsize_cap(ds: &Dataset, loss: &LossSpec, r_dist: f64, q: f64, etas: &[f64]) -> BoundReport {
    const CLAIM: &str = "stepsize-cap";
    let context = ctx(ds, format!("loss={} r={r_dist} q={q} etas={etas:?}", loss.kind));
    if !is_exp_or_log(loss) {
        return BoundReport::refused(CLAIM, context, "needs exponential or logistic loss");
    }
    if (0..ds.rows()).any(|i| ds.label(i) != 1.0) {
        return BoundReport::refused(CLAIM, context, "all labels must be +1");
    }
    let frac = premise_fraction(ds, r_dist);
    if frac < q {
        return BoundReport::refused(CLAIM, context, format!("only {frac} of points have x.xbar < -r"));
    }
    let loss = loss.with_n(ds.len());
    let cap = loss.eval(0.0).expect("finite") / (q * r_dist);
    let mut rep = BoundReport::new(CLAIM, context);
    for &eta in etas {
        match run_gd(ds, &GdConfig::adaptive(loss, eta, 1)) {
            Ok(traj) => {
                if traj.records[1].risk.log_value <= traj.records[0].risk.log_value {
                    rep.check("no-increase-implies-cap", 1, eta, cap, 0.0);
                } else {
                    rep.note(format!("eta={eta}: risk increased on the first step"));
                }
            }
            Err(e) => return BoundReport::refused(CLAIM, rep.context, e.to_string()),
        }
    }
    rep
}

// ---- lower-bound constructions ----------------------------------------------

/// A batch first-order method: GD with adaptive or constant stepsize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BatchMethod {
    Adaptive { loss: LossKind, eta: f64 },
    Constant { loss: LossKind, eta: f64 },
}

impl BatchMethod {
    fn config(&self, n: usize, steps: usize) -> Result<GdConfig> {
        Ok(match *self {
            BatchMethod::Adaptive { loss, eta } => GdConfig::adaptive(LossSpec::new(loss, n)?, eta, steps),
            BatchMethod::Constant { loss, eta } => GdConfig::constant(LossSpec::new(loss, n)?, eta, steps),
        })
    }
}

impl std::fmt::Display for BatchMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BatchMethod::Adaptive { loss, eta } => write!(f, "adaptive-gd({loss},eta={eta})"),
            BatchMethod::Constant { loss, eta } => write!(f, "constant-gd({loss},eta={eta})"),
        }
    }
}

/// Chain lower-bound instance: iterates started at `w0_scale · e_1` stay in
/// `Lin{e_1..e_{t+1}, e_{k+3-t}..e_{k+2}}` for `t ≤ t0 - 2`, so nothing
/// separates the data before then, nor below the step threshold.
pub fn check_batch_lower_bound(gamma: f64, n: usize, method: BatchMethod, w0_scale: f64) -> BoundReport {
    const CLAIM: &str = "batch-lower-bound";
    let ds = match gen_batch_lb(gamma, n) {
        Ok(ds) => ds,
        Err(e) => return BoundReport::refused(CLAIM, format!("batch_lb(gamma={gamma},n={n})"), e.to_string()),
    };
    let BatchLbShape { k, .. } = BatchLbShape::new(gamma, n).expect("validated above");
    let threshold = ((n as f64).ln() / (8.0 * 2f64.ln())).min(1.0 / (30.0 * gamma * gamma));
    chain_lower_bound(CLAIM, &ds, k, threshold, method, w0_scale)
}

/// Alternating-sign chain instance, with threshold `min{n/4, 1/(8γ^{2/3})}`.
pub fn check_alternate_lower_bound(gamma: f64, n: usize, method: BatchMethod, w0_scale: f64) -> BoundReport {
    const CLAIM: &str = "alternate-lower-bound";
    let ds = match gen_alternate_lb(gamma, n) {
        Ok(ds) => ds,
        Err(e) => return BoundReport::refused(CLAIM, format!("alternate_lb(gamma={gamma},n={n})"), e.to_string()),
    };
    let k = n.min(ds.dim() - 2);
    let threshold = (n as f64 / 4.0).min(1.0 / (8.0 * gamma.powf(2.0 / 3.0)));
    chain_lower_bound(CLAIM, &ds, k, threshold, method, w0_scale)
}

fn chain_lower_bound(
    claim: &str,
    ds: &Dataset,
    k: usize,
    threshold: f64,
    method: BatchMethod,
    w0_scale: f64,
) -> BoundReport {
    let t0 = k.div_ceil(2);
    let span_last = t0.saturating_sub(2);
    let steps = span_last.max(threshold.ceil() as usize).max(1);
    let context = ctx(ds, format!("method={method} w0={w0_scale}e1 k={k} t0={t0} threshold={threshold:.4}"));
    let mut init = vec![0.0; ds.dim()];
    init[0] = w0_scale;
    let cfg = match method.config(ds.len(), steps) {
        Ok(c) => c.with_init(init),
        Err(e) => return BoundReport::refused(claim, context, e.to_string()),
    };
    let traj = match run_gd(ds, &cfg) {
        Ok(t) => t,
        Err(e) => return BoundReport::refused(claim, context, e.to_string()),
    };
    let mut rep = BoundReport::new(claim, context);
    if threshold < 1.0 {
        rep.note("step threshold below 1: the separation part is vacuous");
    }
    for rec in &traj.records {
        let t = rec.t;
        if t <= span_last {
            // 0-based: e_1..e_{t+1} -> 0..=t, e_{k+3-t}..e_{k+2} -> k+2-t..=k+1
            let allowed = |j: usize| j <= t || (j + t >= k + 2 && j <= k + 1);
            let outside = rec
                .iterate
                .iter()
                .enumerate()
                .filter(|(j, _)| !allowed(*j))
                .map(|(_, v)| v.abs())
                .fold(0.0, f64::max);
            rep.check_strict("out-of-span", t, outside, 0.0, ZERO_TOL);
            rep.check("span-no-separation", t, rec.min_margin, 0.0, 0.0);
        }
        if (t as f64) < threshold {
            rep.check("below-threshold-no-separation", t, rec.min_margin, 0.0, 0.0);
        }
    }
    note_status(&mut rep, &traj);
    rep
}

/// An online first-order method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OnlineMethod {
    Perceptron,
    Sgd { loss: LossKind, eta: f64 },
}

impl OnlineMethod {
    pub fn run(&self, ds: &Dataset, order: &[usize], w0: Option<&[f64]>) -> Result<OnlineRun> {
        match *self {
            OnlineMethod::Perceptron => run_perceptron(ds, order, w0),
            OnlineMethod::Sgd { loss, eta } => run_online_sgd(ds, order, &LossSpec::new(loss, ds.len())?, eta, w0),
        }
    }
}

impl std::fmt::Display for OnlineMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OnlineMethod::Perceptron => write!(f, "perceptron"),
            OnlineMethod::Sgd { loss, eta } => write!(f, "online-sgd({loss},eta={eta})"),
        }
    }
}

/// Online hard instance from `w0_scale · e_1`: in-order presentation makes
/// at least `min{1/(2γ²), t}` mistakes by step `t ≤ n`; under any order the
/// data is not separated before `min{1/(2γ²), n}` steps; the first
/// coordinate never moves.
pub fn check_online_lower_bound(
    gamma: f64,
    n: usize,
    method: OnlineMethod,
    w0_scale: f64,
    order_seed: u64,
) -> BoundReport {
    const CLAIM: &str = "online-lower-bound";
    let ds = match gen_online_lb(gamma, n) {
        Ok(ds) => ds,
        Err(e) => return BoundReport::refused(CLAIM, format!("online_lb(gamma={gamma},n={n})"), e.to_string()),
    };
    let context = ctx(&ds, format!("method={method} w0={w0_scale}e1 order_seed={order_seed}"));
    let mut w0 = vec![0.0; ds.dim()];
    w0[0] = w0_scale;
    let floor = 1.0 / (2.0 * gamma * gamma);
    let in_order: Vec<usize> = (0..n).collect();
    let shuffled = OrderSpec::Random(order_seed).build(&ds, 4 * n).expect("in range");
    let mut rep = BoundReport::new(CLAIM, context);
    for (name, order) in [("in-order", &in_order), ("random-order", &shuffled)] {
        let run = match method.run(&ds, order, Some(&w0)) {
            Ok(r) => r,
            Err(e) => return BoundReport::refused(CLAIM, rep.context, e.to_string()),
        };
        if name == "in-order" {
            for t in 1..=n {
                rep.check("mistakes", t, -(run.mistakes[t] as f64), -floor.min(t as f64), 0.0);
            }
        }
        if let Some(s) = run.separated_at {
            rep.check(&format!("{name}-separation-time"), s, -(s as f64), -floor.min(n as f64), 0.0);
        } else {
            rep.note(format!("{name}: not separated within {} steps", order.len()));
        }
        let drift = run.iterates.iter().map(|w| (w[0] - w0_scale).abs()).fold(0.0, f64::max);
        rep.check(&format!("{name}-first-coordinate"), order.len(), drift, 0.0, 0.0);
    }
    rep
}

/// Perceptron mistakes never exceed `⌊1/γ²⌋` for the certificate margin.
pub fn check_mistake_bound(ds: &Dataset, order: &OrderSpec, len: usize) -> BoundReport {
    const CLAIM: &str = "mistake-bound";
    let context = ctx(ds, format!("order={order} len={len}"));
    let run = match order.build(ds, len).and_then(|o| run_perceptron(ds, &o, None)) {
        Ok(r) => r,
        Err(e) => return BoundReport::refused(CLAIM, context, e.to_string()),
    };
    let mut rep = BoundReport::new(CLAIM, context);
    let bound = (1.0 / (ds.gamma() * ds.gamma()) + 1e-9).floor();
    rep.check("total-mistakes", len, run.total_mistakes() as f64, bound, 0.0);
    rep
}

// ---- separator ---------------------------------------------------------------

/// A risk below `ℓ(0)/n` certifies a separator.
pub fn check_separator(ds: &Dataset, loss: &LossSpec, w: &[f64]) -> BoundReport {
    const CLAIM: &str = "separator";
    let context = ctx(ds, format!("loss={} single-point", loss.kind));
    let r = match risk(w, ds, loss) {
        Ok(r) => r,
        Err(e) => return BoundReport::refused(CLAIM, context, e.to_string()),
    };
    let mut rep = BoundReport::new(CLAIM, context);
    let z = ds.min_margin(w).expect("dimension checked by risk");
    separator_point(&mut rep, loss, ds.len(), 0, r.log_value, z);
    rep
}

/// Applies the separator test to every recorded iterate and averaged iterate.
pub fn check_separator_on_trajectory(ds: &Dataset, loss: &LossSpec, traj: &Trajectory) -> BoundReport {
    let mut rep = BoundReport::new("separator", ctx(ds, format!("loss={} trajectory", loss.kind)));
    let mut certified = 0usize;
    for rec in &traj.records {
        certified += separator_point(&mut rep, loss, ds.len(), rec.t, rec.risk.log_value, rec.min_margin) as usize;
        certified +=
            separator_point(&mut rep, loss, ds.len(), rec.t, rec.avg_risk.log_value, rec.avg_min_margin) as usize;
    }
    rep.note(format!("{certified} iterates below the separator threshold"));
    rep
}

fn separator_point(rep: &mut BoundReport, loss: &LossSpec, n: usize, t: usize, log_risk: f64, min_margin: f64) -> bool {
    let threshold = loss.ln_eval(0.0) - (n as f64).ln();
    if log_risk < threshold {
        rep.check_strict("min-margin-positive", t, -min_margin, 0.0, 0.0);
        true
    } else {
        false
    }
}

// ---- lemma-level inequalities ------------------------------------------------

fn random_probe(rng: &mut ChaCha8Rng, d: usize, w_star: &[f64]) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-2.0..2.5));
    let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let gn = norm(&g).max(1e-300);
    // Half the probes lean towards the certificate so some risks are tiny.
    let lean = if rng.random_bool(0.5) { rng.random_range(0.0..3.0) } else { 0.0 };
    g.iter().zip(w_star).map(|(gi, wi)| scale * (gi / gn + lean * wi)).collect()
}

/// Gradient-norm bound, the key inequality at several `η`, midpoint
/// convexity of `φ`, monotonicity of `ℓ'²/(ℓ ℓ'')`, closed-form inverses,
/// and finite-difference and two-route gradient agreement.
pub fn check_lemmas(ds: &Dataset, loss: &LossSpec, probes: usize, seed: u64) -> BoundReport {
    const CLAIM: &str = "lemmas";
    let loss = loss.with_n(ds.len());
    let context = ctx(ds, format!("loss={} probes={probes} seed={seed}", loss.kind));
    let c = match loss.lipschitz_const() {
        Ok(c) => c,
        Err(e) => return BoundReport::refused(CLAIM, context, e.to_string()),
    };
    let mut rep = BoundReport::new(CLAIM, context);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cert = ds.certificate().clone();
    let d = ds.dim();
    let mut worst = [f64::NEG_INFINITY; 3];
    let mut worst_sum_form = f64::NEG_INFINITY;
    let ln_n = (ds.len() as f64).ln();
    // -ℓ⁻¹(n·L): the sum-normalised objective, reported for comparison.
    let sum_form = |w: &[f64]| risk(w, ds, &loss).map(|r| loss.neg_inverse_from_ln(r.log_value + ln_n));

    for _ in 0..probes {
        let w = random_probe(&mut rng, d, &cert.w_star);
        let g = grad_phi(&w, ds, &loss).expect("validated");
        let gn = norm(&g);
        worst[0] = worst[0].max(gn);
        for eta in [0.01, 1.0, 100.0] {
            let u2 = c * eta / (2.0 * cert.gamma);
            let val = 2.0 * u2 * dot(&g, &cert.w_star) + eta * gn * gn;
            worst[1] = worst[1].max(val);
        }
        let v = random_probe(&mut rng, d, &cert.w_star);
        let mid: Vec<f64> = w.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect();
        let (pa, pb, pm) = (phi(&w, ds, &loss), phi(&v, ds, &loss), phi(&mid, ds, &loss));
        if let (Ok(pa), Ok(pb), Ok(pm)) = (pa, pb, pm) {
            // Relative slack once φ is large.
            let scale = pa.abs().max(pb.abs()).max(1.0);
            worst[2] = worst[2].max((pm - 0.5 * (pa + pb)) / scale);
        }
        if let (Ok(sa), Ok(sb), Ok(sm)) = (sum_form(&w), sum_form(&v), sum_form(&mid)) {
            let scale = sa.abs().max(sb.abs()).max(1.0);
            worst_sum_form = worst_sum_form.max((sm - 0.5 * (sa + sb)) / scale);
        }
    }
    rep.check("grad-phi-norm", probes, worst[0], c, 1e-9);
    rep.check("key-inequality", probes, worst[1], 0.0, SLACK_TOL);
    rep.check("midpoint-convexity", probes, worst[2], 0.0, 1e-10);
    rep.note(format!("sum-normalised objective: worst relative midpoint gap {worst_sum_form:.3e}"));

    // ℓ'(z)²/(ℓ(z) ℓ''(z)) non-increasing on [-50, 50].
    let ratio = |z: f64| -> f64 {
        let (l, d1, d2) = (loss.eval(z).unwrap(), loss.deriv(z).unwrap(), loss.deriv2(z).unwrap());
        d1 * d1 / (l * d2)
    };
    let mut rise = f64::NEG_INFINITY;
    let mut prev = ratio(-50.0);
    for i in 1..=10_000 {
        let r = ratio(-50.0 + i as f64 * 0.01);
        rise = rise.max((r - prev) / prev.abs().max(1.0));
        prev = r;
    }
    rep.check("ratio-monotone", 0, rise, 0.0, 1e-9);

    if let Some(formula) = closed_form_inverse(loss.kind) {
        let mut err: f64 = 0.0;
        for i in 1..=400 {
            let u = match loss.kind {
                LossKind::Poly(_) => i as f64 / 400.0,
                _ => 10f64.powf(-4.0 + i as f64 * 0.02),
            };
            let (a, b) = (loss.inverse(u).unwrap(), formula(u));
            err = err.max((a - b).abs() / b.abs().max(1.0));
        }
        rep.check("inverse-closed-form", 0, err, 0.0, 1e-8);
    }

    // Finite differences on moderate probes; two routes to ∇φ elsewhere.
    let mut fd_err: f64 = 0.0;
    let mut route_err: f64 = 0.0;
    for _ in 0..probes.clamp(1, 20) {
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = grad_risk(&w, ds, &loss).unwrap();
        let h = 1e-6;
        let mut e = vec![0.0; d];
        for j in 0..d {
            let mut a = w.clone();
            let mut b = w.clone();
            a[j] += h;
            b[j] -= h;
            let fd = (risk(&a, ds, &loss).unwrap().value - risk(&b, ds, &loss).unwrap().value) / (2.0 * h);
            e[j] = g[j] - fd;
        }
        fd_err = fd_err.max(norm(&e) / norm(&g).max(1e-300));
        let r = risk(&w, ds, &loss).unwrap();
        if r.value > 1e-200 {
            let f = loss.neg_inv_deriv(r.value).unwrap();
            let gp = grad_phi(&w, ds, &loss).unwrap();
            let diff: Vec<f64> = gp.iter().zip(&g).map(|(a, b)| a - f * b).collect();
            route_err = route_err.max(norm(&diff) / norm(&gp).max(1e-300));
        }
    }
    rep.check("finite-difference", 0, fd_err, 0.0, 1e-5);
    rep.check("two-route-grad-phi", 0, route_err, 0.0, 1e-8);
    rep
}

fn closed_form_inverse(kind: LossKind) -> Option<Box<dyn Fn(f64) -> f64>> {
    match kind {
        LossKind::Exp => Some(Box::new(|u: f64| -u.ln())),
        LossKind::Log => Some(Box::new(|u: f64| -u.exp_m1().ln())),
        LossKind::Poly(k) => Some(Box::new(move |u: f64| u.powf(-1.0 / k) - 1.0)),
        LossKind::SemiCircle => Some(Box::new(|u: f64| 1.0 / u - u)),
        LossKind::Hinge => None,
    }
}

/// Network inequalities on random hidden weights: per-block gradient norms,
/// the key inequality with `u₂⁽ʲ⁾ = (a_j η / 2γ) w*`, and the comparator
/// inequality for `u₁⁽ʲ⁾ ∝ a_j w*`.
pub fn check_network_lemmas(
    ds: &Dataset,
    m: usize,
    activation: Activation,
    loss: &LossSpec,
    probes: usize,
    seed: u64,
) -> BoundReport {
    const CLAIM: &str = "network-lemmas";
    let loss = loss.with_n(ds.len());
    let context = ctx(ds, format!("m={m} act={activation} loss={} probes={probes} seed={seed}", loss.kind));
    let base = match TwoLayerNet::zeros(ds.dim(), m, activation) {
        Ok(n) => n,
        Err(e) => return BoundReport::refused(CLAIM, context, e.to_string()),
    };
    let mut rep = BoundReport::new(CLAIM, context);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = ds.dim();
    let mut worst = [f64::NEG_INFINITY; 3];
    for _ in 0..probes {
        let scale = 10f64.powf(rng.random_range(-2.0..1.5));
        let w: Vec<f64> = (0..m * d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let net = base.with_weights(w).expect("finite");
        let res = (|| -> Result<()> {
            let g = crate::two_layer::nn_grad_phi(&net, ds, &loss)?;
            for j in 0..m {
                worst[0] = worst[0].max(m as f64 * norm(&g[j * d..(j + 1) * d]));
            }
            for eta in [0.01, 1.0, 100.0] {
                worst[1] = worst[1].max(network_key_inequality(&net, ds, &loss, eta)?);
            }
            let scales: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random_range(-1.0..2.0))).collect();
            let (lhs, rhs) = network_comparator_inequality(&net, ds, &loss, &scales)?;
            worst[2] = worst[2].max((lhs - rhs) / rhs.abs().max(1.0));
            Ok(())
        })();
        if let Err(e) = res {
            return BoundReport::refused(CLAIM, rep.context, e.to_string());
        }
    }
    rep.check("block-grad-norm", probes, worst[0], 1.0, 1e-9);
    rep.check("key-inequality", probes, worst[1], 0.0, SLACK_TOL);
    rep.check("comparator-inequality", probes, worst[2], 0.0, 1e-9);
    rep
}

/// `σ' ∈ [α, 1]` and `|σ(z) - σ'(z) z| ≤ κ` on the measurement grid and on
/// a half-step shifted grid.
pub fn check_activation_grid(act: &Activation) -> BoundReport {
    let mut rep = BoundReport::new("activation-grid", format!("act={act} alpha={} kappa={}", act.alpha, act.kappa));
    rep.check("grid", 0, act.grid_violation(0.0), 0.0, 0.0);
    rep.check("shifted-grid", 0, act.grid_violation(0.005), 0.0, 0.0);
    rep
}

// ---- suite -------------------------------------------------------------------

pub type Check = Box<dyn Fn() -> BoundReport + Send + Sync>;

/// A check tagged with the claim id its report will carry.
pub struct NamedCheck {
    pub claim: &'static str,
    pub run: Check,
}

impl NamedCheck {
    pub fn new(claim: &'static str, run: impl Fn() -> BoundReport + Send + Sync + 'static) -> Self {
        Self { claim, run: Box::new(run) }
    }
}

/// Grids shared by the default suite and the acceptance tests.
pub mod grids {
    pub const GAMMAS: [f64; 3] = [0.05, 0.1, 0.2];
    pub const SEEDS: [u64; 3] = [0, 1, 2];
    pub const ETAS: [f64; 5] = [0.5, 4.0, 40.0, 400.0, 4000.0];
    pub const DIM: usize = 10;
    pub const SAMPLES: usize = 100;

    /// `⌈4/γ²⌉`.
    pub fn horizon(gamma: f64) -> usize {
        (4.0 / (gamma * gamma) - 1e-9).ceil() as usize
    }
}

/// The full default verification grid.
pub fn default_checks() -> Vec<NamedCheck> {
    use grids::*;
    let mut checks: Vec<NamedCheck> = Vec::new();

    for gamma in GAMMAS {
        for seed in SEEDS {
            for kind in [LossKind::Exp, LossKind::Log] {
                for eta in ETAS {
                    checks.push(NamedCheck::new("averaged-risk-bound", move || {
                        let ds = gen_random_separable(DIM, SAMPLES, gamma, seed).expect("valid grid");
                        let loss = LossSpec::new(kind, SAMPLES).expect("valid");
                        let mut r = check_averaged_risk_bound(&ds, &loss, eta, horizon(gamma));
                        let traj = run_gd(&ds, &GdConfig::adaptive(loss, eta, horizon(gamma))).expect("valid");
                        r.absorb(check_separator_on_trajectory(&ds, &loss, &traj));
                        r
                    }));
                }
            }
            for kind in [LossKind::Poly(2.0), LossKind::SemiCircle] {
                for eta in ETAS {
                    checks.push(NamedCheck::new("general-loss-bound", move || {
                        let ds = gen_random_separable(DIM, SAMPLES, gamma, seed).expect("valid grid");
                        let loss = LossSpec::new(kind, SAMPLES).expect("valid");
                        check_general_loss_bound(&ds, &loss, eta, horizon(gamma))
                    }));
                }
            }
        }
    }

    checks.push(NamedCheck::new("stable-regime", || {
        let cap = 20.0;
        check_stable_regime(0.05, &LossSpec::exp(2), &[0.01, 1.0, cap, 10.0 * cap], 200)
    }));
    checks.push(NamedCheck::new("stepsize-cap", || check_stepsize_cap(&cap_instance(), &LossSpec::exp(2), 0.05, 0.5, &[1.0, 10.0, 40.0, 400.0])));

    for method in [
        BatchMethod::Adaptive { loss: LossKind::Exp, eta: 1.0 },
        BatchMethod::Adaptive { loss: LossKind::Log, eta: 100.0 },
        BatchMethod::Constant { loss: LossKind::Exp, eta: 1.0 },
        BatchMethod::Constant { loss: LossKind::Log, eta: 10.0 },
    ] {
        checks.push(NamedCheck::new("batch-lower-bound", move || check_batch_lower_bound(0.05, 1 << 20, method, 1.0)));
        checks.push(NamedCheck::new("alternate-lower-bound", move || check_alternate_lower_bound(0.001, 100, method, 1.0)));
    }

    for method in [
        OnlineMethod::Perceptron,
        OnlineMethod::Sgd { loss: LossKind::Log, eta: 1.0 },
        OnlineMethod::Sgd { loss: LossKind::Exp, eta: 5.0 },
    ] {
        for (gamma, n) in [(0.4, 10), (0.1, 20), (0.1, 200), (0.2, 5), (0.45, 3)] {
            checks.push(NamedCheck::new("online-lower-bound", move || check_online_lower_bound(gamma, n, method, 0.0, 7)));
        }
        checks.push(NamedCheck::new("online-lower-bound", move || check_online_lower_bound(0.3, 30, method, 2.5, 11)));
    }
    for (gamma, seed) in [(0.25, 0u64), (0.1, 1), (0.05, 2)] {
        checks.push(NamedCheck::new("mistake-bound", move || {
            let ds = gen_random_separable(DIM, SAMPLES, gamma, seed).expect("valid");
            check_mistake_bound(&ds, &OrderSpec::Random(seed), 100_000)
        }));
    }

    for kind in [LossKind::Exp, LossKind::Log, LossKind::Poly(2.0), LossKind::SemiCircle] {
        checks.push(NamedCheck::new("lemmas", move || {
            let ds = gen_random_separable(5, 20, 0.1, 3).expect("valid");
            check_lemmas(&ds, &LossSpec::new(kind, 20).expect("valid"), 10_000, 17)
        }));
    }

    for eta in [8.0, 80.0, 800.0] {
        checks.push(NamedCheck::new("network-bound", move || {
            let ds = gen_random_separable(DIM, SAMPLES, 0.2, 0).expect("valid");
            let net = TwoLayerNet::zeros(DIM, 4, Activation::leaky_relu(0.5).expect("valid")).expect("valid");
            check_network_bound(&ds, &net, &LossSpec::exp(SAMPLES), eta, horizon(0.2))
        }));
    }
    for act in shipped_activations() {
        checks.push(NamedCheck::new("activation-grid", move || check_activation_grid(&act)));
        for kind in [LossKind::Exp, LossKind::Log] {
            checks.push(NamedCheck::new("network-lemmas", move || {
                let ds = gen_random_separable(5, 20, 0.1, 4).expect("valid");
                check_network_lemmas(&ds, 4, act, &LossSpec::new(kind, 20).expect("valid"), 500, 23)
            }));
        }
    }
    checks
}

/// Leaky ReLU at `α = 0.5` and each leaky variant at `c = 0.7`.
pub fn shipped_activations() -> Vec<Activation> {
    let mut v = vec![Activation::leaky_relu(0.5).expect("valid")];
    for base in [BaseActivation::Gelu, BaseActivation::Softplus, BaseActivation::Silu, BaseActivation::Relu] {
        v.push(Activation::leaky_variant(0.7, base).expect("valid"));
    }
    v
}

/// Two `+1` points, one with negative overlap with the mean: `x̄ = (0.1, 0.25)`
/// and `x₂ᵀx̄ = -0.09`.
pub fn cap_instance() -> Dataset {
    Dataset::new(
        2,
        vec![0.1, 0.9, 0.1, -0.4],
        vec![1.0, 1.0],
        Certificate { gamma: 0.1, w_star: vec![1.0, 0.0] },
        "cap-instance",
    )
    .expect("valid")
}

/// Runs checks in parallel and orders the reports by claim and context.
pub fn run_suite(checks: Vec<NamedCheck>) -> Vec<BoundReport> {
    let mut out: Vec<BoundReport> = checks.into_par_iter().map(|c| (c.run)()).collect();
    out.sort_by(|a, b| (a.claim.as_str(), a.context.as_str()).cmp(&(b.claim.as_str(), b.context.as_str())));
    out
}

/// Checks hold no hidden state, so a second run must reproduce the report.
pub fn reproduces(check: &NamedCheck) -> bool {
    (check.run)() == (check.run)()
}
