//! Linear-model risk, the adaptive scheduler, and gradient descent runs.
//!
//! Risks are carried as `(value, ln value)`. With large base stepsizes the
//! risk drops below `e^{-700}` within a few steps, where both the risk and
//! its gradient underflow while the adaptive stepsize overflows. The adaptive
//! update is therefore taken directly along `∇φ`, whose per-sample weights
//! are formed in log space and are bounded by the Lipschitz constant of `φ`.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::losses::LossSpec;
use crate::numeric::{dot, log_sum_exp};

/// Empirical risk in both linear and log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskValue {
    /// May underflow to zero.
    pub value: f64,
    pub log_value: f64,
}

impl RiskValue {
    pub fn from_log(log_value: f64) -> Self {
        Self { value: log_value.exp(), log_value }
    }
}

/// A stepsize that may exceed the double range; `value` is `inf` then.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stepsize {
    pub value: f64,
    pub log_value: f64,
}

impl Stepsize {
    pub fn from_log(log_value: f64) -> Self {
        Self { value: log_value.exp(), log_value }
    }
}

// ---- weighted-margin kernels, shared with the two-layer model ---------------

/// `ln L` from per-row margins `z_i` with multiplicities.
pub(crate) fn log_risk_of_margins(loss: &LossSpec, margins: &[f64], mult: &[u64]) -> f64 {
    let total: u64 = mult.iter().sum();
    let terms: Vec<f64> = margins
        .iter()
        .zip(mult)
        .map(|(&z, &m)| (m as f64).ln() + loss.ln_eval(z))
        .collect();
    log_sum_exp(&terms) - (total as f64).ln()
}

/// Per-row weights `c_i` with `∇φ = Σ c_i ∂z_i/∂w`:
/// `c_i = m_i · (-ℓ⁻¹)'(L) · ℓ'(z_i) / N`, formed in log space.
pub(crate) fn phi_weights(loss: &LossSpec, margins: &[f64], mult: &[u64], log_risk: f64) -> Vec<f64> {
    let total: u64 = mult.iter().sum();
    let shift = loss.ln_neg_inv_deriv(log_risk) - (total as f64).ln();
    margins
        .iter()
        .zip(mult)
        .map(|(&z, &m)| -(m as f64) * (shift + loss.ln_neg_deriv(z)).exp())
        .collect()
}

/// Per-row weights `m_i · ℓ'(z_i) / N` of the plain risk gradient.
pub(crate) fn risk_weights(loss: &LossSpec, margins: &[f64], mult: &[u64]) -> Vec<f64> {
    let total: u64 = mult.iter().sum();
    let shift = -(total as f64).ln();
    margins
        .iter()
        .zip(mult)
        .map(|(&z, &m)| -(m as f64) * (shift + loss.ln_neg_deriv(z)).exp())
        .collect()
}

/// `Σ_i c_i y_i x_i`.
fn combine_rows(ds: &Dataset, weights: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; ds.dim()];
    for (i, &c) in weights.iter().enumerate() {
        let cy = c * ds.label(i);
        if cy == 0.0 {
            continue;
        }
        for (gj, xj) in g.iter_mut().zip(ds.row(i)) {
            *gj += cy * xj;
        }
    }
    g
}

// ---- public evaluation -------------------------------------------------------

/// `L(w) = (1/n) Σ ℓ(y_i x_iᵀ w)`.
pub fn risk(w: &[f64], ds: &Dataset, loss: &LossSpec) -> Result<RiskValue> {
    loss.ensure_batch()?;
    let z = ds.margins(w)?;
    Ok(RiskValue::from_log(log_risk_of_margins(loss, &z, ds.multiplicities())))
}

/// `∇L(w)`; entries underflow to zero once the risk does.
pub fn grad_risk(w: &[f64], ds: &Dataset, loss: &LossSpec) -> Result<Vec<f64>> {
    loss.ensure_batch()?;
    let z = ds.margins(w)?;
    Ok(combine_rows(ds, &risk_weights(loss, &z, ds.multiplicities())))
}

/// `φ(w) = -ℓ⁻¹(L(w))`.
pub fn phi(w: &[f64], ds: &Dataset, loss: &LossSpec) -> Result<f64> {
    let r = risk(w, ds, loss)?;
    Ok(loss.neg_inverse_from_ln(r.log_value))
}

/// `∇φ(w) = (-ℓ⁻¹)'(L(w)) ∇L(w)`, stable at any risk level.
pub fn grad_phi(w: &[f64], ds: &Dataset, loss: &LossSpec) -> Result<Vec<f64>> {
    loss.ensure_batch()?;
    let z = ds.margins(w)?;
    let lr = log_risk_of_margins(loss, &z, ds.multiplicities());
    Ok(combine_rows(ds, &phi_weights(loss, &z, ds.multiplicities(), lr)))
}

/// `η_t = η · (-ℓ⁻¹)'(L(w_t))`, evaluated from the log-risk.
pub fn adaptive_stepsize(loss: &LossSpec, risk: &RiskValue, eta: f64) -> Result<Stepsize> {
    loss.ensure_batch()?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Parameter(format!("eta must be positive, got {eta}")));
    }
    if !risk.log_value.is_finite() {
        return Err(Error::Domain(format!("log-risk must be finite, got {}", risk.log_value)));
    }
    Ok(Stepsize::from_log(eta.ln() + loss.ln_neg_inv_deriv(risk.log_value)))
}

// ---- runs --------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "eta", rename_all = "lowercase")]
pub enum StepsizeMode {
    /// `w ← w - η ∇L(w)`.
    Constant(f64),
    /// `w ← w - η ∇φ(w)`, i.e. stepsize `η (-ℓ⁻¹)'(L(w))` on the risk.
    Adaptive(f64),
}

impl StepsizeMode {
    pub fn eta(&self) -> f64 {
        match *self {
            StepsizeMode::Constant(e) | StepsizeMode::Adaptive(e) => e,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdConfig {
    pub mode: StepsizeMode,
    pub loss: LossSpec,
    pub steps: usize,
    /// Defaults to the origin.
    pub init: Option<Vec<f64>>,
    pub record_every: usize,
    /// Ends the run (recording that step) once the rule holds.
    pub stop: Option<StopRule>,
}

/// Early-exit conditions, checked after each step is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// `ln L(w̄_t) ≤ ln_eps`.
    AvgLogRiskBelow(f64),
    /// `min_i y_i x_iᵀ w̄_t > 0`.
    AvgSeparates,
    /// `min_i y_i x_iᵀ w_t > 0`.
    IterateSeparates,
}

impl GdConfig {
    pub fn adaptive(loss: LossSpec, eta: f64, steps: usize) -> Self {
        Self { mode: StepsizeMode::Adaptive(eta), loss, steps, init: None, record_every: 1, stop: None }
    }

    pub fn constant(loss: LossSpec, eta: f64, steps: usize) -> Self {
        Self { mode: StepsizeMode::Constant(eta), loss, steps, init: None, record_every: 1, stop: None }
    }

    pub fn with_init(mut self, init: Vec<f64>) -> Self {
        self.init = Some(init);
        self
    }

    pub fn with_stop(mut self, rule: StopRule) -> Self {
        self.stop = Some(rule);
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let eta = self.mode.eta();
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Parameter("eta must be positive".into()));
        }
        if self.steps == 0 {
            return Err(Error::Parameter("steps must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Parameter("record_every must be at least 1".into()));
        }
        self.loss.ensure_batch()
    }

    /// True when the run starts away from the origin, where the risk bounds
    /// are not stated.
    pub fn nonzero_init(&self) -> bool {
        self.init.as_ref().is_some_and(|w| w.iter().any(|&v| v != 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    /// The iterate became non-finite when computing step `step`.
    Diverged { step: usize },
}

/// One recorded step of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub iterate: Vec<f64>,
    pub risk: RiskValue,
    /// `φ(w_t)`.
    pub phi: f64,
    /// Stepsize used to leave `w_t` (the effective risk stepsize for adaptive runs).
    pub log_eta: f64,
    pub min_margin: f64,
    /// `(1/(t+1)) Σ_{k≤t} w_k`.
    pub avg_iterate: Vec<f64>,
    pub avg_risk: RiskValue,
    pub avg_min_margin: f64,
    /// `min_{k≤t} ln L(w_k)`, tracked over every step, not only recorded ones.
    pub min_log_risk: f64,
    /// `L(w_t) > L(w_{t-1})`.
    pub descent_violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub status: RunStatus,
    /// Whether any step (recorded or not) increased the risk.
    pub any_descent_violation: bool,
}

impl Trajectory {
    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("a trajectory always holds the initial record")
    }

    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }
}

/// A differentiable model driven by [`run_descent`]: parameters are a flat
/// vector, and the per-example margins and `∇φ` are all the loop needs.
pub(crate) trait Model {
    fn param_len(&self) -> usize;
    fn margins(&self, w: &[f64]) -> Vec<f64>;
    fn multiplicities(&self) -> &[u64];
    /// Gradient of `Σ_i weights_i · z_i(w)`.
    fn pullback(&self, w: &[f64], weights: &[f64]) -> Vec<f64>;
    /// Multiplier applied to `η ∇φ` in adaptive mode.
    fn adaptive_scale(&self) -> f64 {
        1.0
    }
}

struct LinearModel<'a>(&'a Dataset);

impl Model for LinearModel<'_> {
    fn param_len(&self) -> usize {
        self.0.dim()
    }
    fn margins(&self, w: &[f64]) -> Vec<f64> {
        (0..self.0.rows()).map(|i| self.0.label(i) * dot(self.0.row(i), w)).collect()
    }
    fn multiplicities(&self) -> &[u64] {
        self.0.multiplicities()
    }
    fn pullback(&self, _w: &[f64], weights: &[f64]) -> Vec<f64> {
        combine_rows(self.0, weights)
    }
}

/// Runs GD on a linear model.
pub fn run_gd(ds: &Dataset, cfg: &GdConfig) -> Result<Trajectory> {
    run_descent(&LinearModel(ds), cfg)
}

pub(crate) fn run_descent<M: Model>(model: &M, cfg: &GdConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let p = model.param_len();
    let loss = &cfg.loss;
    let mult = model.multiplicities();
    let mut w = match &cfg.init {
        Some(init) => {
            check_dim(p, init.len())?;
            init.clone()
        }
        None => vec![0.0; p],
    };
    let eta = cfg.mode.eta();
    let mut sum = vec![0.0; p];
    let mut records = Vec::new();
    let mut prev_log_risk = f64::NAN;
    let mut min_log_risk = f64::INFINITY;
    let mut any_violation = false;
    let mut status = RunStatus::Completed;

    for t in 0..=cfg.steps {
        for (s, wi) in sum.iter_mut().zip(&w) {
            *s += wi;
        }
        let z = model.margins(&w);
        let log_risk = log_risk_of_margins(loss, &z, mult);
        let violated = t > 0 && log_risk > prev_log_risk;
        any_violation |= violated;
        min_log_risk = min_log_risk.min(log_risk);
        prev_log_risk = log_risk;

        let log_eta = match cfg.mode {
            StepsizeMode::Constant(e) => e.ln(),
            StepsizeMode::Adaptive(e) => e.ln() + loss.ln_neg_inv_deriv(log_risk),
        };

        let min_margin = z.iter().copied().fold(f64::INFINITY, f64::min);
        let mut stop = false;
        let mut avg_parts = None;
        if let Some(rule) = cfg.stop {
            let avg: Vec<f64> = sum.iter().map(|s| s / (t + 1) as f64).collect();
            let za = model.margins(&avg);
            let avg_log_risk = log_risk_of_margins(loss, &za, mult);
            let avg_min = za.iter().copied().fold(f64::INFINITY, f64::min);
            stop = match rule {
                StopRule::AvgLogRiskBelow(ln_eps) => avg_log_risk <= ln_eps,
                StopRule::AvgSeparates => avg_min > 0.0,
                StopRule::IterateSeparates => min_margin > 0.0,
            };
            avg_parts = Some((avg, avg_log_risk, avg_min));
        }
        if stop || t % cfg.record_every == 0 || t == cfg.steps {
            let (avg, avg_log_risk, avg_min) = avg_parts.unwrap_or_else(|| {
                let avg: Vec<f64> = sum.iter().map(|s| s / (t + 1) as f64).collect();
                let za = model.margins(&avg);
                let lr = log_risk_of_margins(loss, &za, mult);
                (avg, lr, za.iter().copied().fold(f64::INFINITY, f64::min))
            });
            records.push(StepRecord {
                t,
                iterate: w.clone(),
                risk: RiskValue::from_log(log_risk),
                phi: loss.neg_inverse_from_ln(log_risk),
                log_eta,
                min_margin,
                avg_risk: RiskValue::from_log(avg_log_risk),
                avg_min_margin: avg_min,
                avg_iterate: avg,
                min_log_risk,
                descent_violated: violated,
            });
        }
        if stop || t == cfg.steps {
            break;
        }

        let (weights, step) = match cfg.mode {
            StepsizeMode::Adaptive(_) => {
                (phi_weights(loss, &z, mult, log_risk), eta * model.adaptive_scale())
            }
            StepsizeMode::Constant(_) => (risk_weights(loss, &z, mult), eta),
        };
        let g = model.pullback(&w, &weights);
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= step * gi;
        }
        if w.iter().any(|v| !v.is_finite()) {
            status = RunStatus::Diverged { step: t + 1 };
            break;
        }
    }

    Ok(Trajectory { records, status, any_descent_violation: any_violation })
}

// ---- closed-form bounds ------------------------------------------------------

/// Log of the averaged-iterate risk bound for exponential and logistic loss:
/// `-((γ²(t+1))² - 1) / (4γ²(t+1)) · η`. Positive (vacuous) while `γ²(t+1) < 1`.
pub fn averaged_risk_log_bound(gamma: f64, eta: f64, t: usize) -> f64 {
    let x = gamma * gamma * (t as f64 + 1.0);
    -(x * x - 1.0) / (4.0 * x) * eta
}

/// Argument `A = ((γ²(t+1))² - C_ℓ) / (4γ²(t+1)) · η` at which the loss is
/// evaluated to bound the averaged-iterate risk.
pub fn general_loss_bound_arg(loss: &LossSpec, gamma: f64, eta: f64, t: usize) -> Result<f64> {
    let c = loss.lipschitz_const()?;
    let x = gamma * gamma * (t as f64 + 1.0);
    Ok((x * x - c) / (4.0 * x) * eta)
}

/// `ℓ(A)` with `A` from [`general_loss_bound_arg`].
pub fn general_loss_bound(loss: &LossSpec, gamma: f64, eta: f64, t: usize) -> Result<f64> {
    loss.eval(general_loss_bound_arg(loss, gamma, eta, t)?)
}

/// `ln ℓ(A)`; finite even when `ℓ(A)` underflows.
pub fn general_loss_log_bound(loss: &LossSpec, gamma: f64, eta: f64, t: usize) -> Result<f64> {
    loss.ensure_batch()?;
    Ok(loss.ln_eval(general_loss_bound_arg(loss, gamma, eta, t)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gen_random_separable, gen_stable2pt, Certificate};
    use crate::losses::LossKind;
    use crate::numeric::norm;

    fn single_point(x: Vec<f64>, y: f64) -> Dataset {
        let d = x.len();
        let mut w = vec![0.0; d];
        w[0] = 1.0;
        Dataset::new(d, x, vec![y], Certificate { gamma: 1.0, w_star: w }, "single").unwrap()
    }

    /// Oracle: direct summation of the loss over rows.
    fn brute_risk(w: &[f64], ds: &Dataset, loss: &LossSpec) -> f64 {
        let mut s = 0.0;
        for i in 0..ds.rows() {
            s += ds.multiplicity(i) as f64 * loss.eval(ds.label(i) * dot(ds.row(i), w)).unwrap();
        }
        s / ds.len() as f64
    }

    #[test]
    fn risk_at_origin() {
        let ds = gen_random_separable(4, 9, 0.1, 1).unwrap();
        let w = vec![0.0; 4];
        assert!((risk(&w, &ds, &LossSpec::exp(9)).unwrap().value - 1.0).abs() < 1e-15);
        let r = risk(&w, &ds, &LossSpec::log(9)).unwrap();
        assert!((r.value - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn risk_log_value_survives_underflow() {
        let ds = single_point(vec![1.0, 0.0], 1.0);
        let r = risk(&[1000.0, 0.0], &ds, &LossSpec::exp(1)).unwrap();
        assert_eq!(r.log_value, -1000.0);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn risk_on_two_point_instance() {
        let ds = gen_stable2pt(0.05).unwrap();
        let loss = LossSpec::exp(2);
        let r = risk(&[1.0, 0.0], &ds, &loss).unwrap();
        let oracle = brute_risk(&[1.0, 0.0], &ds, &loss);
        assert!((r.value - oracle).abs() < 1e-15);
        assert!((r.value - 0.951229).abs() < 1e-6);
    }

    #[test]
    fn risk_rejects_dimension_mismatch_and_hinge() {
        let ds = gen_stable2pt(0.05).unwrap();
        assert!(matches!(risk(&[1.0], &ds, &LossSpec::exp(2)), Err(Error::Dimension { .. })));
        let hinge = LossSpec::new(LossKind::Hinge, 2).unwrap();
        assert!(matches!(risk(&[0.0, 0.0], &ds, &hinge), Err(Error::Unsupported(_))));
    }

    #[test]
    fn grad_at_origin_is_negative_mean() {
        let ds = gen_random_separable(3, 7, 0.1, 2).unwrap();
        let g = grad_risk(&[0.0; 3], &ds, &LossSpec::exp(7)).unwrap();
        let mut oracle = [0.0; 3];
        for i in 0..7 {
            for (o, x) in oracle.iter_mut().zip(ds.row(i)) {
                *o -= ds.label(i) * x / 7.0;
            }
        }
        for j in 0..3 {
            assert!((g[j] - oracle[j]).abs() < 1e-15);
        }
        let two = gen_stable2pt(0.05).unwrap();
        let g = grad_risk(&[0.0, 0.0], &two, &LossSpec::exp(2)).unwrap();
        assert!((g[0] + 0.05).abs() < 1e-16);
        assert!(g[1].abs() < 1e-16);
    }

    #[test]
    fn grad_risk_matches_finite_differences() {
        let ds = gen_random_separable(5, 20, 0.1, 11).unwrap();
        let w = [0.3, -1.2, 0.7, 0.05, -0.4];
        for kind in [LossKind::Exp, LossKind::Log, LossKind::Poly(2.0), LossKind::SemiCircle] {
            let loss = LossSpec::new(kind, 20).unwrap();
            let g = grad_risk(&w, &ds, &loss).unwrap();
            let h = 1e-6;
            let mut fd = vec![0.0; 5];
            for j in 0..5 {
                let mut a = w;
                let mut b = w;
                a[j] += h;
                b[j] -= h;
                fd[j] = (brute_risk(&a, &ds, &loss) - brute_risk(&b, &ds, &loss)) / (2.0 * h);
            }
            let err: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
            assert!(norm(&err) <= 1e-5 * norm(&g), "{kind}: {g:?} vs {fd:?}");
        }
    }

    #[test]
    fn grad_phi_single_point_is_constant() {
        let ds = single_point(vec![0.6, 0.8], -1.0);
        for w in [[0.0, 0.0], [50.0, -3.0], [-900.0, 1e4]] {
            let g = grad_phi(&w, &ds, &LossSpec::exp(1)).unwrap();
            assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15, "{g:?}");
        }
    }

    #[test]
    fn grad_phi_matches_scaled_grad_risk() {
        let ds = gen_random_separable(5, 20, 0.1, 4).unwrap();
        for kind in [LossKind::Exp, LossKind::Log, LossKind::Poly(2.0), LossKind::SemiCircle] {
            let loss = LossSpec::new(kind, 20).unwrap();
            for scale in [0.0, 0.5, 3.0, 40.0] {
                let w: Vec<f64> = ds.certificate().w_star.iter().map(|v| v * scale + 0.1).collect();
                let r = risk(&w, &ds, &loss).unwrap();
                assert!(r.value > 1e-200);
                let f = loss.neg_inv_deriv(r.value).unwrap();
                let gr = grad_risk(&w, &ds, &loss).unwrap();
                let gp = grad_phi(&w, &ds, &loss).unwrap();
                for (a, b) in gp.iter().zip(&gr) {
                    assert!((a - f * b).abs() <= 1e-8 * a.abs().max(1e-12), "{kind} {scale}");
                }
            }
        }
    }

    #[test]
    fn adaptive_stepsize_examples() {
        let s = adaptive_stepsize(&LossSpec::exp(1), &RiskValue::from_log(0.5f64.ln()), 2.0).unwrap();
        assert!((s.value - 4.0).abs() < 1e-14);
        let s = adaptive_stepsize(&LossSpec::log(1), &RiskValue::from_log(2f64.ln().ln()), 1.0).unwrap();
        assert!((s.value - 2.0).abs() < 1e-14);
        let s = adaptive_stepsize(&LossSpec::exp(1), &RiskValue::from_log(-800.0), 1.0).unwrap();
        assert_eq!(s.log_value, 800.0);
        assert_eq!(s.value, f64::INFINITY);
        assert!(adaptive_stepsize(&LossSpec::exp(1), &RiskValue::from_log(0.0), -1.0).is_err());
    }

    #[test]
    fn one_adaptive_step_on_single_point() {
        let ds = single_point(vec![1.0, 0.0], 1.0);
        let traj = run_gd(&ds, &GdConfig::adaptive(LossSpec::exp(1), 3.0, 1)).unwrap();
        assert_eq!(traj.records[1].iterate, vec![3.0, 0.0]);
        assert_eq!(traj.records[1].avg_iterate, vec![1.5, 0.0]);
    }

    #[test]
    fn first_adaptive_step_moves_along_the_mean() {
        let ds = gen_stable2pt(0.05).unwrap();
        for loss in [LossSpec::exp(2), LossSpec::log(2)] {
            let traj = run_gd(&ds, &GdConfig::adaptive(loss, 7.0, 1)).unwrap();
            let w1 = &traj.records[1].iterate;
            assert!((w1[0] - 7.0 * 0.05).abs() < 1e-14);
            assert!(w1[1].abs() < 1e-14);
        }
    }

    #[test]
    fn adaptive_step_equals_scheduled_risk_step() {
        let ds = gen_random_separable(6, 30, 0.1, 9).unwrap();
        let w: Vec<f64> = (0..6).map(|i| 0.3 * i as f64 - 0.7).collect();
        for loss in [LossSpec::exp(30), LossSpec::log(30)] {
            let eta = 5.0;
            let r = risk(&w, &ds, &loss).unwrap();
            let step = adaptive_stepsize(&loss, &r, eta).unwrap().value;
            let gr = grad_risk(&w, &ds, &loss).unwrap();
            let gp = grad_phi(&w, &ds, &loss).unwrap();
            for j in 0..6 {
                let a = w[j] - eta * gp[j];
                let b = w[j] - step * gr[j];
                assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn running_mean_and_phi_are_consistent() {
        let ds = gen_random_separable(4, 25, 0.2, 5).unwrap();
        let traj = run_gd(&ds, &GdConfig::adaptive(LossSpec::log(25), 2.0, 30)).unwrap();
        let mut sum = vec![0.0; 4];
        for (t, rec) in traj.records.iter().enumerate() {
            assert_eq!(rec.t, t);
            for (s, w) in sum.iter_mut().zip(&rec.iterate) {
                *s += w;
            }
            for (a, s) in rec.avg_iterate.iter().zip(&sum) {
                assert!((a - s / (t + 1) as f64).abs() < 1e-12);
            }
            let direct = -LossSpec::log(25).inverse(rec.risk.value).unwrap();
            assert!((rec.phi - direct).abs() <= 1e-8 * direct.abs().max(1e-300));
        }
    }

    #[test]
    fn record_every_keeps_final_step() {
        let ds = gen_random_separable(3, 10, 0.2, 5).unwrap();
        let cfg = GdConfig::adaptive(LossSpec::exp(10), 1.0, 10).with_record_every(4);
        let ts: Vec<usize> = run_gd(&ds, &cfg).unwrap().records.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0, 4, 8, 10]);
    }

    #[test]
    fn huge_eta_stays_finite_in_adaptive_mode() {
        let ds = gen_random_separable(10, 100, 0.1, 0).unwrap();
        let traj = run_gd(&ds, &GdConfig::adaptive(LossSpec::exp(100), 4000.0, 50)).unwrap();
        assert_eq!(traj.status, RunStatus::Completed);
        assert!(traj.last().risk.log_value.is_finite());
        assert!(traj.last().risk.log_value < -700.0);
    }

    #[test]
    fn constant_mode_divergence_is_reported() {
        // Two opposed points: a huge constant step throws one margin far
        // negative and the exponential gradient overflows.
        let ds = Dataset::new(
            2,
            vec![1.0, 0.0, -0.9, 0.1],
            vec![1.0, 1.0],
            Certificate { gamma: 0.009, w_star: vec![0.1, 0.994987] },
            "pair",
        )
        .unwrap();
        let traj = run_gd(&ds, &GdConfig::constant(LossSpec::exp(2), 1e6, 50)).unwrap();
        assert!(traj.diverged(), "{:?}", traj.status);
    }

    #[test]
    fn config_validation() {
        let loss = LossSpec::exp(1);
        assert!(GdConfig::adaptive(loss, -1.0, 3).validate().is_err());
        assert!(GdConfig::adaptive(loss, 1.0, 0).validate().is_err());
        assert!(GdConfig::adaptive(loss, 1.0, 3).with_record_every(0).validate().is_err());
        assert!(GdConfig::adaptive(loss, 1.0, 3).with_init(vec![0.0, 0.0]).validate().is_ok());
        assert!(!GdConfig::adaptive(loss, 1.0, 3).with_init(vec![0.0, 0.0]).nonzero_init());
    }

    #[test]
    fn averaged_bound_examples() {
        // γ²(t+1) = 1 gives a log-bound of exactly zero.
        assert!(averaged_risk_log_bound(0.1, 5.0, 99).abs() < 1e-12);
        assert!((averaged_risk_log_bound(0.1, 8.0, 199) - (-3.0)).abs() < 1e-12);
        for t in [100, 150, 1000] {
            assert!(averaged_risk_log_bound(0.1, 40.0, t) <= -0.01 * 40.0 / 4.0 + 1e-12);
        }
    }

    #[test]
    fn general_bound_examples() {
        let exp = LossSpec::exp(10);
        for t in [1, 50, 199, 500] {
            let g = general_loss_bound(&exp, 0.1, 8.0, t).unwrap();
            assert!((g.ln() - averaged_risk_log_bound(0.1, 8.0, t)).abs() < 1e-10);
        }
        let poly = LossSpec::new(LossKind::Poly(2.0), 16).unwrap();
        assert!((general_loss_bound(&poly, 0.1, 8.0, 199).unwrap() - 1.0).abs() < 1e-12);
        // Past C/γ² burn-in steps the bound is at most ℓ(γ²η/4).
        let gamma = 0.1;
        let burn = (poly.lipschitz_const().unwrap() / (gamma * gamma)).ceil() as usize;
        for t in [burn, burn + 10, 3 * burn] {
            let b = general_loss_bound(&poly, gamma, 8.0, t).unwrap();
            assert!(b <= poly.eval(gamma * gamma * 8.0 / 4.0).unwrap() + 1e-15);
        }
        let hinge = LossSpec::new(LossKind::Hinge, 4).unwrap();
        assert!(general_loss_bound(&hinge, 0.1, 1.0, 5).is_err());
    }

    #[test]
    fn stop_rule_ends_on_the_first_qualifying_step() {
        let ds = gen_random_separable(4, 20, 0.2, 3).unwrap();
        let loss = LossSpec::exp(20);
        let full = run_gd(&ds, &GdConfig::adaptive(loss, 30.0, 60)).unwrap();
        let ln_eps = -5.0;
        let first = full.records.iter().find(|r| r.avg_risk.log_value <= ln_eps).unwrap();
        let cut = GdConfig::adaptive(loss, 30.0, 60).with_record_every(1000).with_stop(StopRule::AvgLogRiskBelow(ln_eps));
        let stopped = run_gd(&ds, &cut).unwrap();
        assert_eq!(stopped.records.len(), 2);
        assert_eq!(stopped.last(), first);

        let sep = run_gd(&ds, &GdConfig::adaptive(loss, 30.0, 60).with_stop(StopRule::IterateSeparates)).unwrap();
        assert!(sep.last().min_margin > 0.0);
        assert!(sep.records[..sep.records.len() - 1].iter().all(|r| r.min_margin <= 0.0));
    }
}
