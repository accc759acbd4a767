//! Two-layer networks `f(w; x) = (1/m) Σ_j a_j σ(xᵀ w_j)` with a fixed sign
//! output layer and leaky activations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::descent::{self, GdConfig, Model, RiskValue, StepsizeMode, Trajectory};
use crate::error::{check_dim, Error, Result};
use crate::losses::{LossKind, LossSpec};
use crate::numeric::{dot, sigmoid, softplus};

/// Grid used to measure and check activation constants: `[-1000, 1000]`, step `0.01`.
pub const GRID_HALF_WIDTH: f64 = 1000.0;
pub const GRID_STEP: f64 = 0.01;
const HEADROOM: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseActivation {
    Gelu,
    Softplus,
    Silu,
    Relu,
}

impl BaseActivation {
    pub fn eval(self, z: f64) -> f64 {
        match self {
            BaseActivation::Gelu => z * std_normal_cdf(z),
            BaseActivation::Softplus => softplus(z),
            BaseActivation::Silu => z * sigmoid(z),
            BaseActivation::Relu => z.max(0.0),
        }
    }

    pub fn deriv(self, z: f64) -> f64 {
        match self {
            BaseActivation::Gelu => std_normal_cdf(z) + z * std_normal_pdf(z),
            BaseActivation::Softplus => sigmoid(z),
            BaseActivation::Silu => {
                let s = sigmoid(z);
                s + z * s * (1.0 - s)
            }
            // Right derivative at the kink.
            BaseActivation::Relu => {
                if z >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn name(self) -> &'static str {
        match self {
            BaseActivation::Gelu => "gelu",
            BaseActivation::Softplus => "softplus",
            BaseActivation::Silu => "silu",
            BaseActivation::Relu => "relu-variant",
        }
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationKind {
    /// `max{z, αz}` with `σ'(0) = 1`.
    LeakyRelu { alpha: f64 },
    /// `c·z + (1-c)/4 · σ*(z)`.
    LeakyVariant { c: f64, base: BaseActivation },
}

/// An activation together with its slope floor `α` and offset bound `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub kind: ActivationKind,
    pub alpha: f64,
    pub kappa: f64,
}

fn grid() -> impl Iterator<Item = f64> {
    let steps = (2.0 * GRID_HALF_WIDTH / GRID_STEP).round() as i64;
    (0..=steps).map(|i| -GRID_HALF_WIDTH + i as f64 * GRID_STEP)
}

impl Activation {
    pub fn leaky_relu(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { kind: ActivationKind::LeakyRelu { alpha }, alpha, kappa: 0.0 })
    }

    /// `α` and `κ` are measured on the check grid. `κ` gets 10% headroom;
    /// a negative minimum slope of `σ*` is likewise widened by 10% before it
    /// lowers `α`.
    pub fn leaky_variant(c: f64, base: BaseActivation) -> Result<Self> {
        if !(c > 0.5 && c < 1.0) {
            return Err(Error::Parameter(format!("c must lie in (0.5, 1), got {c}")));
        }
        let w = (1.0 - c) / 4.0;
        let mut min_slope = f64::INFINITY;
        let mut max_offset: f64 = 0.0;
        for z in grid() {
            let d = base.deriv(z);
            min_slope = min_slope.min(d);
            max_offset = max_offset.max((base.eval(z) - d * z).abs());
        }
        let alpha = c + w * (HEADROOM * min_slope).min(0.0);
        let kappa = HEADROOM * w * max_offset;
        Ok(Self { kind: ActivationKind::LeakyVariant { c, base }, alpha, kappa })
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self.kind {
            ActivationKind::LeakyRelu { alpha } => z.max(alpha * z),
            ActivationKind::LeakyVariant { c, base } => c * z + (1.0 - c) / 4.0 * base.eval(z),
        }
    }

    pub fn deriv(&self, z: f64) -> f64 {
        match self.kind {
            ActivationKind::LeakyRelu { alpha } => {
                if z >= 0.0 {
                    1.0
                } else {
                    alpha
                }
            }
            ActivationKind::LeakyVariant { c, base } => c + (1.0 - c) / 4.0 * base.deriv(z),
        }
    }

    /// Checks `σ' ∈ [α, 1]` and `|σ(z) - σ'(z) z| ≤ κ` on the grid shifted by
    /// `offset` (pass `0.0` for the measurement grid). Returns the worst
    /// violation, `≤ 0` when both hold.
    pub fn grid_violation(&self, offset: f64) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for z in grid().map(|z| z + offset) {
            let d = self.deriv(z);
            let off = (self.eval(z) - d * z).abs();
            // Offsets at |z| = 1000 carry ~1e-13 of cancellation error.
            let tol = 1e-12;
            worst = worst.max(self.alpha - d).max(d - 1.0).max(off - self.kappa - tol);
        }
        worst
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ActivationKind::LeakyRelu { alpha } => write!(f, "leakyrelu:{alpha}"),
            ActivationKind::LeakyVariant { c, base } => write!(f, "leaky-{}:{c}", base.name()),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    /// `leakyrelu:<alpha>`, `leaky-gelu:<c>`, `leaky-softplus:<c>`,
    /// `leaky-silu:<c>` or `leaky-relu-variant:<c>`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, value) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parameter(format!("activation needs a parameter: {s:?}")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("bad activation parameter {value:?}")))?;
        match name.trim().to_ascii_lowercase().as_str() {
            "leakyrelu" => Activation::leaky_relu(v),
            "leaky-gelu" => Activation::leaky_variant(v, BaseActivation::Gelu),
            "leaky-softplus" => Activation::leaky_variant(v, BaseActivation::Softplus),
            "leaky-silu" => Activation::leaky_variant(v, BaseActivation::Silu),
            "leaky-relu-variant" => Activation::leaky_variant(v, BaseActivation::Relu),
            other => Err(Error::Parameter(format!("unknown activation {other:?}"))),
        }
    }
}

/// Hidden weights are stored row-major, one row of length `d` per neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerNet {
    m: usize,
    d: usize,
    a: Vec<f64>,
    weights: Vec<f64>,
    activation: Activation,
}

impl TwoLayerNet {
    pub fn new(d: usize, a: Vec<f64>, weights: Vec<f64>, activation: Activation) -> Result<Self> {
        let m = a.len();
        if m == 0 || d == 0 {
            return Err(Error::Parameter("network needs m >= 1 and d >= 1".into()));
        }
        if let Some(bad) = a.iter().find(|&&s| s != 1.0 && s != -1.0) {
            return Err(Error::Parameter(format!("output signs must be +1 or -1, got {bad}")));
        }
        check_dim(m * d, weights.len())?;
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Domain("network weights must be finite".into()));
        }
        Ok(Self { m, d, a, weights, activation })
    }

    /// Zero hidden weights with signs alternating `+1, -1, +1, ...`.
    pub fn zeros(d: usize, m: usize, activation: Activation) -> Result<Self> {
        let a = (0..m).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        Self::new(d, a, vec![0.0; m * d], activation)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn signs(&self) -> &[f64] {
        &self.a
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn block(&self, j: usize) -> &[f64] {
        &self.weights[j * self.d..(j + 1) * self.d]
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.d, self.a.clone(), weights, self.activation)
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.d, x.len())?;
        Ok(forward_raw(&self.weights, &self.a, &self.activation, self.d, x))
    }
}

fn forward_raw(w: &[f64], a: &[f64], act: &Activation, d: usize, x: &[f64]) -> f64 {
    let m = a.len();
    let s: f64 = a.iter().enumerate().map(|(j, aj)| aj * act.eval(dot(x, &w[j * d..(j + 1) * d]))).sum();
    s / m as f64
}

fn ensure_nn_loss(loss: &LossSpec) -> Result<()> {
    match loss.kind {
        LossKind::Exp | LossKind::Log => Ok(()),
        other => Err(Error::Unsupported(format!("network risk supports exp and log losses, got {other}"))),
    }
}

struct NetModel<'a> {
    ds: &'a Dataset,
    a: &'a [f64],
    act: Activation,
}

impl Model for NetModel<'_> {
    fn param_len(&self) -> usize {
        self.a.len() * self.ds.dim()
    }

    fn margins(&self, w: &[f64]) -> Vec<f64> {
        let d = self.ds.dim();
        (0..self.ds.rows())
            .map(|i| self.ds.label(i) * forward_raw(w, self.a, &self.act, d, self.ds.row(i)))
            .collect()
    }

    fn multiplicities(&self) -> &[u64] {
        self.ds.multiplicities()
    }

    fn pullback(&self, w: &[f64], weights: &[f64]) -> Vec<f64> {
        let d = self.ds.dim();
        let m = self.a.len();
        let mut g = vec![0.0; m * d];
        for (i, &c) in weights.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let x = self.ds.row(i);
            let cy = c * self.ds.label(i) / m as f64;
            for j in 0..m {
                let block = j * d..(j + 1) * d;
                let s = cy * self.a[j] * self.act.deriv(dot(x, &w[block.clone()]));
                for (gk, xk) in g[block].iter_mut().zip(x) {
                    *gk += s * xk;
                }
            }
        }
        g
    }

    /// Each block of `∇φ` carries a `1/m`; the step is `η m ∇φ`.
    fn adaptive_scale(&self) -> f64 {
        self.a.len() as f64
    }
}

fn model<'a>(net: &'a TwoLayerNet, ds: &'a Dataset) -> Result<NetModel<'a>> {
    check_dim(net.d, ds.dim())?;
    Ok(NetModel { ds, a: &net.a, act: net.activation })
}

/// `L(w) = (1/n) Σ ℓ(y_i f(w; x_i))`.
pub fn nn_risk(net: &TwoLayerNet, ds: &Dataset, loss: &LossSpec) -> Result<RiskValue> {
    ensure_nn_loss(loss)?;
    let model = model(net, ds)?;
    let z = model.margins(&net.weights);
    Ok(RiskValue::from_log(descent::log_risk_of_margins(loss, &z, ds.multiplicities())))
}

/// `∇φ` as an `m × d` row-major matrix.
pub fn nn_grad_phi(net: &TwoLayerNet, ds: &Dataset, loss: &LossSpec) -> Result<Vec<f64>> {
    ensure_nn_loss(loss)?;
    let model = model(net, ds)?;
    let z = model.margins(&net.weights);
    let lr = descent::log_risk_of_margins(loss, &z, ds.multiplicities());
    let c = descent::phi_weights(loss, &z, ds.multiplicities(), lr);
    Ok(model.pullback(&net.weights, &c))
}

/// `φ(w) = -ℓ⁻¹(L(w))` for the network.
pub fn nn_phi(net: &TwoLayerNet, ds: &Dataset, loss: &LossSpec) -> Result<f64> {
    Ok(loss.neg_inverse_from_ln(nn_risk(net, ds, loss)?.log_value))
}

/// Adaptive GD on the hidden weights, starting from `net0`. The update is
/// `w ← w - η m ∇φ(w)`. `cfg.init` is ignored; records carry flattened
/// weights and `min_log_risk` is the running minimum.
pub fn run_gd_nn(ds: &Dataset, net0: &TwoLayerNet, cfg: &GdConfig) -> Result<Trajectory> {
    ensure_nn_loss(&cfg.loss)?;
    if !matches!(cfg.mode, StepsizeMode::Adaptive(_)) {
        return Err(Error::Unsupported("network runs use the adaptive stepsize".into()));
    }
    let model = model(net0, ds)?;
    let mut cfg = cfg.clone();
    cfg.init = Some(net0.weights.clone());
    descent::run_descent(&model, &cfg)
}

/// `κ - ((αγ²(t+1))² - 1) / (4γ²(t+1)) · η`, the log of the bound on
/// `min_{k≤t} L(w_k)`.
pub fn network_log_bound(alpha: f64, kappa: f64, gamma: f64, eta: f64, t: usize) -> f64 {
    let g2t = gamma * gamma * (t as f64 + 1.0);
    let x = alpha * g2t;
    kappa - (x * x - 1.0) / (4.0 * g2t) * eta
}

/// `2⟨m∇φ, u₂⟩ + η‖m∇φ‖²` with blocks `u₂⁽ʲ⁾ = (a_j η / 2γ) w*`; at most zero.
pub fn network_key_inequality(net: &TwoLayerNet, ds: &Dataset, loss: &LossSpec, eta: f64) -> Result<f64> {
    let g = nn_grad_phi(net, ds, loss)?;
    let m = net.m as f64;
    let cert = ds.certificate();
    let mut inner = 0.0;
    let mut sq = 0.0;
    for j in 0..net.m {
        let blk = &g[j * net.d..(j + 1) * net.d];
        let scale = net.a[j] * eta / (2.0 * cert.gamma);
        inner += m * scale * dot(blk, &cert.w_star);
        sq += m * m * dot(blk, blk);
    }
    Ok(2.0 * inner + eta * sq)
}

/// Returns `(⟨∇φ(w), u₁ - w⟩, κ - (αγ/m) Σ‖u₁⁽ʲ⁾‖ - φ(w))` for blocks
/// `u₁⁽ʲ⁾ = scales_j a_j w*`; the first is at most the second.
pub fn network_comparator_inequality(
    net: &TwoLayerNet,
    ds: &Dataset,
    loss: &LossSpec,
    scales: &[f64],
) -> Result<(f64, f64)> {
    check_dim(net.m, scales.len())?;
    let g = nn_grad_phi(net, ds, loss)?;
    let cert = ds.certificate();
    let wn = dot(&cert.w_star, &cert.w_star).sqrt();
    let mut lhs = 0.0;
    let mut norms = 0.0;
    for j in 0..net.m {
        let blk = &g[j * net.d..(j + 1) * net.d];
        let wj = net.block(j);
        for k in 0..net.d {
            let u = scales[j] * net.a[j] * cert.w_star[k];
            lhs += blk[k] * (u - wj[k]);
        }
        norms += scales[j].abs() * wn;
    }
    let act = net.activation;
    let rhs = act.kappa - act.alpha * cert.gamma / net.m as f64 * norms - nn_phi(net, ds, loss)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gen_random_separable, Certificate};
    use crate::descent::run_gd;
    use crate::numeric::norm;

    fn relu(alpha: f64) -> Activation {
        Activation::leaky_relu(alpha).unwrap()
    }

    #[test]
    fn forward_examples() {
        let zero = TwoLayerNet::zeros(2, 3, relu(0.5)).unwrap();
        assert_eq!(zero.forward(&[0.3, -2.0]).unwrap(), 0.0);
        let one = TwoLayerNet::new(2, vec![1.0], vec![1.0, 0.0], relu(0.5)).unwrap();
        assert_eq!(one.forward(&[1.0, 0.0]).unwrap(), 1.0);
        let twin = TwoLayerNet::new(2, vec![1.0, -1.0], vec![0.4, -0.7, 0.4, -0.7], relu(0.5)).unwrap();
        assert_eq!(twin.forward(&[0.9, 0.1]).unwrap(), 0.0);
        assert!(matches!(one.forward(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn constructor_validation() {
        assert!(Activation::leaky_relu(1.0).is_err());
        assert!(Activation::leaky_variant(0.5, BaseActivation::Gelu).is_err());
        assert!(TwoLayerNet::new(2, vec![0.5], vec![0.0, 0.0], relu(0.5)).is_err());
        assert!(TwoLayerNet::new(2, vec![1.0], vec![f64::NAN, 0.0], relu(0.5)).is_err());
    }

    #[test]
    fn activation_parsing() {
        let a: Activation = "leakyrelu:0.3".parse().unwrap();
        assert_eq!(a.alpha, 0.3);
        assert_eq!(a.kappa, 0.0);
        for s in ["leaky-gelu:0.7", "leaky-softplus:0.7", "leaky-silu:0.7", "leaky-relu-variant:0.7"] {
            let a: Activation = s.parse().unwrap();
            assert_eq!(a.to_string(), s);
        }
        assert!("leaky-tanh:0.7".parse::<Activation>().is_err());
        assert!("leakyrelu".parse::<Activation>().is_err());
    }

    #[test]
    fn variant_constants_match_closed_forms() {
        let c = 0.7;
        let w = (1.0 - c) / 4.0;
        // GeLU: min slope at -√2, max |σ* - σ*' z| = 2φ(√2).
        let gelu = Activation::leaky_variant(c, BaseActivation::Gelu).unwrap();
        let s2 = std::f64::consts::SQRT_2;
        let min_slope = std_normal_cdf(-s2) - s2 * std_normal_pdf(s2);
        assert!((gelu.alpha - (c + w * 1.1 * min_slope)).abs() < 1e-6);
        assert!((gelu.kappa - 1.1 * w * 2.0 * std_normal_pdf(s2)).abs() < 1e-6);
        // Softplus: slopes are positive, offset peaks at ln 2.
        let sp = Activation::leaky_variant(c, BaseActivation::Softplus).unwrap();
        assert_eq!(sp.alpha, c);
        assert!((sp.kappa - 1.1 * w * 2f64.ln()).abs() < 1e-12);
        let rv = Activation::leaky_variant(c, BaseActivation::Relu).unwrap();
        assert_eq!((rv.alpha, rv.kappa), (c, 0.0));
    }

    #[test]
    fn grid_checks_pass_for_shipped_activations() {
        let mut acts = vec![relu(0.5), relu(0.1)];
        for base in [BaseActivation::Gelu, BaseActivation::Softplus, BaseActivation::Silu, BaseActivation::Relu] {
            acts.push(Activation::leaky_variant(0.6, base).unwrap());
        }
        for a in acts {
            assert!(a.grid_violation(0.0) <= 0.0, "{a}");
            assert!(a.grid_violation(0.005) <= 0.0, "{a}");
        }
    }

    #[test]
    fn zero_net_single_point_gradient() {
        let ds = Dataset::new(2, vec![0.6, 0.8], vec![-1.0], Certificate { gamma: 1.0, w_star: vec![-0.6, -0.8] }, "p")
            .unwrap();
        let net = TwoLayerNet::zeros(2, 4, relu(0.5)).unwrap();
        let g = nn_grad_phi(&net, &ds, &LossSpec::exp(1)).unwrap();
        for j in 0..4 {
            let a = net.signs()[j];
            for k in 0..2 {
                let expect = -(a / 4.0) * (-1.0) * ds.row(0)[k];
                assert!((g[j * 2 + k] - expect).abs() < 1e-15);
            }
        }
    }

    fn brute_risk(net: &TwoLayerNet, ds: &Dataset, loss: &LossSpec) -> f64 {
        (0..ds.rows())
            .map(|i| loss.eval(ds.label(i) * net.forward(ds.row(i)).unwrap()).unwrap())
            .sum::<f64>()
            / ds.rows() as f64
    }

    #[test]
    fn grad_phi_matches_finite_differences_away_from_kinks() {
        let ds = gen_random_separable(5, 20, 0.1, 3).unwrap();
        let w0: Vec<f64> = (0..20).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.13).collect();
        let net = TwoLayerNet::new(5, vec![1.0, -1.0, 1.0, -1.0], w0, relu(0.5)).unwrap();
        for j in 0..4 {
            for i in 0..20 {
                assert!(dot(ds.row(i), net.block(j)).abs() > 1e-3, "probe sits on a kink");
            }
        }
        for loss in [LossSpec::exp(20), LossSpec::log(20)] {
            let g = nn_grad_phi(&net, &ds, &loss).unwrap();
            let phi = |w: &[f64]| -> f64 {
                let n = net.with_weights(w.to_vec()).unwrap();
                -loss.inverse(brute_risk(&n, &ds, &loss)).unwrap()
            };
            let h = 1e-6;
            let mut fd = vec![0.0; 20];
            for k in 0..20 {
                let mut a = net.weights().to_vec();
                let mut b = a.clone();
                a[k] += h;
                b[k] -= h;
                fd[k] = (phi(&a) - phi(&b)) / (2.0 * h);
            }
            let err: Vec<f64> = g.iter().zip(&fd).map(|(x, y)| x - y).collect();
            assert!(norm(&err) <= 1e-5 * norm(&g), "{g:?} vs {fd:?}");
        }
    }

    #[test]
    fn per_block_gradient_norm_is_bounded() {
        let ds = gen_random_separable(5, 20, 0.1, 8).unwrap();
        for seed in 0..20u64 {
            let w: Vec<f64> = (0..20).map(|i| (((seed * 31 + i * 17) % 23) as f64 - 11.0) * 0.9).collect();
            let net = TwoLayerNet::new(5, vec![1.0, -1.0, 1.0, 1.0], w, relu(0.3)).unwrap();
            let g = nn_grad_phi(&net, &ds, &LossSpec::log(20)).unwrap();
            for j in 0..4 {
                assert!(4.0 * norm(&g[j * 5..j * 5 + 5]) <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn zero_steps_and_unsupported_inputs() {
        let ds = gen_random_separable(3, 10, 0.2, 1).unwrap();
        let net = TwoLayerNet::zeros(3, 2, relu(0.5)).unwrap();
        let r = nn_risk(&net, &ds, &LossSpec::log(10)).unwrap();
        assert!((r.value - 2f64.ln()).abs() < 1e-15);
        let poly = LossSpec::new(LossKind::Poly(2.0), 10).unwrap();
        assert!(matches!(nn_risk(&net, &ds, &poly), Err(Error::Unsupported(_))));
        let cfg = GdConfig::constant(LossSpec::exp(10), 1.0, 3);
        assert!(run_gd_nn(&ds, &net, &cfg).is_err());
    }

    #[test]
    fn near_linear_network_tracks_linear_gd() {
        let ds = gen_random_separable(4, 30, 0.2, 6).unwrap();
        let net = TwoLayerNet::new(4, vec![1.0], vec![0.0; 4], relu(0.999999)).unwrap();
        let cfg = GdConfig::adaptive(LossSpec::exp(30), 2.0, 40);
        let nn = run_gd_nn(&ds, &net, &cfg).unwrap();
        let lin = run_gd(&ds, &cfg).unwrap();
        for (a, b) in nn.records.iter().zip(&lin.records) {
            for (x, y) in a.iterate.iter().zip(&b.iterate) {
                assert!((x - y).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn bound_examples() {
        assert!(network_log_bound(0.5, 0.0, 0.2, 3.0, 49).abs() < 1e-12);
        assert!((network_log_bound(0.5, 0.0, 0.2, 8.0, 99) - (-1.5)).abs() < 1e-12);
        for t in [1, 10, 300] {
            let a = network_log_bound(1.0, 0.0, 0.1, 8.0, t);
            let b = descent::averaged_risk_log_bound(0.1, 8.0, t);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn network_bound_holds_on_running_minimum() {
        let ds = gen_random_separable(6, 40, 0.2, 2).unwrap();
        let net = TwoLayerNet::zeros(6, 4, relu(0.5)).unwrap();
        let traj = run_gd_nn(&ds, &net, &GdConfig::adaptive(LossSpec::exp(40), 80.0, 120)).unwrap();
        for r in traj.records.iter().skip(1) {
            assert!(r.min_log_risk <= network_log_bound(0.5, 0.0, 0.2, 80.0, r.t) + 1e-6, "t={}", r.t);
        }
    }

    #[test]
    fn lemma_inequalities_on_probes() {
        let ds = gen_random_separable(5, 20, 0.1, 12).unwrap();
        let act = Activation::leaky_variant(0.7, BaseActivation::Gelu).unwrap();
        for seed in 0..10u64 {
            let w: Vec<f64> = (0..15).map(|i| (((seed * 13 + i * 7) % 19) as f64 - 9.0) * 0.5).collect();
            let net = TwoLayerNet::new(5, vec![1.0, -1.0, 1.0], w, act).unwrap();
            for loss in [LossSpec::exp(20), LossSpec::log(20)] {
                for eta in [0.1, 10.0, 1000.0] {
                    assert!(network_key_inequality(&net, &ds, &loss, eta).unwrap() <= 1e-12 * eta.max(1.0));
                }
                let (lhs, rhs) = network_comparator_inequality(&net, &ds, &loss, &[0.5, 2.0, 7.0]).unwrap();
                assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
            }
        }
    }
}
