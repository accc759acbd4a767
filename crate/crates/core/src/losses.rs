//! Margin-based losses `ℓ(z)` and the transformed-objective primitives.
//!
//! Every batch loss here is positive, strictly decreasing and convex, with an
//! inverse on `(0, ∞)`. The adaptive scheduler needs `(-ℓ⁻¹)'` evaluated at
//! the empirical risk, which underflows long before the iterates stop moving,
//! so each primitive also has a log-domain twin taking `ln u` instead of `u`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{sigmoid, softplus};

/// Below this log-risk the plain value is treated as underflowed and
/// first-order expansions are used instead.
const LN_TINY: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "degree", rename_all = "lowercase")]
pub enum LossKind {
    /// `e^{-z}`
    Exp,
    /// `ln(1 + e^{-z})`
    Log,
    /// Two-branch polynomial loss of degree `k > 0`.
    Poly(f64),
    /// `(-z + sqrt(z^2 + 4)) / 2`
    SemiCircle,
    /// `max(0, -z)`; only meaningful for online methods.
    Hinge,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Exp => write!(f, "exp"),
            LossKind::Log => write!(f, "log"),
            LossKind::Poly(k) => write!(f, "poly:{k}"),
            LossKind::SemiCircle => write!(f, "semicircle"),
            LossKind::Hinge => write!(f, "hinge"),
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "exp" => Ok(LossKind::Exp),
            "log" => Ok(LossKind::Log),
            "semicircle" => Ok(LossKind::SemiCircle),
            "hinge" => Ok(LossKind::Hinge),
            _ => {
                let Some(k) = s.strip_prefix("poly:") else {
                    return Err(Error::Parameter(format!("unknown loss '{s}'")));
                };
                let k: f64 = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parameter(format!("bad polynomial degree '{k}'")))?;
                if !(k > 0.0 && k.is_finite()) {
                    return Err(Error::Parameter("k must be > 0".into()));
                }
                Ok(LossKind::Poly(k))
            }
        }
    }
}

/// A loss together with the sample count its Lipschitz constant depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    pub n: usize,
}

fn finite(z: f64) -> Result<f64> {
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::Domain(format!("argument must be finite, got {z}")))
    }
}

fn positive(u: f64) -> Result<f64> {
    if u > 0.0 && u.is_finite() {
        Ok(u)
    } else {
        Err(Error::Domain(format!("argument must be a positive finite real, got {u}")))
    }
}

impl LossSpec {
    pub fn new(kind: LossKind, n: usize) -> Result<Self> {
        if let LossKind::Poly(k) = kind {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Parameter("k must be > 0".into()));
            }
        }
        if n == 0 {
            return Err(Error::Parameter("sample count must be at least 1".into()));
        }
        Ok(Self { kind, n })
    }

    pub fn exp(n: usize) -> Self {
        Self { kind: LossKind::Exp, n }
    }

    pub fn log(n: usize) -> Self {
        Self { kind: LossKind::Log, n }
    }

    /// Same loss, different sample count.
    pub fn with_n(self, n: usize) -> Self {
        Self { n, ..self }
    }

    /// Whether the loss may drive batch (full-gradient) descent. Hinge is
    /// not differentiable and has no inverse on `(0, ∞)`.
    pub fn ensure_batch(&self) -> Result<()> {
        match self.kind {
            LossKind::Hinge => Err(Error::Unsupported(
                "hinge loss is only available to online methods".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        let z = finite(z)?;
        Ok(match self.kind {
            LossKind::Exp => (-z).exp(),
            LossKind::Log => softplus(-z),
            LossKind::Poly(k) => {
                if z >= 0.0 {
                    (1.0 + z).powf(-k)
                } else {
                    -2.0 * k * z + (1.0 - z).powf(-k)
                }
            }
            LossKind::SemiCircle => {
                let s = z.hypot(2.0);
                if z >= 0.0 {
                    2.0 / (z + s)
                } else {
                    (s - z) / 2.0
                }
            }
            LossKind::Hinge => (-z).max(0.0),
        })
    }

    /// `ℓ'(z)`. For hinge the kink takes the subgradient `-1`, so that a
    /// zero-margin example triggers an update.
    pub fn deriv(&self, z: f64) -> Result<f64> {
        let z = finite(z)?;
        Ok(match self.kind {
            LossKind::Exp => -(-z).exp(),
            LossKind::Log => -sigmoid(-z),
            LossKind::Poly(k) => {
                if z >= 0.0 {
                    -k * (1.0 + z).powf(-k - 1.0)
                } else {
                    -2.0 * k + k * (1.0 - z).powf(-k - 1.0)
                }
            }
            LossKind::SemiCircle => {
                let s = z.hypot(2.0);
                if z > 0.0 {
                    -2.0 / (s * (s + z))
                } else {
                    -(s - z) / (2.0 * s)
                }
            }
            LossKind::Hinge => {
                if z <= 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        })
    }

    /// `ℓ''(z)`; zero almost everywhere for hinge.
    pub fn deriv2(&self, z: f64) -> Result<f64> {
        let z = finite(z)?;
        Ok(match self.kind {
            LossKind::Exp => (-z).exp(),
            LossKind::Log => sigmoid(z) * sigmoid(-z),
            LossKind::Poly(k) => k * (k + 1.0) * (1.0 + z.abs()).powf(-k - 2.0),
            LossKind::SemiCircle => 2.0 / z.hypot(2.0).powi(3),
            LossKind::Hinge => 0.0,
        })
    }

    /// `ℓ⁻¹(u)` for `u > 0`.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        let u = positive(u)?;
        match self.kind {
            LossKind::Exp => Ok(-u.ln()),
            LossKind::Log => {
                if u > 700.0 {
                    Ok(-(u + (-(-u).exp()).ln_1p()))
                } else {
                    Ok(-u.exp_m1().ln())
                }
            }
            LossKind::Poly(k) => {
                if u <= 1.0 {
                    Ok(u.powf(-1.0 / k) - 1.0)
                } else {
                    Ok(poly_left_inverse(k, u))
                }
            }
            LossKind::SemiCircle => Ok(1.0 / u - u),
            LossKind::Hinge => Err(Error::Unsupported("hinge loss has no inverse".into())),
        }
    }

    /// `(-ℓ⁻¹)'(u)`, the factor the adaptive scheduler multiplies into `η`.
    pub fn neg_inv_deriv(&self, u: f64) -> Result<f64> {
        let u = positive(u)?;
        match self.kind {
            LossKind::Exp => Ok(1.0 / u),
            LossKind::Log => Ok(1.0 / -(-u).exp_m1()),
            LossKind::Poly(k) => {
                if u <= 1.0 {
                    Ok(u.powf(-(k + 1.0) / k) / k)
                } else {
                    let z = poly_left_inverse(k, u);
                    Ok(-1.0 / self.deriv(z)?)
                }
            }
            LossKind::SemiCircle => Ok(1.0 / (u * u) + 1.0),
            LossKind::Hinge => Err(Error::Unsupported("hinge loss has no inverse".into())),
        }
    }

    /// Lipschitz constant of the transformed objective over `n` samples.
    pub fn lipschitz_const(&self) -> Result<f64> {
        match self.kind {
            LossKind::Exp | LossKind::Log => Ok(1.0),
            LossKind::Poly(k) => Ok((self.n as f64).powf(1.0 / k)),
            LossKind::SemiCircle => Ok(self.n as f64 + 1.0),
            LossKind::Hinge => Err(Error::Unsupported(
                "no Lipschitz constant is defined for the hinge loss".into(),
            )),
        }
    }

    // ---- log-domain primitives -------------------------------------------
    //
    // These skip argument validation; callers go through `ensure_batch` and
    // only pass finite values. Hinge yields NaN or -inf.

    /// `ln ℓ(z)`, finite for every finite `z`.
    pub fn ln_eval(&self, z: f64) -> f64 {
        match self.kind {
            LossKind::Exp => -z,
            LossKind::Log => {
                if z > 30.0 {
                    // ln ln(1 + e^{-z}) = -z + ln(1 - e^{-z}/2 + O(e^{-2z}))
                    -z + (-0.5 * (-z).exp()).ln_1p()
                } else {
                    softplus(-z).ln()
                }
            }
            LossKind::Poly(k) => {
                if z >= 0.0 {
                    -k * z.ln_1p()
                } else {
                    (-2.0 * k * z + (1.0 - z).powf(-k)).ln()
                }
            }
            LossKind::SemiCircle => {
                let s = z.hypot(2.0);
                if z >= 0.0 {
                    std::f64::consts::LN_2 - (z + s).ln()
                } else {
                    ((s - z) / 2.0).ln()
                }
            }
            LossKind::Hinge => (-z).max(0.0).ln(),
        }
    }

    /// `ln |ℓ'(z)|`.
    pub fn ln_neg_deriv(&self, z: f64) -> f64 {
        match self.kind {
            LossKind::Exp => -z,
            LossKind::Log => -softplus(z),
            LossKind::Poly(k) => {
                if z >= 0.0 {
                    k.ln() - (k + 1.0) * z.ln_1p()
                } else {
                    (2.0 * k - k * (1.0 - z).powf(-k - 1.0)).ln()
                }
            }
            LossKind::SemiCircle => {
                let s = z.hypot(2.0);
                if z > 0.0 {
                    std::f64::consts::LN_2 - s.ln() - (s + z).ln()
                } else {
                    (s - z).ln() - std::f64::consts::LN_2 - s.ln()
                }
            }
            LossKind::Hinge => {
                if z <= 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// `ln (-ℓ⁻¹)'(u)` given `ln u`.
    pub fn ln_neg_inv_deriv(&self, ln_u: f64) -> f64 {
        match self.kind {
            LossKind::Exp => -ln_u,
            LossKind::Log => {
                let u = ln_u.exp();
                if ln_u < LN_TINY {
                    -ln_u + 0.5 * u
                } else {
                    -(-(-u).exp_m1()).ln()
                }
            }
            LossKind::Poly(k) => {
                if ln_u <= 0.0 {
                    -k.ln() - (k + 1.0) / k * ln_u
                } else {
                    let u = ln_u.exp();
                    let z = poly_left_inverse(k, u);
                    -self.ln_neg_deriv(z)
                }
            }
            LossKind::SemiCircle => softplus(-2.0 * ln_u),
            LossKind::Hinge => f64::NAN,
        }
    }

    /// `-ℓ⁻¹(u)` given `ln u`: the transformed objective at a point whose
    /// risk is `u`.
    pub fn neg_inverse_from_ln(&self, ln_u: f64) -> f64 {
        match self.kind {
            LossKind::Exp => ln_u,
            LossKind::Log => {
                let u = ln_u.exp();
                if ln_u < LN_TINY {
                    ln_u + 0.5 * u
                } else if u > 700.0 {
                    u + (-(-u).exp()).ln_1p()
                } else {
                    u.exp_m1().ln()
                }
            }
            LossKind::Poly(k) => {
                if ln_u <= 0.0 {
                    -(-ln_u / k).exp_m1()
                } else {
                    -poly_left_inverse(k, ln_u.exp())
                }
            }
            LossKind::SemiCircle => 2.0 * ln_u.sinh(),
            LossKind::Hinge => f64::NAN,
        }
    }
}

/// Solves `-2kz + (1 - z)^{-k} = u` for `z ≤ 0` when `u > 1`.
///
/// The left branch is convex and decreasing, so Newton started left of the
/// root climbs to it monotonically. `z0 = -u/(2k)` satisfies `ℓ(z0) > u`.
fn poly_left_inverse(k: f64, u: f64) -> f64 {
    let mut z = -u / (2.0 * k);
    for _ in 0..200 {
        let g = -2.0 * k * z + (1.0 - z).powf(-k) - u;
        let dg = -2.0 * k + k * (1.0 - z).powf(-k - 1.0);
        let step = g / dg;
        let next = (z - step).min(0.0);
        if (next - z).abs() <= 1e-16 * z.abs().max(1.0) {
            return next;
        }
        z = next;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [LossKind; 5] = [
        LossKind::Exp,
        LossKind::Log,
        LossKind::Poly(2.0),
        LossKind::Poly(0.5),
        LossKind::SemiCircle,
    ];

    fn spec(kind: LossKind) -> LossSpec {
        LossSpec::new(kind, 16).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn eval_at_zero() {
        assert_eq!(spec(LossKind::Exp).eval(0.0).unwrap(), 1.0);
        assert!((spec(LossKind::Log).eval(0.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(spec(LossKind::SemiCircle).eval(0.0).unwrap(), 1.0);
        assert_eq!(spec(LossKind::Poly(2.0)).eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn eval_rejects_non_finite() {
        assert!(matches!(spec(LossKind::Exp).eval(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(spec(LossKind::Log).deriv(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn log_loss_is_stable_in_both_tails() {
        let l = spec(LossKind::Log);
        assert!((l.eval(-1000.0).unwrap() - 1000.0).abs() < 1e-12);
        let v = l.eval(1000.0).unwrap();
        assert!(v >= 0.0 && v.is_finite());
        assert!((l.ln_eval(1000.0) + 1000.0).abs() < 1e-12);
        assert!((l.ln_eval(10_000.0) + 10_000.0).abs() < 1e-9);
    }

    #[test]
    fn deriv_examples() {
        assert_eq!(spec(LossKind::Exp).deriv(0.0).unwrap(), -1.0);
        assert_eq!(spec(LossKind::Log).deriv(0.0).unwrap(), -0.5);
    }

    #[test]
    fn poly_left_branch_derivative_matches_central_difference() {
        // Oracle: the left-branch formula typed out independently, central
        // difference at h = 1e-6.
        let k = 1.0;
        let left = |z: f64| -2.0 * k * z + (1.0 - z).powf(-k);
        let h = 1e-6;
        let fd = (left(-1.0 + h) - left(-1.0 - h)) / (2.0 * h);
        assert!((fd - (-1.75)).abs() < 1e-8);
        let d = spec(LossKind::Poly(1.0)).deriv(-1.0).unwrap();
        assert!((d - fd).abs() < 1e-8);
        assert!((d - (-1.75)).abs() < 1e-15);
    }

    #[test]
    fn poly_branches_meet_at_zero() {
        for k in [0.5, 1.0, 2.0, 3.5] {
            let l = spec(LossKind::Poly(k));
            let h = 1e-9;
            assert!((l.eval(-h).unwrap() - l.eval(h).unwrap()).abs() < 1e-7);
            assert!((l.deriv(-h).unwrap() - l.deriv(0.0).unwrap()).abs() < 1e-6);
            assert_eq!(l.deriv(0.0).unwrap(), -k);
        }
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(spec(LossKind::Exp).inverse(1.0).unwrap(), 0.0);
        assert_eq!(spec(LossKind::SemiCircle).inverse(1.0).unwrap(), 0.0);
        let p = spec(LossKind::Poly(2.0));
        assert!((p.inverse(0.25).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(p.inverse(0.0), Err(Error::Domain(_))));
        assert!(matches!(p.inverse(-1.0), Err(Error::Domain(_))));
        assert!(matches!(spec(LossKind::Hinge).inverse(1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn poly_inverse_agrees_with_bisection() {
        // Oracle: plain bisection on eval, independent of the Newton solver.
        let p = spec(LossKind::Poly(2.0));
        for u in [0.25, 0.9, 1.5, 7.0, 123.0] {
            let (mut lo, mut hi) = (-1e4, 1e4);
            for _ in 0..300 {
                let mid = 0.5 * (lo + hi);
                if p.eval(mid).unwrap() > u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let oracle = 0.5 * (lo + hi);
            assert!((p.inverse(u).unwrap() - oracle).abs() < 1e-9, "u = {u}");
        }
    }

    #[test]
    fn neg_inv_deriv_examples() {
        assert_eq!(spec(LossKind::Exp).neg_inv_deriv(0.5).unwrap(), 2.0);
        assert!((spec(LossKind::Log).neg_inv_deriv(2f64.ln()).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(spec(LossKind::SemiCircle).neg_inv_deriv(1.0).unwrap(), 2.0);
        assert!(matches!(spec(LossKind::Exp).neg_inv_deriv(0.0), Err(Error::Domain(_))));
        // Tiny risks stay finite.
        let v = spec(LossKind::Log).neg_inv_deriv(1e-300).unwrap();
        assert!(close(v, 1e300, 1e-12));
    }

    #[test]
    fn lipschitz_constants() {
        assert_eq!(LossSpec::new(LossKind::Log, 100).unwrap().lipschitz_const().unwrap(), 1.0);
        assert_eq!(LossSpec::new(LossKind::Exp, 7).unwrap().lipschitz_const().unwrap(), 1.0);
        let p = LossSpec::new(LossKind::Poly(2.0), 16).unwrap();
        assert!((p.lipschitz_const().unwrap() - 4.0).abs() < 1e-15);
        let s = LossSpec::new(LossKind::SemiCircle, 9).unwrap();
        assert_eq!(s.lipschitz_const().unwrap(), 10.0);
        assert!(matches!(spec(LossKind::Hinge).lipschitz_const(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn constructor_and_parser_validate_degree() {
        assert!(LossSpec::new(LossKind::Poly(0.0), 1).is_err());
        assert!(LossSpec::new(LossKind::Exp, 0).is_err());
        assert_eq!("poly:2".parse::<LossKind>().unwrap(), LossKind::Poly(2.0));
        assert_eq!("semicircle".parse::<LossKind>().unwrap(), LossKind::SemiCircle);
        let err = "poly:0".parse::<LossKind>().unwrap_err();
        assert!(err.to_string().contains("k must be > 0"));
        assert!("cosh".parse::<LossKind>().is_err());
        for k in ALL {
            assert_eq!(k.to_string().parse::<LossKind>().unwrap(), k);
        }
    }

    #[test]
    fn hinge_kink_and_batch_exclusion() {
        let h = spec(LossKind::Hinge);
        assert_eq!(h.deriv(0.0).unwrap(), -1.0);
        assert_eq!(h.deriv(0.1).unwrap(), 0.0);
        assert_eq!(h.eval(2.0).unwrap(), 0.0);
        assert!(h.ensure_batch().is_err());
        assert!(spec(LossKind::Log).ensure_batch().is_ok());
    }

    #[test]
    fn log_domain_primitives_agree_with_direct_ones() {
        for kind in ALL {
            let l = spec(kind);
            for z in [-30.0, -3.0, -0.5, 0.0, 0.7, 4.0, 25.0] {
                let v = l.eval(z).unwrap();
                assert!(close(l.ln_eval(z), v.ln(), 1e-12) || (l.ln_eval(z) - v.ln()).abs() < 1e-13);
                let d = l.deriv(z).unwrap();
                assert!((l.ln_neg_deriv(z) - (-d).ln()).abs() < 1e-11, "{kind} {z}");
                let nid = l.neg_inv_deriv(v).unwrap();
                assert!((l.ln_neg_inv_deriv(v.ln()) - nid.ln()).abs() < 1e-9, "{kind} {z}");
                let phi = -l.inverse(v).unwrap();
                assert!((l.neg_inverse_from_ln(v.ln()) - phi).abs() <= 1e-9 * phi.abs().max(1.0));
            }
        }
    }

    #[test]
    fn log_domain_survives_underflow() {
        let l = spec(LossKind::Log);
        assert!((l.ln_neg_inv_deriv(-5000.0) - 5000.0).abs() < 1e-12);
        assert!((l.neg_inverse_from_ln(-5000.0) + 5000.0).abs() < 1e-12);
        let e = spec(LossKind::Exp);
        assert_eq!(e.ln_neg_inv_deriv(-800.0), 800.0);
    }

    fn kinds() -> impl Strategy<Value = LossKind> {
        prop_oneof![
            Just(LossKind::Exp),
            Just(LossKind::Log),
            (0.25f64..4.0).prop_map(LossKind::Poly),
            Just(LossKind::SemiCircle),
        ]
    }

    proptest! {
        #[test]
        fn strictly_decreasing(kind in kinds(), a in -50.0f64..50.0, b in -50.0f64..50.0) {
            prop_assume!((a - b).abs() > 1e-6);
            let l = spec(kind);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(l.eval(lo).unwrap() > l.eval(hi).unwrap());
        }

        #[test]
        fn hinge_nonincreasing(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let l = spec(LossKind::Hinge);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(l.eval(lo).unwrap() >= l.eval(hi).unwrap());
        }

        #[test]
        fn convex(kind in kinds(), a in -50.0f64..50.0, b in -50.0f64..50.0, lam in 0.0f64..1.0) {
            let l = spec(kind);
            let mid = l.eval(lam * a + (1.0 - lam) * b).unwrap();
            let chord = lam * l.eval(a).unwrap() + (1.0 - lam) * l.eval(b).unwrap();
            prop_assert!(mid <= chord + 1e-12 * chord.max(1.0));
        }

        #[test]
        fn derivative_matches_central_difference(kind in kinds(), z in -20.0f64..20.0) {
            prop_assume!(z.abs() > 1e-3);
            let l = spec(kind);
            let h = 1e-6;
            let fd = (l.eval(z + h).unwrap() - l.eval(z - h).unwrap()) / (2.0 * h);
            let d = l.deriv(z).unwrap();
            prop_assert!((d - fd).abs() <= 1e-5 * d.abs().max(1.0), "d={} fd={}", d, fd);
        }

        #[test]
        fn inverse_round_trip(kind in kinds(), z in -20.0f64..20.0) {
            let l = spec(kind);
            let back = l.inverse(l.eval(z).unwrap()).unwrap();
            prop_assert!((back - z).abs() <= 1e-10 * z.abs().max(1.0), "z={} back={}", z, back);
        }

        #[test]
        fn neg_inv_deriv_matches_inverse_function_theorem(kind in kinds(), lu in -20.0f64..5.0) {
            let l = spec(kind);
            let u = lu.exp();
            let oracle = -1.0 / l.deriv(l.inverse(u).unwrap()).unwrap();
            let v = l.neg_inv_deriv(u).unwrap();
            prop_assert!(close(v, oracle, 1e-8), "u={} v={} oracle={}", u, v, oracle);
        }
    }
}
