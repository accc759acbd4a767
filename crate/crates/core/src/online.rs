//! Perceptron and online SGD over an index order, with mistake counting.

use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::losses::LossSpec;
use crate::numeric::dot;

/// A run of an online method. `order` holds 0-based row indices into the
/// dataset's distinct rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineRun {
    pub order: Vec<usize>,
    /// `w_0, ..., w_t`.
    pub iterates: Vec<Vec<f64>>,
    /// `mistakes[k]` counts mistake steps among the first `k` presentations.
    pub mistakes: Vec<usize>,
    /// First `t` with `min_i y_i x_iᵀ w_t > 0`.
    pub separated_at: Option<usize>,
}

impl OnlineRun {
    pub fn total_mistakes(&self) -> usize {
        *self.mistakes.last().unwrap_or(&0)
    }

    pub fn last(&self) -> &[f64] {
        self.iterates.last().expect("an online run always holds w_0")
    }
}

/// One Perceptron update; a zero margin counts as a mistake.
pub fn perceptron_step(w: &[f64], x: &[f64], y: f64) -> Result<(Vec<f64>, bool)> {
    check_dim(w.len(), x.len())?;
    let mut next = w.to_vec();
    let mistake = y * dot(x, w) <= 0.0;
    if mistake {
        for (wi, xi) in next.iter_mut().zip(x) {
            *wi += y * xi;
        }
    }
    Ok((next, mistake))
}

fn check_order(ds: &Dataset, order: &[usize]) -> Result<()> {
    match order.iter().find(|&&i| i >= ds.rows()) {
        Some(&index) => Err(Error::BadIndex { index, len: ds.rows() }),
        None => Ok(()),
    }
}

fn separates(ds: &Dataset, w: &[f64]) -> bool {
    (0..ds.rows()).all(|i| ds.label(i) * dot(ds.row(i), w) > 0.0)
}

/// Runs an online method whose update is `w ← w - coef(z) · y x` with
/// `z = y xᵀ w` and records mistakes against the pre-update iterate.
fn run_online<F>(ds: &Dataset, order: &[usize], w0: Option<&[f64]>, mut coef: F) -> Result<OnlineRun>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_order(ds, order)?;
    let mut w = match w0 {
        Some(w0) => {
            check_dim(ds.dim(), w0.len())?;
            w0.to_vec()
        }
        None => vec![0.0; ds.dim()],
    };
    let mut iterates = Vec::with_capacity(order.len() + 1);
    let mut mistakes = Vec::with_capacity(order.len() + 1);
    let mut count = 0;
    let mut separated_at = separates(ds, &w).then_some(0);
    iterates.push(w.clone());
    mistakes.push(0);
    for (k, &i) in order.iter().enumerate() {
        let (x, y) = (ds.row(i), ds.label(i));
        let z = y * dot(x, &w);
        if z <= 0.0 {
            count += 1;
        }
        let c = coef(z)?;
        if c != 0.0 {
            let s = -c * y;
            for (wi, xi) in w.iter_mut().zip(x) {
                *wi += s * xi;
            }
        }
        if separated_at.is_none() && separates(ds, &w) {
            separated_at = Some(k + 1);
        }
        iterates.push(w.clone());
        mistakes.push(count);
    }
    Ok(OnlineRun { order: order.to_vec(), iterates, mistakes, separated_at })
}

/// Perceptron from `w0` (zero when `None`).
pub fn run_perceptron(ds: &Dataset, order: &[usize], w0: Option<&[f64]>) -> Result<OnlineRun> {
    run_online(ds, order, w0, |z| Ok(if z <= 0.0 { -1.0 } else { 0.0 }))
}

/// Online SGD `w_k = w_{k-1} - η ℓ'(y xᵀ w_{k-1}) y x`. With hinge loss
/// (`ℓ'(0) = -1`) and `η = 1` this is the Perceptron step for step.
pub fn run_online_sgd(
    ds: &Dataset,
    order: &[usize],
    loss: &LossSpec,
    eta: f64,
    w0: Option<&[f64]>,
) -> Result<OnlineRun> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::Parameter(format!("eta must be non-negative, got {eta}")));
    }
    run_online(ds, order, w0, |z| Ok(eta * loss.deriv(z)?))
}

/// How presentations are ordered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderSpec {
    /// `0, 1, ..., rows-1, 0, 1, ...`.
    Cyclic,
    /// Uniform with replacement from a seeded ChaCha8 stream.
    Random(u64),
    /// Whitespace-separated 1-based indices read from a file.
    File(String),
}

impl OrderSpec {
    pub fn build(&self, ds: &Dataset, len: usize) -> Result<Vec<usize>> {
        let rows = ds.rows();
        match self {
            OrderSpec::Cyclic => Ok((0..len).map(|k| k % rows).collect()),
            OrderSpec::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..len).map(|_| rng.random_range(0..rows)).collect())
            }
            OrderSpec::File(path) => {
                let order = read_order(path)?;
                check_order(ds, &order)?;
                Ok(order)
            }
        }
    }
}

/// Reads 1-based indices, returning them 0-based.
pub fn read_order(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in file.lines().enumerate() {
        let line = line?;
        for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let v: usize = tok
                .parse()
                .map_err(|_| Error::Parse { line: n + 1, msg: format!("bad index {tok:?}") })?;
            if v == 0 {
                return Err(Error::Parse { line: n + 1, msg: "indices are 1-based".into() });
            }
            out.push(v - 1);
        }
    }
    Ok(out)
}

impl fmt::Display for OrderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderSpec::Cyclic => write!(f, "cyclic"),
            OrderSpec::Random(seed) => write!(f, "random:{seed}"),
            OrderSpec::File(p) => write!(f, "file:{p}"),
        }
    }
}

impl FromStr for OrderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "cyclic" {
            return Ok(OrderSpec::Cyclic);
        }
        if let Some(seed) = s.strip_prefix("random:") {
            let seed = seed.trim().parse().map_err(|_| Error::Parameter(format!("bad order seed {seed:?}")))?;
            return Ok(OrderSpec::Random(seed));
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(OrderSpec::File(path.trim().to_string()));
        }
        Err(Error::Parameter(format!("order must be cyclic, random:<seed> or file:<path>, got {s:?}")))
    }
}
