//! Labelled datasets with a margin certificate, and their generators.
//!
//! Coordinates are 0-based throughout: the basis vector written `e_j` in the
//! usual 1-based notation lives at index `j - 1`.
//!
//! A dataset stores *distinct* rows together with a multiplicity per row, so
//! the hard batch instances with `n = 2^20` samples need only `k + 1` rows.
//! All risks and gradients weight rows by multiplicity and normalise by the
//! total sample count.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::{dot, norm, robust_floor};

const TOL: f64 = 1e-12;
const HEADER_MAGIC: &str = "margin-lab-dataset v1";

/// A witness `(γ, w*)` that every example satisfies `y⟨x, w*⟩ ≥ γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub gamma: f64,
    pub w_star: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
    multiplicity: Vec<u64>,
    certificate: Certificate,
    /// Generator name with its parameters and seed, e.g. `random(d=10,n=100,gamma=0.1,seed=7)`.
    pub origin: String,
}

/// One invariant's outcome in a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<InvariantCheck>,
    /// `min_i y_i⟨x_i, w*⟩` over the stored rows.
    pub realized_margin: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InvariantCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl Dataset {
    /// Builds a dataset from row-major features. Shapes are checked; the
    /// certificate is not (see [`Dataset::validate`]).
    pub fn new(
        dim: usize,
        features: Vec<f64>,
        labels: Vec<f64>,
        certificate: Certificate,
        origin: impl Into<String>,
    ) -> Result<Self> {
        let rows = labels.len();
        Self::with_multiplicity(dim, features, labels, vec![1; rows], certificate, origin)
    }

    pub fn with_multiplicity(
        dim: usize,
        features: Vec<f64>,
        labels: Vec<f64>,
        multiplicity: Vec<u64>,
        certificate: Certificate,
        origin: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("dimension must be positive".into()));
        }
        let rows = labels.len();
        if rows == 0 {
            return Err(Error::Parameter("dataset must contain at least one row".into()));
        }
        check_dim(rows * dim, features.len())?;
        check_dim(rows, multiplicity.len())?;
        check_dim(dim, certificate.w_star.len())?;
        if multiplicity.contains(&0) {
            return Err(Error::Parameter("row multiplicities must be positive".into()));
        }
        Ok(Self {
            dim,
            features,
            labels,
            multiplicity,
            certificate,
            origin: origin.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of distinct stored rows.
    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    /// Total sample count, counting multiplicities.
    pub fn len(&self) -> usize {
        self.multiplicity.iter().sum::<u64>() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn multiplicity(&self, i: usize) -> u64 {
        self.multiplicity[i]
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.multiplicity
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn gamma(&self) -> f64 {
        self.certificate.gamma
    }

    /// `y_i⟨x_i, w⟩` for every stored row.
    pub fn margins(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, w.len())?;
        Ok((0..self.rows()).map(|i| self.label(i) * dot(self.row(i), w)).collect())
    }

    pub fn min_margin(&self, w: &[f64]) -> Result<f64> {
        Ok(self.margins(w)?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Multiplicity-weighted mean of `x_i` (labels ignored).
    pub fn mean_feature(&self) -> Vec<f64> {
        let total = self.len() as f64;
        let mut mean = vec![0.0; self.dim];
        for i in 0..self.rows() {
            let m = self.multiplicity[i] as f64;
            for (acc, x) in mean.iter_mut().zip(self.row(i)) {
                *acc += m * x;
            }
        }
        mean.iter_mut().for_each(|v| *v /= total);
        mean
    }

    /// Repeats every row by its multiplicity.
    pub fn expand(&self) -> Dataset {
        let mut features = Vec::with_capacity(self.len() * self.dim);
        let mut labels = Vec::with_capacity(self.len());
        for i in 0..self.rows() {
            for _ in 0..self.multiplicity[i] {
                features.extend_from_slice(self.row(i));
                labels.push(self.labels[i]);
            }
        }
        let n = labels.len();
        Dataset {
            dim: self.dim,
            features,
            labels,
            multiplicity: vec![1; n],
            certificate: self.certificate.clone(),
            origin: self.origin.clone(),
        }
    }

    /// Checks norms, labels and the certificate; never fails, only reports.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();

        let worst_norm = (0..self.rows()).map(|i| norm(self.row(i))).fold(0.0, f64::max);
        checks.push(InvariantCheck {
            name: "feature-norm",
            passed: worst_norm <= 1.0 + TOL,
            detail: format!("max ||x_i|| = {worst_norm:.17e}"),
        });

        let bad_labels: Vec<usize> = (0..self.rows())
            .filter(|&i| self.labels[i] != 1.0 && self.labels[i] != -1.0)
            .collect();
        checks.push(InvariantCheck {
            name: "labels",
            passed: bad_labels.is_empty(),
            detail: if bad_labels.is_empty() {
                "all labels in {-1, +1}".into()
            } else {
                format!("rows with invalid labels: {bad_labels:?}")
            },
        });

        let w_norm = norm(&self.certificate.w_star);
        checks.push(InvariantCheck {
            name: "certificate-unit",
            passed: (w_norm - 1.0).abs() <= TOL,
            detail: format!("||w*|| = {w_norm:.17e}"),
        });

        let gamma = self.certificate.gamma;
        checks.push(InvariantCheck {
            name: "certificate-gamma-range",
            passed: gamma > 0.0 && gamma <= 1.0,
            detail: format!("gamma = {gamma}"),
        });

        let realized = (0..self.rows())
            .map(|i| self.labels[i] * dot(self.row(i), &self.certificate.w_star))
            .fold(f64::INFINITY, f64::min);
        checks.push(InvariantCheck {
            name: "certificate-margin",
            passed: realized >= gamma - TOL,
            detail: format!("min y_i<x_i, w*> = {realized:.17e} vs gamma = {gamma:.17e}"),
        });

        ValidationReport { checks, realized_margin: realized }
    }

    // ---- text format -------------------------------------------------------

    /// Serializes in the line-oriented `margin-lab-dataset v1` format.
    /// A repeated row is written once with a `<count>x` prefix.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{HEADER_MAGIC} n={} d={} gamma={}",
            self.len(),
            self.dim,
            fmt_f64(self.certificate.gamma)
        )?;
        let wstar: Vec<String> = self.certificate.w_star.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(out, "wstar: {}", wstar.join(" "))?;
        for i in 0..self.rows() {
            let label = fmt_label(self.labels[i]);
            let row: Vec<String> = self.row(i).iter().map(|v| fmt_f64(*v)).collect();
            match self.multiplicity[i] {
                1 => writeln!(out, "{label} {}", row.join(" "))?,
                m => writeln!(out, "{m}x {label} {}", row.join(" "))?,
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        // `#` lines carry provenance and are skipped wherever they appear.
        let mut lines = input
            .lines()
            .enumerate()
            .filter(|(_, l)| !matches!(l, Ok(s) if s.trim_start().starts_with('#')));
        let perr = |line: usize, msg: String| Error::Parse { line: line + 1, msg };

        let (ln, header) = lines.next().ok_or_else(|| perr(0, "empty input".into()))?;
        let header = header?;
        let rest = header
            .strip_prefix(HEADER_MAGIC)
            .ok_or_else(|| perr(ln, format!("expected header '{HEADER_MAGIC} ...'")))?;
        let (mut n, mut d, mut gamma) = (None, None, None);
        for field in rest.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| perr(ln, format!("malformed header field '{field}'")))?;
            let bad = |_| perr(ln, format!("bad value for '{key}'"));
            match key {
                "n" => n = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "d" => d = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "gamma" => gamma = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                _ => return Err(perr(ln, format!("unknown header field '{key}'"))),
            }
        }
        let n = n.ok_or_else(|| perr(ln, "header is missing n".into()))?;
        let d = d.ok_or_else(|| perr(ln, "header is missing d".into()))?;
        let gamma = gamma.ok_or_else(|| perr(ln, "header is missing gamma".into()))?;

        let (ln, wline) = lines.next().ok_or_else(|| perr(1, "missing wstar line".into()))?;
        let wline = wline?;
        let wvals = wline
            .strip_prefix("wstar:")
            .ok_or_else(|| perr(ln, "expected 'wstar:' line".into()))?;
        let w_star = parse_floats(wvals, d).map_err(|m| perr(ln, m))?;

        let mut features = Vec::with_capacity(n * d);
        let mut labels = Vec::new();
        let mut mult = Vec::new();
        for (ln, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut body = line.trim();
            let mut count = 1u64;
            if let Some((head, tail)) = body.split_once(char::is_whitespace) {
                if let Some(c) = head.strip_suffix('x') {
                    count = c.parse().map_err(|_| perr(ln, format!("bad row count '{head}'")))?;
                    if count == 0 {
                        return Err(perr(ln, "row count must be positive".into()));
                    }
                    body = tail.trim_start();
                }
            }
            let (label, rest) = body
                .split_once(char::is_whitespace)
                .ok_or_else(|| perr(ln, "expected '<label> <features>'".into()))?;
            let label: f64 = label.parse().map_err(|_| perr(ln, format!("bad label '{label}'")))?;
            features.extend(parse_floats(rest, d).map_err(|m| perr(ln, m))?);
            labels.push(label);
            mult.push(count);
        }
        let total: u64 = mult.iter().sum();
        if total != n as u64 {
            return Err(perr(0, format!("header declares n={n} but found {total} samples")));
        }
        Dataset::with_multiplicity(d, features, labels, mult, Certificate { gamma, w_star }, "file")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path)?;
        let mut ds = Self::read_from(BufReader::new(file))?;
        ds.origin = format!("file({})", path.display());
        Ok(ds)
    }
}

/// 17 significant digits; parses back to the identical `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_label(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        fmt_f64(v)
    }
}

fn parse_floats(s: &str, expected: usize) -> std::result::Result<Vec<f64>, String> {
    let vals: std::result::Result<Vec<f64>, _> = s.split_whitespace().map(str::parse).collect();
    let vals = vals.map_err(|e| format!("bad float: {e}"))?;
    if vals.len() != expected {
        return Err(format!("expected {expected} values, found {}", vals.len()));
    }
    Ok(vals)
}

// ---- generators ------------------------------------------------------------

/// Hard-instance families used by the lower-bound checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardKind {
    Stable2pt,
    BatchLb,
    OnlineLb,
    AlternateLb,
}

impl HardKind {
    /// Builds the instance; `n` is ignored by [`HardKind::Stable2pt`].
    pub fn generate(self, gamma: f64, n: usize) -> Result<Dataset> {
        match self {
            HardKind::Stable2pt => gen_stable2pt(gamma),
            HardKind::BatchLb => gen_batch_lb(gamma, n),
            HardKind::OnlineLb => gen_online_lb(gamma, n),
            HardKind::AlternateLb => gen_alternate_lb(gamma, n),
        }
    }
}

fn basis_scaled(d: usize, idx: usize, scale: f64, row: &mut [f64]) {
    debug_assert!(idx < d);
    row[idx] = scale;
}

/// Two points `(γ, ±sqrt(1-γ²))`, both labelled `+1`.
pub fn gen_stable2pt(gamma: f64) -> Result<Dataset> {
    if !(gamma > 0.0 && gamma < 0.1) {
        return Err(Error::Parameter(format!("stable2pt needs 0 < gamma < 0.1, got {gamma}")));
    }
    let s = (1.0 - gamma * gamma).sqrt();
    Dataset::new(
        2,
        vec![gamma, s, gamma, -s],
        vec![1.0, 1.0],
        Certificate { gamma, w_star: vec![1.0, 0.0] },
        format!("stable2pt(gamma={gamma})"),
    )
}

/// Dimension, chain length and row layout of the hard batch instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchLbShape {
    pub d: usize,
    pub k: usize,
}

impl BatchLbShape {
    pub fn new(gamma: f64, n: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0 / 6.0) {
            return Err(Error::Parameter(format!("batch_lb needs 0 < gamma < 1/6, got {gamma}")));
        }
        if n <= 16 {
            return Err(Error::Parameter(format!("batch_lb needs n > 16, got {n}")));
        }
        let d = robust_floor(1.0 / (5.0 * gamma * gamma)) as usize;
        let log2n = (usize::BITS - 1 - n.leading_zeros()) as usize;
        let k = log2n.min(d - 2);
        Ok(Self { d, k })
    }
}

/// Rows `(2/√5)e_{j+1} - (1/√5)e_{j+2}` with multiplicity `2^{k-j}` for
/// `j = 1..k`, then `(1/√5)e_{k+2}` for the remaining `n - 2^k + 1` samples.
/// Every label is `+1`; no row touches the first coordinate.
pub fn gen_batch_lb(gamma: f64, n: usize) -> Result<Dataset> {
    let BatchLbShape { d, k } = BatchLbShape::new(gamma, n)?;
    let s = 1.0 / 5f64.sqrt();
    let rows = k + 1;
    let mut features = vec![0.0; rows * d];
    let mut mult = Vec::with_capacity(rows);
    for j in 1..=k {
        let row = &mut features[(j - 1) * d..j * d];
        // e_{j+1} -> index j, e_{j+2} -> index j + 1
        basis_scaled(d, j, 2.0 * s, row);
        basis_scaled(d, j + 1, -s, row);
        mult.push(1u64 << (k - j));
    }
    basis_scaled(d, k + 1, s, &mut features[k * d..]);
    mult.push((n - (1usize << k) + 1) as u64);

    let w = 1.0 / (d as f64).sqrt();
    let margin = (1.0 / (5.0 * d as f64).sqrt()).max(gamma);
    Dataset::with_multiplicity(
        d,
        features,
        vec![1.0; rows],
        mult,
        Certificate { gamma: margin, w_star: vec![w; d] },
        format!("batch_lb(gamma={gamma},n={n})"),
    )
}

/// `x_i = e_{i+1}` for `i ≤ k = min(n, d-1)`, then `e_{k+1}` repeated.
pub fn gen_online_lb(gamma: f64, n: usize) -> Result<Dataset> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::Parameter(format!("online_lb needs 0 < gamma < 1/2, got {gamma}")));
    }
    if n < 2 {
        return Err(Error::Parameter(format!("online_lb needs n >= 2, got {n}")));
    }
    let d = robust_floor(1.0 / (gamma * gamma)) as usize;
    let k = n.min(d - 1);
    let mut features = vec![0.0; n * d];
    for i in 1..=n {
        // e_{i+1} -> index i
        let idx = if i <= k { i } else { k };
        basis_scaled(d, idx, 1.0, &mut features[(i - 1) * d..i * d]);
    }
    let w = 1.0 / (d as f64).sqrt();
    Dataset::new(
        d,
        features,
        vec![1.0; n],
        Certificate { gamma: w, w_star: vec![w; d] },
        format!("online_lb(gamma={gamma},n={n})"),
    )
}

/// Chain rows `-(1/√2)e_{j+1} + (1/√2)e_{j+2}` for `j = 1..k`, `k = min(n, d-2)`,
/// then `(1/√2)e_{k+2}` for the remaining `n - k` samples.
pub fn gen_alternate_lb(gamma: f64, n: usize) -> Result<Dataset> {
    if !(gamma > 0.0 && gamma < 0.125) {
        return Err(Error::Parameter(format!("alternate_lb needs 0 < gamma < 1/8, got {gamma}")));
    }
    if n < 4 {
        return Err(Error::Parameter(format!("alternate_lb needs n >= 4, got {n}")));
    }
    let d = robust_floor(gamma.powf(-2.0 / 3.0)) as usize;
    let k = n.min(d - 2);
    let s = 1.0 / 2f64.sqrt();
    let rows = if n > k { k + 1 } else { k };
    let mut features = vec![0.0; rows * d];
    let mut mult = vec![1u64; rows];
    for j in 1..=k {
        let row = &mut features[(j - 1) * d..j * d];
        basis_scaled(d, j, -s, row);
        basis_scaled(d, j + 1, s, row);
    }
    if n > k {
        basis_scaled(d, k + 1, s, &mut features[k * d..]);
        mult[k] = (n - k) as u64;
    }
    let df = d as f64;
    let scale = (6.0 / (df * (df + 1.0) * (2.0 * df + 1.0))).sqrt();
    let w_star: Vec<f64> = (1..=d).map(|i| scale * i as f64).collect();
    let margin = (3.0 / (df * (df + 1.0) * (2.0 * df + 1.0))).sqrt();
    Dataset::with_multiplicity(
        d,
        features,
        vec![1.0; rows],
        mult,
        Certificate { gamma: margin, w_star },
        format!("alternate_lb(gamma={gamma},n={n})"),
    )
}

/// Random data in the unit ball, labelled by a random unit `w*`, with every
/// sub-margin point moved onto the margin boundary.
pub fn gen_random_separable(d: usize, n: usize, gamma: f64, seed: u64) -> Result<Dataset> {
    if d < 2 {
        return Err(Error::Parameter(format!("random dataset needs d >= 2, got {d}")));
    }
    if n < 1 {
        return Err(Error::Parameter("random dataset needs n >= 1".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!("random dataset needs 0 < gamma < 1, got {gamma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_star = random_unit(&mut rng, d);

    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let dir = random_unit(&mut rng, d);
        let u: f64 = rng.random();
        let radius = u.powf(1.0 / d as f64);
        let mut x: Vec<f64> = dir.iter().map(|v| v * radius).collect();
        let along = dot(&x, &w_star);
        let y = if along >= 0.0 { 1.0 } else { -1.0 };
        if y * along < gamma {
            // Keep the orthogonal part, put the w* component exactly on the
            // margin, and shrink the orthogonal part if the norm would exceed 1.
            let mut perp: Vec<f64> = x.iter().zip(&w_star).map(|(xi, wi)| xi - along * wi).collect();
            let pn = norm(&perp);
            let room = (1.0 - gamma * gamma).sqrt();
            if pn > room {
                perp.iter_mut().for_each(|v| *v *= room / pn);
            }
            x = perp.iter().zip(&w_star).map(|(p, wi)| p + y * gamma * wi).collect();
        }
        features.extend_from_slice(&x);
        labels.push(y);
    }
    Dataset::new(
        d,
        features,
        labels,
        Certificate { gamma, w_star },
        format!("random(d={d},n={n},gamma={gamma},seed={seed})"),
    )
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let nv = norm(&v);
        if nv > 1e-12 {
            return v.into_iter().map(|x| x / nv).collect();
        }
    }
}

// ---- source descriptions ---------------------------------------------------

/// Where a dataset comes from, as written in configs:
/// `random:d=10,n=100,gamma=0.1,seed=7`, `stable2pt:gamma=0.05`,
/// `batch_lb:gamma=0.05,n=1048576`, `online_lb:...`, `alternate_lb:...`,
/// or `file:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Random { d: usize, n: usize, gamma: f64, seed: u64 },
    Hard { kind: HardKind, gamma: f64, n: usize },
    File(String),
}

impl DatasetSource {
    pub fn build(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Random { d, n, gamma, seed } => gen_random_separable(*d, *n, *gamma, *seed),
            DatasetSource::Hard { kind, gamma, n } => kind.generate(*gamma, *n),
            DatasetSource::File(path) => Dataset::load(path),
        }
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::Random { d, n, gamma, seed } => {
                write!(f, "random:d={d},n={n},gamma={gamma},seed={seed}")
            }
            DatasetSource::Hard { kind: HardKind::Stable2pt, gamma, .. } => {
                write!(f, "stable2pt:gamma={gamma}")
            }
            DatasetSource::Hard { kind, gamma, n } => {
                let name = match kind {
                    HardKind::BatchLb => "batch_lb",
                    HardKind::OnlineLb => "online_lb",
                    HardKind::AlternateLb => "alternate_lb",
                    HardKind::Stable2pt => unreachable!(),
                };
                write!(f, "{name}:gamma={gamma},n={n}")
            }
            DatasetSource::File(p) => write!(f, "file:{p}"),
        }
    }
}

impl FromStr for DatasetSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        if name == "file" {
            if args.is_empty() {
                return Err(Error::Parameter("file source needs a path".into()));
            }
            return Ok(DatasetSource::File(args.to_string()));
        }
        let mut d = None;
        let mut n = None;
        let mut gamma = None;
        let mut seed = None;
        for kv in args.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("expected key=value, got '{kv}'")))?;
            let v = v.trim();
            let bad = || Error::Parameter(format!("bad value '{v}' for '{k}'"));
            match k.trim() {
                "d" => d = Some(v.parse().map_err(|_| bad())?),
                "n" => n = Some(v.parse().map_err(|_| bad())?),
                "gamma" => gamma = Some(v.parse().map_err(|_| bad())?),
                "seed" => seed = Some(v.parse().map_err(|_| bad())?),
                other => return Err(Error::Parameter(format!("unknown dataset parameter '{other}'"))),
            }
        }
        let need = |v: Option<usize>, what: &str| {
            v.ok_or_else(|| Error::Parameter(format!("dataset '{name}' needs {what}")))
        };
        let gamma = gamma.ok_or_else(|| Error::Parameter(format!("dataset '{name}' needs gamma")))?;
        let kind = match name {
            "random" => {
                return Ok(DatasetSource::Random {
                    d: need(d, "d")?,
                    n: need(n, "n")?,
                    gamma,
                    seed: seed.unwrap_or(0),
                })
            }
            "stable2pt" => return Ok(DatasetSource::Hard { kind: HardKind::Stable2pt, gamma, n: 2 }),
            "batch_lb" => HardKind::BatchLb,
            "online_lb" => HardKind::OnlineLb,
            "alternate_lb" => HardKind::AlternateLb,
            other => return Err(Error::Parameter(format!("unknown dataset generator '{other}'"))),
        };
        Ok(DatasetSource::Hard { kind, gamma, n: need(n, "n")? })
    }
}
