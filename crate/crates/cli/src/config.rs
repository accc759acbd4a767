//! Line-oriented experiment configs:
//!
//! ```text
//! # comments start with '#'
//! command = run
//! dataset = random:d=10,n=100,gamma=0.1,seed=7
//! loss = exp
//! stepsize = adaptive:100
//! steps = 200
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use margin_lab::dataset::DatasetSource;
use margin_lab::online::OrderSpec;
use margin_lab::{Activation, LossKind, StepsizeMode};

use crate::bench::BenchMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Gen,
    Run,
    RunNn,
    Perceptron,
    Verify,
    Bench,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Gen, Command::Run, Command::RunNn, Command::Perceptron, Command::Verify, Command::Bench];

    fn required(self) -> &'static [&'static str] {
        match self {
            Command::Gen => &["dataset"],
            Command::Run => &["dataset", "loss", "stepsize", "steps"],
            Command::RunNn => &["dataset", "loss", "stepsize", "steps", "width", "activation"],
            Command::Perceptron => &["dataset"],
            Command::Verify => &[],
            Command::Bench => &["gammas"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Gen => "gen",
            Command::Run => "run",
            Command::RunNn => "run-nn",
            Command::Perceptron => "perceptron",
            Command::Verify => "verify",
            Command::Bench => "bench",
        })
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| format!("unknown command '{s}'"))
    }
}

/// A config problem; `line` is 0 for whole-file problems such as missing keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "line {}: {}", self.line, self.msg)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub dataset: Option<DatasetSource>,
    pub loss: Option<LossKind>,
    pub stepsize: Option<StepsizeMode>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub record_every: usize,
    pub width: Option<usize>,
    pub activation: Option<Activation>,
    pub order: Option<OrderSpec>,
    pub order_len: Option<usize>,
    pub gammas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub max_steps: usize,
    pub bench_mode: BenchMode,
    pub bench_dim: usize,
    pub bench_samples: usize,
    /// Restricts `verify` to these claim ids; empty means all.
    pub claims: Vec<String>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            dataset: None,
            loss: None,
            stepsize: None,
            steps: None,
            seed: None,
            out: None,
            record_every: 1,
            width: None,
            activation: None,
            order: None,
            order_len: None,
            gammas: Vec::new(),
            epsilons: vec![1e-2, 1e-6, 1e-12],
            max_steps: 100_000,
            bench_mode: BenchMode::Risk,
            bench_dim: 10,
            bench_samples: 100,
            claims: Vec::new(),
        }
    }

    /// Replaces the seed of a random dataset and of a random data order.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        if let Some(DatasetSource::Random { seed: s, .. }) = &mut self.dataset {
            *s = seed;
        }
        if let Some(OrderSpec::Random(s)) = &mut self.order {
            *s = seed;
        }
    }

    /// Sorted `key = value` lines of everything that affects results. The
    /// output directory is left out so moving outputs keeps the hash.
    pub fn canonical(&self) -> String {
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        kv.insert("command", self.command.to_string());
        if let Some(d) = &self.dataset {
            kv.insert("dataset", d.to_string());
        }
        if let Some(l) = &self.loss {
            kv.insert("loss", l.to_string());
        }
        if let Some(s) = &self.stepsize {
            kv.insert("stepsize", fmt_stepsize(s));
        }
        if let Some(s) = self.steps {
            kv.insert("steps", s.to_string());
        }
        if let Some(s) = self.seed {
            kv.insert("seed", s.to_string());
        }
        kv.insert("record_every", self.record_every.to_string());
        if let Some(w) = self.width {
            kv.insert("width", w.to_string());
        }
        if let Some(a) = &self.activation {
            kv.insert("activation", a.to_string());
        }
        if let Some(o) = &self.order {
            kv.insert("order", o.to_string());
        }
        if let Some(n) = self.order_len {
            kv.insert("order_len", n.to_string());
        }
        if self.command == Command::Bench {
            kv.insert("gammas", join(&self.gammas));
            kv.insert("epsilons", join(&self.epsilons));
            kv.insert("max_steps", self.max_steps.to_string());
            kv.insert("bench_mode", self.bench_mode.to_string());
            kv.insert("bench_dim", self.bench_dim.to_string());
            kv.insert("bench_samples", self.bench_samples.to_string());
        }
        if !self.claims.is_empty() {
            kv.insert("claims", self.claims.join(","));
        }
        kv.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

pub fn fmt_stepsize(s: &StepsizeMode) -> String {
    match s {
        StepsizeMode::Adaptive(e) => format!("adaptive:{e}"),
        StepsizeMode::Constant(e) => format!("constant:{e}"),
    }
}

fn parse_stepsize(v: &str) -> Result<StepsizeMode, String> {
    let (mode, eta) = v.split_once(':').ok_or("stepsize must be adaptive:<eta> or constant:<eta>")?;
    let eta: f64 = eta.trim().parse().map_err(|_| format!("bad eta '{eta}'"))?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err("eta must be positive".into());
    }
    match mode.trim() {
        "adaptive" => Ok(StepsizeMode::Adaptive(eta)),
        "constant" => Ok(StepsizeMode::Constant(eta)),
        other => Err(format!("unknown stepsize mode '{other}'")),
    }
}

fn parse_positive(v: &str, what: &str) -> Result<usize, String> {
    match v.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("{what} must be a positive integer, got '{v}'")),
    }
}

fn parse_list(v: &str, what: &str) -> Result<Vec<f64>, String> {
    let vals: Result<Vec<f64>, _> = v.split(',').map(|x| x.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|_| format!("{what} must be a comma-separated list of numbers"))?;
    if vals.is_empty() || vals.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(format!("{what} must be non-empty and positive"));
    }
    Ok(vals)
}

fn require_file(path: &str) -> Result<(), String> {
    if Path::new(path).is_file() {
        Ok(())
    } else {
        Err(format!("file not found: {path}"))
    }
}

/// Parses and validates a config, collecting every error found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            errors.push(ConfigError { line, msg: format!("expected 'key = value', got '{body}'") });
            continue;
        };
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if let Some((first, _)) = entries.get(&k) {
            errors.push(ConfigError { line, msg: format!("duplicate key '{k}' (first on line {first})") });
            continue;
        }
        entries.insert(k, (line, v));
    }

    let command = match entries.remove("command") {
        Some((line, v)) => match v.parse::<Command>() {
            Ok(c) => Some(c),
            Err(msg) => {
                errors.push(ConfigError { line, msg });
                None
            }
        },
        None => {
            errors.push(ConfigError { line: 0, msg: "missing required key 'command'".into() });
            None
        }
    };
    let mut cfg = ExperimentConfig::new(command.unwrap_or(Command::Verify));
    let present: Vec<String> = entries.keys().cloned().collect();

    for (key, (line, v)) in entries {
        let res: Result<(), String> = (|| {
            match key.as_str() {
                "dataset" => {
                    let src: DatasetSource = v.parse().map_err(|e: margin_lab::Error| e.to_string())?;
                    if let DatasetSource::File(p) = &src {
                        require_file(p)?;
                    }
                    cfg.dataset = Some(src);
                }
                "loss" => cfg.loss = Some(v.parse().map_err(|e: margin_lab::Error| strip_kind(e))?),
                "stepsize" => cfg.stepsize = Some(parse_stepsize(&v)?),
                "steps" => cfg.steps = Some(parse_positive(&v, "steps")?),
                "seed" => cfg.seed = Some(v.parse().map_err(|_| format!("bad seed '{v}'"))?),
                "out" => cfg.out = Some(PathBuf::from(v.as_str())),
                "record_every" => cfg.record_every = parse_positive(&v, "record_every")?,
                "width" => cfg.width = Some(parse_positive(&v, "width")?),
                "activation" => cfg.activation = Some(v.parse().map_err(|e: margin_lab::Error| strip_kind(e))?),
                "order" => {
                    let o = if v == "random" {
                        OrderSpec::Random(0)
                    } else {
                        v.parse().map_err(|e: margin_lab::Error| strip_kind(e))?
                    };
                    if let OrderSpec::File(p) = &o {
                        require_file(p)?;
                    }
                    cfg.order = Some(o);
                }
                "order_len" => cfg.order_len = Some(parse_positive(&v, "order_len")?),
                "gammas" => {
                    cfg.gammas = parse_list(&v, "gammas")?;
                    if cfg.gammas.iter().any(|&g| g >= 1.0) {
                        return Err("gammas must lie in (0, 1)".into());
                    }
                }
                "epsilons" => {
                    cfg.epsilons = parse_list(&v, "epsilons")?;
                    if cfg.epsilons.iter().any(|&e| e >= 1.0) {
                        return Err("epsilons must lie in (0, 1)".into());
                    }
                }
                "max_steps" => cfg.max_steps = parse_positive(&v, "max_steps")?,
                "bench_mode" => cfg.bench_mode = v.parse()?,
                "bench_dim" => cfg.bench_dim = parse_positive(&v, "bench_dim")?,
                "bench_samples" => cfg.bench_samples = parse_positive(&v, "bench_samples")?,
                "claims" => cfg.claims = v.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect(),
                other => return Err(format!("unknown key '{other}'")),
            }
            Ok(())
        })();
        if let Err(msg) = res {
            errors.push(ConfigError { line, msg });
        }
    }

    if let Some(cmd) = command {
        for key in cmd.required() {
            if !present.iter().any(|p| p == key) {
                errors.push(ConfigError { line: 0, msg: format!("missing required key '{key}' for command {cmd}") });
            }
        }
        if cmd == Command::RunNn {
            if let Some(s) = cfg.stepsize.filter(|s| matches!(s, StepsizeMode::Constant(_))) {
                errors.push(ConfigError { line: 0, msg: format!("run-nn needs an adaptive stepsize, got {}", fmt_stepsize(&s)) });
            }
        }
    }
    if cfg.seed.is_some() {
        let seed = cfg.seed.unwrap();
        cfg.apply_seed(seed);
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        errors.sort_by_key(|e| e.line);
        Err(errors)
    }
}

/// Drops the "invalid parameter: " prefix so messages read as config errors.
fn strip_kind(e: margin_lab::Error) -> String {
    let s = e.to_string();
    s.strip_prefix("invalid parameter: ").map(str::to_string).unwrap_or(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errs(text: &str) -> Vec<ConfigError> {
        parse_config(text).unwrap_err()
    }

    #[test]
    fn documented_example_parses() {
        let cfg = parse_config(
            "command = run\nloss = exp\nstepsize = adaptive:100\nsteps = 200\ndataset = random:d=10,n=100,gamma=0.1,seed=7",
        )
        .unwrap();
        assert_eq!(cfg.command, Command::Run);
        assert_eq!(cfg.stepsize, Some(StepsizeMode::Adaptive(100.0)));
        assert_eq!(cfg.dataset, Some(DatasetSource::Random { d: 10, n: 100, gamma: 0.1, seed: 7 }));
    }

    #[test]
    fn documented_errors() {
        let e = errs("command = run\nstepsize = adaptive:-1\n");
        assert!(e.iter().any(|e| e.line == 2 && e.msg == "eta must be positive"), "{e:?}");
        let e = errs("command = run\nloss = poly:0\n");
        assert!(e.iter().any(|e| e.line == 2 && e.msg == "k must be > 0"), "{e:?}");
    }

    #[test]
    fn unknown_duplicate_and_missing() {
        let e = errs("command = run\nfoo = 1\nsteps = 3\nsteps = 4\n");
        assert!(e.iter().any(|e| e.line == 2 && e.msg.contains("unknown key")));
        assert!(e.iter().any(|e| e.line == 4 && e.msg.contains("duplicate")));
        assert!(e.iter().any(|e| e.line == 0 && e.msg.contains("'dataset'")));
        let e = errs("dataset = file:/definitely/not/here.txt\n");
        assert!(e.iter().any(|e| e.msg.contains("'command'")));
        assert!(e.iter().any(|e| e.line == 1 && e.msg.contains("file not found")));
    }

    #[test]
    fn seed_overrides_random_sources() {
        let cfg = parse_config("command = perceptron\ndataset = random:d=3,n=5,gamma=0.1,seed=1\norder = random\nseed = 9\n").unwrap();
        assert_eq!(cfg.dataset, Some(DatasetSource::Random { d: 3, n: 5, gamma: 0.1, seed: 9 }));
        assert_eq!(cfg.order, Some(OrderSpec::Random(9)));
    }

    #[test]
    fn canonical_form_ignores_layout_and_output_dir() {
        let a = parse_config("command = run\nloss = exp\nstepsize = adaptive:100\nsteps = 20\ndataset = random:d=3,n=5,gamma=0.1\nout = a\n").unwrap();
        let b = parse_config("# same run\ndataset=random:d=3,n=5,gamma=0.1,seed=0\nsteps = 20  # T\nstepsize = adaptive:1e2\nloss=exp\ncommand=run\nout = b\n").unwrap();
        assert_eq!(a.canonical(), b.canonical());
    }
}
