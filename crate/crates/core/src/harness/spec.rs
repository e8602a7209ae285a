use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::solvers::{Method, SolverConfig, StepSize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prior {
    Gaussian,
    Image,
}

impl Prior {
    pub fn name(self) -> &'static str {
        match self {
            Prior::Gaussian => "gaussian",
            Prior::Image => "image",
        }
    }
}

impl FromStr for Prior {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(Prior::Gaussian),
            "image" => Ok(Prior::Image),
            other => Err(Error::Parse(format!("unknown prior {other:?} (expected gaussian|image)"))),
        }
    }
}

/// A synthetic sparse-regression experiment. The defaults are the Gaussian
/// setting: `d = 128`, `n = 256`, `k* = 16`, `k = 64`, 750 iterations, 20 runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub prior: Prior,
    pub d: usize,
    pub n: usize,
    pub k_star: usize,
    pub k: usize,
    pub iters: usize,
    pub runs: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub image_path: Option<PathBuf>,
    pub eta: StepSize<f64>,
    pub damp: f64,
    pub lambda: f64,
    pub batch: Option<usize>,
    /// Standard deviation of additive label noise; zero for exact measurements.
    pub noise: f64,
    pub jobs: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            prior: Prior::Gaussian,
            d: 128,
            n: 256,
            k_star: 16,
            k: 64,
            iters: 750,
            runs: 20,
            seed: 0,
            methods: vec![Method::Iht, Method::TopkIobs],
            image_path: None,
            eta: StepSize::Auto,
            damp: 0.0,
            lambda: 1.0,
            batch: None,
            noise: 0.0,
            jobs: 1,
        }
    }
}

impl ExperimentSpec {
    /// Image setting for a `d`-pixel signal with `k_star` nonzero pixels:
    /// `n = 2d`, `k = 2k*`, 4000 iterations.
    pub fn image(path: PathBuf, d: usize, k_star: usize) -> Self {
        Self {
            prior: Prior::Image,
            d,
            n: 2 * d,
            k_star,
            k: (2 * k_star).min(d),
            iters: 4000,
            image_path: Some(path),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.d == 0 || self.n == 0 {
            return bad("d and n must be positive".into());
        }
        if self.k_star > self.k || self.k > self.d {
            return bad(format!("need kstar <= k <= d, got kstar={} k={} d={}", self.k_star, self.k, self.d));
        }
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.prior == Prior::Image && self.image_path.is_none() {
            return bad("image prior needs an image path".into());
        }
        if !(self.damp >= 0.0) || !(self.lambda >= 0.0) || !(self.noise >= 0.0) {
            return bad("damp, lambda and noise must be nonnegative".into());
        }
        Ok(())
    }

    pub fn solver_config(&self, seed: u64) -> SolverConfig<f64> {
        let mut cfg = SolverConfig::new(self.k).with_iters(self.iters);
        cfg.eta = self.eta;
        cfg.damp = self.damp;
        cfg.stoch_lambda = self.lambda;
        cfg.batch_size = self.batch;
        cfg.seed = seed;
        cfg
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e| Error::Parse(format!("{key}={v:?}: {e}")))
        }
        let v = value.trim();
        match key.trim() {
            "prior" => self.prior = v.parse()?,
            "d" => self.d = num(key, v)?,
            "n" => self.n = num(key, v)?,
            "kstar" => self.k_star = num(key, v)?,
            "k" => self.k = num(key, v)?,
            "iters" => self.iters = num(key, v)?,
            "runs" => self.runs = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "methods" => self.methods = v.split(',').map(str::parse).collect::<Result<_>>()?,
            "image" => self.image_path = Some(PathBuf::from(v)),
            "eta" => self.eta = v.parse()?,
            "damp" => self.damp = num(key, v)?,
            "lambda" => self.lambda = num(key, v)?,
            "batch" => self.batch = if v == "full" { None } else { Some(num(key, v)?) },
            "noise" => self.noise = num(key, v)?,
            "jobs" => self.jobs = num(key, v)?,
            other => return Err(Error::Parse(format!("unknown spec key {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key=value` lines on top of the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got {raw:?}", lineno + 1)))?;
            spec.set(k, v)?;
        }
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "prior={}", self.prior.name());
        for (k, v) in [
            ("d", self.d),
            ("n", self.n),
            ("kstar", self.k_star),
            ("k", self.k),
            ("iters", self.iters),
            ("runs", self.runs),
        ] {
            let _ = writeln!(s, "{k}={v}");
        }
        let _ = writeln!(s, "seed={}", self.seed);
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        let _ = writeln!(s, "methods={}", methods.join(","));
        if let Some(p) = &self.image_path {
            let _ = writeln!(s, "image={}", p.display());
        }
        match self.eta {
            StepSize::Auto => s.push_str("eta=auto\n"),
            StepSize::Fixed(v) => {
                let _ = writeln!(s, "eta={v:e}");
            }
        }
        let _ = writeln!(s, "damp={:e}\nlambda={:e}\nnoise={:e}", self.damp, self.lambda, self.noise);
        match self.batch {
            Some(b) => {
                let _ = writeln!(s, "batch={b}");
            }
            None => s.push_str("batch=full\n"),
        }
        s
    }
}
