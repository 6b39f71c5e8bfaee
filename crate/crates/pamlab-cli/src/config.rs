//! Flat `key = value` experiment configuration.

use crate::CliError;
use pamlab::ModelParams;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::PathBuf;

pub const EXPERIMENTS: [&str; 12] = [
    "constants",
    "verify-h",
    "verify-j",
    "campbell",
    "tilt-clt",
    "local-limit",
    "ids",
    "laplace-identity",
    "annealed",
    "quenched",
    "pocket",
    "pocket-prob",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub d: usize,
    pub alpha: f64,
    pub nu: f64,
    pub kappa: f64,
    pub t: Vec<f64>,
    pub log_t: Vec<f64>,
    pub rho: Vec<f64>,
    pub lambda: Vec<f64>,
    pub r: Vec<f64>,
    pub m: f64,
    pub eps: f64,
    pub h: f64,
    pub dt: f64,
    /// moment order
    pub p: f64,
    /// local-limit window
    pub a: f64,
    pub bc: String,
    pub buffer: f64,
    pub box_half_width: f64,
    pub spacing: f64,
    pub stride: f64,
    pub n_env: usize,
    pub n_paths: usize,
    pub n_starts: usize,
    pub seed: Option<u64>,
    pub width: usize,
    pub max_nodes: f64,
    pub max_paths: f64,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: String::new(),
            d: 1,
            alpha: 2.0,
            nu: 1.0,
            kappa: 1.0,
            t: vec![5.0, 10.0, 20.0, 30.0],
            log_t: vec![10.0, 15.0, 20.0],
            rho: vec![1e6],
            lambda: (1..=20).map(|i| i as f64 / 20.0).collect(),
            r: vec![500.0, 1000.0, 2000.0],
            m: 8.0,
            eps: 1.0,
            h: 0.05,
            dt: 0.01,
            p: 1.0,
            a: 0.2,
            bc: "dirichlet".into(),
            buffer: 2000.0,
            box_half_width: 40.0,
            spacing: 0.1,
            stride: 0.5,
            n_env: 20,
            n_paths: 10_000,
            n_starts: 50,
            seed: None,
            width: 1,
            max_nodes: 2e7,
            max_paths: 1e7,
            output: PathBuf::from("out"),
        }
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v.trim().parse().map_err(|_| bad(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(bad(key, "must be finite"));
    }
    Ok(x)
}

// counts may be written as 1e5
fn parse_count(key: &str, v: &str) -> Result<usize, CliError> {
    let x = parse_f64(key, v)?;
    if x < 0.0 || x.fract() != 0.0 || x > 9.0e15 {
        return Err(bad(key, format!("`{v}` is not a nonnegative integer")));
    }
    Ok(x as usize)
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "experiment" => self.experiment = v.to_string(),
            "d" => self.d = parse_count("d", v)?,
            "alpha" => self.alpha = parse_f64("alpha", v)?,
            "nu" => self.nu = parse_f64("nu", v)?,
            "kappa" => self.kappa = parse_f64("kappa", v)?,
            "t" => self.t = parse_list("t", v)?,
            "log_t" => self.log_t = parse_list("log_t", v)?,
            "rho" => self.rho = parse_list("rho", v)?,
            "lambda" => self.lambda = parse_list("lambda", v)?,
            "r" => self.r = parse_list("r", v)?,
            "m" => self.m = parse_f64("m", v)?,
            "eps" => self.eps = parse_f64("eps", v)?,
            "h" => self.h = parse_f64("h", v)?,
            "dt" => self.dt = parse_f64("dt", v)?,
            "p" => self.p = parse_f64("p", v)?,
            "a" => self.a = parse_f64("a", v)?,
            "bc" => self.bc = v.to_ascii_lowercase(),
            "buffer" => self.buffer = parse_f64("buffer", v)?,
            "box" => self.box_half_width = parse_f64("box", v)?,
            "spacing" => self.spacing = parse_f64("spacing", v)?,
            "stride" => self.stride = parse_f64("stride", v)?,
            "n_env" => self.n_env = parse_count("n_env", v)?,
            "n_paths" => self.n_paths = parse_count("n_paths", v)?,
            "n_starts" => self.n_starts = parse_count("n_starts", v)?,
            "seed" => {
                self.seed = Some(v.parse().map_err(|_| bad("seed", format!("`{v}` is not a u64")))?);
            }
            "width" => self.width = parse_count("width", v)?,
            "max_nodes" => self.max_nodes = parse_f64("max_nodes", v)?,
            "max_paths" => self.max_paths = parse_f64("max_paths", v)?,
            "output" => self.output = PathBuf::from(v),
            other => return Err(CliError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Key/value echo in the file syntax. Floats use the shortest round-trip form.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("experiment", self.experiment.clone());
        put("d", self.d.to_string());
        put("alpha", format!("{:?}", self.alpha));
        put("nu", format!("{:?}", self.nu));
        put("kappa", format!("{:?}", self.kappa));
        put("t", fmt_list(&self.t));
        put("log_t", fmt_list(&self.log_t));
        put("rho", fmt_list(&self.rho));
        put("lambda", fmt_list(&self.lambda));
        put("r", fmt_list(&self.r));
        put("m", format!("{:?}", self.m));
        put("eps", format!("{:?}", self.eps));
        put("h", format!("{:?}", self.h));
        put("dt", format!("{:?}", self.dt));
        put("p", format!("{:?}", self.p));
        put("a", format!("{:?}", self.a));
        put("bc", self.bc.clone());
        put("buffer", format!("{:?}", self.buffer));
        put("box", format!("{:?}", self.box_half_width));
        put("spacing", format!("{:?}", self.spacing));
        put("stride", format!("{:?}", self.stride));
        put("n_env", self.n_env.to_string());
        put("n_paths", self.n_paths.to_string());
        put("n_starts", self.n_starts.to_string());
        put("seed", self.seed.map(|s| s.to_string()).unwrap_or_default());
        put("width", self.width.to_string());
        put("max_nodes", format!("{:?}", self.max_nodes));
        put("max_paths", format!("{:?}", self.max_paths));
        put("output", self.output.display().to_string());
        m
    }

    /// SHA-256 of the sorted `key = value` lines. `width` and `output` do not affect results and are
    /// left out.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.echo() {
            if k == "width" || k == "output" {
                continue;
            }
            h.update(format!("{k} = {v}\n").as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(self.d, self.alpha, self.nu, self.kappa).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(CliError::Config(format!(
                "unknown experiment `{}` (expected one of {})",
                self.experiment,
                EXPERIMENTS.join(", ")
            )));
        }
        if self.seed.is_none() {
            return Err(bad("seed", "a master seed is required"));
        }
        self.params()?;
        for (k, g) in [("t", &self.t), ("log_t", &self.log_t), ("rho", &self.rho), ("lambda", &self.lambda), ("r", &self.r)] {
            if g.is_empty() {
                return Err(bad(k, "grid is empty"));
            }
        }
        for (k, g) in [("t", &self.t), ("log_t", &self.log_t), ("rho", &self.rho), ("r", &self.r)] {
            if g.iter().any(|x| !(*x > 0.0)) {
                return Err(bad(k, "entries must be positive"));
            }
        }
        if !(self.p >= 0.0) {
            return Err(bad("p", "moment order must be nonnegative"));
        }
        for (k, x) in [
            ("m", self.m),
            ("eps", self.eps),
            ("h", self.h),
            ("dt", self.dt),
            ("a", self.a),
            ("buffer", self.buffer),
            ("box", self.box_half_width),
            ("spacing", self.spacing),
            ("stride", self.stride),
            ("max_nodes", self.max_nodes),
            ("max_paths", self.max_paths),
        ] {
            if !(x > 0.0) {
                return Err(bad(k, "must be positive"));
            }
        }
        for (k, n) in [("n_env", self.n_env), ("n_paths", self.n_paths), ("n_starts", self.n_starts), ("width", self.width)] {
            if n == 0 {
                return Err(bad(k, "must be at least 1"));
            }
        }
        if self.bc != "dirichlet" && self.bc != "neumann" {
            return Err(bad("bc", "expected dirichlet or neumann"));
        }
        Ok(())
    }
}
