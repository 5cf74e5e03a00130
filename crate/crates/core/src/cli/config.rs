//! Plain-text `key = value` run configuration with dotted keys and `#` comments.

use std::path::PathBuf;

use crate::diagnostics::{ConstraintThresholds, MAX_TIME_ORDER};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, DEFAULT_DEALIAS_FRACTION};
use crate::linear_step::{DiffusionOptions, StepOptions, DEFAULT_CFL_SAFETY};
use crate::picard::PicardConfig;
use crate::state::{EquationOfState, InitialDataSpec, Preset};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub dealias_fraction: f64,

    pub lambda: f64,
    pub c0: f64,
    pub epsilon: f64,
    pub pressure_slope: f64,

    pub kappa: f64,
    pub kappa_list: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub diffusion_tol: f64,
    pub diffusion_max_iter: usize,

    pub preset: Preset,
    pub amplitude: f64,
    pub seed: u64,

    pub directory: PathBuf,
    pub snapshot_stride: usize,
    pub checkpoint: bool,

    pub max_time_order: usize,
    pub lemma_suite: bool,
    pub div_flag_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n1: 16,
            n2: 16,
            n3: 16,
            dealias_fraction: DEFAULT_DEALIAS_FRACTION,
            lambda: 1.0,
            c0: 0.5,
            epsilon: 0.1,
            pressure_slope: 1.0,
            kappa: 0.1,
            kappa_list: vec![0.2, 0.1, 0.05],
            dt: 0.005,
            t_end: 0.05,
            cfl_safety: DEFAULT_CFL_SAFETY,
            picard_tol: 1e-8,
            picard_max_iter: 20,
            diffusion_tol: 1e-9,
            diffusion_max_iter: 500,
            preset: Preset::Quiescent,
            amplitude: 0.01,
            seed: 1,
            directory: PathBuf::from("lfmhd-out"),
            snapshot_stride: 1,
            checkpoint: false,
            max_time_order: 2,
            lemma_suite: false,
            div_flag_tol: 1e-4,
        }
    }
}

/// Every accepted key, in documentation order.
pub const KEYS: &[&str] = &[
    "grid.n1",
    "grid.n2",
    "grid.n3",
    "grid.dealias_fraction",
    "physics.lambda",
    "physics.c0",
    "physics.epsilon",
    "physics.pressure_slope",
    "scheme.kappa",
    "scheme.kappa_list",
    "scheme.dt",
    "scheme.t_end",
    "scheme.cfl_safety",
    "scheme.picard_tol",
    "scheme.picard_max_iter",
    "scheme.diffusion_tol",
    "scheme.diffusion_max_iter",
    "data.preset",
    "data.amplitude",
    "data.seed",
    "output.directory",
    "output.snapshot_stride",
    "output.checkpoint",
    "diagnostics.max_time_order",
    "diagnostics.lemma_suite",
    "diagnostics.div_flag_tol",
];

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config { line, message: format!("{key}: cannot parse '{value}'") })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::Config { line, message: format!("{key}: expected true/false, got '{value}'") }),
    }
}

impl RunConfig {
    /// Parses a whole file on top of the defaults, then validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config { line: i + 1, message: format!("expected 'key = value', got '{line}'") })?;
            cfg.set(i + 1, key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Applies `key=value` overrides (reported as line 0), then revalidates.
    pub fn with_overrides(mut self, overrides: &[String]) -> Result<Self> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config { line: 0, message: format!("override '{o}' is not key=value") })?;
            self.set(0, k.trim(), v.trim())?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        match key {
            "grid.n1" => self.n1 = parse_num(line, key, value)?,
            "grid.n2" => self.n2 = parse_num(line, key, value)?,
            "grid.n3" => self.n3 = parse_num(line, key, value)?,
            "grid.dealias_fraction" => self.dealias_fraction = parse_num(line, key, value)?,
            "physics.lambda" => self.lambda = parse_num(line, key, value)?,
            "physics.c0" => self.c0 = parse_num(line, key, value)?,
            "physics.epsilon" => self.epsilon = parse_num(line, key, value)?,
            "physics.pressure_slope" => self.pressure_slope = parse_num(line, key, value)?,
            "scheme.kappa" => self.kappa = parse_num(line, key, value)?,
            "scheme.kappa_list" => {
                self.kappa_list = value
                    .split(',')
                    .map(|s| parse_num(line, key, s.trim()))
                    .collect::<Result<Vec<f64>>>()?
            }
            "scheme.dt" => self.dt = parse_num(line, key, value)?,
            "scheme.t_end" => self.t_end = parse_num(line, key, value)?,
            "scheme.cfl_safety" => self.cfl_safety = parse_num(line, key, value)?,
            "scheme.picard_tol" => self.picard_tol = parse_num(line, key, value)?,
            "scheme.picard_max_iter" => self.picard_max_iter = parse_num(line, key, value)?,
            "scheme.diffusion_tol" => self.diffusion_tol = parse_num(line, key, value)?,
            "scheme.diffusion_max_iter" => self.diffusion_max_iter = parse_num(line, key, value)?,
            "data.preset" => {
                self.preset = value.parse().map_err(|e: Error| Error::Config { line, message: e.to_string() })?
            }
            "data.amplitude" => self.amplitude = parse_num(line, key, value)?,
            "data.seed" => self.seed = parse_num(line, key, value)?,
            "output.directory" => self.directory = PathBuf::from(value),
            "output.snapshot_stride" => self.snapshot_stride = parse_num(line, key, value)?,
            "output.checkpoint" => self.checkpoint = parse_bool(line, key, value)?,
            "diagnostics.max_time_order" => self.max_time_order = parse_num(line, key, value)?,
            "diagnostics.lemma_suite" => self.lemma_suite = parse_bool(line, key, value)?,
            "diagnostics.div_flag_tol" => self.div_flag_tol = parse_num(line, key, value)?,
            _ => {
                return Err(Error::Config { line, message: format!("unknown key '{key}'") });
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Err(Error::Config { line: 0, message });
        self.grid_spec().map_err(|e| Error::Config { line: 0, message: e.to_string() })?;
        let positive = [
            ("physics.lambda", self.lambda),
            ("physics.epsilon", self.epsilon),
            ("scheme.kappa", self.kappa),
            ("scheme.dt", self.dt),
            ("scheme.t_end", self.t_end),
            ("scheme.cfl_safety", self.cfl_safety),
            ("scheme.picard_tol", self.picard_tol),
            ("scheme.diffusion_tol", self.diffusion_tol),
            ("diagnostics.div_flag_tol", self.div_flag_tol),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{k} must be positive and finite, got {v}"));
            }
        }
        for (k, v) in [("physics.c0", self.c0), ("physics.pressure_slope", self.pressure_slope), ("data.amplitude", self.amplitude)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{k} must be non-negative and finite, got {v}"));
            }
        }
        if self.kappa_list.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return bad(format!("scheme.kappa_list entries must be positive, got {:?}", self.kappa_list));
        }
        if self.picard_max_iter < 2 {
            return bad(format!("scheme.picard_max_iter must be at least 2, got {}", self.picard_max_iter));
        }
        if self.diffusion_max_iter == 0 || self.snapshot_stride == 0 {
            return bad("scheme.diffusion_max_iter and output.snapshot_stride must be at least 1".into());
        }
        if self.max_time_order > MAX_TIME_ORDER {
            return bad(format!("diagnostics.max_time_order must be <= {MAX_TIME_ORDER}, got {}", self.max_time_order));
        }
        crate::linear_step::step_count(self.dt, self.t_end).map_err(|e| Error::Config { line: 0, message: e.to_string() })?;
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::with_dealias(self.n1, self.n2, self.n3, self.dealias_fraction)
    }

    pub fn eos(&self) -> EquationOfState {
        EquationOfState { lambda: self.lambda }
    }

    pub fn data_spec(&self) -> InitialDataSpec {
        InitialDataSpec {
            preset: self.preset,
            amplitude: self.amplitude,
            seed: self.seed,
            pressure_slope: self.pressure_slope,
            c0: self.c0,
            epsilon: self.epsilon,
        }
    }

    pub fn picard(&self) -> PicardConfig {
        PicardConfig {
            kappa: self.kappa,
            dt: self.dt,
            t_end: self.t_end,
            tol: self.picard_tol,
            max_iter: self.picard_max_iter,
            eos: self.eos(),
            step: StepOptions {
                cfl_safety: self.cfl_safety,
                diffusion: DiffusionOptions { tol: self.diffusion_tol, max_iter: self.diffusion_max_iter },
            },
        }
    }

    pub fn thresholds(&self) -> ConstraintThresholds {
        ConstraintThresholds { c0: self.c0, epsilon: self.epsilon, div_tol: self.div_flag_tol }
    }
}
