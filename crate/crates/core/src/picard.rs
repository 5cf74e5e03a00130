//! Outer fixed-point iteration for the smoothed nonlinear problem, and the sweep over
//! smoothing lengths.

use std::time::Instant;

use rayon::prelude::*;

use crate::correction::correction_field;
use crate::diagnostics::difference_sup;
use crate::error::{Error, Result};
use crate::geometry::build_geometry;
use crate::grid::{Grid, VectorField};
use crate::linear_step::{advance_linearized, step_count, FrozenCoefficients, StepOptions, Trajectory};
use crate::state::{EquationOfState, FlowState};

/// Time-derivative truncation of the difference energy that measures contraction.
pub const PICARD_TIME_ORDER: usize = 2;

/// Consecutive increases of `d_n` tolerated before giving up.
pub const NON_CONTRACTION_RUN: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardConfig {
    pub kappa: f64,
    pub dt: f64,
    pub t_end: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub eos: EquationOfState,
    pub step: StepOptions,
}

impl PicardConfig {
    pub fn new(kappa: f64, dt: f64, t_end: f64) -> Self {
        Self {
            kappa,
            dt,
            t_end,
            tol: 1e-8,
            max_iter: 20,
            eos: EquationOfState::default(),
            step: StepOptions::default(),
        }
    }

    fn validate(&self) -> Result<usize> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidKappa(self.kappa));
        }
        if !(self.tol > 0.0) || self.max_iter < 2 {
            return Err(Error::InvalidArgument(format!(
                "need tol > 0 and max_iter >= 2, got tol = {}, max_iter = {}",
                self.tol, self.max_iter
            )));
        }
        let steps = step_count(self.dt, self.t_end)?;
        if steps < PICARD_TIME_ORDER + 1 {
            return Err(Error::InsufficientHistory(format!(
                "the contraction measure needs at least {} time steps, T / dt = {steps}",
                PICARD_TIME_ORDER + 1
            )));
        }
        Ok(steps)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// Index `n` of the iterate just produced (the trivial start is 0).
    pub iterate: usize,
    /// `sup_t` of the difference energy between iterates `n` and `n - 1`.
    pub difference: f64,
    /// `d_n / d_{n-1}`, absent for the first iterate or when `d_{n-1} = 0`.
    pub ratio: Option<f64>,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationLog {
    pub kappa: f64,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub time_order: usize,
}

impl IterationLog {
    pub fn differences(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.difference).collect()
    }

    /// Equality ignoring wall-clock times.
    pub fn same_numbers(&self, other: &Self) -> bool {
        self.kappa.to_bits() == other.kappa.to_bits()
            && self.converged == other.converged
            && self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| {
                a.iterate == b.iterate
                    && a.difference.to_bits() == b.difference.to_bits()
                    && a.ratio.map(f64::to_bits) == b.ratio.map(f64::to_bits)
            })
    }
}

/// The trivial iterate `(Id, 0, 0, 0)` on every time node.
pub fn trivial_trajectory(grid: &Grid, init: &FlowState, kappa: f64, dt: f64, steps: usize) -> Trajectory {
    let snapshots = (0..=steps)
        .map(|j| {
            let mut s = FlowState::trivial(init.rho0.clone());
            s.t = init.t + j as f64 * dt;
            s
        })
        .collect();
    Trajectory { grid: *grid.spec(), dt, kappa, snapshots }
}

/// Iterates the linearized step from the trivial start until the difference energy
/// drops to `tol (1 + d_1)`, or `max_iter` iterates have been produced.
pub fn solve_nonlinear_kappa(grid: &Grid, init: &FlowState, cfg: &PicardConfig) -> Result<(Trajectory, IterationLog)> {
    let steps = cfg.validate()?;
    let wrap = |iterate: usize| move |e: Error| Error::PicardStep { iterate, source: Box::new(e) };
    let mut prev = trivial_trajectory(grid, init, cfg.kappa, cfg.dt, steps);
    let mut frozen = FrozenCoefficients::trivial(&init.rho0, cfg.kappa, steps + 1);
    let mut log = IterationLog { kappa: cfg.kappa, records: Vec::new(), converged: false, time_order: PICARD_TIME_ORDER };
    let mut increases = 0;
    for n in 1..=cfg.max_iter {
        let clock = Instant::now();
        if n > 1 {
            frozen = FrozenCoefficients::from_trajectory(grid, &prev, cfg.kappa, &cfg.eos).map_err(wrap(n))?;
        }
        let next = advance_linearized(grid, &frozen, init, cfg.dt, cfg.t_end, &cfg.eos, &cfg.step).map_err(wrap(n))?;
        let d = difference_sup(grid, &next, &prev, PICARD_TIME_ORDER).map_err(wrap(n))?;
        let last = log.records.last().map(|r| r.difference);
        let ratio = last.filter(|&l| l > 0.0).map(|l| d / l);
        log.records.push(IterationRecord { iterate: n, difference: d, ratio, wall_seconds: clock.elapsed().as_secs_f64() });
        prev = next;
        if !d.is_finite() {
            return Err(Error::NonContraction { iterate: n, last: d });
        }
        if n >= 2 {
            increases = if last.is_some_and(|l| d > l) { increases + 1 } else { 0 };
            if increases >= NON_CONTRACTION_RUN {
                return Err(Error::NonContraction { iterate: n, last: d });
            }
            let d1 = log.records[0].difference;
            if d <= cfg.tol * (1.0 + d1) {
                log.converged = true;
                break;
            }
        }
    }
    Ok((prev, log))
}

/// Re-freezes `traj` and advances once more: the difference energy to `traj`.
/// Small for a converged fixed point.
pub fn self_consistency(grid: &Grid, traj: &Trajectory, cfg: &PicardConfig) -> Result<f64> {
    let frozen = FrozenCoefficients::from_trajectory(grid, traj, cfg.kappa, &cfg.eos)?;
    let again = advance_linearized(grid, &frozen, &traj.snapshots[0], cfg.dt, cfg.t_end, &cfg.eos, &cfg.step)?;
    difference_sup(grid, &again, traj, PICARD_TIME_ORDER)
}

/// `max_t ||psi||_0` along a trajectory, each node with its own smoothed geometry.
pub fn max_correction_norm(grid: &Grid, traj: &Trajectory) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in &traj.snapshots {
        let cache = build_geometry(grid, &s.eta, traj.kappa)?;
        let psi: VectorField = correction_field(grid, &s.eta, &s.v, &cache)?;
        let n: f64 = (0..3).map(|c| grid.l2_sq(&psi[c])).sum();
        worst = worst.max(n.sqrt());
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct SweepMember {
    pub kappa: f64,
    pub log: IterationLog,
    pub max_psi: f64,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub members: Vec<SweepMember>,
    /// `delta_j = sup_t` difference energy between members `j` and `j + 1`.
    pub deltas: Vec<f64>,
    pub deltas_decreasing: bool,
    pub psi_decreasing: bool,
    /// Smallest-kappa trajectory.
    pub best: Trajectory,
}

/// Worker count from `LFMHD_THREADS`, else the machine's parallelism.
pub fn worker_threads() -> usize {
    std::env::var("LFMHD_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn check_kappa_list(kappas: &[f64]) -> Result<()> {
    if kappas.len() < 3 {
        return Err(Error::InvalidArgument(format!("kappa sweep needs at least 3 values, got {}", kappas.len())));
    }
    for w in kappas.windows(2) {
        if !(w[1] > 0.0) || ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "kappa list must halve at each entry, found {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// Runs one Picard solve per kappa (in parallel, at most `threads` at once) and compares
/// neighbours. `base.kappa` is ignored.
pub fn kappa_sweep(
    grid: &Grid,
    init: &FlowState,
    base: &PicardConfig,
    kappas: &[f64],
    threads: usize,
) -> Result<SweepReport> {
    check_kappa_list(kappas)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let runs: Vec<Result<(Trajectory, IterationLog, f64)>> = pool.install(|| {
        kappas
            .par_iter()
            .map(|&kappa| {
                let cfg = PicardConfig { kappa, ..*base };
                let member = || -> Result<(Trajectory, IterationLog, f64)> {
                    let (traj, log) = solve_nonlinear_kappa(grid, init, &cfg)?;
                    let psi = max_correction_norm(grid, &traj)?;
                    Ok((traj, log, psi))
                };
                member().map_err(|e| Error::SweepMember { kappa, source: Box::new(e) })
            })
            .collect()
    });
    let mut trajs = Vec::with_capacity(kappas.len());
    let mut members = Vec::with_capacity(kappas.len());
    for (run, &kappa) in runs.into_iter().zip(kappas) {
        let (traj, log, max_psi) = run?;
        trajs.push(traj);
        members.push(SweepMember { kappa, log, max_psi });
    }
    let deltas = trajs
        .windows(2)
        .map(|w| difference_sup(grid, &w[0], &w[1], PICARD_TIME_ORDER))
        .collect::<Result<Vec<_>>>()?;
    let psis: Vec<f64> = members.iter().map(|m| m.max_psi).collect();
    Ok(SweepReport {
        deltas_decreasing: strictly_decreasing(&deltas),
        psi_decreasing: strictly_decreasing(&psis),
        deltas,
        members,
        best: trajs.pop().expect("at least three members"),
    })
}
