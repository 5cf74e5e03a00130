//! Command-line front end: argument parsing, run orchestration and exit codes.

pub mod checkpoint;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::diagnostics::{
    constraint_residuals, energy_functionals, lemma_suite, nonlinear_residuals, physical_energy_balance,
    wave_equation_residual, ConstraintThresholds,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linear_step::Trajectory;
use crate::picard::{kappa_sweep, solve_nonlinear_kappa, worker_threads, IterationLog, PICARD_TIME_ORDER};
use crate::state::{make_initial_data, EquationOfState};

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "lfmhd", version, about = "Smoothed free-boundary MHD solver and diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve at `scheme.kappa` and write energy, iteration and residual CSVs.
    Run {
        config: PathBuf,
        /// Override a config entry, e.g. `--set scheme.dt=0.002`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Solve at `scheme.kappa` and write only the Picard iteration log.
    PicardTrace {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Solve for every entry of `scheme.kappa_list` and compare neighbours.
    KappaSweep {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Sample the functional inequalities with random fields.
    CheckLemmas {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32])]
        sizes: Vec<usize>,
        #[arg(long, default_value = "lfmhd-out")]
        output: PathBuf,
    },
    /// Recompute diagnostics from a stored checkpoint.
    EnergyReport {
        checkpoint: PathBuf,
        #[arg(long, default_value_t = PICARD_TIME_ORDER)]
        order: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.5)]
        c0: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-4)]
        div_tol: f64,
        #[arg(long, default_value = "lfmhd-out")]
        output: PathBuf,
    },
}

/// Innermost error after unwrapping iterate and sweep-member context.
pub fn root_cause(e: &Error) -> &Error {
    match e {
        Error::PicardStep { source, .. } | Error::SweepMember { source, .. } => root_cause(source),
        other => other,
    }
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> u8 {
    match root_cause(e) {
        Error::Config { .. } => 2,
        Error::Cfl { .. } => 3,
        Error::NonContraction { .. } => 4,
        Error::DegenerateMap { .. } => 5,
        _ => 1,
    }
}

/// Short name printed in front of the failure message.
pub fn failure_name(e: &Error) -> &'static str {
    match root_cause(e) {
        Error::Config { .. } => "config",
        Error::Cfl { .. } => "cfl",
        Error::NonContraction { .. } => "non-contraction",
        Error::DegenerateMap { .. } => "degenerate-map",
        Error::DiffusionSolve { .. } => "diffusion-solve",
        Error::InitialData { .. } => "initial-data",
        Error::Checkpoint(_) => "checkpoint",
        Error::NonFinite { .. } => "non-finite",
        Error::Io(_) => "io",
        _ => "error",
    }
}

fn load(config: &Path, overrides: &[String]) -> Result<RunConfig> {
    let cfg = match std::fs::read_to_string(config) {
        Ok(text) => RunConfig::parse(&text)?,
        Err(e) => {
            return Err(Error::Config { line: 0, message: format!("cannot read {}: {e}", config.display()) })
        }
    };
    cfg.with_overrides(overrides)
}

fn prepare(cfg: &RunConfig) -> Result<(Grid, crate::state::FlowState)> {
    let grid = Grid::new(cfg.grid_spec()?)?;
    let init = make_initial_data(&grid, &cfg.data_spec())?;
    std::fs::create_dir_all(&cfg.directory)?;
    Ok((grid, init))
}

/// Writes `energy.csv` and `residuals.csv` for a trajectory.
pub fn write_diagnostics(
    grid: &Grid,
    traj: &Trajectory,
    order: usize,
    eos: &EquationOfState,
    th: &ConstraintThresholds,
    stride: usize,
    dir: &Path,
) -> Result<()> {
    let energy = energy_functionals(grid, traj, order, eos, th)?;
    let constraints = constraint_residuals(grid, traj, th)?;
    output::energy_table(&energy, &constraints, stride).write(&dir.join("energy.csv"))?;
    let nl = nonlinear_residuals(grid, traj, eos)?;
    let wave = if traj.len() >= 4 { Some(wave_equation_residual(grid, traj, eos)?) } else { None };
    let balance = physical_energy_balance(grid, traj, eos)?;
    output::residual_table(&nl, wave.as_ref(), &balance, order, stride).write(&dir.join("residuals.csv"))?;
    Ok(())
}

fn report_log(log: &IterationLog) -> String {
    let d = log.records.last().map_or(f64::NAN, |r| r.difference);
    format!(
        "kappa {}: {} iterates, converged = {}, last difference {:.3e}",
        log.kappa,
        log.records.len(),
        log.converged,
        d
    )
}

fn cmd_run(cfg: &RunConfig) -> Result<String> {
    let (grid, init) = prepare(cfg)?;
    let (traj, log) = solve_nonlinear_kappa(&grid, &init, &cfg.picard())?;
    let dir = &cfg.directory;
    output::iteration_table(&[&log]).write(&dir.join("iteration.csv"))?;
    write_diagnostics(&grid, &traj, cfg.max_time_order, &cfg.eos(), &cfg.thresholds(), cfg.snapshot_stride, dir)?;
    if cfg.checkpoint {
        checkpoint::write_checkpoint(&dir.join("checkpoint.bin"), &traj)?;
    }
    if cfg.lemma_suite {
        let sizes: Vec<usize> = [cfg.n1.min(cfg.n2), 2 * cfg.n1.min(cfg.n2)].into();
        output::lemma_table(&lemma_suite(cfg.seed, &sizes)?).write(&dir.join("lemmas.csv"))?;
    }
    Ok(format!("{}\nwrote {}", report_log(&log), dir.display()))
}

fn cmd_trace(cfg: &RunConfig) -> Result<String> {
    let (grid, init) = prepare(cfg)?;
    let (_, log) = solve_nonlinear_kappa(&grid, &init, &cfg.picard())?;
    output::iteration_table(&[&log]).write(&cfg.directory.join("iteration.csv"))?;
    let mut s = String::new();
    for r in &log.records {
        let ratio = r.ratio.map_or("-".to_string(), |x| format!("{x:.3e}"));
        s.push_str(&format!("iterate {:>3}  d = {:.6e}  ratio {ratio}\n", r.iterate, r.difference));
    }
    s.push_str(&report_log(&log));
    Ok(s)
}

fn cmd_sweep(cfg: &RunConfig) -> Result<String> {
    let (grid, init) = prepare(cfg)?;
    let report = kappa_sweep(&grid, &init, &cfg.picard(), &cfg.kappa_list, worker_threads())?;
    let dir = &cfg.directory;
    output::sweep_table(&report).write(&dir.join("sweep.csv"))?;
    let logs: Vec<&IterationLog> = report.members.iter().map(|m| &m.log).collect();
    output::iteration_table(&logs).write(&dir.join("iteration.csv"))?;
    if cfg.checkpoint {
        checkpoint::write_checkpoint(&dir.join("checkpoint.bin"), &report.best)?;
    }
    let mut s = String::new();
    for m in &report.members {
        s.push_str(&format!("{}, max psi {:.3e}\n", report_log(&m.log), m.max_psi));
    }
    s.push_str(&format!(
        "deltas {:?}\ndeltas decreasing = {}, psi decreasing = {}",
        report.deltas, report.deltas_decreasing, report.psi_decreasing
    ));
    Ok(s)
}

fn cmd_lemmas(seed: u64, sizes: &[usize], out: &Path) -> Result<String> {
    std::fs::create_dir_all(out)?;
    let report = lemma_suite(seed, sizes)?;
    output::lemma_table(&report).write(&out.join("lemmas.csv"))?;
    let mut s = String::new();
    for r in &report.rows {
        s.push_str(&format!(
            "{:<14} n {:>3} s {:>3}  ratio [{:.3e}, {:.3e}]\n",
            r.lemma, r.n, r.order, r.min_ratio, r.max_ratio
        ));
    }
    s.push_str(&format!("gradient curl {:.3e}", report.gradient_curl));
    Ok(s)
}

/// Dispatches one parsed command and returns the text summary.
pub fn execute(cmd: Command) -> Result<String> {
    match cmd {
        Command::Run { config, overrides } => cmd_run(&load(&config, &overrides)?),
        Command::PicardTrace { config, overrides } => cmd_trace(&load(&config, &overrides)?),
        Command::KappaSweep { config, overrides } => cmd_sweep(&load(&config, &overrides)?),
        Command::CheckLemmas { seed, sizes, output } => cmd_lemmas(seed, &sizes, &output),
        Command::EnergyReport { checkpoint, order, lambda, c0, epsilon, div_tol, output } => {
            let traj = checkpoint::read_checkpoint(&checkpoint, None)?;
            let grid = Grid::new(traj.grid)?;
            std::fs::create_dir_all(&output)?;
            let th = ConstraintThresholds { c0, epsilon, div_tol };
            write_diagnostics(&grid, &traj, order, &EquationOfState { lambda }, &th, 1, &output)?;
            Ok(format!("{} snapshots, wrote {}", traj.len(), output.display()))
        }
    }
}

/// Binary entry point.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("failure [{}]: {e}", failure_name(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_see_through_wrappers() {
        let cfl = Error::Cfl { dt: 1.0, bound: 0.5, safety: 0.4, h3: 0.1, speed_factor: 1.0 };
        let wrapped = Error::SweepMember {
            kappa: 0.1,
            source: Box::new(Error::PicardStep { iterate: 2, source: Box::new(cfl) }),
        };
        assert_eq!(exit_code(&wrapped), 3);
        assert_eq!(failure_name(&wrapped), "cfl");
        assert_eq!(exit_code(&Error::NonContraction { iterate: 5, last: 1.0 }), 4);
        assert_eq!(exit_code(&Error::Config { line: 1, message: String::new() }), 2);
        assert_eq!(exit_code(&Error::DegenerateMap { det: 0.0, floor: 1e-6, at: (0, 0, 0) }), 5);
        assert_eq!(exit_code(&Error::InvalidArgument(String::new())), 1);
    }

    #[test]
    fn parses_subcommands() {
        let cli = Cli::try_parse_from(["lfmhd", "run", "a.cfg", "--set", "scheme.dt=0.001"]).unwrap();
        assert!(matches!(cli.command, Command::Run { ref overrides, .. } if overrides.len() == 1));
        let cli = Cli::try_parse_from(["lfmhd", "check-lemmas", "--sizes", "8,16"]).unwrap();
        assert!(matches!(cli.command, Command::CheckLemmas { ref sizes, .. } if sizes == &vec![8, 16]));
    }
}
