//! CSV writers. Each file starts with `#` preamble lines (`# key = value`), then a header
//! row of `name[unit]` columns, then one row per record. Floats use `{:.17e}` so every
//! value round-trips exactly. Wall-clock times are never written, so reruns are byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use crate::diagnostics::{BalanceSeries, ConstraintRow, EnergyReport, LemmaReport, NonlinearResiduals, WaveResidual};
use crate::error::Result;
use crate::picard::{IterationLog, SweepReport};

pub fn num(x: f64) -> String {
    format!("{x:.17e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "nan".into())
}

pub struct Table {
    pub preamble: Vec<(String, String)>,
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, columns: &[(&'static str, &'static str)]) -> Self {
        Self { preamble: vec![("file".into(), kind.into())], columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.preamble.push((key.into(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.preamble {
            let _ = writeln!(s, "# {k} = {v}");
        }
        let header: Vec<String> = self.columns.iter().map(|(n, u)| format!("{n}[{u}]")).collect();
        let _ = writeln!(s, "{}", header.join(","));
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.columns.len());
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

fn stride_rows<T>(rows: &[T], stride: usize) -> impl Iterator<Item = &T> {
    let last = rows.len().saturating_sub(1);
    rows.iter().enumerate().filter(move |(j, _)| j % stride.max(1) == 0 || *j == last).map(|(_, r)| r)
}

/// `energy.csv`: energy functionals and constraint monitors per (strided) time node.
pub fn energy_table(report: &EnergyReport, constraints: &[ConstraintRow], stride: usize) -> Table {
    let mut t = Table::new(
        "energy",
        &[
            ("t", "time"),
            ("eta_h4", "norm^2"),
            ("boundary", "norm^2"),
            ("fluid", "norm^2"),
            ("heat", "norm^2"),
            ("wave", "norm^2"),
            ("total", "norm^2"),
            ("physical_energy", "energy"),
            ("dissipated", "energy"),
            ("taylor_margin", "pressure"),
            ("small_geometry", "norm"),
            ("div_b", "norm"),
            ("flag_margin", "bool"),
            ("flag_small", "bool"),
            ("flag_div", "bool"),
        ],
    )
    .meta("time_order", report.time_order);
    let pairs: Vec<_> = report.rows.iter().zip(constraints).collect();
    for (r, c) in stride_rows(&pairs, stride) {
        t.rows.push(vec![
            num(r.t),
            num(r.eta_h4),
            num(r.boundary),
            num(r.fluid),
            num(r.heat),
            num(r.wave),
            num(r.total),
            num(r.physical_energy),
            num(r.dissipated),
            num(r.taylor_margin),
            num(r.small_geometry),
            num(r.div_b),
            (c.margin_flag as u8).to_string(),
            (c.small_flag as u8).to_string(),
            (c.div_flag as u8).to_string(),
        ]);
    }
    t
}

/// `iteration.csv`: one row per Picard iterate; several logs may be stacked.
pub fn iteration_table(logs: &[&IterationLog]) -> Table {
    let mut t = Table::new(
        "iteration",
        &[("kappa", "length"), ("iterate", "count"), ("difference", "norm^2"), ("ratio", "1"), ("converged", "bool")],
    )
    .meta("time_order", logs.first().map_or(0, |l| l.time_order));
    for log in logs {
        for r in &log.records {
            t.rows.push(vec![
                num(log.kappa),
                r.iterate.to_string(),
                num(r.difference),
                opt(r.ratio),
                (log.converged as u8).to_string(),
            ]);
        }
    }
    t
}

/// `residuals.csv`: equation residuals, wave-equation residual and per-step energy balance.
/// `balance` is the step ending at the node, `nan` at the first node.
pub fn residual_table(
    nl: &NonlinearResiduals,
    wave: Option<&WaveResidual>,
    balance: &BalanceSeries,
    time_order: usize,
    stride: usize,
) -> Table {
    let mut t = Table::new(
        "residuals",
        &[
            ("t", "time"),
            ("flow_map", "norm"),
            ("momentum", "norm"),
            ("pressure", "norm"),
            ("induction", "norm"),
            ("wave", "norm"),
            ("wave_scale", "norm"),
            ("energy_balance", "energy"),
        ],
    )
    .meta("time_order", time_order);
    let idx: Vec<usize> = (0..nl.t.len()).collect();
    for &j in stride_rows(&idx, stride) {
        t.rows.push(vec![
            num(nl.t[j]),
            num(nl.flow_map[j]),
            num(nl.momentum[j]),
            num(nl.pressure[j]),
            num(nl.induction[j]),
            opt(wave.map(|w| w.residual[j])),
            opt(wave.map(|w| w.scale[j])),
            opt(j.checked_sub(1).and_then(|i| balance.residuals.get(i).copied())),
        ]);
    }
    t
}

/// `sweep.csv`: one row per smoothing length.
pub fn sweep_table(report: &SweepReport) -> Table {
    let mut t = Table::new(
        "sweep",
        &[
            ("kappa", "length"),
            ("iterates", "count"),
            ("converged", "bool"),
            ("final_difference", "norm^2"),
            ("max_psi", "norm"),
            ("delta_next", "norm^2"),
        ],
    )
    .meta("time_order", report.members.first().map_or(0, |m| m.log.time_order))
    .meta("deltas_decreasing", report.deltas_decreasing)
    .meta("psi_decreasing", report.psi_decreasing);
    for (j, m) in report.members.iter().enumerate() {
        t.rows.push(vec![
            num(m.kappa),
            m.log.records.len().to_string(),
            (m.log.converged as u8).to_string(),
            opt(m.log.records.last().map(|r| r.difference)),
            num(m.max_psi),
            opt(report.deltas.get(j).copied()),
        ]);
    }
    t
}

/// `lemmas.csv`: min/max inequality ratios over random samples.
pub fn lemma_table(report: &LemmaReport) -> Table {
    let mut t = Table::new(
        "lemmas",
        &[("lemma", "name"), ("n", "points"), ("order", "sobolev"), ("min_ratio", "1"), ("max_ratio", "1")],
    )
    .meta("time_order", 0)
    .meta("seed", report.seed)
    .meta("gradient_curl", num(report.gradient_curl));
    for r in &report.rows {
        t.rows.push(vec![r.lemma.to_string(), r.n.to_string(), num(r.order), num(r.min_ratio), num(r.max_ratio)]);
    }
    t
}
