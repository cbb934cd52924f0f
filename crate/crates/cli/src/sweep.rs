//! Parameter sweeps: one experiment per cell of the axis product.

use modstab_core::{ControlFunction, EquationParams, ModularSpec};

use crate::config::{ExperimentConfig, SweepConfig};
use crate::experiment::run_experiment;
use crate::report::{StabilityReport, SweepRow};
use crate::{EXIT_CONFIG, EXIT_FAILURE, EXIT_OK};

/// Axis values of one cell; `None` keeps the base value.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub s: Option<u32>,
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub theta: Option<f64>,
    pub modular: Option<ModularSpec>,
}

fn axis<T: Copy>(values: &[T]) -> Vec<Option<T>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

/// Cells in lexicographic order over `(s, q, p, theta, modular)`, each axis in listed order.
pub fn cells(cfg: &SweepConfig) -> Vec<Cell> {
    let a = &cfg.axes;
    let mut out = Vec::with_capacity(a.cells());
    for s in axis(&a.s) {
        for q in axis(&a.q) {
            for p in axis(&a.p) {
                for theta in axis(&a.theta) {
                    for modular in axis(&a.modular) {
                        out.push(Cell {
                            index: out.len(),
                            s,
                            q,
                            p,
                            theta,
                            modular,
                        });
                    }
                }
            }
        }
    }
    out
}

/// The base experiment with the cell's axis values substituted.
pub fn cell_config(base: &ExperimentConfig, cell: &Cell) -> Result<ExperimentConfig, String> {
    let mut cfg = base.clone();
    let s = cell.s.unwrap_or(base.equation.s());
    let q = cell.q.unwrap_or(base.equation.q());
    cfg.equation = EquationParams::new(s, q).map_err(|e| e.to_string())?;
    cfg.alpha = match (base.alpha, cell.p, cell.theta) {
        (alpha, None, None) => alpha,
        (ControlFunction::Power { theta, p }, cp, ct) => {
            ControlFunction::power(ct.unwrap_or(theta), cp.unwrap_or(p)).map_err(|e| e.to_string())?
        }
        (ControlFunction::Constant { .. }, Some(_), _) => {
            return Err("the p axis needs a power control".into());
        }
        (ControlFunction::Constant { eps }, None, ct) => {
            ControlFunction::constant(ct.unwrap_or(eps)).map_err(|e| e.to_string())?
        }
    };
    if let Some(m) = cell.modular {
        cfg.modular = m;
    }
    Ok(cfg)
}

fn alpha_columns(alpha: &ControlFunction) -> (Option<f64>, f64) {
    match *alpha {
        ControlFunction::Power { theta, p } => (Some(p), theta),
        ControlFunction::Constant { eps } => (None, eps),
    }
}

/// One row per route of the cell's report.
pub fn rows_for(cfg: &ExperimentConfig, report: &StabilityReport) -> Vec<SweepRow> {
    let (p, theta) = alpha_columns(&cfg.alpha);
    report
        .methods
        .iter()
        .map(|m| SweepRow {
            s: cfg.equation.s(),
            q: cfg.equation.q(),
            p,
            theta,
            modular: cfg.modular.to_string(),
            method: m.method,
            converged: m.converged,
            regime_value: m.regime.as_ref().map(|r| r.value.0),
            worst_bound_slack: m.worst_bound_slack.map(|n| n.0),
            achieved_n: m.achieved_n,
            exit_code: report.exit_code,
            error: m.error.clone().unwrap_or_default(),
        })
        .collect()
}

/// A cell whose configuration could not be formed.
fn error_row(base: &ExperimentConfig, cell: &Cell, message: String) -> SweepRow {
    let (p, theta) = alpha_columns(&base.alpha);
    SweepRow {
        s: cell.s.unwrap_or(base.equation.s()),
        q: cell.q.unwrap_or(base.equation.q()),
        p: cell.p.or(p),
        theta: cell.theta.unwrap_or(theta),
        modular: cell.modular.unwrap_or(base.modular).to_string(),
        method: base.method.name(),
        converged: false,
        regime_value: None,
        worst_bound_slack: None,
        achieved_n: 0,
        exit_code: EXIT_CONFIG,
        error: message,
    }
}

pub struct CellOutcome {
    pub cell: Cell,
    pub report: Option<StabilityReport>,
    pub rows: Vec<SweepRow>,
}

pub struct SweepOutcome {
    pub cells: Vec<CellOutcome>,
    pub exit_code: i32,
}

impl SweepOutcome {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.cells.iter().flat_map(|c| c.rows.iter().cloned()).collect()
    }
}

/// Runs every cell; errors stay in their row and the sweep continues.
pub fn run_sweep(cfg: &SweepConfig) -> SweepOutcome {
    let mut outcomes = Vec::new();
    for cell in cells(cfg) {
        let outcome = match cell_config(&cfg.base, &cell) {
            Ok(cell_cfg) => {
                let report = run_experiment(&cell_cfg);
                let rows = rows_for(&cell_cfg, &report);
                CellOutcome {
                    cell,
                    report: Some(report),
                    rows,
                }
            }
            Err(message) => {
                let rows = vec![error_row(&cfg.base, &cell, message)];
                CellOutcome {
                    cell,
                    report: None,
                    rows,
                }
            }
        };
        outcomes.push(outcome);
    }
    let all_ok = outcomes.iter().all(|o| o.rows.iter().all(|r| r.exit_code == EXIT_OK));
    SweepOutcome {
        cells: outcomes,
        exit_code: if all_ok { EXIT_OK } else { EXIT_FAILURE },
    }
}
