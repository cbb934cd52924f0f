//! Report structures and their JSON/CSV renderings.
//!
//! Every float is printed as `{:.16e}` (17 significant digits), so reports
//! for the same inputs are byte-identical. Non-finite values become `null`
//! in JSON and empty cells in CSV.

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use modstab_core::verify::{CheckOutcome, WorstPoint};

pub const SCHEMA: &str = "modstab-report/1";

/// A float with fixed 17-significant-digit formatting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

/// `v` with 17 significant digits, or `None` if `v` is not finite.
pub fn format_num(v: f64) -> Option<String> {
    v.is_finite().then(|| format!("{v:.16e}"))
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match format_num(self.0) {
            Some(text) => RawValue::from_string(text).map_err(S::Error::custom)?.serialize(serializer),
            None => serializer.serialize_none(),
        }
    }
}

pub fn nums(values: &[f64]) -> Vec<Num> {
    values.iter().copied().map(Num).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub worst_point: Vec<Num>,
    pub worst_value: Num,
    pub tolerance: Num,
}

impl From<&CheckOutcome> for CheckEntry {
    fn from(c: &CheckOutcome) -> Self {
        let worst_point = match c.worst_point {
            WorstPoint::None => vec![],
            WorstPoint::Point(x) => vec![Num(x)],
            WorstPoint::Pair(x, y) => vec![Num(x), Num(y)],
            WorstPoint::Triple(x, y, z) => vec![Num(x), Num(y), Num(z)],
        };
        CheckEntry {
            name: c.name.clone(),
            passed: c.passed,
            worst_point,
            worst_value: Num(c.worst_value),
            tolerance: Num(c.tolerance),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridEcho {
    pub lo: Num,
    pub hi: Num,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub s: u32,
    pub q: Num,
    pub modular: String,
    pub phi: String,
    pub alpha: String,
    pub method: &'static str,
    pub grid: GridEcho,
    pub tol: Num,
    pub n_max: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditEntry {
    /// Whether a failed audit fails the run.
    pub gating: bool,
    pub triples_checked: usize,
    pub max_ratio: Num,
    pub max_defect: Num,
    pub worst_triple: Vec<Num>,
    pub violations: usize,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// The quantity deciding convergence: `r` for the series routes, `L_hat` for the fixed point.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeEntry {
    pub quantity: &'static str,
    pub value: Num,
    pub convergent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointEntry {
    pub x: Num,
    pub value: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corollary_bound: Option<Num>,
    pub gap: Num,
    pub frozen: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointEntry {
    pub iterations: u32,
    pub worst_sample: Num,
    pub samples_checked: usize,
    pub rho_hat_gap: Num,
    pub gap_history: Vec<Num>,
    pub gap_noise: Vec<Num>,
    /// Largest successive gap ratio above the rounding floor.
    pub decay_factor: Num,
    pub resolved_steps: usize,
    pub quasi_contraction: Vec<Num>,
    pub delta_hat_window: Num,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Ran and every check passed.
    Ok,
    /// Ran but a check failed.
    Failed,
    /// The parameters lie outside the convergent regime; no bound is emitted.
    RegimeError,
    /// A precondition or contract of the route was not met.
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub method: &'static str,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeEntry>,
    pub converged: bool,
    pub achieved_n: u32,
    pub saturated: bool,
    pub points: Vec<PointEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<FixedPointEntry>,
    /// Smallest `bound(x) - rho(phi(x) - shift - A(x))` over the grid; negative when violated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_bound_slack: Option<Num>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub checks: Vec<CheckEntry>,
}

impl MethodReport {
    pub fn new(method: &'static str) -> Self {
        MethodReport {
            method,
            status: Status::Error,
            error: None,
            regime: None,
            converged: false,
            achieved_n: 0,
            saturated: false,
            points: Vec::new(),
            fixed_point: None,
            worst_bound_slack: None,
            notes: Vec::new(),
            checks: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub schema: &'static str,
    pub config: ConfigEcho,
    pub audit: AuditEntry,
    pub methods: Vec<MethodReport>,
    pub cross_checks: Vec<CheckEntry>,
    pub passed: bool,
    pub exit_code: i32,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    text.push('\n');
    text
}

fn cell(v: f64) -> String {
    format_num(v).unwrap_or_default()
}

fn finish_csv(writer: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// One row per grid point and method: `method, x, A(x), bound, gap, n, saturated`.
pub fn report_csv(report: &StabilityReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "x", "A(x)", "bound", "gap", "n", "saturated"])
        .expect("in-memory csv");
    for m in &report.methods {
        for p in &m.points {
            let bound = p.bound.map(|b| cell(b.0)).unwrap_or_default();
            w.write_record([
                m.method.to_string(),
                cell(p.x.0),
                cell(p.value.0),
                bound,
                cell(p.gap.0),
                m.achieved_n.to_string(),
                (m.saturated || p.frozen).to_string(),
            ])
            .expect("in-memory csv");
        }
    }
    finish_csv(w)
}

/// One summary row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub s: u32,
    pub q: f64,
    pub p: Option<f64>,
    pub theta: f64,
    pub modular: String,
    pub method: &'static str,
    pub converged: bool,
    pub regime_value: Option<f64>,
    pub worst_bound_slack: Option<f64>,
    pub achieved_n: u32,
    pub exit_code: i32,
    pub error: String,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "s",
        "q",
        "p",
        "theta",
        "modular",
        "method",
        "converged",
        "L_hat_or_r",
        "worst_bound_slack",
        "achieved_n",
        "exit_code",
        "error",
    ])
    .expect("in-memory csv");
    for r in rows {
        w.write_record([
            r.s.to_string(),
            cell(r.q),
            r.p.map(cell).unwrap_or_default(),
            cell(r.theta),
            r.modular.clone(),
            r.method.to_string(),
            r.converged.to_string(),
            r.regime_value.map(cell).unwrap_or_default(),
            r.worst_bound_slack.map(cell).unwrap_or_default(),
            r.achieved_n.to_string(),
            r.exit_code.to_string(),
            r.error.clone(),
        ])
        .expect("in-memory csv");
    }
    finish_csv(w)
}
