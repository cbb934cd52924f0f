//! Checks tying constructed mappings back to the properties they must have.

use crate::error::{Error, Result};
use crate::expr::RealFn;
use crate::grid::SampleGrid;
use crate::modular::ModularSpec;
use crate::radical::{defect, pair_additivity_defect, EquationParams};

/// Pair grids larger than this are thinned by stride.
pub const MAX_PAIRS: usize = 2000;

/// Default tolerance for quantities derived from numerical limits.
pub const LIMIT_TOL: f64 = 1e-6;

/// Default tolerance for closed-form identities.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorstPoint {
    None,
    Point(f64),
    Pair(f64, f64),
    Triple(f64, f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub worst_point: WorstPoint,
    pub worst_value: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    fn new(name: &str, worst_point: WorstPoint, worst_value: f64, tolerance: f64) -> Self {
        CheckOutcome {
            name: name.to_string(),
            passed: worst_value <= tolerance,
            worst_point,
            worst_value,
            tolerance,
        }
    }
}

struct Tracker {
    point: WorstPoint,
    value: f64,
}

impl Tracker {
    fn new() -> Self {
        Tracker {
            point: WorstPoint::None,
            value: 0.0,
        }
    }

    // NaN and evaluation failures count as infinitely bad
    fn offer(&mut self, value: f64, point: WorstPoint) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        if self.point == WorstPoint::None || value > self.value {
            self.value = value;
            self.point = point;
        }
    }

    fn finish(self, name: &str, tol: f64) -> CheckOutcome {
        CheckOutcome::new(name, self.point, self.value, tol)
    }
}

/// The Cartesian square of `points`, thinned by stride to at most [`MAX_PAIRS`].
pub fn pair_grid(points: &[f64]) -> Vec<(f64, f64)> {
    let n = points.len();
    let total = n * n;
    let stride = total.div_ceil(MAX_PAIRS).max(1);
    (0..total)
        .step_by(stride)
        .map(|k| (points[k / n], points[k % n]))
        .collect()
}

/// `rho(A((x^s + y^s)^(1/s)) - A(x) - A(y)) <= tol` over grid pairs.
pub fn verify_radical_additivity<F: RealFn + ?Sized>(
    a: &F,
    rho: &ModularSpec,
    s: u32,
    grid: &SampleGrid,
    tol: f64,
) -> CheckOutcome {
    let mut worst = Tracker::new();
    for (x, y) in pair_grid(grid.points()) {
        let d = pair_additivity_defect(a, rho, s, x, y).unwrap_or(f64::INFINITY);
        worst.offer(d, WorstPoint::Pair(x, y));
    }
    worst.finish("radical_additivity", tol)
}

/// `rho(A(x) + A(-x)) <= tol` on the grid and `rho(A(0)) <= tol`.
pub fn verify_oddness<F: RealFn + ?Sized>(a: &F, rho: &ModularSpec, grid: &SampleGrid, tol: f64) -> CheckOutcome {
    let mut worst = Tracker::new();
    worst.offer(rho.eval(a.eval(0.0)).unwrap_or(f64::INFINITY), WorstPoint::Point(0.0));
    for &x in grid.points() {
        let d = rho.eval(a.eval(x) + a.eval(-x)).unwrap_or(f64::INFINITY);
        worst.offer(d, WorstPoint::Point(x));
    }
    worst.finish("oddness", tol)
}

/// `rho(phi(x) - shift - A(x)) <= bound(x) + tol` at every grid point.
///
/// `shift` is `q phi(0)` when checking the expanding route, zero otherwise.
/// The reported worst value is the largest excess over the bound (clamped at zero).
pub fn verify_stability_bound<F, G>(
    phi: &F,
    a: &G,
    shift: f64,
    rho: &ModularSpec,
    bound_per_point: &[f64],
    grid: &SampleGrid,
    tol: f64,
) -> Result<CheckOutcome>
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    if bound_per_point.len() != grid.len() {
        return Err(Error::Argument(format!(
            "bound has {} entries but the grid has {} points",
            bound_per_point.len(),
            grid.len()
        )));
    }
    let mut worst = Tracker::new();
    for (&x, &b) in grid.points().iter().zip(bound_per_point) {
        let err = rho.eval(phi.eval(x) - shift - a.eval(x)).unwrap_or(f64::INFINITY);
        let over = if err <= b { 0.0 } else { err - b };
        worst.offer(over, WorstPoint::Point(x));
    }
    Ok(worst.finish("stability_bound", tol))
}

/// `rho(A1(x) - A2(x)) <= tol` on the grid.
pub fn cross_check<F, G>(a1: &F, a2: &G, rho: &ModularSpec, grid: &SampleGrid, tol: f64) -> CheckOutcome
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
{
    let mut worst = Tracker::new();
    for &x in grid.points() {
        let d = rho.eval(a1.eval(x) - a2.eval(x)).unwrap_or(f64::INFINITY);
        worst.offer(d, WorstPoint::Point(x));
    }
    worst.finish("cross_check", tol)
}

/// The full equation defect of `A` on sampled triples.
pub fn verify_equation<F: RealFn + ?Sized>(
    a: &F,
    params: &EquationParams,
    rho: &ModularSpec,
    triples: &[[f64; 3]],
    tol: f64,
) -> CheckOutcome {
    let mut worst = Tracker::new();
    for &[x, y, z] in triples {
        let d = defect(params, a, rho, x, y, z).unwrap_or(f64::INFINITY);
        worst.offer(d, WorstPoint::Triple(x, y, z));
    }
    worst.finish("radical_equation", tol)
}
