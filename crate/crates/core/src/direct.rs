//! Direct construction of the radical mapping as a scaling limit.
//!
//! Two routes are provided:
//!
//! * [`LimitMode::Contract`]: `A(x) = lim 2^n phi(x / 2^(n/s))`. Needs a Δ₂
//!   modular; the error is bounded by
//!   `1/2 sum_{j>=1} (tau^2/2)^j alpha(x/2^(j/s), x/2^(j/s), -x/2^((j-1)/s))`.
//! * [`LimitMode::Expand`]: `A(x) = lim phihat(2^(n/s) x) / 2^n` with
//!   `phihat = phi - q phi(0)`. No Δ₂ needed; the error of `phihat` is bounded by
//!   `1/2 sum_{j>=0} 2^-j alpha(2^(j/s) x, 2^(j/s) x, -2^((j+1)/s) x)`.
//!
//! For homogeneous controls both series are exactly geometric, so a finite
//! partial sum plus its closed-form tail is a certified bound.

use crate::error::{Error, Result};
use crate::expr::RealFn;
use crate::grid::SampleGrid;
use crate::modular::ModularSpec;
use crate::radical::{Control, EquationParams};

/// Default iteration cap for [`construct_limit`].
pub const DEFAULT_N_MAX: u32 = 60;

/// Consecutive sub-tolerance steps required before a limit is accepted.
pub const STABILITY_WINDOW: u32 = 2;

const MAX_SERIES_TERMS: u32 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitMode {
    /// Shrink the argument and scale the value up.
    Contract,
    /// Grow the argument and scale the value down.
    Expand,
}

impl LimitMode {
    pub fn name(self) -> &'static str {
        match self {
            LimitMode::Contract => "t1_contract",
            LimitMode::Expand => "t2_expand",
        }
    }
}

/// `2^n phi(x / 2^(n/s))`
pub fn approximant_t1<F: RealFn + ?Sized>(phi: &F, params: &EquationParams, n: u32, x: f64) -> Result<f64> {
    let v = raw_t1(phi, params, n, x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Saturated { n })
    }
}

/// `(phi(2^(n/s) x) - q phi(0)) / 2^n`
pub fn approximant_t2<F: RealFn + ?Sized>(phi: &F, params: &EquationParams, n: u32, x: f64) -> Result<f64> {
    let v = raw_t2(phi, params, n, x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Saturated { n })
    }
}

fn raw_t1<F: RealFn + ?Sized>(phi: &F, params: &EquationParams, n: u32, x: f64) -> f64 {
    let scale = 2f64.powf(f64::from(n) / f64::from(params.s()));
    2f64.powi(n as i32) * phi.eval(x / scale)
}

fn raw_t2<F: RealFn + ?Sized>(phi: &F, params: &EquationParams, n: u32, x: f64) -> f64 {
    let scale = 2f64.powf(f64::from(n) / f64::from(params.s()));
    let arg = scale * x;
    if !arg.is_finite() {
        return f64::NAN;
    }
    (phi.eval(arg) - params.q() * phi.eval(0.0)) / 2f64.powi(n as i32)
}

/// The `n`-th approximant viewed as a function on the whole line.
#[derive(Debug, Clone, Copy)]
pub struct Approximant<'a, F: ?Sized> {
    pub mode: LimitMode,
    pub phi: &'a F,
    pub params: EquationParams,
    pub n: u32,
}

impl<F: RealFn + ?Sized> RealFn for Approximant<'_, F> {
    fn eval(&self, x: f64) -> f64 {
        match self.mode {
            LimitMode::Contract => raw_t1(self.phi, &self.params, self.n, x),
            LimitMode::Expand => raw_t2(self.phi, &self.params, self.n, x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitResult {
    pub mode: LimitMode,
    pub grid: SampleGrid,
    pub values: Vec<f64>,
    pub achieved_n: u32,
    /// `rho(A_{n+1}(x) - A_n(x))` at termination; `NaN` where a point saturated.
    pub cauchy_gap: Vec<f64>,
    /// Points whose approximant became non-finite; their value is the last finite one.
    pub frozen: Vec<bool>,
    pub saturated: bool,
}

impl LimitResult {
    /// The approximant at `achieved_n`, evaluable off the grid.
    pub fn mapping<'a, F: RealFn + ?Sized>(&self, phi: &'a F, params: &EquationParams) -> Approximant<'a, F> {
        Approximant {
            mode: self.mode,
            phi,
            params: *params,
            n: self.achieved_n,
        }
    }
}

/// Iterates the approximants until every grid point has been stable for
/// [`STABILITY_WINDOW`] consecutive steps, or `n_max` is reached.
pub fn construct_limit<F: RealFn + ?Sized>(
    mode: LimitMode,
    phi: &F,
    params: &EquationParams,
    rho: &ModularSpec,
    grid: &SampleGrid,
    tol: f64,
    n_max: u32,
) -> Result<LimitResult> {
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    if n_max < 1 {
        return Err(Error::Argument("n_max must be at least 1".into()));
    }
    if mode == LimitMode::Contract && rho.delta2_tau().is_none() {
        return Err(Error::Contract(format!(
            "the contracting construction requires a modular with a delta2 constant; {rho} has none"
        )));
    }

    let step = |n: u32, x: f64| match mode {
        LimitMode::Contract => raw_t1(phi, params, n, x),
        LimitMode::Expand => raw_t2(phi, params, n, x),
    };

    let points = grid.points();
    let mut values: Vec<f64> = points.iter().map(|&x| step(0, x)).collect();
    let mut frozen: Vec<bool> = values.iter().map(|v| !v.is_finite()).collect();
    let mut gaps = vec![f64::INFINITY; points.len()];
    let mut streak = 0;
    let mut achieved = 0;

    for n in 0..n_max {
        for (i, &x) in points.iter().enumerate() {
            if frozen[i] {
                gaps[i] = f64::NAN;
                continue;
            }
            let next = step(n + 1, x);
            let gap = if next.is_finite() { rho.eval(next - values[i]).ok() } else { None };
            match gap {
                Some(g) => {
                    gaps[i] = g;
                    values[i] = next;
                }
                None => {
                    frozen[i] = true;
                    gaps[i] = f64::NAN;
                }
            }
        }
        achieved = n + 1;
        let settled = gaps
            .iter()
            .zip(&frozen)
            .all(|(g, f)| *f || *g < tol);
        streak = if settled { streak + 1 } else { 0 };
        if streak >= STABILITY_WINDOW {
            break;
        }
    }

    let saturated = streak < STABILITY_WINDOW || frozen.iter().any(|f| *f);
    Ok(LimitResult {
        mode,
        grid: grid.clone(),
        values,
        achieved_n: achieved,
        cauchy_gap: gaps,
        frozen,
        saturated,
    })
}

/// Whether the scaled control decays along the construction, checked on the
/// diagonal triples of the grid up to step `n`.
///
/// Contract: `tau^n alpha(x/2^(n/s), x/2^(n/s), -2^(1/s) x / 2^(n/s))`.
/// Expand: `alpha(2^(n/s) x, 2^(n/s) x, -2^((n+1)/s) x) / 2^n`.
pub fn scaling_condition_holds<C: Control + ?Sized>(
    mode: LimitMode,
    alpha: &C,
    tau: f64,
    s: u32,
    grid: &SampleGrid,
    n: u32,
) -> bool {
    let sf = f64::from(s);
    let c = 2f64.powf(1.0 / sf);
    let term = |k: u32, x: f64| {
        let scale = 2f64.powf(f64::from(k) / sf);
        match mode {
            LimitMode::Contract => {
                let y = x / scale;
                tau.powi(k as i32) * alpha.eval(y, y, -c * y)
            }
            LimitMode::Expand => {
                let y = x * scale;
                alpha.eval(y, y, -c * y) / 2f64.powi(k as i32)
            }
        }
    };
    let n = n.max(1);
    grid.points().iter().all(|&x| {
        let first = term(0, x);
        let last = term(n, x);
        first == 0.0 && last == 0.0 || last < first
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesBound {
    /// Half the partial sum over the terms used.
    pub value: f64,
    pub terms_used: u32,
    /// Exact remainder of the geometric series after `terms_used` terms.
    pub tail_estimate: f64,
    pub converged: bool,
    pub ratio: f64,
}

impl SeriesBound {
    fn divergent(ratio: f64) -> Self {
        SeriesBound {
            value: f64::INFINITY,
            terms_used: 0,
            tail_estimate: f64::INFINITY,
            converged: false,
            ratio,
        }
    }

    /// `value + tail_estimate`, or `None` when the series diverges.
    pub fn certified(&self) -> Option<f64> {
        self.converged.then_some(self.value + self.tail_estimate)
    }
}

/// Geometric ratio of the contracting-route series for a control of degree `d`: `(tau^2/2) 2^(-d/s)`.
pub fn ratio_t1<C: Control + ?Sized>(alpha: &C, tau: f64, s: u32) -> Result<f64> {
    let d = alpha.homogeneity_degree().ok_or(Error::TailUnknown)?;
    Ok(tau * tau / 2.0 * 2f64.powf(-d / f64::from(s)))
}

/// Geometric ratio of the expanding-route series: `2^(d/s) / 2`.
pub fn ratio_t2<C: Control + ?Sized>(alpha: &C, s: u32) -> Result<f64> {
    let d = alpha.homogeneity_degree().ok_or(Error::TailUnknown)?;
    Ok(2f64.powf(d / f64::from(s)) / 2.0)
}

fn term_t1<C: Control + ?Sized>(alpha: &C, tau: f64, s: u32, x: f64, j: u32) -> f64 {
    let sf = f64::from(s);
    let a = x / 2f64.powf(f64::from(j) / sf);
    let b = -x / 2f64.powf(f64::from(j - 1) / sf);
    (tau * tau / 2.0).powi(j as i32) * alpha.eval(a, a, b)
}

fn term_t2<C: Control + ?Sized>(alpha: &C, s: u32, x: f64, j: u32) -> f64 {
    let sf = f64::from(s);
    let a = 2f64.powf(f64::from(j) / sf) * x;
    let b = -(2f64.powf(f64::from(j + 1) / sf) * x);
    alpha.eval(a, a, b) / 2f64.powi(j as i32)
}

/// `1/2 sum_{j=1..=terms}` of the contracting-route series.
pub fn partial_sum_t1<C: Control + ?Sized>(alpha: &C, tau: f64, s: u32, x: f64, terms: u32) -> f64 {
    0.5 * (1..=terms).map(|j| term_t1(alpha, tau, s, x, j)).sum::<f64>()
}

/// `1/2 sum_{j=0..terms}` (that is, `terms` terms) of the expanding-route series.
pub fn partial_sum_t2<C: Control + ?Sized>(alpha: &C, s: u32, x: f64, terms: u32) -> f64 {
    0.5 * (0..terms).map(|j| term_t2(alpha, s, x, j)).sum::<f64>()
}

fn sum_geometric(ratio: f64, tol: f64, mut term: impl FnMut(u32) -> f64) -> SeriesBound {
    let mut sum = 0.0;
    let mut last = 0.0;
    let mut used = 0;
    for j in 0..MAX_SERIES_TERMS {
        let t = term(j);
        if !t.is_finite() {
            if j == 0 {
                return SeriesBound::divergent(ratio);
            }
            // the scale factor overflowed; the remainder after the last finite term is still exactly geometric
            break;
        }
        sum += t;
        last = t;
        used = j + 1;
        if t * ratio / (1.0 - ratio) <= tol * sum {
            break;
        }
    }
    SeriesBound {
        value: 0.5 * sum,
        terms_used: used,
        tail_estimate: 0.5 * last * ratio / (1.0 - ratio),
        converged: true,
        ratio,
    }
}

/// Error bound for the contracting route, summed until the geometric tail
/// falls below `tol` times the partial sum.
pub fn series_bound_t1<C: Control + ?Sized>(alpha: &C, tau: f64, s: u32, x: f64, tol: f64) -> Result<SeriesBound> {
    crate::radical::check_exponent(s)?;
    if !(tau >= 2.0) || !tau.is_finite() {
        return Err(Error::Parameter(format!("delta2 constant must be >= 2, got {tau}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let r = ratio_t1(alpha, tau, s)?;
    if r >= 1.0 {
        return Ok(SeriesBound::divergent(r));
    }
    Ok(sum_geometric(r, tol, |j| term_t1(alpha, tau, s, x, j + 1)))
}

/// Error bound for the expanding route (applies to `phi - q phi(0)`).
pub fn series_bound_t2<C: Control + ?Sized>(alpha: &C, s: u32, x: f64, tol: f64) -> Result<SeriesBound> {
    crate::radical::check_exponent(s)?;
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let r = ratio_t2(alpha, s)?;
    if r >= 1.0 {
        return Ok(SeriesBound::divergent(r));
    }
    Ok(sum_geometric(r, tol, |j| term_t2(alpha, s, x, j)))
}

/// Closed form of the contracting-route series for `alpha = theta (|x|^p + |y|^p + |z|^p)`:
/// `theta (2 + 2^(p/s)) tau^2 / (2 (2^(p/s + 1) - tau^2)) |x|^p`, valid for `p > s log2(tau^2 / 2)`.
pub fn corollary_bound(theta: f64, p: f64, s: u32, tau: f64, x: f64) -> Result<f64> {
    crate::radical::check_exponent(s)?;
    let sf = f64::from(s);
    let threshold = sf * (tau * tau / 2.0).log2();
    if !(p > threshold) {
        return Err(Error::Regime(format!(
            "closed-form bound needs p > s log2(tau^2/2) = {threshold}, got p = {p}"
        )));
    }
    let k = 2f64.powf(p / sf);
    let xp = if p == 0.0 { 1.0 } else { x.abs().powf(p) };
    Ok(theta * (2.0 + k) * tau * tau / (2.0 * (2.0 * k - tau * tau)) * xp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::FunctionHandle;
    use crate::radical::ControlFunction;

    fn params() -> EquationParams {
        EquationParams::new(3, 1.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn approximant_t1_examples() {
        let cube = FunctionHandle::mono(1.0, 3);
        assert!((approximant_t1(&cube, &params(), 7, 2.0).unwrap() - 8.0).abs() < 1e-13);

        let phi: FunctionHandle = "mono(1,3) + mono(0.004,6)".parse().unwrap();
        let v = approximant_t1(&phi, &params(), 10, 1.0).unwrap();
        assert!((v - 1.00000390625).abs() < 1e-13, "{v}");

        let phi: FunctionHandle = "mono(1,3) + 0.1*sine(1,1)".parse().unwrap();
        assert_eq!(approximant_t1(&phi, &params(), 0, 1.3).unwrap(), phi.eval(1.3));
    }

    #[test]
    fn approximant_t2_examples() {
        let cube = FunctionHandle::mono(1.0, 3);
        assert!((approximant_t2(&cube, &params(), 12, 1.0).unwrap() - 1.0).abs() < 1e-14);

        let phi: FunctionHandle = "mono(1,3) + 0.1*sine(1,1)".parse().unwrap();
        let v = approximant_t2(&phi, &params(), 10, 1.0).unwrap();
        let oracle = 1.0 + 0.1 * 2f64.powf(10.0 / 3.0).sin() / 1024.0;
        assert!((v - oracle).abs() < 1e-13);
        assert!((v - 0.9999405).abs() < 1e-7);

        let shifted: FunctionHandle = "mono(1,3) + 7".parse().unwrap();
        assert_eq!(approximant_t2(&shifted, &params(), 0, 2.0).unwrap(), 8.0);
    }

    #[test]
    fn approximants_report_saturation() {
        let phi = FunctionHandle::mono(1.0, 3).plus(FunctionHandle::mono(1.0, 0));
        assert_eq!(approximant_t1(&phi, &params(), 1100, 1.0), Err(Error::Saturated { n: 1100 }));
        let phi = FunctionHandle::mono(1.0, 3);
        assert_eq!(approximant_t2(&phi, &params(), 3300, 1.0), Err(Error::Saturated { n: 3300 }));
    }

    #[test]
    fn construct_limit_expand() {
        let grid = SampleGrid::uniform(-10.0, 10.0, 41).unwrap();
        let rho = ModularSpec::power(1.0).unwrap();
        let phi: FunctionHandle = "mono(1,3) + 0.1*sine(1,1)".parse().unwrap();
        let res = construct_limit(LimitMode::Expand, &phi, &params(), &rho, &grid, 1e-9, DEFAULT_N_MAX).unwrap();
        assert!(!res.saturated);
        for (x, a) in grid.points().iter().zip(&res.values) {
            assert!((a - x.powi(3)).abs() < 1e-6);
        }
        assert!(res.cauchy_gap.iter().all(|g| *g < 1e-9));
        assert!(res.achieved_n <= DEFAULT_N_MAX);
    }

    #[test]
    fn construct_limit_contract() {
        let grid = SampleGrid::uniform(-10.0, 10.0, 41).unwrap();
        let rho = ModularSpec::power(1.0).unwrap().with_delta2_tau(2.0).unwrap();
        let phi: FunctionHandle = "mono(1,3) + mono(0.004,6)".parse().unwrap();
        let res = construct_limit(LimitMode::Contract, &phi, &params(), &rho, &grid, 1e-9, DEFAULT_N_MAX).unwrap();
        assert!(!res.saturated);
        for (x, a) in grid.points().iter().zip(&res.values) {
            assert!((a - x.powi(3)).abs() < 1e-6);
        }
    }

    #[test]
    fn construct_limit_fixed_point_is_immediate() {
        let grid = SampleGrid::uniform(-10.0, 10.0, 41).unwrap();
        let rho = ModularSpec::power(1.0).unwrap();
        let cube = FunctionHandle::mono(1.0, 3);
        let res = construct_limit(LimitMode::Expand, &cube, &params(), &rho, &grid, 1e-9, DEFAULT_N_MAX).unwrap();
        assert_eq!(res.achieved_n, STABILITY_WINDOW);
        for (x, a) in grid.points().iter().zip(&res.values) {
            assert!((a - x.powi(3)).abs() <= 1e-13 * (1.0 + x.abs().powi(3)));
        }
    }

    #[test]
    fn contract_requires_delta2() {
        let grid = SampleGrid::uniform(-1.0, 1.0, 5).unwrap();
        let cube = FunctionHandle::mono(1.0, 3);
        let err = construct_limit(LimitMode::Contract, &cube, &params(), &ModularSpec::exp(), &grid, 1e-9, 10)
            .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn construct_limit_argument_errors() {
        let grid = SampleGrid::uniform(-1.0, 1.0, 5).unwrap();
        let cube = FunctionHandle::mono(1.0, 3);
        let rho = ModularSpec::power(1.0).unwrap();
        assert!(construct_limit(LimitMode::Expand, &cube, &params(), &rho, &grid, 0.0, 10).is_err());
        assert!(construct_limit(LimitMode::Expand, &cube, &params(), &rho, &grid, 1e-9, 0).is_err());
    }

    #[test]
    fn divergent_limit_saturates_but_keeps_finite_values() {
        // 2^n phi(0) with phi(0) = 1 overflows long before n_max
        let grid = SampleGrid::uniform(-1.0, 1.0, 3).unwrap();
        let rho = ModularSpec::power(1.0).unwrap();
        let phi: FunctionHandle = "mono(1,3) + 1".parse().unwrap();
        let res = construct_limit(LimitMode::Contract, &phi, &params(), &rho, &grid, 1e-9, 2000).unwrap();
        assert!(res.saturated);
        assert!(res.frozen.iter().all(|f| *f));
        assert!(res.values.iter().all(|v| v.is_finite()));
        assert!(res.achieved_n <= 2000);

        // never settles: hits n_max without any overflow
        let res = construct_limit(LimitMode::Contract, &phi, &params(), &rho, &grid, 1e-9, 20).unwrap();
        assert!(res.saturated);
        assert_eq!(res.achieved_n, 20);
        assert!(res.frozen.iter().all(|f| !*f));
    }

    #[test]
    fn series_t1_examples() {
        let a = ControlFunction::power(1.0, 6.0).unwrap();
        let b = series_bound_t1(&a, 2.0, 3, 1.0, 1e-13).unwrap();
        assert!(rel(b.value, 3.0) < 1e-9);
        assert_eq!(b.ratio, 0.5);
        assert!(b.converged);
        assert!(rel(b.certified().unwrap(), 3.0) < 1e-12);

        let zero = series_bound_t1(&a, 2.0, 3, 0.0, 1e-13).unwrap();
        assert_eq!(zero.value, 0.0);
        assert_eq!(zero.certified(), Some(0.0));

        let c = ControlFunction::constant(0.1).unwrap();
        let d = series_bound_t1(&c, 2.0, 3, 1.0, 1e-13).unwrap();
        assert!(!d.converged);
        assert_eq!(d.ratio, 2.0);
        assert_eq!(d.certified(), None);
        assert!(d.value.is_infinite());
    }

    #[test]
    fn series_t1_rejects_small_tau() {
        let a = ControlFunction::power(1.0, 6.0).unwrap();
        assert!(series_bound_t1(&a, 1.5, 3, 1.0, 1e-12).is_err());
    }

    #[test]
    fn series_t2_examples() {
        let c = ControlFunction::constant(0.1).unwrap();
        for x in [-4.0, 0.0, 3.5] {
            let b = series_bound_t2(&c, 3, x, 1e-13).unwrap();
            assert!(rel(b.value, 0.1) < 1e-12);
            assert_eq!(b.ratio, 0.5);
        }

        let a = ControlFunction::power(0.02, 1.0).unwrap();
        let b = series_bound_t2(&a, 3, 1.0, 1e-13).unwrap();
        let c3 = 2f64.cbrt();
        let closed = 0.01 * (2.0 + c3) / (1.0 - 2f64.powf(-2.0 / 3.0));
        assert!(rel(b.value, closed) < 1e-12);
        assert!((b.value - 0.08810).abs() < 1e-5);

        let boundary = ControlFunction::power(1.0, 3.0).unwrap();
        let b = series_bound_t2(&boundary, 3, 1.0, 1e-13).unwrap();
        assert!(!b.converged);
        assert_eq!(b.ratio, 1.0);
    }

    struct Opaque;
    impl Control for Opaque {
        fn eval(&self, x: f64, _: f64, _: f64) -> f64 {
            x.abs().sqrt()
        }
    }

    #[test]
    fn unknown_decay_is_an_error() {
        assert_eq!(series_bound_t1(&Opaque, 2.0, 3, 1.0, 1e-9), Err(Error::TailUnknown));
        assert_eq!(series_bound_t2(&Opaque, 3, 1.0, 1e-9), Err(Error::TailUnknown));
    }

    #[test]
    fn corollary_examples() {
        assert!(rel(corollary_bound(1.0, 6.0, 3, 2.0, 1.0).unwrap(), 3.0) < 1e-15);
        assert_eq!(corollary_bound(1.0, 6.0, 3, 2.0, 0.0).unwrap(), 0.0);
        assert!(rel(corollary_bound(0.004, 6.0, 3, 2.0, 2.0).unwrap(), 0.768) < 1e-14);
        // threshold at tau = 2, s = 3 is p > 3
        assert!(matches!(corollary_bound(1.0, 3.0, 3, 2.0, 1.0), Err(Error::Regime(_))));
        assert!(corollary_bound(1.0, 3.5, 3, 2.0, 1.0).is_ok());
    }

    #[test]
    fn scaling_condition_regimes() {
        let grid = SampleGrid::uniform(-10.0, 10.0, 41).unwrap();
        let p6 = ControlFunction::power(1.0, 6.0).unwrap();
        let eps = ControlFunction::constant(0.1).unwrap();
        let p1 = ControlFunction::power(0.02, 1.0).unwrap();
        assert!(scaling_condition_holds(LimitMode::Contract, &p6, 2.0, 3, &grid, 40));
        assert!(!scaling_condition_holds(LimitMode::Contract, &eps, 2.0, 3, &grid, 40));
        assert!(scaling_condition_holds(LimitMode::Expand, &eps, 2.0, 3, &grid, 40));
        assert!(scaling_condition_holds(LimitMode::Expand, &p1, 2.0, 3, &grid, 40));
        assert!(!scaling_condition_holds(LimitMode::Expand, &p6, 2.0, 3, &grid, 40));
    }

    #[test]
    fn slow_series_survives_scale_overflow() {
        // r = 2^(-0.1/3): reaching 1e-12 takes more terms than (tau^2/2)^j can represent
        let alpha = ControlFunction::power(0.01, 3.1).unwrap();
        let b = series_bound_t1(&alpha, 2.0, 3, -5.9, 1e-12).unwrap();
        assert!(b.converged);
        assert!(b.terms_used < 1100);
        let closed = corollary_bound(0.01, 3.1, 3, 2.0, -5.9).unwrap();
        assert!((b.certified().unwrap() - closed).abs() <= 1e-9 * closed);
    }
}
