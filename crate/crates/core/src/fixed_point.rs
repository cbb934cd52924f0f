//! Fixed-point route: iterate `Lambda g(x) = g(2^(1/s) x) / 2` under the
//! function-space modular
//! `rho_hat(g) = inf { lambda > 0 : rho(g(x)) <= lambda alpha(x, x, -2^(1/s) x) }`.
//!
//! `Lambda` is a strict `rho_hat`-contraction with constant `L` whenever
//! `alpha(2^(1/s) x, 2^(1/s) x, -2^(2/s) x) <= 2 L alpha(x, x, -2^(1/s) x)`,
//! and the limit `phihat` satisfies
//! `rho(phi(x) - phihat(x)) <= alpha(x, x, -2^(1/s) x) / (2 (1 - L))`.
//!
//! `rho_hat` is an infimum over all of `R`; here it is estimated by the
//! supremum of the ratio over a finite sample set, which is a lower bound.

use crate::error::{Error, Result};
use crate::expr::RealFn;
use crate::grid::SampleGrid;
use crate::modular::ModularSpec;
use crate::radical::{audit_defect, check_exponent, Control, DefectAudit, EquationParams};

/// `g(2^(1/s) x) / 2`
pub fn lambda_apply<F: RealFn + ?Sized>(g: &F, s: u32, x: f64) -> Result<f64> {
    check_exponent(s)?;
    Ok(Lambda { inner: g, s }.eval(x))
}

/// `Lambda` applied once to `inner`.
#[derive(Debug, Clone, Copy)]
pub struct Lambda<'a, F: ?Sized> {
    pub inner: &'a F,
    pub s: u32,
}

impl<F: RealFn + ?Sized> RealFn for Lambda<'_, F> {
    fn eval(&self, x: f64) -> f64 {
        self.inner.eval(2f64.powf(1.0 / f64::from(self.s)) * x) / 2.0
    }
}

/// `Lambda^n phi (x) = phi(2^(n/s) x) / 2^n`
#[derive(Debug, Clone, Copy)]
pub struct Iterate<'a, F: ?Sized> {
    pub phi: &'a F,
    pub s: u32,
    pub n: u32,
}

impl<F: RealFn + ?Sized> RealFn for Iterate<'_, F> {
    fn eval(&self, x: f64) -> f64 {
        let arg = 2f64.powf(f64::from(self.n) / f64::from(self.s)) * x;
        if !arg.is_finite() {
            return f64::NAN;
        }
        self.phi.eval(arg) / 2f64.powi(self.n as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionCertificate {
    pub l_hat: f64,
    pub worst_sample: f64,
    pub valid: bool,
    pub samples_checked: usize,
    /// Samples dropped because `alpha(x, x, -2^(1/s) x)` vanished there.
    pub samples_skipped: usize,
}

/// Largest `alpha(2^(1/s) x, 2^(1/s) x, -2^(2/s) x) / (2 alpha(x, x, -2^(1/s) x))` over `samples`.
pub fn estimate_l<C: Control + ?Sized>(alpha: &C, s: u32, samples: &[f64]) -> Result<ContractionCertificate> {
    check_exponent(s)?;
    if samples.is_empty() {
        return Err(Error::Argument("contraction estimate needs samples".into()));
    }
    let c = 2f64.powf(1.0 / f64::from(s));
    let mut cert = ContractionCertificate {
        l_hat: 0.0,
        worst_sample: f64::NAN,
        valid: false,
        samples_checked: 0,
        samples_skipped: 0,
    };
    for &x in samples {
        let denom = 2.0 * alpha.diagonal(s, x);
        if !(denom > 0.0) || !denom.is_finite() {
            cert.samples_skipped += 1;
            continue;
        }
        let ratio = alpha.diagonal(s, c * x) / denom;
        if cert.samples_checked == 0 || ratio > cert.l_hat {
            cert.l_hat = ratio;
            cert.worst_sample = x;
        }
        cert.samples_checked += 1;
    }
    if cert.samples_checked == 0 {
        return Err(Error::Argument(
            "alpha(x, x, -2^(1/s) x) vanishes at every sample".into(),
        ));
    }
    // 2^(p/s - 1) lands a few ulps off 1 when p = s; that case is the excluded boundary
    if (cert.l_hat - 1.0).abs() <= 1e-12 {
        cert.l_hat = 1.0;
    }
    cert.valid = cert.l_hat < 1.0;
    Ok(cert)
}

/// Sampled estimate of `rho_hat(f - g)`: the largest `rho(f(x) - g(x)) / alpha(x, x, -2^(1/s) x)`.
pub fn rho_hat_distance<F, G, C>(f: &F, g: &G, alpha: &C, rho: &ModularSpec, s: u32, samples: &[f64]) -> Result<f64>
where
    F: RealFn + ?Sized,
    G: RealFn + ?Sized,
    C: Control + ?Sized,
{
    check_exponent(s)?;
    let mut best: Option<f64> = None;
    for &x in samples {
        let weight = alpha.diagonal(s, x);
        if !(weight > 0.0) {
            continue;
        }
        let r = rho.eval(f.eval(x) - g.eval(x))? / weight;
        best = Some(best.map_or(r, |b: f64| b.max(r)));
    }
    best.ok_or_else(|| Error::Argument("alpha(x, x, -2^(1/s) x) vanishes at every sample".into()))
}

/// Relative perturbation, in ulps, used for the rounding estimate of an iterate.
pub const ROUNDING_ULPS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    pub certificate: ContractionCertificate,
    pub audit: DefectAudit,
    /// `Lambda^iterations phi` on the grid.
    pub values: Vec<f64>,
    pub iterations: u32,
    /// `rho_hat(Lambda^{n+1} phi - Lambda^n phi)` for each step taken.
    pub gap_history: Vec<f64>,
    /// Estimated rounding error of each entry of `gap_history`.
    pub gap_noise: Vec<f64>,
    pub rho_hat_gap: f64,
    /// Five-term quasi-contraction ratio at each step after the first.
    pub quasi_contraction: Vec<f64>,
    /// Largest `rho_hat(Lambda^n phi - Lambda^m phi)` over the computed window.
    pub delta_hat_window: f64,
    /// `alpha(x, x, -2^(1/s) x) / (2 (1 - L_hat))` on the grid.
    pub bound: Vec<f64>,
    pub bound_ok: Vec<bool>,
    pub saturated: bool,
}

/// Successive gap ratios `gap[n+1] / gap[n]` of a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapDecay {
    /// Largest ratio over the steps whose rounding allowance is within the slack.
    pub factor: f64,
    pub resolved_steps: usize,
    pub unresolved_steps: usize,
    /// Every ratio is at most `L_hat + slack + allowance`.
    pub consistent: bool,
}

impl GapDecay {
    pub fn holds(&self, l_hat: f64, slack: f64) -> bool {
        self.resolved_steps > 0 && self.factor <= l_hat + slack && self.consistent
    }
}

impl FixedPointResult {
    /// Measures the geometric decay of the gap history.
    ///
    /// A step's rounding allowance is `(L_hat noise[n] + noise[n+1]) / gap[n]`;
    /// steps whose allowance exceeds `slack` are too close to the rounding floor
    /// to resolve the ratio and only have to be consistent with it.
    pub fn gap_decay(&self, slack: f64) -> GapDecay {
        let l = self.certificate.l_hat;
        let mut out = GapDecay {
            factor: 0.0,
            resolved_steps: 0,
            unresolved_steps: 0,
            consistent: true,
        };
        for n in 0..self.gap_history.len().saturating_sub(1) {
            let (g0, g1) = (self.gap_history[n], self.gap_history[n + 1]);
            if !(g0 > 0.0) {
                continue;
            }
            let ratio = g1 / g0;
            let allowance = (l * self.gap_noise[n] + self.gap_noise[n + 1]) / g0;
            if allowance <= slack {
                out.resolved_steps += 1;
                out.factor = out.factor.max(ratio);
            } else {
                out.unresolved_steps += 1;
            }
            if !(ratio <= l + slack + allowance) {
                out.consistent = false;
            }
        }
        out
    }
}

/// Settings for [`fixed_point_solve`].
#[derive(Debug, Clone, Copy)]
pub struct FixedPointSettings<'a> {
    pub tol: f64,
    pub n_max: u32,
    /// Triples on which `defect <= alpha` is checked before iterating.
    pub audit_triples: &'a [[f64; 3]],
}

/// Iterates `Lambda` from `phi` until successive iterates are `tol`-close in sampled `rho_hat`.
pub fn fixed_point_solve<F, C>(
    phi: &F,
    params: &EquationParams,
    rho: &ModularSpec,
    alpha: &C,
    grid: &SampleGrid,
    settings: FixedPointSettings<'_>,
) -> Result<FixedPointResult>
where
    F: RealFn + ?Sized,
    C: Control + ?Sized,
{
    let FixedPointSettings { tol, n_max, audit_triples } = settings;
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let s = params.s();
    let samples = grid.with_ladder();
    let certificate = estimate_l(alpha, s, &samples)?;
    if !certificate.valid {
        return Err(Error::Regime(format!(
            "L_hat = {} >= 1 at x = {}: Lambda is not a strict contraction",
            certificate.l_hat, certificate.worst_sample
        )));
    }
    if rho.delta2_tau().is_none() {
        return Err(Error::Contract(format!(
            "the fixed-point route requires a modular with a delta2 constant; {rho} has none"
        )));
    }
    let audit = audit_defect(params, phi, rho, alpha, audit_triples)?;
    if !audit.holds() {
        let [x, y, z] = audit.worst_triple;
        return Err(Error::Precondition {
            message: format!(
                "defect exceeds alpha on {} of {} triples (worst ratio {} at ({x}, {y}, {z}))",
                audit.violations, audit.triples_checked, audit.max_ratio
            ),
            worst_triple: audit.worst_triple,
        });
    }

    let weights: Vec<f64> = samples.iter().map(|&x| alpha.diagonal(s, x)).collect();
    let iterate_row = |n: u32| -> Vec<f64> {
        let it = Iterate { phi, s, n };
        samples.iter().map(|&x| it.eval(x)).collect()
    };
    // first-order rounding error of each iterate value: argument perturbed by a few ulps plus output rounding
    let noise_row = |n: u32| -> Vec<f64> {
        let scale = 2f64.powf(f64::from(n) / f64::from(s));
        let den = 2f64.powi(n as i32);
        samples
            .iter()
            .map(|&x| {
                let t = scale * x;
                let v = phi.eval(t);
                let moved = phi.eval(t * (1.0 + ROUNDING_ULPS * f64::EPSILON));
                ((moved - v).abs() + ROUNDING_ULPS * f64::EPSILON * v.abs()) / den
            })
            .collect()
    };
    let noise = |a: &[f64], b: &[f64], na: &[f64], nb: &[f64]| -> f64 {
        let mut worst = 0.0f64;
        for i in 0..a.len() {
            if !(weights[i] > 0.0) {
                continue;
            }
            let d = (a[i] - b[i]).abs();
            let spread = match (rho.eval(d + na[i] + nb[i]), rho.eval(d)) {
                (Ok(hi), Ok(lo)) => hi - lo,
                _ => f64::INFINITY,
            };
            worst = worst.max(spread / weights[i]);
        }
        worst
    };
    let distance = |a: &[f64], b: &[f64]| -> Option<f64> {
        let mut best = 0.0f64;
        for ((u, v), w) in a.iter().zip(b).zip(&weights) {
            if !(*w > 0.0) {
                continue;
            }
            let r = rho.eval(u - v).ok()? / w;
            best = best.max(r);
        }
        Some(best)
    };

    let mut rows = vec![iterate_row(0), iterate_row(1)];
    let mut noise_rows = vec![noise_row(0), noise_row(1)];
    let mut gap_history = Vec::new();
    let mut gap_noise = Vec::new();
    let mut quasi_contraction = Vec::new();
    let mut iterations = 0;
    let mut saturated = true;
    for n in 0..n_max {
        let Some(gap) = distance(&rows[n as usize + 1], &rows[n as usize]) else {
            break;
        };
        gap_history.push(gap);
        let k = n as usize;
        gap_noise.push(noise(&rows[k + 1], &rows[k], &noise_rows[k + 1], &noise_rows[k]));
        iterations = n + 1;
        if n >= 1 {
            let prev = gap_history[n as usize - 1];
            let skip = distance(&rows[n as usize + 1], &rows[n as usize - 1]).unwrap_or(f64::INFINITY);
            let denom = prev.max(gap).max(skip);
            quasi_contraction.push(if denom > 0.0 { gap / denom } else { 0.0 });
        }
        if gap < tol {
            saturated = false;
            break;
        }
        rows.push(iterate_row(n + 2));
        noise_rows.push(noise_row(n + 2));
    }
    rows.truncate(iterations as usize + 1);

    let mut delta_hat_window = 0.0f64;
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            delta_hat_window = delta_hat_window.max(distance(a, b).unwrap_or(f64::INFINITY));
        }
    }

    let limit = Iterate { phi, s, n: iterations };
    let values: Vec<f64> = grid.points().iter().map(|&x| limit.eval(x)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        saturated = true;
    }
    let scale = 1.0 / (2.0 * (1.0 - certificate.l_hat));
    let bound: Vec<f64> = grid.points().iter().map(|&x| alpha.diagonal(s, x) * scale).collect();
    let bound_ok = grid
        .points()
        .iter()
        .zip(&values)
        .zip(&bound)
        .map(|((&x, &v), &b)| match rho.eval(phi.eval(x) - v) {
            Ok(err) => err <= b + 1e-9,
            Err(_) => false,
        })
        .collect();

    Ok(FixedPointResult {
        certificate,
        audit,
        values,
        iterations,
        rho_hat_gap: gap_history.last().copied().unwrap_or(f64::NAN),
        gap_history,
        gap_noise,
        quasi_contraction,
        delta_hat_window,
        bound,
        bound_ok,
        saturated,
    })
}
