//! The radical functional equation
//! `phi(x) + phi(y) + phi(z) = q phi(((x^s + y^s + z^s) / q)^(1/s))`
//! and its perturbation bounds.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, ParseError, Result};
use crate::expr::RealFn;
use crate::modular::ModularSpec;
use crate::syntax::KindSpec;

/// Radical exponent `s` (odd, `>= 3`) and scale `q` (`0 < |q| <= 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationParams {
    s: u32,
    q: f64,
}

impl EquationParams {
    pub fn new(s: u32, q: f64) -> Result<Self> {
        check_exponent(s)?;
        if !q.is_finite() || q == 0.0 || q.abs() > 1.0 {
            return Err(Error::Parameter(format!("q must satisfy 0 < |q| <= 1, got {q}")));
        }
        Ok(EquationParams { s, q })
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `2^(1/s)`
    pub fn root_two(&self) -> f64 {
        2f64.powf(1.0 / f64::from(self.s))
    }
}

pub(crate) fn check_exponent(s: u32) -> Result<()> {
    if s < 3 || s % 2 == 0 {
        Err(Error::Parameter(format!("radical exponent must be odd and >= 3, got {s}")))
    } else {
        Ok(())
    }
}

/// Real `s`-th root, `sign(t) |t|^(1/s)`.
pub fn radical_root(t: f64, s: u32) -> Result<f64> {
    check_exponent(s)?;
    Ok(odd_root(t, s))
}

pub(crate) fn odd_root(t: f64, s: u32) -> f64 {
    if t == 0.0 || !t.is_finite() {
        return t;
    }
    let mag = t.abs();
    let mut r = if s == 3 { mag.cbrt() } else { mag.powf(1.0 / f64::from(s)) };
    if s != 3 && r.is_finite() && r > 0.0 {
        // one Newton step on r^s = mag tightens powf's rounding
        let sf = f64::from(s);
        let refined = r - (r.powi(s as i32) - mag) / (sf * r.powi(s as i32 - 1));
        if refined.is_finite() && (refined.powi(s as i32) - mag).abs() <= (r.powi(s as i32) - mag).abs() {
            r = refined;
        }
    }
    r.copysign(t)
}

/// `((x^s + y^s + z^s) / q)^(1/s)`
pub fn radical_combine(params: &EquationParams, x: f64, y: f64, z: f64) -> Result<f64> {
    let s = params.s as i32;
    let mut sum = 0.0;
    for (name, v) in [("x", x), ("y", y), ("z", z)] {
        let pow = v.powi(s);
        if !pow.is_finite() {
            return Err(Error::Range { coordinate: name });
        }
        sum += pow;
    }
    let scaled = sum / params.q;
    if !scaled.is_finite() {
        return Err(Error::Range { coordinate: "sum" });
    }
    Ok(odd_root(scaled, params.s))
}

/// `rho(phi(x) + phi(y) + phi(z) - q phi(radical_combine(x, y, z)))`
pub fn defect<F: RealFn + ?Sized>(
    params: &EquationParams,
    phi: &F,
    rho: &ModularSpec,
    x: f64,
    y: f64,
    z: f64,
) -> Result<f64> {
    let w = radical_combine(params, x, y, z)?;
    rho.eval(phi.eval(x) + phi.eval(y) + phi.eval(z) - params.q * phi.eval(w))
}

/// `rho(phi((x^s + y^s)^(1/s)) - phi(x) - phi(y))`
pub fn pair_additivity_defect<F: RealFn + ?Sized>(phi: &F, rho: &ModularSpec, s: u32, x: f64, y: f64) -> Result<f64> {
    check_exponent(s)?;
    let (xs, ys) = (x.powi(s as i32), y.powi(s as i32));
    if !xs.is_finite() {
        return Err(Error::Range { coordinate: "x" });
    }
    if !ys.is_finite() {
        return Err(Error::Range { coordinate: "y" });
    }
    let w = odd_root(xs + ys, s);
    rho.eval(phi.eval(w) - phi.eval(x) - phi.eval(y))
}

/// The perturbation bound `alpha(x, y, z)` on the equation defect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlFunction {
    /// `theta (|x|^p + |y|^p + |z|^p)`
    Power { theta: f64, p: f64 },
    /// `eps`
    Constant { eps: f64 },
}

impl ControlFunction {
    pub fn power(theta: f64, p: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0 && p.is_finite() && p >= 0.0) {
            return Err(Error::Parameter(format!(
                "power control needs theta >= 0 and p >= 0, got theta={theta}, p={p}"
            )));
        }
        Ok(ControlFunction::Power { theta, p })
    }

    pub fn constant(eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::Parameter(format!("constant control needs eps >= 0, got {eps}")));
        }
        Ok(ControlFunction::Constant { eps })
    }
}

/// A control function with optional homogeneity metadata.
///
/// The degree `d` (with `alpha(cx, cy, cz) = |c|^d alpha(x, y, z)`) is what
/// turns the error series into exact geometric series. Controls without a
/// known degree get no tail estimate.
pub trait Control {
    fn eval(&self, x: f64, y: f64, z: f64) -> f64;

    fn homogeneity_degree(&self) -> Option<f64> {
        None
    }

    /// `alpha(x, x, -2^(1/s) x)`, the diagonal used by the stability bounds.
    fn diagonal(&self, s: u32, x: f64) -> f64 {
        let c = 2f64.powf(1.0 / f64::from(s));
        self.eval(x, x, -c * x)
    }
}

impl Control for ControlFunction {
    fn eval(&self, x: f64, y: f64, z: f64) -> f64 {
        match *self {
            ControlFunction::Power { theta, p } => {
                let term = |v: f64| if p == 0.0 { 1.0 } else { v.abs().powf(p) };
                theta * (term(x) + term(y) + term(z))
            }
            ControlFunction::Constant { eps } => eps,
        }
    }

    fn homogeneity_degree(&self) -> Option<f64> {
        match *self {
            ControlFunction::Power { p, .. } => Some(p),
            ControlFunction::Constant { .. } => Some(0.0),
        }
    }
}

/// Evaluates `alpha(x, y, z)`.
pub fn control_eval<C: Control + ?Sized>(alpha: &C, x: f64, y: f64, z: f64) -> f64 {
    alpha.eval(x, y, z)
}

impl fmt::Display for ControlFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlFunction::Power { theta, p } => write!(f, "power:theta={theta},p={p}"),
            ControlFunction::Constant { eps } => write!(f, "const:eps={eps}"),
        }
    }
}

impl FromStr for ControlFunction {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        let mut spec = KindSpec::parse(s)?;
        let parsed = match spec.kind {
            "power" => {
                let theta = spec.require("theta")?;
                let p = spec.require("p")?;
                ControlFunction::power(theta, p)
            }
            "const" => ControlFunction::constant(spec.require("eps")?),
            other => return Err(ParseError::new(0, format!("unknown control kind {other:?}"))),
        }
        .map_err(|e| ParseError::new(0, e.to_string()))?;
        spec.finish()?;
        Ok(parsed)
    }
}

/// Sampled check of the hypothesis `defect(x, y, z) <= alpha(x, y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectAudit {
    pub triples_checked: usize,
    /// Largest `defect / alpha` over triples with positive `alpha`.
    pub max_ratio: f64,
    pub worst_triple: [f64; 3],
    pub max_defect: f64,
    /// Triples where the defect exceeded `alpha` beyond rounding slack.
    pub violations: usize,
}

impl DefectAudit {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Evaluates the defect-vs-alpha hypothesis on every triple.
pub fn audit_defect<F: RealFn + ?Sized, C: Control + ?Sized>(
    params: &EquationParams,
    phi: &F,
    rho: &ModularSpec,
    alpha: &C,
    triples: &[[f64; 3]],
) -> Result<DefectAudit> {
    let mut audit = DefectAudit {
        triples_checked: 0,
        max_ratio: 0.0,
        worst_triple: [0.0; 3],
        max_defect: 0.0,
        violations: 0,
    };
    for &[x, y, z] in triples {
        let d = defect(params, phi, rho, x, y, z)?;
        let a = alpha.eval(x, y, z);
        let ratio = if a > 0.0 {
            d / a
        } else if d <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        if d > a * (1.0 + 1e-9) + 1e-12 {
            audit.violations += 1;
        }
        if ratio > audit.max_ratio || audit.triples_checked == 0 {
            audit.max_ratio = ratio;
            audit.worst_triple = [x, y, z];
        }
        audit.max_defect = audit.max_defect.max(d);
        audit.triples_checked += 1;
    }
    Ok(audit)
}

/// `count` seeded uniform triples in `[lo, hi]^3` followed by the eight box corners.
pub fn audit_triples(lo: f64, hi: f64, count: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples: Vec<[f64; 3]> = (0..count)
        .map(|_| {
            [
                rng.gen_range(lo..=hi),
                rng.gen_range(lo..=hi),
                rng.gen_range(lo..=hi),
            ]
        })
        .collect();
    for a in [lo, hi] {
        for b in [lo, hi] {
            for c in [lo, hi] {
                triples.push([a, b, c]);
            }
        }
    }
    triples
}

/// The triples `(x, x, -2^(1/s) x)` on which the stability bounds are built.
pub fn diagonal_triples(s: u32, points: &[f64]) -> Vec<[f64; 3]> {
    let c = 2f64.powf(1.0 / f64::from(s));
    points.iter().map(|&x| [x, x, -c * x]).collect()
}
