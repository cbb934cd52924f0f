//! Modular functionals on the (real) value space.
//!
//! A modular generalizes a norm: `rho(0) = 0`, `rho(-u) = rho(u)`, and
//! `rho(a u + b v) <= rho(u) + rho(v)` for nonnegative `a + b = 1`. Convex
//! modulars additionally satisfy `rho(a u + b v) <= a rho(u) + b rho(v)`.
//!
//! Two concrete families are provided:
//!
//! * `power:p=P` with `rho(u) = |u|^P` (`P >= 1`), convex, Δ₂ with `tau = 2^P`;
//! * `exp` with `rho(u) = e^|u| - 1`, convex but without a Δ₂ constant.
//!
//! Axioms are certified numerically on finite sample sets; see
//! [`ModularSpec::check_axioms`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, ParseError, Result};
use crate::syntax::KindSpec;

/// Ratio growth that marks a Δ₂ estimate as divergent.
pub const DEFAULT_DIVERGENCE_FACTOR: f64 = 10.0;

/// Relative tolerance used by the axiom checks.
pub const DEFAULT_AXIOM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModularKind {
    /// `rho(u) = |u|^p`
    Power { p: f64 },
    /// `rho(u) = e^|u| - 1`
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularSpec {
    kind: ModularKind,
    is_convex: bool,
    delta2_tau: Option<f64>,
    has_fatou: bool,
}

impl ModularSpec {
    pub fn power(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::Parameter(format!("power modular needs finite p >= 1, got {p}")));
        }
        Ok(ModularSpec {
            kind: ModularKind::Power { p },
            is_convex: true,
            delta2_tau: Some(2f64.powf(p)),
            has_fatou: true,
        })
    }

    pub fn exp() -> Self {
        ModularSpec {
            kind: ModularKind::Exp,
            is_convex: true,
            delta2_tau: None,
            has_fatou: true,
        }
    }

    /// Overrides the Δ₂ constant. A convex modular cannot have `tau < 2`.
    pub fn with_delta2_tau(mut self, tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::Parameter(format!("delta2 constant must be positive, got {tau}")));
        }
        if self.is_convex && tau < 2.0 {
            return Err(Error::Parameter(format!(
                "convex modular requires delta2 constant >= 2, got {tau}"
            )));
        }
        if let ModularKind::Power { p } = self.kind {
            let minimal = 2f64.powf(p);
            if tau < minimal * (1.0 - 1e-12) {
                return Err(Error::Parameter(format!(
                    "power:p={p} needs delta2 constant >= {minimal}, got {tau}"
                )));
            }
        }
        self.delta2_tau = Some(tau);
        Ok(self)
    }

    pub fn kind(&self) -> ModularKind {
        self.kind
    }

    pub fn is_convex(&self) -> bool {
        self.is_convex
    }

    pub fn delta2_tau(&self) -> Option<f64> {
        self.delta2_tau
    }

    pub fn has_fatou(&self) -> bool {
        self.has_fatou
    }

    /// Evaluates `rho(u)`.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::NonFinite { value: u });
        }
        let r = self.eval_raw(u);
        if r.is_finite() {
            Ok(r)
        } else {
            Err(Error::Overflow { value: u })
        }
    }

    /// `rho(u)` without finiteness checks; may return `+inf` on overflow.
    pub(crate) fn eval_raw(&self, u: f64) -> f64 {
        match self.kind {
            ModularKind::Power { p } => {
                if p == 1.0 {
                    u.abs()
                } else {
                    u.abs().powf(p)
                }
            }
            ModularKind::Exp => u.abs().exp_m1(),
        }
    }

    /// Estimates the Δ₂ constant as the largest `rho(2u) / rho(u)` over `samples`.
    ///
    /// Samples are visited in order of increasing magnitude; the estimate is
    /// flagged as diverged when the ratio at the largest sample exceeds the
    /// ratio at the smallest by more than `divergence_factor`.
    pub fn estimate_delta2(&self, samples: &[f64], divergence_factor: f64) -> Result<Delta2Estimate> {
        if samples.is_empty() {
            return Err(Error::Argument("delta2 estimate needs at least one sample".into()));
        }
        let mut ladder: Vec<f64> = samples.to_vec();
        if let Some(bad) = ladder.iter().find(|u| !u.is_finite() || **u == 0.0) {
            return Err(Error::Argument(format!("delta2 samples must be finite and nonzero, got {bad}")));
        }
        ladder.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

        let mut ratios = Vec::with_capacity(ladder.len());
        for &u in &ladder {
            let base = self.eval_raw(u);
            if base == 0.0 {
                return Err(Error::Argument(format!("rho({u}) underflowed to zero")));
            }
            let doubled = self.eval_raw(2.0 * u);
            // an overflowed modular has no finite doubling constant at this scale
            let ratio = if base.is_finite() && doubled.is_finite() { doubled / base } else { f64::INFINITY };
            ratios.push(ratio);
        }
        let tau_hat = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let first = ratios[0];
        let last = ratios[ratios.len() - 1];
        Ok(Delta2Estimate {
            tau_hat,
            diverged: last > divergence_factor * first,
        })
    }

    /// Numerically certifies the modular axioms on `samples`.
    pub fn check_axioms(&self, samples: &[f64], tol: f64) -> AxiomReport {
        let mut entries = Vec::new();

        let at_zero = self.eval_raw(0.0);
        entries.push(AxiomEntry::from_worst(Axiom::ZeroAtZero, at_zero.abs(), vec![0.0], tol));

        let mut positivity = Worst::default();
        let mut symmetry = Worst::default();
        for &u in samples.iter().filter(|u| **u != 0.0) {
            let r = self.eval_raw(u);
            positivity.offer(if r > 0.0 { 0.0 } else { f64::INFINITY }, vec![u]);
            symmetry.offer(symmetric_gap(r, self.eval_raw(-u)), vec![u]);
        }
        entries.push(positivity.into_entry(Axiom::Positivity, tol));
        entries.push(symmetry.into_entry(Axiom::Symmetry, tol));

        const WEIGHTS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
        let mut convexity = Worst::default();
        let partners: Vec<f64> = samples.iter().copied().chain(std::iter::once(0.0)).collect();
        for &u in samples {
            for &v in &partners {
                for &a in &WEIGHTS {
                    let b = 1.0 - a;
                    let lhs = self.eval_raw(a * u + b * v);
                    let (ru, rv) = (self.eval_raw(u), self.eval_raw(v));
                    let rhs = if self.is_convex {
                        weighted(a, ru) + weighted(b, rv)
                    } else {
                        ru + rv
                    };
                    convexity.offer(excess(lhs, rhs), vec![u, v, a]);
                }
            }
        }
        entries.push(convexity.into_entry(Axiom::Convexity, tol));

        const SCALES: [f64; 6] = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0];
        let mut monotone = Worst::default();
        for &u in samples {
            for pair in SCALES.windows(2) {
                let lhs = self.eval_raw(pair[0] * u);
                let rhs = self.eval_raw(pair[1] * u);
                monotone.offer(excess(lhs, rhs), vec![u, pair[0], pair[1]]);
            }
        }
        entries.push(monotone.into_entry(Axiom::Monotonicity, tol));

        if let Some(tau) = self.delta2_tau {
            let mut delta2 = Worst::default();
            if self.is_convex && tau < 2.0 {
                delta2.offer(f64::INFINITY, vec![tau]);
            }
            for &u in samples {
                delta2.offer(excess(self.eval_raw(2.0 * u), tau * self.eval_raw(u)), vec![u]);
            }
            entries.push(delta2.into_entry(Axiom::Delta2, tol));
        }

        AxiomReport { entries }
    }
}

impl fmt::Display for ModularSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModularKind::Power { p } => {
                write!(f, "power:p={p}")?;
                match self.delta2_tau {
                    Some(tau) if tau != 2f64.powf(p) => write!(f, ",tau={tau}"),
                    _ => Ok(()),
                }
            }
            ModularKind::Exp => f.write_str("exp"),
        }
    }
}

impl FromStr for ModularSpec {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        let mut spec = KindSpec::parse(s)?;
        let parsed = match spec.kind {
            "power" => {
                let p = spec.require("p")?;
                let base = ModularSpec::power(p).map_err(|e| ParseError::new(0, e.to_string()))?;
                match spec.take("tau") {
                    Some(tau) => base.with_delta2_tau(tau).map_err(|e| ParseError::new(0, e.to_string()))?,
                    None => base,
                }
            }
            "exp" => ModularSpec::exp(),
            other => return Err(ParseError::new(0, format!("unknown modular kind {other:?}"))),
        };
        spec.finish()?;
        Ok(parsed)
    }
}

/// The geometric ladder `{2^k : k = -3..=10}` used for Δ₂ estimation.
pub fn standard_ladder() -> Vec<f64> {
    (-3..=10).map(|k| 2f64.powi(k)).collect()
}

/// The standard ladder mirrored onto the negative axis.
pub fn symmetric_ladder() -> Vec<f64> {
    standard_ladder().into_iter().flat_map(|u| [-u, u]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta2Estimate {
    pub tau_hat: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    ZeroAtZero,
    Positivity,
    Symmetry,
    Convexity,
    Monotonicity,
    Delta2,
}

impl Axiom {
    pub fn name(self) -> &'static str {
        match self {
            Axiom::ZeroAtZero => "zero_at_zero",
            Axiom::Positivity => "positivity",
            Axiom::Symmetry => "symmetry",
            Axiom::Convexity => "convexity",
            Axiom::Monotonicity => "monotonicity",
            Axiom::Delta2 => "delta2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomEntry {
    pub axiom: Axiom,
    pub passed: bool,
    /// Arguments of the worst sample: `[u]`, `[u, v, weight]` or `[u, a, b]`.
    pub worst_args: Vec<f64>,
    /// Relative excess `(lhs - rhs) / (1 + |rhs|)`, clamped at zero.
    pub worst_excess: f64,
}

impl AxiomEntry {
    fn from_worst(axiom: Axiom, excess: f64, args: Vec<f64>, tol: f64) -> Self {
        AxiomEntry {
            axiom,
            passed: excess <= tol,
            worst_args: args,
            worst_excess: excess,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub entries: Vec<AxiomEntry>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn entry(&self, axiom: Axiom) -> Option<&AxiomEntry> {
        self.entries.iter().find(|e| e.axiom == axiom)
    }
}

#[derive(Default)]
struct Worst {
    value: f64,
    args: Vec<f64>,
}

impl Worst {
    fn offer(&mut self, value: f64, args: Vec<f64>) {
        if self.args.is_empty() || value > self.value {
            self.value = value;
            self.args = args;
        }
    }

    fn into_entry(self, axiom: Axiom, tol: f64) -> AxiomEntry {
        AxiomEntry::from_worst(axiom, self.value, self.args, tol)
    }
}

// 0 * inf is NaN; a zero weight contributes nothing.
fn weighted(w: f64, r: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * r
    }
}

fn excess(lhs: f64, rhs: f64) -> f64 {
    if lhs <= rhs {
        0.0
    } else if lhs.is_finite() && rhs.is_finite() {
        (lhs - rhs) / (1.0 + rhs.abs())
    } else {
        f64::INFINITY
    }
}

fn symmetric_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        excess(a.max(b), a.min(b))
    }
}
