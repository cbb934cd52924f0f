//! Runs one configured experiment through the audit, the selected routes and the checks.

use modstab_core::direct::{self, Approximant, LimitResult};
use modstab_core::fixed_point::{estimate_l, fixed_point_solve, FixedPointResult, FixedPointSettings, Iterate};
use modstab_core::radical::{audit_defect, audit_triples, diagonal_triples, DefectAudit};
use modstab_core::verify::{self, CheckOutcome, WorstPoint, LIMIT_TOL};
use modstab_core::{
    construct_limit, corollary_bound, ControlFunction, Error, FunctionHandle, LimitMode, RealFn, SampleGrid,
};

use crate::config::{ExperimentConfig, Method};
use crate::report::{
    nums, AuditEntry, CheckEntry, ConfigEcho, FixedPointEntry, GridEcho, MethodReport, Num, PointEntry,
    RegimeEntry, StabilityReport, Status, SCHEMA,
};
use crate::{EXIT_FAILURE, EXIT_OK};

/// Seeded random triples in the audit, on top of the box corners and grid diagonals.
pub const AUDIT_TRIPLES: usize = 500;

/// Slack on the fixed-point gap-decay check.
pub const DECAY_SLACK: f64 = 1e-9;

/// Attached whenever `corollary_bound` values are reported.
pub const COROLLARY_NOTE: &str =
    "formula deviation: corollary_bound restores the factor theta";

/// Everything the routes share.
struct Setup<'a> {
    cfg: &'a ExperimentConfig,
    phi: FunctionHandle,
    grid: SampleGrid,
    triples: Vec<[f64; 3]>,
}

/// A limit kept around for cross-checking.
enum Limit<'a> {
    Direct(Approximant<'a, FunctionHandle>),
    Fixed(Iterate<'a, FunctionHandle>),
}

impl RealFn for Limit<'_> {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Limit::Direct(a) => a.eval(x),
            Limit::Fixed(a) => a.eval(x),
        }
    }
}

/// The triples on which `defect <= alpha` is audited.
pub fn audit_sample(cfg: &ExperimentConfig) -> Vec<[f64; 3]> {
    let grid = cfg.grid.build();
    let mut triples = audit_triples(cfg.grid.lo, cfg.grid.hi, AUDIT_TRIPLES, cfg.seed);
    triples.extend(diagonal_triples(cfg.equation.s(), grid.points()));
    triples
}

pub fn run_experiment(cfg: &ExperimentConfig) -> StabilityReport {
    let setup = Setup {
        cfg,
        phi: cfg.phi(),
        grid: cfg.grid.build(),
        triples: audit_sample(cfg),
    };

    let gating = cfg.method == Method::FixedPoint;
    let audit = audit_entry(
        audit_defect(&cfg.equation, &setup.phi, &cfg.modular, &cfg.alpha, &setup.triples),
        gating,
    );

    let mut methods = Vec::new();
    let mut limits: Vec<(&'static str, Limit<'_>)> = Vec::new();
    for &m in cfg.method.expand() {
        let (report, limit) = match m {
            Method::T1 => run_direct(&setup, LimitMode::Contract),
            Method::T2 => run_direct(&setup, LimitMode::Expand),
            Method::FixedPoint => run_fixed_point(&setup),
            Method::All => unreachable!("expanded above"),
        };
        if let Some(limit) = limit {
            limits.push((report.method, limit));
        }
        methods.push(report);
    }

    let mut cross_checks = Vec::new();
    for (i, (name_a, a)) in limits.iter().enumerate() {
        for (name_b, b) in &limits[i + 1..] {
            let mut out = verify::cross_check(a, b, &cfg.modular, &setup.grid, LIMIT_TOL);
            out.name = format!("cross_check_{name_a}_{name_b}");
            cross_checks.push(CheckEntry::from(&out));
        }
    }

    let passed = methods.iter().all(|m| m.status == Status::Ok)
        && cross_checks.iter().all(|c| c.passed)
        && (!audit.gating || audit.holds);
    StabilityReport {
        schema: SCHEMA,
        config: echo(cfg),
        audit,
        methods,
        cross_checks,
        passed,
        exit_code: if passed { EXIT_OK } else { EXIT_FAILURE },
    }
}

fn echo(cfg: &ExperimentConfig) -> ConfigEcho {
    ConfigEcho {
        s: cfg.equation.s(),
        q: Num(cfg.equation.q()),
        modular: cfg.modular.to_string(),
        phi: cfg.phi().description().to_string(),
        alpha: cfg.alpha.to_string(),
        method: cfg.method.name(),
        grid: GridEcho {
            lo: Num(cfg.grid.lo),
            hi: Num(cfg.grid.hi),
            count: cfg.grid.count,
        },
        tol: Num(cfg.tol),
        n_max: cfg.n_max,
        seed: cfg.seed,
    }
}

fn audit_entry(audit: Result<DefectAudit, Error>, gating: bool) -> AuditEntry {
    match audit {
        Ok(a) => AuditEntry {
            gating,
            triples_checked: a.triples_checked,
            max_ratio: Num(a.max_ratio),
            max_defect: Num(a.max_defect),
            worst_triple: nums(&a.worst_triple),
            violations: a.violations,
            holds: a.holds(),
            error: None,
        },
        Err(e) => AuditEntry {
            gating,
            triples_checked: 0,
            max_ratio: Num(f64::NAN),
            max_defect: Num(f64::NAN),
            worst_triple: Vec::new(),
            violations: 0,
            holds: false,
            error: Some(e.to_string()),
        },
    }
}

fn fail(mut report: MethodReport, status: Status, err: impl ToString) -> MethodReport {
    report.status = status;
    report.error = Some(err.to_string());
    report
}

/// Status for errors raised by a route.
fn status_of(err: &Error) -> Status {
    match err {
        Error::Regime(_) => Status::RegimeError,
        _ => Status::Error,
    }
}

/// Convergence check on the terminal Cauchy gaps of a scaling limit.
fn limit_check(limit: &LimitResult, tol: f64) -> CheckOutcome {
    let mut worst = (WorstPoint::None, 0.0f64);
    for ((&x, &g), &frozen) in limit.grid.points().iter().zip(&limit.cauchy_gap).zip(&limit.frozen) {
        let g = if frozen || g.is_nan() { f64::INFINITY } else { g };
        if worst.0 == WorstPoint::None || g > worst.1 {
            worst = (WorstPoint::Point(x), g);
        }
    }
    let failed = limit.saturated || worst.1 > tol;
    CheckOutcome {
        name: "limit_converged".into(),
        passed: !failed,
        worst_point: worst.0,
        worst_value: worst.1,
        tolerance: tol,
    }
}

/// Smallest `bound(x) - rho(phi(x) - shift - A(x))` over the grid.
fn bound_slack<A: RealFn + ?Sized>(setup: &Setup<'_>, a: &A, shift: f64, bound: &[f64]) -> f64 {
    setup
        .grid
        .points()
        .iter()
        .zip(bound)
        .map(|(&x, &b)| {
            let err = setup
                .cfg
                .modular
                .eval(setup.phi.eval(x) - shift - a.eval(x))
                .unwrap_or(f64::INFINITY);
            b - err
        })
        .fold(f64::INFINITY, f64::min)
}

fn finish(mut report: MethodReport, checks: Vec<CheckOutcome>) -> MethodReport {
    report.status = if checks.iter().all(|c| c.passed) {
        Status::Ok
    } else {
        Status::Failed
    };
    report.checks = checks.iter().map(CheckEntry::from).collect();
    report
}

fn run_direct<'a>(setup: &'a Setup<'a>, mode: LimitMode) -> (MethodReport, Option<Limit<'a>>) {
    let cfg = setup.cfg;
    let s = cfg.equation.s();
    let mut report = MethodReport::new(match mode {
        LimitMode::Contract => "t1",
        LimitMode::Expand => "t2",
    });

    let tau = cfg.modular.delta2_tau();
    let ratio = match (mode, tau) {
        (LimitMode::Contract, None) => {
            let err = Error::Contract(format!(
                "the contracting route requires a modular with a delta2 constant; {} has none",
                cfg.modular
            ));
            return (fail(report, Status::Error, err), None);
        }
        (LimitMode::Contract, Some(tau)) => direct::ratio_t1(&cfg.alpha, tau, s),
        (LimitMode::Expand, _) => direct::ratio_t2(&cfg.alpha, s),
    };
    let ratio = match ratio {
        Ok(r) => r,
        Err(e) => return (fail(report, status_of(&e), e), None),
    };
    let convergent = ratio < 1.0;
    report.regime = Some(RegimeEntry {
        quantity: "r",
        value: Num(ratio),
        convergent,
    });

    let limit = match construct_limit(mode, &setup.phi, &cfg.equation, &cfg.modular, &setup.grid, cfg.tol, cfg.n_max)
    {
        Ok(l) => l,
        Err(e) => return (fail(report, status_of(&e), e), None),
    };
    report.achieved_n = limit.achieved_n;
    report.saturated = limit.saturated;
    report.converged = convergent && !limit.saturated;
    let points = |bounds: Option<&[f64]>, corollary: Option<&[f64]>| -> Vec<PointEntry> {
        (0..setup.grid.len())
            .map(|i| PointEntry {
                x: Num(setup.grid.points()[i]),
                value: Num(limit.values[i]),
                bound: bounds.map(|b| Num(b[i])),
                corollary_bound: corollary.map(|c| Num(c[i])),
                gap: Num(limit.cauchy_gap[i]),
                frozen: limit.frozen[i],
            })
            .collect()
    };

    if !convergent {
        report.points = points(None, None);
        let err = Error::Regime(format!("series ratio r = {ratio} >= 1: the error series diverges"));
        return (fail(report, Status::RegimeError, err), None);
    }

    let mut bounds = Vec::with_capacity(setup.grid.len());
    for &x in setup.grid.points() {
        let b = match mode {
            LimitMode::Contract => direct::series_bound_t1(&cfg.alpha, tau.unwrap_or(f64::NAN), s, x, cfg.tol),
            LimitMode::Expand => direct::series_bound_t2(&cfg.alpha, s, x, cfg.tol),
        };
        match b.map(|b| b.certified()) {
            Ok(Some(v)) => bounds.push(v),
            Ok(None) => {
                report.points = points(None, None);
                let err = Error::Regime(format!("error series diverges at x = {x}"));
                return (fail(report, Status::RegimeError, err), None);
            }
            Err(e) => {
                report.points = points(None, None);
                return (fail(report, status_of(&e), e), None);
            }
        }
    }
    let corollary: Option<Vec<f64>> = match (mode, cfg.alpha, tau) {
        (LimitMode::Contract, ControlFunction::Power { theta, p }, Some(tau)) => setup
            .grid
            .points()
            .iter()
            .map(|&x| corollary_bound(theta, p, s, tau, x).ok())
            .collect(),
        _ => None,
    };
    if corollary.is_some() {
        report.notes.push(COROLLARY_NOTE.into());
    }
    report.points = points(Some(&bounds), corollary.as_deref());

    let shift = match mode {
        LimitMode::Contract => 0.0,
        LimitMode::Expand => cfg.equation.q() * setup.phi.eval(0.0),
    };
    let a = limit.mapping(&setup.phi, &cfg.equation);
    report.worst_bound_slack = Some(Num(bound_slack(setup, &a, shift, &bounds)));
    let checks = match verify::verify_stability_bound(
        &setup.phi,
        &a,
        shift,
        &cfg.modular,
        &bounds,
        &setup.grid,
        LIMIT_TOL,
    ) {
        Ok(bound_check) => vec![
            limit_check(&limit, cfg.tol),
            bound_check,
            verify::verify_radical_additivity(&a, &cfg.modular, s, &setup.grid, LIMIT_TOL),
            verify::verify_oddness(&a, &cfg.modular, &setup.grid, LIMIT_TOL),
        ],
        Err(e) => return (fail(report, Status::Error, e), None),
    };
    let report = finish(report, checks);
    let limit = (!limit.saturated).then_some(Limit::Direct(a));
    (report, limit)
}

fn run_fixed_point<'a>(setup: &'a Setup<'a>) -> (MethodReport, Option<Limit<'a>>) {
    let cfg = setup.cfg;
    let s = cfg.equation.s();
    let mut report = MethodReport::new("fixedpoint");

    let cert = match estimate_l(&cfg.alpha, s, &setup.grid.with_ladder()) {
        Ok(c) => c,
        Err(e) => return (fail(report, status_of(&e), e), None),
    };
    if cert.samples_skipped > 0 {
        report
            .notes
            .push(format!("{} samples skipped: alpha vanishes on the diagonal there", cert.samples_skipped));
    }
    report.regime = Some(RegimeEntry {
        quantity: "L_hat",
        value: Num(cert.l_hat),
        convergent: cert.valid,
    });

    let settings = FixedPointSettings {
        tol: cfg.tol,
        n_max: cfg.n_max,
        audit_triples: &setup.triples,
    };
    let result = match fixed_point_solve(&setup.phi, &cfg.equation, &cfg.modular, &cfg.alpha, &setup.grid, settings)
    {
        Ok(r) => r,
        Err(e) => return (fail(report, status_of(&e), e), None),
    };
    report.achieved_n = result.iterations;
    report.saturated = result.saturated;
    report.converged = !result.saturated;
    let decay = result.gap_decay(DECAY_SLACK);
    report.fixed_point = Some(FixedPointEntry {
        iterations: result.iterations,
        worst_sample: Num(result.certificate.worst_sample),
        samples_checked: result.certificate.samples_checked,
        rho_hat_gap: Num(result.rho_hat_gap),
        gap_history: nums(&result.gap_history),
        gap_noise: nums(&result.gap_noise),
        decay_factor: Num(decay.factor),
        resolved_steps: decay.resolved_steps,
        quasi_contraction: nums(&result.quasi_contraction),
        delta_hat_window: Num(result.delta_hat_window),
    });
    report.points = setup
        .grid
        .points()
        .iter()
        .zip(&result.values)
        .zip(&result.bound)
        .map(|((&x, &v), &b)| PointEntry {
            x: Num(x),
            value: Num(v),
            bound: Some(Num(b)),
            corollary_bound: None,
            gap: Num(f64::NAN),
            frozen: false,
        })
        .collect();

    let a = Iterate {
        phi: &setup.phi,
        s,
        n: result.iterations,
    };
    report.worst_bound_slack = Some(Num(bound_slack(setup, &a, 0.0, &result.bound)));

    let converged = CheckOutcome {
        name: "limit_converged".into(),
        passed: !result.saturated,
        worst_point: WorstPoint::None,
        worst_value: if result.rho_hat_gap.is_nan() {
            f64::INFINITY
        } else {
            result.rho_hat_gap
        },
        tolerance: cfg.tol,
    };
    let checks = match verify::verify_stability_bound(
        &setup.phi,
        &a,
        0.0,
        &cfg.modular,
        &result.bound,
        &setup.grid,
        LIMIT_TOL,
    ) {
        Ok(bound_check) => vec![
            converged,
            gap_decay_check(&result),
            bound_check,
            verify::verify_radical_additivity(&a, &cfg.modular, s, &setup.grid, LIMIT_TOL),
            verify::verify_oddness(&a, &cfg.modular, &setup.grid, LIMIT_TOL),
        ],
        Err(e) => return (fail(report, Status::Error, e), None),
    };
    let report = finish(report, checks);
    let limit = (!result.saturated).then_some(Limit::Fixed(a));
    (report, limit)
}

/// Resolved successive gap ratios must not exceed `L_hat` (plus rounding slack).
pub fn gap_decay_check(result: &FixedPointResult) -> CheckOutcome {
    let l_hat = result.certificate.l_hat;
    let decay = result.gap_decay(DECAY_SLACK);
    CheckOutcome {
        name: "gap_decay".into(),
        passed: decay.holds(l_hat, DECAY_SLACK),
        worst_point: WorstPoint::Point(decay.resolved_steps as f64),
        worst_value: if decay.resolved_steps == 0 { f64::INFINITY } else { decay.factor },
        tolerance: l_hat + DECAY_SLACK,
    }
}
