//! `modstab check-modular`: axioms and the Δ₂ estimate for one modular.

use serde::Serialize;

use modstab_core::modular::{standard_ladder, symmetric_ladder, AxiomReport, DEFAULT_DIVERGENCE_FACTOR};
use modstab_core::{Error, ModularSpec};

use crate::report::{nums, Num, SCHEMA};
use crate::{EXIT_FAILURE, EXIT_OK};

#[derive(Debug, Clone, Serialize)]
pub struct AxiomRow {
    pub axiom: &'static str,
    pub passed: bool,
    pub worst_args: Vec<Num>,
    pub worst_excess: Num,
}

#[derive(Debug, Clone, Serialize)]
pub struct Delta2Row {
    pub declared_tau: Option<Num>,
    pub tau_hat: Num,
    pub diverged: bool,
    /// A declared constant must not be contradicted by a diverging estimate.
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModularReport {
    pub schema: &'static str,
    pub modular: String,
    pub convex: bool,
    pub fatou: bool,
    pub tolerance: Num,
    pub axioms: Vec<AxiomRow>,
    pub delta2: Delta2Row,
    pub passed: bool,
    pub exit_code: i32,
}

pub fn check_modular(spec: &ModularSpec, tol: f64) -> Result<ModularReport, Error> {
    let axioms: AxiomReport = spec.check_axioms(&symmetric_ladder(), tol);
    let estimate = spec.estimate_delta2(&standard_ladder(), DEFAULT_DIVERGENCE_FACTOR)?;
    let consistent = match spec.delta2_tau() {
        Some(tau) => !estimate.diverged && estimate.tau_hat <= tau * (1.0 + tol),
        None => true,
    };
    let passed = axioms.all_pass() && consistent;
    Ok(ModularReport {
        schema: SCHEMA,
        modular: spec.to_string(),
        convex: spec.is_convex(),
        fatou: spec.has_fatou(),
        tolerance: Num(tol),
        axioms: axioms
            .entries
            .iter()
            .map(|e| AxiomRow {
                axiom: e.axiom.name(),
                passed: e.passed,
                worst_args: nums(&e.worst_args),
                worst_excess: Num(e.worst_excess),
            })
            .collect(),
        delta2: Delta2Row {
            declared_tau: spec.delta2_tau().map(Num),
            tau_hat: Num(estimate.tau_hat),
            diverged: estimate.diverged,
            consistent,
        },
        passed,
        exit_code: if passed { EXIT_OK } else { EXIT_FAILURE },
    })
}

pub fn modular_csv(report: &ModularReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let cell = |v: Num| crate::report::format_num(v.0).unwrap_or_default();
    w.write_record(["axiom", "passed", "worst_excess"]).expect("in-memory csv");
    for a in &report.axioms {
        w.write_record([a.axiom.to_string(), a.passed.to_string(), cell(a.worst_excess)])
            .expect("in-memory csv");
    }
    w.write_record(["delta2_estimate".to_string(), report.delta2.consistent.to_string(), cell(report.delta2.tau_hat)])
        .expect("in-memory csv");
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}
