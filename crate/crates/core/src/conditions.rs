//! Smallness conditions, constant assembly, and the randomized hypothesis
//! suite. Every solvability condition has the shape
//!   m_A > m_j |N|^2 + sqrt(2) (beta_4 + beta_5 |alpha_0|) |K| |M|,
//! either stated directly on abstract constants or reached through the
//! model-specific constant mappings; both routes are kept and cross-checked.
//! All evaluations here are pure arithmetic: recomputing a report yields the
//! same margins bitwise.

use nalgebra::{DMatrix, DVector};

use crate::friction::{
    probe_compliance, probe_damped_response, probe_mu_growth, probe_mu_lipschitz,
    probe_state_lipschitz, FrictionLaw, MuConstants, ProbeOutcome, RsfParams, StateLaw,
};
use crate::history::{history_lipschitz_probe, HistoryKernel};
use crate::opnorm::{
    coercivity_constant, estimate_operator_norm, weighted_l4_pair_norm, weighted_l4_trace_norm,
};
use crate::problem::{ConstantsRecord, DiscreteProblem};
use crate::step::ContactModel;
use crate::{Error, Result};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Closed form evaluated from model parameters.
    Analytic,
    /// Numerically estimated (operator norms, coercivity).
    Estimated,
    /// Declared by the caller alongside a user-supplied law.
    User,
}

#[derive(Clone, Debug)]
pub struct Ingredient {
    pub name: &'static str,
    pub value: f64,
    pub provenance: Provenance,
}

fn ing(name: &'static str, value: f64, provenance: Provenance) -> Ingredient {
    Ingredient { name, value, provenance }
}

/// One evaluated solvability condition: lhs > rhs demanded, margin = lhs -
/// rhs, with the named constants that entered.
#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub id: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    pub ingredients: Vec<Ingredient>,
}

impl ConditionReport {
    fn new(id: &'static str, lhs: f64, rhs: f64, ingredients: Vec<Ingredient>) -> Self {
        let margin = lhs - rhs;
        ConditionReport { id, lhs, rhs, margin, holds: margin > 0.0, ingredients }
    }
}

/// The abstract solvability condition on a constants record:
/// margin = m_A - m_j |N|^2 - sqrt(2) (beta_4 + beta_5 |alpha_0|) |K| |M|.
pub fn check_abstract_condition(
    consts: &ConstantsRecord,
    alpha0_norm: f64,
) -> Result<ConditionReport> {
    consts.validate()?;
    if !alpha0_norm.is_finite() || alpha0_norm < 0.0 {
        return Err(Error::Invalid("initial-state norm must be finite and >= 0".into()));
    }
    let rhs = consts.m_j * consts.op_norm_n * consts.op_norm_n
        + SQRT_2
            * (consts.beta[3] + consts.beta[4] * alpha0_norm)
            * consts.op_norm_k
            * consts.op_norm_m;
    Ok(ConditionReport::new(
        "abstract",
        consts.m_a,
        rhs,
        vec![
            ing("m_a", consts.m_a, Provenance::User),
            ing("m_j", consts.m_j, Provenance::User),
            ing("beta_4", consts.beta[3], Provenance::User),
            ing("beta_5", consts.beta[4], Provenance::User),
            ing("alpha0_norm", alpha0_norm, Provenance::User),
            ing("op_norm_m", consts.op_norm_m, Provenance::User),
            ing("op_norm_n", consts.op_norm_n, Provenance::User),
            ing("op_norm_k", consts.op_norm_k, Provenance::User),
        ],
    ))
}

/// Contact-model constants mapped onto the abstract beta vector, for the
/// penalty-pressure composition p(eta) mu(g, alpha) on the tangential trace.
pub fn compliance_betas(c: &MuConstants, p_star: f64, l_p: f64, meas: f64) -> [f64; 7] {
    [
        p_star * c.l3,
        0.0,
        l_p * (1.0 + c.kappa1) * meas.sqrt(),
        p_star * c.l1 * meas.sqrt(),
        p_star * c.l2,
        c.kappa3 * l_p * meas.powf(0.25),
        c.kappa2 * l_p,
    ]
}

/// Contact-model constants mapped onto the abstract beta vector for the
/// damped-response model, where the friction bound is the bare coefficient.
pub fn damped_betas(c: &MuConstants, meas: f64) -> [f64; 7] {
    [c.l3, 0.0, 0.0, c.l1 * meas.sqrt(), c.l2, 0.0, 0.0]
}

/// Numerically estimated trace norms into the weighted l4 contact spaces:
/// the tangential map, the normal map, and the paired map.
#[derive(Clone, Copy, Debug)]
pub struct TraceNorms {
    pub tangential: f64,
    pub normal: f64,
    pub paired: f64,
}

pub fn estimate_trace_norms(prob: &DiscreteProblem) -> Result<TraceNorms> {
    let tangential = weighted_l4_trace_norm(&prob.trace_tau, &prob.v_norm, &prob.contact_weights)?;
    let normal = weighted_l4_trace_norm(&prob.trace_nu, &prob.v_norm, &prob.contact_weights)?;
    let paired =
        weighted_l4_pair_norm(&prob.trace_tau, &prob.trace_nu, &prob.v_norm, &prob.contact_weights)?;
    Ok(TraceNorms { tangential, normal, paired })
}

fn law_provenance(law: &FrictionLaw) -> Provenance {
    match law {
        FrictionLaw::FirstOrder(_) | FrictionLaw::Zero => Provenance::Analytic,
        FrictionLaw::BoundedLipschitz(_) => Provenance::User,
        FrictionLaw::RateCapped(inner, _) => law_provenance(inner),
        // No closed forms; constants() will have errored before this is used.
        FrictionLaw::Regularized(_) | FrictionLaw::Truncated(_) => Provenance::Analytic,
    }
}

fn is_rate_state(law: &FrictionLaw) -> bool {
    match law {
        FrictionLaw::FirstOrder(_) => true,
        FrictionLaw::RateCapped(inner, _) => is_rate_state(inner),
        _ => false,
    }
}

/// The model-specific solvability condition, computed from closed-form law
/// constants and estimated trace norms. For the penalty-pressure model:
///   m_A > sqrt(2) p* (L_1 sqrt(meas) + L_2 |alpha_0|) |K| |M|;
/// for the damped-response model:
///   m_A > m_jn sqrt(meas) |N|^2 + sqrt(2) (L_1 sqrt(meas) + L_2 |alpha_0|) |M|^2.
pub fn check_application_condition(
    model: &ContactModel,
    m_a: f64,
    alpha0_norm: f64,
    meas: f64,
    norms: &TraceNorms,
) -> Result<ConditionReport> {
    if !m_a.is_finite() || !alpha0_norm.is_finite() || alpha0_norm < 0.0 {
        return Err(Error::Invalid("condition inputs must be finite, norms >= 0".into()));
    }
    if !(meas > 0.0) {
        return Err(Error::Invalid("contact measure must be positive".into()));
    }
    match model {
        ContactModel::Frictionless => Ok(ConditionReport::new(
            "frictionless",
            m_a,
            0.0,
            vec![ing("m_a", m_a, Provenance::Estimated)],
        )),
        ContactModel::NormalCompliance { pressure, friction } => {
            let c = friction.constants()?;
            let p = law_provenance(friction);
            let p_star = pressure.p_star();
            let rhs = SQRT_2
                * p_star
                * (c.l1 * meas.sqrt() + c.l2 * alpha0_norm)
                * norms.paired
                * norms.tangential;
            let id = if is_rate_state(friction) { "rsf-compliance" } else { "compliance" };
            Ok(ConditionReport::new(
                id,
                m_a,
                rhs,
                vec![
                    ing("m_a", m_a, Provenance::Estimated),
                    ing("p_star", p_star, Provenance::Analytic),
                    ing("l_1", c.l1, p),
                    ing("l_2", c.l2, p),
                    ing("meas", meas, Provenance::Analytic),
                    ing("alpha0_norm", alpha0_norm, Provenance::Analytic),
                    ing("norm_paired", norms.paired, Provenance::Estimated),
                    ing("norm_tangential", norms.tangential, Provenance::Estimated),
                ],
            ))
        }
        ContactModel::DampedResponse { normal, friction } => {
            let c = friction.constants()?;
            let p = law_provenance(friction);
            let m_jn = normal.pairing_modulus();
            let rhs = m_jn * meas.sqrt() * norms.normal * norms.normal
                + SQRT_2
                    * (c.l1 * meas.sqrt() + c.l2 * alpha0_norm)
                    * norms.tangential
                    * norms.tangential;
            let id = if is_rate_state(friction) { "rsf-damped" } else { "damped" };
            Ok(ConditionReport::new(
                id,
                m_a,
                rhs,
                vec![
                    ing("m_a", m_a, Provenance::Estimated),
                    ing("m_jn", m_jn, Provenance::Analytic),
                    ing("l_1", c.l1, p),
                    ing("l_2", c.l2, p),
                    ing("meas", meas, Provenance::Analytic),
                    ing("alpha0_norm", alpha0_norm, Provenance::Analytic),
                    ing("norm_tangential", norms.tangential, Provenance::Estimated),
                    ing("norm_normal", norms.normal, Provenance::Estimated),
                ],
            ))
        }
    }
}

/// Structural part of the sweep-contraction factor,
///   S = 2 (beta_4 + beta_5 |alpha_0|)^2 |K|^2 |M|^2 / (m_A - m_j |N|^2)^2,
/// infinite when the denominator is not positive. The remaining factor
/// carries unquantified horizon-dependent constants and is only observed
/// through measured increment ratios.
pub fn structural_contraction(consts: &ConstantsRecord, alpha0_norm: f64) -> f64 {
    let denom = consts.m_a - consts.m_j * consts.op_norm_n * consts.op_norm_n;
    if !(denom > 0.0) {
        return f64::INFINITY;
    }
    let num = consts.beta[3] + consts.beta[4] * alpha0_norm;
    2.0 * num * num * consts.op_norm_k * consts.op_norm_k * consts.op_norm_m * consts.op_norm_m
        / (denom * denom)
}

/// Advisory comparison of the computable structural factor with measured
/// sweep behavior.
#[derive(Clone, Debug)]
pub struct BudgetReport {
    pub structural: f64,
    /// Last measured increment ratio, when the run produced any.
    pub asymptotic_ratio: Option<f64>,
    /// asymptotic ratio < 1, when measurable.
    pub contractive: Option<bool>,
}

pub fn contraction_budget(
    consts: &ConstantsRecord,
    alpha0_norm: f64,
    measured_ratios: &[f64],
) -> BudgetReport {
    let structural = structural_contraction(consts, alpha0_norm);
    let asymptotic_ratio = measured_ratios.last().copied();
    BudgetReport { structural, asymptotic_ratio, contractive: asymptotic_ratio.map(|r| r < 1.0) }
}

/// Full constant assembly for a discretized scenario: coercivity of the
/// viscosity operator, trace norms, history bounds, law constants, and the
/// two condition reports (model-specific and abstract-after-mapping).
#[derive(Clone, Debug)]
pub struct ScenarioAnalysis {
    pub record: ConstantsRecord,
    pub trace_norms: TraceNorms,
    pub meas: f64,
    pub alpha0_norm: f64,
    pub application: ConditionReport,
    pub abstract_form: ConditionReport,
    pub structural: f64,
}

/// Operator norm of a map V -> V* against the V inner product: realized as
/// the V -> V norm of Q^{-1} A.
fn dual_operator_norm(a: &DMatrix<f64>, prob: &DiscreteProblem) -> Result<f64> {
    let n = prob.n_dof;
    let mut lifted = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = prob.v_norm.solve(&DVector::from_column_slice(a.column(j).as_slice()));
        lifted.set_column(j, &col);
    }
    estimate_operator_norm(&lifted, &prob.v_norm, &prob.v_norm)
}

pub fn scenario_constants(
    prob: &DiscreteProblem,
    kernel: &HistoryKernel,
    model: &ContactModel,
    state_law: &StateLaw,
    alpha0: &DVector<f64>,
) -> Result<ScenarioAnalysis> {
    if kernel.n_dof() != prob.n_dof {
        return Err(Error::Shape("kernel does not match the problem".into()));
    }
    if alpha0.len() != prob.n_contact() {
        return Err(Error::Shape("initial state dimension".into()));
    }
    let m_a = coercivity_constant(&prob.visc, &prob.v_norm)?;
    if !(m_a > 0.0) {
        return Err(Error::NotSpd(format!("viscosity operator is not coercive: m_a = {m_a}")));
    }
    let trace_norms = estimate_trace_norms(prob)?;
    let meas = prob.contact_measure();
    let alpha0_norm = prob.contact_l2(alpha0);

    let elastic_bound = dual_operator_norm(kernel.elast(), prob)?;
    let relax_bound = if kernel.relax_amplitude() > 0.0 {
        kernel.relax_amplitude() * dual_operator_norm(kernel.relax_shape(), prob)?
    } else {
        0.0
    };
    let c_r = elastic_bound + relax_bound;
    let l_g = state_law.lipschitz_constant().unwrap_or(0.0);

    let (beta, m_j) = match model {
        ContactModel::Frictionless => ([0.0; 7], 0.0),
        ContactModel::NormalCompliance { pressure, friction } => {
            let c = friction.constants()?;
            (compliance_betas(&c, pressure.p_star(), pressure.lipschitz(), meas), 0.0)
        }
        ContactModel::DampedResponse { normal, friction } => {
            let c = friction.constants()?;
            (damped_betas(&c, meas), normal.pairing_modulus() * meas.sqrt())
        }
    };
    // In the damped model the friction bound composes with the tangential
    // trace on both slots, so the paired-map constant degenerates to the
    // tangential norm.
    let op_norm_k = match model {
        ContactModel::DampedResponse { .. } => trace_norms.tangential,
        _ => trace_norms.paired,
    };
    let record = ConstantsRecord {
        m_a,
        m_j,
        m_j_bar: 0.0,
        beta,
        c_r,
        c_s_phi: trace_norms.normal,
        c_s_j: 0.0,
        l_g,
        op_norm_m: trace_norms.tangential,
        op_norm_n: trace_norms.normal,
        op_norm_k,
    };
    record.validate()?;
    let application = check_application_condition(model, m_a, alpha0_norm, meas, &trace_norms)?;
    let abstract_form = check_abstract_condition(&record, alpha0_norm)?;
    let structural = structural_contraction(&record, alpha0_norm);
    Ok(ScenarioAnalysis {
        record,
        trace_norms,
        meas,
        alpha0_norm,
        application,
        abstract_form,
        structural,
    })
}

/// Probe windows for the randomized hypothesis checks. The coefficient
/// hypotheses are local near the state base point by design (the linearized
/// law clamps far from it), so the documented window is slip rates within a
/// decade of the reference rate and states within +-1 of the base state.
#[derive(Clone, Copy, Debug)]
pub struct ProbeWindows {
    pub r_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl ProbeWindows {
    pub fn around(p: &RsfParams) -> Self {
        ProbeWindows { r_hi: 10.0 * p.v_ref, y_lo: p.alpha0 - 1.0, y_hi: p.alpha0 + 1.0 }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteEntry {
    pub name: &'static str,
    /// None when the check does not apply to the supplied laws; `note` says
    /// why.
    pub outcome: Option<ProbeOutcome>,
    pub note: Option<String>,
}

impl SuiteEntry {
    fn ran(name: &'static str, outcome: ProbeOutcome) -> Self {
        SuiteEntry { name, outcome: Some(outcome), note: None }
    }
    fn skipped(name: &'static str, why: String) -> Self {
        SuiteEntry { name, outcome: None, note: Some(why) }
    }
}

pub fn suite_violations(entries: &[SuiteEntry]) -> usize {
    entries.iter().filter_map(|e| e.outcome.as_ref()).map(|o| o.violations).sum()
}

/// Randomized falsification suite over every quantified hypothesis the
/// supplied laws declare constants for, plus measured history bounds.
/// Seed-deterministic; each inequality gets n_samples draws.
pub fn hypothesis_probe_suite(
    prob: &DiscreteProblem,
    kernel: &HistoryKernel,
    model: &ContactModel,
    state_law: &StateLaw,
    windows: &ProbeWindows,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<SuiteEntry>> {
    if !(windows.r_hi > 0.0) || !(windows.y_hi > windows.y_lo) {
        return Err(Error::Invalid("probe windows must be nondegenerate".into()));
    }
    let y = (windows.y_lo, windows.y_hi);
    let mut entries = Vec::new();

    match model.friction() {
        None => {
            entries.push(SuiteEntry::skipped("coefficient difference bound", "no friction law".into()));
            entries.push(SuiteEntry::skipped("coefficient growth bound", "no friction law".into()));
        }
        Some(law) => match law.constants() {
            Ok(c) => {
                entries.push(SuiteEntry::ran(
                    "coefficient difference bound",
                    probe_mu_lipschitz(law, &c, windows.r_hi, y, n_samples, seed)?,
                ));
                entries.push(SuiteEntry::ran(
                    "coefficient growth bound",
                    probe_mu_growth(law, &c, windows.r_hi, y, n_samples, seed.wrapping_add(1))?,
                ));
            }
            Err(e) => {
                let why = e.to_string();
                entries.push(SuiteEntry::skipped("coefficient difference bound", why.clone()));
                entries.push(SuiteEntry::skipped("coefficient growth bound", why));
            }
        },
    }

    match state_law.lipschitz_constant() {
        Ok(l) => entries.push(SuiteEntry::ran(
            "state evolution Lipschitz bound",
            probe_state_lipschitz(state_law, l, windows.r_hi, y, n_samples, seed.wrapping_add(2))?,
        )),
        Err(e) => {
            entries.push(SuiteEntry::skipped("state evolution Lipschitz bound", e.to_string()))
        }
    }

    match model {
        ContactModel::NormalCompliance { pressure, .. } => entries.push(SuiteEntry::ran(
            "contact pressure bounds",
            probe_compliance(pressure, n_samples, seed.wrapping_add(3))?,
        )),
        ContactModel::DampedResponse { normal, .. } => entries.push(SuiteEntry::ran(
            "normal response structure",
            probe_damped_response(normal, windows.r_hi, n_samples, seed.wrapping_add(4))?,
        )),
        ContactModel::Frictionless => {}
    }

    // Measured history constants against their analytic bounds.
    let n_trials = n_samples.clamp(1, 24);
    let (c_r_meas, c_s_meas) =
        history_lipschitz_probe(kernel, &prob.v_norm, &prob.contact_weights, n_trials, seed.wrapping_add(5))?;
    let c_r_bound = {
        let elastic = dual_operator_norm(kernel.elast(), prob)?;
        let relax = if kernel.relax_amplitude() > 0.0 {
            kernel.relax_amplitude() * dual_operator_norm(kernel.relax_shape(), prob)?
        } else {
            0.0
        };
        elastic + relax
    };
    let c_s_bound = weighted_l4_trace_norm(&prob.trace_nu, &prob.v_norm, &prob.contact_weights)?;
    for (name, measured, bound) in [
        ("memory history Lipschitz bound", c_r_meas, c_r_bound),
        ("penetration history Lipschitz bound", c_s_meas, c_s_bound),
    ] {
        let margin = (bound - measured) / bound.max(1.0);
        entries.push(SuiteEntry::ran(
            name,
            ProbeOutcome {
                n_samples: n_trials,
                violations: usize::from(margin < -1e-8),
                worst_margin: margin,
            },
        ));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, LoadSpec, MaterialSpec, MeshSpec, TimeProfile, VoigtTensor};
    use crate::friction::{ComplianceLaw, DampedResponseLaw, DeclaredJnu, DeclaredMu};
    use crate::history::HistoryQuadrature;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn chain_params() -> RsfParams {
        RsfParams {
            direct: 0.011,
            evolution: 0.014,
            mu_ref: 0.01,
            v_ref: 1.0,
            d_c: 1.0,
            alpha0: 0.0,
            alpha0_field: None,
        }
    }

    fn record(m_a: f64, m_j: f64, beta4: f64, beta5: f64, n: f64, k: f64, m: f64) -> ConstantsRecord {
        ConstantsRecord {
            m_a,
            m_j,
            beta: [0.0, 0.0, 0.0, beta4, beta5, 0.0, 0.0],
            op_norm_n: n,
            op_norm_k: k,
            op_norm_m: m,
            ..Default::default()
        }
    }

    #[test]
    fn abstract_condition_fixtures() {
        // Degenerate: no friction coupling at all, the condition is the
        // plain coercivity gap.
        let r = check_abstract_condition(&record(2.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0), 0.0).unwrap();
        assert_eq!(r.margin, 1.0);
        assert!(r.holds);

        // Boundary: margin exactly zero does not hold (strict inequality).
        let r = check_abstract_condition(&record(1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0), 0.0).unwrap();
        assert_eq!(r.margin, 0.0);
        assert!(!r.holds);

        let r = check_abstract_condition(&record(5.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0), 7.3).unwrap();
        assert_relative_eq!(r.margin, 2.585786437626905, max_relative = 1e-12);
        assert!(r.holds);

        // Recomputation is bitwise identical.
        let again = check_abstract_condition(&record(5.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0), 7.3).unwrap();
        assert_eq!(r.margin.to_bits(), again.margin.to_bits());
    }

    #[test]
    fn rate_state_compliance_condition_reference_fixture() {
        // Reference parameters, unit trace norms, unit measure, saturation
        // pressure 1: the right-hand side against an independently computed
        // high-precision value.
        let p = RsfParams::reference();
        let alpha0_norm = p.alpha0.abs();
        let model = ContactModel::NormalCompliance {
            pressure: ComplianceLaw::new(1.0, 1, 1.0).unwrap(),
            friction: FrictionLaw::FirstOrder(p),
        };
        let norms = TraceNorms { tangential: 1.0, normal: 1.0, paired: 1.0 };
        let r = check_application_condition(&model, 1.0, alpha0_norm, 1.0, &norms).unwrap();
        assert_eq!(r.id, "rsf-compliance");
        assert_relative_eq!(r.rhs, 1.0063870331816732e+30, max_relative = 1e-12);
        assert!(!r.holds);
        let r2 = check_application_condition(&model, 2e30, alpha0_norm, 1.0, &norms).unwrap();
        assert!(r2.holds);
    }

    #[test]
    fn chain_compliance_condition_fixture() {
        let model = ContactModel::NormalCompliance {
            pressure: ComplianceLaw::new(1.0, 1, 1.0).unwrap(),
            friction: FrictionLaw::FirstOrder(chain_params()),
        };
        let norms = TraceNorms { tangential: 1.0, normal: 1.0, paired: SQRT_2 };
        let r = check_application_condition(&model, 1.0, 0.0, 1.0, &norms).unwrap();
        assert_relative_eq!(r.rhs, 0.027302715930853132, max_relative = 1e-12);
        assert_relative_eq!(r.margin, 0.9726972840691469, max_relative = 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn frictionless_and_constant_coefficient_conditions_degenerate() {
        let norms = TraceNorms { tangential: 3.0, normal: 2.0, paired: 4.0 };
        let r = check_application_condition(&ContactModel::Frictionless, 0.5, 0.0, 1.0, &norms)
            .unwrap();
        assert_eq!(r.rhs, 0.0);
        assert!(r.holds);

        // Constant coefficient: L1 = L2 = 0, the condition holds for any
        // elliptic material however large the coefficient is.
        let model = ContactModel::NormalCompliance {
            pressure: ComplianceLaw::new(5.0, 2, 2.0).unwrap(),
            friction: FrictionLaw::BoundedLipschitz(DeclaredMu {
                f: Arc::new(|_, _| 0.9),
                constants: MuConstants { kappa1: 0.9, ..Default::default() },
                name: "constant".into(),
            }),
        };
        let r = check_application_condition(&model, 1e-6, 4.0, 2.5, &norms).unwrap();
        assert_eq!(r.id, "compliance");
        assert_eq!(r.rhs, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn application_condition_agrees_with_mapped_abstract_condition() {
        // Dual route: the model-specific inequality must equal the abstract
        // one after the beta mapping.
        let c = MuConstants { l1: 0.3, l2: 0.11, l3: 0.07, kappa1: 1.0, kappa2: 2.0, kappa3: 3.0 };
        let meas = 2.7;
        let alpha0_norm = 1.9;
        let norms = TraceNorms { tangential: 1.3, normal: 0.8, paired: 1.6 };
        let m_a = 10.0;

        let model = ContactModel::NormalCompliance {
            pressure: ComplianceLaw::new(2.0, 2, 1.5).unwrap(),
            friction: FrictionLaw::BoundedLipschitz(DeclaredMu {
                f: Arc::new(|_, _| 0.0),
                constants: c,
                name: "probe".into(),
            }),
        };
        let direct = check_application_condition(&model, m_a, alpha0_norm, meas, &norms).unwrap();
        let pressure = ComplianceLaw::new(2.0, 2, 1.5).unwrap();
        let rec = ConstantsRecord {
            m_a,
            m_j: 0.0,
            beta: compliance_betas(&c, pressure.p_star(), pressure.lipschitz(), meas),
            op_norm_m: norms.tangential,
            op_norm_n: norms.normal,
            op_norm_k: norms.paired,
            ..Default::default()
        };
        let mapped = check_abstract_condition(&rec, alpha0_norm).unwrap();
        assert_relative_eq!(direct.rhs, mapped.rhs, max_relative = 1e-15);

        let model = ContactModel::DampedResponse {
            normal: DampedResponseLaw::Declared(DeclaredJnu {
                value: Arc::new(|r| 0.25 * r * r),
                dirderiv: Arc::new(|r, s| 0.5 * r * s),
                convex: true,
                c0: 0.0,
                c1: 0.5,
                m_jnu: 0.4,
                name: "probe".into(),
            }),
            friction: FrictionLaw::BoundedLipschitz(DeclaredMu {
                f: Arc::new(|_, _| 0.0),
                constants: c,
                name: "probe".into(),
            }),
        };
        let direct = check_application_condition(&model, m_a, alpha0_norm, meas, &norms).unwrap();
        assert_eq!(direct.id, "damped");
        let rec = ConstantsRecord {
            m_a,
            m_j: 0.4 * meas.sqrt(),
            beta: damped_betas(&c, meas),
            op_norm_m: norms.tangential,
            op_norm_n: norms.normal,
            // Both friction slots compose with the tangential trace here.
            op_norm_k: norms.tangential,
            ..Default::default()
        };
        let mapped = check_abstract_condition(&rec, alpha0_norm).unwrap();
        assert_relative_eq!(direct.rhs, mapped.rhs, max_relative = 1e-15);
    }

    #[test]
    fn structural_contraction_fixtures() {
        let r = record(1.0, 0.0, 0.1, 0.0, 1.0, 1.0, 1.0);
        assert_relative_eq!(structural_contraction(&r, 0.0), 0.02, max_relative = 1e-15);

        // Zero couplings: no structural part at all.
        let r = record(3.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        assert_eq!(structural_contraction(&r, 5.0), 0.0);

        // Non-coercive gap: infinite.
        let r = record(1.0, 2.0, 0.1, 0.0, 1.0, 1.0, 1.0);
        assert!(structural_contraction(&r, 0.0).is_infinite());

        let budget = contraction_budget(&record(1.0, 0.0, 0.1, 0.0, 1.0, 1.0, 1.0), 0.0, &[0.5, 0.3]);
        assert_eq!(budget.asymptotic_ratio, Some(0.3));
        assert_eq!(budget.contractive, Some(true));
        let empty = contraction_budget(&record(1.0, 0.0, 0.1, 0.0, 1.0, 1.0, 1.0), 0.0, &[]);
        assert_eq!(empty.asymptotic_ratio, None);
        assert_eq!(empty.contractive, None);
    }

    fn chain_setup() -> (crate::assembly::Assembled, HistoryKernel) {
        let mesh = MeshSpec::chain_1d(1.0, 8);
        let mat = MaterialSpec {
            density: 1.0,
            visc: VoigtTensor::scalar_1d(1.0),
            elast: VoigtTensor::scalar_1d(0.5),
            relax_amplitude: 0.1,
            relax_tau: 0.05,
            consistent_mass: false,
        };
        let load = LoadSpec {
            body: [2.0, 0.0],
            traction: [0.0, 0.0],
            profile: TimeProfile::Constant,
        };
        let asm = assemble(&mesh, &mat, &load, 4, 0.01).unwrap();
        let u0 = DVector::zeros(asm.problem.n_dof);
        let kernel = HistoryKernel::from_assembled(&asm, u0, HistoryQuadrature::LeftRectangle).unwrap();
        (asm, kernel)
    }

    #[test]
    fn scenario_constants_on_the_assembled_chain() {
        let (asm, kernel) = chain_setup();
        let prob = &asm.problem;
        let model = ContactModel::NormalCompliance {
            pressure: ComplianceLaw::new(1.0, 1, 1.0).unwrap(),
            friction: FrictionLaw::FirstOrder(chain_params()),
        };
        let law = StateLaw::FirstOrderAging(chain_params());
        let alpha0 = DVector::zeros(prob.n_contact());
        let an = scenario_constants(prob, &kernel, &model, &law, &alpha0).unwrap();

        // Unit-viscosity chain scaled against its own reference stiffness.
        assert_relative_eq!(an.record.m_a, 1.0, max_relative = 1e-8);
        // End-node trace of a unit-extent chain has unit norm; the paired
        // map doubles the square.
        assert_relative_eq!(an.trace_norms.tangential, 1.0, max_relative = 1e-8);
        assert_relative_eq!(an.trace_norms.normal, 1.0, max_relative = 1e-8);
        assert_relative_eq!(an.trace_norms.paired, SQRT_2, max_relative = 1e-8);
        assert_relative_eq!(an.meas, 1.0, max_relative = 1e-15);
        // Elastic bound 0.5 plus relaxation amplitude 0.1 on the same shape.
        assert_relative_eq!(an.record.c_r, 0.6, max_relative = 1e-8);
        assert_relative_eq!(an.record.c_s_phi, 1.0, max_relative = 1e-8);
        assert_relative_eq!(an.record.l_g, 1.0, max_relative = 1e-15);
        assert_relative_eq!(an.record.beta[3], 0.013651357965426566, max_relative = 1e-10);

        assert!(an.application.holds);
        assert_relative_eq!(an.application.margin, 0.9726972840691469, max_relative = 1e-7);
        // The two condition routes agree on the assembled constants.
        assert_relative_eq!(an.abstract_form.rhs, an.application.rhs, max_relative = 1e-12);
        assert!(an.structural < 1.0);
        assert!(an.structural > 0.0);
    }

    #[test]
    fn hypothesis_suite_runs_clean_on_the_reference_laws() {
        let (asm, kernel) = chain_setup();
        let prob = &asm.problem;
        let p = RsfParams::reference();
        let windows = ProbeWindows::around(&p);
        let model = ContactModel::NormalCompliance {
            pressure: ComplianceLaw::new(1.0, 1, 1.0).unwrap(),
            friction: FrictionLaw::FirstOrder(p.clone()),
        };
        let law = StateLaw::FirstOrderAging(p);
        let entries =
            hypothesis_probe_suite(prob, &kernel, &model, &law, &windows, 20_000, 9).unwrap();
        assert_eq!(suite_violations(&entries), 0, "{entries:#?}");
        let ran = entries.iter().filter(|e| e.outcome.is_some()).count();
        assert_eq!(ran, entries.len(), "{entries:#?}");
        assert!(entries.iter().any(|e| e.name == "contact pressure bounds"));

        // Determinism: same seed, same worst margins bitwise.
        let again =
            hypothesis_probe_suite(prob, &kernel, &model, &law, &windows, 20_000, 9).unwrap();
        for (a, b) in entries.iter().zip(again.iter()) {
            let (oa, ob) = (a.outcome.as_ref().unwrap(), b.outcome.as_ref().unwrap());
            assert_eq!(oa.worst_margin.to_bits(), ob.worst_margin.to_bits());
        }
    }

    #[test]
    fn hypothesis_suite_reports_laws_without_constants_as_skipped() {
        let (asm, kernel) = chain_setup();
        let prob = &asm.problem;
        let p = RsfParams::reference();
        let windows = ProbeWindows::around(&p);
        let model = ContactModel::NormalCompliance {
            pressure: ComplianceLaw::new(1.0, 1, 1.0).unwrap(),
            friction: FrictionLaw::Regularized(p.clone()),
        };
        let law = StateLaw::Aging(p);
        let entries = hypothesis_probe_suite(prob, &kernel, &model, &law, &windows, 100, 9).unwrap();
        let skipped: Vec<&str> =
            entries.iter().filter(|e| e.outcome.is_none()).map(|e| e.name).collect();
        assert!(skipped.contains(&"coefficient difference bound"));
        assert!(skipped.contains(&"state evolution Lipschitz bound"));
        // History and pressure checks still run.
        assert!(suite_violations(&entries) == 0);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let r = record(f64::NAN, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        assert!(check_abstract_condition(&r, 0.0).is_err());
        let r = record(1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        assert!(check_abstract_condition(&r, -1.0).is_err());
        let norms = TraceNorms { tangential: 1.0, normal: 1.0, paired: 1.0 };
        assert!(check_application_condition(&ContactModel::Frictionless, 1.0, 0.0, 0.0, &norms)
            .is_err());
    }
}
