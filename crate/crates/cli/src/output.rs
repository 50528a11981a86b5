//! File writers: trajectory tables, run reports, condition summaries,
//! curve samples, and flow-map tables. All numeric output uses 17
//! significant digits so files round-trip doubles exactly and reruns are
//! byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use stickslip::conditions::{ConditionReport, ScenarioAnalysis};
use stickslip::friction::CurveSample;
use stickslip::problem::TrajectoryState;
use stickslip::scheme::{FlowMapReport, SchemeReport};
use stickslip::step::StepRegime;

pub fn fnum(x: f64) -> String {
    format!("{:.16e}", x)
}

fn join_nums(xs: &[f64]) -> String {
    if xs.is_empty() {
        return "none".into();
    }
    xs.iter().map(|x| fnum(*x)).collect::<Vec<_>>().join(",")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Comma-separated trajectory: time, velocity per dof, displacement per
/// dof, contact state per node; one row per time level including t = 0.
pub fn trajectory_table(traj: &TrajectoryState) -> String {
    let n_dof = traj.w[0].len();
    let n_contact = traj.alpha[0].len();
    let mut s = String::new();
    s.push('t');
    for i in 0..n_dof {
        let _ = write!(s, ",w_{}", i);
    }
    for i in 0..n_dof {
        let _ = write!(s, ",u_{}", i);
    }
    for i in 0..n_contact {
        let _ = write!(s, ",alpha_{}", i);
    }
    s.push('\n');
    for k in 0..=traj.n_steps() {
        s.push_str(&fnum(traj.time(k)));
        for i in 0..n_dof {
            s.push(',');
            s.push_str(&fnum(traj.w[k][i]));
        }
        for i in 0..n_dof {
            s.push(',');
            s.push_str(&fnum(traj.u[k][i]));
        }
        for i in 0..n_contact {
            s.push(',');
            s.push_str(&fnum(traj.alpha[k][i]));
        }
        s.push('\n');
    }
    s
}

fn condition_block(out: &mut String, prefix: &str, r: &ConditionReport) {
    let _ = writeln!(out, "{}_id = {}", prefix, r.id);
    let _ = writeln!(out, "{}_lhs = {}", prefix, fnum(r.lhs));
    let _ = writeln!(out, "{}_rhs = {}", prefix, fnum(r.rhs));
    let _ = writeln!(out, "{}_margin = {}", prefix, fnum(r.margin));
    let _ = writeln!(out, "{}_holds = {}", prefix, r.holds);
}

pub fn condition_lines(a: &ScenarioAnalysis) -> String {
    let mut s = String::new();
    condition_block(&mut s, "condition", &a.application);
    condition_block(&mut s, "condition_abstract", &a.abstract_form);
    let _ = writeln!(s, "structural_factor = {}", fnum(a.structural));
    let _ = writeln!(s, "contact_measure = {}", fnum(a.meas));
    let _ = writeln!(s, "state_norm_initial = {}", fnum(a.alpha0_norm));
    let _ = writeln!(s, "trace_norm_tangential = {}", fnum(a.trace_norms.tangential));
    let _ = writeln!(s, "trace_norm_normal = {}", fnum(a.trace_norms.normal));
    let _ = writeln!(s, "trace_norm_paired = {}", fnum(a.trace_norms.paired));
    for ing in &a.application.ingredients {
        let _ = writeln!(
            s,
            "ingredient_{} = {} ({:?})",
            ing.name.replace(' ', "_"),
            fnum(ing.value),
            ing.provenance
        );
    }
    s
}

/// Key = value report mirroring the scheme result. Deliberately contains
/// no wall-clock data so reruns produce identical bytes.
pub fn report_text(
    report: &SchemeReport,
    analysis: Option<&ScenarioAnalysis>,
    analysis_note: Option<&str>,
    mode: &str,
    seed: u64,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mode = {}", mode);
    let _ = writeln!(s, "seed = {}", seed);
    let _ = writeln!(s, "converged = {}", report.converged);
    let _ = writeln!(s, "sweeps = {}", report.sweeps);
    let _ = writeln!(s, "n_steps = {}", report.trajectory.n_steps());
    let _ = writeln!(s, "dt = {}", fnum(report.trajectory.dt));
    let _ = writeln!(s, "reference_norm = {}", fnum(report.reference_norm));
    let _ = writeln!(s, "max_kkt_residual = {}", fnum(report.max_kkt));
    let _ = writeln!(s, "increments = {}", join_nums(&report.increments));
    let _ = writeln!(s, "increments_velocity = {}", join_nums(&report.increments_w));
    let _ = writeln!(s, "increments_state = {}", join_nums(&report.increments_alpha));
    let _ = writeln!(s, "ratios = {}", join_nums(&report.ratios));

    let (mut stick, mut slip, mut open) = (0usize, 0usize, 0usize);
    for step in &report.regimes {
        for r in step {
            match r {
                StepRegime::Stick => stick += 1,
                StepRegime::Slip => slip += 1,
                StepRegime::Open => open += 1,
            }
        }
    }
    let _ = writeln!(s, "regime_counts = stick:{},slip:{},open:{}", stick, slip, open);

    if let Some(l) = &report.lambda {
        let _ = writeln!(s, "state_map_sweeps = {}", l.sweeps);
        let _ = writeln!(s, "state_map_final_increment = {}", fnum(l.final_increment));
        if let Some(g) = l.gamma {
            let _ = writeln!(s, "state_map_gamma = {}", fnum(g));
        }
        if let Some(b) = l.contraction_bound {
            let _ = writeln!(s, "state_map_contraction_bound = {}", fnum(b));
        }
        if let Some(r) = l.max_weighted_ratio {
            let _ = writeln!(s, "state_map_max_weighted_ratio = {}", fnum(r));
        }
    }

    match analysis {
        Some(a) => s.push_str(&condition_lines(a)),
        None => {
            let _ = writeln!(
                s,
                "conditions = unavailable ({})",
                analysis_note.unwrap_or("not computed")
            );
        }
    }
    s
}

pub fn curve_table(samples: &[CurveSample]) -> String {
    let mut s = String::from("alpha,exact,first_order\n");
    for c in samples {
        let _ = writeln!(s, "{},{},{}", fnum(c.alpha), fnum(c.exact), fnum(c.first_order));
    }
    s
}

pub fn flowmap_table(r: &FlowMapReport) -> String {
    let mut s = String::from("delta,distance,ratio\n");
    for i in 0..r.deltas.len() {
        let _ = writeln!(s, "{},{},{}", fnum(r.deltas[i]), fnum(r.distances[i]), fnum(r.ratios[i]));
    }
    s
}
