//! The five subcommands. Each returns the process exit code: 0 for
//! success, 2 when a scheme did not converge, with hard errors left to
//! the caller as anyhow errors (exit 1).

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};

use stickslip::conditions::{
    hypothesis_probe_suite, scenario_constants, suite_violations, ProbeWindows, ScenarioAnalysis,
};
use stickslip::friction::{g_curves, mu_curves};
use stickslip::scheme::{flow_map_experiment, run_scheme, SchemeReport};
use stickslip::Error as CoreError;

use crate::config::RunConfig;
use crate::output;
use crate::scenario::{self, Scenario};

fn is_convergence_failure(e: &CoreError) -> bool {
    match e {
        CoreError::Convergence { .. } => true,
        CoreError::AtStep { source, .. } => is_convergence_failure(source),
        _ => false,
    }
}

struct RunOutcome {
    report: SchemeReport,
    analysis: Option<ScenarioAnalysis>,
    analysis_note: Option<String>,
    wall_seconds: f64,
}

/// Solve the scenario and gather the condition analysis. A non-converged
/// sweep scheme comes back as a report with `converged = false`; an
/// incremental run that exhausts its inner fixed point surfaces as a
/// convergence error, which the caller maps to exit code 2.
fn solve(sc: &Scenario) -> Result<RunOutcome> {
    let t0 = Instant::now();
    let report = run_scheme(&sc.assembled.problem, &sc.kernel, &sc.model, &sc.scheme, &sc.init)?;
    let wall_seconds = t0.elapsed().as_secs_f64();
    let (analysis, analysis_note) = match scenario_constants(
        &sc.assembled.problem,
        &sc.kernel,
        &sc.model,
        sc.state_law(),
        &sc.init.alpha0,
    ) {
        Ok(a) => (Some(a), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(RunOutcome { report, analysis, analysis_note, wall_seconds })
}

fn write_run_outputs(dir: &Path, cfg: &RunConfig, out: &RunOutcome, mode: &str) -> Result<()> {
    output::write_text(&dir.join("trajectory.csv"), &output::trajectory_table(&out.report.trajectory))?;
    output::write_text(
        &dir.join("report.txt"),
        &output::report_text(
            &out.report,
            out.analysis.as_ref(),
            out.analysis_note.as_deref(),
            mode,
            cfg.output.seed,
        ),
    )?;
    output::write_text(&dir.join("config.txt"), &crate::config::serialize_config(cfg))?;
    Ok(())
}

pub fn cmd_run(cfg: &RunConfig, dir: &Path) -> Result<u8> {
    let sc = scenario::build(cfg)?;
    let mode = cfg.scheme.mode.token();
    match solve(&sc) {
        Ok(out) => {
            write_run_outputs(dir, cfg, &out, mode)?;
            println!(
                "{} scheme: converged = {} after {} sweeps, {} steps, wall {:.3} s",
                mode,
                out.report.converged,
                out.report.sweeps,
                out.report.trajectory.n_steps(),
                out.wall_seconds
            );
            if let Some(a) = &out.analysis {
                println!(
                    "condition `{}`: margin {:.6e} ({})",
                    a.application.id,
                    a.application.margin,
                    if a.application.holds { "holds" } else { "fails; sufficient only" }
                );
            }
            println!("wrote {}", dir.join("trajectory.csv").display());
            println!("wrote {}", dir.join("report.txt").display());
            if !out.report.converged {
                eprintln!(
                    "warning: stopped at the best iterate after {} sweeps without meeting the tolerance",
                    out.report.sweeps
                );
                return Ok(2);
            }
            Ok(0)
        }
        Err(e) => match e.downcast_ref::<CoreError>() {
            Some(core) if is_convergence_failure(core) => {
                eprintln!("non-convergence: {}", e);
                Ok(2)
            }
            _ => Err(e),
        },
    }
}

pub fn cmd_check(cfg: &RunConfig, dir: &Path, samples: usize) -> Result<u8> {
    let sc = scenario::build(cfg)?;
    let analysis = scenario_constants(
        &sc.assembled.problem,
        &sc.kernel,
        &sc.model,
        sc.state_law(),
        &sc.init.alpha0,
    )
    .context("condition analysis")?;

    println!("{:<18} {:>14} {:>14} {:>14}  {}", "condition", "lhs", "rhs", "margin", "holds");
    for r in [&analysis.application, &analysis.abstract_form] {
        println!(
            "{:<18} {:>14.6e} {:>14.6e} {:>14.6e}  {}",
            r.id, r.lhs, r.rhs, r.margin, r.holds
        );
    }
    println!("structural contraction factor = {:.6e}", analysis.structural);

    let mut warned = false;
    if !analysis.application.holds {
        eprintln!(
            "warning: sufficient condition `{}` fails (margin {:.3e}); the solver may still converge",
            analysis.application.id, analysis.application.margin
        );
        warned = true;
    }

    let windows = ProbeWindows::around(&sc.params);
    let suite = hypothesis_probe_suite(
        &sc.assembled.problem,
        &sc.kernel,
        &sc.model,
        sc.state_law(),
        &windows,
        samples,
        sc.seed,
    )?;
    let mut suite_text = String::new();
    for entry in &suite {
        let line = match (&entry.outcome, &entry.note) {
            (Some(o), _) => format!(
                "probe `{}`: {} samples, {} violations, worst margin {:.3e}",
                entry.name, o.n_samples, o.violations, o.worst_margin
            ),
            (None, note) => format!(
                "probe `{}`: skipped ({})",
                entry.name,
                note.as_deref().unwrap_or("not applicable")
            ),
        };
        println!("{}", line);
        suite_text.push_str(&line);
        suite_text.push('\n');
    }
    let violations = suite_violations(&suite);
    if violations > 0 {
        eprintln!("warning: {} hypothesis probe violations; see the table above", violations);
        warned = true;
    }

    let mut file_text = output::condition_lines(&analysis);
    file_text.push_str(&suite_text);
    output::write_text(&dir.join("conditions.txt"), &file_text)?;
    println!("wrote {}", dir.join("conditions.txt").display());
    if !warned {
        println!("all checks passed");
    }
    Ok(0)
}

pub fn cmd_flowmap(cfg: &RunConfig, dir: &Path, deltas: Option<Vec<f64>>) -> Result<u8> {
    let sc = scenario::build(cfg)?;
    let deltas = match deltas {
        Some(d) => d,
        None => {
            let scale = sc.assembled.problem.v_norm_of(&sc.init.w0)?;
            let scale = if scale > 0.0 { scale } else { 1.0 };
            vec![1e-2 * scale, 1e-3 * scale, 1e-4 * scale]
        }
    };
    let fm = flow_map_experiment(
        &sc.assembled.problem,
        &sc.kernel,
        &sc.model,
        &sc.scheme,
        &sc.init,
        &deltas,
        sc.seed,
    )?;
    println!("{:>14} {:>14} {:>14}", "delta", "distance", "distance/delta");
    for i in 0..fm.deltas.len() {
        println!("{:>14.6e} {:>14.6e} {:>14.6e}", fm.deltas[i], fm.distances[i], fm.ratios[i]);
    }
    output::write_text(&dir.join("flowmap.csv"), &output::flowmap_table(&fm))?;
    println!("wrote {}", dir.join("flowmap.csv").display());
    Ok(0)
}

pub fn cmd_rsf_curves(
    cfg: &RunConfig,
    dir: &Path,
    points: usize,
    rate: Option<f64>,
    width: f64,
) -> Result<u8> {
    let sc = scenario::build(cfg)?;
    let params = &sc.params;
    let r = rate.unwrap_or(params.v_ref);
    if !(width > 0.0) {
        return Err(anyhow!("--width must be positive"));
    }
    let lo = params.alpha0 - width;
    let hi = params.alpha0 + width;
    let mu = mu_curves(params, lo, hi, points, r)?;
    let g = g_curves(params, lo, hi, points, r)?;
    output::write_text(&dir.join("mu_curves.csv"), &output::curve_table(&mu))?;
    output::write_text(&dir.join("state_curves.csv"), &output::curve_table(&g))?;
    let center = &mu[(points - 1) / 2];
    println!(
        "{} points over [{:.6e}, {:.6e}] at rate {:.3e}; at the base state mu = {:.9e} (linearization gap {:.3e})",
        points,
        lo,
        hi,
        r,
        center.exact,
        (center.exact - center.first_order).abs()
    );
    println!("wrote {}", dir.join("mu_curves.csv").display());
    println!("wrote {}", dir.join("state_curves.csv").display());
    Ok(0)
}

pub fn cmd_sweep(cfg: &RunConfig, dir: &Path, dt_list: Option<Vec<f64>>) -> Result<u8> {
    let dts = match dt_list {
        Some(d) if !d.is_empty() => d,
        _ => vec![cfg.scheme.dt, cfg.scheme.dt / 2.0, cfg.scheme.dt / 4.0],
    };
    let mode = cfg.scheme.mode.token();

    struct SweepRun {
        dt: f64,
        dir: PathBuf,
        outcome: Result<(bool, usize)>,
    }

    let runs: Vec<SweepRun> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (i, &dt) in dts.iter().enumerate() {
            let mut run_cfg = cfg.clone();
            run_cfg.scheme.dt = dt;
            let run_dir = dir.join(format!("run_{:02}", i));
            handles.push((dt, run_dir.clone(), scope.spawn(move || -> Result<(bool, usize)> {
                let sc = scenario::build(&run_cfg)?;
                let out = solve(&sc)?;
                write_run_outputs(&run_dir, &run_cfg, &out, run_cfg.scheme.mode.token())?;
                Ok((out.report.converged, out.report.sweeps))
            })));
        }
        handles
            .into_iter()
            .map(|(dt, run_dir, h)| SweepRun {
                dt,
                dir: run_dir,
                outcome: h.join().unwrap_or_else(|_| Err(anyhow!("worker thread panicked"))),
            })
            .collect()
    });

    let mut summary = format!("mode = {}\nruns = {}\n", mode, runs.len());
    let mut code = 0u8;
    let mut first_err: Option<anyhow::Error> = None;
    for (i, run) in runs.into_iter().enumerate() {
        match run.outcome {
            Ok((converged, sweeps)) => {
                println!(
                    "run {:02}: dt {:.6e} -> converged = {}, sweeps = {}, dir {}",
                    i, run.dt, converged, sweeps, run.dir.display()
                );
                summary.push_str(&format!(
                    "run_{:02}_dt = {}\nrun_{:02}_converged = {}\nrun_{:02}_sweeps = {}\n",
                    i,
                    output::fnum(run.dt),
                    i,
                    converged,
                    i,
                    sweeps
                ));
                if !converged {
                    code = 2;
                }
            }
            Err(e) => {
                eprintln!("run {:02}: dt {:.6e} -> error: {:#}", i, run.dt, e);
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e.context("sweep run failed"));
    }
    output::write_text(&dir.join("sweep.txt"), &summary)?;
    println!("wrote {}", dir.join("sweep.txt").display());
    Ok(code)
}
