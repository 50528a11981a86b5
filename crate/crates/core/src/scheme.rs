//! Time-marching schemes built on the per-step solver. The decoupled sweep
//! scheme solves every timestep against history quantities frozen from the
//! previous outer iterate, then integrates the interfacial state along the
//! new velocities, repeating until the combined increment stalls. The
//! incremental scheme marches once through time with a small per-step fixed
//! point on the slip rate and state, and agrees with the sweep scheme's
//! fixed point. Auditing utilities certify a finished trajectory step by
//! step.

use nalgebra::{DMatrix, DVector};

use crate::friction::StateLaw;
use crate::history::HistoryKernel;
use crate::problem::{DiscreteProblem, TrajectoryState};
use crate::rng::{seeded, uniform_vector};
use crate::step::{
    build_step_program, verify_vi, ContactModel, FrozenStepData, SolveOpts, StepRegime, StepSolver,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeMode {
    /// Whole-horizon sweeps with lagged history (the decoupled scheme).
    Picard,
    /// Single pass in time with a per-step inner fixed point.
    Incremental,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaStencil {
    /// Explicit midpoint, second order in dt.
    Midpoint,
    /// Fixed point of the left-rectangle integral map; equals the explicit
    /// Euler recurrence and is first order in dt.
    PicardLambda,
}

#[derive(Clone, Debug)]
pub struct SchemeConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub outer_tol: f64,
    pub max_outer: usize,
    pub mode: SchemeMode,
    pub stencil: AlphaStencil,
    pub state_law: StateLaw,
    pub solve_opts: SolveOpts,
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Invalid("scheme dt must be positive".into()));
        }
        if self.n_steps == 0 {
            return Err(Error::Invalid("scheme needs at least one step".into()));
        }
        if !(self.outer_tol > 0.0) {
            return Err(Error::Invalid("outer tolerance must be positive".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::Invalid("need at least one outer sweep".into()));
        }
        self.state_law.validate()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps as f64
    }
}

#[derive(Clone, Debug)]
pub struct InitialState {
    pub w0: DVector<f64>,
    pub u0: DVector<f64>,
    pub alpha0: DVector<f64>,
}

impl InitialState {
    pub fn validate(&self, prob: &DiscreteProblem) -> Result<()> {
        if self.w0.len() != prob.n_dof || self.u0.len() != prob.n_dof {
            return Err(Error::Shape("initial velocity/displacement dimension".into()));
        }
        if self.alpha0.len() != prob.n_contact() {
            return Err(Error::Shape("initial state dimension".into()));
        }
        for v in [&self.w0, &self.u0, &self.alpha0] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid("initial data must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Convergence record of the integral-map state integration.
#[derive(Clone, Debug)]
pub struct LambdaReport {
    pub sweeps: usize,
    pub final_increment: f64,
    /// Weight used in the exponentially weighted sup norm, when the law has
    /// a global Lipschitz constant: gamma = L + 1/dt.
    pub gamma: Option<f64>,
    /// Analytic contraction factor in that norm.
    pub contraction_bound: Option<f64>,
    /// Largest measured increment ratio in the weighted norm.
    pub max_weighted_ratio: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SchemeReport {
    pub converged: bool,
    /// Outer sweeps performed (sweep scheme) or the maximum inner fixed
    /// point length over steps (incremental scheme).
    pub sweeps: usize,
    /// Combined increment e_w + e_alpha per sweep (sweep scheme only).
    pub increments: Vec<f64>,
    pub increments_w: Vec<f64>,
    pub increments_alpha: Vec<f64>,
    /// Increment ratios where the previous increment exceeded 1e-14.
    pub ratios: Vec<f64>,
    /// First-sweep velocity size, the scale in the stopping rule.
    pub reference_norm: f64,
    pub max_kkt: f64,
    /// Contact regimes per step (index 0 = first step).
    pub regimes: Vec<Vec<StepRegime>>,
    pub trajectory: TrajectoryState,
    /// Iterate whose history data the final velocities were solved against;
    /// equals `trajectory` for the incremental scheme.
    pub source: TrajectoryState,
    pub lambda: Option<LambdaReport>,
}

pub fn run_scheme(
    prob: &DiscreteProblem,
    kernel: &HistoryKernel,
    model: &ContactModel,
    cfg: &SchemeConfig,
    init: &InitialState,
) -> Result<SchemeReport> {
    match cfg.mode {
        SchemeMode::Picard => run_picard(prob, kernel, model, cfg, init),
        SchemeMode::Incremental => run_incremental(prob, kernel, model, cfg, init),
    }
}

fn check_inputs(
    prob: &DiscreteProblem,
    kernel: &HistoryKernel,
    cfg: &SchemeConfig,
    init: &InitialState,
) -> Result<()> {
    cfg.validate()?;
    init.validate(prob)?;
    if kernel.n_dof() != prob.n_dof || kernel.n_contact() != prob.n_contact() {
        return Err(Error::Shape("history kernel does not match the problem".into()));
    }
    if (kernel.u0() - &init.u0).amax() != 0.0 {
        return Err(Error::Invalid(
            "history kernel was built with a different initial displacement".into(),
        ));
    }
    if prob.load.len() < cfg.n_steps + 1 {
        return Err(Error::Shape(format!(
            "problem provides {} load samples, scheme needs {}",
            prob.load.len(),
            cfg.n_steps + 1
        )));
    }
    Ok(())
}

/// Decoupled sweep scheme. Each sweep solves all steps against the previous
/// iterate's state, memory, penetration, and slip rates (the inertial chain
/// uses the current sweep), then integrates the state along the new
/// velocities. Stops when e_w + e_alpha < tol (1 + |w^1|); a stalled run
/// returns its best iterate with converged = false.
pub fn run_picard(
    prob: &DiscreteProblem,
    kernel: &HistoryKernel,
    model: &ContactModel,
    cfg: &SchemeConfig,
    init: &InitialState,
) -> Result<SchemeReport> {
    check_inputs(prob, kernel, cfg, init)?;
    let n = cfg.n_steps;
    let dt = cfg.dt;
    let mut kernel = kernel.clone();
    kernel.sample_lags(dt, n);
    // History is fully lagged here, so the quadratic part carries no fold.
    let solver = StepSolver::new(prob, model, dt, None, cfg.solve_opts)?;

    let mut prev = TrajectoryState::constant_initial(&init.w0, &init.u0, &init.alpha0, dt, n);
    let mut increments = Vec::new();
    let mut increments_w = Vec::new();
    let mut increments_alpha = Vec::new();
    let mut ratios = Vec::new();
    let mut reference_norm = 0.0;
    let mut best: Option<(TrajectoryState, TrajectoryState, f64)> = None;
    let mut converged = false;
    let mut max_kkt: f64 = 0.0;
    let mut regimes: Vec<Vec<StepRegime>> = Vec::new();
    let mut lambda = None;
    let mut sweeps = 0;

    for sweep in 1..=cfg.max_outer {
        sweeps = sweep;
        let mut cur = TrajectoryState {
            dt,
            w: Vec::with_capacity(n + 1),
            u: vec![init.u0.clone(); n + 1],
            alpha: Vec::new(),
            };
        cur.w.push(init.w0.clone());
        let mut sweep_regimes = Vec::with_capacity(n);
        for k in 1..=n {
            let data = FrozenStepData {
                alpha: prev.alpha[k].clone(),
                xi: kernel.eval_memory(&prev, k).map_err(|e| e.at_step(k))?,
                eta: kernel.eval_normal_displacement(&prev, k).map_err(|e| e.at_step(k))?,
                g_slip: prob.slip_rates(&prev.w[k]),
                chi: kernel.eval_extra(&prev, k).map_err(|e| e.at_step(k))?,
                load: prob.load[k].clone(),
            };
            let w_chain = cur.w[k - 1].clone();
            let sol = solver.solve(&data, &w_chain).map_err(|e| e.at_step(k))?;
            max_kkt = max_kkt.max(sol.kkt_residual);
            sweep_regimes.push(sol.regimes);
            cur.w.push(sol.w);
        }
        cur.rebuild_displacement();

        let slip: Vec<DVector<f64>> = (0..=n).map(|k| prob.slip_rates(&cur.w[k])).collect();
        let (alpha, lam) =
            integrate_alpha(&cfg.state_law, &slip, &init.alpha0, dt, cfg.stencil)?;
        cur.alpha = alpha;
        lambda = lam;

        let e_w = l2v_distance(prob, &cur, &prev, n)?;
        let e_a = alpha_max_distance(prob, &cur, &prev, n);
        let inc = e_w + e_a;
        if let Some(last) = increments.last() {
            if *last > 1e-14 {
                ratios.push(inc / last);
            }
        }
        increments.push(inc);
        increments_w.push(e_w);
        increments_alpha.push(e_a);
        if sweep == 1 {
            reference_norm = discrete_l2v(prob, &cur)?;
        }
        if best.as_ref().map_or(true, |(_, _, b)| inc < *b) {
            best = Some((cur.clone(), prev.clone(), inc));
        }
        regimes = sweep_regimes;
        if inc < cfg.outer_tol * (1.0 + reference_norm) {
            converged = true;
            best = Some((cur, prev, inc));
            break;
        }
        prev = cur;
    }

    let (trajectory, source, _) = best.expect("at least one sweep ran");
    Ok(SchemeReport {
        converged,
        sweeps,
        increments,
        increments_w,
        increments_alpha,
        ratios,
        reference_norm,
        max_kkt,
        regimes,
        trajectory,
        source,
        lambda,
    })
}

/// Incremental scheme: one pass over the steps; at each step a fixed point
/// couples the slip-rate argument of the friction bound and the state value
/// entering it, so the result coincides with the sweep scheme's fixed point.
pub fn run_incremental(
    prob: &DiscreteProblem,
    kernel: &HistoryKernel,
    model: &ContactModel,
    cfg: &SchemeConfig,
    init: &InitialState,
) -> Result<SchemeReport> {
    check_inputs(prob, kernel, cfg, init)?;
    let n = cfg.n_steps;
    let dt = cfg.dt;
    let mut kernel = kernel.clone();
    kernel.sample_lags(dt, n);
    // Any implicit quadrature sample of the memory term folds into the
    // quadratic part; the frozen covector carries only the strict past.
    let fold = kernel.current_matrix(dt);
    let solver = StepSolver::new(prob, model, dt, fold.as_ref(), cfg.solve_opts)?;

    let mut traj = TrajectoryState {
        dt,
        w: vec![init.w0.clone()],
        u: vec![init.u0.clone(); n + 1],
        alpha: vec![init.alpha0.clone()],
    };
    // Pad so the kernel accepts prefix evaluations; entries at >= k are
    // placeholders never read by causal operators.
    traj.w.resize(n + 1, DVector::zeros(prob.n_dof));
    traj.alpha.resize(n + 1, DVector::zeros(prob.n_contact()));

    let mut max_kkt: f64 = 0.0;
    let mut max_inner = 0usize;
    let mut regimes = Vec::with_capacity(n);

    const INNER_MAX: usize = 50;
    for k in 1..=n {
        traj.u[k] = &traj.u[k - 1] + &traj.w[k - 1] * dt;
        let xi = kernel.eval_past(&traj, k).map_err(|e| e.at_step(k))?;
        let eta = kernel.eval_normal_displacement(&traj, k).map_err(|e| e.at_step(k))?;
        let chi = kernel.eval_extra(&traj, k).map_err(|e| e.at_step(k))?;
        let r_prev = prob.slip_rates(&traj.w[k - 1]);

        let mut g = r_prev.clone();
        let mut atil = traj.alpha[k - 1].clone();
        let mut solved = None;
        let mut inner_used = 0;
        for m in 1..=INNER_MAX {
            inner_used = m;
            let data = FrozenStepData {
                alpha: atil.clone(),
                xi: xi.clone(),
                eta: eta.clone(),
                g_slip: g.clone(),
                chi: chi.clone(),
                load: prob.load[k].clone(),
            };
            let sol = solver.solve(&data, &traj.w[k - 1]).map_err(|e| e.at_step(k))?;
            let g_new = prob.slip_rates(&sol.w);
            let a_new = alpha_step(&cfg.state_law, &traj.alpha[k - 1], &r_prev, &g_new, dt, cfg.stencil)
                .map_err(|e| e.at_step(k))?;
            let delta = (&g_new - &g).amax() + (&a_new - &atil).amax();
            g = g_new;
            atil = a_new;
            let done = delta <= 1e-13 * (1.0 + g.amax());
            solved = Some(sol);
            if done {
                break;
            }
            if m == INNER_MAX {
                return Err(Error::Convergence {
                    what: "per-step slip/state fixed point".into(),
                    iterations: INNER_MAX,
                    residual: delta,
                }
                .at_step(k));
            }
        }
        let sol = solved.expect("inner loop ran");
        max_inner = max_inner.max(inner_used);
        max_kkt = max_kkt.max(sol.kkt_residual);
        regimes.push(sol.regimes.clone());
        traj.w[k] = sol.w;
        traj.alpha[k] = atil;
    }

    let reference_norm = discrete_l2v(prob, &traj)?;
    Ok(SchemeReport {
        converged: true,
        sweeps: max_inner,
        increments: Vec::new(),
        increments_w: Vec::new(),
        increments_alpha: Vec::new(),
        ratios: Vec::new(),
        reference_norm,
        max_kkt,
        regimes,
        trajectory: traj.clone(),
        source: traj,
        lambda: None,
    })
}

/// One state update over [t_{k-1}, t_k] given slip-rate magnitudes at both
/// ends, applied per contact node.
pub fn alpha_step(
    law: &StateLaw,
    alpha_prev: &DVector<f64>,
    r_prev: &DVector<f64>,
    r_cur: &DVector<f64>,
    dt: f64,
    stencil: AlphaStencil,
) -> Result<DVector<f64>> {
    let nc = alpha_prev.len();
    if r_prev.len() != nc || r_cur.len() != nc {
        return Err(Error::Shape("state update slip-rate dimensions".into()));
    }
    let mut out = DVector::zeros(nc);
    for i in 0..nc {
        out[i] = match stencil {
            AlphaStencil::Midpoint => {
                let k1 = law.g_at(i, alpha_prev[i], r_prev[i])?;
                let a_half = alpha_prev[i] + 0.5 * dt * k1;
                let r_half = 0.5 * (r_prev[i] + r_cur[i]);
                alpha_prev[i] + dt * law.g_at(i, a_half, r_half)?
            }
            AlphaStencil::PicardLambda => {
                alpha_prev[i] + dt * law.g_at(i, alpha_prev[i], r_prev[i])?
            }
        };
        if !out[i].is_finite() {
            return Err(Error::Domain(format!("state update diverged at node {i}")));
        }
    }
    Ok(out)
}

/// Integrate the interfacial state along a slip-rate history. The midpoint
/// stencil marches the two-stage update; the integral-map stencil iterates
/// the left-rectangle Volterra map to its fixed point (reached exactly after
/// at most n_steps + 1 sweeps) and reports the observed contraction in the
/// exponentially weighted sup norm.
pub fn integrate_alpha(
    law: &StateLaw,
    rates: &[DVector<f64>],
    alpha0: &DVector<f64>,
    dt: f64,
    stencil: AlphaStencil,
) -> Result<(Vec<DVector<f64>>, Option<LambdaReport>)> {
    if rates.is_empty() {
        return Err(Error::Invalid("state integration needs rate samples".into()));
    }
    let n = rates.len() - 1;
    for r in rates {
        if r.len() != alpha0.len() {
            return Err(Error::Shape("rate sample dimension".into()));
        }
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Invalid("state integration dt must be positive".into()));
    }
    match stencil {
        AlphaStencil::Midpoint => {
            let mut alpha = Vec::with_capacity(n + 1);
            alpha.push(alpha0.clone());
            for k in 1..=n {
                let next = alpha_step(law, &alpha[k - 1], &rates[k - 1], &rates[k], dt, stencil)
                    .map_err(|e| e.at_step(k))?;
                alpha.push(next);
            }
            Ok((alpha, None))
        }
        AlphaStencil::PicardLambda => {
            let gamma_info = law.lipschitz_constant().ok().map(|l| {
                let gamma = l + 1.0 / dt;
                let x = (-gamma * dt).exp();
                (gamma, l * dt * x / (1.0 - x))
            });
            let mut cur = vec![alpha0.clone(); n + 1];
            let mut sweeps = 0usize;
            let mut prev_weighted: Option<f64> = None;
            let mut max_ratio: Option<f64> = None;
            const TOL: f64 = 1e-12;
            let final_increment = loop {
                sweeps += 1;
                let mut next = Vec::with_capacity(n + 1);
                next.push(alpha0.clone());
                let mut acc = alpha0.clone();
                for k in 1..=n {
                    for i in 0..alpha0.len() {
                        acc[i] += dt * law.g_at(i, cur[k - 1][i], rates[k - 1][i])
                            .map_err(|e| e.at_step(k))?;
                    }
                    next.push(acc.clone());
                }
                let mut sup = 0.0f64;
                let mut weighted = 0.0f64;
                for k in 0..=n {
                    let d = (&next[k] - &cur[k]).amax();
                    sup = sup.max(d);
                    if let Some((gamma, _)) = gamma_info {
                        weighted = weighted.max((-gamma * dt * k as f64).exp() * d);
                    }
                }
                if let (Some(pw), Some(_)) = (prev_weighted, gamma_info) {
                    if pw > 1e-300 {
                        let r = weighted / pw;
                        max_ratio = Some(max_ratio.map_or(r, |m: f64| m.max(r)));
                        // The weighted norm is the certified contraction
                        // metric; growth there means the horizon is too long
                        // for this state law.
                        if r > 1.0 && sup > TOL {
                            return Err(Error::Convergence {
                                what: "state integral map is not contracting; \
                                       reduce the horizon or the step size"
                                    .into(),
                                iterations: sweeps,
                                residual: sup,
                            });
                        }
                    }
                }
                prev_weighted = Some(weighted);
                cur = next;
                if sup <= TOL || sweeps > n + 1 {
                    break sup;
                }
            };
            let report = LambdaReport {
                sweeps,
                final_increment,
                gamma: gamma_info.map(|(g, _)| g),
                contraction_bound: gamma_info.map(|(_, b)| b),
                max_weighted_ratio: max_ratio,
            };
            Ok((cur, Some(report)))
        }
    }
}

/// Discrete L2-in-time V-norm of the velocity samples (k >= 1).
pub fn discrete_l2v(prob: &DiscreteProblem, traj: &TrajectoryState) -> Result<f64> {
    let mut s = 0.0;
    for k in 1..=traj.n_steps() {
        let v = prob.v_norm_of(&traj.w[k])?;
        s += v * v;
    }
    Ok((traj.dt * s).sqrt())
}

/// Discrete L2-in-time V-distance between velocity histories up to step
/// `upto` inclusive.
pub fn l2v_distance(
    prob: &DiscreteProblem,
    a: &TrajectoryState,
    b: &TrajectoryState,
    upto: usize,
) -> Result<f64> {
    if a.n_steps() < upto || b.n_steps() < upto || a.dt != b.dt {
        return Err(Error::Shape("trajectories not comparable".into()));
    }
    let mut s = 0.0;
    for k in 1..=upto {
        let v = prob.v_norm_of(&(&a.w[k] - &b.w[k]))?;
        s += v * v;
    }
    Ok((a.dt * s).sqrt())
}

/// Max over steps (up to `upto`) of the weighted l2 distance between state
/// histories.
pub fn alpha_max_distance(
    prob: &DiscreteProblem,
    a: &TrajectoryState,
    b: &TrajectoryState,
    upto: usize,
) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..=upto.min(a.n_steps()).min(b.n_steps()) {
        worst = worst.max(prob.contact_l2(&(&a.alpha[k] - &b.alpha[k])));
    }
    worst
}

/// Max over steps of the defect in the discrete kinetic energy identity
///   1/2 |w_k|_H^2 - 1/2 |w_0|_H^2
///     = sum_{j<=k} <mass (w_j - w_{j-1}), w_j> - 1/2 sum_{j<=k} |w_j - w_{j-1}|_H^2,
/// which is exact algebra whenever the H form is the mass operator.
pub fn energy_identity_max_residual(
    prob: &DiscreteProblem,
    traj: &TrajectoryState,
) -> Result<f64> {
    let h0 = prob.h_norm_of(&traj.w[0])?;
    let mut pair_sum = 0.0;
    let mut jump_sum = 0.0;
    let mut worst = 0.0f64;
    for k in 1..=traj.n_steps() {
        let dw = &traj.w[k] - &traj.w[k - 1];
        pair_sum += (&prob.mass * &dw).dot(&traj.w[k]);
        let j = prob.h_norm_of(&dw)?;
        jump_sum += j * j;
        let hk = prob.h_norm_of(&traj.w[k])?;
        let lhs = 0.5 * hk * hk - 0.5 * h0 * h0;
        let rhs = pair_sum - 0.5 * jump_sum;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Step-by-step certification of a finished run: the variational inequality
/// gap, stick-force feasibility, the energy identity, the displacement
/// prefix rule, and the state recurrence. `source` is the iterate whose
/// history data the velocities were solved against.
#[derive(Clone, Debug)]
pub struct AuditReport {
    /// min over steps and probe directions of the VI gap (>= -eps for a
    /// solved run).
    pub worst_vi_gap: f64,
    /// max over stick terms of |force| - bound (<= 0 when feasible).
    pub worst_stick_excess: f64,
    pub energy_residual: f64,
    pub displacement_residual: f64,
    /// max deviation of the stored state history from the one-step
    /// recurrence along the stored slip rates.
    pub state_residual: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn audit_trajectory(
    prob: &DiscreteProblem,
    kernel: &HistoryKernel,
    model: &ContactModel,
    cfg: &SchemeConfig,
    source: &TrajectoryState,
    traj: &TrajectoryState,
    n_probes: usize,
    seed: u64,
) -> Result<AuditReport> {
    let n = traj.n_steps();
    if source.n_steps() != n {
        return Err(Error::Shape("source and trajectory lengths differ".into()));
    }
    let mut kernel = kernel.clone();
    kernel.sample_lags(traj.dt, n);
    let mut worst_gap = f64::INFINITY;
    let mut worst_stick = f64::NEG_INFINITY;
    let mut state_residual = 0.0f64;
    for k in 1..=n {
        let data = FrozenStepData {
            alpha: source.alpha[k].clone(),
            xi: kernel.eval_memory(source, k).map_err(|e| e.at_step(k))?,
            eta: kernel.eval_normal_displacement(source, k).map_err(|e| e.at_step(k))?,
            g_slip: prob.slip_rates(&source.w[k]),
            chi: kernel.eval_extra(source, k).map_err(|e| e.at_step(k))?,
            load: prob.load[k].clone(),
        };
        let gap = verify_vi(
            prob,
            model,
            traj.dt,
            None,
            &data,
            &traj.w[k - 1],
            &traj.w[k],
            n_probes,
            seed.wrapping_add(k as u64),
        )
        .map_err(|e| e.at_step(k))?;
        worst_gap = worst_gap.min(gap);

        // Stick forces: with slipping terms contributing their boundary
        // subgradient, the remaining residual on a sticking trace must stay
        // within the friction bound.
        let (q, b, terms) =
            build_step_program(prob, model, traj.dt, None, &data, &traj.w[k - 1])
                .map_err(|e| e.at_step(k))?;
        let mut resid = &q * &traj.w[k] - &b;
        let scale = b.amax().max(1.0);
        let mut stick_idx = Vec::new();
        for (i, t) in terms.iter().enumerate() {
            let z = t.row.dot(&traj.w[k]);
            if z.abs() > 1e-9 * (1.0 + traj.w[k].amax()) {
                resid.axpy(t.bound * z.signum(), &t.row, 1.0);
            } else {
                stick_idx.push(i);
            }
        }
        if !stick_idx.is_empty() {
            // Least-squares multipliers over the sticking rows.
            let m = stick_idx.len();
            let rows: Vec<&DVector<f64>> = stick_idx.iter().map(|&i| &terms[i].row).collect();
            let mut gram = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    gram[(i, j)] = rows[i].dot(rows[j]);
                }
            }
            let rhs = DVector::from_fn(m, |i, _| -rows[i].dot(&resid));
            let lam = gram
                .svd(true, true)
                .solve(&rhs, 1e-13 * scale)
                .map_err(|e| Error::Invalid(format!("stick force extraction failed: {e}")))?;
            for (j, &i) in stick_idx.iter().enumerate() {
                worst_stick = worst_stick.max(lam[j].abs() - terms[i].bound);
            }
        }

        // State recurrence consistency along the stored slip rates.
        let expect = alpha_step(
            &cfg.state_law,
            &traj.alpha[k - 1],
            &prob.slip_rates(&traj.w[k - 1]),
            &prob.slip_rates(&traj.w[k]),
            traj.dt,
            cfg.stencil,
        )
        .map_err(|e| e.at_step(k))?;
        state_residual = state_residual.max((&traj.alpha[k] - &expect).amax());
    }
    if worst_stick == f64::NEG_INFINITY {
        worst_stick = 0.0;
    }
    Ok(AuditReport {
        worst_vi_gap: worst_gap,
        worst_stick_excess: worst_stick,
        energy_residual: energy_identity_max_residual(prob, traj)?,
        displacement_residual: traj.displacement_residual(),
        state_residual,
    })
}

/// Perturbation response of the scheme on the first half of the horizon:
/// the initial velocity and state are moved by delta/2 along fixed random
/// unit directions, and the trajectory distance d(delta) is recorded per
/// delta. Errors if the distances fail to shrink monotonically with delta
/// (5% slack).
#[derive(Clone, Debug)]
pub struct FlowMapReport {
    pub deltas: Vec<f64>,
    pub distances: Vec<f64>,
    /// distance / delta, constant for a linear flow.
    pub ratios: Vec<f64>,
}

pub fn flow_map_experiment(
    prob: &DiscreteProblem,
    kernel: &HistoryKernel,
    model: &ContactModel,
    cfg: &SchemeConfig,
    init: &InitialState,
    deltas: &[f64],
    seed: u64,
) -> Result<FlowMapReport> {
    if deltas.len() < 3
        || deltas.windows(2).any(|p| p[1] >= p[0])
        || deltas.iter().any(|d| !(*d >= 0.0) || !d.is_finite())
    {
        return Err(Error::Invalid(
            "need at least three strictly decreasing nonnegative deltas".into(),
        ));
    }
    if cfg.n_steps < 2 {
        return Err(Error::Invalid("flow map needs at least two steps".into()));
    }
    let base = run_scheme(prob, kernel, model, cfg, init)?;
    if !base.converged {
        return Err(Error::Convergence {
            what: "flow map base run".into(),
            iterations: base.sweeps,
            residual: *base.increments.last().unwrap_or(&f64::NAN),
        });
    }
    let half = cfg.n_steps / 2;
    let mut rng = seeded(seed);
    let raw_w = uniform_vector(&mut rng, prob.n_dof);
    let dir_w = &raw_w / prob.v_norm_of(&raw_w)?;
    let raw_a = uniform_vector(&mut rng, prob.n_contact());
    let na = prob.contact_l2(&raw_a);
    let dir_a = if na > 0.0 { raw_a / na } else { raw_a };

    let mut distances = Vec::with_capacity(deltas.len());
    let mut ratios = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let perturbed = InitialState {
            w0: &init.w0 + &dir_w * (delta / 2.0),
            u0: init.u0.clone(),
            alpha0: &init.alpha0 + &dir_a * (delta / 2.0),
        };
        let run = run_scheme(prob, kernel, model, cfg, &perturbed)?;
        if !run.converged {
            return Err(Error::Convergence {
                what: format!("flow map run at delta {delta}"),
                iterations: run.sweeps,
                residual: *run.increments.last().unwrap_or(&f64::NAN),
            });
        }
        let d = l2v_distance(prob, &run.trajectory, &base.trajectory, half)?
            + alpha_max_distance(prob, &run.trajectory, &base.trajectory, half);
        distances.push(d);
        ratios.push(if delta > 0.0 { d / delta } else { 0.0 });
    }
    for i in 1..distances.len() {
        if distances[i] > distances[i - 1] * 1.05 {
            return Err(Error::Invalid(format!(
                "flow map distances not monotone: d({}) = {} vs d({}) = {}",
                deltas[i],
                distances[i],
                deltas[i - 1],
                distances[i - 1]
            )));
        }
    }
    Ok(FlowMapReport { deltas: deltas.to_vec(), distances, ratios })
}

/// Halve the horizon until the third measured increment ratio drops below
/// the target (default use: 0.9). Returns the accepted step count and the
/// ratio observed there.
pub fn suggest_horizon(
    prob: &DiscreteProblem,
    kernel: &HistoryKernel,
    model: &ContactModel,
    cfg: &SchemeConfig,
    init: &InitialState,
    target: f64,
    max_halvings: usize,
) -> Result<(usize, f64)> {
    if !(target > 0.0) {
        return Err(Error::Invalid("target ratio must be positive".into()));
    }
    let mut n = cfg.n_steps;
    for _ in 0..=max_halvings {
        let mut trial = cfg.clone();
        trial.n_steps = n;
        let report = run_picard(prob, kernel, model, &trial, init)?;
        // Third ratio when available, otherwise the last observed; a run
        // that converged before producing ratios counts as contractive.
        let rho = report.ratios.get(2).or(report.ratios.last()).copied().unwrap_or(0.0);
        if rho < target {
            return Ok((n, rho));
        }
        if n <= 2 {
            break;
        }
        n /= 2;
    }
    Err(Error::Convergence {
        what: "horizon bisection".into(),
        iterations: max_halvings,
        residual: f64::NAN,
    })
}
