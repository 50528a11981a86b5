//! Per-timestep solver. With all history quantities frozen, one implicit
//! velocity step is the strictly convex nonsmooth program
//!
//!   min_w  1/2 <Q w, w> - <b, w> + sum_t c_t |m_t' w|
//!
//! where Q collects mass/dt, viscosity, and any folded quadratic pieces, and
//! each term t is a weighted friction (or absolute normal response) bound on
//! one contact trace. Solved by a smoothing ladder of damped Newton steps
//! followed by an active-set polish that enforces stick constraints exactly
//! and certifies the solution by its KKT residual in the dual velocity norm.

use std::collections::HashSet;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::friction::{ComplianceLaw, DampedResponseLaw, FrictionLaw};
use crate::problem::DiscreteProblem;
use crate::rng::{seeded, uniform_vector};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub enum ContactModel {
    /// No contact terms at all.
    Frictionless,
    /// Normal pressure from penetration compliance; friction bound is
    /// coefficient times pressure.
    NormalCompliance { pressure: ComplianceLaw, friction: FrictionLaw },
    /// Normal response from a convex superpotential in the normal velocity;
    /// friction bound is the bare coefficient.
    DampedResponse { normal: DampedResponseLaw, friction: FrictionLaw },
}

impl ContactModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ContactModel::Frictionless => Ok(()),
            ContactModel::NormalCompliance { pressure, friction } => {
                pressure.validate()?;
                friction.validate()
            }
            ContactModel::DampedResponse { normal, friction } => {
                normal.validate()?;
                friction.validate()?;
                if !normal.is_convex() {
                    return Err(Error::Invalid(
                        "the step solver requires a convex normal superpotential; \
                         declare convexity or use a shipped variant"
                            .into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn friction(&self) -> Option<&FrictionLaw> {
        match self {
            ContactModel::Frictionless => None,
            ContactModel::NormalCompliance { friction, .. }
            | ContactModel::DampedResponse { friction, .. } => Some(friction),
        }
    }
}

/// Everything the step solve treats as known data: the lagged state, memory
/// covector, penetration, slip-rate magnitudes, extra history values, and
/// the load covector, all at the step's time.
#[derive(Clone, Debug)]
pub struct FrozenStepData {
    pub alpha: DVector<f64>,
    pub xi: DVector<f64>,
    pub eta: DVector<f64>,
    pub g_slip: DVector<f64>,
    pub chi: DVector<f64>,
    pub load: DVector<f64>,
}

impl FrozenStepData {
    pub fn validate(&self, prob: &DiscreteProblem) -> Result<()> {
        let nc = prob.n_contact();
        if self.alpha.len() != nc || self.eta.len() != nc || self.g_slip.len() != nc || self.chi.len() != nc {
            return Err(Error::Shape("frozen step data contact dimensions".into()));
        }
        if self.xi.len() != prob.n_dof || self.load.len() != prob.n_dof {
            return Err(Error::Shape("frozen step data dof dimensions".into()));
        }
        for v in [&self.alpha, &self.xi, &self.eta, &self.g_slip, &self.chi, &self.load] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid("frozen step data must be finite".into()));
            }
        }
        if self.g_slip.iter().any(|&x| x < 0.0) {
            return Err(Error::Invalid("lagged slip rates must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepRegime {
    Stick,
    Slip,
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermKind {
    Friction,
    NormalResponse,
}

/// One nonsmooth term c |m' w| of the step program.
#[derive(Clone, Debug)]
pub struct QpTerm {
    pub node: usize,
    pub kind: TermKind,
    pub row: DVector<f64>,
    pub bound: f64,
}

/// Per-term diagnostics of a solved step.
#[derive(Clone, Debug)]
pub struct TermDiag {
    pub node: usize,
    pub kind: TermKind,
    pub bound: f64,
    /// m' w at the solution.
    pub slip: f64,
    /// Subgradient multiplier actually used: c sign(slip) when slipping, the
    /// constraint force when sticking (|multiplier| <= bound).
    pub multiplier: f64,
    pub stuck: bool,
}

#[derive(Clone, Debug)]
pub struct StepSolution {
    pub w: DVector<f64>,
    pub regimes: Vec<StepRegime>,
    pub terms: Vec<TermDiag>,
    /// Dual-V-norm of the stationarity residual with the reported
    /// multipliers.
    pub kkt_residual: f64,
    pub newton_iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOpts {
    pub kkt_tol: f64,
    pub max_newton: usize,
    pub max_polish: usize,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts { kkt_tol: 1e-10, max_newton: 200, max_polish: 60 }
    }
}

/// Shared assembly of the step program pieces for the solver and the
/// verifier: the quadratic matrix (mass/dt + viscosity + folds), the linear
/// covector, and the nonsmooth terms with frozen bounds.
pub fn build_step_program(
    prob: &DiscreteProblem,
    model: &ContactModel,
    dt: f64,
    memory_fold: Option<&DMatrix<f64>>,
    data: &FrozenStepData,
    w_prev: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>, Vec<QpTerm>)> {
    let q = build_q(prob, model, dt, memory_fold)?;
    let (b, terms) = build_linear_and_terms(prob, model, dt, data, w_prev)?;
    Ok((q, b, terms))
}

fn build_q(
    prob: &DiscreteProblem,
    model: &ContactModel,
    dt: f64,
    memory_fold: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Invalid("time step must be positive".into()));
    }
    let mut q = &prob.visc + &prob.mass / dt;
    if let Some(m) = memory_fold {
        if m.nrows() != prob.n_dof || m.ncols() != prob.n_dof {
            return Err(Error::Shape("memory fold matrix dimension".into()));
        }
        q += m;
    }
    if let ContactModel::DampedResponse { normal: DampedResponseLaw::Quadratic { kappa }, .. } = model {
        // Smooth normal superpotential folds into the quadratic part.
        for i in 0..prob.n_contact() {
            let row = prob.trace_nu.row(i);
            let w = prob.contact_weights[i] * kappa;
            if w != 0.0 {
                for a in 0..prob.n_dof {
                    if row[a] == 0.0 {
                        continue;
                    }
                    for bcol in 0..prob.n_dof {
                        q[(a, bcol)] += w * row[a] * row[bcol];
                    }
                }
            }
        }
    }
    Ok(q)
}

fn build_linear_and_terms(
    prob: &DiscreteProblem,
    model: &ContactModel,
    dt: f64,
    data: &FrozenStepData,
    w_prev: &DVector<f64>,
) -> Result<(DVector<f64>, Vec<QpTerm>)> {
    data.validate(prob)?;
    if w_prev.len() != prob.n_dof {
        return Err(Error::Shape("previous velocity dimension".into()));
    }
    let mut b = &prob.mass * w_prev / dt + &data.load - &data.xi;
    let mut terms = Vec::new();
    match model {
        ContactModel::Frictionless => {}
        ContactModel::NormalCompliance { pressure, friction } => {
            for i in 0..prob.n_contact() {
                let omega = prob.contact_weights[i];
                let p = pressure.pressure(data.eta[i]);
                // Normal reaction is a frozen covector this step.
                if p != 0.0 && omega != 0.0 {
                    let nu = prob.trace_nu.row(i);
                    for a in 0..prob.n_dof {
                        b[a] -= omega * p * nu[a];
                    }
                }
                let mu = friction.mu_at(i, data.g_slip[i], data.alpha[i])?;
                let c = omega * mu * p;
                push_term(&mut terms, prob, i, TermKind::Friction, c)?;
            }
        }
        ContactModel::DampedResponse { normal, friction } => {
            for i in 0..prob.n_contact() {
                let omega = prob.contact_weights[i];
                if let DampedResponseLaw::Absolute { kappa } = normal {
                    let c = omega * kappa;
                    if c != 0.0 {
                        let row = prob.trace_nu.row(i).transpose();
                        if row.amax() > 0.0 {
                            terms.push(QpTerm { node: i, kind: TermKind::NormalResponse, row, bound: c });
                        }
                    }
                }
                let mu = friction.mu_at(i, data.g_slip[i], data.alpha[i])?;
                let c = omega * mu;
                push_term(&mut terms, prob, i, TermKind::Friction, c)?;
            }
        }
    }
    Ok((b, terms))
}

fn push_term(
    terms: &mut Vec<QpTerm>,
    prob: &DiscreteProblem,
    node: usize,
    kind: TermKind,
    bound: f64,
) -> Result<()> {
    if !bound.is_finite() || bound < 0.0 {
        return Err(Error::Invalid(format!(
            "friction bound at contact node {node} is {bound}; bounds must be finite and >= 0"
        )));
    }
    if bound == 0.0 {
        return Ok(());
    }
    let row = prob.trace_tau.row(node).transpose();
    if row.amax() == 0.0 {
        // Constrained trace is identically zero (clamped corner sample).
        return Ok(());
    }
    terms.push(QpTerm { node, kind, row, bound });
    Ok(())
}

/// Step solver with the quadratic part factored once; reusable across steps
/// and sweeps as long as dt, the model, and the fold stay fixed.
pub struct StepSolver<'a> {
    prob: &'a DiscreteProblem,
    model: &'a ContactModel,
    dt: f64,
    q: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    opts: SolveOpts,
}

impl<'a> StepSolver<'a> {
    pub fn new(
        prob: &'a DiscreteProblem,
        model: &'a ContactModel,
        dt: f64,
        memory_fold: Option<&DMatrix<f64>>,
        opts: SolveOpts,
    ) -> Result<Self> {
        model.validate()?;
        let q = build_q(prob, model, dt, memory_fold)?;
        let chol = Cholesky::new(q.clone())
            .ok_or_else(|| Error::NotSpd("step quadratic part is not positive definite".into()))?;
        Ok(StepSolver { prob, model, dt, q, chol, opts })
    }

    pub fn quadratic_part(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn solve(&self, data: &FrozenStepData, w_prev: &DVector<f64>) -> Result<StepSolution> {
        let (b, terms) = build_linear_and_terms(self.prob, self.model, self.dt, data, w_prev)?;
        let (w, diags, kkt, iters) =
            solve_nonsmooth_qp(&self.q, &self.chol, &b, &terms, self.prob, &self.opts)?;
        let regimes = classify(self.prob.n_contact(), &diags);
        Ok(StepSolution { w, regimes, terms: diags, kkt_residual: kkt, newton_iterations: iters })
    }
}

/// One-shot convenience around `StepSolver` without a memory fold.
pub fn solve_step(
    prob: &DiscreteProblem,
    model: &ContactModel,
    dt: f64,
    data: &FrozenStepData,
    w_prev: &DVector<f64>,
    opts: SolveOpts,
) -> Result<StepSolution> {
    StepSolver::new(prob, model, dt, None, opts)?.solve(data, w_prev)
}

fn classify(n_contact: usize, diags: &[TermDiag]) -> Vec<StepRegime> {
    let mut regimes = vec![StepRegime::Open; n_contact];
    for d in diags {
        if d.kind == TermKind::Friction {
            regimes[d.node] = if d.stuck { StepRegime::Stick } else { StepRegime::Slip };
        }
    }
    regimes
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum TermState {
    Stick,
    SlipPos,
    SlipNeg,
}

impl TermState {
    fn sigma(self) -> f64 {
        match self {
            TermState::Stick => 0.0,
            TermState::SlipPos => 1.0,
            TermState::SlipNeg => -1.0,
        }
    }
}

fn smoothed_objective(
    q: &DMatrix<f64>,
    b: &DVector<f64>,
    terms: &[QpTerm],
    w: &DVector<f64>,
    eps: f64,
) -> f64 {
    let mut j = 0.5 * (q * w).dot(w) - b.dot(w);
    for t in terms {
        let z = t.row.dot(w);
        j += t.bound * (z * z + eps * eps).sqrt();
    }
    j
}

#[allow(clippy::type_complexity)]
fn solve_nonsmooth_qp(
    q: &DMatrix<f64>,
    chol: &Cholesky<f64, Dyn>,
    b: &DVector<f64>,
    terms: &[QpTerm],
    prob: &DiscreteProblem,
    opts: &SolveOpts,
) -> Result<(DVector<f64>, Vec<TermDiag>, f64, usize)> {
    let n = b.len();
    let w_free = chol.solve(b);
    let mut total_newton = 0usize;

    if terms.is_empty() {
        let (diags, kkt) = certify(q, b, terms, &w_free, &[], prob)?;
        return Ok((w_free, diags, kkt, 0));
    }

    let slip_scale = terms.iter().map(|t| t.row.dot(&w_free).abs()).fold(0.0, f64::max);
    if slip_scale == 0.0 {
        // The free minimizer has no slip anywhere; check it as an all-stick
        // stationary point before doing any smoothing work.
        let states = vec![TermState::Stick; terms.len()];
        let (w, mults) = solve_with_states(q, chol, b, terms, &states, n)?;
        let (diags, kkt) = certify(q, b, terms, &w, &pack(&states, &mults), prob)?;
        if kkt <= opts.kkt_tol {
            return Ok((w, diags, kkt, 0));
        }
        // Multiplier infeasible: fall through to the general path.
    }
    let s_ref = slip_scale.max(1e-9 * w_free.amax()).max(1e-300);
    let force_scale = b.amax().max(terms.iter().map(|t| t.bound).fold(0.0, f64::max)).max(1e-300);
    let gtol = 1e-12 * force_scale;

    // Smoothing ladder: |z| ~ sqrt(z^2 + eps^2), eps shrinking relative to
    // the free-solve slip scale.
    let mut w = w_free.clone();
    for k in [2, 4, 6, 8, 10] {
        let eps = s_ref * 10f64.powi(-k);
        let mut it = 0usize;
        while it < 50 && total_newton < opts.max_newton {
            let mut grad = q * &w - b;
            let mut hess = q.clone();
            for t in terms {
                let z = t.row.dot(&w);
                let root = (z * z + eps * eps).sqrt();
                let gcoef = t.bound * z / root;
                let hcoef = t.bound * eps * eps / (root * root * root);
                grad.axpy(gcoef, &t.row, 1.0);
                // rank-one update hcoef * row row'
                for a in 0..n {
                    if t.row[a] == 0.0 {
                        continue;
                    }
                    for c in 0..n {
                        hess[(a, c)] += hcoef * t.row[a] * t.row[c];
                    }
                }
            }
            if grad.amax() <= gtol {
                break;
            }
            let hchol = Cholesky::new(hess)
                .ok_or_else(|| Error::NotSpd("smoothed step Hessian lost definiteness".into()))?;
            let dir = -hchol.solve(&grad);
            let j0 = smoothed_objective(q, b, terms, &w, eps);
            let slope = grad.dot(&dir);
            let mut tstep = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = &w + &dir * tstep;
                if smoothed_objective(q, b, terms, &cand, eps) <= j0 + 1e-4 * tstep * slope {
                    w = cand;
                    accepted = true;
                    break;
                }
                tstep *= 0.5;
            }
            if !accepted {
                break; // at numerical stationarity for this rung
            }
            it += 1;
            total_newton += 1;
        }
    }

    // Active-set polish from the smoothed iterate.
    let mut states: Vec<TermState> = terms
        .iter()
        .map(|t| {
            let z = t.row.dot(&w);
            if z.abs() <= 1e-5 * s_ref {
                TermState::Stick
            } else if z > 0.0 {
                TermState::SlipPos
            } else {
                TermState::SlipNeg
            }
        })
        .collect();

    let mut seen: HashSet<Vec<TermState>> = HashSet::new();
    let mut best: Option<(DVector<f64>, Vec<TermDiag>, f64)> = None;
    for _ in 0..opts.max_polish {
        seen.insert(states.clone());
        let (wp, mults) = solve_with_states(q, chol, b, terms, &states, n)?;
        let packed = pack(&states, &mults);
        let (diags, kkt) = certify(q, b, terms, &wp, &packed, prob)?;
        if best.as_ref().map_or(true, |(_, _, bk)| kkt < *bk) {
            best = Some((wp.clone(), diags.clone(), kkt));
        }
        if kkt <= opts.kkt_tol {
            let (wb, db, kb) = best.unwrap();
            return Ok((wb, db, kb, total_newton));
        }
        // Reclassify: release overloaded stick terms, demote wrong-sign slip.
        let mut changed = false;
        let mut next = states.clone();
        for (idx, t) in terms.iter().enumerate() {
            match states[idx] {
                TermState::Stick => {
                    let lam = mults[idx];
                    if lam.abs() > t.bound * (1.0 + 1e-12) {
                        next[idx] = if lam > 0.0 { TermState::SlipPos } else { TermState::SlipNeg };
                        changed = true;
                    }
                }
                s => {
                    let z = t.row.dot(&wp);
                    if z * s.sigma() < -1e-13 * s_ref {
                        next[idx] = TermState::Stick;
                        changed = true;
                    }
                }
            }
        }
        if !changed || seen.contains(&next) {
            // Stationary classification or a cycle: keep the best iterate.
            break;
        }
        states = next;
    }

    let (wb, db, kb) = best.expect("polish ran at least once");
    if kb <= opts.kkt_tol {
        Ok((wb, db, kb, total_newton))
    } else {
        Err(Error::Convergence {
            what: "step active-set polish".into(),
            iterations: opts.max_polish,
            residual: kb,
        })
    }
}

fn pack(states: &[TermState], mults: &[f64]) -> Vec<(TermState, f64)> {
    states.iter().copied().zip(mults.iter().copied()).collect()
}

/// Solve the equality-constrained model: minimize 1/2 w'Qw - b_eff'w with
/// m_t'w = 0 for stick terms, where b_eff subtracts c sigma m for slip
/// terms. Singleton stick rows are eliminated (their dof set to exactly
/// zero); remaining stick rows go through a Schur complement. Returns the
/// solution and per-term multipliers (slip terms get c sigma).
fn solve_with_states(
    q: &DMatrix<f64>,
    chol_full: &Cholesky<f64, Dyn>,
    b: &DVector<f64>,
    terms: &[QpTerm],
    states: &[TermState],
    n: usize,
) -> Result<(DVector<f64>, Vec<f64>)> {
    let mut b_eff = b.clone();
    for (t, s) in terms.iter().zip(states) {
        let sg = s.sigma();
        if sg != 0.0 {
            b_eff.axpy(-t.bound * sg, &t.row, 1.0);
        }
    }

    // Partition stick terms into singleton rows (eliminate the dof) and
    // general rows (Schur multipliers).
    let mut eliminated: Vec<usize> = Vec::new();
    let mut singleton: Vec<(usize, usize, f64)> = Vec::new(); // (term idx, dof, row value)
    let mut general: Vec<usize> = Vec::new();
    for (idx, (t, s)) in terms.iter().zip(states).enumerate() {
        if *s != TermState::Stick {
            continue;
        }
        let nz: Vec<usize> = (0..n).filter(|&a| t.row[a] != 0.0).collect();
        if nz.len() == 1 && !eliminated.contains(&nz[0]) {
            eliminated.push(nz[0]);
            singleton.push((idx, nz[0], t.row[nz[0]]));
        } else {
            general.push(idx);
        }
    }

    let mut mults = vec![0.0; terms.len()];
    for (idx, (t, s)) in terms.iter().zip(states).enumerate() {
        if *s != TermState::Stick {
            mults[idx] = t.bound * s.sigma();
        }
    }

    let w = if eliminated.is_empty() && general.is_empty() {
        chol_full.solve(&b_eff)
    } else {
        let free: Vec<usize> = (0..n).filter(|a| !eliminated.contains(a)).collect();
        let nf = free.len();
        let qff = DMatrix::from_fn(nf, nf, |i, j| q[(free[i], free[j])]);
        let bf = DVector::from_fn(nf, |i, _| b_eff[free[i]]);
        let cholf = Cholesky::new(qff)
            .ok_or_else(|| Error::NotSpd("reduced stick system lost definiteness".into()))?;
        let mut wf = cholf.solve(&bf);
        if !general.is_empty() {
            let m = general.len();
            let rows: Vec<DVector<f64>> = general
                .iter()
                .map(|&idx| DVector::from_fn(nf, |i, _| terms[idx].row[free[i]]))
                .collect();
            // Rows fully supported on eliminated dofs vanish here; their
            // constraint already holds and the multiplier stays zero.
            let kinvm: Vec<DVector<f64>> = rows.iter().map(|r| cholf.solve(r)).collect();
            let mut s = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    s[(i, j)] = rows[i].dot(&kinvm[j]);
                }
            }
            let rhs = DVector::from_fn(m, |i, _| rows[i].dot(&wf));
            let lambda = match Cholesky::new(s.clone()) {
                Some(c) => c.solve(&rhs),
                None => s
                    .svd(true, true)
                    .solve(&rhs, 1e-12)
                    .map_err(|e| Error::Invalid(format!("singular stick system: {e}")))?,
            };
            for i in 0..m {
                wf.axpy(-lambda[i], &kinvm[i], 1.0);
                mults[general[i]] = lambda[i];
            }
        }
        let mut w = DVector::zeros(n);
        for (i, &a) in free.iter().enumerate() {
            w[a] = wf[i];
        }
        // Eliminated dofs are exactly zero by construction.
        w
    };

    // Singleton multipliers balance the full stationarity at their dof,
    // including contributions from general stick multipliers.
    if !singleton.is_empty() {
        let mut resid = q * &w - &b_eff;
        for &idx in &general {
            resid.axpy(mults[idx], &terms[idx].row, 1.0);
        }
        for &(idx, dof, val) in &singleton {
            mults[idx] = -resid[dof] / val;
        }
    }
    Ok((w, mults))
}

/// Stationarity residual with the given per-term states/multipliers, in the
/// dual velocity norm, plus per-term diagnostics.
fn certify(
    q: &DMatrix<f64>,
    b: &DVector<f64>,
    terms: &[QpTerm],
    w: &DVector<f64>,
    packed: &[(TermState, f64)],
    prob: &DiscreteProblem,
) -> Result<(Vec<TermDiag>, f64)> {
    let mut resid = q * w - b;
    let mut diags = Vec::with_capacity(terms.len());
    for (i, t) in terms.iter().enumerate() {
        let z = t.row.dot(w);
        let (state, mult) = if packed.is_empty() {
            (if z > 0.0 { TermState::SlipPos } else if z < 0.0 { TermState::SlipNeg } else { TermState::Stick }, t.bound * z.signum())
        } else {
            packed[i]
        };
        // Feasible subgradient element closest to the reported multiplier.
        let lam = mult.clamp(-t.bound, t.bound);
        resid.axpy(lam, &t.row, 1.0);
        diags.push(TermDiag {
            node: t.node,
            kind: t.kind,
            bound: t.bound,
            slip: z,
            multiplier: lam,
            stuck: state == TermState::Stick,
        });
    }
    let kkt = prob.v_norm.dual_norm(&resid)?;
    Ok((diags, kkt))
}

/// Variational-inequality verification of a solved step: evaluates
/// G(v) = <Q w - b, v - w> + Phi(v) - Phi(w) at v = 0, v = 2w, and random
/// probes scaled by (1 + |w|_V); the minimum over probes must be
/// nonnegative up to roundoff when w solves the step. The caller passes the
/// same fold matrix it solved with.
#[allow(clippy::too_many_arguments)]
pub fn verify_vi(
    prob: &DiscreteProblem,
    model: &ContactModel,
    dt: f64,
    memory_fold: Option<&DMatrix<f64>>,
    data: &FrozenStepData,
    w_prev: &DVector<f64>,
    w: &DVector<f64>,
    n_probes: usize,
    seed: u64,
) -> Result<f64> {
    let (q, b, terms) = build_step_program(prob, model, dt, memory_fold, data, w_prev)?;
    if w.len() != prob.n_dof {
        return Err(Error::Shape("verification velocity dimension".into()));
    }
    let core = &q * w - &b;
    let phi = |v: &DVector<f64>| -> f64 {
        terms.iter().map(|t| t.bound * t.row.dot(v).abs()).sum()
    };
    let phi_w = phi(w);
    let gap = |v: &DVector<f64>| -> f64 { core.dot(&(v - w)) + phi(v) - phi_w };

    let mut worst = f64::INFINITY;
    worst = worst.min(gap(&DVector::zeros(prob.n_dof)));
    worst = worst.min(gap(&(w * 2.0)));
    let scale = 1.0 + prob.v_norm_of(w)?;
    let mut rng = seeded(seed);
    for _ in 0..n_probes {
        let v = w + uniform_vector(&mut rng, prob.n_dof) * scale;
        worst = worst.min(gap(&v));
    }
    Ok(worst)
}
