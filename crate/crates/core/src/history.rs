//! History-dependent operators evaluated along a stored trajectory: the
//! memory operator (elastic stress of the accumulated displacement plus an
//! exponential-kernel relaxation convolution) and the normal trace of the
//! accumulated displacement. Both depend causally on the velocity history.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::problem::{weighted_l4_norm, SpdForm, TrajectoryState};
use crate::rng::{seeded, uniform_vector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryQuadrature {
    /// sum over j < k (consistent with the displacement prefix rule).
    LeftRectangle,
    /// Trapezoid weights on 0..=k; the j = k sample is the implicit part
    /// returned by `current_matrix`, not part of `eval_past`.
    Trapezoid,
}

/// Generic extra history slot: values per contact node from the trajectory
/// prefix. The shipped applications leave it zero.
pub type ExtraHistoryOp = Arc<dyn Fn(&TrajectoryState, usize) -> DVector<f64> + Send + Sync>;

#[derive(Clone)]
pub struct HistoryKernel {
    /// Elasticity operator applied to the accumulated displacement.
    elast: DMatrix<f64>,
    /// Unit-amplitude relaxation stiffness; the kernel at lag t is
    /// relax_amplitude * exp(-t/relax_tau) times this.
    relax_shape: DMatrix<f64>,
    relax_amplitude: f64,
    relax_tau: f64,
    quadrature: HistoryQuadrature,
    /// Normal trace from dofs to contact values.
    trace_nu: DMatrix<f64>,
    /// Initial displacement; trajectories evaluated against this kernel must
    /// start from it.
    u0: DVector<f64>,
    extra: Option<ExtraHistoryOp>,
    /// Kernel decay factors sampled per lag step, filled by `sample_lags`.
    sampled: Option<(f64, Vec<f64>)>,
}

impl std::fmt::Debug for HistoryKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HistoryKernel")
            .field("n_dof", &self.elast.nrows())
            .field("relax_amplitude", &self.relax_amplitude)
            .field("relax_tau", &self.relax_tau)
            .field("quadrature", &self.quadrature)
            .field("has_extra", &self.extra.is_some())
            .finish()
    }
}

impl HistoryKernel {
    pub fn new(
        elast: DMatrix<f64>,
        relax_shape: DMatrix<f64>,
        relax_amplitude: f64,
        relax_tau: f64,
        trace_nu: DMatrix<f64>,
        u0: DVector<f64>,
        quadrature: HistoryQuadrature,
    ) -> Result<Self> {
        let n = elast.nrows();
        if elast.ncols() != n || relax_shape.nrows() != n || relax_shape.ncols() != n {
            return Err(Error::Shape("history operators must be square and same size".into()));
        }
        if trace_nu.ncols() != n || u0.len() != n {
            return Err(Error::Shape("trace/initial displacement dimension".into()));
        }
        if relax_amplitude < 0.0 || !relax_amplitude.is_finite() {
            return Err(Error::Invalid("relaxation amplitude must be finite and >= 0".into()));
        }
        if relax_amplitude > 0.0 && !(relax_tau > 0.0) {
            return Err(Error::Invalid("relaxation time must be positive".into()));
        }
        Ok(Self {
            elast,
            relax_shape,
            relax_amplitude,
            relax_tau,
            quadrature,
            trace_nu,
            u0,
            extra: None,
            sampled: None,
        })
    }

    pub fn from_assembled(
        asm: &crate::assembly::Assembled,
        u0: DVector<f64>,
        quadrature: HistoryQuadrature,
    ) -> Result<Self> {
        Self::new(
            asm.elast_stiffness.clone(),
            asm.relax_stiffness.clone(),
            asm.relax_amplitude,
            asm.relax_tau,
            asm.problem.trace_nu.clone(),
            u0,
            quadrature,
        )
    }

    pub fn with_extra(mut self, op: ExtraHistoryOp) -> Self {
        self.extra = Some(op);
        self
    }

    pub fn n_dof(&self) -> usize {
        self.elast.nrows()
    }

    pub fn n_contact(&self) -> usize {
        self.trace_nu.nrows()
    }

    pub fn u0(&self) -> &DVector<f64> {
        &self.u0
    }

    pub fn quadrature(&self) -> HistoryQuadrature {
        self.quadrature
    }

    pub fn elast(&self) -> &DMatrix<f64> {
        &self.elast
    }

    pub fn relax_shape(&self) -> &DMatrix<f64> {
        &self.relax_shape
    }

    pub fn relax_amplitude(&self) -> f64 {
        self.relax_amplitude
    }

    /// Pre-sample the kernel decay at lags 0..=n_steps for this dt; later
    /// evaluations at the same dt reuse the table.
    pub fn sample_lags(&mut self, dt: f64, n_steps: usize) {
        let f: Vec<f64> =
            (0..=n_steps).map(|l| (-(l as f64) * dt / self.relax_tau).exp()).collect();
        self.sampled = Some((dt, f));
    }

    fn decay(&self, lag_steps: usize, dt: f64) -> f64 {
        if let Some((sdt, table)) = &self.sampled {
            if *sdt == dt && lag_steps < table.len() {
                return table[lag_steps];
            }
        }
        (-(lag_steps as f64) * dt / self.relax_tau).exp()
    }

    /// Quadrature weight of sample j in the convolution up to t_k (j < k for
    /// left-rectangle; j <= k for trapezoid, whose j = k half-weight is
    /// reported separately by `current_weight`).
    fn conv_weight(&self, j: usize, k: usize, dt: f64) -> f64 {
        match self.quadrature {
            HistoryQuadrature::LeftRectangle => {
                if j < k {
                    dt
                } else {
                    0.0
                }
            }
            HistoryQuadrature::Trapezoid => {
                if j == 0 || j == k {
                    dt / 2.0
                } else {
                    dt
                }
            }
        }
    }

    /// Coefficient of the j = k velocity sample in the convolution; zero for
    /// the left-rectangle rule. The step solver folds this into its
    /// quadratic part.
    pub fn current_weight(&self, dt: f64) -> f64 {
        match self.quadrature {
            HistoryQuadrature::LeftRectangle => 0.0,
            HistoryQuadrature::Trapezoid => dt / 2.0 * self.relax_amplitude,
        }
    }

    /// Matrix multiplying the current velocity sample inside the memory
    /// term, or None when the quadrature has no implicit part.
    pub fn current_matrix(&self, dt: f64) -> Option<DMatrix<f64>> {
        let c = self.current_weight(dt);
        if c == 0.0 || self.relax_amplitude == 0.0 {
            None
        } else {
            Some(&self.relax_shape * c)
        }
    }

    fn check_traj(&self, traj: &TrajectoryState, k: usize) -> Result<()> {
        if k > traj.n_steps() {
            return Err(Error::Invalid(format!(
                "history evaluation index {k} out of range (n_steps {})",
                traj.n_steps()
            )));
        }
        if traj.w[0].len() != self.n_dof() {
            return Err(Error::Shape("trajectory dof count does not match kernel".into()));
        }
        if (&traj.u[0] - &self.u0).amax() != 0.0 {
            return Err(Error::Invalid(
                "trajectory initial displacement differs from the kernel's".into(),
            ));
        }
        Ok(())
    }

    /// Memory covector at step k: elasticity of the accumulated displacement
    /// plus the relaxation convolution of the velocity history, under the
    /// configured quadrature. For the trapezoid rule this includes the j = k
    /// sample; `eval_past` omits it.
    pub fn eval_memory(&self, traj: &TrajectoryState, k: usize) -> Result<DVector<f64>> {
        let past = self.eval_past(traj, k)?;
        match self.current_matrix(traj.dt) {
            Some(m) => Ok(past + m * &traj.w[k]),
            None => Ok(past),
        }
    }

    /// Memory covector at step k excluding any j = k contribution, i.e. the
    /// part known before the step k velocity is solved.
    pub fn eval_past(&self, traj: &TrajectoryState, k: usize) -> Result<DVector<f64>> {
        self.check_traj(traj, k)?;
        let mut xi = &self.elast * &traj.u[k];
        if self.relax_amplitude > 0.0 {
            let mut acc = DVector::zeros(self.n_dof());
            for j in 0..k {
                let wq = self.conv_weight(j, k, traj.dt);
                if wq != 0.0 {
                    acc += &traj.w[j] * (wq * self.decay(k - j, traj.dt));
                }
            }
            xi += &self.relax_shape * acc * self.relax_amplitude;
        }
        Ok(xi)
    }

    /// Memory covectors at every step; shares the per-sample work across k.
    pub fn eval_memory_all(&self, traj: &TrajectoryState) -> Result<Vec<DVector<f64>>> {
        let n = traj.n_steps();
        self.check_traj(traj, n)?;
        let mut out = Vec::with_capacity(n + 1);
        for k in 0..=n {
            out.push(self.eval_memory(traj, k)?);
        }
        Ok(out)
    }

    /// Normal trace of the accumulated displacement at step k.
    pub fn eval_normal_displacement(&self, traj: &TrajectoryState, k: usize) -> Result<DVector<f64>> {
        self.check_traj(traj, k)?;
        Ok(&self.trace_nu * &traj.u[k])
    }

    /// Generic extra history values at step k (zero unless configured).
    pub fn eval_extra(&self, traj: &TrajectoryState, k: usize) -> Result<DVector<f64>> {
        self.check_traj(traj, k)?;
        Ok(match &self.extra {
            Some(op) => op(traj, k),
            None => DVector::zeros(self.n_contact()),
        })
    }
}

/// Measured Lipschitz ratios of the history operators over random trajectory
/// pairs: max over pairs and steps of
/// dual-V-norm(memory difference) / (dt * sum of V-norm velocity diffs) and
/// the same with the weighted l4 contact norm for the normal-displacement
/// operator. The analytic bounds are L_B + relaxation amplitude and the
/// normal trace norm.
pub fn history_lipschitz_probe(
    kernel: &HistoryKernel,
    v_norm: &SpdForm,
    contact_weights: &DVector<f64>,
    n_trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_trials == 0 {
        return Err(Error::Invalid("need at least one probe trial".into()));
    }
    if v_norm.dim() != kernel.n_dof() {
        return Err(Error::Shape("norm dimension does not match kernel".into()));
    }
    let mut rng = seeded(seed);
    let n_dof = kernel.n_dof();
    let mut c_r: f64 = 0.0;
    let mut c_s: f64 = 0.0;
    for _ in 0..n_trials {
        let n_steps = 8;
        let dt = 0.05;
        let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
            let w: Vec<DVector<f64>> = (0..=n_steps).map(|_| uniform_vector(rng, n_dof)).collect();
            let mut traj = TrajectoryState {
                dt,
                w,
                u: vec![kernel.u0().clone(); n_steps + 1],
                alpha: vec![DVector::zeros(kernel.n_contact()); n_steps + 1],
            };
            traj.rebuild_displacement();
            traj
        };
        let t1 = mk(&mut rng);
        let t2 = mk(&mut rng);
        let mut denom = 0.0;
        for k in 1..=n_steps {
            denom += dt * v_norm.norm(&(&t1.w[k - 1] - &t2.w[k - 1]))?;
            if denom <= 1e-14 {
                continue;
            }
            let dm = self_memory_diff(kernel, &t1, &t2, k)?;
            c_r = c_r.max(v_norm.dual_norm(&dm)? / denom);
            let ds = kernel.eval_normal_displacement(&t1, k)?
                - kernel.eval_normal_displacement(&t2, k)?;
            c_s = c_s.max(weighted_l4_norm(&ds, contact_weights) / denom);
        }
    }
    Ok((c_r, c_s))
}

fn self_memory_diff(
    kernel: &HistoryKernel,
    t1: &TrajectoryState,
    t2: &TrajectoryState,
    k: usize,
) -> Result<DVector<f64>> {
    Ok(kernel.eval_memory(t1, k)? - kernel.eval_memory(t2, k)?)
}
