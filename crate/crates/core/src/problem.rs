//! Finite-dimensional problem objects: dof vectors, SPD quadratic forms for
//! the energy norms, boundary trace maps, and trajectory storage. Everything
//! downstream (history evaluation, step solves, the outer iteration) operates
//! on these types and never on how they were assembled.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result};

/// Symmetric positive definite quadratic form with a cached Cholesky
/// factorization. Defines an inner product, its norm, and solves against it.
#[derive(Clone, Debug)]
pub struct SpdForm {
    mat: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl SpdForm {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Shape(format!(
                "quadratic form must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let scale = mat.amax().max(1e-300);
        for i in 0..mat.nrows() {
            for j in (i + 1)..mat.ncols() {
                if (mat[(i, j)] - mat[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::NotSpd(format!(
                        "asymmetry at ({i},{j}): {} vs {}",
                        mat[(i, j)],
                        mat[(j, i)]
                    )));
                }
            }
        }
        // Work on the exactly symmetrized copy so the factorization and the
        // quadratic form agree to the last bit.
        let sym = (&mat + mat.transpose()) * 0.5;
        let chol = sym
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotSpd("Cholesky factorization failed".into()))?;
        Ok(SpdForm { mat: sym, chol })
    }

    pub fn identity(n: usize) -> Self {
        SpdForm::new(DMatrix::identity(n, n)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (&self.mat * y).dot(x)
    }

    /// sqrt(x' Q x), clamped at zero against roundoff.
    pub fn norm(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Shape(format!(
                "norm argument has length {}, form has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self.inner(x, x).max(0.0).sqrt())
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// Lower Cholesky factor L with Q = L L'.
    pub fn chol_l(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Dual norm sqrt(f' Q^{-1} f) of a covector.
    pub fn dual_norm(&self, f: &DVector<f64>) -> Result<f64> {
        if f.len() != self.dim() {
            return Err(Error::Shape("dual norm argument length".into()));
        }
        Ok(self.solve(f).dot(f).max(0.0).sqrt())
    }
}

/// Weighted little-l4 norm over contact nodes, the discrete stand-in for the
/// boundary L4 norm: (sum_i w_i z_i^4)^(1/4).
pub fn weighted_l4_norm(z: &DVector<f64>, weights: &DVector<f64>) -> f64 {
    debug_assert_eq!(z.len(), weights.len());
    z.iter()
        .zip(weights.iter())
        .map(|(zi, wi)| wi * zi * zi * zi * zi)
        .sum::<f64>()
        .powf(0.25)
}

/// Weighted little-l2 norm over contact nodes (discrete boundary L2).
pub fn weighted_l2_norm(z: &DVector<f64>, weights: &DVector<f64>) -> f64 {
    debug_assert_eq!(z.len(), weights.len());
    z.iter()
        .zip(weights.iter())
        .map(|(zi, wi)| wi * zi * zi)
        .sum::<f64>()
        .sqrt()
}

/// Semi-discrete problem data: operators on the free velocity dofs after
/// Dirichlet elimination, contact trace maps, quadrature weights on the
/// contact boundary, and the time-sampled load vectors.
#[derive(Clone, Debug)]
pub struct DiscreteProblem {
    pub n_dof: usize,
    /// Mass operator (density-weighted); also the H-norm form.
    pub mass: DMatrix<f64>,
    /// Viscosity operator realizing the leading monotone term.
    pub visc: DMatrix<f64>,
    /// V-norm form: stiffness energy of the reference (identity) tensor.
    pub v_norm: SpdForm,
    /// H-norm form (equals the mass form).
    pub h_norm: SpdForm,
    /// Tangential trace: one row per contact node, scalar tangential value.
    pub trace_tau: DMatrix<f64>,
    /// Normal trace: one row per contact node.
    pub trace_nu: DMatrix<f64>,
    /// Quadrature weights for contact-boundary integrals, one per node.
    pub contact_weights: DVector<f64>,
    /// Free dofs touched by any trace row (sorted, deduplicated).
    pub contact_dofs: Vec<usize>,
    /// Load vectors at t_0..t_n, length n_steps + 1.
    pub load: Vec<DVector<f64>>,
}

impl DiscreteProblem {
    /// Builds the problem from assembled operators; the V and H norm forms
    /// are factorized here, and the whole object is validated.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mass: DMatrix<f64>,
        visc: DMatrix<f64>,
        v_norm_matrix: DMatrix<f64>,
        h_norm_matrix: DMatrix<f64>,
        trace_tau: DMatrix<f64>,
        trace_nu: DMatrix<f64>,
        contact_weights: DVector<f64>,
        contact_dofs: Vec<usize>,
        load: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let n_dof = mass.nrows();
        let mut contact_dofs = contact_dofs;
        contact_dofs.sort_unstable();
        contact_dofs.dedup();
        let prob = DiscreteProblem {
            n_dof,
            mass,
            visc,
            v_norm: SpdForm::new(v_norm_matrix)?,
            h_norm: SpdForm::new(h_norm_matrix)?,
            trace_tau,
            trace_nu,
            contact_weights,
            contact_dofs,
            load,
        };
        prob.validate()?;
        Ok(prob)
    }

    pub fn n_contact(&self) -> usize {
        self.trace_tau.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_dof;
        if self.mass.nrows() != n || self.mass.ncols() != n {
            return Err(Error::Shape("mass operator dimension".into()));
        }
        if self.visc.nrows() != n || self.visc.ncols() != n {
            return Err(Error::Shape("viscosity operator dimension".into()));
        }
        if self.v_norm.dim() != n || self.h_norm.dim() != n {
            return Err(Error::Shape("norm form dimension".into()));
        }
        let nc = self.n_contact();
        if self.trace_nu.nrows() != nc {
            return Err(Error::Shape(
                "tangential and normal traces disagree on contact node count".into(),
            ));
        }
        if self.trace_tau.ncols() != n || self.trace_nu.ncols() != n {
            return Err(Error::Shape("trace map column count".into()));
        }
        if self.contact_weights.len() != nc {
            return Err(Error::Shape("contact weight count".into()));
        }
        if self.contact_weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Invalid("contact weights must be positive and finite".into()));
        }
        for d in &self.contact_dofs {
            if *d >= n {
                return Err(Error::Shape("contact dof index out of range".into()));
            }
        }
        // Trace rows may only touch registered contact dofs.
        for (name, map) in [("tangential", &self.trace_tau), ("normal", &self.trace_nu)] {
            for i in 0..nc {
                for j in 0..n {
                    if map[(i, j)] != 0.0 && !self.contact_dofs.contains(&j) {
                        return Err(Error::Invalid(format!(
                            "{name} trace row {i} touches non-contact dof {j}"
                        )));
                    }
                }
            }
        }
        for (k, l) in self.load.iter().enumerate() {
            if l.len() != n {
                return Err(Error::Shape(format!("load vector {k} has wrong length")));
            }
            if l.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid(format!("load vector {k} has non-finite entries")));
            }
        }
        Ok(())
    }

    pub fn v_norm_of(&self, x: &DVector<f64>) -> Result<f64> {
        self.v_norm.norm(x)
    }

    pub fn h_norm_of(&self, x: &DVector<f64>) -> Result<f64> {
        self.h_norm.norm(x)
    }

    /// Tangential values at the contact nodes.
    pub fn tau_values(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.trace_tau * w
    }

    /// Normal values at the contact nodes.
    pub fn nu_values(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.trace_nu * u
    }

    /// Slip-rate magnitudes |tangential velocity| per contact node.
    pub fn slip_rates(&self, w: &DVector<f64>) -> DVector<f64> {
        self.tau_values(w).map(f64::abs)
    }

    /// Total contact-boundary measure (sum of quadrature weights).
    pub fn contact_measure(&self) -> f64 {
        self.contact_weights.sum()
    }

    /// Weighted l4 norm of per-contact-node values.
    pub fn contact_l4(&self, z: &DVector<f64>) -> f64 {
        weighted_l4_norm(z, &self.contact_weights)
    }

    /// Weighted l2 norm of per-contact-node values (state-variable norm).
    pub fn contact_l2(&self, z: &DVector<f64>) -> f64 {
        weighted_l2_norm(z, &self.contact_weights)
    }
}

/// Time-sampled trajectory: velocities, displacements, interfacial state.
/// Displacements satisfy the left-rectangle prefix rule
/// u(t_k) = u(t_0) + dt * sum_{j<k} w(t_j), so u(t_0) is the initial datum
/// untouched by w.
#[derive(Clone, Debug)]
pub struct TrajectoryState {
    pub dt: f64,
    pub w: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    pub alpha: Vec<DVector<f64>>,
}

impl TrajectoryState {
    pub fn n_steps(&self) -> usize {
        self.w.len().saturating_sub(1)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.dt * k as f64
    }

    /// Trajectory with w and alpha held constant at their initial values and
    /// u rebuilt by the prefix rule. This is the initial outer iterate.
    pub fn constant_initial(
        w0: &DVector<f64>,
        u0: &DVector<f64>,
        alpha0: &DVector<f64>,
        dt: f64,
        n_steps: usize,
    ) -> Self {
        let w = vec![w0.clone(); n_steps + 1];
        let alpha = vec![alpha0.clone(); n_steps + 1];
        let mut traj = TrajectoryState {
            dt,
            w,
            u: vec![u0.clone(); n_steps + 1],
            alpha,
        };
        traj.rebuild_displacement();
        traj
    }

    /// Recompute u from u(t_0) and w by the prefix rule.
    pub fn rebuild_displacement(&mut self) {
        for k in 1..self.u.len() {
            self.u[k] = &self.u[k - 1] + &self.w[k - 1] * self.dt;
        }
    }

    /// Max dof-wise deviation from the prefix rule.
    pub fn displacement_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut acc = self.u[0].clone();
        for k in 1..self.u.len() {
            acc += &self.w[k - 1] * self.dt;
            worst = worst.max((&self.u[k] - &acc).amax());
        }
        worst
    }

    pub fn validate(&self, n_dof: usize, n_contact: usize) -> Result<()> {
        if self.w.len() != self.u.len() || self.w.len() != self.alpha.len() {
            return Err(Error::Shape("trajectory sample counts disagree".into()));
        }
        if self.w.is_empty() {
            return Err(Error::Shape("trajectory has no samples".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Invalid("trajectory dt must be positive".into()));
        }
        for k in 0..self.w.len() {
            if self.w[k].len() != n_dof || self.u[k].len() != n_dof {
                return Err(Error::Shape(format!("trajectory sample {k} has wrong dof count")));
            }
            if self.alpha[k].len() != n_contact {
                return Err(Error::Shape(format!(
                    "trajectory state sample {k} has wrong contact node count"
                )));
            }
        }
        Ok(())
    }
}

/// The named constants entering the abstract smallness condition and the
/// contraction budget. Analytic where closed forms exist, estimated
/// otherwise; provenance is tracked by the condition reports, not here.
#[derive(Clone, Debug, Default)]
pub struct ConstantsRecord {
    pub m_a: f64,
    pub m_j: f64,
    pub m_j_bar: f64,
    /// beta[i] holds beta_{i+1}; only beta_1, beta_4, beta_5 are nonzero for
    /// the shipped contact models, the rest are kept for completeness.
    pub beta: [f64; 7],
    pub c_r: f64,
    pub c_s_phi: f64,
    pub c_s_j: f64,
    pub l_g: f64,
    pub op_norm_m: f64,
    pub op_norm_n: f64,
    pub op_norm_k: f64,
}

impl ConstantsRecord {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("m_a", self.m_a),
            ("m_j", self.m_j),
            ("m_j_bar", self.m_j_bar),
            ("c_r", self.c_r),
            ("c_s_phi", self.c_s_phi),
            ("c_s_j", self.c_s_j),
            ("l_g", self.l_g),
            ("op_norm_m", self.op_norm_m),
            ("op_norm_n", self.op_norm_n),
            ("op_norm_k", self.op_norm_k),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Invalid(format!(
                    "constant {name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        for (i, b) in self.beta.iter().enumerate() {
            if !b.is_finite() || *b < 0.0 {
                return Err(Error::Invalid(format!(
                    "constant beta_{} must be finite and nonnegative, got {b}",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}
