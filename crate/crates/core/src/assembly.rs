//! Mesh and operator assembly for two discretizations: a 1D viscoelastic
//! chain with a frictional end node, and a 2D P1 triangular mesh of a
//! rectangle with the left edge clamped, the bottom edge in contact, and the
//! remaining edges under traction.

use nalgebra::{DMatrix, DVector};

use crate::problem::DiscreteProblem;
use crate::{Error, Result};

/// Fourth-order symmetric tensor acting on symmetric matrices, stored in the
/// orthonormal (Mandel) basis: 1x1 in 1D, 3x3 in 2D with components
/// (e11, e22, sqrt(2) e12). In this basis the double contraction is the
/// ordinary matrix-vector product, so tensor ellipticity equals the smallest
/// matrix eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct VoigtTensor {
    dim: usize,
    mat: DMatrix<f64>,
}

impl VoigtTensor {
    pub fn new(dim: usize, mat: DMatrix<f64>) -> Result<Self> {
        let n = match dim {
            1 => 1,
            2 => 3,
            _ => return Err(Error::Invalid("tensor dimension must be 1 or 2".into())),
        };
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::Shape(format!("Voigt matrix must be {n}x{n} in {dim}D")));
        }
        let amax = mat.amax().max(1e-300);
        for i in 0..n {
            for j in 0..i {
                if (mat[(i, j)] - mat[(j, i)]).abs() > 1e-12 * amax {
                    return Err(Error::Invalid("Voigt matrix must be symmetric".into()));
                }
            }
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("Voigt matrix entries must be finite".into()));
        }
        Ok(Self { dim, mat })
    }

    pub fn scalar_1d(a: f64) -> Self {
        Self { dim: 1, mat: DMatrix::from_element(1, 1, a) }
    }

    /// Isotropic plane tensor  a e = shear*e + lame*tr(e)*I, so the Voigt
    /// matrix is shear*I3 plus lame on the upper-left 2x2 block.
    pub fn isotropic_2d(shear: f64, lame: f64) -> Self {
        let mut m = DMatrix::identity(3, 3) * shear;
        m[(0, 0)] += lame;
        m[(0, 1)] += lame;
        m[(1, 0)] += lame;
        m[(1, 1)] += lame;
        Self { dim: 2, mat: m }
    }

    /// Identity on symmetric matrices; used as the reference tensor for the
    /// discrete V-norm so that shear*reference has ellipticity exactly shear.
    pub fn reference(dim: usize) -> Self {
        match dim {
            1 => Self::scalar_1d(1.0),
            _ => Self { dim: 2, mat: DMatrix::identity(3, 3) },
        }
    }

    pub fn zero(dim: usize) -> Self {
        match dim {
            1 => Self::scalar_1d(0.0),
            _ => Self { dim: 2, mat: DMatrix::zeros(3, 3) },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { dim: self.dim, mat: &self.mat * c }
    }

    /// (smallest, largest) eigenvalue of the Voigt matrix, i.e. the
    /// ellipticity and Lipschitz constants of the tensor.
    pub fn eig_bounds(&self) -> (f64, f64) {
        let ev = jacobi_eigenvalues(&self.mat);
        let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Eigenvalues of a small symmetric matrix by the cyclic Jacobi rotation
/// method. Independent of the library eigensolver, which the tests use as
/// the cross-check oracle.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "jacobi_eigenvalues needs a square matrix");
    let mut a = (m + m.transpose()) * 0.5;
    if n == 1 {
        return vec![a[(0, 0)]];
    }
    let scale = a.amax().max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                // Rotation angle from the classical Jacobi formula; branch
                // keeps |t| <= 1 for stability.
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryRole {
    Clamped,
    Contact,
    Traction,
}

/// Edge roles; 1D uses left/right only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryLabels {
    pub left: BoundaryRole,
    pub right: BoundaryRole,
    pub bottom: BoundaryRole,
    pub top: BoundaryRole,
}

impl Default for BoundaryLabels {
    fn default() -> Self {
        Self {
            left: BoundaryRole::Clamped,
            right: BoundaryRole::Traction,
            bottom: BoundaryRole::Contact,
            top: BoundaryRole::Traction,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshSpec {
    pub dimension: usize,
    /// Axis extents in meters; extent[1] is ignored in 1D.
    pub extent: [f64; 2],
    pub subdivisions: [usize; 2],
    pub boundary: BoundaryLabels,
}

impl MeshSpec {
    pub fn chain_1d(extent: f64, subdivisions: usize) -> Self {
        Self {
            dimension: 1,
            extent: [extent, 1.0],
            subdivisions: [subdivisions, 1],
            boundary: BoundaryLabels {
                left: BoundaryRole::Clamped,
                right: BoundaryRole::Contact,
                bottom: BoundaryRole::Traction,
                top: BoundaryRole::Traction,
            },
        }
    }

    pub fn rectangle_2d(extent: [f64; 2], subdivisions: [usize; 2]) -> Self {
        Self { dimension: 2, extent, subdivisions, boundary: BoundaryLabels::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 1 && self.dimension != 2 {
            return Err(Error::Invalid("mesh dimension must be 1 or 2".into()));
        }
        let axes = self.dimension;
        for ax in 0..axes {
            if !(self.extent[ax] > 0.0 && self.extent[ax].is_finite()) {
                return Err(Error::Invalid(format!("extent[{ax}] must be positive and finite")));
            }
            if self.subdivisions[ax] < 1 {
                return Err(Error::Invalid(format!("subdivisions[{ax}] must be at least 1")));
            }
        }
        // The clamped and contact parts of the boundary must both be nonempty.
        if self.dimension == 1 {
            if self.boundary.left != BoundaryRole::Clamped {
                return Err(Error::Capability("1D chain requires the left node clamped".into()));
            }
            if self.boundary.right != BoundaryRole::Contact {
                return Err(Error::Capability("1D chain requires the right node in contact".into()));
            }
        } else {
            if self.boundary.left != BoundaryRole::Clamped {
                return Err(Error::Capability(
                    "2D assembly supports only the left edge clamped".into(),
                ));
            }
            if self.boundary.bottom != BoundaryRole::Contact {
                return Err(Error::Capability(
                    "2D assembly supports only the bottom edge in contact".into(),
                ));
            }
            if self.boundary.right == BoundaryRole::Contact
                || self.boundary.top == BoundaryRole::Contact
            {
                return Err(Error::Capability("contact is limited to the bottom edge".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialSpec {
    /// kg/m^3
    pub density: f64,
    /// Viscosity tensor, Pa s.
    pub visc: VoigtTensor,
    /// Elasticity tensor, Pa.
    pub elast: VoigtTensor,
    /// Relaxation kernel amplitude; the kernel is
    /// amplitude*exp(-t/relax_tau)*reference tensor, Pa/s.
    pub relax_amplitude: f64,
    pub relax_tau: f64,
    /// Consistent (full) mass matrix instead of the default lumped one.
    pub consistent_mass: bool,
}

impl MaterialSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::Invalid("density must be positive".into()));
        }
        if self.visc.dim() != dim || self.elast.dim() != dim {
            return Err(Error::Shape("tensor dimension must match mesh dimension".into()));
        }
        let (m_a, _) = self.visc.eig_bounds();
        if m_a <= 0.0 {
            return Err(Error::Invalid(format!("viscosity tensor is not elliptic (min eig {m_a})")));
        }
        if self.relax_amplitude != 0.0 && !(self.relax_tau > 0.0) {
            return Err(Error::Invalid("relaxation time must be positive".into()));
        }
        if !self.relax_amplitude.is_finite() || self.relax_amplitude < 0.0 {
            return Err(Error::Invalid("relaxation amplitude must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// (ellipticity of visc, Lipschitz of visc, Lipschitz of elast): the
/// material constants are eigenvalue bounds of the Voigt matrices and are
/// mesh-independent.
pub fn kelvin_voigt_constants(mat: &MaterialSpec) -> (f64, f64, f64) {
    let (m_a, l_a) = mat.visc.eig_bounds();
    let (lo_b, hi_b) = mat.elast.eig_bounds();
    (m_a, l_a, hi_b.abs().max(lo_b.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile {
    Constant,
    /// sin(omega t)
    Sine { omega: f64 },
    /// Linear ramp reaching 1 at t_full, constant after.
    Ramp { t_full: f64 },
}

impl TimeProfile {
    pub fn factor(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Sine { omega } => (omega * t).sin(),
            TimeProfile::Ramp { t_full } => (t / t_full).clamp(0.0, 1.0),
        }
    }
}

/// Spatially constant body force (N/m^dim) and boundary traction (N/m^(dim-1))
/// with a shared time profile.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSpec {
    pub body: [f64; 2],
    pub traction: [f64; 2],
    pub profile: TimeProfile,
}

impl LoadSpec {
    pub fn zero() -> Self {
        Self { body: [0.0, 0.0], traction: [0.0, 0.0], profile: TimeProfile::Constant }
    }
}

/// Assembly output: the discrete problem plus the history-operator
/// ingredients (elastic stiffness, unit-amplitude relaxation stiffness).
#[derive(Debug, Clone)]
pub struct Assembled {
    pub problem: DiscreteProblem,
    pub elast_stiffness: DMatrix<f64>,
    /// Stiffness of the relaxation kernel shape (reference tensor); the
    /// kernel at lag t is relax_amplitude*exp(-t/relax_tau) times this.
    pub relax_stiffness: DMatrix<f64>,
    pub relax_amplitude: f64,
    pub relax_tau: f64,
    /// Node coordinates per dof (for initial-profile construction).
    pub dof_coords: Vec<[f64; 2]>,
    /// Component (0 = x, 1 = y) per dof.
    pub dof_component: Vec<usize>,
    /// Coordinates of the contact samples (including clamped corners).
    pub contact_coords: Vec<[f64; 2]>,
}

pub fn assemble(
    mesh: &MeshSpec,
    mat: &MaterialSpec,
    load: &LoadSpec,
    n_steps: usize,
    dt: f64,
) -> Result<Assembled> {
    mesh.validate()?;
    mat.validate(mesh.dimension)?;
    if !(dt > 0.0) || n_steps == 0 {
        return Err(Error::Invalid("need dt > 0 and at least one time step".into()));
    }
    match mesh.dimension {
        1 => assemble_1d(mesh, mat, load, n_steps, dt),
        _ => assemble_2d(mesh, mat, load, n_steps, dt),
    }
}

fn assemble_1d(
    mesh: &MeshSpec,
    mat: &MaterialSpec,
    load: &LoadSpec,
    n_steps: usize,
    dt: f64,
) -> Result<Assembled> {
    let n = mesh.subdivisions[0];
    let h = mesh.extent[0] / n as f64;
    // Node 0 clamped; dof i corresponds to node i+1.
    let n_dof = n;
    let stiff = |coeff: f64| -> DMatrix<f64> {
        let mut k = DMatrix::zeros(n_dof, n_dof);
        for e in 0..n {
            // Element e joins nodes e and e+1 (dofs e-1 and e).
            let ke = coeff / h;
            let dl = e as isize - 1;
            let dr = e;
            if dl >= 0 {
                let dl = dl as usize;
                k[(dl, dl)] += ke;
                k[(dl, dr)] -= ke;
                k[(dr, dl)] -= ke;
            }
            k[(dr, dr)] += ke;
        }
        k
    };
    let visc = stiff(mat.visc.matrix()[(0, 0)]);
    let elast = stiff(mat.elast.matrix()[(0, 0)]);
    let ref_stiff = stiff(1.0);

    let mut mass = DMatrix::zeros(n_dof, n_dof);
    for e in 0..n {
        let dl = e as isize - 1;
        let dr = e;
        if mat.consistent_mass {
            let me = mat.density * h / 6.0;
            if dl >= 0 {
                let dl = dl as usize;
                mass[(dl, dl)] += 2.0 * me;
                mass[(dl, dr)] += me;
                mass[(dr, dl)] += me;
            }
            mass[(dr, dr)] += 2.0 * me;
        } else {
            let me = mat.density * h / 2.0;
            if dl >= 0 {
                mass[(dl as usize, dl as usize)] += me;
            }
            mass[(dr, dr)] += me;
        }
    }

    // Base load: body force with trapezoid nodal weights (h interior, h/2 at
    // the free end) plus a point traction at the end node.
    let mut base = DVector::zeros(n_dof);
    for d in 0..n_dof {
        let w = if d == n_dof - 1 { h / 2.0 } else { h };
        base[d] = load.body[0] * w;
    }
    base[n_dof - 1] += load.traction[0];
    let loads: Vec<DVector<f64>> =
        (0..=n_steps).map(|k| &base * load.profile.factor(k as f64 * dt)).collect();

    // Contact at the end node: tangential and normal traces both read the
    // axial dof, the point boundary carries unit weight.
    let mut trace = DMatrix::zeros(1, n_dof);
    trace[(0, n_dof - 1)] = 1.0;
    let weights = DVector::from_element(1, 1.0);
    let contact_dofs = vec![n_dof - 1];

    let problem = DiscreteProblem::new(
        mass.clone(),
        visc,
        ref_stiff.clone(),
        mass,
        trace.clone(),
        trace,
        weights,
        contact_dofs,
        loads,
    )?;
    let dof_coords: Vec<[f64; 2]> = (0..n_dof).map(|d| [(d + 1) as f64 * h, 0.0]).collect();
    Ok(Assembled {
        problem,
        elast_stiffness: elast,
        relax_stiffness: ref_stiff,
        relax_amplitude: mat.relax_amplitude,
        relax_tau: mat.relax_tau,
        dof_coords,
        dof_component: vec![0; n_dof],
        contact_coords: vec![[mesh.extent[0], 0.0]],
    })
}

/// Per-triangle 3x6 matrix taking nodal displacements to the Mandel strain
/// vector (e11, e22, sqrt(2) e12), together with the triangle area.
fn p1_strain_matrix(coords: &[[f64; 2]; 3]) -> (DMatrix<f64>, f64) {
    let [p0, p1, p2] = *coords;
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let area = det.abs() / 2.0;
    // Gradients of the barycentric shape functions.
    let gx = [
        (p1[1] - p2[1]) / det,
        (p2[1] - p0[1]) / det,
        (p0[1] - p1[1]) / det,
    ];
    let gy = [
        (p2[0] - p1[0]) / det,
        (p0[0] - p2[0]) / det,
        (p1[0] - p0[0]) / det,
    ];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut b = DMatrix::zeros(3, 6);
    for i in 0..3 {
        b[(0, 2 * i)] = gx[i];
        b[(1, 2 * i + 1)] = gy[i];
        b[(2, 2 * i)] = s * gy[i];
        b[(2, 2 * i + 1)] = s * gx[i];
    }
    (b, area)
}

struct Grid2d {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
}

impl Grid2d {
    fn node(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    fn coords(&self, node: usize) -> [f64; 2] {
        let i = node % (self.nx + 1);
        let j = node / (self.nx + 1);
        [i as f64 * self.hx, j as f64 * self.hy]
    }

    /// Triangles of the structured mesh; each cell splits along the diagonal
    /// from its lower-left to its upper-right corner.
    fn triangles(&self) -> Vec<[usize; 3]> {
        let mut tris = Vec::with_capacity(2 * self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let n00 = self.node(i, j);
                let n10 = self.node(i + 1, j);
                let n01 = self.node(i, j + 1);
                let n11 = self.node(i + 1, j + 1);
                tris.push([n00, n10, n11]);
                tris.push([n00, n11, n01]);
            }
        }
        tris
    }
}

/// Assembles the full (unconstrained) P1 stiffness for a Voigt tensor; used
/// for every operator and exposed to the tests' independent oracle route.
fn p1_stiffness_full(grid: &Grid2d, tensor: &VoigtTensor) -> DMatrix<f64> {
    let n_nodes = (grid.nx + 1) * (grid.ny + 1);
    let mut k = DMatrix::zeros(2 * n_nodes, 2 * n_nodes);
    let d = tensor.matrix();
    for tri in grid.triangles() {
        let coords = [grid.coords(tri[0]), grid.coords(tri[1]), grid.coords(tri[2])];
        let (b, area) = p1_strain_matrix(&coords);
        let ke = b.transpose() * d * &b * area;
        for (a, &na) in tri.iter().enumerate() {
            for (c, &nc) in tri.iter().enumerate() {
                for da in 0..2 {
                    for dc in 0..2 {
                        k[(2 * na + da, 2 * nc + dc)] += ke[(2 * a + da, 2 * c + dc)];
                    }
                }
            }
        }
    }
    k
}

fn assemble_2d(
    mesh: &MeshSpec,
    mat: &MaterialSpec,
    load: &LoadSpec,
    n_steps: usize,
    dt: f64,
) -> Result<Assembled> {
    let grid = Grid2d {
        nx: mesh.subdivisions[0],
        ny: mesh.subdivisions[1],
        hx: mesh.extent[0] / mesh.subdivisions[0] as f64,
        hy: mesh.extent[1] / mesh.subdivisions[1] as f64,
    };
    let n_nodes = (grid.nx + 1) * (grid.ny + 1);

    // Full operators, then eliminate the clamped left-edge nodes.
    let visc_f = p1_stiffness_full(&grid, &mat.visc);
    let elast_f = p1_stiffness_full(&grid, &mat.elast);
    let ref_f = p1_stiffness_full(&grid, &VoigtTensor::reference(2));

    let mut mass_f = DMatrix::zeros(2 * n_nodes, 2 * n_nodes);
    for tri in grid.triangles() {
        let coords = [grid.coords(tri[0]), grid.coords(tri[1]), grid.coords(tri[2])];
        let (_, area) = p1_strain_matrix(&coords);
        if mat.consistent_mass {
            let me = mat.density * area / 12.0;
            for (a, &na) in tri.iter().enumerate() {
                for (c, &nc) in tri.iter().enumerate() {
                    let v = if a == c { 2.0 * me } else { me };
                    for comp in 0..2 {
                        mass_f[(2 * na + comp, 2 * nc + comp)] += v;
                    }
                }
            }
        } else {
            for &na in &tri {
                for comp in 0..2 {
                    mass_f[(2 * na + comp, 2 * na + comp)] += mat.density * area / 3.0;
                }
            }
        }
    }

    // Body force, lumped per triangle vertex.
    let mut base = DVector::zeros(2 * n_nodes);
    for tri in grid.triangles() {
        let coords = [grid.coords(tri[0]), grid.coords(tri[1]), grid.coords(tri[2])];
        let (_, area) = p1_strain_matrix(&coords);
        for &na in &tri {
            base[2 * na] += load.body[0] * area / 3.0;
            base[2 * na + 1] += load.body[1] * area / 3.0;
        }
    }
    // Traction on the right and top edges (trapezoid rule per edge segment).
    if mesh.boundary.right == BoundaryRole::Traction {
        for j in 0..grid.ny {
            for &node in &[grid.node(grid.nx, j), grid.node(grid.nx, j + 1)] {
                base[2 * node] += load.traction[0] * grid.hy / 2.0;
                base[2 * node + 1] += load.traction[1] * grid.hy / 2.0;
            }
        }
    }
    if mesh.boundary.top == BoundaryRole::Traction {
        for i in 0..grid.nx {
            for &node in &[grid.node(i, grid.ny), grid.node(i + 1, grid.ny)] {
                base[2 * node] += load.traction[0] * grid.hx / 2.0;
                base[2 * node + 1] += load.traction[1] * grid.hx / 2.0;
            }
        }
    }

    // Left edge clamped: both components of nodes with i = 0 are eliminated.
    let clamped = |node: usize| node % (grid.nx + 1) == 0;
    let mut dof_of_node_comp = vec![usize::MAX; 2 * n_nodes];
    let mut keep = Vec::new();
    for node in 0..n_nodes {
        if clamped(node) {
            continue;
        }
        for comp in 0..2 {
            dof_of_node_comp[2 * node + comp] = keep.len();
            keep.push(2 * node + comp);
        }
    }
    let n_dof = keep.len();
    let restrict = |m: &DMatrix<f64>| -> DMatrix<f64> {
        DMatrix::from_fn(n_dof, n_dof, |r, c| m[(keep[r], keep[c])])
    };
    let visc = restrict(&visc_f);
    let elast = restrict(&elast_f);
    let ref_stiff = restrict(&ref_f);
    let mass = restrict(&mass_f);
    let base_r = DVector::from_fn(n_dof, |r, _| base[keep[r]]);
    let loads: Vec<DVector<f64>> =
        (0..=n_steps).map(|k| &base_r * load.profile.factor(k as f64 * dt)).collect();

    // Contact samples: every bottom-edge node, including the clamped corner,
    // whose trace rows are zero but whose quadrature weight still counts
    // toward the contact measure. Tangent is +x; the outward normal is
    // (0,-1), so the normal trace reads -u_y.
    let n_contact = grid.nx + 1;
    let mut trace_tau = DMatrix::zeros(n_contact, n_dof);
    let mut trace_nu = DMatrix::zeros(n_contact, n_dof);
    let mut weights = DVector::zeros(n_contact);
    let mut contact_dofs = Vec::new();
    let mut contact_coords = Vec::new();
    for i in 0..=grid.nx {
        let node = grid.node(i, 0);
        weights[i] = if i == 0 || i == grid.nx { grid.hx / 2.0 } else { grid.hx };
        contact_coords.push(grid.coords(node));
        if clamped(node) {
            continue;
        }
        let dx = dof_of_node_comp[2 * node];
        let dy = dof_of_node_comp[2 * node + 1];
        trace_tau[(i, dx)] = 1.0;
        trace_nu[(i, dy)] = -1.0;
        contact_dofs.push(dx);
        contact_dofs.push(dy);
    }

    let problem = DiscreteProblem::new(
        mass.clone(),
        visc,
        ref_stiff.clone(),
        mass,
        trace_tau,
        trace_nu,
        weights,
        contact_dofs,
        loads,
    )?;
    let dof_coords: Vec<[f64; 2]> = keep.iter().map(|&nc| grid.coords(nc / 2)).collect();
    let dof_component: Vec<usize> = keep.iter().map(|&nc| nc % 2).collect();
    Ok(Assembled {
        problem,
        elast_stiffness: elast,
        relax_stiffness: ref_stiff,
        relax_amplitude: mat.relax_amplitude,
        relax_tau: mat.relax_tau,
        dof_coords,
        dof_component,
        contact_coords,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opnorm::coercivity_constant;
    use crate::rng::{seeded, uniform_vector};
    use approx::assert_relative_eq;
    use nalgebra::SymmetricEigen;
    use rand::Rng;

    fn unit_material_1d() -> MaterialSpec {
        MaterialSpec {
            density: 1.0,
            visc: VoigtTensor::scalar_1d(1.0),
            elast: VoigtTensor::scalar_1d(0.5),
            relax_amplitude: 0.0,
            relax_tau: 1.0,
            consistent_mass: false,
        }
    }

    #[test]
    fn two_node_chain_matches_hand_assembly() {
        let mesh = MeshSpec::chain_1d(0.7, 1);
        let mut mat = unit_material_1d();
        mat.visc = VoigtTensor::scalar_1d(3.0);
        mat.density = 2.0;
        let asm = assemble(&mesh, &mat, &LoadSpec::zero(), 3, 0.1).unwrap();
        let p = &asm.problem;
        assert_eq!(p.n_dof, 1);
        // One element of length h: stiffness a/h, lumped end mass rho*h/2.
        assert_relative_eq!(p.visc[(0, 0)], 3.0 / 0.7, epsilon = 1e-14);
        assert_relative_eq!(p.mass[(0, 0)], 2.0 * 0.7 / 2.0, epsilon = 1e-14);
        assert_relative_eq!(asm.elast_stiffness[(0, 0)], 0.5 / 0.7, epsilon = 1e-14);
        assert!(p.load.iter().all(|l| l.amax() == 0.0));
        assert_eq!(p.load.len(), 4);
    }

    #[test]
    fn chain_traces_read_the_end_node() {
        let mesh = MeshSpec::chain_1d(1.0, 4);
        let asm = assemble(&mesh, &unit_material_1d(), &LoadSpec::zero(), 1, 0.1).unwrap();
        let p = &asm.problem;
        assert_eq!(p.n_dof, 4);
        assert_eq!(p.n_contact(), 1);
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p.tau_values(&x)[0], 4.0);
        assert_eq!(p.nu_values(&x)[0], 4.0);
        assert_eq!(p.contact_measure(), 1.0);
        p.validate().unwrap();
    }

    #[test]
    fn chain_load_uses_trapezoid_weights_and_profile() {
        let mesh = MeshSpec::chain_1d(1.0, 2);
        let load = LoadSpec {
            body: [3.0, 0.0],
            traction: [0.5, 0.0],
            profile: TimeProfile::Sine { omega: 2.0 },
        };
        let asm = assemble(&mesh, &unit_material_1d(), &load, 2, 0.25).unwrap();
        let l1 = &asm.problem.load[1];
        let f = (2.0 * 0.25f64).sin();
        // Interior node gets body*h, end node body*h/2 + traction.
        assert_relative_eq!(l1[0], 3.0 * 0.5 * f, epsilon = 1e-14);
        assert_relative_eq!(l1[1], (3.0 * 0.25 + 0.5) * f, epsilon = 1e-14);
    }

    #[test]
    fn voigt_constructors_and_eigs() {
        let t = VoigtTensor::isotropic_2d(2.0, 0.5);
        let m = t.matrix();
        assert_eq!(m[(0, 0)], 2.5);
        assert_eq!(m[(0, 1)], 0.5);
        assert_eq!(m[(2, 2)], 2.0);
        // Eigenvalues of eta*I + lam*block: {eta, eta + 2 lam, eta}.
        let (lo, hi) = t.eig_bounds();
        assert_relative_eq!(lo, 2.0, epsilon = 1e-12);
        assert_relative_eq!(hi, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn kelvin_voigt_constants_examples() {
        let mut mat = MaterialSpec {
            density: 1.0,
            visc: VoigtTensor::reference(2).scaled(7.0),
            elast: VoigtTensor::isotropic_2d(1.0, 1.0),
            relax_amplitude: 0.0,
            relax_tau: 1.0,
            consistent_mass: false,
        };
        let (m_a, l_a, l_b) = kelvin_voigt_constants(&mat);
        assert_relative_eq!(m_a, 7.0, epsilon = 1e-12);
        assert_relative_eq!(l_a, 7.0, epsilon = 1e-12);
        assert_relative_eq!(l_b, 3.0, epsilon = 1e-12);
        mat.visc = mat.visc.scaled(2.0);
        let (m2, l2, _) = kelvin_voigt_constants(&mat);
        assert_relative_eq!(m2, 14.0, epsilon = 1e-12);
        assert_relative_eq!(l2, 14.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_matches_library_eigensolver() {
        let mut rng = seeded(11);
        for _ in 0..40 {
            let a = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-2.0..2.0));
            let s = (&a + a.transpose()) * 0.5;
            let mut mine = jacobi_eigenvalues(&s);
            let mut lib: Vec<f64> = SymmetricEigen::new(s.clone()).eigenvalues.iter().cloned().collect();
            mine.sort_by(f64::total_cmp);
            lib.sort_by(f64::total_cmp);
            for (x, y) in mine.iter().zip(lib.iter()) {
                assert_relative_eq!(x, y, epsilon = 1e-10, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn random_voigt_matrix_constants_match_dense_eigensolve() {
        let mut rng = seeded(12);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let s = (&a + a.transpose()) * 0.5 + DMatrix::identity(3, 3) * 2.0;
        let t = VoigtTensor::new(2, s.clone()).unwrap();
        let (lo, hi) = t.eig_bounds();
        let ev = SymmetricEigen::new(s).eigenvalues;
        let lo_o = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi_o = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_relative_eq!(lo, lo_o, epsilon = 1e-10);
        assert_relative_eq!(hi, hi_o, epsilon = 1e-10);
    }

    fn unit_material_2d() -> MaterialSpec {
        MaterialSpec {
            density: 1.0,
            visc: VoigtTensor::isotropic_2d(1.0, 1.0),
            elast: VoigtTensor::isotropic_2d(1.0, 1.0),
            relax_amplitude: 0.0,
            relax_tau: 1.0,
            consistent_mass: false,
        }
    }

    /// Independent P1 assembly in the engineering-Voigt convention
    /// (e11, e22, gamma12) with the transformed material matrix. Shares no
    /// code with the production route.
    fn engineering_p1_stiffness(
        nx: usize,
        ny: usize,
        hx: f64,
        hy: f64,
        mandel: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        let t = DMatrix::from_diagonal(&DVector::from_vec(vec![
            1.0,
            1.0,
            std::f64::consts::FRAC_1_SQRT_2,
        ]));
        let d_eng = &t * mandel * &t;
        let n_nodes = (nx + 1) * (ny + 1);
        let node = |i: usize, j: usize| j * (nx + 1) + i;
        let mut k = DMatrix::zeros(2 * n_nodes, 2 * n_nodes);
        let mut tris = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                tris.push([node(i, j), node(i + 1, j), node(i + 1, j + 1)]);
                tris.push([node(i, j), node(i + 1, j + 1), node(i, j + 1)]);
            }
        }
        for tri in tris {
            let xy: Vec<[f64; 2]> = tri
                .iter()
                .map(|&n| [(n % (nx + 1)) as f64 * hx, (n / (nx + 1)) as f64 * hy])
                .collect();
            let det = (xy[1][0] - xy[0][0]) * (xy[2][1] - xy[0][1])
                - (xy[2][0] - xy[0][0]) * (xy[1][1] - xy[0][1]);
            let area = det.abs() / 2.0;
            let gx = [
                (xy[1][1] - xy[2][1]) / det,
                (xy[2][1] - xy[0][1]) / det,
                (xy[0][1] - xy[1][1]) / det,
            ];
            let gy = [
                (xy[2][0] - xy[1][0]) / det,
                (xy[0][0] - xy[2][0]) / det,
                (xy[1][0] - xy[0][0]) / det,
            ];
            let mut b = DMatrix::zeros(3, 6);
            for i in 0..3 {
                b[(0, 2 * i)] = gx[i];
                b[(1, 2 * i + 1)] = gy[i];
                b[(2, 2 * i)] = gy[i];
                b[(2, 2 * i + 1)] = gx[i];
            }
            let ke = b.transpose() * &d_eng * &b * area;
            for (a, &na) in tri.iter().enumerate() {
                for (c, &nc) in tri.iter().enumerate() {
                    for da in 0..2 {
                        for dc in 0..2 {
                            k[(2 * na + da, 2 * nc + dc)] += ke[(2 * a + da, 2 * c + dc)];
                        }
                    }
                }
            }
        }
        k
    }

    #[test]
    fn p1_stiffness_matches_independent_engineering_assembly() {
        let mat = unit_material_2d();
        let grid = Grid2d { nx: 2, ny: 2, hx: 0.5, hy: 0.7 };
        let mine = p1_stiffness_full(&grid, &mat.visc);
        let oracle = engineering_p1_stiffness(2, 2, 0.5, 0.7, mat.visc.matrix());
        assert_eq!(mine.nrows(), oracle.nrows());
        let diff = (&mine - &oracle).amax();
        assert!(diff <= 1e-12 * oracle.amax(), "assembly mismatch {diff}");
    }

    #[test]
    fn assembled_2d_problem_is_well_formed() {
        let mesh = MeshSpec::rectangle_2d([2.0, 1.0], [4, 2]);
        let load = LoadSpec {
            body: [0.0, -1.0],
            traction: [0.5, 0.0],
            profile: TimeProfile::Constant,
        };
        let asm = assemble(&mesh, &unit_material_2d(), &load, 2, 0.1).unwrap();
        let p = &asm.problem;
        // 5x3 nodes minus 3 clamped, 2 dofs each.
        assert_eq!(p.n_dof, 2 * (15 - 3));
        assert_eq!(p.n_contact(), 5);
        p.validate().unwrap();
        // Contact measure equals the bottom edge length.
        assert_relative_eq!(p.contact_measure(), 2.0, epsilon = 1e-12);
        // The clamped corner sample has a zero trace row but real weight.
        assert_eq!(p.trace_tau.row(0).amax(), 0.0);
        assert_eq!(p.contact_weights[0], 0.25);
        // Normal trace reads -u_y on the bottom nodes.
        let mut x = DVector::zeros(p.n_dof);
        // First unclamped bottom node is the first dof pair.
        x[1] = 2.0;
        assert_eq!(p.nu_values(&x)[1], -2.0);
        assert_eq!(p.tau_values(&x)[1], 0.0);
    }

    #[test]
    fn coercivity_of_isotropic_assembly_is_the_shear_coefficient() {
        // visc = eta*reference tensor makes the discrete operator exactly
        // eta times the V-norm operator on any mesh.
        let mut mat = unit_material_2d();
        mat.visc = VoigtTensor::reference(2).scaled(2.5);
        let mesh = MeshSpec::rectangle_2d([1.0, 1.0], [3, 2]);
        let asm = assemble(&mesh, &mat, &LoadSpec::zero(), 1, 0.1).unwrap();
        let m_a = coercivity_constant(&asm.problem.visc, &asm.problem.v_norm).unwrap();
        assert_relative_eq!(m_a, 2.5, epsilon = 1e-6, max_relative = 1e-8);

        // With a volumetric part the constant cannot drop below eta.
        let mut mat2 = unit_material_2d();
        mat2.visc = VoigtTensor::isotropic_2d(2.5, 0.8);
        let asm2 = assemble(&mesh, &mat2, &LoadSpec::zero(), 1, 0.1).unwrap();
        let m_a2 = coercivity_constant(&asm2.problem.visc, &asm2.problem.v_norm).unwrap();
        assert!(m_a2 >= 2.5 - 1e-9, "volumetric part must not reduce coercivity: {m_a2}");
    }

    #[test]
    fn monotonicity_inequality_on_random_pairs() {
        let mesh = MeshSpec::rectangle_2d([1.0, 1.0], [2, 2]);
        let mat = unit_material_2d();
        let asm = assemble(&mesh, &mat, &LoadSpec::zero(), 1, 0.1).unwrap();
        let (m_a, _, _) = kelvin_voigt_constants(&mat);
        let p = &asm.problem;
        let mut rng = seeded(21);
        for _ in 0..10_000 {
            let x = uniform_vector(&mut rng, p.n_dof);
            let y = uniform_vector(&mut rng, p.n_dof);
            let d = &x - &y;
            let lhs = (&p.visc * &d).dot(&d);
            let rhs = m_a * p.v_norm_of(&d).unwrap().powi(2);
            assert!(lhs >= rhs - 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn refinement_keeps_material_constants_and_coercivity() {
        let mat = unit_material_1d();
        for subs in [2usize, 4, 8] {
            let mesh = MeshSpec::chain_1d(1.0, subs);
            let asm = assemble(&mesh, &mat, &LoadSpec::zero(), 1, 0.1).unwrap();
            let (m_a, _, _) = kelvin_voigt_constants(&mat);
            assert_eq!(m_a, 1.0);
            let c = coercivity_constant(&asm.problem.visc, &asm.problem.v_norm).unwrap();
            assert_relative_eq!(c, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let mut mesh = MeshSpec::chain_1d(1.0, 2);
        mesh.boundary.left = BoundaryRole::Traction;
        assert!(mesh.validate().is_err());

        let mesh = MeshSpec::rectangle_2d([1.0, 1.0], [0, 2]);
        assert!(mesh.validate().is_err());

        let mut mat = unit_material_1d();
        mat.visc = VoigtTensor::scalar_1d(-1.0);
        assert!(mat.validate(1).is_err());
        let mat2 = unit_material_1d();
        assert!(mat2.validate(2).is_err());
    }
}
