//! Rate-and-state friction coefficients, state evolution right-hand sides,
//! normal compliance, and damped normal response, together with closed-form
//! Lipschitz/growth constants for the first-order laws and randomized probes
//! that measure every structural inequality the solver analysis relies on.

use std::sync::Arc;

use nalgebra::DVector;

use crate::rng::seeded;
use crate::{Error, Result};
use rand::Rng;

/// Rate-and-state parameter set. `alpha0` is the linearization base state;
/// an optional per-contact-node field overrides it node by node.
#[derive(Clone, Debug, PartialEq)]
pub struct RsfParams {
    pub direct: f64,      // a, direct velocity effect
    pub evolution: f64,   // b, state effect
    pub mu_ref: f64,      // friction coefficient at the reference slip rate
    pub v_ref: f64,       // reference slip rate
    pub d_c: f64,         // characteristic slip distance
    pub alpha0: f64,      // base state for linearization
    pub alpha0_field: Option<DVector<f64>>,
}

impl RsfParams {
    /// Laboratory-scale granite-like values; the base state is the steady
    /// state at the reference rate over the characteristic distance.
    pub fn reference() -> Self {
        let v_ref = 1e-9;
        let d_c = 5e-5;
        RsfParams {
            direct: 0.011,
            evolution: 0.014,
            mu_ref: 0.7,
            v_ref,
            d_c,
            alpha0: (v_ref / d_c).ln(),
            alpha0_field: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.direct > 0.0) || !self.direct.is_finite() {
            return Err(Error::Invalid("direct effect must be positive".into()));
        }
        if !self.evolution.is_finite() || self.evolution < 0.0 {
            return Err(Error::Invalid("evolution effect must be finite and >= 0".into()));
        }
        if !(self.v_ref > 0.0) || !(self.d_c > 0.0) {
            return Err(Error::Invalid("reference rate and slip distance must be positive".into()));
        }
        if !self.mu_ref.is_finite() || !self.alpha0.is_finite() {
            return Err(Error::Invalid("reference coefficient and base state must be finite".into()));
        }
        if let Some(f) = &self.alpha0_field {
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid("base state field must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn alpha0_at(&self, node: usize) -> f64 {
        match &self.alpha0_field {
            Some(f) => f[node],
            None => self.alpha0,
        }
    }

    fn alpha0_values(&self) -> Vec<f64> {
        match &self.alpha0_field {
            Some(f) => f.iter().copied().collect(),
            None => vec![self.alpha0],
        }
    }

    /// Regularization rate at state alpha: the slip rate where the
    /// regularized law's argument reaches 1/2.
    pub fn v_alpha(&self, alpha: f64) -> Result<f64> {
        let e = -(self.mu_ref + self.evolution * alpha) / self.direct;
        let v = self.v_ref * e.exp();
        if !v.is_finite() || v == 0.0 {
            return Err(Error::Domain(format!(
                "regularization rate degenerate at state {alpha}: {v}"
            )));
        }
        Ok(v)
    }

    /// Prefactor of the first-order law at the node's base state:
    /// exp((mu_ref + b alpha0)/a) / (2 v_ref).
    pub fn first_order_prefactor(&self, node: usize) -> Result<f64> {
        let a0 = self.alpha0_at(node);
        let ex = (self.mu_ref + self.evolution * a0) / self.direct;
        if ex > 700.0 {
            return Err(Error::Domain(format!("first-order prefactor overflows: exponent {ex}")));
        }
        let e = ex.exp() / (2.0 * self.v_ref);
        if !e.is_finite() {
            return Err(Error::Domain("first-order prefactor not finite".into()));
        }
        Ok(e)
    }

}

/// Declared coefficient constants: the two-argument Lipschitz triple and the
/// linear growth triple.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MuConstants {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
}

impl MuConstants {
    pub fn validate(&self) -> Result<()> {
        for v in [self.l1, self.l2, self.l3, self.kappa1, self.kappa2, self.kappa3] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Invalid("coefficient constants must be finite and >= 0".into()));
            }
        }
        Ok(())
    }
}

/// User-supplied friction coefficient with declared constants.
#[derive(Clone)]
pub struct DeclaredMu {
    pub f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub constants: MuConstants,
    pub name: String,
}

impl std::fmt::Debug for DeclaredMu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DeclaredMu({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub enum FrictionLaw {
    /// mu = a asinh(r / (2 v_alpha(alpha))), the full regularized law.
    Regularized(RsfParams),
    /// mu = a log+(r / v_alpha(alpha)); exactly zero below the threshold.
    Truncated(RsfParams),
    /// mu = a asinh(E r max(0, 1 + (b/a)(alpha - alpha0))), first order in
    /// the state around alpha0. Coincides with the regularized law at alpha0.
    FirstOrder(RsfParams),
    /// User coefficient with declared Lipschitz/growth constants.
    BoundedLipschitz(DeclaredMu),
    /// mu identically zero.
    Zero,
    /// Inner law evaluated at min(r, cap): composition with the slip-rate
    /// truncation keeps all constants.
    RateCapped(Box<FrictionLaw>, f64),
}

impl FrictionLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            FrictionLaw::Regularized(p) | FrictionLaw::Truncated(p) | FrictionLaw::FirstOrder(p) => {
                p.validate()
            }
            FrictionLaw::BoundedLipschitz(d) => d.constants.validate(),
            FrictionLaw::Zero => Ok(()),
            FrictionLaw::RateCapped(inner, cap) => {
                if !(*cap > 0.0) || !cap.is_finite() {
                    return Err(Error::Invalid("rate cap must be positive and finite".into()));
                }
                inner.validate()
            }
        }
    }

    /// Coefficient at slip rate r >= 0 and state alpha, using the node's
    /// base state where the law has one.
    pub fn mu_at(&self, node: usize, r: f64, alpha: f64) -> Result<f64> {
        if !r.is_finite() || !alpha.is_finite() {
            return Err(Error::Domain("coefficient arguments must be finite".into()));
        }
        if r < 0.0 {
            return Err(Error::Domain(format!("slip rate must be >= 0, got {r}")));
        }
        match self {
            FrictionLaw::Regularized(p) => {
                let va = p.v_alpha(alpha)?;
                Ok(p.direct * (r / (2.0 * va)).asinh())
            }
            FrictionLaw::Truncated(p) => {
                if r == 0.0 {
                    return Ok(0.0);
                }
                let va = p.v_alpha(alpha)?;
                if r <= va {
                    Ok(0.0)
                } else {
                    Ok(p.direct * (r / va).ln())
                }
            }
            FrictionLaw::FirstOrder(p) => {
                let e = p.first_order_prefactor(node)?;
                let bracket =
                    1.0 + (p.evolution / p.direct) * (alpha - p.alpha0_at(node));
                let clamped = bracket.max(0.0);
                Ok(p.direct * (e * r * clamped).asinh())
            }
            FrictionLaw::BoundedLipschitz(d) => {
                let v = (d.f)(r, alpha);
                if !v.is_finite() {
                    return Err(Error::Domain("declared coefficient returned non-finite".into()));
                }
                Ok(v)
            }
            FrictionLaw::Zero => Ok(0.0),
            FrictionLaw::RateCapped(inner, cap) => inner.mu_at(node, r.min(*cap), alpha),
        }
    }

    pub fn mu(&self, r: f64, alpha: f64) -> Result<f64> {
        self.mu_at(0, r, alpha)
    }

    /// Closed-form constants: available for the first-order law (maximized
    /// over the base-state field), declared laws, the zero law, and caps of
    /// those; the genuinely nonlinear-in-state laws have none.
    pub fn constants(&self) -> Result<MuConstants> {
        match self {
            FrictionLaw::FirstOrder(p) => {
                let mut c = MuConstants::default();
                for (i, a0) in p.alpha0_values().iter().enumerate() {
                    let e = p.first_order_prefactor(i)?;
                    let sqrt_e = e.sqrt();
                    let (a, b) = (p.direct, p.evolution);
                    c.l1 = c.l1.max(e * (a - b * a0).abs());
                    c.l2 = c.l2.max(e * b);
                    c.l3 = c.l3.max(e * b);
                    c.kappa1 = c.kappa1.max(sqrt_e * (a + (b * a0).abs()));
                    c.kappa2 = c.kappa2.max(sqrt_e * b);
                    c.kappa3 = c.kappa3.max(sqrt_e * a);
                }
                c.validate()?;
                Ok(c)
            }
            FrictionLaw::BoundedLipschitz(d) => {
                d.constants.validate()?;
                Ok(d.constants)
            }
            FrictionLaw::Zero => Ok(MuConstants::default()),
            FrictionLaw::RateCapped(inner, _) => inner.constants(),
            FrictionLaw::Regularized(_) | FrictionLaw::Truncated(_) => Err(Error::Capability(
                "no closed-form constants for the fully state-nonlinear laws; \
                 use the first-order law or declare constants"
                    .into(),
            )),
        }
    }
}

/// User-supplied state evolution right-hand side with a declared global
/// Lipschitz constant in (alpha, r).
#[derive(Clone)]
pub struct DeclaredG {
    pub f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub lipschitz: f64,
    pub name: String,
}

impl std::fmt::Debug for DeclaredG {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DeclaredG({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub enum StateLaw {
    /// d alpha/dt = (v_ref exp(-alpha) - r) / d_c.
    Aging(RsfParams),
    /// d alpha/dt = -(r/d_c)(ln(r/v_ref) + alpha); zero at r = 0.
    Slip(RsfParams),
    /// First-order aging around alpha0:
    /// d alpha/dt = (v_ref exp(-alpha0)(1 - alpha + alpha0) - r) / d_c.
    FirstOrderAging(RsfParams),
    /// User right-hand side with a declared Lipschitz constant.
    Lipschitz(DeclaredG),
    /// State frozen at its initial value (right-hand side zero).
    Frozen,
}

impl StateLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            StateLaw::Aging(p) | StateLaw::Slip(p) | StateLaw::FirstOrderAging(p) => p.validate(),
            StateLaw::Lipschitz(d) => {
                if !d.lipschitz.is_finite() || d.lipschitz < 0.0 {
                    return Err(Error::Invalid("declared Lipschitz constant must be >= 0".into()));
                }
                Ok(())
            }
            StateLaw::Frozen => Ok(()),
        }
    }

    /// Right-hand side at (alpha, r) for the given contact node.
    pub fn g_at(&self, node: usize, alpha: f64, r: f64) -> Result<f64> {
        if !alpha.is_finite() || !r.is_finite() {
            return Err(Error::Domain("state law arguments must be finite".into()));
        }
        if r < 0.0 {
            return Err(Error::Domain(format!("slip rate must be >= 0, got {r}")));
        }
        match self {
            StateLaw::Aging(p) => {
                let e = -alpha;
                if e > 700.0 {
                    return Err(Error::Domain(format!("aging law overflows at state {alpha}")));
                }
                Ok((p.v_ref * e.exp() - r) / p.d_c)
            }
            StateLaw::Slip(p) => {
                if r == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(-(r / p.d_c) * ((r / p.v_ref).ln() + alpha))
                }
            }
            StateLaw::FirstOrderAging(p) => {
                let a0 = p.alpha0_at(node);
                Ok((p.v_ref * (-a0).exp() * (1.0 - alpha + a0) - r) / p.d_c)
            }
            StateLaw::Lipschitz(d) => {
                let v = (d.f)(alpha, r);
                if !v.is_finite() {
                    return Err(Error::Domain("declared state law returned non-finite".into()));
                }
                Ok(v)
            }
            StateLaw::Frozen => Ok(0.0),
        }
    }

    pub fn g(&self, alpha: f64, r: f64) -> Result<f64> {
        self.g_at(0, alpha, r)
    }

    /// Global Lipschitz constant in (alpha, r): closed form for the
    /// first-order aging law, declared or zero otherwise; the exponential
    /// and slip laws have none.
    pub fn lipschitz_constant(&self) -> Result<f64> {
        match self {
            StateLaw::FirstOrderAging(p) => {
                let mut best = 0.0f64;
                for a0 in p.alpha0_values() {
                    best = best.max((p.v_ref * (-a0).exp()).max(1.0) / p.d_c);
                }
                Ok(best)
            }
            StateLaw::Lipschitz(d) => Ok(d.lipschitz),
            StateLaw::Frozen => Ok(0.0),
            StateLaw::Aging(_) | StateLaw::Slip(_) => Err(Error::Capability(
                "no global Lipschitz constant for the exponential/slip state laws".into(),
            )),
        }
    }
}

/// Normal compliance: p(r) = 0 for r <= 0, c_p r^m up to r_star, then
/// saturated at p_star = c_p r_star^m.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplianceLaw {
    pub c_p: f64,
    pub exponent: u32,
    pub r_star: f64,
}

impl ComplianceLaw {
    pub fn new(c_p: f64, exponent: u32, r_star: f64) -> Result<Self> {
        let law = ComplianceLaw { c_p, exponent, r_star };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_p >= 0.0) || !self.c_p.is_finite() {
            return Err(Error::Invalid("compliance coefficient must be finite and >= 0".into()));
        }
        if self.exponent < 1 {
            return Err(Error::Invalid("compliance exponent must be >= 1".into()));
        }
        if !(self.r_star > 0.0) || !self.r_star.is_finite() {
            return Err(Error::Invalid("compliance saturation must be positive".into()));
        }
        Ok(())
    }

    pub fn pressure(&self, penetration: f64) -> f64 {
        if penetration <= 0.0 {
            0.0
        } else if penetration <= self.r_star {
            self.c_p * penetration.powi(self.exponent as i32)
        } else {
            self.p_star()
        }
    }

    /// Saturation pressure.
    pub fn p_star(&self) -> f64 {
        self.c_p * self.r_star.powi(self.exponent as i32)
    }

    /// Global Lipschitz constant: slope at the saturation knee.
    pub fn lipschitz(&self) -> f64 {
        self.c_p * self.exponent as f64 * self.r_star.powi(self.exponent as i32 - 1)
    }
}

/// User damped-response superpotential with declared structure.
#[derive(Clone)]
pub struct DeclaredJnu {
    pub value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Generalized directional derivative (r, s) -> j°(r; s).
    pub dirderiv: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub convex: bool,
    pub c0: f64,
    pub c1: f64,
    /// One-sided Lipschitz modulus of the subdifferential (zero iff the
    /// pairing inequality holds with margin zero, as for convex j).
    pub m_jnu: f64,
    pub name: String,
}

impl std::fmt::Debug for DeclaredJnu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DeclaredJnu({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub enum DampedResponseLaw {
    /// j(r) = kappa r^2 / 2; smooth, folds into the quadratic part.
    Quadratic { kappa: f64 },
    /// j(r) = kappa |r|; convex nonsmooth.
    Absolute { kappa: f64 },
    /// User superpotential with declared constants and convexity flag.
    Declared(DeclaredJnu),
}

impl DampedResponseLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            DampedResponseLaw::Quadratic { kappa } | DampedResponseLaw::Absolute { kappa } => {
                if !(*kappa >= 0.0) || !kappa.is_finite() {
                    return Err(Error::Invalid("damped response weight must be finite and >= 0".into()));
                }
                Ok(())
            }
            DampedResponseLaw::Declared(d) => {
                for v in [d.c0, d.c1, d.m_jnu] {
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::Invalid(
                            "declared superpotential constants must be finite and >= 0".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            DampedResponseLaw::Quadratic { kappa } => 0.5 * kappa * r * r,
            DampedResponseLaw::Absolute { kappa } => kappa * r.abs(),
            DampedResponseLaw::Declared(d) => (d.value)(r),
        }
    }

    /// Generalized directional derivative j°(r; s).
    pub fn dirderiv(&self, r: f64, s: f64) -> f64 {
        match self {
            DampedResponseLaw::Quadratic { kappa } => kappa * r * s,
            DampedResponseLaw::Absolute { kappa } => {
                if r == 0.0 {
                    kappa * s.abs()
                } else {
                    kappa * r.signum() * s
                }
            }
            DampedResponseLaw::Declared(d) => (d.dirderiv)(r, s),
        }
    }

    /// Subgradient growth bound |xi| <= c0 + c1 |r|.
    pub fn growth(&self) -> (f64, f64) {
        match self {
            DampedResponseLaw::Quadratic { kappa } => (0.0, *kappa),
            DampedResponseLaw::Absolute { kappa } => (*kappa, 0.0),
            DampedResponseLaw::Declared(d) => (d.c0, d.c1),
        }
    }

    /// One-sided modulus in the pairing inequality
    /// j°(r1; r2-r1) + j°(r2; r1-r2) <= m (r1-r2)^2; zero for convex laws.
    pub fn pairing_modulus(&self) -> f64 {
        match self {
            DampedResponseLaw::Quadratic { .. } | DampedResponseLaw::Absolute { .. } => 0.0,
            DampedResponseLaw::Declared(d) => d.m_jnu,
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            DampedResponseLaw::Quadratic { .. } | DampedResponseLaw::Absolute { .. } => true,
            DampedResponseLaw::Declared(d) => d.convex,
        }
    }

    /// Proximal map argmin_w { j(w) + (w - x)^2 / (2 t) } for the shipped
    /// convex variants.
    pub fn prox(&self, t: f64, x: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Invalid("prox step must be positive".into()));
        }
        match self {
            DampedResponseLaw::Quadratic { kappa } => Ok(x / (1.0 + t * kappa)),
            DampedResponseLaw::Absolute { kappa } => {
                let s = t * kappa;
                Ok(x.signum() * (x.abs() - s).max(0.0))
            }
            DampedResponseLaw::Declared(_) => Err(Error::Capability(
                "no proximal map for user superpotentials".into(),
            )),
        }
    }
}

// ---------------------------------------------------------------------------
// Inequality claims about asinh used by the closed-form constants.

#[derive(Clone, Copy, Debug)]
pub struct ClaimReport {
    pub n_samples: usize,
    /// min over samples of (bound - value) for |asinh(b x)| <= |b| + |x|.
    pub worst_margin_growth: f64,
    /// min over samples for the two-point difference bound.
    pub worst_margin_difference: f64,
    pub violations: usize,
}

/// Randomized check of the two asinh inequalities behind the closed-form
/// constants: the growth bound |asinh(b x)| <= |b| + |x| and the difference
/// bound |asinh(b1 x1) - asinh(b2 x2)| <= |b1||x1 - x2| + |x2||b1 - b2|.
/// Samples are uniform on [-10, 10]^4; slack 1e-12.
pub fn arcsinh_claim_check(n_samples: usize, seed: u64) -> ClaimReport {
    let mut rng = seeded(seed);
    let mut worst_g = f64::INFINITY;
    let mut worst_d = f64::INFINITY;
    let mut violations = 0usize;
    const SLACK: f64 = 1e-12;
    for _ in 0..n_samples {
        let b1: f64 = rng.gen_range(-10.0..10.0);
        let x1: f64 = rng.gen_range(-10.0..10.0);
        let b2: f64 = rng.gen_range(-10.0..10.0);
        let x2: f64 = rng.gen_range(-10.0..10.0);

        let mg = (b1.abs() + x1.abs()) - (b1 * x1).asinh().abs();
        worst_g = worst_g.min(mg);
        if mg < -SLACK {
            violations += 1;
        }

        let lhs = ((b1 * x1).asinh() - (b2 * x2).asinh()).abs();
        let rhs = b1.abs() * (x1 - x2).abs() + x2.abs() * (b1 - b2).abs();
        let md = rhs - lhs;
        worst_d = worst_d.min(md);
        if md < -SLACK {
            violations += 1;
        }
    }
    ClaimReport {
        n_samples,
        worst_margin_growth: worst_g,
        worst_margin_difference: worst_d,
        violations,
    }
}

// ---------------------------------------------------------------------------
// Qualitative sign structure of the laws.

#[derive(Clone, Copy, Debug)]
pub struct SignReport {
    /// max over the grid of d(state rhs)/d alpha; healing requires < 0.
    pub max_state_slope: f64,
    /// min over the grid of d mu/d r; velocity strengthening requires > 0.
    pub min_rate_slope: f64,
    /// min over the unclamped grid of d mu/d alpha; state strengthening.
    pub min_state_strengthening: f64,
    /// true when b = 0, which legitimately flattens the state direction.
    pub neutral_state: bool,
    pub pass: bool,
}

/// Finite-difference sign check of the monotonicity structure on a grid over
/// the given state and rate windows.
pub fn qualitative_sign_check(
    friction: &FrictionLaw,
    state: &StateLaw,
    alpha_window: (f64, f64),
    r_window: (f64, f64),
    n_grid: usize,
) -> Result<SignReport> {
    if n_grid < 2 || !(alpha_window.1 > alpha_window.0) || !(r_window.1 >= r_window.0) {
        return Err(Error::Invalid("degenerate sign-check window".into()));
    }
    if r_window.0 < 0.0 || !(r_window.1 > 0.0) {
        return Err(Error::Invalid("rate window must be nonnegative with positive width".into()));
    }
    let q = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n_grid - 1) as f64;
    let h_a = (alpha_window.1 - alpha_window.0) * 1e-6;
    let mut max_state_slope = f64::NEG_INFINITY;
    let mut min_rate_slope = f64::INFINITY;
    let mut min_state_str = f64::INFINITY;
    let neutral_state = match friction {
        FrictionLaw::Regularized(p) | FrictionLaw::Truncated(p) | FrictionLaw::FirstOrder(p) => {
            p.evolution == 0.0
        }
        _ => false,
    };
    // Inside the first-order clamp the coefficient is legitimately flat in
    // the state; restrict the strengthening check to the unclamped region.
    let unclamped = |alpha: f64| match friction {
        FrictionLaw::FirstOrder(p) => {
            p.evolution == 0.0
                || 1.0 + (p.evolution / p.direct) * (alpha - p.alpha0_at(0)) > 1e-3
        }
        _ => true,
    };
    for ia in 0..n_grid {
        let alpha = q(alpha_window.0, alpha_window.1, ia);
        for ir in 0..n_grid {
            let r = q(r_window.0, r_window.1, ir);
            let h_r = 1e-6 * r.max(r_window.1 * 1e-3);

            let gs = (state.g(alpha + h_a, r)? - state.g(alpha - h_a, r)?) / (2.0 * h_a);
            max_state_slope = max_state_slope.max(gs);

            let rp = friction.mu(r + h_r, alpha)?;
            let rm = friction.mu((r - h_r).max(0.0), alpha)?;
            min_rate_slope = min_rate_slope.min((rp - rm) / (r + h_r - (r - h_r).max(0.0)));

            if r > 0.0 && !neutral_state && unclamped(alpha) {
                let ap = friction.mu(r, alpha + h_a)?;
                let am = friction.mu(r, alpha - h_a)?;
                min_state_str = min_state_str.min((ap - am) / (2.0 * h_a));
            }
        }
    }
    if min_state_str == f64::INFINITY {
        min_state_str = 0.0;
    }
    let pass = max_state_slope < 0.0
        && min_rate_slope > 0.0
        && (neutral_state || min_state_str >= 0.0);
    Ok(SignReport {
        max_state_slope,
        min_rate_slope,
        min_state_strengthening: min_state_str,
        neutral_state,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Curve sampling and deviation slopes for the linearization quality.

#[derive(Clone, Copy, Debug)]
pub struct CurveSample {
    pub alpha: f64,
    pub exact: f64,
    pub first_order: f64,
}

/// Sample the exact (regularized) and first-order coefficients at fixed slip
/// rate r over a state window.
pub fn mu_curves(
    params: &RsfParams,
    alpha_lo: f64,
    alpha_hi: f64,
    n_points: usize,
    r: f64,
) -> Result<Vec<CurveSample>> {
    let exact = FrictionLaw::Regularized(params.clone());
    let approx = FrictionLaw::FirstOrder(params.clone());
    sample_pair(alpha_lo, alpha_hi, n_points, |alpha| {
        Ok((exact.mu(r, alpha)?, approx.mu(r, alpha)?))
    })
}

/// Sample the exact (aging) and first-order state right-hand sides at fixed
/// slip rate r over a state window.
pub fn g_curves(
    params: &RsfParams,
    alpha_lo: f64,
    alpha_hi: f64,
    n_points: usize,
    r: f64,
) -> Result<Vec<CurveSample>> {
    let exact = StateLaw::Aging(params.clone());
    let approx = StateLaw::FirstOrderAging(params.clone());
    sample_pair(alpha_lo, alpha_hi, n_points, |alpha| {
        Ok((exact.g(alpha, r)?, approx.g(alpha, r)?))
    })
}

fn sample_pair(
    lo: f64,
    hi: f64,
    n_points: usize,
    mut f: impl FnMut(f64) -> Result<(f64, f64)>,
) -> Result<Vec<CurveSample>> {
    if n_points < 2 || !(hi > lo) {
        return Err(Error::Invalid("curve window needs at least two points".into()));
    }
    let mut out = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let alpha = lo + (hi - lo) * i as f64 / (n_points - 1) as f64;
        let (exact, first_order) = f(alpha)?;
        out.push(CurveSample { alpha, exact, first_order });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    Coefficient,
    StateRhs,
}

/// Max |exact - first_order| over a rate grid at state offsets alpha0 +- d,
/// with the fitted log-log slope of deviation against offset. Quadratic
/// contact of the linearization shows as slope ~= 2.
pub fn deviation_slope(
    kind: CurveKind,
    params: &RsfParams,
    offsets: &[f64],
    r_max: f64,
    n_r: usize,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if offsets.len() < 2 {
        return Err(Error::Invalid("need at least two offsets to fit a slope".into()));
    }
    let a0 = params.alpha0;
    let mut pts = Vec::with_capacity(offsets.len());
    for &d in offsets {
        if !(d > 0.0) {
            return Err(Error::Invalid("offsets must be positive".into()));
        }
        let mut dev = 0.0f64;
        for side in [-1.0, 1.0] {
            let alpha = a0 + side * d;
            for i in 0..n_r {
                let r = r_max * (i + 1) as f64 / n_r as f64;
                let gap = match kind {
                    CurveKind::Coefficient => {
                        let exact = FrictionLaw::Regularized(params.clone()).mu(r, alpha)?;
                        let fo = FrictionLaw::FirstOrder(params.clone()).mu(r, alpha)?;
                        (exact - fo).abs()
                    }
                    CurveKind::StateRhs => {
                        let exact = StateLaw::Aging(params.clone()).g(alpha, r)?;
                        let fo = StateLaw::FirstOrderAging(params.clone()).g(alpha, r)?;
                        (exact - fo).abs()
                    }
                };
                dev = dev.max(gap);
            }
        }
        if dev == 0.0 {
            return Err(Error::Invalid("zero deviation; slope undefined".into()));
        }
        pts.push((d, dev));
    }
    Ok((fit_loglog_slope(&pts), pts))
}

/// Least-squares slope of ln(y) against ln(x).
pub fn fit_loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

// ---------------------------------------------------------------------------
// Randomized structural-inequality probes (shared with the acceptance run).

#[derive(Clone, Copy, Debug)]
pub struct ProbeOutcome {
    pub n_samples: usize,
    pub violations: usize,
    /// min over samples of (bound - value) / sample scale; a value below
    /// -PROBE_SLACK is a violation.
    pub worst_margin: f64,
}

pub const PROBE_SLACK: f64 = 1e-10;

/// Per-sample normalization: margins are divided by the magnitude of the
/// quantities entering the comparison, so the slack is a relative rounding
/// allowance across wildly different parameter scales.
fn tally(margin: f64, scale: f64, worst: &mut f64, violations: &mut usize) {
    let normalized = margin / scale.max(1e-300);
    *worst = worst.min(normalized);
    if normalized < -PROBE_SLACK {
        *violations += 1;
    }
}

/// Two-point Lipschitz inequality of the coefficient against declared
/// constants: |mu(r1,y1) - mu(r2,y2)| <= (L1 + L2|y2|)|r1-r2| + L3|r1||y1-y2|
/// over r in [0, r_hi], y in [y_lo, y_hi].
pub fn probe_mu_lipschitz(
    law: &FrictionLaw,
    c: &MuConstants,
    r_hi: f64,
    y_window: (f64, f64),
    n_samples: usize,
    seed: u64,
) -> Result<ProbeOutcome> {
    let mut rng = seeded(seed);
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for _ in 0..n_samples {
        let r1 = rng.gen_range(0.0..=r_hi);
        let r2 = rng.gen_range(0.0..=r_hi);
        let y1 = rng.gen_range(y_window.0..=y_window.1);
        let y2 = rng.gen_range(y_window.0..=y_window.1);
        let lhs = (law.mu(r1, y1)? - law.mu(r2, y2)?).abs();
        let rhs = (c.l1 + c.l2 * y2.abs()) * (r1 - r2).abs() + c.l3 * r1 * (y1 - y2).abs();
        tally(rhs - lhs, rhs.max(lhs).max(1.0), &mut worst, &mut violations);
    }
    Ok(ProbeOutcome { n_samples, violations, worst_margin: worst })
}

/// Growth inequality |mu(r,y)| <= kappa1 + kappa2|y| + kappa3|r|.
pub fn probe_mu_growth(
    law: &FrictionLaw,
    c: &MuConstants,
    r_hi: f64,
    y_window: (f64, f64),
    n_samples: usize,
    seed: u64,
) -> Result<ProbeOutcome> {
    let mut rng = seeded(seed);
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for _ in 0..n_samples {
        let r = rng.gen_range(0.0..=r_hi);
        let y = rng.gen_range(y_window.0..=y_window.1);
        let lhs = law.mu(r, y)?.abs();
        let rhs = c.kappa1 + c.kappa2 * y.abs() + c.kappa3 * r;
        tally(rhs - lhs, rhs.max(lhs).max(1.0), &mut worst, &mut violations);
    }
    Ok(ProbeOutcome { n_samples, violations, worst_margin: worst })
}

/// State-law Lipschitz inequality |G(a1,r1) - G(a2,r2)| <= L(|a1-a2|+|r1-r2|)
/// over the given windows.
pub fn probe_state_lipschitz(
    law: &StateLaw,
    lipschitz: f64,
    r_hi: f64,
    y_window: (f64, f64),
    n_samples: usize,
    seed: u64,
) -> Result<ProbeOutcome> {
    let mut rng = seeded(seed);
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for _ in 0..n_samples {
        let r1 = rng.gen_range(0.0..=r_hi);
        let r2 = rng.gen_range(0.0..=r_hi);
        let y1 = rng.gen_range(y_window.0..=y_window.1);
        let y2 = rng.gen_range(y_window.0..=y_window.1);
        let lhs = (law.g(y1, r1)? - law.g(y2, r2)?).abs();
        let rhs = lipschitz * ((y1 - y2).abs() + (r1 - r2).abs());
        tally(rhs - lhs, rhs.max(lhs).max(1.0), &mut worst, &mut violations);
    }
    Ok(ProbeOutcome { n_samples, violations, worst_margin: worst })
}

/// Compliance Lipschitz inequality |p(r1) - p(r2)| <= L_p |r1 - r2| together
/// with 0 <= p <= p_star, sampled over [-r_star, 3 r_star].
pub fn probe_compliance(
    law: &ComplianceLaw,
    n_samples: usize,
    seed: u64,
) -> Result<ProbeOutcome> {
    let mut rng = seeded(seed);
    let l_p = law.lipschitz();
    let p_star = law.p_star();
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for _ in 0..n_samples {
        let r1 = rng.gen_range(-law.r_star..=3.0 * law.r_star);
        let r2 = rng.gen_range(-law.r_star..=3.0 * law.r_star);
        let (p1, p2) = (law.pressure(r1), law.pressure(r2));
        let lip = l_p * (r1 - r2).abs() - (p1 - p2).abs();
        tally(lip, (l_p * (r1 - r2).abs()).max(1.0), &mut worst, &mut violations);
        tally(p_star - p1, p_star.max(1.0), &mut worst, &mut violations);
        tally(p1, p_star.max(1.0), &mut worst, &mut violations);
    }
    Ok(ProbeOutcome { n_samples, violations, worst_margin: worst })
}

/// Damped-response structure: subgradient growth via j°(r; ±1) and the
/// pairing inequality j°(r1; r2-r1) + j°(r2; r1-r2) <= m (r1-r2)^2. The
/// diagonal r1 = r2 is sampled explicitly; there the margin is exactly zero.
pub fn probe_damped_response(
    law: &DampedResponseLaw,
    r_hi: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ProbeOutcome> {
    let mut rng = seeded(seed);
    let (c0, c1) = law.growth();
    let m = law.pairing_modulus();
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for i in 0..n_samples {
        let r1 = rng.gen_range(-r_hi..=r_hi);
        // Exercise the diagonal explicitly on part of the budget.
        let r2 = if i % 8 == 0 { r1 } else { rng.gen_range(-r_hi..=r_hi) };
        let slope = law.dirderiv(r1, 1.0).max(law.dirderiv(r1, -1.0)).max(0.0);
        let growth_bound = c0 + c1 * r1.abs();
        tally(
            growth_bound - slope,
            growth_bound.max(slope).max(1.0),
            &mut worst,
            &mut violations,
        );
        let pair_sum = law.dirderiv(r1, r2 - r1) + law.dirderiv(r2, r1 - r2);
        let pair_bound = m * (r1 - r2) * (r1 - r2);
        tally(
            pair_bound - pair_sum,
            pair_bound.abs().max(pair_sum.abs()).max(1.0),
            &mut worst,
            &mut violations,
        );
    }
    Ok(ProbeOutcome { n_samples, violations, worst_margin: worst })
}
