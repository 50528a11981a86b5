//! Turns a parsed RunConfig into the assembled problem, history kernel,
//! contact model, and scheme inputs the solver library consumes.

use anyhow::{Context, Result};
use nalgebra::DVector;

use stickslip::assembly::{
    assemble, Assembled, LoadSpec, MaterialSpec, MeshSpec, TimeProfile, VoigtTensor,
};
use stickslip::friction::{
    ComplianceLaw, DampedResponseLaw, FrictionLaw, RsfParams, StateLaw,
};
use stickslip::history::{HistoryKernel, HistoryQuadrature};
use stickslip::scheme::{AlphaStencil, InitialState, SchemeConfig, SchemeMode};
use stickslip::step::{ContactModel, SolveOpts};

use crate::config::*;

pub struct Scenario {
    pub assembled: Assembled,
    pub kernel: HistoryKernel,
    pub model: ContactModel,
    pub scheme: SchemeConfig,
    pub init: InitialState,
    pub params: RsfParams,
    pub seed: u64,
}

impl Scenario {
    pub fn state_law(&self) -> &StateLaw {
        &self.scheme.state_law
    }
}

fn rsf_params(c: &ContactSection) -> Result<RsfParams> {
    let params = RsfParams {
        direct: c.direct_effect,
        evolution: c.evolution_effect,
        mu_ref: c.reference_coefficient,
        v_ref: c.reference_rate,
        d_c: c.characteristic_slip,
        alpha0: c.base_state,
        alpha0_field: None,
    };
    params.validate().context("contact section: rate-and-state parameters")?;
    Ok(params)
}

fn friction_law(kind: FrictionKind, params: &RsfParams) -> FrictionLaw {
    match kind {
        FrictionKind::Zero => FrictionLaw::Zero,
        FrictionKind::FirstOrder => FrictionLaw::FirstOrder(params.clone()),
        FrictionKind::Regularized => FrictionLaw::Regularized(params.clone()),
        FrictionKind::Truncated => FrictionLaw::Truncated(params.clone()),
    }
}

fn state_law(kind: StateKind, params: &RsfParams) -> StateLaw {
    match kind {
        StateKind::Frozen => StateLaw::Frozen,
        StateKind::Aging => StateLaw::Aging(params.clone()),
        StateKind::Slip => StateLaw::Slip(params.clone()),
        StateKind::FirstOrderAging => StateLaw::FirstOrderAging(params.clone()),
    }
}

fn contact_model(c: &ContactSection, params: &RsfParams) -> Result<ContactModel> {
    let model = match c.model {
        ModelKind::Frictionless => ContactModel::Frictionless,
        ModelKind::NormalCompliance => ContactModel::NormalCompliance {
            pressure: ComplianceLaw::new(
                c.pressure_coefficient,
                c.pressure_exponent,
                c.pressure_saturation,
            )
            .context("contact section: pressure law")?,
            friction: friction_law(c.friction, params),
        },
        ModelKind::DampedResponse => {
            let kappa = c.response_coefficient;
            let normal = match c.response {
                ResponseKind::Quadratic => DampedResponseLaw::Quadratic { kappa },
                ResponseKind::Absolute => DampedResponseLaw::Absolute { kappa },
            };
            ContactModel::DampedResponse { normal, friction: friction_law(c.friction, params) }
        }
    };
    model.validate().context("contact section")?;
    Ok(model)
}

/// Nodal field from a named profile: `zero`, or `ramp_x` which sets the
/// x-component of every dof to scale * (x coordinate) and leaves other
/// components at zero.
fn field(asm: &Assembled, kind: FieldKind, scale: f64) -> DVector<f64> {
    let n = asm.problem.n_dof;
    match kind {
        FieldKind::Zero => DVector::zeros(n),
        FieldKind::RampX => DVector::from_fn(n, |i, _| {
            if asm.dof_component[i] == 0 {
                scale * asm.dof_coords[i][0]
            } else {
                0.0
            }
        }),
    }
}

pub fn build(cfg: &RunConfig) -> Result<Scenario> {
    cfg.validate()?;
    let n_steps = cfg.steps()?;
    let dt = cfg.scheme.dt;

    let mesh = match cfg.mesh.dimension {
        1 => MeshSpec::chain_1d(cfg.mesh.extent_x, cfg.mesh.cells_x),
        _ => MeshSpec::rectangle_2d(
            [cfg.mesh.extent_x, cfg.mesh.extent_y],
            [cfg.mesh.cells_x, cfg.mesh.cells_y],
        ),
    };

    let m = &cfg.material;
    let (visc, elast) = if cfg.mesh.dimension == 1 {
        (VoigtTensor::scalar_1d(m.viscosity_shear), VoigtTensor::scalar_1d(m.elasticity_shear))
    } else {
        (
            VoigtTensor::isotropic_2d(m.viscosity_shear, m.viscosity_lame),
            VoigtTensor::isotropic_2d(m.elasticity_shear, m.elasticity_lame),
        )
    };
    let material = MaterialSpec {
        density: m.density,
        visc,
        elast,
        relax_amplitude: m.relaxation_amplitude,
        relax_tau: m.relaxation_tau,
        consistent_mass: m.consistent_mass,
    };

    let profile = match cfg.load.profile {
        ProfileKind::Constant => TimeProfile::Constant,
        ProfileKind::Sine => TimeProfile::Sine { omega: cfg.load.omega },
        ProfileKind::Ramp => TimeProfile::Ramp { t_full: cfg.load.ramp_time },
    };
    let load = LoadSpec {
        body: [cfg.load.body_x, cfg.load.body_y],
        traction: [cfg.load.traction_x, cfg.load.traction_y],
        profile,
    };

    let assembled = assemble(&mesh, &material, &load, n_steps, dt).context("assembly")?;

    let params = rsf_params(&cfg.contact)?;
    let model = contact_model(&cfg.contact, &params)?;
    let law = state_law(cfg.contact.state, &params);

    let quadrature = match cfg.scheme.memory_quadrature {
        QuadKind::Left => HistoryQuadrature::LeftRectangle,
        QuadKind::Trapezoid => HistoryQuadrature::Trapezoid,
    };
    let u0 = field(&assembled, cfg.initial.displacement_profile, cfg.initial.displacement_scale);
    let mut kernel = HistoryKernel::from_assembled(&assembled, u0.clone(), quadrature)
        .context("history kernel")?;
    kernel.sample_lags(dt, n_steps);

    let scheme = SchemeConfig {
        dt,
        n_steps,
        outer_tol: cfg.scheme.outer_tol,
        max_outer: cfg.scheme.max_outer,
        mode: match cfg.scheme.mode {
            ModeKind::Picard => SchemeMode::Picard,
            ModeKind::Incremental => SchemeMode::Incremental,
        },
        stencil: match cfg.scheme.state_stencil {
            StencilKind::Midpoint => AlphaStencil::Midpoint,
            StencilKind::IntegralMap => AlphaStencil::PicardLambda,
        },
        state_law: law,
        solve_opts: SolveOpts::default(),
    };

    let w0 = field(&assembled, cfg.initial.velocity_profile, cfg.initial.velocity_scale);
    let alpha0 =
        DVector::from_element(assembled.problem.n_contact(), cfg.initial.state_value);
    let init = InitialState { w0, u0, alpha0 };
    init.validate(&assembled.problem).context("initial state")?;

    Ok(Scenario {
        assembled,
        kernel,
        model,
        scheme,
        init,
        params,
        seed: cfg.output.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn every_preset_builds_a_consistent_scenario() {
        for name in presets::PRESET_NAMES {
            let cfg = presets::preset(name).unwrap();
            let sc = build(&cfg).expect(name);
            let n = sc.assembled.problem.n_dof;
            assert_eq!(sc.kernel.n_dof(), n, "{}", name);
            assert_eq!(sc.init.w0.len(), n, "{}", name);
            assert_eq!(sc.init.alpha0.len(), sc.assembled.problem.n_contact(), "{}", name);
            assert_eq!(sc.scheme.n_steps, cfg.steps().unwrap(), "{}", name);
        }
    }

    #[test]
    fn chain_ramp_matches_the_node_spacing() {
        let cfg = presets::preset("chain-1d").unwrap();
        let sc = build(&cfg).unwrap();
        let h = cfg.mesh.extent_x / cfg.mesh.cells_x as f64;
        for i in 0..sc.assembled.problem.n_dof {
            let expect = (i + 1) as f64 * h;
            assert!((sc.init.w0[i] - expect).abs() < 1e-15);
            assert!((sc.init.u0[i] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn two_d_ramp_only_touches_x_components() {
        let cfg = presets::preset("rsf-compliance").unwrap();
        let sc = build(&cfg).unwrap();
        for i in 0..sc.assembled.problem.n_dof {
            if sc.assembled.dof_component[i] == 1 {
                assert_eq!(sc.init.w0[i], 0.0);
            }
        }
        assert!(sc.init.w0.amax() > 0.0);
    }

    #[test]
    fn invalid_step_count_is_rejected_before_assembly() {
        let mut cfg = presets::preset("chain-1d").unwrap();
        cfg.scheme.dt = 3e-4;
        let err = match build(&cfg) {
            Err(e) => e,
            Ok(_) => panic!("non-integral step count accepted"),
        };
        assert!(err.to_string().contains("`dt`"));
    }
}
