//! Line-based run configuration: `[section]` headers with `key = value`
//! pairs. Every key of every section is required, unknown keys are
//! rejected, and every parse error carries the line it came from.
//! `parse_config(serialize_config(c)) == c` holds for any valid config.

use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub msg: String,
}

impl ConfigError {
    fn at(line: usize, msg: impl Into<String>) -> Self {
        ConfigError { line: Some(line), msg: msg.into() }
    }

    pub fn keyed(msg: impl Into<String>) -> Self {
        ConfigError { line: None, msg: msg.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {}: {}", n, self.msg),
            None => write!(f, "{}", self.msg),
        }
    }
}

impl std::error::Error for ConfigError {}

pub type CResult<T> = Result<T, ConfigError>;

// ---------------------------------------------------------------------------
// Token enums. Each knows its wire form and the list of accepted values.

macro_rules! tokens {
    ($name:ident { $($variant:ident => $tok:literal),+ $(,)? }) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub fn token(self) -> &'static str {
                match self {
                    $($name::$variant => $tok),+
                }
            }

            pub fn from_token(s: &str) -> Option<Self> {
                match s {
                    $($tok => Some($name::$variant),)+
                    _ => None,
                }
            }

            pub fn expected() -> String {
                [$($tok),+].join("|")
            }
        }
    };
}

tokens!(ModelKind {
    Frictionless => "frictionless",
    NormalCompliance => "normal_compliance",
    DampedResponse => "damped_response",
});

tokens!(FrictionKind {
    Zero => "zero",
    FirstOrder => "first_order",
    Regularized => "regularized",
    Truncated => "truncated",
});

tokens!(StateKind {
    Frozen => "frozen",
    Aging => "aging",
    Slip => "slip",
    FirstOrderAging => "first_order_aging",
});

tokens!(ResponseKind {
    Quadratic => "quadratic",
    Absolute => "absolute",
});

tokens!(ModeKind {
    Picard => "picard",
    Incremental => "incremental",
});

tokens!(StencilKind {
    Midpoint => "midpoint",
    IntegralMap => "integral_map",
});

tokens!(QuadKind {
    Left => "left",
    Trapezoid => "trapezoid",
});

tokens!(ProfileKind {
    Constant => "constant",
    Sine => "sine",
    Ramp => "ramp",
});

tokens!(FieldKind {
    Zero => "zero",
    RampX => "ramp_x",
});

// ---------------------------------------------------------------------------
// The configuration itself.

#[derive(Clone, Debug, PartialEq)]
pub struct MeshSection {
    pub dimension: usize,
    pub extent_x: f64,
    pub extent_y: f64,
    pub cells_x: usize,
    pub cells_y: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialSection {
    pub density: f64,
    pub viscosity_shear: f64,
    pub viscosity_lame: f64,
    pub elasticity_shear: f64,
    pub elasticity_lame: f64,
    pub relaxation_amplitude: f64,
    pub relaxation_tau: f64,
    pub consistent_mass: bool,
}

/// Contact model plus every law parameter. Parameters not used by the
/// selected model/law (for example the pressure keys under a damped
/// response model) are carried but ignored by the scenario builder.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactSection {
    pub model: ModelKind,
    pub friction: FrictionKind,
    pub state: StateKind,
    pub direct_effect: f64,
    pub evolution_effect: f64,
    pub reference_coefficient: f64,
    pub reference_rate: f64,
    pub characteristic_slip: f64,
    pub base_state: f64,
    pub pressure_coefficient: f64,
    pub pressure_exponent: u32,
    pub pressure_saturation: f64,
    pub response: ResponseKind,
    pub response_coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeSection {
    pub mode: ModeKind,
    pub state_stencil: StencilKind,
    pub memory_quadrature: QuadKind,
    pub dt: f64,
    pub horizon: f64,
    pub outer_tol: f64,
    pub max_outer: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadSection {
    pub body_x: f64,
    pub body_y: f64,
    pub traction_x: f64,
    pub traction_y: f64,
    pub profile: ProfileKind,
    pub omega: f64,
    pub ramp_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialSection {
    pub velocity_profile: FieldKind,
    pub velocity_scale: f64,
    pub displacement_profile: FieldKind,
    pub displacement_scale: f64,
    pub state_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSection {
    pub directory: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSection,
    pub material: MaterialSection,
    pub contact: ContactSection,
    pub scheme: SchemeSection,
    pub load: LoadSection,
    pub initial: InitialSection,
    pub output: OutputSection,
}

impl RunConfig {
    /// Number of time steps; fails when the horizon is not a whole number
    /// of steps of length dt.
    pub fn steps(&self) -> CResult<usize> {
        let dt = self.scheme.dt;
        let t = self.scheme.horizon;
        if !(dt > 0.0) {
            return Err(ConfigError::keyed("key `dt`: must be positive"));
        }
        if !(t > 0.0) {
            return Err(ConfigError::keyed("key `horizon`: must be positive"));
        }
        let n = (t / dt).round();
        if n < 1.0 || (n * dt - t).abs() > 1e-9 * t.max(dt) {
            return Err(ConfigError::keyed(format!(
                "keys `horizon` and `dt`: horizon/dt = {:e} is not a whole number of steps",
                t / dt
            )));
        }
        Ok(n as usize)
    }

    /// Structural checks that do not need the assembled problem.
    pub fn validate(&self) -> CResult<()> {
        if self.mesh.dimension != 1 && self.mesh.dimension != 2 {
            return Err(ConfigError::keyed("key `dimension`: must be 1 or 2"));
        }
        if self.mesh.cells_x == 0 || (self.mesh.dimension == 2 && self.mesh.cells_y == 0) {
            return Err(ConfigError::keyed("key `cells_x`/`cells_y`: must be at least 1"));
        }
        if !(self.mesh.extent_x > 0.0) || (self.mesh.dimension == 2 && !(self.mesh.extent_y > 0.0))
        {
            return Err(ConfigError::keyed("key `extent_x`/`extent_y`: must be positive"));
        }
        if !(self.scheme.outer_tol > 0.0) {
            return Err(ConfigError::keyed("key `outer_tol`: must be positive"));
        }
        if self.scheme.max_outer == 0 {
            return Err(ConfigError::keyed("key `max_outer`: must be at least 1"));
        }
        if self.load.profile == ProfileKind::Ramp && !(self.load.ramp_time > 0.0) {
            return Err(ConfigError::keyed(
                "key `ramp_time`: must be positive for the ramp profile",
            ));
        }
        self.steps()?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Parsing.

struct SectionReader {
    name: &'static str,
    header_line: usize,
    pairs: HashMap<String, (usize, String)>,
}

impl SectionReader {
    fn take(&mut self, key: &str) -> CResult<(usize, String)> {
        self.pairs.remove(key).ok_or_else(|| {
            ConfigError::at(
                self.header_line,
                format!("section [{}]: missing key `{}`", self.name, key),
            )
        })
    }

    fn f64(&mut self, key: &str) -> CResult<f64> {
        let (line, v) = self.take(key)?;
        let x: f64 = v
            .parse()
            .map_err(|_| ConfigError::at(line, format!("key `{}`: invalid number `{}`", key, v)))?;
        if !x.is_finite() {
            return Err(ConfigError::at(line, format!("key `{}`: value must be finite", key)));
        }
        Ok(x)
    }

    fn usize(&mut self, key: &str) -> CResult<usize> {
        let (line, v) = self.take(key)?;
        v.parse().map_err(|_| {
            ConfigError::at(line, format!("key `{}`: invalid integer `{}`", key, v))
        })
    }

    fn u32(&mut self, key: &str) -> CResult<u32> {
        let (line, v) = self.take(key)?;
        v.parse().map_err(|_| {
            ConfigError::at(line, format!("key `{}`: invalid integer `{}`", key, v))
        })
    }

    fn u64(&mut self, key: &str) -> CResult<u64> {
        let (line, v) = self.take(key)?;
        v.parse().map_err(|_| {
            ConfigError::at(line, format!("key `{}`: invalid integer `{}`", key, v))
        })
    }

    fn bool(&mut self, key: &str) -> CResult<bool> {
        let (line, v) = self.take(key)?;
        match v.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(ConfigError::at(
                line,
                format!("key `{}`: expected true|false, got `{}`", key, v),
            )),
        }
    }

    fn string(&mut self, key: &str) -> CResult<String> {
        let (line, v) = self.take(key)?;
        if v.is_empty() {
            return Err(ConfigError::at(line, format!("key `{}`: value is empty", key)));
        }
        Ok(v)
    }

    fn token<T>(&mut self, key: &str, from: fn(&str) -> Option<T>, expected: String) -> CResult<T> {
        let (line, v) = self.take(key)?;
        from(&v).ok_or_else(|| {
            ConfigError::at(
                line,
                format!("key `{}`: expected one of {}, got `{}`", key, expected, v),
            )
        })
    }

    fn finish(self) -> CResult<()> {
        if let Some((key, (line, _))) = self.pairs.into_iter().min_by_key(|(_, (l, _))| *l) {
            return Err(ConfigError::at(
                line,
                format!("unknown key `{}` in section [{}]", key, self.name),
            ));
        }
        Ok(())
    }
}

const SECTION_NAMES: [&str; 7] =
    ["mesh", "material", "contact", "scheme", "load", "initial", "output"];

pub fn parse_config(text: &str) -> CResult<RunConfig> {
    let mut sections: HashMap<String, SectionReader> = HashMap::new();
    let mut current: Option<String> = None;
    let mut n_lines = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        n_lines = line_no;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line_no, "unterminated section header"))?
                .trim()
                .to_string();
            let known = SECTION_NAMES.iter().find(|s| **s == name);
            let known = *known
                .ok_or_else(|| ConfigError::at(line_no, format!("unknown section [{}]", name)))?;
            if sections.contains_key(known) {
                return Err(ConfigError::at(line_no, format!("duplicate section [{}]", name)));
            }
            sections.insert(
                name.clone(),
                SectionReader { name: known, header_line: line_no, pairs: HashMap::new() },
            );
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line_no, "expected `key = value` or `[section]`"))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::at(line_no, "empty key"));
        }
        let section = current
            .as_ref()
            .ok_or_else(|| ConfigError::at(line_no, "key = value before any [section] header"))?;
        let reader = sections.get_mut(section).expect("current section exists");
        if let Some((first, _)) = reader.pairs.get(&key) {
            return Err(ConfigError::at(
                line_no,
                format!("duplicate key `{}` (first set on line {})", key, first),
            ));
        }
        reader.pairs.insert(key, (line_no, value));
    }

    let mut reader_for = |name: &'static str| -> CResult<SectionReader> {
        sections.remove(name).ok_or_else(|| {
            ConfigError::at(n_lines.max(1), format!("missing section [{}]", name))
        })
    };

    let mut s = reader_for("mesh")?;
    let mesh = MeshSection {
        dimension: s.usize("dimension")?,
        extent_x: s.f64("extent_x")?,
        extent_y: s.f64("extent_y")?,
        cells_x: s.usize("cells_x")?,
        cells_y: s.usize("cells_y")?,
    };
    s.finish()?;

    let mut s = reader_for("material")?;
    let material = MaterialSection {
        density: s.f64("density")?,
        viscosity_shear: s.f64("viscosity_shear")?,
        viscosity_lame: s.f64("viscosity_lame")?,
        elasticity_shear: s.f64("elasticity_shear")?,
        elasticity_lame: s.f64("elasticity_lame")?,
        relaxation_amplitude: s.f64("relaxation_amplitude")?,
        relaxation_tau: s.f64("relaxation_tau")?,
        consistent_mass: s.bool("consistent_mass")?,
    };
    s.finish()?;

    let mut s = reader_for("contact")?;
    let contact = ContactSection {
        model: s.token("model", ModelKind::from_token, ModelKind::expected())?,
        friction: s.token("friction", FrictionKind::from_token, FrictionKind::expected())?,
        state: s.token("state", StateKind::from_token, StateKind::expected())?,
        direct_effect: s.f64("direct_effect")?,
        evolution_effect: s.f64("evolution_effect")?,
        reference_coefficient: s.f64("reference_coefficient")?,
        reference_rate: s.f64("reference_rate")?,
        characteristic_slip: s.f64("characteristic_slip")?,
        base_state: s.f64("base_state")?,
        pressure_coefficient: s.f64("pressure_coefficient")?,
        pressure_exponent: s.u32("pressure_exponent")?,
        pressure_saturation: s.f64("pressure_saturation")?,
        response: s.token("response", ResponseKind::from_token, ResponseKind::expected())?,
        response_coefficient: s.f64("response_coefficient")?,
    };
    s.finish()?;

    let mut s = reader_for("scheme")?;
    let scheme = SchemeSection {
        mode: s.token("mode", ModeKind::from_token, ModeKind::expected())?,
        state_stencil: s.token(
            "state_stencil",
            StencilKind::from_token,
            StencilKind::expected(),
        )?,
        memory_quadrature: s.token(
            "memory_quadrature",
            QuadKind::from_token,
            QuadKind::expected(),
        )?,
        dt: s.f64("dt")?,
        horizon: s.f64("horizon")?,
        outer_tol: s.f64("outer_tol")?,
        max_outer: s.usize("max_outer")?,
    };
    s.finish()?;

    let mut s = reader_for("load")?;
    let load = LoadSection {
        body_x: s.f64("body_x")?,
        body_y: s.f64("body_y")?,
        traction_x: s.f64("traction_x")?,
        traction_y: s.f64("traction_y")?,
        profile: s.token("profile", ProfileKind::from_token, ProfileKind::expected())?,
        omega: s.f64("omega")?,
        ramp_time: s.f64("ramp_time")?,
    };
    s.finish()?;

    let mut s = reader_for("initial")?;
    let initial = InitialSection {
        velocity_profile: s.token(
            "velocity_profile",
            FieldKind::from_token,
            FieldKind::expected(),
        )?,
        velocity_scale: s.f64("velocity_scale")?,
        displacement_profile: s.token(
            "displacement_profile",
            FieldKind::from_token,
            FieldKind::expected(),
        )?,
        displacement_scale: s.f64("displacement_scale")?,
        state_value: s.f64("state_value")?,
    };
    s.finish()?;

    let mut s = reader_for("output")?;
    let output = OutputSection { directory: s.string("directory")?, seed: s.u64("seed")? };
    s.finish()?;

    Ok(RunConfig { mesh, material, contact, scheme, load, initial, output })
}

// ---------------------------------------------------------------------------
// Serialization. Floats use the shortest exponent form that parses back to
// the same double, so parse(serialize(c)) == c exactly.

fn push_kv(out: &mut String, key: &str, value: impl fmt::Display) {
    out.push_str(key);
    out.push_str(" = ");
    out.push_str(&value.to_string());
    out.push('\n');
}

fn push_f(out: &mut String, key: &str, value: f64) {
    push_kv(out, key, format_args!("{:e}", value));
}

pub fn serialize_config(c: &RunConfig) -> String {
    let mut s = String::new();

    s.push_str("[mesh]\n");
    push_kv(&mut s, "dimension", c.mesh.dimension);
    push_f(&mut s, "extent_x", c.mesh.extent_x);
    push_f(&mut s, "extent_y", c.mesh.extent_y);
    push_kv(&mut s, "cells_x", c.mesh.cells_x);
    push_kv(&mut s, "cells_y", c.mesh.cells_y);

    s.push_str("\n[material]\n");
    push_f(&mut s, "density", c.material.density);
    push_f(&mut s, "viscosity_shear", c.material.viscosity_shear);
    push_f(&mut s, "viscosity_lame", c.material.viscosity_lame);
    push_f(&mut s, "elasticity_shear", c.material.elasticity_shear);
    push_f(&mut s, "elasticity_lame", c.material.elasticity_lame);
    push_f(&mut s, "relaxation_amplitude", c.material.relaxation_amplitude);
    push_f(&mut s, "relaxation_tau", c.material.relaxation_tau);
    push_kv(&mut s, "consistent_mass", c.material.consistent_mass);

    s.push_str("\n[contact]\n");
    push_kv(&mut s, "model", c.contact.model.token());
    push_kv(&mut s, "friction", c.contact.friction.token());
    push_kv(&mut s, "state", c.contact.state.token());
    push_f(&mut s, "direct_effect", c.contact.direct_effect);
    push_f(&mut s, "evolution_effect", c.contact.evolution_effect);
    push_f(&mut s, "reference_coefficient", c.contact.reference_coefficient);
    push_f(&mut s, "reference_rate", c.contact.reference_rate);
    push_f(&mut s, "characteristic_slip", c.contact.characteristic_slip);
    push_f(&mut s, "base_state", c.contact.base_state);
    push_f(&mut s, "pressure_coefficient", c.contact.pressure_coefficient);
    push_kv(&mut s, "pressure_exponent", c.contact.pressure_exponent);
    push_f(&mut s, "pressure_saturation", c.contact.pressure_saturation);
    push_kv(&mut s, "response", c.contact.response.token());
    push_f(&mut s, "response_coefficient", c.contact.response_coefficient);

    s.push_str("\n[scheme]\n");
    push_kv(&mut s, "mode", c.scheme.mode.token());
    push_kv(&mut s, "state_stencil", c.scheme.state_stencil.token());
    push_kv(&mut s, "memory_quadrature", c.scheme.memory_quadrature.token());
    push_f(&mut s, "dt", c.scheme.dt);
    push_f(&mut s, "horizon", c.scheme.horizon);
    push_f(&mut s, "outer_tol", c.scheme.outer_tol);
    push_kv(&mut s, "max_outer", c.scheme.max_outer);

    s.push_str("\n[load]\n");
    push_f(&mut s, "body_x", c.load.body_x);
    push_f(&mut s, "body_y", c.load.body_y);
    push_f(&mut s, "traction_x", c.load.traction_x);
    push_f(&mut s, "traction_y", c.load.traction_y);
    push_kv(&mut s, "profile", c.load.profile.token());
    push_f(&mut s, "omega", c.load.omega);
    push_f(&mut s, "ramp_time", c.load.ramp_time);

    s.push_str("\n[initial]\n");
    push_kv(&mut s, "velocity_profile", c.initial.velocity_profile.token());
    push_f(&mut s, "velocity_scale", c.initial.velocity_scale);
    push_kv(&mut s, "displacement_profile", c.initial.displacement_profile.token());
    push_f(&mut s, "displacement_scale", c.initial.displacement_scale);
    push_f(&mut s, "state_value", c.initial.state_value);

    s.push_str("\n[output]\n");
    push_kv(&mut s, "directory", &c.output.directory);
    push_kv(&mut s, "seed", c.output.seed);

    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn every_preset_round_trips_exactly() {
        for name in presets::PRESET_NAMES {
            let cfg = presets::preset(name).unwrap();
            cfg.validate().unwrap();
            let text = serialize_config(&cfg);
            let back = parse_config(&text).unwrap();
            assert_eq!(back, cfg, "round trip failed for preset {}", name);
            // And once more through the serializer: identical bytes.
            assert_eq!(serialize_config(&back), text);
        }
    }

    #[test]
    fn shortest_float_form_survives_the_round_trip() {
        let mut cfg = presets::preset("chain-1d").unwrap();
        cfg.contact.base_state = -10.819778284410283;
        cfg.scheme.dt = 1.0 / 3.0;
        cfg.scheme.horizon = cfg.scheme.dt * 7.0;
        let back = parse_config(&serialize_config(&cfg)).unwrap();
        assert_eq!(back.contact.base_state.to_bits(), cfg.contact.base_state.to_bits());
        assert_eq!(back.scheme.dt.to_bits(), cfg.scheme.dt.to_bits());
        assert_eq!(back.scheme.horizon.to_bits(), cfg.scheme.horizon.to_bits());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let base = serialize_config(&presets::preset("chain-1d").unwrap());

        // Unknown key: inserted right after the [mesh] header (line 1).
        let text = base.replacen("[mesh]\n", "[mesh]\nwibble = 3\n", 1);
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.to_string().contains("unknown key `wibble`"), "{}", err);

        // Bad number points at its own line and names the key.
        let text = base.replace("density = 1e0", "density = fast");
        let err = parse_config(&text).unwrap_err();
        assert!(err.line.is_some());
        assert!(err.to_string().contains("key `density`"), "{}", err);

        // Bad token lists the accepted values.
        let text = base.replace("mode = picard", "mode = sideways");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("picard|incremental"), "{}", err);

        // Missing key is reported against the section header.
        let text = base.replace("outer_tol = 1e-10\n", "");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("missing key `outer_tol`"), "{}", err);
        assert!(err.line.is_some());

        // Duplicate key.
        let text = base.replace("seed = 7", "seed = 7\nseed = 8");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("duplicate key `seed`"), "{}", err);

        // Key before any section.
        let err = parse_config("a = 1\n").unwrap_err();
        assert_eq!(err.line, Some(1));

        // Missing section.
        let text = base.replace("[output]", "[mesh2]");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("unknown section"), "{}", err);
        let text: String =
            base.lines().take_while(|l| !l.starts_with("[output]")).collect::<Vec<_>>().join("\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("missing section [output]"), "{}", err);
        assert!(err.line.is_some());

        // Non-finite values are rejected at parse time.
        let text = base.replace("body_x = 2e0", "body_x = inf");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("finite"), "{}", err);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let base = serialize_config(&presets::preset("frictionless").unwrap());
        let text = format!("# header comment\n\n{}", base.replace("dt = ", "dt =   # t\ndt2junk"));
        // The mangled dt line now reads `dt =` with a trailing comment and a
        // junk continuation; both must fail loudly, not silently.
        assert!(parse_config(&text).is_err());

        let commented = base.replace("[scheme]", "[scheme]  # time stepping");
        let cfg = parse_config(&commented).unwrap();
        assert_eq!(cfg, presets::preset("frictionless").unwrap());
    }

    #[test]
    fn step_count_must_divide_the_horizon() {
        let mut cfg = presets::preset("chain-1d").unwrap();
        assert_eq!(cfg.steps().unwrap(), 100);
        cfg.scheme.dt = 3e-4;
        let err = cfg.steps().unwrap_err();
        assert!(err.to_string().contains("`horizon`"), "{}", err);
        assert!(err.to_string().contains("`dt`"), "{}", err);
        cfg.scheme.dt = -1.0;
        assert!(cfg.steps().unwrap_err().to_string().contains("`dt`"));
    }
}
