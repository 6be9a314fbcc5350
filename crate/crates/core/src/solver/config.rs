use std::f64::consts::PI;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constitutive::{
    preset_giesekus, preset_oldroyd_b, FreeEnergyModel, Giesekus, MaterialCoefficients, OldroydB,
};
use crate::error::{Error, Result};
use crate::regularization::StickSlipParams;
use crate::spectral::Rectangle;

/// Material model: a named preset or an explicit function table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum ModelSpec {
    OldroydB(OldroydB),
    Giesekus(Giesekus),
    Custom {
        free_energy: FreeEnergyModel,
        coefficients: MaterialCoefficients,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<(FreeEnergyModel, MaterialCoefficients)> {
        match self {
            ModelSpec::OldroydB(p) => preset_oldroyd_b(p),
            ModelSpec::Giesekus(p) => preset_giesekus(p),
            ModelSpec::Custom {
                free_energy,
                coefficients,
            } => {
                coefficients.check_bounds()?;
                Ok((free_energy.clone(), coefficients.clone()))
            }
        }
    }
}

/// Scalar initial field on the rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Constant {
        value: f64,
    },
    /// `mean + amplitude cos(iπx/lx) cos(jπy/ly)`
    CosineMode {
        mean: f64,
        amplitude: f64,
        i: usize,
        j: usize,
    },
    /// `base + amplitude f(r)` with `f = 1` for `r ≤ radius`, `f = 0` for
    /// `r ≥ radius + width` and a C¹ cubic ramp in between.
    Plateau {
        base: f64,
        amplitude: f64,
        center: [f64; 2],
        radius: f64,
        width: f64,
    },
    /// `base + amplitude exp(-r²/width²)`
    Bump {
        base: f64,
        amplitude: f64,
        center: [f64; 2],
        width: f64,
    },
}

impl ScalarField {
    pub fn eval(&self, rect: &Rectangle, x: f64, y: f64) -> f64 {
        match *self {
            ScalarField::Constant { value } => value,
            ScalarField::CosineMode {
                mean,
                amplitude,
                i,
                j,
            } => {
                mean + amplitude
                    * (i as f64 * PI * x / rect.lx).cos()
                    * (j as f64 * PI * y / rect.ly).cos()
            }
            ScalarField::Plateau {
                base,
                amplitude,
                center,
                radius,
                width,
            } => {
                let r = (x - center[0]).hypot(y - center[1]);
                let s = ((r - radius) / width).clamp(0.0, 1.0);
                base + amplitude * (1.0 - s * s * (3.0 - 2.0 * s))
            }
            ScalarField::Bump {
                base,
                amplitude,
                center,
                width,
            } => {
                let r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
                base + amplitude * (-r2 / (width * width)).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficient {
    pub i: usize,
    pub j: usize,
    pub c: f64,
}

/// Divergence-free velocity field.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VelocitySpec {
    #[default]
    Zero,
    /// Explicit basis coefficients (1-based wave numbers).
    Modes { modes: Vec<ModeCoefficient> },
    /// Streamfunction `amplitude sin²(πx/lx) sin²(πy/ly)`.
    Vortex { amplitude: f64 },
}

impl VelocitySpec {
    /// Point value for the fields that are not given by coefficients.
    pub fn eval(&self, rect: &Rectangle, x: f64, y: f64) -> [f64; 2] {
        match self {
            VelocitySpec::Zero | VelocitySpec::Modes { .. } => [0.0, 0.0],
            VelocitySpec::Vortex { amplitude } => {
                let (a, b) = (PI / rect.lx, PI / rect.ly);
                let (sx, cx) = (a * x).sin_cos();
                let (sy, cy) = (b * y).sin_cos();
                // ψ = A sx² sy²; v = (∂yψ, -∂xψ)
                [
                    amplitude * sx * sx * 2.0 * b * sy * cy,
                    -amplitude * 2.0 * a * sx * cx * sy * sy,
                ]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodyForce {
    #[default]
    Zero,
    Constant {
        value: [f64; 2],
    },
    /// `amplitude (sin(πx/lx) cos(πy/ly), -(ly/lx) cos(πx/lx) sin(πy/ly))`
    TaylorGreenLike {
        amplitude: f64,
    },
}

impl BodyForce {
    pub fn eval(&self, rect: &Rectangle, x: f64, y: f64) -> [f64; 2] {
        match *self {
            BodyForce::Zero => [0.0, 0.0],
            BodyForce::Constant { value } => value,
            BodyForce::TaylorGreenLike { amplitude } => {
                let (sx, cx) = (PI * x / rect.lx).sin_cos();
                let (sy, cy) = (PI * y / rect.ly).sin_cos();
                [
                    amplitude * sx * cy,
                    -amplitude * rect.ly / rect.lx * cx * sy,
                ]
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, BodyForce::Zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Velocity prescribed and frozen.
    Kinematic,
    #[default]
    Dynamic,
}

/// Convective cut-off level: a positive integer or `"off"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CutoffLevel(pub Option<u32>);

impl Serialize for CutoffLevel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(k) => s.serialize_u32(k),
            None => s.serialize_str("off"),
        }
    }
}

impl<'de> Deserialize<'de> for CutoffLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Level(u32),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Level(0) => Err(serde::de::Error::custom("cutoff_k must be at least 1")),
            Raw::Level(k) => Ok(CutoffLevel(Some(k))),
            Raw::Word(w) if w == "off" => Ok(CutoffLevel(None)),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "cutoff_k must be a positive integer or \"off\", got \"{w}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step; `None` allows the whole time span.
    pub max_step: Option<f64>,
    pub safety: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            max_step: None,
            safety: 0.9,
            max_steps: 200_000,
            initial_step: None,
        }
    }
}

impl OdeSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("ode.{what} must be positive")));
        if !(self.rel_tol > 0.0) {
            return bad("rel_tol");
        }
        if !(self.abs_tol > 0.0) {
            return bad("abs_tol");
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(Error::Config("ode.safety must lie in (0, 1)".into()));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return bad("max_step");
            }
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0) {
                return bad("initial_step");
            }
        }
        if self.max_steps == 0 {
            return bad("max_steps");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub theta0: ScalarField,
    pub b0: ScalarField,
    #[serde(default)]
    pub v0: VelocitySpec,
}

fn default_plot_grid() -> [usize; 2] {
    [128, 128]
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default = "default_plot_grid")]
    pub plot_grid: [usize; 2],
    /// Record a budget row every `budget_stride` accepted steps (and always
    /// at snapshot times and the final time).
    #[serde(default = "default_stride")]
    pub budget_stride: usize,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            snapshots: Vec::new(),
            plot_grid: default_plot_grid(),
            budget_stride: default_stride(),
        }
    }
}

fn free_slip() -> StickSlipParams {
    StickSlipParams::free_slip()
}

/// Complete description of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub domain: Rectangle,
    pub velocity_modes: [usize; 2],
    pub scalar_modes: [usize; 2],
    #[serde(default)]
    pub quadrature_nodes: Option<[usize; 2]>,
    pub model: ModelSpec,
    #[serde(default)]
    pub reg_epsilon: f64,
    #[serde(default)]
    pub cutoff_k: CutoffLevel,
    #[serde(default)]
    pub elliptic_mu: f64,
    #[serde(default = "free_slip")]
    pub stickslip: StickSlipParams,
    #[serde(default)]
    pub body_force: BodyForce,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub prescribed_velocity: Option<VelocitySpec>,
    pub t_span: [f64; 2],
    #[serde(default)]
    pub ode: OdeSettings,
    pub initial: InitialData,
    #[serde(default)]
    pub output: OutputSettings,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("{e} (line {}, column {})", e.line(), e.column()))
        })?;
        Ok(cfg)
    }

    /// Checks everything that can be checked without building the model.
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.velocity_modes.contains(&0) || self.scalar_modes.contains(&0) {
            return Err(Error::Config("mode counts must be at least 1".into()));
        }
        if !(self.reg_epsilon >= 0.0 && self.reg_epsilon.is_finite()) {
            return Err(Error::Config("reg_epsilon must be finite and >= 0".into()));
        }
        if !(self.elliptic_mu >= 0.0 && self.elliptic_mu.is_finite()) {
            return Err(Error::Config("elliptic_mu must be finite and >= 0".into()));
        }
        self.stickslip.validate()?;
        let [t0, t1] = self.t_span;
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::Config(format!(
                "t_span [{t0}, {t1}] must be increasing"
            )));
        }
        self.ode.validate()?;
        if let Some(bad) = self.output.snapshots.iter().find(|&&t| !(t >= t0 && t <= t1)) {
            return Err(Error::Config(format!(
                "snapshot time {bad} lies outside t_span"
            )));
        }
        if self.output.budget_stride == 0 {
            return Err(Error::Config("output.budget_stride must be >= 1".into()));
        }
        if self.output.plot_grid.iter().any(|&n| n < 2) {
            return Err(Error::Config("output.plot_grid must be at least 2x2".into()));
        }
        if self.mode == Mode::Dynamic && self.prescribed_velocity.is_some() {
            return Err(Error::Config(
                "prescribed_velocity is only allowed in kinematic mode".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "domain": {"lx": 1.0, "ly": 1.0},
        "velocity_modes": [4, 4],
        "scalar_modes": [6, 6],
        "model": {"preset": "oldroyd_b", "c_v": 1.0, "theta_ref": 1.0, "mu_elastic": 1.0,
                  "nu1": 1.0, "mu_tilde": 0.1, "nu_visc": 0.1, "kappa_heat": 0.1},
        "t_span": [0.0, 0.1],
        "initial": {"theta0": {"kind": "constant", "value": 1.0},
                    "b0": {"kind": "constant", "value": 1.0}}
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = SimulationConfig::from_json(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.cutoff_k, CutoffLevel(None));
        assert_eq!(cfg.mode, Mode::Dynamic);
        assert_eq!(cfg.output.plot_grid, [128, 128]);
        assert!(cfg.stickslip.is_free_slip());
        let (_, c) = cfg.model.build().unwrap();
        assert_eq!(c.b_min, 0.5);
    }

    #[test]
    fn cutoff_level_forms() {
        let k: CutoffLevel = serde_json::from_str("3").unwrap();
        assert_eq!(k.0, Some(3));
        let k: CutoffLevel = serde_json::from_str("\"off\"").unwrap();
        assert_eq!(k.0, None);
        assert!(serde_json::from_str::<CutoffLevel>("\"on\"").is_err());
        assert!(serde_json::from_str::<CutoffLevel>("0").is_err());
        assert_eq!(serde_json::to_string(&CutoffLevel(None)).unwrap(), "\"off\"");
    }

    #[test]
    fn errors_name_the_location() {
        let broken = MINIMAL.replace("\"velocity_modes\"", "\"velocity_mode\"");
        let err = SimulationConfig::from_json(&broken).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
        let mut cfg = SimulationConfig::from_json(MINIMAL).unwrap();
        cfg.t_span = [1.0, 0.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn giesekus_preset_parses() {
        let text = MINIMAL.replace("\"oldroyd_b\"", "\"giesekus\", \"a_g\": 1.5");
        let cfg = SimulationConfig::from_json(&text).unwrap();
        assert!(matches!(cfg.model.build(), Err(Error::Parameter { .. })));
    }

    #[test]
    fn vortex_is_divergence_free() {
        let rect = Rectangle::new(1.0, 2.0).unwrap();
        let v = VelocitySpec::Vortex { amplitude: 0.3 };
        let h = 1e-6;
        for &(x, y) in &[(0.3, 0.7), (0.9, 1.9), (0.5, 1.0)] {
            let div = (v.eval(&rect, x + h, y)[0] - v.eval(&rect, x - h, y)[0]) / (2.0 * h)
                + (v.eval(&rect, x, y + h)[1] - v.eval(&rect, x, y - h)[1]) / (2.0 * h);
            assert!(div.abs() < 1e-8);
        }
        let f = BodyForce::TaylorGreenLike { amplitude: 1.0 };
        let div = (f.eval(&rect, 0.4 + h, 0.3)[0] - f.eval(&rect, 0.4 - h, 0.3)[0]) / (2.0 * h)
            + (f.eval(&rect, 0.4, 0.3 + h)[1] - f.eval(&rect, 0.4, 0.3 - h)[1]) / (2.0 * h);
        assert!(div.abs() < 1e-8);
    }

    #[test]
    fn plateau_is_c1() {
        let rect = Rectangle::new(1.0, 1.0).unwrap();
        let f = ScalarField::Plateau {
            base: 1.1,
            amplitude: 0.4,
            center: [0.5, 0.5],
            radius: 0.1,
            width: 0.2,
        };
        assert_eq!(f.eval(&rect, 0.5, 0.5), 1.5);
        assert!((f.eval(&rect, 0.95, 0.5) - 1.1).abs() < 1e-15);
        let h = 1e-7;
        for &x in &[0.6, 0.8] {
            let left = (f.eval(&rect, x, 0.5) - f.eval(&rect, x - h, 0.5)) / h;
            let right = (f.eval(&rect, x + h, 0.5) - f.eval(&rect, x, 0.5)) / h;
            assert!((left - right).abs() < 1e-5);
        }
    }
}
