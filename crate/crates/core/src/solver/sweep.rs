//! One-parameter sweeps over a base configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{CutoffLevel, SimulationConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// `reg_epsilon`
    Eps,
    /// `cutoff_k`
    K,
    /// `elliptic_mu`
    Mu,
    /// Velocity modes per direction; scalar modes scale along, quadrature
    /// nodes return to their default.
    Modes,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Eps => "eps",
            SweepAxis::K => "k",
            SweepAxis::Mu => "mu",
            SweepAxis::Modes => "modes",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eps" => Ok(SweepAxis::Eps),
            "k" => Ok(SweepAxis::K),
            "mu" => Ok(SweepAxis::Mu),
            "modes" => Ok(SweepAxis::Modes),
            other => Err(Error::Config(format!(
                "unknown sweep axis `{other}` (expected eps, k, mu or modes)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl SweepSpec {
    /// Values must be finite and strictly increasing.
    pub fn new(axis: SweepAxis, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep values must be finite".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "sweep values must be sorted in strictly increasing order".into(),
            ));
        }
        let spec = Self { axis, values };
        for &v in &spec.values {
            spec.check(v)?;
        }
        Ok(spec)
    }

    fn check(&self, v: f64) -> Result<()> {
        let ok = match self.axis {
            SweepAxis::Eps | SweepAxis::Mu => v >= 0.0,
            SweepAxis::K | SweepAxis::Modes => v >= 1.0 && v.fract() == 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "value {v} is not valid for sweep axis `{}`",
                self.axis
            )))
        }
    }

    /// The base configuration with the swept parameter set to `v`.
    pub fn apply(&self, base: &SimulationConfig, v: f64) -> Result<SimulationConfig> {
        self.check(v)?;
        let mut cfg = base.clone();
        match self.axis {
            SweepAxis::Eps => cfg.reg_epsilon = v,
            SweepAxis::Mu => cfg.elliptic_mu = v,
            SweepAxis::K => cfg.cutoff_k = CutoffLevel(Some(v as u32)),
            SweepAxis::Modes => {
                let n = v as usize;
                let [bx, by] = base.velocity_modes;
                let [sx, sy] = base.scalar_modes;
                let scale = |s: usize, b: usize| ((s * n) as f64 / b as f64).round().max(1.0) as usize;
                cfg.velocity_modes = [n, n];
                cfg.scalar_modes = [scale(sx, bx), scale(sy, by)];
                cfg.quadrature_nodes = None;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Labels used for run directory names, e.g. `eps_0.01`.
    pub fn label(&self, v: f64) -> String {
        format!("{}_{v:?}", self.axis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_and_invalid() {
        assert!(SweepSpec::new(SweepAxis::Eps, vec![0.1, 0.01]).is_err());
        assert!(SweepSpec::new(SweepAxis::Eps, vec![0.1, 0.1]).is_err());
        assert!(SweepSpec::new(SweepAxis::K, vec![1.5]).is_err());
        assert!(SweepSpec::new(SweepAxis::Mu, vec![-1.0]).is_err());
        assert!(SweepSpec::new(SweepAxis::Modes, vec![]).is_err());
        assert!("bogus".parse::<SweepAxis>().is_err());
        assert_eq!("modes".parse::<SweepAxis>().unwrap(), SweepAxis::Modes);
    }

    #[test]
    fn label_format() {
        let s = SweepSpec::new(SweepAxis::Eps, vec![0.01]).unwrap();
        assert_eq!(s.label(0.01), "eps_0.01");
    }
}
