use std::path::Path;

use serde::{Deserialize, Serialize};

use super::density::check_probability;
use crate::error::{Error, Result};

/// Gate-level noise applied by the density-matrix simulator: depolarizing
/// after every gate plus a symmetric readout confusion at measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub p_readout: f64,
    #[serde(default)]
    pub label: String,
}

impl NoiseModel {
    pub fn new(label: impl Into<String>, p1: f64, p2: f64, p_readout: f64) -> Result<Self> {
        let m = NoiseModel { p1, p2, p_readout, label: label.into() };
        m.validate()?;
        Ok(m)
    }

    pub fn noiseless() -> Self {
        NoiseModel { p1: 0.0, p2: 0.0, p_readout: 0.0, label: "noiseless".into() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2), ("p_readout", self.p_readout)] {
            check_probability(p).map_err(|_| Error::validation(format!("{name} = {p} outside [0, 1)")))?;
        }
        Ok(())
    }

    /// `p' = p(1-e) + (1-p)e` for the probability `p` of reading 0.
    pub fn confuse(&self, p_zero: f64) -> f64 {
        (p_zero * (1.0 - self.p_readout) + (1.0 - p_zero) * self.p_readout).clamp(0.0, 1.0)
    }

    pub fn from_calibration(cal: &Calibration) -> Result<Self> {
        NoiseModel::new(cal.name.clone(), cal.sx_error, cal.twoq_error, cal.readout_error)
    }

    /// Built-in calibration snapshot by backend name.
    pub fn builtin(name: &str) -> Result<Self> {
        NoiseModel::from_calibration(&Calibration::builtin(name)?)
    }
}

/// Per-backend calibration record. `t1_us`/`t2_us` are carried for reference
/// and are not simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub name: String,
    pub sx_error: f64,
    pub twoq_error: f64,
    pub readout_error: f64,
    #[serde(default)]
    pub t1_us: Option<f64>,
    #[serde(default)]
    pub t2_us: Option<f64>,
}

const BUILTIN: &[(&str, &str)] = &[
    ("ibm_brisbane", include_str!("../../calibration/ibm_brisbane.toml")),
    ("ibm_marrakesh", include_str!("../../calibration/ibm_marrakesh.toml")),
    ("ionq_aria_1", include_str!("../../calibration/ionq_aria_1.toml")),
];

impl Calibration {
    pub fn parse(text: &str) -> Result<Self> {
        let cal: Calibration = toml::from_str(text).map_err(|e| Error::config(format!("calibration: {e}")))?;
        NoiseModel::from_calibration(&cal)?;
        Ok(cal)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::DataFile { path: path.to_owned(), message: e.to_string() })?;
        Calibration::parse(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let (_, text) = BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::config(format!("no built-in calibration named `{name}`")))?;
        Calibration::parse(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_match_published_snapshots() {
        let b = Calibration::builtin("ibm_brisbane").unwrap();
        assert_eq!((b.sx_error, b.twoq_error, b.readout_error), (2.236e-4, 7.519e-3, 1.660e-2));
        let m = Calibration::builtin("ibm_marrakesh").unwrap();
        assert_eq!((m.sx_error, m.twoq_error, m.readout_error), (2.304e-4, 3.351e-3, 1.038e-2));
        let a = Calibration::builtin("ionq_aria_1").unwrap();
        assert!((a.sx_error - (1.0 - 0.9998)).abs() < 1e-15);
        assert!((a.twoq_error - (1.0 - 0.9858)).abs() < 1e-15);
        assert!((a.readout_error - (1.0 - 0.9951)).abs() < 1e-15);
        assert_eq!(Calibration::builtin_names().count(), 3);
    }

    #[test]
    fn invalid_probabilities_rejected() {
        assert!(NoiseModel::new("x", 1.0, 0.0, 0.0).is_err());
        assert!(Calibration::parse("name='x'\nsx_error=0.1\ntwoq_error=-0.2\nreadout_error=0.0").is_err());
        assert!(Calibration::builtin("nope").is_err());
    }

    #[test]
    fn confusion_map() {
        let n = NoiseModel::new("x", 0.0, 0.0, 0.1).unwrap();
        assert!((n.confuse(1.0) - 0.9).abs() < 1e-15);
        assert!((n.confuse(0.0) - 0.1).abs() < 1e-15);
        assert!((n.confuse(0.5) - 0.5).abs() < 1e-15);
    }
}
