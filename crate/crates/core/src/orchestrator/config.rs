use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::readout::{ReadoutKind, ReadoutSettings, DEFAULT_KERNEL_BLOCKS, DEFAULT_LAMBDA};
use crate::reservoir::{InputOrder, NeuronKind, DEFAULT_PASSES};
use crate::simulator::{Calibration, NoiseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    SRSR,
    MRSR,
    SRMR,
    MRMR,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::SRSR, Variant::MRSR, Variant::SRMR, Variant::MRMR];
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown variant `{s}`")))
    }
}

fn default_one() -> usize {
    1
}
fn default_passes() -> usize {
    DEFAULT_PASSES
}
fn default_kernel_qubits() -> usize {
    10
}
fn default_kernel_blocks() -> usize {
    DEFAULT_KERNEL_BLOCKS
}
fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureConfig {
    pub variant: Variant,
    #[serde(rename = "reservoirs", alias = "num_reservoirs", default = "default_one")]
    pub num_reservoirs: usize,
    pub neurons_per_reservoir: usize,
    #[serde(default = "default_one")]
    pub ridge_instances: usize,
    #[serde(default = "default_kernel_qubits")]
    pub kernel_qubits: usize,
    #[serde(default = "default_kernel_blocks")]
    pub kernel_blocks: usize,
    pub reservoir_kind: NeuronKind,
    pub readout_kind: ReadoutKind,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_passes")]
    pub passes: usize,
    #[serde(default)]
    pub seed: u64,
    /// Qubit measured by every quantum neuron.
    #[serde(default)]
    pub observable: usize,
    #[serde(default)]
    pub input_order: InputOrder,
}

impl ArchitectureConfig {
    pub fn new(
        variant: Variant,
        num_reservoirs: usize,
        neurons_per_reservoir: usize,
        ridge_instances: usize,
        reservoir_kind: NeuronKind,
        readout_kind: ReadoutKind,
        seed: u64,
    ) -> Self {
        ArchitectureConfig {
            variant,
            num_reservoirs,
            neurons_per_reservoir,
            ridge_instances,
            kernel_qubits: default_kernel_qubits(),
            kernel_blocks: DEFAULT_KERNEL_BLOCKS,
            reservoir_kind,
            readout_kind,
            lambda: DEFAULT_LAMBDA,
            passes: DEFAULT_PASSES,
            seed,
            observable: 0,
            input_order: InputOrder::FeaturesFirst,
        }
    }

    pub fn srsr(neurons: usize, reservoir_kind: NeuronKind, readout_kind: ReadoutKind, seed: u64) -> Self {
        Self::new(Variant::SRSR, 1, neurons, 1, reservoir_kind, readout_kind, seed)
    }

    pub fn total_neurons(&self) -> usize {
        self.num_reservoirs * self.neurons_per_reservoir
    }

    pub fn readout_settings(&self) -> ReadoutSettings {
        ReadoutSettings {
            kind: self.readout_kind,
            kernel_qubits: self.kernel_qubits,
            kernel_blocks: self.kernel_blocks,
            lambda: self.lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        use Variant::*;
        let bad = |m: String| Err(Error::Config(m));
        if self.num_reservoirs == 0 || self.neurons_per_reservoir == 0 || self.ridge_instances == 0 {
            return bad("reservoirs, neurons_per_reservoir and ridge_instances must be ≥ 1".into());
        }
        if matches!(self.variant, SRSR | SRMR) && self.num_reservoirs != 1 {
            return bad(format!("{} requires reservoirs = 1, got {}", self.variant, self.num_reservoirs));
        }
        if matches!(self.variant, SRSR | MRSR) && self.ridge_instances != 1 {
            return bad(format!("{} requires ridge_instances = 1, got {}", self.variant, self.ridge_instances));
        }
        if self.variant == MRMR && self.ridge_instances != self.num_reservoirs {
            return bad(format!(
                "MRMR requires ridge_instances = reservoirs (each reservoir feeds one ridge), got {} and {}",
                self.ridge_instances, self.num_reservoirs
            ));
        }
        if self.ridge_instances > self.total_neurons() {
            return bad(format!(
                "{} ridge instances for {} reservoir outputs",
                self.ridge_instances,
                self.total_neurons()
            ));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if self.passes == 0 {
            return bad("passes must be ≥ 1".into());
        }
        if self.readout_kind == ReadoutKind::Quantum && (self.kernel_qubits == 0 || self.kernel_blocks == 0) {
            return bad("kernel_qubits and kernel_blocks must be ≥ 1".into());
        }
        if self.observable >= crate::reservoir::NEURON_INPUTS {
            return bad(format!("observable qubit {} out of range", self.observable));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    #[default]
    Ideal,
    Noisy,
}

/// One execution target. `calibration` is a built-in calibration name or a
/// TOML file path; `address` routes the backend to a remote worker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub name: String,
    #[serde(default)]
    pub mode: BackendMode,
    #[serde(default)]
    pub calibration: Option<String>,
    #[serde(default)]
    pub shots: Option<u32>,
    #[serde(default)]
    pub address: Option<String>,
}

impl BackendSpec {
    pub fn ideal(name: impl Into<String>) -> Self {
        BackendSpec { name: name.into(), mode: BackendMode::Ideal, calibration: None, shots: None, address: None }
    }

    pub fn noisy(name: impl Into<String>, calibration: impl Into<String>, shots: Option<u32>) -> Self {
        BackendSpec {
            name: name.into(),
            mode: BackendMode::Noisy,
            calibration: Some(calibration.into()),
            shots,
            address: None,
        }
    }

    pub fn remote(mut self, address: impl Into<String>) -> Self {
        self.address = Some(address.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == BackendMode::Noisy && self.calibration.is_none() {
            return Err(Error::config(format!("noisy backend `{}` needs a calibration", self.name)));
        }
        if self.shots == Some(0) {
            return Err(Error::config(format!("backend `{}`: shots must be ≥ 1", self.name)));
        }
        Ok(())
    }

    /// Execution mode, resolving calibration paths against `base`.
    pub fn exec_mode(&self, base: Option<&Path>, default_shots: Option<u32>) -> Result<ExecMode> {
        self.validate()?;
        match self.mode {
            BackendMode::Ideal => Ok(ExecMode::Ideal),
            BackendMode::Noisy => {
                let source = self.calibration.as_deref().unwrap_or_default();
                let cal = if Calibration::builtin_names().any(|n| n == source) {
                    Calibration::builtin(source)?
                } else {
                    let p = PathBuf::from(source);
                    let p = match base {
                        Some(b) if p.is_relative() => b.join(p),
                        _ => p,
                    };
                    Calibration::load(&p).map_err(|e| Error::config(format!("backend `{}`: {e}", self.name)))?
                };
                Ok(ExecMode::Noisy { noise: NoiseModel::from_calibration(&cal)?, shots: self.shots.or(default_shots) })
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    #[serde(default)]
    pub window: Option<usize>,
    #[serde(default)]
    pub path: Option<String>,
}

pub const DEFAULT_MAX_TRAIN_SAMPLES: usize = 2000;

fn default_max_train_samples() -> Option<usize> {
    Some(DEFAULT_MAX_TRAIN_SAMPLES)
}

/// Experiment file schema (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub architecture: ArchitectureConfig,
    #[serde(default)]
    pub backends: Vec<BackendSpec>,
    /// Default shot count for noisy backends without their own.
    #[serde(default)]
    pub shots: Option<u32>,
    /// Cap on the number of training samples a kernel readout is fit on.
    #[serde(default = "default_max_train_samples")]
    pub max_train_samples: Option<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub dataset: DatasetConfig,
}

impl ExperimentConfig {
    pub fn new(architecture: ArchitectureConfig) -> Self {
        ExperimentConfig {
            architecture,
            backends: Vec::new(),
            shots: None,
            max_train_samples: default_max_train_samples(),
            workers: None,
            dataset: DatasetConfig::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::config(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    pub fn validate(&self) -> Result<()> {
        self.architecture.validate()?;
        for b in &self.backends {
            b.validate()?;
        }
        if self.shots == Some(0) || self.max_train_samples == Some(0) || self.workers == Some(0) {
            return Err(Error::config("shots, max_train_samples and workers must be ≥ 1 when set"));
        }
        Ok(())
    }

    /// Configured backends, or a single ideal in-process backend.
    pub fn backend_specs(&self) -> Vec<BackendSpec> {
        if self.backends.is_empty() {
            vec![BackendSpec::ideal("ideal")]
        } else {
            self.backends.clone()
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch(v: Variant, r: usize, i: usize) -> ArchitectureConfig {
        ArchitectureConfig::new(v, r, 10, i, NeuronKind::Classical, ReadoutKind::Classical, 1)
    }

    #[test]
    fn variant_rules() {
        assert!(arch(Variant::SRSR, 1, 1).validate().is_ok());
        assert!(arch(Variant::SRSR, 2, 1).validate().is_err());
        assert!(arch(Variant::SRSR, 1, 2).validate().is_err());
        assert!(arch(Variant::MRSR, 3, 1).validate().is_ok());
        assert!(arch(Variant::MRSR, 3, 2).validate().is_err());
        assert!(arch(Variant::SRMR, 1, 5).validate().is_ok());
        assert!(arch(Variant::SRMR, 2, 2).validate().is_err());
        assert!(arch(Variant::MRMR, 3, 3).validate().is_ok());
        let e = arch(Variant::MRMR, 3, 2).validate().unwrap_err();
        assert!(e.to_string().contains("MRMR requires ridge_instances = reservoirs"), "{e}");
        assert!(arch(Variant::SRMR, 1, 11).validate().is_err());
    }

    #[test]
    fn parse_experiment_file() {
        let c = ExperimentConfig::parse(
            r#"
            variant = "MRMR"
            reservoirs = 3
            neurons_per_reservoir = 10
            ridge_instances = 3
            kernel_qubits = 5
            reservoir_kind = "quantum"
            readout_kind = "classical"
            lambda = 1e-4
            passes = 3
            seed = 42
            shots = 1000
            max_train_samples = 200

            [[backends]]
            name = "marrakesh"
            mode = "noisy"
            calibration = "ibm_marrakesh"

            [[backends]]
            name = "brisbane"

            [dataset]
            window = 4
            "#,
        )
        .unwrap();
        assert_eq!(c.architecture.num_reservoirs, 3);
        assert_eq!(c.backends.len(), 2);
        let mode = c.backends[0].exec_mode(None, c.shots).unwrap();
        assert_eq!(mode.shots(), Some(1000));
        assert!(c.backends[1].exec_mode(None, c.shots).unwrap() == ExecMode::Ideal);
        let back = ExperimentConfig::parse(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn noisy_backend_needs_calibration() {
        let mut b = BackendSpec::ideal("x");
        b.mode = BackendMode::Noisy;
        assert!(b.validate().is_err());
        assert!(BackendSpec::noisy("x", "nope.toml", None).exec_mode(None, None).is_err());
    }

    #[test]
    fn invalid_config_is_config_error() {
        let e = ExperimentConfig::parse("variant = \"SRSR\"\nreservoirs = 2\nneurons_per_reservoir = 4\nreservoir_kind = \"classical\"\nreadout_kind = \"classical\"\n").unwrap_err();
        assert_eq!(e.category(), crate::error::ErrorCategory::Config);
    }
}
