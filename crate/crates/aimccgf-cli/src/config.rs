//! Run configuration: a versioned TOML document with one section per stage.
//!
//! Every section except `[model]` is optional and falls back to the defaults
//! below. Unknown keys are rejected with the line and column of the offending
//! entry.

use std::path::{Path, PathBuf};

use aimccgf::cc::{CcLevel, CcSettings};
use aimccgf::circuit::EvolutionMode;
use aimccgf::lcu::ExpansionMode;
use aimccgf::measurement::MeasurementMode;
use aimccgf::model::{AimParams, Filling, Spin, DEFAULT_BATH_CAP};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// The only schema version understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: u32,
    model: ModelSection,
    #[serde(default)]
    reference: ReferenceSection,
    #[serde(default)]
    cc: CcSection,
    #[serde(default)]
    evolution: EvolutionSection,
    #[serde(default)]
    measurement: MeasurementSection,
    #[serde(default)]
    greens: GreensSection,
    #[serde(default)]
    spectral: SpectralSection,
    #[serde(default)]
    resources: ResourcesSection,
    #[serde(default)]
    validate: ValidateSection,
    #[serde(default)]
    trotter: TrotterSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    interaction: f64,
    /// Impurity level first, then the bath levels.
    levels: Vec<f64>,
    hybridization: Vec<f64>,
    #[serde(default = "default_bath_cap")]
    bath_cap: usize,
}

fn default_bath_cap() -> usize {
    DEFAULT_BATH_CAP
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceSection {
    electrons: Option<usize>,
    impurity_spin: Option<SpinName>,
    occupied: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SpinName {
    Up,
    Down,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CcSection {
    level: usize,
    tolerance: f64,
    max_iterations: usize,
    diis_size: usize,
    damping: f64,
}

impl Default for CcSection {
    fn default() -> Self {
        let s = CcSettings::default();
        Self {
            level: s.level.rank(),
            tolerance: s.tol,
            max_iterations: s.max_iter,
            diis_size: s.diis_size,
            damping: s.damping,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum EvolutionName {
    Exact,
    Trotter,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EvolutionSection {
    mode: EvolutionName,
    step: f64,
    horizon: f64,
    substeps: usize,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self {
            mode: EvolutionName::Exact,
            step: 0.05,
            horizon: 10.0,
            substeps: 8,
        }
    }
}

/// Estimator selected on the command line or in `[measurement]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Exact,
    Hadamard,
    Lcu,
}

impl From<ModeName> for MeasurementMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Exact => MeasurementMode::Exact,
            ModeName::Hadamard => MeasurementMode::Hadamard,
            ModeName::Lcu => MeasurementMode::Lcu,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ExpansionName {
    Full,
    ImpuritySingles,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MeasurementSection {
    mode: ModeName,
    shots: u64,
    seed: u64,
    eps_m: f64,
    expansion: ExpansionName,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        Self {
            mode: ModeName::Exact,
            shots: 0,
            seed: 0,
            eps_m: 1e-2,
            expansion: ExpansionName::Full,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GreensSection {
    p: Option<usize>,
    q: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SpectralSection {
    broadening: f64,
    padding: usize,
    step: f64,
    horizon: f64,
}

impl Default for SpectralSection {
    fn default() -> Self {
        Self {
            broadening: aimccgf::spectral::DEFAULT_BROADENING,
            padding: aimccgf::spectral::DEFAULT_PADDING,
            step: aimccgf::spectral::DEFAULT_STEP,
            horizon: aimccgf::spectral::DEFAULT_HORIZON,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ResourcesSection {
    time: f64,
    eps_s: f64,
    p_f: f64,
}

impl Default for ResourcesSection {
    fn default() -> Self {
        Self {
            time: 10.0,
            eps_s: 1e-3,
            p_f: 0.1,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ValidateSection {
    threshold: f64,
    horizon: f64,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            threshold: 1e-6,
            horizon: 10.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TrotterSection {
    step: f64,
    timesteps: usize,
    substeps: Vec<usize>,
}

impl Default for TrotterSection {
    fn default() -> Self {
        Self {
            step: 0.03,
            timesteps: 334,
            substeps: vec![1, 2, 4, 8],
        }
    }
}

/// Output encoding selected on the command line or in `[output]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
    format: Option<Format>,
}

/// Time-grid settings of a stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub step: f64,
    pub horizon: f64,
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: AimParams,
    pub filling: Filling,
    pub cc: CcSettings,
    pub evolution: EvolutionMode,
    pub evolution_grid: GridSpec,
    pub substeps: usize,
    pub mode: MeasurementMode,
    pub shots: u64,
    pub seed: u64,
    pub eps_m: f64,
    pub expansion: ExpansionMode,
    pub orbitals: (Option<usize>, Option<usize>),
    pub broadening: f64,
    pub padding: usize,
    pub spectral_grid: GridSpec,
    pub resource_time: f64,
    pub eps_s: f64,
    pub p_f: f64,
    pub threshold: f64,
    pub validate_horizon: f64,
    pub trotter_step: f64,
    pub trotter_timesteps: usize,
    pub trotter_substeps: Vec<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    /// Lowercase hex SHA-256 of the configuration file bytes.
    pub hash: String,
}

fn positive(value: f64, key: &str) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::Config(format!(
            "{key} must be positive and finite, got {value}"
        )))
    }
}

fn at_least_one(value: usize, key: &str) -> Result<usize> {
    if value >= 1 {
        Ok(value)
    } else {
        Err(CliError::Config(format!("{key} must be at least 1")))
    }
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl RunConfig {
    /// Parses and validates a configuration document.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if raw.version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config version {} (expected {SCHEMA_VERSION})",
                raw.version
            )));
        }
        let m = raw.model;
        let params = AimParams::new(m.interaction, m.levels, m.hybridization)
            .map_err(|e| CliError::Config(format!("[model]: {e}")))?;
        params
            .check_cap(m.bath_cap)
            .map_err(|e| CliError::Config(format!("[model]: {e}")))?;

        let r = raw.reference;
        let filling = match (r.electrons, r.impurity_spin, r.occupied) {
            (None, None, None) => Filling::Default,
            (None, Some(spin), None) => Filling::DefaultWithImpuritySpin(match spin {
                SpinName::Up => Spin::Up,
                SpinName::Down => Spin::Down,
            }),
            (Some(n), None, None) => Filling::Electrons(n),
            (None, None, Some(occupied)) => Filling::Occupied(occupied),
            _ => {
                return Err(CliError::Config(
                    "[reference]: set at most one of electrons, impurity_spin and occupied".into(),
                ))
            }
        };

        let c = raw.cc;
        let cc = CcSettings {
            level: CcLevel::from_rank(c.level)
                .map_err(|e| CliError::Config(format!("[cc]: {e}")))?,
            tol: positive(c.tolerance, "cc.tolerance")?,
            max_iter: at_least_one(c.max_iterations, "cc.max_iterations")?,
            diis_size: c.diis_size,
            damping: c.damping,
            ..CcSettings::default()
        };
        if !(0.0..1.0).contains(&cc.damping) {
            return Err(CliError::Config(format!(
                "cc.damping must lie in [0, 1), got {}",
                cc.damping
            )));
        }

        let e = raw.evolution;
        let ms = raw.measurement;
        let sp = raw.spectral;
        let rs = raw.resources;
        if !(0.0..1.0).contains(&rs.p_f) {
            return Err(CliError::Config(format!(
                "resources.p_f must lie in [0, 1), got {}",
                rs.p_f
            )));
        }
        let tr = raw.trotter;
        if tr.substeps.is_empty() || tr.substeps.contains(&0) {
            return Err(CliError::Config(
                "trotter.substeps must be a non-empty list of positive integers".into(),
            ));
        }
        let n_modes = params.n_modes();
        for (key, orbital) in [("greens.p", raw.greens.p), ("greens.q", raw.greens.q)] {
            if let Some(x) = orbital.filter(|&x| x >= n_modes) {
                return Err(CliError::Config(format!(
                    "{key} = {x} is out of range for {n_modes} spin-orbitals"
                )));
            }
        }
        Ok(Self {
            filling,
            cc,
            evolution: match e.mode {
                EvolutionName::Exact => EvolutionMode::Exact,
                EvolutionName::Trotter => EvolutionMode::Trotter,
            },
            evolution_grid: GridSpec {
                step: positive(e.step, "evolution.step")?,
                horizon: positive(e.horizon, "evolution.horizon")?,
            },
            substeps: at_least_one(e.substeps, "evolution.substeps")?,
            mode: ms.mode.into(),
            shots: ms.shots,
            seed: ms.seed,
            eps_m: positive(ms.eps_m, "measurement.eps_m")?,
            expansion: match ms.expansion {
                ExpansionName::Full => ExpansionMode::FullCcsd,
                ExpansionName::ImpuritySingles => ExpansionMode::T1Only,
            },
            orbitals: (raw.greens.p, raw.greens.q),
            broadening: positive(sp.broadening, "spectral.broadening")?,
            padding: at_least_one(sp.padding, "spectral.padding")?,
            spectral_grid: GridSpec {
                step: positive(sp.step, "spectral.step")?,
                horizon: positive(sp.horizon, "spectral.horizon")?,
            },
            resource_time: positive(rs.time, "resources.time")?,
            eps_s: positive(rs.eps_s, "resources.eps_s")?,
            p_f: rs.p_f,
            threshold: positive(raw.validate.threshold, "validate.threshold")?,
            validate_horizon: positive(raw.validate.horizon, "validate.horizon")?,
            trotter_step: positive(tr.step, "trotter.step")?,
            trotter_timesteps: at_least_one(tr.timesteps, "trotter.timesteps")?,
            trotter_substeps: tr.substeps,
            out_dir: raw.output.dir,
            format: raw.output.format,
            hash: sha256_hex(text.as_bytes()),
            params,
        })
    }

    /// Reads, hashes and validates the configuration file at `path`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}
