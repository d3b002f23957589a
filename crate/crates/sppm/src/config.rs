//! Project configuration: one key-value file drives every command.
//!
//! Format: `key = value` lines, `#` comments, unknown keys rejected.
//! Parsing then serializing then parsing again is the identity.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::unit::{DesignSpec, UnitError};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown configuration key '{0}'")]
    UnknownKey(String),
    #[error("malformed line {0}: expected 'key = value'")]
    MalformedLine(usize),
    #[error("invalid value for '{key}': {value}")]
    BadValue { key: String, value: String },
    #[error(transparent)]
    Spec(#[from] UnitError),
}

/// Everything a pipeline run needs, with sensible defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectConfig {
    pub seed: u64,
    pub target_porosity: f64,
    pub omega: f64,
    pub mu: f64,
    pub level_c: f64,
    pub cell_side: f64,
    pub porosity_tolerance: f64,
    pub max_attempts: usize,
    pub cutoff_epsilon: f64,
    /// Porosity measurement resolution per axis.
    pub resolution: usize,
    /// Homogenization resolution per axis.
    pub homog_resolution: usize,
    /// Wang tile colors (K); the tile set has K^3 tiles.
    pub colors: usize,
    pub assembly_dims: (usize, usize, usize),
    /// Face pores per pattern; 0 picks a count from the porosity budget.
    pub face_pores: usize,
    pub mm_per_cell: f64,
    pub layer_um: f64,
    pub pixel_um: f64,
    pub base_young: f64,
    pub base_poisson: f64,
    pub out_dir: String,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            target_porosity: 0.5,
            omega: 30.0,
            mu: 30.0,
            level_c: 0.25,
            cell_side: 1.0,
            porosity_tolerance: 0.001,
            max_attempts: 150,
            cutoff_epsilon: 1e-4,
            resolution: 64,
            homog_resolution: 32,
            colors: 3,
            assembly_dims: (3, 3, 3),
            face_pores: 0,
            mm_per_cell: 15.0,
            layer_um: 100.0,
            pixel_um: 100.0,
            base_young: 1.0,
            base_poisson: 0.3,
            out_dir: "out".to_string(),
        }
    }
}

impl ProjectConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::MalformedLine(ln + 1));
            };
            let key = key.trim();
            let value = value.trim();
            let bad = || ConfigError::BadValue {
                key: key.to_string(),
                value: value.to_string(),
            };
            match key {
                "seed" => config.seed = value.parse().map_err(|_| bad())?,
                "target_porosity" => config.target_porosity = value.parse().map_err(|_| bad())?,
                "omega" => config.omega = value.parse().map_err(|_| bad())?,
                "mu" => config.mu = value.parse().map_err(|_| bad())?,
                "level_c" => config.level_c = value.parse().map_err(|_| bad())?,
                "cell_side" => config.cell_side = value.parse().map_err(|_| bad())?,
                "porosity_tolerance" => {
                    config.porosity_tolerance = value.parse().map_err(|_| bad())?
                }
                "max_attempts" => config.max_attempts = value.parse().map_err(|_| bad())?,
                "cutoff_epsilon" => config.cutoff_epsilon = value.parse().map_err(|_| bad())?,
                "resolution" => config.resolution = value.parse().map_err(|_| bad())?,
                "homog_resolution" => config.homog_resolution = value.parse().map_err(|_| bad())?,
                "colors" => config.colors = value.parse().map_err(|_| bad())?,
                "assembly_dims" => {
                    let parts: Vec<usize> = value
                        .split_whitespace()
                        .map(|v| v.parse().map_err(|_| bad()))
                        .collect::<Result<_, _>>()?;
                    if parts.len() != 3 {
                        return Err(bad());
                    }
                    config.assembly_dims = (parts[0], parts[1], parts[2]);
                }
                "face_pores" => config.face_pores = value.parse().map_err(|_| bad())?,
                "mm_per_cell" => config.mm_per_cell = value.parse().map_err(|_| bad())?,
                "layer_um" => config.layer_um = value.parse().map_err(|_| bad())?,
                "pixel_um" => config.pixel_um = value.parse().map_err(|_| bad())?,
                "base_young" => config.base_young = value.parse().map_err(|_| bad())?,
                "base_poisson" => config.base_poisson = value.parse().map_err(|_| bad())?,
                "out_dir" => config.out_dir = value.to_string(),
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        Ok(config)
    }

    /// Canonical serialization; stable key order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "target_porosity = {}", self.target_porosity);
        let _ = writeln!(out, "omega = {}", self.omega);
        let _ = writeln!(out, "mu = {}", self.mu);
        let _ = writeln!(out, "level_c = {}", self.level_c);
        let _ = writeln!(out, "cell_side = {}", self.cell_side);
        let _ = writeln!(out, "porosity_tolerance = {}", self.porosity_tolerance);
        let _ = writeln!(out, "max_attempts = {}", self.max_attempts);
        let _ = writeln!(out, "cutoff_epsilon = {}", self.cutoff_epsilon);
        let _ = writeln!(out, "resolution = {}", self.resolution);
        let _ = writeln!(out, "homog_resolution = {}", self.homog_resolution);
        let _ = writeln!(out, "colors = {}", self.colors);
        let _ = writeln!(
            out,
            "assembly_dims = {} {} {}",
            self.assembly_dims.0, self.assembly_dims.1, self.assembly_dims.2
        );
        let _ = writeln!(out, "face_pores = {}", self.face_pores);
        let _ = writeln!(out, "mm_per_cell = {}", self.mm_per_cell);
        let _ = writeln!(out, "layer_um = {}", self.layer_um);
        let _ = writeln!(out, "pixel_um = {}", self.pixel_um);
        let _ = writeln!(out, "base_young = {}", self.base_young);
        let _ = writeln!(out, "base_poisson = {}", self.base_poisson);
        let _ = writeln!(out, "out_dir = {}", self.out_dir);
        out
    }

    /// Short hex digest of the canonical serialization; printed by every
    /// command so runs are attributable to an exact configuration.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.serialize().as_bytes());
        hasher
            .finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// The design spec this configuration describes.
    pub fn design_spec(&self) -> Result<DesignSpec, ConfigError> {
        let mut spec = DesignSpec::new(
            self.target_porosity,
            self.omega,
            self.mu,
            self.level_c,
            self.seed,
        )?;
        spec.cell_side = self.cell_side;
        spec.porosity_tolerance = self.porosity_tolerance;
        spec.max_attempts = self.max_attempts;
        spec.cutoff_epsilon = self.cutoff_epsilon;
        Ok(spec)
    }
}
