//! Run configuration, read from a single TOML document.
//!
//! Every section and field is optional; omitted values take the defaults
//! below. Example:
//!
//! ```toml
//! [sensor]
//! beams = 64
//! fov_up_deg = 2.0
//! fov_down_deg = -24.9
//! measurements_per_cycle = 2048
//!
//! [rapid]
//! k = [10, 7, 5]
//! band_edges = [20.0, 50.0]
//! delta = 2.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cloud::SensorGeometry;
use crate::embed::{Activation, EmbedDims, Similarity};
use crate::error::{RapidError, Result};
use crate::rapid::RangeAwareConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputConfig,
    pub sensor: SensorConfig,
    pub rapid: RangeAwareConfig,
    pub embed: EmbedConfig,
    pub fusion: FusionConfig,
    pub loss: LossConfig,
    pub run: ExecutionConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanFormat {
    /// Packed float32 `.bin` scans with optional `.label` files.
    #[default]
    Kitti,
    /// Header-row CSV with `x, y, z, intensity` and optional `ring`, `label`.
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub scan: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub format: ScanFormat,
    /// CSV intensities are divided by this to land in [0, 1].
    pub intensity_scale: f64,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            scan: None,
            labels: None,
            format: ScanFormat::Kitti,
            intensity_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub beams: u32,
    pub fov_up_deg: f64,
    pub fov_down_deg: f64,
    pub measurements_per_cycle: u32,
}

impl Default for SensorConfig {
    /// Velodyne HDL-64E.
    fn default() -> Self {
        Self {
            beams: 64,
            fov_up_deg: 2.0,
            fov_down_deg: -24.9,
            measurements_per_cycle: 2048,
        }
    }
}

impl SensorConfig {
    pub fn geometry(&self) -> Result<SensorGeometry> {
        SensorGeometry::from_fov(
            self.beams,
            self.fov_up_deg,
            self.fov_down_deg,
            self.measurements_per_cycle,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub voxel_size: f64,
    pub latent: usize,
    /// Input width; must equal the largest configured k.
    pub d: usize,
    pub d_prime: usize,
    pub stages: usize,
    pub activation: Activation,
    /// Weight container; seeded-random weights are used when absent.
    pub weights: Option<PathBuf>,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        let dims = EmbedDims::default();
        Self {
            voxel_size: 0.2,
            latent: dims.latent,
            d: dims.d,
            d_prime: dims.d_prime,
            stages: dims.stages,
            activation: Activation::default(),
            weights: None,
        }
    }
}

impl EmbedConfig {
    pub fn dims(&self) -> EmbedDims {
        EmbedDims {
            latent: self.latent,
            d: self.d,
            d_prime: self.d_prime,
            stages: self.stages,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// `W₁` has `f* / ratio` rows.
    pub ratio: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self { ratio: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub similarity: Similarity,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            lambda: 0.1,
            similarity: Similarity::Cosine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutionConfig {
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// SemanticKITTI defaults: HDL-64E and k = (10, 7, 5).
    pub fn semantic_kitti() -> Self {
        Self::default()
    }

    /// nuScenes defaults: 32-beam sensor and k = (8, 6, 3).
    pub fn nuscenes() -> Self {
        Self {
            sensor: SensorConfig {
                beams: 32,
                fov_up_deg: 10.0,
                fov_down_deg: -30.0,
                measurements_per_cycle: 1084,
            },
            rapid: RangeAwareConfig::NUSCENES,
            input: InputConfig {
                format: ScanFormat::Csv,
                intensity_scale: 255.0,
                ..InputConfig::default()
            },
            embed: EmbedConfig {
                d: 8,
                ..EmbedConfig::default()
            },
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| RapidError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| RapidError::file(path, e))?;
        Self::from_toml_str(&text).map_err(|e| RapidError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.sensor.geometry()?;
        self.rapid.validate()?;
        self.embed.dims().validate()?;
        if !(self.embed.voxel_size > 0.0) {
            return Err(RapidError::Config("voxel size must be positive".into()));
        }
        if self.fusion.ratio == 0 {
            return Err(RapidError::Config("fusion ratio must be at least 1".into()));
        }
        if !(self.loss.lambda >= 0.0) || !self.loss.alpha.is_finite() {
            return Err(RapidError::Config(
                "alpha must be finite and lambda non-negative".into(),
            ));
        }
        if !(self.input.intensity_scale > 0.0) {
            return Err(RapidError::Config("intensity scale must be positive".into()));
        }
        Ok(())
    }
}
