use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rapid_core::config::{RunConfig, ScanFormat};
use rapid_core::io::{load_csv_scan, load_kitti_labels, load_kitti_scan, load_label_file};
use rapid_core::synth::{synthesize_scene, SyntheticSceneSpec};
use rapid_core::PointCloud;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    Semantickitti,
    Nuscenes,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Kitti,
    Csv,
}

/// Configuration source and per-field overrides shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML run configuration (default: the SemanticKITTI preset)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Built-in preset used when no --config is given
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// Neighbor counts per range band
    #[arg(long, global = true, value_delimiter = ',', value_name = "CLOSE,MID,FAR")]
    pub k: Option<Vec<usize>>,
    /// Close/mid and mid/far band boundaries in meters
    #[arg(long, global = true, value_delimiter = ',', value_name = "NEAR,FAR")]
    pub band_edges: Option<Vec<f64>>,
    /// Outlier threshold on ρ in meters (`inf` disables)
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Voxel edge for the embedding in meters
    #[arg(long, global = true)]
    pub voxel_size: Option<f64>,
    /// Contrastive margin
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Weight of the contrastive term in the total loss
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Fusion gate reduction ratio
    #[arg(long, global = true)]
    pub ratio: Option<usize>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed for synthetic scenes, transforms and weights
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Scan file format
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut config = match (&self.config, self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(Preset::Nuscenes)) => RunConfig::nuscenes(),
            (None, _) => RunConfig::semantic_kitti(),
        };
        if let Some(k) = &self.k {
            config.rapid.k = k
                .as_slice()
                .try_into()
                .map_err(|_| CliError::Usage(format!("--k needs three values, got {}", k.len())))?;
        }
        if let Some(edges) = &self.band_edges {
            config.rapid.band_edges = edges
                .as_slice()
                .try_into()
                .map_err(|_| CliError::Usage(format!("--band-edges needs two values, got {}", edges.len())))?;
        }
        if let Some(delta) = self.delta {
            config.rapid.delta = delta;
        }
        if let Some(v) = self.voxel_size {
            config.embed.voxel_size = v;
        }
        if let Some(a) = self.alpha {
            config.loss.alpha = a;
        }
        if let Some(l) = self.lambda {
            config.loss.lambda = l;
        }
        if let Some(r) = self.ratio {
            config.fusion.ratio = r;
        }
        if let Some(w) = self.workers {
            config.run.workers = w;
        }
        if let Some(s) = self.seed {
            config.run.seed = s;
        }
        match self.format {
            Some(Format::Kitti) => config.input.format = ScanFormat::Kitti,
            Some(Format::Csv) => config.input.format = ScanFormat::Csv,
            None => {}
        }
        config.validate()?;
        Ok(config)
    }
}

/// Where a command reads its scan from.
#[derive(Debug, Clone, Default, Args)]
pub struct ScanArgs {
    /// Scan file (.bin or .csv); overrides the config's input.scan
    #[arg(long, value_name = "FILE")]
    pub scan: Option<PathBuf>,
    /// Label file matching the scan
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
}

impl ScanArgs {
    pub fn scan_path(&self, config: &RunConfig) -> Option<PathBuf> {
        self.scan.clone().or_else(|| config.input.scan.clone())
    }

    /// Loads the configured scan, or a synthetic street scene when none is
    /// given and `synthetic_fallback` is set.
    pub fn load(&self, config: &RunConfig, synthetic_fallback: bool) -> CliResult<PointCloud> {
        match self.scan_path(config) {
            Some(path) => load_scan(&path, self.labels.as_ref().or(config.input.labels.as_ref()), config),
            None if synthetic_fallback => synthetic(config),
            None => Err(CliError::Usage("no scan given (use --scan or input.scan)".into())),
        }
    }
}

pub fn load_scan(path: &Path, labels: Option<&PathBuf>, config: &RunConfig) -> CliResult<PointCloud> {
    if !path.exists() {
        return Err(CliError::data(format!("{}: no such file", path.display())));
    }
    let cloud = match config.input.format {
        ScanFormat::Kitti => {
            let cloud = load_kitti_scan(path)?;
            match labels {
                Some(l) => load_kitti_labels(l, cloud)?,
                None => cloud,
            }
        }
        ScanFormat::Csv => {
            let cloud = load_csv_scan(path, config.input.intensity_scale)?;
            match labels {
                Some(l) => cloud.with_labels(load_label_file(l)?)?,
                None => cloud,
            }
        }
    };
    Ok(cloud)
}

pub fn synthetic(config: &RunConfig) -> CliResult<PointCloud> {
    let spec = SyntheticSceneSpec::street(config.sensor.geometry()?, config.run.seed);
    Ok(synthesize_scene(&spec)?)
}

/// Runs `f` on a pool of the configured size.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(pool.install(f))
}
