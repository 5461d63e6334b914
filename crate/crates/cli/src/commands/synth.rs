use std::path::PathBuf;

use clap::Args;
use rapid_core::config::{RunConfig, ScanFormat};
use rapid_core::io::{save_kitti_labels, save_kitti_scan};
use rapid_core::synth::{synthesize_scene, SyntheticSceneSpec};
use rapid_core::PointCloud;

use super::ensure_dir;
use crate::error::CliResult;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Number of scans; scan i uses seed + i
    #[arg(long, default_value_t = 1)]
    pub frames: u64,
    /// Range noise standard deviation in meters
    #[arg(long)]
    pub noise: Option<f64>,
    /// Maximum sensing range in meters
    #[arg(long)]
    pub max_range: Option<f64>,
}

fn write_csv(cloud: &PointCloud, scale: f64, path: &PathBuf) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "z", "intensity", "ring", "label"])?;
    for i in 0..cloud.len() {
        let p = cloud.point(i);
        w.write_record([
            p[0].to_string(),
            p[1].to_string(),
            p[2].to_string(),
            (cloud.remission()[i] * scale).to_string(),
            cloud.ring().map_or(String::new(), |r| r[i].to_string()),
            cloud.labels().map_or(String::new(), |l| l[i].to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: &SynthArgs, config: &RunConfig) -> CliResult<()> {
    ensure_dir(&args.out)?;
    let geometry = config.sensor.geometry()?;
    for frame in 0..args.frames {
        let mut spec = SyntheticSceneSpec::street(geometry, config.run.seed + frame);
        if let Some(noise) = args.noise {
            spec.noise_sigma = noise;
        }
        if let Some(r) = args.max_range {
            spec.max_range = r;
        }
        let cloud = synthesize_scene(&spec)?;
        let path = match config.input.format {
            ScanFormat::Kitti => {
                let scan = args.out.join(format!("{frame:06}.bin"));
                save_kitti_scan(&cloud, &scan)?;
                save_kitti_labels(cloud.labels().unwrap_or_default(), scan.with_extension("label"))?;
                scan
            }
            ScanFormat::Csv => {
                let path = args.out.join(format!("{frame:06}.csv"));
                write_csv(&cloud, config.input.intensity_scale, &path)?;
                path
            }
        };
        println!("wrote {} ({} points)", path.display(), cloud.len());
    }
    Ok(())
}
