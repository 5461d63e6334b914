use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rapid_core::config::RunConfig;
use rapid_core::geometry::{apply_transform, RigidTransform};
use rapid_core::partition::{class_regions, extract_regions, ring_regions};
use rapid_core::{PointCloud, RapidMatrix};

use crate::error::{CliError, CliResult};
use crate::settings::{with_workers, ScanArgs};

#[derive(Debug, Args)]
pub struct InvarianceArgs {
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Number of random transforms
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    pub trials: u32,
    /// Use the identity instead of random motions
    #[arg(long)]
    pub identity: bool,
    /// Also scale coordinates by this factor, breaking rigidity (negative control)
    #[arg(long)]
    pub scale: Option<f64>,
    /// Translation magnitude of the random motions in meters
    #[arg(long, default_value_t = 100.0)]
    pub spread: f64,
    /// Largest accepted deviation of un-normalized entries
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}

/// Largest per-anchor differences of (raw, normalized) entries between two
/// extractions over the same regions.
fn deviation(a: &[RapidMatrix], b: &[RapidMatrix], n: usize) -> (f64, f64) {
    let gap = |x: f64, y: f64| if x == y { 0.0 } else { (x - y).abs() };
    let mut pos = vec![0usize; n];
    let (mut raw, mut values) = (0.0f64, 0.0f64);
    for (ma, mb) in a.iter().zip(b) {
        for (i, &j) in mb.anchors.iter().enumerate() {
            pos[j] = i;
        }
        for (i, &j) in ma.anchors.iter().enumerate() {
            let ib = pos[j];
            if ma.k != mb.k {
                return (f64::INFINITY, f64::INFINITY);
            }
            for (x, y) in ma.raw_row(i).iter().zip(mb.raw_row(ib)) {
                raw = raw.max(gap(*x, *y));
            }
            for (x, y) in ma.row(i).iter().zip(mb.row(ib)) {
                values = values.max(gap(*x, *y));
            }
        }
    }
    (raw, values)
}

fn scaled(cloud: &PointCloud, s: f64) -> CliResult<PointCloud> {
    let points = cloud.points().iter().map(|p| p.map(|c| c * s)).collect();
    Ok(cloud.with_points(points)?)
}

pub fn run(args: &InvarianceArgs, config: &RunConfig) -> CliResult<()> {
    if let Some(s) = args.scale {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Usage(format!("--scale must be positive, got {s}")));
        }
    }
    let cloud = args.scan.load(config, true)?;
    let geometry = config.sensor.geometry()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.run.seed);
    let (worst_raw, worst_values) = with_workers(config.run.workers, || -> CliResult<(f64, f64)> {
        // Regions are fixed in the original frame so that only the feature
        // math is under test.
        let mut jobs = ring_regions(&cloud, &geometry, &config.rapid)?;
        if cloud.labels().is_some() {
            jobs.extend(class_regions(&cloud, &config.rapid)?);
        }
        let base = extract_regions(&jobs, &cloud, &config.rapid, None)?;
        let (mut worst_raw, mut worst_values) = (0.0f64, 0.0f64);
        for trial in 0..args.trials {
            let t = if args.identity {
                RigidTransform::identity()
            } else {
                RigidTransform::random(&mut rng, args.spread)
            };
            let mut moved = apply_transform(&cloud, &t);
            if let Some(s) = args.scale {
                moved = scaled(&moved, s)?;
            }
            let again = extract_regions(&jobs, &moved, &config.rapid, None)?;
            let (raw, values) = deviation(&base, &again, cloud.len());
            println!("trial {trial:>3}: raw {raw:.3e}  normalized {values:.3e}");
            worst_raw = worst_raw.max(raw);
            worst_values = worst_values.max(values);
        }
        Ok((worst_raw, worst_values))
    })??;
    println!(
        "{} points, {} trials: max raw deviation {worst_raw:.3e}, max normalized deviation {worst_values:.3e} (tolerance {:.1e})",
        cloud.len(),
        args.trials,
        args.tolerance
    );
    if worst_raw > args.tolerance {
        return Err(CliError::Invariant(format!(
            "max deviation {worst_raw:.3e} exceeds {:.1e}",
            args.tolerance
        )));
    }
    Ok(())
}
