use std::path::PathBuf;

use clap::Args;
use ndarray::{Array2, Array3};
use rapid_core::config::RunConfig;
use rapid_core::embed::{
    contrastive_loss, forward, reconstruction_loss, total_loss, voxelize, vsa_encode, EmbedDims, VoxelGroups, WeightSet,
};
use rapid_core::fusion::{fuse_attention, FusionGate};
use rapid_core::io::{load_weights, save_weights};
use rapid_core::partition::r_rapid;

use crate::error::{CliError, CliResult};
use crate::settings::{with_workers, ScanArgs};

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Save the weights used for the RAPiD branch to this container
    #[arg(long, value_name = "FILE")]
    pub save_weights: Option<PathBuf>,
}

/// Voxel-wise embedding `c × l × w` of a `m × w` pointwise input under
/// seeded encoder weights.
fn side_embedding(
    g: &Array2<f64>,
    latent: usize,
    groups: &VoxelGroups,
    seed: u64,
    config: &RunConfig,
) -> CliResult<Array3<f64>> {
    let w = g.ncols();
    let dims = EmbedDims {
        latent,
        d: w,
        d_prime: w,
        stages: 1,
    };
    let weights = WeightSet::seeded(dims, config.embed.activation, seed)?;
    Ok(vsa_encode(g, &weights.latent, &weights, groups)?.h_v)
}

pub fn run(args: &EmbedArgs, config: &RunConfig) -> CliResult<()> {
    let cloud = args.scan.load(config, true)?;
    let geometry = config.sensor.geometry()?;
    let dims = config.embed.dims();
    if dims.d != config.rapid.k_max() {
        return Err(CliError::Usage(format!(
            "embed.d = {} must equal the largest k = {}",
            dims.d,
            config.rapid.k_max()
        )));
    }
    let weights = match &config.embed.weights {
        Some(path) => WeightSet::from_tensors(&load_weights(path)?, config.embed.activation)?,
        None => WeightSet::seeded(dims, config.embed.activation, config.run.seed)?,
    };
    if weights.dims != dims {
        return Err(CliError::data(format!(
            "weights have dims {:?}, config expects {dims:?}",
            weights.dims
        )));
    }
    if let Some(path) = &args.save_weights {
        save_weights(&weights.to_tensors(), path)?;
        println!("wrote {}", path.display());
    }

    with_workers(config.run.workers, || -> CliResult<()> {
        let features = r_rapid(&cloud, &geometry, &config.rapid)?;
        let m = cloud.len();
        let g = Array2::from_shape_vec((m, dims.d), features.values().to_vec()).expect("m × k_max features");
        let groups = voxelize(cloud.points(), config.embed.voxel_size)?;
        let out = forward(&g, &weights, &groups)?;
        let recon = reconstruction_loss(&g, &out.g_hat)?;
        println!(
            "{m} points in {} voxels; l = {}, d = {}, d' = {}, {} stages",
            groups.voxel_count(),
            dims.latent,
            dims.d,
            dims.d_prime,
            dims.stages
        );
        println!("reconstruction loss {recon:.6e}");

        match cloud.labels() {
            Some(labels) => {
                let h = out
                    .encoded
                    .h
                    .to_shape((m, dims.latent * dims.d))
                    .map_err(|e| CliError::data(e.to_string()))?
                    .to_owned();
                let contr = contrastive_loss(&h, cloud.points(), labels, config.loss.alpha, config.loss.similarity)?;
                let total = total_loss(recon, contr.value, config.loss.lambda)?;
                println!(
                    "contrastive loss {:.6e} ({} positive, {} negative terms{})",
                    contr.value,
                    contr.positive_terms,
                    contr.negative_terms,
                    if contr.single_class {
                        "; single class, negatives undefined"
                    } else {
                        ""
                    }
                );
                println!("total loss {total:.6e} (lambda {})", config.loss.lambda);
            }
            None => println!("no labels: contrastive loss skipped"),
        }

        let coords = Array2::from_shape_fn((m, 3), |(i, c)| cloud.point(i)[c]);
        let intensity = Array2::from_shape_fn((m, 1), |(i, _)| cloud.remission()[i]);
        let seed = config.run.seed;
        let parts = [
            side_embedding(&coords, dims.latent, &groups, seed.wrapping_add(1), config)?,
            side_embedding(&intensity, dims.latent, &groups, seed.wrapping_add(2), config)?,
            out.encoded.h_v.clone(),
        ];
        let width: usize = parts.iter().map(|p| p.dim().2).sum();
        let gate = FusionGate::seeded(width, config.fusion.ratio, seed.wrapping_add(3));
        let fused = fuse_attention(&parts, &gate)?;
        let norm = |x: &Array3<f64>| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (lo, hi) = fused
            .a_z
            .iter()
            .fold((1.0f64, 0.0f64), |(lo, hi), &a| (lo.min(a), hi.max(a)));
        println!(
            "fusion: f* = {width} (coordinates {}, intensity {}, rapid {}), a_z in [{lo:.4}, {hi:.4}], mean {:.4}, |E'|/|E| = {:.4}",
            parts[0].dim().2,
            parts[1].dim().2,
            parts[2].dim().2,
            fused.a_z.mean().unwrap_or(0.0),
            norm(&fused.e_prime) / norm(&fused.e).max(f64::MIN_POSITIVE)
        );
        Ok(())
    })?
}
