use std::fs;
use std::path::PathBuf;

use clap::Args;
use rapid_core::io::load_features;
use rapid_core::{RapidMatrix, RoiId};

use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    /// Feature container written by `extract`
    #[arg(long, value_name = "FILE")]
    pub features: PathBuf,
    /// Region as kind:group:band, e.g. ring:12:close
    #[arg(long, required_unless_present = "list")]
    pub roi: Option<String>,
    /// Output image
    #[arg(long, value_name = "FILE", required_unless_present = "list")]
    pub out: Option<PathBuf>,
    /// List the regions in the file instead
    #[arg(long)]
    pub list: bool,
}

/// Binary PGM of the matrix: width `k`, height `u`, rows in stored order,
/// values in [0, 1] mapped to [0, 255].
pub fn pgm(m: &RapidMatrix) -> Vec<u8> {
    let mut bytes = format!("P5\n{} {}\n255\n", m.k, m.rows()).into_bytes();
    bytes.extend(m.values.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    bytes
}

pub fn run(args: &HeatmapArgs) -> CliResult<()> {
    let matrices = load_features(&args.features)?;
    if args.list {
        for m in &matrices {
            println!(
                "{} {}x{}{}",
                m.roi,
                m.rows(),
                m.k,
                if m.padded { " padded" } else { "" }
            );
        }
        return Ok(());
    }
    let (Some(roi), Some(out)) = (&args.roi, &args.out) else {
        return Err(CliError::Usage("--roi and --out are required".into()));
    };
    let roi: RoiId = roi
        .parse()
        .map_err(|e: rapid_core::RapidError| CliError::Usage(e.to_string()))?;
    let m = matrices
        .iter()
        .find(|m| m.roi == roi)
        .ok_or_else(|| CliError::data(format!("region {roi} not found in {}", args.features.display())))?;
    fs::write(out, pgm(m)).map_err(|e| CliError::data(format!("{}: {e}", out.display())))?;
    println!("wrote {} ({}x{})", out.display(), m.k, m.rows());
    Ok(())
}
