use std::path::PathBuf;

use clap::Args;
use rapid_core::config::RunConfig;
use rapid_core::io::save_features;
use rapid_core::partition::{class_matrices, ring_matrices};
use rapid_core::RapidMatrix;

use super::{ensure_dir, stem};
use crate::error::CliResult;
use crate::settings::{with_workers, ScanArgs};

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Output directory (default: output.dir from the config)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Histogram bins over [0, 1] in the statistics
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
}

fn histogram(values: &[f64], bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    for &v in values {
        let b = ((v * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
}

fn write_stats(
    family: &str,
    matrices: &[RapidMatrix],
    bins: usize,
    out: &mut csv::Writer<std::fs::File>,
) -> CliResult<()> {
    for m in matrices {
        let hist = histogram(&m.values, bins);
        let mut record = vec![
            family.to_string(),
            m.roi.to_string(),
            m.rows().to_string(),
            m.k.to_string(),
            m.padded.to_string(),
            m.normalization.outliers.to_string(),
        ];
        record.extend(hist.iter().map(|c| c.to_string()));
        out.write_record(&record)?;
    }
    Ok(())
}

fn summarize(family: &str, matrices: &[RapidMatrix], bins: usize) {
    let rows: usize = matrices.iter().map(RapidMatrix::rows).sum();
    let padded: usize = matrices.iter().filter(|m| m.padded).map(RapidMatrix::rows).sum();
    let outliers: usize = matrices.iter().map(|m| m.normalization.outliers).sum();
    let entries: usize = matrices.iter().filter(|m| !m.padded).map(|m| m.values.len()).sum();
    let all: Vec<f64> = matrices
        .iter()
        .filter(|m| !m.padded)
        .flat_map(|m| m.values.iter().copied())
        .collect();
    println!(
        "{family}: {} regions, {rows} rows, padding rate {:.4}, {outliers}/{entries} entries beyond delta",
        matrices.len(),
        if rows == 0 { 0.0 } else { padded as f64 / rows as f64 }
    );
    println!("{family}: value histogram over [0, 1]: {:?}", histogram(&all, bins));
    println!(
        "{:<18} {:>7} {:>3} {:>7} {:>9}",
        "roi", "rows", "k", "padded", "outliers"
    );
    for m in matrices {
        println!(
            "{:<18} {:>7} {:>3} {:>7} {:>9}",
            m.roi.to_string(),
            m.rows(),
            m.k,
            m.padded,
            m.normalization.outliers
        );
    }
}

pub fn run(args: &ExtractArgs, config: &RunConfig) -> CliResult<()> {
    let bins = args.bins.max(1);
    let cloud = args.scan.load(config, false)?;
    let geometry = config.sensor.geometry()?;
    let source = args.scan.scan_path(config);
    let name = stem(source.as_deref());
    let out = args.out.clone().unwrap_or_else(|| config.output.dir.clone());
    ensure_dir(&out)?;

    let (rings, classes) = with_workers(config.run.workers, || -> CliResult<_> {
        let rings = ring_matrices(&cloud, &geometry, &config.rapid, None)?;
        let classes = match cloud.labels() {
            Some(_) => Some(class_matrices(&cloud, &config.rapid, None)?),
            None => None,
        };
        Ok((rings, classes))
    })??;

    println!(
        "{}: {} points",
        source
            .as_deref()
            .map_or("synthetic".into(), |p| p.display().to_string()),
        cloud.len()
    );
    let ring_path = out.join(format!("{name}.r-rapid.rapd"));
    save_features(&rings, &ring_path)?;
    summarize("r-rapid", &rings, bins);
    println!("wrote {}", ring_path.display());

    let stats_path = out.join(format!("{name}.stats.csv"));
    let mut stats = csv::Writer::from_path(&stats_path)?;
    let mut header: Vec<String> = ["family", "roi", "rows", "k", "padded", "outliers"]
        .map(String::from)
        .to_vec();
    header.extend((0..bins).map(|b| format!("bin{b}")));
    stats.write_record(&header)?;
    write_stats("r-rapid", &rings, bins, &mut stats)?;

    if let Some(classes) = classes {
        let class_path = out.join(format!("{name}.c-rapid.rapd"));
        save_features(&classes, &class_path)?;
        summarize("c-rapid", &classes, bins);
        write_stats("c-rapid", &classes, bins, &mut stats)?;
        println!("wrote {}", class_path.display());
    } else {
        println!("no labels: skipped c-rapid");
    }
    stats.flush()?;
    println!("wrote {}", stats_path.display());
    Ok(())
}
