use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rapid_core::config::RunConfig;
use rapid_core::io::{encode_features, save_kitti_labels, save_kitti_scan};
use rapid_core::partition::{class_regions, extract_regions, ring_regions};
use rapid_core::rapid::StageProfile;

use crate::error::{CliError, CliResult};
use crate::settings::{load_scan, synthetic, with_workers, ScanArgs};

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Worker counts to time
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub workers_list: Vec<usize>,
    /// Runs per worker count; the median is reported
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub repeats: u32,
    /// Write one row per run here
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct Timing {
    load: f64,
    partition: f64,
    knn: f64,
    sort: f64,
    normalize: f64,
    total: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

pub fn run(args: &BenchArgs, config: &RunConfig) -> CliResult<()> {
    if args.workers_list.contains(&0) {
        return Err(CliError::Usage("worker counts must be positive".into()));
    }
    // Synthetic scenes go through a file so the load stage is real I/O.
    let scratch = std::env::temp_dir().join(format!("rapid-bench-{}.bin", std::process::id()));
    let (path, labels) = match args.scan.scan_path(config) {
        Some(p) => (p, args.scan.labels.clone().or(config.input.labels.clone())),
        None => {
            let cloud = synthetic(config)?;
            save_kitti_scan(&cloud, &scratch)?;
            save_kitti_labels(cloud.labels().unwrap_or_default(), scratch.with_extension("label"))?;
            (scratch.clone(), Some(scratch.with_extension("label")))
        }
    };
    let mut load_config = config.clone();
    if path == scratch {
        load_config.input.format = rapid_core::config::ScanFormat::Kitti;
    }
    let geometry = config.sensor.geometry()?;

    let mut reference: Option<Vec<u8>> = None;
    let mut points = 0;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &workers in &args.workers_list {
        let mut timings = Vec::new();
        let mut identical = true;
        for repeat in 0..args.repeats {
            let t = with_workers(workers, || -> CliResult<(Timing, Vec<u8>, usize)> {
                let start = Instant::now();
                let cloud = load_scan(&path, labels.as_ref(), &load_config)?;
                let load = start.elapsed().as_secs_f64();
                let clock = Instant::now();
                let mut jobs = ring_regions(&cloud, &geometry, &config.rapid)?;
                if cloud.labels().is_some() {
                    jobs.extend(class_regions(&cloud, &config.rapid)?);
                }
                let partition = clock.elapsed().as_secs_f64();
                let profile = StageProfile::default();
                let matrices = extract_regions(&jobs, &cloud, &config.rapid, Some(&profile))?;
                let total = start.elapsed().as_secs_f64();
                let timing = Timing {
                    load,
                    partition,
                    knn: profile.knn().as_secs_f64(),
                    sort: profile.sort().as_secs_f64(),
                    normalize: profile.normalize().as_secs_f64(),
                    total,
                };
                Ok((timing, encode_features(&matrices)?, cloud.len()))
            })??;
            let (timing, bytes, n) = t;
            points = n;
            match &reference {
                Some(r) => identical &= *r == bytes,
                None => reference = Some(bytes),
            }
            rows.push((workers, repeat, timing, n));
            timings.push(timing);
        }
        let pick = |f: fn(&Timing) -> f64| median(timings.iter().map(f).collect());
        summary.push((
            workers,
            Timing {
                load: pick(|t| t.load),
                partition: pick(|t| t.partition),
                knn: pick(|t| t.knn),
                sort: pick(|t| t.sort),
                normalize: pick(|t| t.normalize),
                total: pick(|t| t.total),
            },
            identical,
        ));
    }
    if path == scratch {
        let _ = std::fs::remove_file(&scratch);
        let _ = std::fs::remove_file(scratch.with_extension("label"));
    }

    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    println!("{points} points, {cores} cores available; knn/sort/normalize are summed over regions (CPU time when workers > 1)");
    println!(
        "{:>7} {:>8} {:>10} {:>8} {:>8} {:>10} {:>8} {:>8} {:>9}",
        "workers", "load", "partition", "knn", "sort", "normalize", "total", "speedup", "identical"
    );
    let base = summary[0].1.total;
    for (workers, t, identical) in &summary {
        println!(
            "{workers:>7} {:>8.4} {:>10.4} {:>8.4} {:>8.4} {:>10.4} {:>8.4} {:>8.2} {:>9}",
            t.load,
            t.partition,
            t.knn,
            t.sort,
            t.normalize,
            t.total,
            base / t.total,
            identical
        );
    }
    if let Some(csv_path) = &args.csv {
        let mut w = csv::Writer::from_path(csv_path)?;
        w.write_record([
            "workers",
            "repeat",
            "points",
            "load_s",
            "partition_s",
            "knn_s",
            "sort_s",
            "normalize_s",
            "total_s",
        ])?;
        for (workers, repeat, t, n) in &rows {
            w.write_record([
                workers.to_string(),
                repeat.to_string(),
                n.to_string(),
                t.load.to_string(),
                t.partition.to_string(),
                t.knn.to_string(),
                t.sort.to_string(),
                t.normalize.to_string(),
                t.total.to_string(),
            ])?;
        }
        w.flush()?;
        println!("wrote {}", csv_path.display());
    }
    if summary.iter().any(|s| !s.2) {
        return Err(CliError::Invariant("feature bytes differ across worker counts".into()));
    }
    Ok(())
}
