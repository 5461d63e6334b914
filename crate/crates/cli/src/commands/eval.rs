use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use rapid_core::io::load_label_file;
use rapid_core::metrics::{ConfusionMatrix, UndefinedClass};

use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of ground-truth `.label` files
    #[arg(long, value_name = "DIR")]
    pub truth: PathBuf,
    /// Directory of predicted `.label` files with the same names
    #[arg(long, value_name = "DIR")]
    pub pred: PathBuf,
    /// Number of classes (default: largest label seen + 1)
    #[arg(long)]
    pub classes: Option<usize>,
    /// Classes left out of the evaluation
    #[arg(long, value_delimiter = ',')]
    pub ignore: Vec<u32>,
    /// Count classes absent from both truth and prediction as IoU 0
    #[arg(long)]
    pub zero_undefined: bool,
    /// Write the per-class table here
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

fn label_files(dir: &Path) -> CliResult<Vec<String>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    let mut names = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "label") {
            names.push(path.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let truth_names = label_files(&args.truth)?;
    let pred_names = label_files(&args.pred)?;
    if truth_names.is_empty() {
        return Err(CliError::data(format!("{}: no .label files", args.truth.display())));
    }
    if truth_names != pred_names {
        let missing: Vec<_> = truth_names.iter().filter(|n| !pred_names.contains(n)).collect();
        let extra: Vec<_> = pred_names.iter().filter(|n| !truth_names.contains(n)).collect();
        return Err(CliError::data(format!(
            "scan lists differ: missing predictions {missing:?}, unmatched predictions {extra:?}"
        )));
    }
    let mut pairs = Vec::with_capacity(truth_names.len());
    for name in &truth_names {
        let truth = load_label_file(args.truth.join(name))?;
        let pred = load_label_file(args.pred.join(name))?;
        if truth.len() != pred.len() {
            return Err(CliError::data(format!(
                "{name}: {} truth labels but {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        pairs.push((truth, pred));
    }
    let seen = pairs
        .iter()
        .flat_map(|(t, p)| t.iter().chain(p))
        .max()
        .map_or(0, |&m| m as usize + 1);
    let classes = args.classes.unwrap_or(seen);
    if seen > classes {
        return Err(CliError::data(format!(
            "label {} is outside {classes} classes",
            seen - 1
        )));
    }
    let mut cm = ConfusionMatrix::new(classes, &args.ignore);
    for (truth, pred) in &pairs {
        cm.accumulate(truth, pred)?;
    }
    let policy = if args.zero_undefined {
        UndefinedClass::Zero
    } else {
        UndefinedClass::Exclude
    };
    let miou = cm.miou_with(policy)?;

    let mut rows = Vec::new();
    println!("{:>6} {:>10} {:>10} {:>10} {:>8}", "class", "tp", "fp", "fn", "iou");
    for class in (0..classes).filter(|&c| !cm.is_ignored(c)) {
        let (tp, fp, fn_) = cm.tp_fp_fn(class);
        let iou = cm.iou(class);
        let shown = iou.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        println!("{class:>6} {tp:>10} {fp:>10} {fn_:>10} {shown:>8}");
        rows.push([
            class.to_string(),
            tp.to_string(),
            fp.to_string(),
            fn_.to_string(),
            iou.map_or(String::new(), |v| v.to_string()),
        ]);
    }
    println!("{} scans, mIoU {miou:.4}", pairs.len());
    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["class", "tp", "fp", "fn", "iou"])?;
        for row in &rows {
            w.write_record(row)?;
        }
        w.write_record(["mean", "", "", "", &miou.to_string()])?;
        w.flush()?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
