//! Per-class IoU and mIoU from a confusion matrix.

use crate::error::{RapidError, Result};

/// How classes with an empty union enter the mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UndefinedClass {
    /// Leave them out of the mean.
    #[default]
    Exclude,
    /// Count them as IoU 0.
    Zero,
}

/// Counts indexed `[truth][prediction]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
    ignore: Vec<bool>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize, ignored: &[u32]) -> Self {
        let mut ignore = vec![false; classes];
        for &c in ignored {
            if let Some(slot) = ignore.get_mut(c as usize) {
                *slot = true;
            }
        }
        Self {
            classes,
            counts: vec![0; classes * classes],
            ignore,
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn is_ignored(&self, class: usize) -> bool {
        self.ignore.get(class).copied().unwrap_or(false)
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes + pred]
    }

    /// Number of evaluated (non-ignored) points.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Adds one scan. Points whose true class is ignored are skipped.
    pub fn accumulate(&mut self, truth: &[u32], pred: &[u32]) -> Result<()> {
        if truth.len() != pred.len() {
            return Err(RapidError::contract(format!(
                "{} truth labels but {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        let n = self.classes;
        for (i, (&t, &p)) in truth.iter().zip(pred).enumerate() {
            let (t, p) = (t as usize, p as usize);
            if self.is_ignored(t) {
                continue;
            }
            if t >= n || p >= n {
                return Err(RapidError::contract(format!(
                    "point {i}: label pair ({t}, {p}) outside {n} classes"
                )));
            }
            self.counts[t * n + p] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes || other.ignore != self.ignore {
            return Err(RapidError::contract("confusion matrices have different layouts"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// `(TP, FP, FN)` for one class.
    pub fn tp_fp_fn(&self, class: usize) -> (u64, u64, u64) {
        let n = self.classes;
        let tp = self.get(class, class);
        let row: u64 = (0..n).map(|p| self.get(class, p)).sum();
        let col: u64 = (0..n).map(|t| self.get(t, class)).sum();
        (tp, col - tp, row - tp)
    }

    /// `TP / (TP + FP + FN)`, or `None` for ignored classes and empty unions.
    pub fn iou(&self, class: usize) -> Option<f64> {
        if class >= self.classes || self.is_ignored(class) {
            return None;
        }
        let (tp, fp, fn_) = self.tp_fp_fn(class);
        let union = tp + fp + fn_;
        (union > 0).then(|| tp as f64 / union as f64)
    }

    pub fn per_class_iou(&self) -> Vec<Option<f64>> {
        (0..self.classes).map(|c| self.iou(c)).collect()
    }

    pub fn miou(&self) -> Result<f64> {
        self.miou_with(UndefinedClass::Exclude)
    }

    pub fn miou_with(&self, policy: UndefinedClass) -> Result<f64> {
        let values: Vec<f64> = (0..self.classes)
            .filter(|&c| !self.is_ignored(c))
            .filter_map(|c| match (self.iou(c), policy) {
                (Some(v), _) => Some(v),
                (None, UndefinedClass::Zero) => Some(0.0),
                (None, UndefinedClass::Exclude) => None,
            })
            .collect();
        if values.is_empty() || self.total() == 0 {
            return Err(RapidError::UndefinedMetric("no class has a defined IoU".into()));
        }
        Ok(values.iter().sum::<f64>() / values.len() as f64)
    }
}
