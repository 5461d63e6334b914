use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use rstar::primitives::GeomWithData;
use rstar::RTree;
use serde::{Deserialize, Serialize};

use crate::error::{RapidError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    /// Cosine similarity; a zero vector has similarity 0 with everything.
    #[default]
    Cosine,
    Dot,
}

impl Similarity {
    pub fn eval(self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        let dot = a.dot(&b);
        match self {
            Similarity::Dot => dot,
            Similarity::Cosine => {
                let norm = a.dot(&a).sqrt() * b.dot(&b).sqrt();
                if norm == 0.0 {
                    0.0
                } else {
                    dot / norm
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastiveLoss {
    pub value: f64,
    /// Points that had a same-class partner.
    pub positive_terms: usize,
    /// Points that had an other-class partner.
    pub negative_terms: usize,
    /// Set when no point had an other-class partner, i.e. one class only.
    pub single_class: bool,
}

/// Class-aware hinge loss over nearest same-class and other-class points.
///
/// For each point `i`, `p` is its nearest other point of the same class and
/// `n` its nearest point of a different class, by coordinate distance with
/// ties going to the lower index. The loss is the mean over all points of
/// `ReLU(α − sim(H_i, H_p)) + ReLU(sim(H_i, H_n) − α)`; a term whose
/// partner does not exist contributes nothing.
pub fn contrastive_loss(
    h: &Array2<f64>,
    points: &[[f64; 3]],
    labels: &[u32],
    alpha: f64,
    sim: Similarity,
) -> Result<ContrastiveLoss> {
    let m = h.nrows();
    if points.len() != m || labels.len() != m {
        return Err(RapidError::contract(format!(
            "{m} embeddings, {} points, {} labels",
            points.len(),
            labels.len()
        )));
    }
    if m == 0 {
        return Err(RapidError::contract("contrastive loss of an empty set"));
    }
    let mut by_class: BTreeMap<u32, Vec<Entry>> = BTreeMap::new();
    for (i, (p, &y)) in points.iter().zip(labels).enumerate() {
        by_class.entry(y).or_default().push(Entry::new(*p, i as u32));
    }
    let trees: Vec<(u32, RTree<Entry>)> = by_class.into_iter().map(|(y, e)| (y, RTree::bulk_load(e))).collect();
    let terms: Vec<(Option<f64>, Option<f64>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let hi = h.row(i);
            let mut same = None;
            let mut other: Option<(f64, u32)> = None;
            for (y, tree) in &trees {
                if *y == labels[i] {
                    same = nearest_in(tree, &points[i], Some(i as u32));
                } else if let Some(c) = nearest_in(tree, &points[i], None) {
                    if other.is_none_or(|o| (c.0, c.1) < o) {
                        other = Some(c);
                    }
                }
            }
            let positive = same.map(|(_, p)| (alpha - sim.eval(hi, h.row(p as usize))).max(0.0));
            let negative = other.map(|(_, n)| (sim.eval(hi, h.row(n as usize)) - alpha).max(0.0));
            (positive, negative)
        })
        .collect();
    let (mut total, mut positives, mut negatives) = (0.0, 0usize, 0usize);
    for (p, n) in terms {
        if let Some(p) = p {
            total += p;
            positives += 1;
        }
        if let Some(n) = n {
            total += n;
            negatives += 1;
        }
    }
    Ok(ContrastiveLoss {
        value: total / m as f64,
        positive_terms: positives,
        negative_terms: negatives,
        single_class: negatives == 0,
    })
}

type Entry = GeomWithData<[f64; 3], u32>;

/// Nearest entry by (squared distance, index), skipping `exclude`.
fn nearest_in(tree: &RTree<Entry>, query: &[f64; 3], exclude: Option<u32>) -> Option<(f64, u32)> {
    let mut best: Option<(f64, u32)> = None;
    for (e, d) in tree.nearest_neighbor_iter_with_distance_2(query) {
        if Some(e.data) == exclude {
            continue;
        }
        match best {
            Some((bd, _)) if d > bd => break,
            Some((_, bi)) if e.data < bi => best = Some((d, e.data)),
            Some(_) => {}
            None => best = Some((d, e.data)),
        }
    }
    best
}

/// Mean squared error over all `m · d` entries.
pub fn reconstruction_loss(g: &Array2<f64>, g_hat: &Array2<f64>) -> Result<f64> {
    if g.dim() != g_hat.dim() {
        return Err(RapidError::contract(format!(
            "reconstruction shape {:?} differs from input {:?}",
            g_hat.dim(),
            g.dim()
        )));
    }
    if g.is_empty() {
        return Err(RapidError::contract("reconstruction loss of an empty tensor"));
    }
    let sum: f64 = g.iter().zip(g_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / g.len() as f64)
}

/// `recon + λ · contr`.
pub fn total_loss(recon: f64, contr: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(RapidError::contract(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    Ok(recon + lambda * contr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_point_same_class_is_half() {
        let h = array![[1.0, 0.0], [0.0, 1.0]];
        let loss = contrastive_loss(&h, &[[0.0; 3], [1.0, 0.0, 0.0]], &[3, 3], 0.5, Similarity::Cosine).unwrap();
        assert_eq!(loss.value, 0.5);
        assert!(loss.single_class);
        assert_eq!(loss.positive_terms, 2);
    }

    #[test]
    fn separated_embeddings_cost_nothing() {
        let h = array![[1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [0.0, 3.0]];
        let pts = [[0.0; 3], [1.0, 0.0, 0.0], [0.5, 0.0, 0.0], [1.5, 0.0, 0.0]];
        let loss = contrastive_loss(&h, &pts, &[1, 1, 2, 2], 0.5, Similarity::Cosine).unwrap();
        assert_eq!(loss.value, 0.0);
        assert!(!loss.single_class);
    }

    #[test]
    fn cosine_of_zero_vector() {
        let z = array![0.0, 0.0];
        let a = array![1.0, 2.0];
        assert_eq!(Similarity::Cosine.eval(z.view(), a.view()), 0.0);
        assert_eq!(Similarity::Dot.eval(a.view(), a.view()), 5.0);
    }

    #[test]
    fn reconstruction_examples() {
        let g = Array2::zeros((2, 3));
        assert_eq!(reconstruction_loss(&g, &g).unwrap(), 0.0);
        assert_eq!(reconstruction_loss(&g, &Array2::ones((2, 3))).unwrap(), 1.0);
        let e = Array2::from_elem((2, 3), 0.3);
        let a = reconstruction_loss(&g, &e).unwrap();
        let b = reconstruction_loss(&g, &(&e * 2.0)).unwrap();
        assert!((b - 4.0 * a).abs() < 1e-15);
        assert!(reconstruction_loss(&g, &Array2::zeros((3, 2))).is_err());
    }

    #[test]
    fn total_loss_examples() {
        assert_eq!(total_loss(1.0, 2.0, 0.0).unwrap(), 1.0);
        assert!((total_loss(1.0, 2.0, 0.1).unwrap() - 1.2).abs() < 1e-15);
        assert!(total_loss(1.0, 2.0, -0.1).is_err());
    }
}
