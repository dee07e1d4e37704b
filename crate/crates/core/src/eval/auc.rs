use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AucOutcome {
    /// Macro average over classes present among the labels; `None` when
    /// no class has both positives and negatives.
    pub auc: Option<f64>,
    /// Classes left out because they have no positives or no negatives.
    pub skipped: Vec<usize>,
}

/// Macro one-vs-rest rank AUC. Tied scores count half.
pub fn compute_auc(scores: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<AucOutcome> {
    if n_classes < 2 {
        return Err(Error::config("AUC needs at least two classes"));
    }
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: scores.len(),
        });
    }
    if let Some(bad) = scores.iter().find(|s| s.len() != n_classes) {
        return Err(Error::DimensionMismatch {
            expected: n_classes,
            found: bad.len(),
        });
    }
    let mut sum = 0.0;
    let mut used = 0;
    let mut skipped = Vec::new();
    for c in 0..n_classes {
        let positives = labels.iter().filter(|&&l| l == c).count();
        let negatives = labels.len() - positives;
        if positives == 0 || negatives == 0 {
            skipped.push(c);
            continue;
        }
        let mut ranked: Vec<(f64, bool)> = scores.iter().zip(labels).map(|(s, &l)| (s[c], l == c)).collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Mann-Whitney U from mid-ranks.
        let mut rank_sum = 0.0;
        let mut i = 0;
        while i < ranked.len() {
            let mut j = i;
            while j < ranked.len() && ranked[j].0 == ranked[i].0 {
                j += 1;
            }
            let mid = (i + 1 + j) as f64 / 2.0;
            rank_sum += mid * ranked[i..j].iter().filter(|r| r.1).count() as f64;
            i = j;
        }
        let p = positives as f64;
        let u = rank_sum - p * (p + 1.0) / 2.0;
        sum += u / (p * negatives as f64);
        used += 1;
    }
    Ok(AucOutcome {
        auc: (used > 0).then(|| sum / used as f64),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_constant() {
        let scores = vec![vec![0.9, 0.1], vec![0.8, 0.2], vec![0.3, 0.7], vec![0.1, 0.9]];
        let labels = [0, 0, 1, 1];
        assert_eq!(compute_auc(&scores, &labels, 2).unwrap().auc, Some(1.0));
        let flat = vec![vec![0.5, 0.5]; 4];
        assert_eq!(compute_auc(&flat, &labels, 2).unwrap().auc, Some(0.5));
    }

    #[test]
    fn absent_class_skipped() {
        let scores = vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.7, 0.1]];
        let out = compute_auc(&scores, &[0, 1], 3).unwrap();
        assert_eq!(out.skipped, vec![2]);
        assert_eq!(out.auc, Some(1.0));
        let none = compute_auc(&scores[..1], &[0], 3).unwrap();
        assert_eq!(none.auc, None);
    }
}
