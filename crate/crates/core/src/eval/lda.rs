use nalgebra::{DMatrix, DVector};

use crate::data::NormalizedDataset;
use crate::error::{Error, Result};

use super::{samples_of, softmax, Samples};

pub struct Lda {
    /// Per class: Σ⁻¹μ_c
    weights: Vec<DVector<f64>>,
    /// Per class: -½ μ_cᵀΣ⁻¹μ_c + ln π_c
    bias: Vec<f64>,
}

struct Moments {
    means: Vec<DVector<f64>>,
    counts: Vec<usize>,
    /// Pooled within-class covariance.
    pooled: DMatrix<f64>,
}

fn moments(s: &Samples) -> Moments {
    let (k, n) = (s.n_classes, s.n_features());
    let counts = s.class_counts();
    let mut means = vec![DVector::zeros(n); k];
    for (x, &c) in s.x.iter().zip(&s.y) {
        means[c] += DVector::from_column_slice(x);
    }
    for c in 0..k {
        means[c] /= counts[c].max(1) as f64;
    }
    let mut scatter = DMatrix::zeros(n, n);
    for (x, &c) in s.x.iter().zip(&s.y) {
        let d = DVector::from_column_slice(x) - &means[c];
        scatter += &d * d.transpose();
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    let dof = s.len().saturating_sub(present).max(1);
    Moments {
        means,
        counts,
        pooled: scatter / dof as f64,
    }
}

/// Inverts `m`, adding a growing ridge until it is positive definite.
/// The flag reports whether a ridge was needed.
fn regularized_inverse(m: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let n = m.nrows();
    let scale = (m.trace() / n.max(1) as f64).max(1e-12);
    let well_conditioned = |m: &DMatrix<f64>| {
        let eig = m.clone().symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
        lo > 1e-12 * hi.max(1e-300)
    };
    if well_conditioned(m) {
        if let Some(ch) = m.clone().cholesky() {
            return (ch.inverse(), false);
        }
    }
    let mut ridge = 1e-6 * scale;
    loop {
        let r = m + DMatrix::identity(n, n) * ridge;
        if let Some(ch) = r.cholesky() {
            return (ch.inverse(), true);
        }
        ridge *= 10.0;
    }
}

impl Lda {
    pub fn fit(s: &Samples) -> (Lda, bool) {
        let m = moments(s);
        let (inv, regularized) = regularized_inverse(&m.pooled);
        let total = s.len() as f64;
        let mut weights = Vec::with_capacity(s.n_classes);
        let mut bias = Vec::with_capacity(s.n_classes);
        for (mu, &count) in m.means.iter().zip(&m.counts) {
            let w = &inv * mu;
            let prior = if count == 0 { f64::NEG_INFINITY } else { (count as f64 / total).ln() };
            bias.push(-0.5 * mu.dot(&w) + prior);
            weights.push(w);
        }
        (Lda { weights, bias }, regularized)
    }

    pub fn score(&self, x: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        let d: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| w.dot(&x) + b)
            .collect();
        softmax(&d)
    }
}

/// DCC coefficients from discriminant directions: Σ over class pairs of
/// |Σ⁻¹(μ_a − μ_b)|, scaled so the largest is 1 and floored at 0.01.
pub fn lda_coefficients(dataset: &NormalizedDataset) -> Result<Vec<f64>> {
    let s = samples_of(dataset);
    if s.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::Degenerate("LDA coefficients need at least two classes".into()));
    }
    let m = moments(&s);
    let (inv, _) = regularized_inverse(&m.pooled);
    let n = s.n_features();
    let mut total = DVector::zeros(n);
    for a in 0..m.means.len() {
        for b in a + 1..m.means.len() {
            if m.counts[a] == 0 || m.counts[b] == 0 {
                continue;
            }
            total += (&inv * (&m.means[a] - &m.means[b])).abs();
        }
    }
    let max = total.max();
    Ok(total
        .iter()
        .map(|&c| if max > 0.0 { (c / max).max(0.01) } else { 1.0 })
        .collect())
}
