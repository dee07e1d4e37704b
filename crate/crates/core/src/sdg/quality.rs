use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::NormalizedDataset;
use crate::error::{Error, Result};

use super::SdgBatch;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityMetrics {
    pub alpha_precision: f64,
    pub beta_recall: f64,
    pub authenticity: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Nearest-neighbor-ball estimates on the given vectors. Each real case's
/// ball has the radius of its k-th nearest other real case.
pub fn quality_metrics_points(real: &[&[f64]], synth: &[&[f64]], k: usize) -> Result<QualityMetrics> {
    if k < 1 {
        return Err(Error::config("k must be at least 1"));
    }
    if synth.is_empty() {
        return Err(Error::Empty("no synthetic cases".into()));
    }
    if real.len() < k + 1 {
        return Err(Error::config(format!("need at least {} real cases for k = {k}", k + 1)));
    }
    let n = real[0].len();
    if let Some(bad) = real.iter().chain(synth).find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad.len() });
    }

    let radius: Vec<f64> = real
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let mut d: Vec<f64> = real
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, o)| distance(r, o))
                .collect();
            d.select_nth_unstable_by(k - 1, f64::total_cmp);
            d[k - 1]
        })
        .collect();

    let precise = synth
        .par_iter()
        .filter(|s| {
            let (j, d) = real
                .iter()
                .enumerate()
                .map(|(j, r)| (j, distance(s, r)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("real is non-empty");
            d <= radius[j]
        })
        .count();

    let recalled = real
        .par_iter()
        .zip(&radius)
        .filter(|(r, &rad)| synth.iter().any(|s| distance(r, s) <= rad))
        .count();

    let authentic = synth
        .par_iter()
        .filter(|s| !real.iter().any(|r| r == *s))
        .count();

    Ok(QualityMetrics {
        alpha_precision: precise as f64 / synth.len() as f64,
        beta_recall: recalled as f64 / real.len() as f64,
        authenticity: authentic as f64 / synth.len() as f64,
    })
}

pub fn quality_metrics(real: &NormalizedDataset, synth: &SdgBatch, k: usize) -> Result<QualityMetrics> {
    let r: Vec<&[f64]> = real.cases.iter().map(|c| c.values.as_slice()).collect();
    let s: Vec<&[f64]> = synth.cases.iter().map(|c| c.values.as_slice()).collect();
    quality_metrics_points(&r, &s, k)
}
