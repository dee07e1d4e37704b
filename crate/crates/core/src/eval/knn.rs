use super::Samples;

pub struct Knn {
    x: Vec<Vec<f64>>,
    y: Vec<usize>,
    n_classes: usize,
    k: usize,
}

impl Knn {
    pub fn fit(samples: &Samples, k: usize) -> Knn {
        Knn {
            x: samples.x.iter().map(|v| v.to_vec()).collect(),
            y: samples.y.clone(),
            n_classes: samples.n_classes,
            k: k.min(samples.len()),
        }
    }

    /// Vote shares among the k nearest; equal distances resolve by
    /// training order.
    pub fn score(&self, x: &[f64]) -> Vec<f64> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, t)| (t.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let k = self.k;
        d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0.0; self.n_classes];
        for &(_, i) in &d[..k] {
            votes[self.y[i]] += 1.0;
        }
        votes.iter().map(|v| v / k as f64).collect()
    }
}
