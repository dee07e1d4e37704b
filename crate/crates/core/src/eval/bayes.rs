use std::f64::consts::PI;

use super::{softmax, Samples};

pub struct GaussianNb {
    log_prior: Vec<f64>,
    mean: Vec<Vec<f64>>,
    var: Vec<Vec<f64>>,
}

impl GaussianNb {
    /// Per-class, per-attribute Gaussians. Variances get a floor of 1e-9
    /// times the largest attribute variance (and never below 1e-12).
    pub fn fit(samples: &Samples) -> GaussianNb {
        let (k, n) = (samples.n_classes, samples.n_features());
        let counts = samples.class_counts();
        let total = samples.len() as f64;

        let mut overall_max_var: f64 = 0.0;
        for f in 0..n {
            let m = samples.x.iter().map(|x| x[f]).sum::<f64>() / total;
            let v = samples.x.iter().map(|x| (x[f] - m).powi(2)).sum::<f64>() / total;
            overall_max_var = overall_max_var.max(v);
        }
        let floor = (1e-9 * overall_max_var).max(1e-12);

        let mut mean = vec![vec![0.0; n]; k];
        for (x, &c) in samples.x.iter().zip(&samples.y) {
            for (m, v) in mean[c].iter_mut().zip(x.iter()) {
                *m += v;
            }
        }
        for (m, &count) in mean.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|v| *v /= count.max(1) as f64);
        }
        let mut var = vec![vec![0.0; n]; k];
        for (x, &c) in samples.x.iter().zip(&samples.y) {
            for ((s, m), v) in var[c].iter_mut().zip(&mean[c]).zip(x.iter()) {
                *s += (v - m).powi(2);
            }
        }
        for (s, &count) in var.iter_mut().zip(&counts) {
            s.iter_mut().for_each(|v| *v = *v / count.max(1) as f64 + floor);
        }
        let log_prior = counts
            .iter()
            .map(|&c| if c == 0 { f64::NEG_INFINITY } else { (c as f64 / total).ln() })
            .collect();
        GaussianNb { log_prior, mean, var }
    }

    pub fn joint_log_likelihood(&self, x: &[f64]) -> Vec<f64> {
        (0..self.log_prior.len())
            .map(|c| {
                self.log_prior[c]
                    + x.iter()
                        .enumerate()
                        .map(|(f, &v)| {
                            let var = self.var[c][f];
                            -0.5 * (2.0 * PI * var).ln() - (v - self.mean[c][f]).powi(2) / (2.0 * var)
                        })
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn score(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.joint_log_likelihood(x))
    }
}
