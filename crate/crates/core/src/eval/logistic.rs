use super::{softmax, Samples};

/// Multinomial logistic regression fit by Nesterov-accelerated gradient
/// descent from zero weights for a fixed number of steps.
pub struct Logistic {
    /// Row-major k × (n + 1); the last column holds intercepts.
    w: Vec<f64>,
    k: usize,
    n: usize,
}

impl Logistic {
    pub fn fit(s: &Samples, l2: f64, iterations: usize, learning_rate: f64) -> Logistic {
        let (k, n) = (s.n_classes, s.n_features());
        let stride = n + 1;
        let m = s.len() as f64;
        let mut w = vec![0.0; k * stride];
        let mut prev = w.clone();
        let mut look = w.clone();
        let mut grad = w.clone();
        let mut z = vec![0.0; k];
        for t in 0..iterations {
            let momentum = t as f64 / (t as f64 + 3.0);
            for i in 0..w.len() {
                look[i] = w[i] + momentum * (w[i] - prev[i]);
            }
            grad.fill(0.0);
            for (x, &y) in s.x.iter().zip(&s.y) {
                decision_into(&look, n, x, &mut z);
                softmax_in_place(&mut z);
                for c in 0..k {
                    let r = z[c] - if c == y { 1.0 } else { 0.0 };
                    let g = &mut grad[c * stride..(c + 1) * stride];
                    for f in 0..n {
                        g[f] += r * x[f];
                    }
                    g[n] += r;
                }
            }
            std::mem::swap(&mut prev, &mut w);
            for i in 0..w.len() {
                let penalty = if i % stride < n { l2 * look[i] } else { 0.0 };
                w[i] = look[i] - learning_rate * (grad[i] + penalty) / m;
            }
        }
        Logistic { w, k, n }
    }

    pub fn score(&self, x: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.k];
        decision_into(&self.w, self.n, x, &mut z);
        softmax(&z)
    }
}

fn decision_into(w: &[f64], n: usize, x: &[f64], out: &mut [f64]) {
    for (c, o) in out.iter_mut().enumerate() {
        let row = &w[c * (n + 1)..(c + 1) * (n + 1)];
        *o = row[..n].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + row[n];
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}
