use nalgebra::{DMatrix, DVector};

use super::{softmax, Samples};

/// One-vs-rest least squares on ±1 targets with an unpenalized intercept.
pub struct Ridge {
    /// n_features × n_classes
    w: DMatrix<f64>,
    b: DVector<f64>,
}

impl Ridge {
    pub fn fit(s: &Samples, alpha: f64) -> Ridge {
        let (k, n, m) = (s.n_classes, s.n_features(), s.len());
        let x = DMatrix::from_fn(m, n, |i, f| s.x[i][f]);
        let y = DMatrix::from_fn(m, k, |i, c| if s.y[i] == c { 1.0 } else { -1.0 });
        let x_mean = x.row_mean();
        let y_mean = y.row_mean();
        let mut xc = x;
        let mut yc = y;
        for mut row in xc.row_iter_mut() {
            row -= &x_mean;
        }
        for mut row in yc.row_iter_mut() {
            row -= &y_mean;
        }
        let xt = xc.transpose();
        let gram = &xt * &xc + DMatrix::identity(n, n) * alpha;
        let rhs = &xt * &yc;
        let w = match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => gram.pseudo_inverse(1e-12).expect("pseudo-inverse of a square matrix") * rhs,
        };
        let b = (y_mean - x_mean * &w).transpose();
        Ridge { w, b }
    }

    pub fn decision(&self, x: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        (self.w.transpose() * x + &self.b).iter().copied().collect()
    }

    pub fn score(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.decision(x))
    }
}
