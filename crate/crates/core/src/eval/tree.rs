//! CART with Gini impurity. Features are tried in index order and
//! thresholds sit at midpoints between distinct values.

use super::Samples;

enum Node {
    Leaf(Vec<f64>),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

pub struct Tree {
    root: Node,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

impl Tree {
    pub fn fit(samples: &Samples, max_depth: usize, min_leaf: usize) -> Tree {
        let idx: Vec<usize> = (0..samples.len()).collect();
        Tree {
            root: build(samples, idx, 0, max_depth, min_leaf),
        }
    }

    pub fn score(&self, x: &[f64]) -> Vec<f64> {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(dist) => return dist.clone(),
                Node::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }
}

fn build(s: &Samples, idx: Vec<usize>, depth: usize, max_depth: usize, min_leaf: usize) -> Node {
    let k = s.n_classes;
    let mut counts = vec![0usize; k];
    for &i in &idx {
        counts[s.y[i]] += 1;
    }
    let leaf = |counts: &[usize]| {
        let n = idx.len() as f64;
        Node::Leaf(counts.iter().map(|&c| c as f64 / n).collect())
    };
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= max_depth || idx.len() < 2 * min_leaf {
        return leaf(&counts);
    }

    let n = idx.len();
    let parent = gini(&counts, n);
    // (weighted child impurity, feature, threshold)
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..s.n_features() {
        let mut order = idx.clone();
        order.sort_by(|&a, &b| s.x[a][f].total_cmp(&s.x[b][f]).then(a.cmp(&b)));
        let mut left = vec![0usize; k];
        let mut right = counts.clone();
        for pos in 1..n {
            let moved = order[pos - 1];
            left[s.y[moved]] += 1;
            right[s.y[moved]] -= 1;
            let (lo, hi) = (s.x[moved][f], s.x[order[pos]][f]);
            if lo == hi || pos < min_leaf || n - pos < min_leaf {
                continue;
            }
            let impurity = (pos as f64 * gini(&left, pos) + (n - pos) as f64 * gini(&right, n - pos)) / n as f64;
            if best.is_none_or(|(b, _, _)| impurity < b) {
                best = Some((impurity, f, (lo + hi) / 2.0));
            }
        }
    }
    let Some((impurity, feature, threshold)) = best else {
        return leaf(&counts);
    };
    if impurity >= parent {
        return leaf(&counts);
    }
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| s.x[i][feature] <= threshold);
    Node::Split {
        feature,
        threshold,
        left: Box::new(build(s, l, depth + 1, max_depth, min_leaf)),
        right: Box::new(build(s, r, depth + 1, max_depth, min_leaf)),
    }
}
