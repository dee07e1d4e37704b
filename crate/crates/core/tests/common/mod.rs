#![allow(dead_code)]

use glc_core::data::{load_dataset_path, normalize_dataset, AttributeStats};
use glc_core::{CaseId, CaseRecord, NormalizedDataset, Provenance};

pub const SETOSA: &str = "Iris-setosa";
pub const VERSICOLOR: &str = "Iris-versicolor";
pub const VIRGINICA: &str = "Iris-virginica";

pub fn iris() -> NormalizedDataset {
    normalize_dataset(&load_dataset_path(concat!(env!("CARGO_MANIFEST_DIR"), "/data/iris.csv")).unwrap())
}

/// A dataset over already-normalized points with unit attribute ranges.
pub fn unit_dataset(points: &[Vec<f64>], labels: &[&str]) -> NormalizedDataset {
    let n = points.first().map_or(0, Vec::len);
    NormalizedDataset::from_parts(
        (0..n).map(|i| format!("x{}", i + 1)).collect(),
        AttributeStats::from_rows(&[vec![0.0; n], vec![1.0; n]], n),
        points
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (p, l))| CaseRecord {
                id: CaseId(i as u64),
                values: p.clone(),
                label: l.to_string(),
                provenance: Provenance::Real,
            })
            .collect(),
        &[],
    )
}
