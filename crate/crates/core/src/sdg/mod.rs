//! Seeded synthetic case generators.

mod label;
mod quality;

pub use label::auto_label;
pub use quality::{quality_metrics, quality_metrics_points, QualityMetrics};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{CaseId, CaseRecord, NormalizedDataset, Provenance};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum SdgStrategy {
    SingleShift {
        case_id: CaseId,
        coordinate: usize,
        delta: f64,
    },
    /// A one-element `delta` applies to every attribute.
    DuplicateShift { delta: Vec<f64> },
    InBoundsUniform { class: String, count: usize },
    InBoundsProportional { class: String, count: usize },
    OutOfBounds {
        class: String,
        coordinate: usize,
        lo: f64,
        hi: f64,
        count: usize,
    },
    Unbounded { count: usize },
}

impl SdgStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            SdgStrategy::SingleShift { .. } => "single_shift",
            SdgStrategy::DuplicateShift { .. } => "duplicate_shift",
            SdgStrategy::InBoundsUniform { .. } => "in_bounds_uniform",
            SdgStrategy::InBoundsProportional { .. } => "in_bounds_proportional",
            SdgStrategy::OutOfBounds { .. } => "out_of_bounds",
            SdgStrategy::Unbounded { .. } => "unbounded",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdgBatch {
    pub strategy: SdgStrategy,
    pub seed: u64,
    /// Ids continue from the source dataset's next free id.
    pub cases: Vec<CaseRecord>,
}

impl SdgBatch {
    fn new(dataset: &NormalizedDataset, strategy: SdgStrategy, seed: u64, rows: Vec<(Vec<f64>, String)>) -> Self {
        let start = dataset.next_id().0;
        let cases = rows
            .into_iter()
            .enumerate()
            .map(|(i, (values, label))| CaseRecord {
                id: CaseId(start + i as u64),
                values: values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
                label,
                provenance: Provenance::Synthetic,
            })
            .collect();
        SdgBatch { strategy, seed, cases }
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// `dataset` plus this batch as a new version.
    pub fn apply_to(&self, dataset: &NormalizedDataset) -> Result<NormalizedDataset> {
        dataset.append_synthetic(self.cases.iter().map(|c| (c.values.clone(), c.label.clone())))
    }

    /// Dataset CSV schema plus a provenance column.
    pub fn to_csv(&self, dataset: &NormalizedDataset, denormalize: bool) -> Result<String> {
        let ds = NormalizedDataset::from_parts(
            dataset.attribute_names.clone(),
            dataset.stats.clone(),
            self.cases.clone(),
            &dataset.class_palette,
        );
        let mut buf = Vec::new();
        ds.write_csv_with_provenance(&mut buf, denormalize)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

pub fn generate(dataset: &NormalizedDataset, strategy: &SdgStrategy, seed: u64) -> Result<SdgBatch> {
    match strategy {
        SdgStrategy::SingleShift { case_id, coordinate, delta } => {
            generate_single_shift(dataset, *case_id, *coordinate, *delta, seed)
        }
        SdgStrategy::DuplicateShift { delta } => generate_duplicate_shift(dataset, delta, seed),
        SdgStrategy::InBoundsUniform { class, count } => {
            generate_in_bounds(dataset, class, *count, InBoundsMode::Uniform, seed)
        }
        SdgStrategy::InBoundsProportional { class, count } => {
            generate_in_bounds(dataset, class, *count, InBoundsMode::Proportional, seed)
        }
        SdgStrategy::OutOfBounds { class, coordinate, lo, hi, count } => {
            generate_out_of_bounds(dataset, class, *coordinate, (*lo, *hi), *count, seed)
        }
        SdgStrategy::Unbounded { count } => generate_unbounded(dataset, *count, seed),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::config("count must be at least 1"));
    }
    Ok(())
}

fn check_coordinate(dataset: &NormalizedDataset, coordinate: usize) -> Result<()> {
    if coordinate >= dataset.n_attributes() {
        return Err(Error::config(format!(
            "coordinate {coordinate} out of range for {} attributes",
            dataset.n_attributes()
        )));
    }
    Ok(())
}

fn check_class(dataset: &NormalizedDataset, class: &str) -> Result<()> {
    if dataset.class_index(class).is_none() {
        return Err(Error::UnknownClass(class.to_string()));
    }
    Ok(())
}

pub fn generate_single_shift(
    dataset: &NormalizedDataset,
    case_id: CaseId,
    coordinate: usize,
    delta: f64,
    seed: u64,
) -> Result<SdgBatch> {
    check_coordinate(dataset, coordinate)?;
    if !delta.is_finite() {
        return Err(Error::config("delta must be finite"));
    }
    let source = dataset.case(case_id).ok_or(Error::UnknownCase(case_id))?;
    let mut values = source.values.clone();
    values[coordinate] += delta;
    let strategy = SdgStrategy::SingleShift { case_id, coordinate, delta };
    Ok(SdgBatch::new(dataset, strategy, seed, vec![(values, source.label.clone())]))
}

/// One shifted copy of every real case.
pub fn generate_duplicate_shift(dataset: &NormalizedDataset, delta: &[f64], seed: u64) -> Result<SdgBatch> {
    let n = dataset.n_attributes();
    let delta: Vec<f64> = match delta.len() {
        1 => vec![delta[0]; n],
        len if len == n => delta.to_vec(),
        found => return Err(Error::DimensionMismatch { expected: n, found }),
    };
    if delta.iter().any(|d| !d.is_finite()) {
        return Err(Error::config("delta must be finite"));
    }
    let rows = dataset
        .cases
        .iter()
        .filter(|c| c.provenance == Provenance::Real)
        .map(|c| {
            let values = c.values.iter().zip(&delta).map(|(v, d)| v + d).collect();
            (values, c.label.clone())
        })
        .collect();
    Ok(SdgBatch::new(dataset, SdgStrategy::DuplicateShift { delta }, seed, rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InBoundsMode {
    Uniform,
    Proportional,
}

/// Per-attribute value distribution of one class.
struct ClassProfile {
    /// Per attribute: sorted class values.
    sorted: Vec<Vec<f64>>,
    /// Per attribute: half the median gap between consecutive distinct values.
    half_gap: Vec<f64>,
}

impl ClassProfile {
    fn new(dataset: &NormalizedDataset, class: &str) -> Result<Self> {
        check_class(dataset, class)?;
        let members: Vec<&CaseRecord> = dataset.cases_of(class).collect();
        let mut sorted = Vec::with_capacity(dataset.n_attributes());
        let mut half_gap = Vec::with_capacity(dataset.n_attributes());
        for a in 0..dataset.n_attributes() {
            let mut values: Vec<f64> = members.iter().map(|c| c.values[a]).collect();
            values.sort_by(f64::total_cmp);
            let mut distinct = values.clone();
            distinct.dedup();
            let mut gaps: Vec<f64> = distinct.windows(2).map(|w| w[1] - w[0]).collect();
            gaps.sort_by(f64::total_cmp);
            half_gap.push(median(&gaps) / 2.0);
            sorted.push(values);
        }
        Ok(ClassProfile { sorted, half_gap })
    }

    fn len(&self) -> usize {
        self.sorted.first().map_or(0, Vec::len)
    }

    fn bounds(&self, attribute: usize) -> (f64, f64) {
        let v = &self.sorted[attribute];
        (v[0], v[v.len() - 1])
    }

    fn uniform(&self, attribute: usize, rng: &mut ChaCha8Rng) -> f64 {
        let (lo, hi) = self.bounds(attribute);
        rng.random_range(lo..=hi)
    }

    /// Bootstrap one class value, jitter it, clip to the class bounds.
    fn proportional(&self, attribute: usize, rng: &mut ChaCha8Rng) -> f64 {
        let values = &self.sorted[attribute];
        let v = values[rng.random_range(0..values.len())];
        let h = self.half_gap[attribute];
        let jitter = if h > 0.0 { rng.random_range(-h..=h) } else { 0.0 };
        let (lo, hi) = self.bounds(attribute);
        (v + jitter).clamp(lo, hi)
    }
}

/// Median of an ascending slice; 0 when empty.
fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2],
        n => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
    }
}

pub fn generate_in_bounds(
    dataset: &NormalizedDataset,
    class: &str,
    count: usize,
    mode: InBoundsMode,
    seed: u64,
) -> Result<SdgBatch> {
    check_count(count)?;
    let profile = ClassProfile::new(dataset, class)?;
    if mode == InBoundsMode::Uniform && profile.len() < 2 {
        return Err(Error::Degenerate(format!("class {class:?} needs at least two cases")));
    }
    let mut rng = rng(seed);
    let rows = (0..count)
        .map(|_| {
            let values = (0..dataset.n_attributes())
                .map(|a| match mode {
                    InBoundsMode::Uniform => profile.uniform(a, &mut rng),
                    InBoundsMode::Proportional => profile.proportional(a, &mut rng),
                })
                .collect();
            (values, class.to_string())
        })
        .collect();
    let strategy = match mode {
        InBoundsMode::Uniform => SdgStrategy::InBoundsUniform { class: class.into(), count },
        InBoundsMode::Proportional => SdgStrategy::InBoundsProportional { class: class.into(), count },
    };
    Ok(SdgBatch::new(dataset, strategy, seed, rows))
}

/// Places `coordinate` uniformly in `offset` (which must miss the class
/// range there); other attributes are sampled proportionally.
pub fn generate_out_of_bounds(
    dataset: &NormalizedDataset,
    class: &str,
    coordinate: usize,
    offset: (f64, f64),
    count: usize,
    seed: u64,
) -> Result<SdgBatch> {
    check_count(count)?;
    check_coordinate(dataset, coordinate)?;
    let profile = ClassProfile::new(dataset, class)?;
    let (lo, hi) = offset;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::config("offset interval needs finite lo <= hi"));
    }
    let (cmin, cmax) = profile.bounds(coordinate);
    if hi >= cmin && lo <= cmax {
        return Err(Error::config(format!(
            "offset interval [{lo}, {hi}] intersects the class range [{cmin}, {cmax}]"
        )));
    }
    let (lo_c, hi_c) = (lo.max(0.0), hi.min(1.0));
    if lo_c > hi_c {
        return Err(Error::config("offset interval lies outside [0, 1]"));
    }
    let mut rng = rng(seed);
    let rows = (0..count)
        .map(|_| {
            let values = (0..dataset.n_attributes())
                .map(|a| {
                    if a == coordinate {
                        rng.random_range(lo_c..=hi_c)
                    } else {
                        profile.proportional(a, &mut rng)
                    }
                })
                .collect();
            (values, class.to_string())
        })
        .collect();
    let strategy = SdgStrategy::OutOfBounds {
        class: class.into(),
        coordinate,
        lo,
        hi,
        count,
    };
    Ok(SdgBatch::new(dataset, strategy, seed, rows))
}

/// Uniform points in the unit cube with labels drawn uniformly from the palette.
pub fn generate_unbounded(dataset: &NormalizedDataset, count: usize, seed: u64) -> Result<SdgBatch> {
    check_count(count)?;
    if dataset.class_palette.is_empty() {
        return Err(Error::Empty("no classes to label synthetic cases with".into()));
    }
    let mut rng = rng(seed);
    let rows = (0..count)
        .map(|_| {
            let values = (0..dataset.n_attributes()).map(|_| rng.random::<f64>()).collect();
            let label = dataset.class_palette[rng.random_range(0..dataset.class_palette.len())].clone();
            (values, label)
        })
        .collect();
    Ok(SdgBatch::new(dataset, SdgStrategy::Unbounded { count }, seed, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_dataset, normalize_dataset, Format};

    fn ds() -> NormalizedDataset {
        normalize_dataset(
            &load_dataset(
                "a,b,class\n0,0,A\n2,4,A\n4,2,A\n6,10,B\n10,8,B\n8,6,B\n".as_bytes(),
                Format::Csv,
            )
            .unwrap(),
        )
    }

    #[test]
    fn single_shift_clips_and_keeps_label() {
        let d = ds();
        let b = generate_single_shift(&d, CaseId(4), 0, 0.5, 1).unwrap();
        assert_eq!(b.cases[0].values, vec![1.0, 0.8]);
        assert_eq!(b.cases[0].label, "B");
        assert_eq!(b.cases[0].id, CaseId(6));
        let zero = generate_single_shift(&d, CaseId(1), 1, 0.0, 1).unwrap();
        assert_eq!(zero.cases[0].values, d.cases[1].values);
        assert_eq!(zero.cases[0].provenance, Provenance::Synthetic);
        assert!(generate_single_shift(&d, CaseId(99), 0, 0.1, 1).is_err());
    }

    #[test]
    fn duplicate_shift_broadcasts_scalar() {
        let d = ds();
        let b = generate_duplicate_shift(&d, &[0.1], 0).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(b.cases[4].values, vec![1.0, 0.9]);
        assert_eq!(b.apply_to(&d).unwrap().len(), 12);
        assert!(generate_duplicate_shift(&d, &[0.1, 0.2, 0.3], 0).is_err());
    }

    #[test]
    fn in_bounds_stays_in_class_range() {
        let d = ds();
        for mode in [InBoundsMode::Uniform, InBoundsMode::Proportional] {
            let b = generate_in_bounds(&d, "A", 200, mode, 7).unwrap();
            for c in &b.cases {
                assert!(c.values[0] <= 0.4 && c.values[1] <= 0.4, "{mode:?} {:?}", c.values);
                assert_eq!(c.label, "A");
            }
        }
        assert!(matches!(
            generate_in_bounds(&d, "Z", 1, InBoundsMode::Uniform, 0),
            Err(Error::UnknownClass(_))
        ));
        assert!(generate_in_bounds(&d, "A", 0, InBoundsMode::Uniform, 0).is_err());
    }

    #[test]
    fn identical_class_reproduces_vector() {
        let d = normalize_dataset(
            &load_dataset("a,class\n0,A\n0.5,B\n0.5,B\n1,C\n".as_bytes(), Format::Csv).unwrap(),
        );
        for mode in [InBoundsMode::Uniform, InBoundsMode::Proportional] {
            let b = generate_in_bounds(&d, "B", 5, mode, 3).unwrap();
            assert!(b.cases.iter().all(|c| c.values == vec![0.5]));
        }
        // one case: proportional works with zero jitter, uniform refuses
        assert!(generate_in_bounds(&d, "C", 2, InBoundsMode::Proportional, 3).is_ok());
        assert!(generate_in_bounds(&d, "C", 2, InBoundsMode::Uniform, 3).is_err());
    }

    #[test]
    fn out_of_bounds_checks_interval() {
        let d = ds();
        assert!(generate_out_of_bounds(&d, "A", 0, (0.3, 0.5), 3, 0).is_err());
        assert!(generate_out_of_bounds(&d, "A", 0, (0.5, 0.4), 3, 0).is_err());
        let b = generate_out_of_bounds(&d, "A", 0, (0.45, 0.55), 1, 0).unwrap();
        assert_eq!(b.len(), 1);
        let v = &b.cases[0].values;
        assert!((0.45..=0.55).contains(&v[0]));
        assert!(v[1] <= 0.4);
    }

    #[test]
    fn seeds_are_deterministic() {
        let d = ds();
        let s = SdgStrategy::Unbounded { count: 5 };
        assert_eq!(generate(&d, &s, 11).unwrap(), generate(&d, &s, 11).unwrap());
        assert_ne!(generate(&d, &s, 11).unwrap(), generate(&d, &s, 12).unwrap());
    }

    #[test]
    fn batch_csv_has_provenance() {
        let d = ds();
        let b = generate_unbounded(&d, 2, 0).unwrap();
        let csv = b.to_csv(&d, false).unwrap();
        assert!(csv.starts_with("a,b,class,provenance\n"));
        assert!(csv.lines().skip(1).all(|l| l.ends_with(",synthetic")));
    }

    #[test]
    fn strategy_json_shape() {
        let s = SdgStrategy::InBoundsUniform { class: "A".into(), count: 3 };
        let j = serde_json::to_value(&s).unwrap();
        assert_eq!(j["variant"], "in_bounds_uniform");
        assert_eq!(serde_json::from_value::<SdgStrategy>(j).unwrap(), s);
    }
}
