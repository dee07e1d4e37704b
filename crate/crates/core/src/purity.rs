//! Single-coordinate purity analysis: most-pure runs, purity-ranked regions
//! and the least-pure (overlap) case set.

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::data::{CaseId, NormalizedDataset};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurityRegion {
    pub coordinate: usize,
    pub lo: f64,
    pub hi: f64,
    pub dominant_class: String,
    pub purity: f64,
    pub support: usize,
    /// Cases of the analysed dataset that fall in this region.
    pub case_ids: Vec<CaseId>,
}

impl PurityRegion {
    pub fn is_pure(&self) -> bool {
        self.purity == 1.0
    }

    /// Closed-interval containment on this region's coordinate.
    pub fn contains(&self, values: &[f64]) -> bool {
        values
            .get(self.coordinate)
            .is_some_and(|&v| self.lo <= v && v <= self.hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub min_support: usize,
    pub dataset_fingerprint: u64,
    /// Descending purity, then support; ties by coordinate, then `lo`.
    pub regions: Vec<PurityRegion>,
    /// Cases covered by no purity-1 region of sufficient support.
    pub lp_case_ids: Vec<CaseId>,
}

impl PurityReport {
    pub fn pure_regions(&self) -> impl Iterator<Item = &PurityRegion> {
        self.regions
            .iter()
            .filter(move |r| r.is_pure() && r.support >= self.min_support)
    }

    pub fn check_current(&self, dataset: &NormalizedDataset) -> Result<()> {
        if self.dataset_fingerprint != dataset.fingerprint() {
            return Err(Error::StaleReport);
        }
        Ok(())
    }

    /// `coordinate,lo,hi,class,purity,support` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("coordinate,lo,hi,class,purity,support\n");
        for r in &self.regions {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.coordinate, r.lo, r.hi, r.dominant_class, r.purity, r.support
            );
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    HidePure,
    ShowAll,
}

/// A contiguous stretch of the sorted coordinate axis.
#[derive(Clone, Debug)]
struct Segment {
    lo: f64,
    hi: f64,
    /// (case id, palette index)
    cases: Vec<(CaseId, usize)>,
}

impl Segment {
    fn support(&self) -> usize {
        self.cases.len()
    }

    /// (dominant palette index, its count). Ties go to the earlier class.
    fn dominant(&self, n_classes: usize) -> (usize, usize) {
        let mut counts = vec![0usize; n_classes];
        for &(_, l) in &self.cases {
            counts[l] += 1;
        }
        let mut best = (0, 0);
        for (l, &c) in counts.iter().enumerate() {
            if c > best.1 {
                best = (l, c);
            }
        }
        best
    }

    fn purity(&self, n_classes: usize) -> f64 {
        self.dominant(n_classes).1 as f64 / self.support() as f64
    }

    fn merged(&self, other: &Segment) -> Segment {
        let mut cases = self.cases.clone();
        cases.extend_from_slice(&other.cases);
        Segment {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
            cases,
        }
    }

    fn into_region(self, coordinate: usize, palette: &[String]) -> PurityRegion {
        let (dom, count) = self.dominant(palette.len());
        PurityRegion {
            coordinate,
            lo: self.lo,
            hi: self.hi,
            dominant_class: palette[dom].clone(),
            purity: count as f64 / self.support() as f64,
            support: self.support(),
            case_ids: self.cases.iter().map(|&(id, _)| id).collect(),
        }
    }
}

/// Splits the sorted axis into maximal single-label runs. Each group of
/// equal values carrying more than one label becomes its own impure
/// segment, so ties always break a run.
fn segments(dataset: &NormalizedDataset, coordinate: usize) -> Vec<Segment> {
    let mut points: Vec<(f64, CaseId, usize)> = dataset
        .cases
        .iter()
        .map(|c| {
            let label = dataset.class_index(&c.label).expect("palette covers labels");
            (c.values[coordinate], c.id, label)
        })
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut out: Vec<Segment> = Vec::new();
    // Whether the last segment is a pure run that may still grow.
    let mut open_label: Option<usize> = None;
    let mut i = 0;
    while i < points.len() {
        let value = points[i].0;
        let mut j = i;
        while j < points.len() && points[j].0 == value {
            j += 1;
        }
        let group = &points[i..j];
        let label = group[0].2;
        let single = group.iter().all(|p| p.2 == label);
        let cases: Vec<(CaseId, usize)> = group.iter().map(|p| (p.1, p.2)).collect();

        match (single, open_label) {
            (true, Some(open)) if open == label => {
                let seg = out.last_mut().expect("open segment exists");
                seg.hi = value;
                seg.cases.extend(cases);
            }
            (true, _) => {
                out.push(Segment { lo: value, hi: value, cases });
                open_label = Some(label);
            }
            (false, _) => {
                out.push(Segment { lo: value, hi: value, cases });
                open_label = None;
            }
        }
        i = j;
    }
    out
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

/// Maximal purity-1 runs on one coordinate.
pub fn find_pure_intervals(dataset: &NormalizedDataset, coordinate: usize) -> Result<Vec<PurityRegion>> {
    check_coordinate(dataset, coordinate)?;
    let n_classes = dataset.class_palette.len();
    Ok(segments(dataset, coordinate)
        .into_iter()
        .filter(|s| s.purity(n_classes) == 1.0)
        .map(|s| s.into_region(coordinate, &dataset.class_palette))
        .collect())
}

/// Folds segments below `min_support` into a neighbor, picking the neighbor
/// whose merge keeps purity highest (then the smaller one, then the left).
fn merge_small(mut segs: Vec<Segment>, min_support: usize, n_classes: usize) -> Vec<Segment> {
    while segs.len() > 1 {
        let Some(i) = segs.iter().position(|s| s.support() < min_support) else {
            break;
        };
        let target = if i == 0 {
            1
        } else if i + 1 == segs.len() {
            i - 1
        } else {
            let left = segs[i - 1].merged(&segs[i]);
            let right = segs[i].merged(&segs[i + 1]);
            let (pl, pr) = (left.purity(n_classes), right.purity(n_classes));
            if pr > pl || (pr == pl && segs[i + 1].support() < segs[i - 1].support()) {
                i + 1
            } else {
                i - 1
            }
        };
        let small = segs.remove(i);
        let target = if target > i { target - 1 } else { target };
        let merged = if target < i {
            segs[target].merged(&small)
        } else {
            small.merged(&segs[target])
        };
        segs[target] = merged;
    }
    segs
}

/// Evaluates every coordinate, merges undersized segments and ranks the
/// resulting regions by purity.
pub fn rank_regions_by_purity(dataset: &NormalizedDataset, min_support: usize) -> Result<PurityReport> {
    if min_support < 1 {
        return Err(Error::config("min_support must be at least 1"));
    }
    let n_classes = dataset.class_palette.len();
    let mut regions = Vec::new();
    if !dataset.is_empty() {
        for coordinate in 0..dataset.n_attributes() {
            let segs = merge_small(segments(dataset, coordinate), min_support, n_classes);
            regions.extend(
                segs.into_iter()
                    .map(|s| s.into_region(coordinate, &dataset.class_palette)),
            );
        }
    }
    regions.sort_by(|a, b| {
        b.purity
            .total_cmp(&a.purity)
            .then(b.support.cmp(&a.support))
            .then(a.coordinate.cmp(&b.coordinate))
            .then(a.lo.total_cmp(&b.lo))
    });

    let covered: BTreeSet<CaseId> = regions
        .iter()
        .filter(|r| r.is_pure() && r.support >= min_support)
        .flat_map(|r| r.case_ids.iter().copied())
        .collect();
    let lp_case_ids = dataset
        .cases
        .iter()
        .map(|c| c.id)
        .filter(|id| !covered.contains(id))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    Ok(PurityReport {
        min_support,
        dataset_fingerprint: dataset.fingerprint(),
        regions,
        lp_case_ids,
    })
}

/// The case ids visible under `mode`. Views are metadata; nothing is deleted.
pub fn apply_visibility(
    dataset: &NormalizedDataset,
    report: &PurityReport,
    mode: Visibility,
) -> Result<Vec<CaseId>> {
    report.check_current(dataset)?;
    Ok(match mode {
        Visibility::ShowAll => dataset.cases.iter().map(|c| c.id).collect(),
        Visibility::HidePure => report.lp_case_ids.clone(),
    })
}

/// The least-pure cases as their own dataset.
pub fn extract_overlap(dataset: &NormalizedDataset, report: &PurityReport) -> Result<NormalizedDataset> {
    report.check_current(dataset)?;
    if report.lp_case_ids.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    dataset.subset(&report.lp_case_ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_dataset, normalize_dataset, Format};

    fn ds(text: &str) -> NormalizedDataset {
        normalize_dataset(&load_dataset(text.as_bytes(), Format::Csv).unwrap())
    }

    fn interleaved() -> NormalizedDataset {
        ds("x,class\n1,A\n2,B\n3,A\n4,B\n5,A\n6,B\n")
    }

    #[test]
    fn single_class_is_one_region() {
        let d = ds("x,y,class\n1,5,A\n2,4,A\n3,9,A\n");
        let r = find_pure_intervals(&d, 0).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].lo, r[0].hi, r[0].support), (0.0, 1.0, 3));
        let report = rank_regions_by_purity(&d, 1).unwrap();
        assert!(report.lp_case_ids.is_empty());
        assert!(apply_visibility(&d, &report, Visibility::HidePure).unwrap().is_empty());
        assert!(matches!(extract_overlap(&d, &report), Err(Error::EmptyOverlap)));
    }

    #[test]
    fn interleaved_runs_have_support_one() {
        let d = interleaved();
        let r = find_pure_intervals(&d, 0).unwrap();
        assert_eq!(r.len(), 6);
        assert!(r.iter().all(|x| x.support == 1 && x.is_pure()));
        // with min_support 2 everything merges into impure regions
        let report = rank_regions_by_purity(&d, 2).unwrap();
        assert_eq!(report.lp_case_ids.len(), 6);
        assert_eq!(extract_overlap(&d, &report).unwrap().len(), 6);
    }

    #[test]
    fn ties_across_classes_break_runs() {
        let d = ds("x,class\n1,A\n2,A\n2,B\n3,B\n");
        let r = find_pure_intervals(&d, 0).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].support, 1);
        assert_eq!(r[1].support, 1);
    }

    #[test]
    fn min_support_above_every_run_makes_all_lp() {
        let d = ds("x,class\n1,A\n2,A\n3,B\n4,B\n");
        let report = rank_regions_by_purity(&d, 5).unwrap();
        assert_eq!(report.lp_case_ids.len(), 4);
        assert!(rank_regions_by_purity(&d, 0).is_err());
    }

    #[test]
    fn small_impure_segment_merges_toward_purest_neighbor() {
        // A A A | (B,A tie at 4) | B B B
        let d = ds("x,class\n1,A\n2,A\n3,A\n4,A\n4,B\n5,B\n6,B\n7,B\n");
        let report = rank_regions_by_purity(&d, 3).unwrap();
        assert_eq!(report.regions.len(), 2);
        assert!(report.regions.iter().any(|r| r.is_pure()));
        assert_eq!(report.regions.iter().map(|r| r.support).sum::<usize>(), 8);
    }

    #[test]
    fn stale_report_detected() {
        let d = interleaved();
        let report = rank_regions_by_purity(&d, 1).unwrap();
        let edited = d
            .edit(&crate::data::EditCommand::Delete { case_ids: vec![CaseId(0)] })
            .unwrap();
        assert!(matches!(
            apply_visibility(&edited, &report, Visibility::ShowAll),
            Err(Error::StaleReport)
        ));
        assert_eq!(apply_visibility(&d, &report, Visibility::ShowAll).unwrap().len(), 6);
    }

    #[test]
    fn csv_table() {
        let d = ds("x,class\n1,A\n2,B\n");
        let csv = rank_regions_by_purity(&d, 1).unwrap().to_csv();
        assert!(csv.starts_with("coordinate,lo,hi,class,purity,support\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
