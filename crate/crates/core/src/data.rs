//! Labeled tabular datasets: loading, min-max normalization, versioned edits
//! and CSV export.
//!
//! Every dataset after [`normalize_dataset`] is an immutable value. Edits
//! return a new [`NormalizedDataset`] and leave the input untouched, which is
//! what the session history in the service builds on.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the label column, matched case-insensitively.
pub const CLASS_COLUMN: &str = "class";
pub const PROVENANCE_COLUMN: &str = "provenance";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaseId(pub u64);

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Real,
    Synthetic,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Real => "real",
            Provenance::Synthetic => "synthetic",
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "real" => Ok(Provenance::Real),
            "synthetic" => Ok(Provenance::Synthetic),
            _ => Err(format!("{s:?} is not real or synthetic")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Txt,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("txt") => Format::Txt,
            _ => Format::Csv,
        }
    }
}

/// A dataset exactly as read from disk, in raw attribute units.
#[derive(Clone, Debug, PartialEq)]
pub struct RawDataset {
    pub attribute_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    /// From an optional `provenance` column; all real when absent.
    pub provenance: Vec<Provenance>,
}

impl RawDataset {
    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeRange {
    pub min: f64,
    pub max: f64,
    pub degenerate: bool,
}

/// Per-attribute min/max retained so normalized values can be mapped back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeStats {
    pub ranges: Vec<AttributeRange>,
}

impl AttributeStats {
    pub fn from_rows(rows: &[Vec<f64>], n: usize) -> Self {
        let mut ranges = vec![
            AttributeRange {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
                degenerate: false,
            };
            n
        ];
        for row in rows {
            for (range, &v) in ranges.iter_mut().zip(row) {
                range.min = range.min.min(v);
                range.max = range.max.max(v);
            }
        }
        for range in &mut ranges {
            range.degenerate = range.min == range.max;
        }
        AttributeStats { ranges }
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Min-max maps one raw value. Degenerate attributes map to 0.5.
    pub fn normalize_value(&self, attribute: usize, raw: f64) -> f64 {
        let r = &self.ranges[attribute];
        if r.degenerate {
            0.5
        } else {
            (raw - r.min) / (r.max - r.min)
        }
    }

    pub fn denormalize_value(&self, attribute: usize, value: f64) -> f64 {
        let r = &self.ranges[attribute];
        if r.degenerate {
            r.min
        } else {
            r.min + value * (r.max - r.min)
        }
    }

    pub fn degenerate_attributes(&self) -> Vec<usize> {
        (0..self.ranges.len())
            .filter(|&i| self.ranges[i].degenerate)
            .collect()
    }
}

/// Maps a normalized point back to raw units.
pub fn denormalize_point(values: &[f64], stats: &AttributeStats) -> Result<Vec<f64>> {
    if values.len() != stats.len() {
        return Err(Error::DimensionMismatch {
            expected: stats.len(),
            found: values.len(),
        });
    }
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, &v)| stats.denormalize_value(i, v))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: CaseId,
    pub values: Vec<f64>,
    pub label: String,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedDataset {
    pub attribute_names: Vec<String>,
    pub stats: AttributeStats,
    pub cases: Vec<CaseRecord>,
    pub class_palette: Vec<String>,
    next_id: u64,
}

/// A mutation of a dataset. Applying one yields a new dataset version.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditCommand {
    Shift { case_ids: Vec<CaseId>, delta: Vec<f64> },
    Clone { case_ids: Vec<CaseId> },
    Delete { case_ids: Vec<CaseId> },
    Relabel { case_ids: Vec<CaseId>, class: String },
}

pub fn load_dataset_path(path: impl AsRef<Path>) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    load_dataset(file, Format::from_path(path))
}

/// Parses a labeled table. CSV and TXT are the same comma-separated format.
pub fn load_dataset<R: Read>(source: R, _format: Format) -> Result<RawDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let class_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.eq_ignore_ascii_case(CLASS_COLUMN))
        .map(|(i, _)| i)
        .collect();
    let class_col = match class_cols.as_slice() {
        [] => return Err(Error::MissingClassColumn),
        [c] => *c,
        _ => return Err(Error::DuplicateClassColumn),
    };
    let provenance_col = header.iter().position(|h| h.eq_ignore_ascii_case(PROVENANCE_COLUMN));
    let attribute_cols: Vec<usize> = (0..header.len())
        .filter(|&i| i != class_col && Some(i) != provenance_col)
        .collect();
    if attribute_cols.is_empty() {
        return Err(Error::NoAttributes);
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut provenance = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        // A trailing blank line comes through as a single empty field.
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(Error::Ragged {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        let mut row = Vec::with_capacity(attribute_cols.len());
        for &c in &attribute_cols {
            let cell = &record[c];
            let value: f64 = cell.parse().map_err(|_| Error::Cell {
                line,
                column: c + 1,
                name: header[c].clone(),
                message: format!("{cell:?} is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Cell {
                    line,
                    column: c + 1,
                    name: header[c].clone(),
                    message: format!("{cell:?} is not finite"),
                });
            }
            row.push(value);
        }
        let label = record[class_col].to_owned();
        if label.is_empty() {
            return Err(Error::Cell {
                line,
                column: class_col + 1,
                name: header[class_col].clone(),
                message: "empty class label".into(),
            });
        }
        let origin = match provenance_col {
            Some(c) => record[c].parse().map_err(|message| Error::Cell {
                line,
                column: c + 1,
                name: header[c].clone(),
                message,
            })?,
            None => Provenance::Real,
        };
        rows.push(row);
        labels.push(label);
        provenance.push(origin);
    }
    if rows.is_empty() {
        return Err(Error::Empty("no data rows".into()));
    }

    Ok(RawDataset {
        attribute_names: attribute_cols.iter().map(|&c| header[c].clone()).collect(),
        rows,
        labels,
        provenance,
    })
}

/// Min-max normalizes every attribute to [0, 1] using the dataset's own range.
pub fn normalize_dataset(raw: &RawDataset) -> NormalizedDataset {
    let stats = AttributeStats::from_rows(&raw.rows, raw.n_attributes());
    normalize_with(raw, &stats)
}

/// Normalizes `raw` with externally supplied ranges, clipping to [0, 1].
///
/// Used for exploration sets that must share the training set's scale.
pub fn normalize_with(raw: &RawDataset, stats: &AttributeStats) -> NormalizedDataset {
    let cases = raw
        .rows
        .iter()
        .zip(&raw.labels)
        .zip(&raw.provenance)
        .enumerate()
        .map(|(i, ((row, label), &provenance))| CaseRecord {
            id: CaseId(i as u64),
            values: row
                .iter()
                .enumerate()
                .map(|(a, &x)| stats.normalize_value(a, x).clamp(0.0, 1.0))
                .collect(),
            label: label.clone(),
            provenance,
        })
        .collect();
    NormalizedDataset::from_parts(raw.attribute_names.clone(), stats.clone(), cases, &[])
}

impl NormalizedDataset {
    /// Builds a dataset from already-normalized cases. The palette keeps the
    /// order of `palette_hint` for labels still present and appends new
    /// labels in order of first appearance.
    pub fn from_parts(
        attribute_names: Vec<String>,
        stats: AttributeStats,
        cases: Vec<CaseRecord>,
        palette_hint: &[String],
    ) -> Self {
        let class_palette = build_palette(&cases, palette_hint);
        let next_id = cases.iter().map(|c| c.id.0 + 1).max().unwrap_or(0);
        NormalizedDataset {
            attribute_names,
            stats,
            cases,
            class_palette,
            next_id,
        }
    }

    /// Re-expresses the cases on another dataset's ranges, clipping to [0, 1].
    pub fn rescaled(&self, stats: &AttributeStats) -> Result<Self> {
        if stats.len() != self.n_attributes() {
            return Err(Error::DimensionMismatch {
                expected: stats.len(),
                found: self.n_attributes(),
            });
        }
        let cases = self
            .cases
            .iter()
            .map(|c| CaseRecord {
                values: c
                    .values
                    .iter()
                    .enumerate()
                    .map(|(a, &v)| stats.normalize_value(a, self.stats.denormalize_value(a, v)).clamp(0.0, 1.0))
                    .collect(),
                ..c.clone()
            })
            .collect();
        Ok(NormalizedDataset::from_parts(self.attribute_names.clone(), stats.clone(), cases, &self.class_palette)
            .with_next_id(self.next_id()))
    }

    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn next_id(&self) -> CaseId {
        CaseId(self.next_id)
    }

    /// Raises the next fresh id to at least `next`, e.g. when restoring a
    /// version whose newest cases were deleted.
    pub fn with_next_id(mut self, next: CaseId) -> Self {
        self.next_id = self.next_id.max(next.0);
        self
    }

    pub fn case(&self, id: CaseId) -> Option<&CaseRecord> {
        self.cases.iter().find(|c| c.id == id)
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_palette.iter().position(|c| c == label)
    }

    pub fn class_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for c in &self.cases {
            *counts.entry(c.label.as_str()).or_insert(0) += 1;
        }
        counts
    }

    pub fn cases_of<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a CaseRecord> + 'a {
        self.cases.iter().filter(move |c| c.label == class)
    }

    pub fn synthetic_count(&self) -> usize {
        self.cases
            .iter()
            .filter(|c| c.provenance == Provenance::Synthetic)
            .count()
    }

    /// A new dataset holding only the given cases (ids, labels and
    /// provenance preserved).
    pub fn subset(&self, ids: &[CaseId]) -> Result<Self> {
        let wanted: HashSet<CaseId> = ids.iter().copied().collect();
        for id in ids {
            if self.case(*id).is_none() {
                return Err(Error::UnknownCase(*id));
            }
        }
        let cases = self
            .cases
            .iter()
            .filter(|c| wanted.contains(&c.id))
            .cloned()
            .collect();
        Ok(self.with_cases(cases))
    }

    /// Real cases only.
    pub fn real_only(&self) -> Self {
        let cases = self
            .cases
            .iter()
            .filter(|c| c.provenance == Provenance::Real)
            .cloned()
            .collect();
        self.with_cases(cases)
    }

    fn with_cases(&self, cases: Vec<CaseRecord>) -> Self {
        let mut ds = NormalizedDataset::from_parts(
            self.attribute_names.clone(),
            self.stats.clone(),
            cases,
            &self.class_palette,
        );
        ds.next_id = ds.next_id.max(self.next_id);
        ds
    }

    /// Appends synthetic cases, assigning fresh ids. Values are clipped to
    /// [0, 1].
    pub fn append_synthetic<I>(&self, cases: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<f64>, String)>,
    {
        let mut out = self.cases.clone();
        let mut next = self.next_id;
        for (values, label) in cases {
            if values.len() != self.n_attributes() {
                return Err(Error::DimensionMismatch {
                    expected: self.n_attributes(),
                    found: values.len(),
                });
            }
            out.push(CaseRecord {
                id: CaseId(next),
                values: values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
                label,
                provenance: Provenance::Synthetic,
            });
            next += 1;
        }
        let mut ds = self.with_cases(out);
        ds.next_id = next;
        Ok(ds)
    }

    /// Content hash identifying this exact version.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.attribute_names.hash(&mut h);
        for c in &self.cases {
            c.id.hash(&mut h);
            for v in &c.values {
                v.to_bits().hash(&mut h);
            }
            c.label.hash(&mut h);
            c.provenance.hash(&mut h);
        }
        h.finish()
    }

    pub fn edit(&self, command: &EditCommand) -> Result<Self> {
        edit_cases(self, command)
    }

    /// Writes `attribute..., class` rows; raw units when `denormalize`.
    pub fn write_csv<W: Write>(&self, writer: W, denormalize: bool) -> Result<()> {
        self.write_csv_inner(writer, denormalize, false)
    }

    /// Like [`write_csv`](Self::write_csv) with an extra trailing
    /// `provenance` column.
    pub fn write_csv_with_provenance<W: Write>(&self, writer: W, denormalize: bool) -> Result<()> {
        self.write_csv_inner(writer, denormalize, true)
    }

    fn write_csv_inner<W: Write>(&self, writer: W, denormalize: bool, provenance: bool) -> Result<()> {
        if self.cases.is_empty() {
            return Err(Error::Empty("cannot export a dataset with no cases".into()));
        }
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.attribute_names.iter().map(String::as_str).collect();
        header.push(CLASS_COLUMN);
        if provenance {
            header.push("provenance");
        }
        w.write_record(&header)?;
        for c in &self.cases {
            let mut record: Vec<String> = c
                .values
                .iter()
                .enumerate()
                .map(|(a, &v)| {
                    let v = if denormalize {
                        self.stats.denormalize_value(a, v)
                    } else {
                        v
                    };
                    v.to_string()
                })
                .collect();
            record.push(c.label.clone());
            if provenance {
                record.push(c.provenance.as_str().to_owned());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, denormalize: bool) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, denormalize)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Writes the dataset as CSV to `path`.
pub fn export_dataset(dataset: &NormalizedDataset, denormalize: bool, path: impl AsRef<Path>) -> Result<()> {
    // Render first so an invalid dataset never truncates an existing file.
    let text = dataset.to_csv_string(denormalize)?;
    std::fs::write(path, text)?;
    Ok(())
}

fn build_palette(cases: &[CaseRecord], hint: &[String]) -> Vec<String> {
    let present: HashSet<&str> = cases.iter().map(|c| c.label.as_str()).collect();
    let mut palette: Vec<String> = hint
        .iter()
        .filter(|l| present.contains(l.as_str()))
        .cloned()
        .collect();
    for c in cases {
        if !palette.iter().any(|p| p == &c.label) {
            palette.push(c.label.clone());
        }
    }
    palette
}

/// Applies one edit and returns the new version.
pub fn edit_cases(dataset: &NormalizedDataset, command: &EditCommand) -> Result<NormalizedDataset> {
    let ids = match command {
        EditCommand::Shift { case_ids, .. }
        | EditCommand::Clone { case_ids }
        | EditCommand::Delete { case_ids }
        | EditCommand::Relabel { case_ids, .. } => case_ids,
    };
    for id in ids {
        if dataset.case(*id).is_none() {
            return Err(Error::UnknownCase(*id));
        }
    }
    let selected: HashSet<CaseId> = ids.iter().copied().collect();

    match command {
        EditCommand::Shift { delta, .. } => {
            if delta.len() != dataset.n_attributes() {
                return Err(Error::DimensionMismatch {
                    expected: dataset.n_attributes(),
                    found: delta.len(),
                });
            }
            if delta.iter().any(|d| !d.is_finite()) {
                return Err(Error::config("shift delta must be finite"));
            }
            let cases = dataset
                .cases
                .iter()
                .map(|c| {
                    if !selected.contains(&c.id) {
                        return c.clone();
                    }
                    let mut c = c.clone();
                    for (v, d) in c.values.iter_mut().zip(delta) {
                        *v = (*v + d).clamp(0.0, 1.0);
                    }
                    c
                })
                .collect();
            Ok(dataset.with_cases(cases))
        }
        EditCommand::Clone { case_ids } => {
            let copies: Vec<(Vec<f64>, String)> = case_ids
                .iter()
                .map(|id| {
                    let c = dataset.case(*id).expect("checked above");
                    (c.values.clone(), c.label.clone())
                })
                .collect();
            dataset.append_synthetic(copies)
        }
        EditCommand::Delete { .. } => {
            let cases = dataset
                .cases
                .iter()
                .filter(|c| !selected.contains(&c.id))
                .cloned()
                .collect();
            Ok(dataset.with_cases(cases))
        }
        EditCommand::Relabel { class, .. } => {
            if class.is_empty() {
                return Err(Error::config("class label must be non-empty"));
            }
            let cases = dataset
                .cases
                .iter()
                .map(|c| {
                    let mut c = c.clone();
                    if selected.contains(&c.id) {
                        c.label = class.clone();
                    }
                    c
                })
                .collect();
            Ok(dataset.with_cases(cases))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RawDataset> {
        load_dataset(text.as_bytes(), Format::Csv)
    }

    fn small() -> NormalizedDataset {
        normalize_dataset(&parse("a,b,class\n2,0,X\n4,1,X\n6,2,Y\n").unwrap())
    }

    #[test]
    fn single_row_file() {
        let raw = parse("a,class\n1.0,X").unwrap();
        assert_eq!(raw.n_attributes(), 1);
        assert_eq!(raw.len(), 1);
        assert_eq!(raw.labels, vec!["X"]);
    }

    #[test]
    fn class_header_is_case_insensitive_and_any_position() {
        let raw = parse("Class,x,y\nA,1,2\nB,3,4\n").unwrap();
        assert_eq!(raw.attribute_names, vec!["x", "y"]);
        assert_eq!(raw.rows[1], vec![3.0, 4.0]);
    }

    #[test]
    fn missing_class_column() {
        let err = parse("a,b\n1,2\n").unwrap_err();
        assert!(matches!(err, Error::MissingClassColumn));
        assert!(err.to_string().contains("class"));
    }

    #[test]
    fn bad_cell_reports_position() {
        let err = parse("a,b,class\n1,2,X\n3,oops,Y\n").unwrap_err();
        match err {
            Error::Cell { line, column, ref name, .. } => {
                assert_eq!((line, column, name.as_str()), (3, 2, "b"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_row() {
        let err = parse("a,b,class\n1,2,X\n3,Y\n").unwrap_err();
        assert!(matches!(err, Error::Ragged { line: 3, expected: 3, found: 2 }));
    }

    #[test]
    fn rejects_non_finite_and_empty_labels() {
        assert!(matches!(parse("a,class\ninf,X\n"), Err(Error::Cell { .. })));
        assert!(matches!(parse("a,class\n1,\n"), Err(Error::Cell { .. })));
        assert!(matches!(parse("a,class\n"), Err(Error::Empty(_))));
        assert!(matches!(parse("class\nX\n"), Err(Error::NoAttributes)));
    }

    #[test]
    fn normalize_endpoints_and_midpoint() {
        let ds = small();
        let col: Vec<f64> = ds.cases.iter().map(|c| c.values[0]).collect();
        assert_eq!(col, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_column_is_degenerate() {
        let ds = normalize_dataset(&parse("a,class\n3,X\n3,X\n3,Y\n").unwrap());
        assert!(ds.stats.ranges[0].degenerate);
        assert!(ds.cases.iter().all(|c| c.values[0] == 0.5));
        assert_eq!(denormalize_point(&[0.9], &ds.stats).unwrap(), vec![3.0]);
    }

    #[test]
    fn denormalize_checks_dimension() {
        let ds = small();
        assert!(matches!(
            denormalize_point(&[0.0], &ds.stats),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn shift_clips_and_keeps_original() {
        let ds = small();
        let ids: Vec<CaseId> = ds.cases.iter().map(|c| c.id).collect();
        let shifted = ds
            .edit(&EditCommand::Shift { case_ids: ids, delta: vec![0.6, -0.6] })
            .unwrap();
        assert_eq!(shifted.cases[2].values, vec![1.0, 0.4]);
        assert_eq!(shifted.cases[0].values[1], 0.0);
        assert_eq!(ds.cases[2].values, vec![1.0, 1.0]);
    }

    #[test]
    fn clone_appends_synthetic_with_fresh_id() {
        let ds = small();
        let out = ds.edit(&EditCommand::Clone { case_ids: vec![CaseId(1)] }).unwrap();
        assert_eq!(out.len(), 4);
        let copy = out.cases.last().unwrap();
        assert_eq!(copy.provenance, Provenance::Synthetic);
        assert_eq!(copy.id, CaseId(3));
        assert_eq!(copy.values, ds.cases[1].values);
        // A clone of the clone must not reuse an id either.
        let again = out.edit(&EditCommand::Delete { case_ids: vec![CaseId(3)] }).unwrap();
        let again = again.edit(&EditCommand::Clone { case_ids: vec![CaseId(0)] }).unwrap();
        assert_eq!(again.cases.last().unwrap().id, CaseId(4));
    }

    #[test]
    fn relabel_and_palette() {
        let ds = small();
        let out = ds
            .edit(&EditCommand::Relabel { case_ids: vec![CaseId(2)], class: "Z".into() })
            .unwrap();
        assert_eq!(out.class_palette, vec!["X", "Z"]);
        let out = out.edit(&EditCommand::Delete { case_ids: vec![CaseId(0), CaseId(1)] }).unwrap();
        assert_eq!(out.class_palette, vec!["Z"]);
    }

    #[test]
    fn unknown_case_rejected() {
        let ds = small();
        let err = ds.edit(&EditCommand::Delete { case_ids: vec![CaseId(99)] }).unwrap_err();
        assert!(matches!(err, Error::UnknownCase(CaseId(99))));
    }

    #[test]
    fn export_empty_dataset_fails() {
        let ds = small();
        let empty = ds
            .edit(&EditCommand::Delete { case_ids: ds.cases.iter().map(|c| c.id).collect() })
            .unwrap();
        assert!(matches!(empty.to_csv_string(false), Err(Error::Empty(_))));
    }

    #[test]
    fn export_reload_round_trip() {
        let ds = small();
        for denorm in [false, true] {
            let text = ds.to_csv_string(denorm).unwrap();
            let back = normalize_dataset(&parse(&text).unwrap());
            assert_eq!(back.cases, ds.cases);
        }
        assert_eq!(ds.to_csv_string(true).unwrap(), "a,b,class\n2,0,X\n4,1,X\n6,2,Y\n");
    }

    #[test]
    fn provenance_column_round_trips() {
        let ds = small().append_synthetic([(vec![0.5, 0.5], "Y".to_string())]).unwrap();
        let mut buf = Vec::new();
        ds.write_csv_with_provenance(&mut buf, true).unwrap();
        let raw = load_dataset(buf.as_slice(), Format::Csv).unwrap();
        assert_eq!(raw.attribute_names, vec!["a", "b"]);
        let back = normalize_with(&raw, &ds.stats);
        assert_eq!(back.cases, ds.cases);

        let err = parse("a,class,provenance\n1,X,maybe\n").unwrap_err();
        assert!(matches!(err, Error::Cell { column: 3, .. }), "{err}");
    }
}
