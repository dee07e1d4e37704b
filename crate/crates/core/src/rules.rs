//! Interval rule chains with an optional SPC slope terminal, and their
//! confusion matrices.

use std::collections::BTreeSet;
use std::fmt::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{CaseId, NormalizedDataset};
use crate::error::{Error, Result};
use crate::layout::{spc_pair_points, GlcKind, LayoutConfig};
use crate::purity::rank_regions_by_purity;

pub const DEFAULT_FLAT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalRule {
    pub coordinate: usize,
    pub lo: f64,
    pub hi: f64,
    pub predicted: String,
}

impl IntervalRule {
    pub fn matches(&self, values: &[f64]) -> bool {
        values
            .get(self.coordinate)
            .is_some_and(|&v| self.lo <= v && v <= self.hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRuleConfig {
    pub positive_class: String,
    pub nonpositive_class: String,
    pub flat_tolerance: f64,
    /// SPC layout whose pair points define the slope.
    pub layout: LayoutConfig,
}

impl SlopeRuleConfig {
    pub fn new(positive_class: impl Into<String>, nonpositive_class: impl Into<String>, layout: LayoutConfig) -> Self {
        SlopeRuleConfig {
            positive_class: positive_class.into(),
            nonpositive_class: nonpositive_class.into(),
            flat_tolerance: DEFAULT_FLAT_TOLERANCE,
            layout,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.positive_class == self.nonpositive_class {
            return Err(Error::config("slope rule classes must differ"));
        }
        if !(self.flat_tolerance.is_finite() && self.flat_tolerance >= 0.0) {
            return Err(Error::config("flat tolerance must be finite and non-negative"));
        }
        if self.layout.kind != GlcKind::Spc {
            return Err(Error::config("slope rule needs an SPC layout"));
        }
        if self.layout.n_attributes() < 4 {
            return Err(Error::config("slope rule needs at least four attributes"));
        }
        self.layout.validate()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    #[default]
    Abstain,
    Class(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub chain: Vec<IntervalRule>,
    pub terminal: Option<SlopeRuleConfig>,
    pub fallback: Fallback,
}

impl RuleSet {
    pub fn validate(&self, n_attributes: usize) -> Result<()> {
        for rule in &self.chain {
            if rule.coordinate >= n_attributes {
                return Err(Error::DimensionMismatch {
                    expected: n_attributes,
                    found: rule.coordinate + 1,
                });
            }
            if rule.lo.partial_cmp(&rule.hi).is_none_or(|o| o.is_gt()) {
                return Err(Error::config("interval rule needs lo <= hi"));
            }
        }
        if let Some(t) = &self.terminal {
            t.validate()?;
            if t.layout.n_attributes() != n_attributes {
                return Err(Error::DimensionMismatch {
                    expected: n_attributes,
                    found: t.layout.n_attributes(),
                });
            }
        }
        Ok(())
    }

    /// First matching rule wins, then the slope terminal, then the fallback.
    /// `None` means abstain.
    pub fn classify(&self, values: &[f64]) -> Result<Option<String>> {
        if let Some(rule) = self.chain.iter().find(|r| r.matches(values)) {
            return Ok(Some(rule.predicted.clone()));
        }
        if let Some(t) = &self.terminal {
            return classify_slope(values, t).map(Some);
        }
        Ok(match &self.fallback {
            Fallback::Abstain => None,
            Fallback::Class(c) => Some(c.clone()),
        })
    }

    /// Cases that no interval rule matches.
    pub fn uncovered(&self, dataset: &NormalizedDataset) -> Vec<CaseId> {
        dataset
            .cases
            .iter()
            .filter(|c| !self.chain.iter().any(|r| r.matches(&c.values)))
            .map(|c| c.id)
            .collect()
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.chain.iter().enumerate() {
            let head = if i == 0 { "IF" } else { "ELSE IF" };
            writeln!(
                f,
                "{head} x{} ∈ [{}, {}] THEN class {}",
                r.coordinate + 1,
                r.lo,
                r.hi,
                r.predicted
            )?;
        }
        let lead = if self.chain.is_empty() { "" } else { "ELSE " };
        if let Some(t) = &self.terminal {
            let head = if self.chain.is_empty() { "IF" } else { "ELSE IF" };
            writeln!(
                f,
                "{head} SPC slope > {} THEN class {}",
                t.flat_tolerance, t.positive_class
            )?;
            return writeln!(f, "ELSE class {}", t.nonpositive_class);
        }
        match &self.fallback {
            Fallback::Abstain => writeln!(f, "{lead}abstain"),
            Fallback::Class(c) => writeln!(f, "{lead}class {c}"),
        }
    }
}

/// Exact fraction of counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Ratio { num, den }
    }

    /// NaN when the denominator is zero.
    pub fn value(self) -> f64 {
        if self.den == 0 {
            f64::NAN
        } else {
            self.num as f64 / self.den as f64
        }
    }

    pub fn percent(self) -> f64 {
        100.0 * self.value()
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 0 {
            write!(f, "{}/0 (n/a)", self.num)
        } else {
            write!(f, "{}/{} ({:.2}%)", self.num, self.den, self.percent())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    /// `counts[actual][predicted]`; the extra last column counts abstentions.
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let k = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; k + 1]; k],
        }
    }

    fn index(&self, class: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c == class)
            .ok_or_else(|| Error::UnknownClass(class.to_string()))
    }

    pub fn record(&mut self, actual: &str, predicted: Option<&str>) -> Result<()> {
        let a = self.index(actual)?;
        let p = match predicted {
            Some(p) => self.index(p)?,
            None => self.classes.len(),
        };
        self.counts[a][p] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn abstained(&self) -> u64 {
        let k = self.classes.len();
        self.counts.iter().map(|row| row[k]).sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Correct over non-abstained cases.
    pub fn accuracy(&self) -> Ratio {
        Ratio::new(self.correct(), self.total() - self.abstained())
    }

    pub fn actual_count(&self, class: &str) -> Result<u64> {
        Ok(self.counts[self.index(class)?].iter().sum())
    }

    pub fn predicted_count(&self, class: &str) -> Result<u64> {
        let p = self.index(class)?;
        Ok(self.counts.iter().map(|row| row[p]).sum())
    }

    /// Correct over cases predicted as `class` (column-wise).
    pub fn precision(&self, class: &str) -> Result<Ratio> {
        let i = self.index(class)?;
        Ok(Ratio::new(self.counts[i][i], self.predicted_count(class)?))
    }

    /// Correct over cases actually in `class` (row-wise).
    pub fn recall(&self, class: &str) -> Result<Ratio> {
        let i = self.index(class)?;
        Ok(Ratio::new(self.counts[i][i], self.actual_count(class)?))
    }

    /// Rows are actual classes; columns are predictions, abstain and recall.
    /// A trailing row holds per-column precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("actual");
        for c in &self.classes {
            let _ = write!(out, ",{c}");
        }
        out.push_str(",abstain,recall\n");
        for (i, row) in self.counts.iter().enumerate() {
            out.push_str(&self.classes[i]);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            let r = Ratio::new(row[i], row.iter().sum());
            let _ = writeln!(out, ",{}", r.value());
        }
        out.push_str("precision");
        for c in &self.classes {
            let p = self.precision(c).expect("class from palette");
            let _ = write!(out, ",{}", p.value());
        }
        let _ = writeln!(out, ",,{}", self.accuracy().value());
        out
    }
}

/// Overall slope from the first to the last SPC pair point.
pub fn spc_slope(values: &[f64], layout: &LayoutConfig) -> Result<f64> {
    if values.len() != layout.n_attributes() {
        return Err(Error::DimensionMismatch {
            expected: layout.n_attributes(),
            found: values.len(),
        });
    }
    let points = spc_pair_points(values, layout);
    let (first, last) = (points[0], points[points.len() - 1]);
    let dx = last[0] - first[0];
    if dx == 0.0 {
        return Err(Error::Degenerate("first and last pair points share an x position".into()));
    }
    Ok((last[1] - first[1]) / dx)
}

pub fn classify_slope(values: &[f64], config: &SlopeRuleConfig) -> Result<String> {
    if config.layout.n_attributes() < 4 {
        return Err(Error::config("slope rule needs at least four attributes"));
    }
    let slope = spc_slope(values, &config.layout)?;
    Ok(if slope > config.flat_tolerance {
        config.positive_class.clone()
    } else {
        config.nonpositive_class.clone()
    })
}

/// Greedy chain: take the top-ranked qualifying region, drop the cases it
/// covers, re-rank the rest, repeat.
pub fn induce_interval_rules(dataset: &NormalizedDataset, min_purity: f64, min_support: usize) -> Result<RuleSet> {
    if !(min_purity > 0.0 && min_purity <= 1.0) {
        return Err(Error::config("min_purity must lie in (0, 1]"));
    }
    if min_support < 1 {
        return Err(Error::config("min_support must be at least 1"));
    }
    let mut chain = Vec::new();
    let mut remaining = dataset.clone();
    while !remaining.is_empty() {
        let report = rank_regions_by_purity(&remaining, min_support)?;
        let Some(region) = report
            .regions
            .into_iter()
            .find(|r| r.purity >= min_purity && r.support >= min_support)
        else {
            break;
        };
        let covered: BTreeSet<CaseId> = region.case_ids.iter().copied().collect();
        chain.push(IntervalRule {
            coordinate: region.coordinate,
            lo: region.lo,
            hi: region.hi,
            predicted: region.dominant_class,
        });
        let keep: Vec<CaseId> = remaining
            .cases
            .iter()
            .map(|c| c.id)
            .filter(|id| !covered.contains(id))
            .collect();
        if keep.is_empty() {
            break;
        }
        remaining = remaining.subset(&keep)?;
    }
    Ok(RuleSet {
        chain,
        terminal: None,
        fallback: Fallback::Abstain,
    })
}

pub fn evaluate_ruleset(ruleset: &RuleSet, dataset: &NormalizedDataset) -> Result<ConfusionMatrix> {
    ruleset.validate(dataset.n_attributes())?;
    let predictions: Vec<Option<String>> = dataset
        .cases
        .par_iter()
        .map(|c| ruleset.classify(&c.values))
        .collect::<Result<_>>()?;

    let mut classes = dataset.class_palette.clone();
    let mut extra = |c: &str| {
        if !classes.iter().any(|k| k == c) {
            classes.push(c.to_string());
        }
    };
    for r in &ruleset.chain {
        extra(&r.predicted);
    }
    if let Some(t) = &ruleset.terminal {
        extra(&t.positive_class);
        extra(&t.nonpositive_class);
    }
    if let Fallback::Class(c) = &ruleset.fallback {
        extra(c);
    }

    let mut matrix = ConfusionMatrix::new(classes);
    for (case, predicted) in dataset.cases.iter().zip(&predictions) {
        matrix.record(&case.label, predicted.as_deref())?;
    }
    Ok(matrix)
}
