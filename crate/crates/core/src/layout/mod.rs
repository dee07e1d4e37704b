//! Reversible 2-D layouts of n-D cases in four General Line Coordinate
//! systems: Parallel (PC), Shifted Paired (SPC), Static Circular (SCC) and
//! Dynamic Circular (DCC).
//!
//! Conventions shared by all kinds: attribute values are read in
//! `attribute_order` and flipped to `1 - x` for inverted attributes before
//! placement. Circles are centered at the origin, arc travel starts at north
//! `(0, r)` and runs clockwise.
//!
//! Circular glyphs store the unwrapped arc position of every vertex, so a
//! layout can be inverted exactly even when a vertex wraps past north.

mod svg;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{AttributeStats, CaseId, CaseRecord, NormalizedDataset};
use crate::error::{Error, Result};

pub use svg::render_svg;

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlcKind {
    Pc,
    Spc,
    Scc,
    Dcc,
}

impl GlcKind {
    pub const ALL: [GlcKind; 4] = [GlcKind::Pc, GlcKind::Spc, GlcKind::Scc, GlcKind::Dcc];

    pub fn is_circular(self) -> bool {
        matches!(self, GlcKind::Scc | GlcKind::Dcc)
    }
}

impl fmt::Display for GlcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GlcKind::Pc => "PC",
            GlcKind::Spc => "SPC",
            GlcKind::Scc => "SCC",
            GlcKind::Dcc => "DCC",
        })
    }
}

impl FromStr for GlcKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pc" => Ok(GlcKind::Pc),
            "spc" => Ok(GlcKind::Spc),
            "scc" => Ok(GlcKind::Scc),
            "dcc" => Ok(GlcKind::Dcc),
            _ => Err(Error::config(format!("unknown GLC kind {s:?}"))),
        }
    }
}

pub const DEFAULT_CURVATURE: f64 = 0.85;
pub const DEFAULT_PAIR_GAP: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    pub kind: GlcKind,
    /// Display position `j` shows attribute `attribute_order[j]`.
    pub attribute_order: Vec<usize>,
    /// Indexed by attribute, not by display position.
    pub inverted: Vec<bool>,
    pub radius: f64,
    /// Per-attribute arc scale for DCC.
    pub coefficients: Vec<f64>,
    /// Bezier pull of the chord midpoint toward the center, in [0, 1].
    pub curvature: f64,
    pub pair_gap: f64,
}

impl LayoutConfig {
    pub fn new(kind: GlcKind, n: usize) -> Self {
        LayoutConfig {
            kind,
            attribute_order: (0..n).collect(),
            inverted: vec![false; n],
            radius: 1.0,
            coefficients: vec![1.0; n],
            curvature: DEFAULT_CURVATURE,
            pair_gap: DEFAULT_PAIR_GAP,
        }
    }

    pub fn n_attributes(&self) -> usize {
        self.attribute_order.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.attribute_order.len();
        let mut seen = vec![false; n];
        for &a in &self.attribute_order {
            if a >= n || seen[a] {
                return Err(Error::config("attribute_order must be a permutation of 0..n"));
            }
            seen[a] = true;
        }
        if self.inverted.len() != n {
            return Err(Error::config("inverted must have one flag per attribute"));
        }
        if !(self.curvature.is_finite() && (0.0..=1.0).contains(&self.curvature)) {
            return Err(Error::config("curvature must lie in [0, 1]"));
        }
        if !(self.pair_gap.is_finite() && self.pair_gap >= 0.0) {
            return Err(Error::config("pair_gap must be non-negative"));
        }
        match self.kind {
            GlcKind::Spc if n < 2 => {
                return Err(Error::config("SPC needs at least two attributes"));
            }
            GlcKind::Scc | GlcKind::Dcc if n < 1 => {
                return Err(Error::config("circular coordinates need at least one attribute"));
            }
            _ => {}
        }
        if self.kind.is_circular() && !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::config("radius must be positive"));
        }
        if self.kind == GlcKind::Dcc {
            if self.coefficients.len() != n {
                return Err(Error::config("DCC needs one coefficient per attribute"));
            }
            if self.coefficients.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
                return Err(Error::config("DCC coefficients must be positive"));
            }
        }
        Ok(())
    }

    /// Values in display order, inversion applied.
    pub fn display_values(&self, x: &[f64]) -> Vec<f64> {
        self.attribute_order
            .iter()
            .map(|&a| if self.inverted[a] { 1.0 - x[a] } else { x[a] })
            .collect()
    }

    /// Inverse of [`display_values`](Self::display_values).
    pub fn attribute_values(&self, shown: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; shown.len()];
        for (j, &a) in self.attribute_order.iter().enumerate() {
            x[a] = if self.inverted[a] { 1.0 - shown[j] } else { shown[j] };
        }
        x
    }

    /// Arc length of one SCC sector (also the DCC unit step).
    pub fn sector_arc(&self) -> f64 {
        2.0 * PI * self.radius / self.n_attributes() as f64
    }

    fn spc_pairs(&self) -> usize {
        self.n_attributes().div_ceil(2)
    }

    fn spc_shift(&self, pair: usize) -> f64 {
        pair as f64 * (1.0 + self.pair_gap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseGlyph {
    #[serde(rename = "id")]
    pub case_id: CaseId,
    pub label: String,
    pub vertices: Vec<Point>,
    /// One quadratic Bezier control point per consecutive vertex pair.
    #[serde(default)]
    pub controls: Vec<Point>,
    /// Unwrapped cumulative arc position per vertex.
    #[serde(default)]
    pub arc_params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Frame {
    Parallel {
        axes: Vec<[Point; 2]>,
    },
    ShiftedPaired {
        /// Lower-left corners of the unit squares.
        origins: Vec<Point>,
        size: f64,
    },
    Circular {
        radius: f64,
        /// Sector start angles in radians, clockwise from north. Empty for
        /// DCC, which has no fixed sectors.
        boundaries: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub kind: GlcKind,
    pub config: LayoutConfig,
    pub frame: Frame,
    /// Class palette at layout time; glyph colors index into it.
    #[serde(default)]
    pub classes: Vec<String>,
    pub glyphs: Vec<CaseGlyph>,
}

/// A case vector read back out of a layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveredCase {
    pub id: CaseId,
    pub label: String,
    pub values: Vec<f64>,
}

impl RecoveredCase {
    pub fn denormalized(&self, stats: &AttributeStats) -> Result<Vec<f64>> {
        crate::data::denormalize_point(&self.values, stats)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryFormat {
    Svg,
    GeometryJson,
}

/// Lays out every case of `dataset` in the configured GLC.
pub fn layout(dataset: &NormalizedDataset, config: &LayoutConfig) -> Result<Layout> {
    layout_cases(dataset, dataset.cases.iter(), config)
}

/// Lays out only the cases in `view`, keeping dataset order.
pub fn layout_view(dataset: &NormalizedDataset, view: &[CaseId], config: &LayoutConfig) -> Result<Layout> {
    let visible: std::collections::HashSet<CaseId> = view.iter().copied().collect();
    layout_cases(dataset, dataset.cases.iter().filter(|c| visible.contains(&c.id)), config)
}

pub fn layout_pc(dataset: &NormalizedDataset, config: &LayoutConfig) -> Result<Layout> {
    expect_kind(config, GlcKind::Pc)?;
    layout(dataset, config)
}

pub fn layout_spc(dataset: &NormalizedDataset, config: &LayoutConfig) -> Result<Layout> {
    expect_kind(config, GlcKind::Spc)?;
    layout(dataset, config)
}

pub fn layout_scc(dataset: &NormalizedDataset, config: &LayoutConfig) -> Result<Layout> {
    expect_kind(config, GlcKind::Scc)?;
    layout(dataset, config)
}

pub fn layout_dcc(dataset: &NormalizedDataset, config: &LayoutConfig) -> Result<Layout> {
    expect_kind(config, GlcKind::Dcc)?;
    layout(dataset, config)
}

fn expect_kind(config: &LayoutConfig, kind: GlcKind) -> Result<()> {
    if config.kind != kind {
        return Err(Error::config(format!("expected a {kind} config, got {}", config.kind)));
    }
    Ok(())
}

fn layout_cases<'a>(
    dataset: &NormalizedDataset,
    cases: impl Iterator<Item = &'a CaseRecord>,
    config: &LayoutConfig,
) -> Result<Layout> {
    config.validate()?;
    if config.n_attributes() != dataset.n_attributes() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n_attributes(),
            found: config.n_attributes(),
        });
    }
    let glyphs = cases
        .map(|c| {
            let g = glyph_geometry(&c.values, config);
            CaseGlyph {
                case_id: c.id,
                label: c.label.clone(),
                vertices: g.vertices,
                controls: g.controls,
                arc_params: g.arc_params,
            }
        })
        .collect();
    Ok(Layout {
        kind: config.kind,
        config: config.clone(),
        frame: frame_for(config),
        classes: dataset.class_palette.clone(),
        glyphs,
    })
}

/// Geometry of a single glyph, without case metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct GlyphGeometry {
    pub vertices: Vec<Point>,
    pub controls: Vec<Point>,
    pub arc_params: Vec<f64>,
}

/// Computes the glyph for one normalized vector. `config` must be valid and
/// match the vector's dimension.
pub fn glyph_geometry(x: &[f64], config: &LayoutConfig) -> GlyphGeometry {
    let shown = config.display_values(x);
    match config.kind {
        GlcKind::Pc => GlyphGeometry {
            vertices: shown.iter().enumerate().map(|(j, &v)| [j as f64, v]).collect(),
            controls: Vec::new(),
            arc_params: Vec::new(),
        },
        GlcKind::Spc => GlyphGeometry {
            vertices: spc_points(&shown, config),
            controls: Vec::new(),
            arc_params: Vec::new(),
        },
        GlcKind::Scc => {
            let step = config.sector_arc();
            let arcs: Vec<f64> = shown
                .iter()
                .enumerate()
                .map(|(j, &v)| j as f64 * step + v * step)
                .collect();
            circular_glyph(arcs, config)
        }
        GlcKind::Dcc => {
            let step = config.sector_arc();
            let mut s = 0.0;
            let arcs: Vec<f64> = shown
                .iter()
                .zip(&config.attribute_order)
                .map(|(&v, &a)| {
                    s += config.coefficients[a] * v * step;
                    s
                })
                .collect();
            circular_glyph(arcs, config)
        }
    }
}

fn spc_points(shown: &[f64], config: &LayoutConfig) -> Vec<Point> {
    (0..config.spc_pairs())
        .map(|p| {
            let first = shown[2 * p];
            // Odd n: the final attribute pairs with itself.
            let second = shown.get(2 * p + 1).copied().unwrap_or(first);
            [config.spc_shift(p) + first, second]
        })
        .collect()
}

/// SPC pair points for one case, used by the slope rule.
pub fn spc_pair_points(x: &[f64], config: &LayoutConfig) -> Vec<Point> {
    spc_points(&config.display_values(x), config)
}

/// Point on the circle at unwrapped arc length `arc` from north, clockwise.
pub fn point_on_circle(arc: f64, radius: f64) -> Point {
    let theta = arc / radius;
    [radius * theta.sin(), radius * theta.cos()]
}

fn circular_glyph(arcs: Vec<f64>, config: &LayoutConfig) -> GlyphGeometry {
    let vertices: Vec<Point> = arcs.iter().map(|&s| point_on_circle(s, config.radius)).collect();
    let pull = 1.0 - config.curvature;
    let controls = vertices
        .windows(2)
        .map(|w| {
            let mid = [(w[0][0] + w[1][0]) / 2.0, (w[0][1] + w[1][1]) / 2.0];
            [mid[0] * pull, mid[1] * pull]
        })
        .collect();
    GlyphGeometry {
        vertices,
        controls,
        arc_params: arcs,
    }
}

fn frame_for(config: &LayoutConfig) -> Frame {
    let n = config.n_attributes();
    match config.kind {
        GlcKind::Pc => Frame::Parallel {
            axes: (0..n).map(|j| [[j as f64, 0.0], [j as f64, 1.0]]).collect(),
        },
        GlcKind::Spc => Frame::ShiftedPaired {
            origins: (0..config.spc_pairs()).map(|p| [config.spc_shift(p), 0.0]).collect(),
            size: 1.0,
        },
        GlcKind::Scc => Frame::Circular {
            radius: config.radius,
            boundaries: (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect(),
        },
        GlcKind::Dcc => Frame::Circular {
            radius: config.radius,
            boundaries: Vec::new(),
        },
    }
}

/// Recovers the normalized vector of every glyph, in original attribute
/// order.
pub fn invert_layout(layout: &Layout) -> Result<Vec<RecoveredCase>> {
    let config = &layout.config;
    config.validate()?;
    layout
        .glyphs
        .iter()
        .map(|g| {
            let shown = invert_glyph(g, config)?;
            Ok(RecoveredCase {
                id: g.case_id,
                label: g.label.clone(),
                values: config.attribute_values(&shown),
            })
        })
        .collect()
}

fn invert_glyph(g: &CaseGlyph, config: &LayoutConfig) -> Result<Vec<f64>> {
    let n = config.n_attributes();
    match config.kind {
        GlcKind::Pc => {
            check_len(g.vertices.len(), n, g.case_id, "vertices")?;
            Ok(g.vertices.iter().map(|v| v[1]).collect())
        }
        GlcKind::Spc => {
            check_len(g.vertices.len(), config.spc_pairs(), g.case_id, "vertices")?;
            let mut shown = Vec::with_capacity(n);
            for (p, v) in g.vertices.iter().enumerate() {
                shown.push(v[0] - config.spc_shift(p));
                if shown.len() < n {
                    shown.push(v[1]);
                }
            }
            Ok(shown)
        }
        GlcKind::Scc => {
            check_len(g.arc_params.len(), n, g.case_id, "arc_params")?;
            let step = config.sector_arc();
            Ok(g.arc_params
                .iter()
                .enumerate()
                .map(|(j, &s)| (s - j as f64 * step) / step)
                .collect())
        }
        GlcKind::Dcc => {
            check_len(g.arc_params.len(), n, g.case_id, "arc_params")?;
            let step = config.sector_arc();
            let mut prev = 0.0;
            let mut shown = Vec::with_capacity(n);
            for (&s, &a) in g.arc_params.iter().zip(&config.attribute_order) {
                let c = config.coefficients[a];
                if c == 0.0 {
                    return Err(Error::Degenerate(format!("zero coefficient for attribute {a}")));
                }
                shown.push((s - prev) / (c * step));
                prev = s;
            }
            Ok(shown)
        }
    }
}

fn check_len(found: usize, expected: usize, id: CaseId, what: &str) -> Result<()> {
    if found != expected {
        return Err(Error::Degenerate(format!(
            "glyph {id} has {found} {what}, expected {expected}"
        )));
    }
    Ok(())
}

/// Serializes a layout as SVG or as the geometry document.
pub fn export_geometry(layout: &Layout, format: GeometryFormat) -> Result<String> {
    match format {
        GeometryFormat::Svg => Ok(render_svg(layout)),
        GeometryFormat::GeometryJson => Ok(serde_json::to_string_pretty(layout)?),
    }
}

pub fn load_geometry(text: &str) -> Result<Layout> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_case(values: &[f64]) -> NormalizedDataset {
        let n = values.len();
        NormalizedDataset::from_parts(
            (0..n).map(|i| format!("x{}", i + 1)).collect(),
            AttributeStats::from_rows(&[vec![0.0; n], vec![1.0; n]], n),
            vec![CaseRecord {
                id: CaseId(0),
                values: values.to_vec(),
                label: "A".into(),
                provenance: crate::data::Provenance::Real,
            }],
            &[],
        )
    }

    fn vertices(kind: GlcKind, x: &[f64], tweak: impl FnOnce(&mut LayoutConfig)) -> Vec<Point> {
        let mut cfg = LayoutConfig::new(kind, x.len());
        tweak(&mut cfg);
        layout(&one_case(x), &cfg).unwrap().glyphs[0].vertices.clone()
    }

    fn close(a: Point, b: Point, tol: f64) -> bool {
        (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol
    }

    #[test]
    fn pc_vertices() {
        assert_eq!(
            vertices(GlcKind::Pc, &[0.0; 4], |_| {}),
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]
        );
        assert_eq!(
            vertices(GlcKind::Pc, &[1.0, 0.5, 1.0, 0.5], |_| {}),
            vec![[0.0, 1.0], [1.0, 0.5], [2.0, 1.0], [3.0, 0.5]]
        );
        let v = vertices(GlcKind::Pc, &[0.2, 0.3, 0.4, 0.5], |c| c.inverted[1] = true);
        assert!(close(v[1], [1.0, 0.7], 1e-12));
    }

    #[test]
    fn spc_pairs_and_slope_sign() {
        let v = vertices(GlcKind::Spc, &[0.5; 4], |_| {});
        assert_eq!(v, vec![[0.5, 0.5], [1.75, 0.5]]);
        let v = vertices(GlcKind::Spc, &[0.0, 0.0, 1.0, 1.0], |_| {});
        assert!(v[1][1] > v[0][1] && v[1][0] > v[0][0]);
        // odd n duplicates the last attribute
        let v = vertices(GlcKind::Spc, &[0.1, 0.2, 0.3], |_| {});
        assert_eq!(v.len(), 2);
        assert!(close(v[1], [1.25 + 0.3, 0.3], 1e-12));
    }

    #[test]
    fn spc_needs_two_attributes() {
        let cfg = LayoutConfig::new(GlcKind::Spc, 1);
        assert!(layout(&one_case(&[0.5]), &cfg).is_err());
    }

    #[test]
    fn scc_vertices() {
        use std::f64::consts::FRAC_1_SQRT_2;
        let v = vertices(GlcKind::Scc, &[0.0, 0.5, 0.3, 1.0], |_| {});
        assert!(close(v[0], [0.0, 1.0], 1e-12));
        assert!(close(v[1], [FRAC_1_SQRT_2, -FRAC_1_SQRT_2], 1e-12));
        assert!(close(v[3], [0.0, 1.0], 1e-12));
    }

    #[test]
    fn dcc_vertices() {
        let v = vertices(GlcKind::Dcc, &[1.0; 4], |_| {});
        assert!(close(v[3], [0.0, 1.0], 1e-12));
        for p in vertices(GlcKind::Dcc, &[0.25, 0.0, 0.0, 0.0], |_| {}) {
            assert!(close(p, [0.3827, 0.9239], 1e-4));
        }
        for p in vertices(GlcKind::Dcc, &[0.0; 4], |c| c.coefficients = vec![2.0, 0.5, 3.0, 1.0]) {
            assert!(close(p, [0.0, 1.0], 1e-12));
        }
    }

    #[test]
    fn dcc_rejects_nonpositive_coefficients() {
        let mut cfg = LayoutConfig::new(GlcKind::Dcc, 2);
        cfg.coefficients = vec![1.0, 0.0];
        assert!(layout(&one_case(&[0.1, 0.2]), &cfg).is_err());
    }

    #[test]
    fn dcc_full_wrap_inverts_to_ones() {
        let cfg = LayoutConfig::new(GlcKind::Dcc, 4);
        let l = layout(&one_case(&[1.0; 4]), &cfg).unwrap();
        let back = invert_layout(&l).unwrap();
        for v in &back[0].values {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invert_needs_arc_params() {
        let cfg = LayoutConfig::new(GlcKind::Scc, 3);
        let mut l = layout(&one_case(&[0.1, 0.2, 0.3]), &cfg).unwrap();
        l.glyphs[0].arc_params.clear();
        assert!(invert_layout(&l).is_err());
    }

    #[test]
    fn curve_controls_pulled_toward_center() {
        let cfg = LayoutConfig::new(GlcKind::Scc, 4);
        let l = layout(&one_case(&[0.5, 0.5, 0.5, 0.5]), &cfg).unwrap();
        let g = &l.glyphs[0];
        assert_eq!(g.controls.len(), 3);
        for c in &g.controls {
            assert!(c[0].hypot(c[1]) < cfg.radius);
        }
    }

    #[test]
    fn permutation_validation() {
        let mut cfg = LayoutConfig::new(GlcKind::Pc, 3);
        cfg.attribute_order = vec![0, 0, 2];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn order_is_metadata() {
        let x = [0.1, 0.9, 0.4, 0.6];
        for kind in GlcKind::ALL {
            let mut cfg = LayoutConfig::new(kind, 4);
            cfg.attribute_order = vec![2, 0, 3, 1];
            cfg.inverted = vec![true, false, false, true];
            cfg.coefficients = vec![0.5, 1.5, 1.0, 2.0];
            let back = invert_layout(&layout(&one_case(&x), &cfg).unwrap()).unwrap();
            for (a, b) in back[0].values.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12, "{kind}");
            }
        }
    }
}
