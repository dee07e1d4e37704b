//! General Line Coordinates toolkit: lossless n-D layouts, purity analysis,
//! interval and slope rules, synthetic case generation with automatic
//! labeling, and a cross-validated classifier ensemble tying them together.

pub mod data;
pub mod error;
pub mod eval;
pub mod layout;
pub mod pipeline;
pub mod purity;
pub mod rules;
pub mod sdg;

pub use data::{CaseId, CaseRecord, EditCommand, NormalizedDataset, Provenance, RawDataset};
pub use error::{Error, Result};
pub use layout::{GlcKind, Layout, LayoutConfig};
