//! Request and response bodies of the workbench HTTP service.
//!
//! Everything here is plain data. Core types (edit commands, strategies,
//! reports, layouts) travel unchanged; this crate only adds the envelopes
//! around them.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use glc_core::eval::{ClassifierKind, EvalConfig, EvalReport};
use glc_core::layout::GeometryFormat;
use glc_core::pipeline::{Decision, DecisionRequest, PipelineConfig, SessionLog};
use glc_core::purity::PurityReport;
use glc_core::rules::{ConfusionMatrix, RuleSet};
use glc_core::sdg::{QualityMetrics, SdgBatch, SdgStrategy};
use glc_core::{CaseId, EditCommand, GlcKind, LayoutConfig, NormalizedDataset};

pub type SessionId = String;
pub type JobId = String;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VersionEntry {
    pub version: usize,
    pub parent: Option<usize>,
    pub action: String,
    pub cases: usize,
    pub synthetic: usize,
    /// Hex content hash; a string so it survives JavaScript numbers.
    pub fingerprint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: SessionId,
    pub name: String,
    /// The head of the version chain. Mutations must quote it.
    pub version: usize,
    pub attributes: Vec<String>,
    pub classes: Vec<String>,
    pub cases: usize,
    pub versions: Vec<VersionEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditRequest {
    pub expected_version: usize,
    pub command: EditCommand,
}

/// Makes an earlier version current again by appending a copy of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivateRequest {
    pub expected_version: usize,
    pub version: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdgRequest {
    pub strategy: SdgStrategy,
    pub seed: u64,
    /// Append the batch as a new version. Otherwise it is only a preview.
    #[serde(default)]
    pub commit: bool,
    /// Required when committing.
    #[serde(default)]
    pub expected_version: Option<usize>,
    /// Score the batch against the real cases with this k.
    #[serde(default)]
    pub quality_k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdgResponse {
    pub batch: SdgBatch,
    pub quality: Option<QualityMetrics>,
    /// The session after a commit.
    pub session: Option<SessionInfo>,
}

/// Layout options as query parameters. Lists are comma separated and
/// indices are 0-based.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LayoutQuery {
    pub kind: Option<GlcKind>,
    pub version: Option<usize>,
    pub order: Option<String>,
    pub invert: Option<String>,
    pub coeff: Option<String>,
    pub radius: Option<f64>,
    pub curvature: Option<f64>,
    pub pair_gap: Option<f64>,
    pub format: Option<GeometryFormat>,
}

impl LayoutQuery {
    /// Overrides fields of `base` with the options that are present.
    pub fn apply(&self, mut base: LayoutConfig) -> Result<LayoutConfig, String> {
        let n = base.n_attributes();
        if let Some(order) = &self.order {
            base.attribute_order = parse_list(order)?;
        }
        if let Some(invert) = &self.invert {
            let mut flags = vec![false; n];
            for i in parse_list::<usize>(invert)? {
                *flags.get_mut(i).ok_or(format!("invert index {i} out of range"))? = true;
            }
            base.inverted = flags;
        }
        if let Some(coeff) = &self.coeff {
            base.coefficients = parse_list(coeff)?;
        }
        if let Some(r) = self.radius {
            base.radius = r;
        }
        if let Some(k) = self.curvature {
            base.curvature = k;
        }
        if let Some(g) = self.pair_gap {
            base.pair_gap = g;
        }
        base.validate().map_err(|e| e.to_string())?;
        Ok(base)
    }
}

/// Parses `"1, 2,3"`; an empty string is an empty list.
pub fn parse_list<T: FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("cannot parse {s:?} in list {text:?}")))
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PurityQuery {
    pub version: Option<usize>,
    pub min_support: Option<usize>,
    #[serde(default)]
    pub hide_pure: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurityResponse {
    pub report: PurityReport,
    /// Cases left on screen under the requested visibility.
    pub visible: Vec<CaseId>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RulesQuery {
    pub version: Option<usize>,
    pub min_purity: Option<f64>,
    pub min_support: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RulesResponse {
    pub rules: RuleSet,
    pub text: String,
    pub confusion: ConfusionMatrix,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExportQuery {
    pub version: Option<usize>,
    /// Raw units instead of [0, 1].
    #[serde(default)]
    pub denormalize: bool,
    #[serde(default)]
    pub provenance: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VersionQuery {
    pub version: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PolicySpec {
    Automatic {
        per_class: usize,
        seed: u64,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    /// Pauses at every decision point until one is posted to the job.
    Interactive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JobSpec {
    /// Cross-validates a session version. Exploration defaults to the real
    /// cases of the same version.
    Eval {
        session: SessionId,
        #[serde(default)]
        version: Option<usize>,
        #[serde(default)]
        exploration_version: Option<usize>,
        /// Takes exploration cases from another session's head instead,
        /// rescaled to this session's attribute ranges.
        #[serde(default)]
        exploration_session: Option<SessionId>,
        config: EvalConfig,
        #[serde(default = "ClassifierKind::defaults")]
        classifiers: Vec<ClassifierKind>,
    },
    /// Runs the generation loop from a session version. The final dataset
    /// is appended to the session.
    Pipeline {
        session: SessionId,
        #[serde(default)]
        version: Option<usize>,
        config: PipelineConfig,
        policy: PolicySpec,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_finished(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JobResult {
    Eval { report: EvalReport },
    Pipeline { log: SessionLog, version: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub id: JobId,
    pub session: SessionId,
    pub state: JobState,
    /// Fraction in [0, 1].
    pub progress: f64,
    /// Set while an interactive pipeline waits for a decision.
    pub awaiting: Option<DecisionRequest>,
    pub result: Option<JobResult>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionBody {
    pub decision: Decision,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Validation,
    NotFound,
    Conflict,
    Internal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: ErrorKind,
    pub message: String,
    /// The session head, on version conflicts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_version: Option<usize>,
}

/// A dataset version as served by `GET /sessions/{id}/dataset`.
pub type DatasetDocument = NormalizedDataset;
