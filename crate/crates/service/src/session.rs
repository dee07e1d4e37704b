use std::collections::BTreeMap;
use std::sync::Arc;

use glc_api::{SessionId, SessionInfo, VersionEntry};
use glc_core::purity::{rank_regions_by_purity, PurityReport};
use glc_core::{GlcKind, LayoutConfig, NormalizedDataset};

use crate::error::{ApiError, ApiResult};

#[derive(Clone, Debug)]
pub struct Version {
    pub dataset: Arc<NormalizedDataset>,
    pub parent: Option<usize>,
    pub action: String,
}

/// One uploaded dataset and its append-only history. The last version is
/// the head; undo appends a copy of an older version.
#[derive(Debug)]
pub struct Session {
    pub id: SessionId,
    pub name: String,
    pub versions: Vec<Version>,
    pub layouts: BTreeMap<GlcKind, LayoutConfig>,
    purity: Option<(usize, usize, Arc<PurityReport>)>,
}

impl Session {
    pub fn new(id: SessionId, name: String, dataset: NormalizedDataset) -> Self {
        Session {
            id,
            name,
            versions: vec![Version {
                dataset: Arc::new(dataset),
                parent: None,
                action: "upload".into(),
            }],
            layouts: BTreeMap::new(),
            purity: None,
        }
    }

    pub fn restore(
        id: SessionId,
        name: String,
        versions: Vec<Version>,
        layouts: BTreeMap<GlcKind, LayoutConfig>,
    ) -> Self {
        Session {
            id,
            name,
            versions,
            layouts,
            purity: None,
        }
    }

    pub fn head(&self) -> usize {
        self.versions.len() - 1
    }

    pub fn dataset(&self, version: Option<usize>) -> ApiResult<Arc<NormalizedDataset>> {
        let v = version.unwrap_or(self.head());
        self.versions
            .get(v)
            .map(|v| v.dataset.clone())
            .ok_or_else(|| ApiError::not_found(format!("session {} has no version {v}", self.id)))
    }

    pub fn check_expected(&self, expected: usize) -> ApiResult<()> {
        if expected == self.head() {
            Ok(())
        } else {
            Err(ApiError::stale_version(expected, self.head()))
        }
    }

    pub fn push(&mut self, dataset: NormalizedDataset, parent: usize, action: String) -> usize {
        self.versions.push(Version {
            dataset: Arc::new(dataset),
            parent: Some(parent),
            action,
        });
        self.head()
    }

    pub fn layout_config(&self, kind: GlcKind) -> LayoutConfig {
        self.layouts
            .get(&kind)
            .cloned()
            .unwrap_or_else(|| LayoutConfig::new(kind, self.versions[0].dataset.n_attributes()))
    }

    /// Cached for the most recent (version, min_support) pair.
    pub fn purity(&mut self, version: Option<usize>, min_support: usize) -> ApiResult<Arc<PurityReport>> {
        let v = version.unwrap_or(self.head());
        if let Some((cv, cs, report)) = &self.purity {
            if (*cv, *cs) == (v, min_support) {
                return Ok(report.clone());
            }
        }
        let report = Arc::new(rank_regions_by_purity(&*self.dataset(Some(v))?, min_support)?);
        self.purity = Some((v, min_support, report.clone()));
        Ok(report)
    }

    pub fn info(&self) -> SessionInfo {
        let head = &self.versions[self.head()].dataset;
        SessionInfo {
            id: self.id.clone(),
            name: self.name.clone(),
            version: self.head(),
            attributes: head.attribute_names.clone(),
            classes: head.class_palette.clone(),
            cases: head.len(),
            versions: self
                .versions
                .iter()
                .enumerate()
                .map(|(i, v)| VersionEntry {
                    version: i,
                    parent: v.parent,
                    action: v.action.clone(),
                    cases: v.dataset.len(),
                    synthetic: v.dataset.synthetic_count(),
                    fingerprint: format!("{:016x}", v.dataset.fingerprint()),
                })
                .collect(),
        }
    }
}
