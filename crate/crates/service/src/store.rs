//! On-disk sessions: one directory each, holding `session.json` and one
//! `v<N>.csv` per version in normalized units with id and provenance
//! columns.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use glc_core::data::AttributeStats;
use glc_core::{CaseId, CaseRecord, GlcKind, LayoutConfig, NormalizedDataset};

use crate::session::{Session, Version};

#[derive(Serialize, Deserialize)]
struct Meta {
    id: String,
    name: String,
    attribute_names: Vec<String>,
    stats: AttributeStats,
    layouts: BTreeMap<GlcKind, LayoutConfig>,
    versions: Vec<VersionMeta>,
}

#[derive(Serialize, Deserialize)]
struct VersionMeta {
    parent: Option<usize>,
    action: String,
    palette: Vec<String>,
    next_id: u64,
}

#[derive(Clone, Debug)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Store> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Store { root })
    }

    fn dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    /// Writes any version files not yet on disk, then the metadata.
    pub fn save(&self, session: &Session) -> io::Result<()> {
        let dir = self.dir(&session.id);
        fs::create_dir_all(&dir)?;
        for (i, v) in session.versions.iter().enumerate() {
            let path = dir.join(format!("v{i}.csv"));
            if !path.exists() {
                write_atomic(&path, &version_csv(&v.dataset)?)?;
            }
        }
        let first = &session.versions[0].dataset;
        let meta = Meta {
            id: session.id.clone(),
            name: session.name.clone(),
            attribute_names: first.attribute_names.clone(),
            stats: first.stats.clone(),
            layouts: session.layouts.clone(),
            versions: session
                .versions
                .iter()
                .map(|v| VersionMeta {
                    parent: v.parent,
                    action: v.action.clone(),
                    palette: v.dataset.class_palette.clone(),
                    next_id: v.dataset.next_id().0,
                })
                .collect(),
        };
        let json = serde_json::to_vec_pretty(&meta).map_err(io::Error::other)?;
        write_atomic(&dir.join("session.json"), &json)
    }

    pub fn load_all(&self) -> io::Result<Vec<Session>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let dir = entry?.path();
            if dir.join("session.json").is_file() {
                out.push(load_session(&dir)?);
            }
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

fn version_csv(ds: &NormalizedDataset) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string()];
    header.extend(ds.attribute_names.iter().cloned());
    header.extend(["class".to_string(), "provenance".to_string()]);
    w.write_record(&header)?;
    for c in &ds.cases {
        let mut row = vec![c.id.0.to_string()];
        row.extend(c.values.iter().map(f64::to_string));
        row.push(c.label.clone());
        row.push(c.provenance.as_str().to_string());
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

fn invalid(path: &Path, message: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("{}: {message}", path.display()))
}

fn load_session(dir: &Path) -> io::Result<Session> {
    let meta_path = dir.join("session.json");
    let meta: Meta = serde_json::from_slice(&fs::read(&meta_path)?).map_err(|e| invalid(&meta_path, e))?;
    let n = meta.attribute_names.len();
    let mut versions = Vec::with_capacity(meta.versions.len());
    for (i, vm) in meta.versions.iter().enumerate() {
        let path = dir.join(format!("v{i}.csv"));
        let mut reader = csv::Reader::from_path(&path)?;
        let mut cases = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != n + 3 {
                return Err(invalid(&path, format!("expected {} fields, found {}", n + 3, record.len())));
            }
            let id = record[0].parse().map_err(|e| invalid(&path, e))?;
            let values = (1..=n)
                .map(|k| record[k].parse::<f64>().map_err(|e| invalid(&path, e)))
                .collect::<io::Result<Vec<_>>>()?;
            cases.push(CaseRecord {
                id: CaseId(id),
                values,
                label: record[n + 1].to_string(),
                provenance: record[n + 2].parse().map_err(|e| invalid(&path, e))?,
            });
        }
        let dataset = NormalizedDataset::from_parts(meta.attribute_names.clone(), meta.stats.clone(), cases, &vm.palette)
            .with_next_id(CaseId(vm.next_id));
        versions.push(Version {
            dataset: Arc::new(dataset),
            parent: vm.parent,
            action: vm.action.clone(),
        });
    }
    if versions.is_empty() {
        return Err(invalid(&meta_path, "no versions"));
    }
    Ok(Session::restore(meta.id, meta.name, versions, meta.layouts))
}
