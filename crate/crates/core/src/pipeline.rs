//! The eleven-step synthetic data generation and labeling loop.
//!
//! Steps: 1 layout, 2–5 purity analysis, 6 generate and auto-label inside
//! pure areas, 7 evaluate, 8 review, 9 generate outside the least-pure box,
//! 10 loop back to 7, 11 switch GLC. Decisions at 6, 8, 9 and 11 come from a
//! [`Policy`].

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::data::{CaseId, NormalizedDataset};
use crate::error::{Error, Result};
use crate::eval::{monte_carlo_cv, ClassifierKind, EvalConfig, EvalReport};
use crate::layout::{layout, GlcKind, LayoutConfig};
use crate::purity::{apply_visibility, rank_regions_by_purity, PurityReport, Visibility};
use crate::sdg::{auto_label, generate, SdgStrategy};

/// Order in which the automatic policy visits GLCs.
pub const GLC_ROTATION: [GlcKind; 4] = [GlcKind::Pc, GlcKind::Scc, GlcKind::Spc, GlcKind::Dcc];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "default_glc")]
    pub glc: GlcKind,
    #[serde(default = "default_min_support")]
    pub min_support: usize,
    pub eval: EvalConfig,
    #[serde(default = "ClassifierKind::defaults")]
    pub classifiers: Vec<ClassifierKind>,
    /// Bound on Step-7 evaluations.
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_glc() -> GlcKind {
    GlcKind::Pc
}

fn default_min_support() -> usize {
    3
}

fn default_max_iterations() -> usize {
    10
}

impl PipelineConfig {
    pub fn new(eval: EvalConfig) -> Self {
        PipelineConfig {
            glc: default_glc(),
            min_support: default_min_support(),
            eval,
            classifiers: ClassifierKind::defaults(),
            max_iterations: default_max_iterations(),
        }
    }

    /// Checks that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.min_support < 1 {
            return Err(Error::config("min_support must be at least 1"));
        }
        if self.max_iterations < 1 {
            return Err(Error::config("max_iterations must be at least 1"));
        }
        if self.classifiers.is_empty() {
            return Err(Error::config("no classifiers selected"));
        }
        for k in &self.classifiers {
            k.validate()?;
        }
        self.eval.validate()
    }
}

/// What the loop needs decided next.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DecisionRequest {
    /// Steps 6 and 9: which strategies to run.
    Generate {
        step: u8,
        glc: GlcKind,
        iteration: usize,
        classes: Vec<String>,
        lp_cases: usize,
    },
    /// Step 8: keep the candidate dataset, regenerate, or go outside the LP area.
    Review {
        glc: GlcKind,
        iteration: usize,
        baseline: EvalReport,
        candidate: EvalReport,
    },
    /// Step 11: pick the next GLC or finish.
    NextGlc { current: GlcKind, visited: Vec<GlcKind> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Decision {
    Generate { strategies: Vec<SdgStrategy>, seed: u64 },
    Accept,
    /// Back to Step 6.
    Modify,
    /// On to Step 9.
    Escalate,
    Continue { glc: GlcKind },
    Finish,
    Stop,
}

impl DecisionRequest {
    /// Whether `decision` is a valid answer to this request. `Stop` always is.
    pub fn admits(&self, decision: &Decision) -> bool {
        matches!(
            (self, decision),
            (_, Decision::Stop)
                | (DecisionRequest::Generate { .. }, Decision::Generate { .. })
                | (
                    DecisionRequest::Review { .. },
                    Decision::Accept | Decision::Modify | Decision::Escalate
                )
                | (DecisionRequest::NextGlc { .. }, Decision::Continue { .. } | Decision::Finish)
        )
    }
}

pub trait Policy {
    fn decide(&mut self, request: &DecisionRequest) -> Result<Decision>;
}

/// Generates proportional in-bounds cases for every class, accepts a
/// candidate when no classifier's exploration mean drops by more than
/// `tolerance`, and rotates through [`GLC_ROTATION`].
#[derive(Clone, Debug)]
pub struct AutomaticPolicy {
    pub per_class: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Rejections at Step 8 before escalating to Step 9.
    pub modify_limit: usize,
    rejections: usize,
}

impl AutomaticPolicy {
    pub fn new(per_class: usize, seed: u64) -> Self {
        AutomaticPolicy {
            per_class,
            seed,
            tolerance: 0.01,
            modify_limit: 1,
            rejections: 0,
        }
    }

    /// True when no classifier's exploration mean falls by more than `tolerance`.
    pub fn acceptable(baseline: &EvalReport, candidate: &EvalReport, tolerance: f64) -> bool {
        baseline.rows.iter().all(|b| {
            candidate
                .row(&b.model)
                .is_none_or(|c| c.exp_mean_acc >= b.exp_mean_acc - tolerance)
        })
    }
}

impl Policy for AutomaticPolicy {
    fn decide(&mut self, request: &DecisionRequest) -> Result<Decision> {
        Ok(match request {
            DecisionRequest::Generate { iteration, classes, step, .. } => Decision::Generate {
                strategies: classes
                    .iter()
                    .map(|c| SdgStrategy::InBoundsProportional {
                        class: c.clone(),
                        count: self.per_class,
                    })
                    .collect(),
                seed: self
                    .seed
                    .wrapping_add(*iteration as u64 * 1000)
                    .wrapping_add(*step as u64),
            },
            DecisionRequest::Review { baseline, candidate, .. } => {
                if Self::acceptable(baseline, candidate, self.tolerance) {
                    self.rejections = 0;
                    Decision::Accept
                } else if self.rejections < self.modify_limit {
                    self.rejections += 1;
                    Decision::Modify
                } else {
                    self.rejections = 0;
                    Decision::Escalate
                }
            }
            DecisionRequest::NextGlc { current, visited } => {
                let next = GLC_ROTATION
                    .iter()
                    .cycle()
                    .skip_while(|g| *g != current)
                    .skip(1)
                    .take(GLC_ROTATION.len())
                    .find(|g| !visited.contains(g));
                match next {
                    Some(&glc) => Decision::Continue { glc },
                    None => Decision::Finish,
                }
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u8,
    pub glc: GlcKind,
    pub action: String,
    /// Dataset version this step produced or operated on.
    pub version: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvalReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VersionInfo {
    pub version: usize,
    pub parent: Option<usize>,
    pub fingerprint: u64,
    pub cases: usize,
    pub synthetic: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Finished,
    IterationBound,
    Stopped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub records: Vec<StepRecord>,
    pub versions: Vec<VersionInfo>,
    /// Version holding the accepted dataset at the end of the run.
    pub final_version: usize,
    pub baseline: Option<EvalReport>,
    pub termination: Termination,
}

/// Permitted step-to-step moves.
pub fn transition_allowed(from: u8, to: u8) -> bool {
    matches!(
        (from, to),
        (1, 2) | (2, 3) | (3, 4) | (4, 5) | (5, 6) | (6, 7) | (7, 8) | (8, 6) | (8, 9) | (8, 11) | (9, 10) | (10, 7) | (11, 1)
    )
}

impl SessionLog {
    /// Checks the step sequence against the transition graph.
    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.records.first() else {
            return Ok(());
        };
        if first.step != 1 {
            return Err(Error::config("a session starts at step 1"));
        }
        for w in self.records.windows(2) {
            if !transition_allowed(w[0].step, w[1].step) {
                return Err(Error::config(format!(
                    "step {} cannot follow step {}",
                    w[1].step, w[0].step
                )));
            }
        }
        let last = self.records.last().map(|r| r.step).unwrap_or(1);
        if self.termination != Termination::Stopped && !matches!(last, 8 | 11) {
            return Err(Error::config(format!("a finished session cannot end at step {last}")));
        }
        Ok(())
    }

    /// GLCs in the order their Step 1 ran.
    pub fn glc_sequence(&self) -> Vec<GlcKind> {
        self.records.iter().filter(|r| r.step == 1).map(|r| r.glc).collect()
    }

    pub fn evaluations(&self) -> impl Iterator<Item = &EvalReport> {
        self.records.iter().filter_map(|r| r.evaluation.as_ref())
    }

    pub fn transcript(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(out, "step {:>2} [{}] v{}: {}", r.step, r.glc, r.version, r.action);
            if let Some(e) = &r.evaluation {
                for row in &e.rows {
                    let _ = writeln!(
                        out,
                        "           {:<5} cv {:.3}  exp {:.3}",
                        row.model, row.cv_mean_acc, row.exp_mean_acc
                    );
                }
            }
        }
        let _ = writeln!(
            out,
            "terminated: {:?}; final version v{}",
            self.termination, self.final_version
        );
        out
    }
}

pub struct PipelineOutcome {
    pub log: SessionLog,
    pub dataset: NormalizedDataset,
}

struct Run<'a> {
    config: &'a PipelineConfig,
    exploration: NormalizedDataset,
    records: Vec<StepRecord>,
    versions: Vec<VersionInfo>,
    current: NormalizedDataset,
    current_version: usize,
    glc: GlcKind,
}

impl Run<'_> {
    fn record(&mut self, step: u8, action: String, version: usize) {
        self.records.push(StepRecord {
            step,
            glc: self.glc,
            action,
            version,
            decision: None,
            evaluation: None,
        });
    }

    fn decided(&mut self, decision: Decision) {
        if let Some(r) = self.records.last_mut() {
            r.decision = Some(decision);
        }
    }

    fn new_version(&mut self, dataset: &NormalizedDataset, parent: usize) -> usize {
        let version = self.versions.len();
        self.versions.push(VersionInfo {
            version,
            parent: Some(parent),
            fingerprint: dataset.fingerprint(),
            cases: dataset.len(),
            synthetic: dataset.synthetic_count(),
        });
        version
    }

    fn evaluate(&self, train: &NormalizedDataset) -> Result<EvalReport> {
        monte_carlo_cv(&self.config.eval, train, &self.exploration, &self.config.classifiers, None)
    }

    fn generation_request(&self, step: u8, iteration: usize, report: &PurityReport) -> DecisionRequest {
        DecisionRequest::Generate {
            step,
            glc: self.glc,
            iteration,
            classes: self.current.class_palette.clone(),
            lp_cases: report.lp_case_ids.len(),
        }
    }
}

fn generate_all(
    dataset: &NormalizedDataset,
    strategies: &[SdgStrategy],
    seed: u64,
) -> Result<Vec<(Vec<f64>, String)>> {
    let mut out = Vec::new();
    for (i, s) in strategies.iter().enumerate() {
        let batch = generate(dataset, s, seed.wrapping_add(i as u64))?;
        out.extend(batch.cases.into_iter().map(|c| (c.values, c.label)));
    }
    Ok(out)
}

/// Per-coordinate [min, max] over the least-pure cases.
fn lp_box(dataset: &NormalizedDataset, lp: &[CaseId]) -> Option<Vec<(f64, f64)>> {
    let cases: Vec<&[f64]> = lp
        .iter()
        .filter_map(|id| dataset.case(*id))
        .map(|c| c.values.as_slice())
        .collect();
    if cases.is_empty() {
        return None;
    }
    Some(
        (0..dataset.n_attributes())
            .map(|a| {
                cases
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[a]), hi.max(v[a])))
            })
            .collect(),
    )
}

pub fn run_sdg_adl(
    dataset: &NormalizedDataset,
    policy: &mut dyn Policy,
    config: &PipelineConfig,
) -> Result<PipelineOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("pipeline needs a non-empty dataset".into()));
    }

    let mut run = Run {
        config,
        exploration: dataset.real_only(),
        records: Vec::new(),
        versions: vec![VersionInfo {
            version: 0,
            parent: None,
            fingerprint: dataset.fingerprint(),
            cases: dataset.len(),
            synthetic: dataset.synthetic_count(),
        }],
        current: dataset.clone(),
        current_version: 0,
        glc: config.glc,
    };
    let baseline = run.evaluate(dataset)?;
    let mut iterations = 0;
    let mut visited = Vec::new();

    let termination = 'session: loop {
        // Step 1
        visited.push(run.glc);
        let mut lc = LayoutConfig::new(run.glc, run.current.n_attributes());
        if run.glc == GlcKind::Spc && lc.n_attributes() < 2 {
            lc.kind = GlcKind::Pc;
        }
        let view = layout(&run.current, &lc)?;
        let v = run.current_version;
        run.record(1, format!("visualize {} glyphs in {}", view.glyphs.len(), view.kind), v);

        // Steps 2-5
        let report = rank_regions_by_purity(&run.current, config.min_support)?;
        let pure = report.pure_regions().count();
        run.record(2, format!("{pure} most-pure regions (min support {})", config.min_support), v);
        run.record(3, format!("{} least-pure cases", report.lp_case_ids.len()), v);
        run.record(4, format!("{} regions ordered by purity", report.regions.len()), v);
        let visible = apply_visibility(&run.current, &report, Visibility::HidePure)?;
        run.record(5, format!("hide pure areas; {} cases remain visible", visible.len()), v);

        let mut step = 6u8;
        loop {
            // Step 6 or 9: produce a candidate.
            let request = run.generation_request(step, iterations, &report);
            let decision = policy.decide(&request)?;
            let Decision::Generate { strategies, seed } = &decision else {
                if decision == Decision::Stop {
                    break 'session Termination::Stopped;
                }
                return Err(Error::Policy(format!("step {step} expects a generate decision, got {decision:?}")));
            };
            let generated = generate_all(&run.current, strategies, *seed)?;
            let total = generated.len();
            let kept: Vec<(Vec<f64>, String)> = if step == 6 {
                let vectors: Vec<Vec<f64>> = generated.iter().map(|g| g.0.clone()).collect();
                auto_label(&report, &vectors)
                    .into_iter()
                    .zip(vectors)
                    .filter_map(|(label, v)| label.map(|l| (v, l)))
                    .collect()
            } else {
                // Outside the least-pure box, keeping the prototype's class.
                let bounds = lp_box(&run.current, &report.lp_case_ids);
                generated
                    .into_iter()
                    .filter(|(v, _)| {
                        bounds.as_ref().is_none_or(|b| {
                            v.iter().zip(b).any(|(x, (lo, hi))| x < lo || x > hi)
                        })
                    })
                    .collect()
            };
            let n_kept = kept.len();
            let candidate = run.current.append_synthetic(kept)?;
            let cv = run.new_version(&candidate, run.current_version);
            let what = if step == 6 {
                "auto-labeled in pure areas"
            } else {
                "kept outside the least-pure box"
            };
            run.record(step, format!("generated {total}, {n_kept} {what}"), cv);
            run.decided(decision.clone());
            if step == 9 {
                run.record(10, "repeat from step 7".into(), cv);
            }

            // Step 7
            let evaluation = run.evaluate(&candidate)?;
            iterations += 1;
            run.record(7, format!("evaluation {iterations} of at most {}", config.max_iterations), cv);
            if let Some(r) = run.records.last_mut() {
                r.evaluation = Some(evaluation.clone());
            }

            // Step 8
            let review = DecisionRequest::Review {
                glc: run.glc,
                iteration: iterations,
                baseline: baseline.clone(),
                candidate: evaluation,
            };
            let decision = policy.decide(&review)?;
            let action = match decision {
                Decision::Accept => format!("accept v{cv}"),
                Decision::Modify => "modify step 6".to_string(),
                Decision::Escalate => "assign outside the least-pure area".to_string(),
                Decision::Stop => "stop".to_string(),
                ref other => {
                    return Err(Error::Policy(format!("step 8 expects accept/modify/escalate, got {other:?}")));
                }
            };
            run.record(8, action, cv);
            run.decided(decision.clone());
            match decision {
                Decision::Accept => {
                    run.current = candidate;
                    run.current_version = cv;
                    break;
                }
                Decision::Stop => break 'session Termination::Stopped,
                _ if iterations >= config.max_iterations => break 'session Termination::IterationBound,
                Decision::Modify => step = 6,
                _ => step = 9,
            }
        }

        if iterations >= config.max_iterations {
            break Termination::IterationBound;
        }

        // Step 11
        let request = DecisionRequest::NextGlc {
            current: run.glc,
            visited: visited.clone(),
        };
        let decision = policy.decide(&request)?;
        match decision {
            Decision::Continue { glc } => {
                run.record(11, format!("switch to {glc}"), run.current_version);
                run.decided(decision);
                run.glc = glc;
            }
            Decision::Finish => {
                run.record(11, "finish".into(), run.current_version);
                run.decided(decision);
                break Termination::Finished;
            }
            Decision::Stop => break Termination::Stopped,
            other => {
                return Err(Error::Policy(format!("step 11 expects continue/finish, got {other:?}")));
            }
        }
    };

    let log = SessionLog {
        records: run.records,
        versions: run.versions,
        final_version: run.current_version,
        baseline: Some(baseline),
        termination,
    };
    log.validate()?;
    Ok(PipelineOutcome { log, dataset: run.current })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_dataset, normalize_dataset, Format};

    fn data() -> NormalizedDataset {
        let mut text = String::from("x,y,class\n");
        for i in 0..8 {
            let d = i as f64 * 0.01;
            text.push_str(&format!("{},{},a\n", d, 0.1 + d));
            text.push_str(&format!("{},{},b\n", 0.9 - d, 1.0 - d));
        }
        normalize_dataset(&load_dataset(text.as_bytes(), Format::Csv).unwrap())
    }

    fn config() -> PipelineConfig {
        let mut c = PipelineConfig::new(EvalConfig::new(2, 2, 0));
        c.classifiers = vec![ClassifierKind::Lda, ClassifierKind::KNN];
        c.min_support = 2;
        c
    }

    struct Rejecting;

    impl Policy for Rejecting {
        fn decide(&mut self, request: &DecisionRequest) -> Result<Decision> {
            Ok(match request {
                DecisionRequest::Generate { .. } => Decision::Generate {
                    strategies: vec![SdgStrategy::Unbounded { count: 3 }],
                    seed: 1,
                },
                DecisionRequest::Review { .. } => Decision::Modify,
                DecisionRequest::NextGlc { .. } => Decision::Finish,
            })
        }
    }

    #[test]
    fn always_rejecting_hits_the_bound() {
        let d = data();
        let mut cfg = config();
        cfg.max_iterations = 3;
        let out = run_sdg_adl(&d, &mut Rejecting, &cfg).unwrap();
        assert_eq!(out.log.termination, Termination::IterationBound);
        assert_eq!(out.dataset, d);
        assert_eq!(out.log.final_version, 0);
        assert_eq!(out.log.evaluations().count(), 3);
        assert_eq!(out.log.records.last().unwrap().step, 8);
    }

    #[test]
    fn automatic_policy_rotates_glcs() {
        let d = data();
        let out = run_sdg_adl(&d, &mut AutomaticPolicy::new(2, 5), &config()).unwrap();
        assert_eq!(out.log.termination, Termination::Finished);
        assert_eq!(out.log.glc_sequence(), GLC_ROTATION.to_vec());
        assert!(out.dataset.synthetic_count() > 0);
        assert!(out.log.transcript().contains("terminated: Finished"));
    }

    #[test]
    fn admissible_decisions() {
        let next = DecisionRequest::NextGlc {
            current: GlcKind::Pc,
            visited: vec![GlcKind::Pc],
        };
        assert!(next.admits(&Decision::Finish));
        assert!(next.admits(&Decision::Stop));
        assert!(!next.admits(&Decision::Accept));
        let generate = DecisionRequest::Generate {
            step: 6,
            glc: GlcKind::Pc,
            iteration: 0,
            classes: vec![],
            lp_cases: 0,
        };
        assert!(!generate.admits(&Decision::Continue { glc: GlcKind::Scc }));
    }

    #[test]
    fn transitions() {
        assert!(transition_allowed(8, 6));
        assert!(transition_allowed(10, 7));
        assert!(!transition_allowed(7, 9));
        assert!(!transition_allowed(11, 2));
        let mut log = SessionLog {
            records: vec![],
            versions: vec![],
            final_version: 0,
            baseline: None,
            termination: Termination::Finished,
        };
        for step in [1, 2, 3, 4, 5, 6, 7, 9] {
            log.records.push(StepRecord {
                step,
                glc: GlcKind::Pc,
                action: String::new(),
                version: 0,
                decision: None,
                evaluation: None,
            });
        }
        assert!(log.validate().is_err());
    }

    #[test]
    fn wrong_decision_is_a_policy_error() {
        struct Bad;
        impl Policy for Bad {
            fn decide(&mut self, _: &DecisionRequest) -> Result<Decision> {
                Ok(Decision::Accept)
            }
        }
        let err = run_sdg_adl(&data(), &mut Bad, &config()).err().unwrap();
        assert!(matches!(err, Error::Policy(_)));
        assert!(!err.is_validation());
    }
}
