use std::sync::mpsc;
use std::sync::{Arc, Mutex, OnceLock};

use glc_api::{JobId, JobResult, JobState, JobStatus, SessionId};
use glc_core::pipeline::{AutomaticPolicy, Decision, DecisionRequest, Policy};
use glc_core::Error;

use crate::error::{ApiError, ApiResult};

/// A submitted job. Status is updated in place until the job finishes;
/// from then on the serialized status is frozen.
pub struct Job {
    status: Mutex<JobStatus>,
    frozen: OnceLock<Vec<u8>>,
    decisions: Mutex<Option<mpsc::Sender<Decision>>>,
}

impl Job {
    pub fn new(id: JobId, session: SessionId) -> Arc<Job> {
        Arc::new(Job {
            status: Mutex::new(JobStatus {
                id,
                session,
                state: JobState::Queued,
                progress: 0.0,
                awaiting: None,
                result: None,
                error: None,
            }),
            frozen: OnceLock::new(),
            decisions: Mutex::new(None),
        })
    }

    pub fn status(&self) -> JobStatus {
        self.status.lock().expect("job lock").clone()
    }

    /// The status document, byte-identical across calls once finished.
    pub fn status_json(&self) -> Vec<u8> {
        if let Some(bytes) = self.frozen.get() {
            return bytes.clone();
        }
        serde_json::to_vec(&self.status()).expect("status serializes")
    }

    pub fn set_running(&self) {
        let mut s = self.status.lock().expect("job lock");
        if s.state == JobState::Queued {
            s.state = JobState::Running;
        }
    }

    pub fn set_progress(&self, fraction: f64) {
        let mut s = self.status.lock().expect("job lock");
        if !s.state.is_finished() {
            s.progress = fraction.clamp(0.0, 1.0).max(s.progress);
        }
    }

    pub fn finish(&self, outcome: Result<JobResult, String>) {
        let mut s = self.status.lock().expect("job lock");
        if s.state.is_finished() {
            return;
        }
        s.awaiting = None;
        match outcome {
            Ok(result) => {
                s.state = JobState::Done;
                s.progress = 1.0;
                s.result = Some(result);
            }
            Err(message) => {
                s.state = JobState::Failed;
                s.error = Some(message);
            }
        }
        let _ = self.frozen.set(serde_json::to_vec(&*s).expect("status serializes"));
        self.decisions.lock().expect("job lock").take();
    }

    /// A policy that parks the job until [`Job::decide`] supplies an answer.
    pub fn interactive_policy(self: &Arc<Self>, max_iterations: usize) -> InteractivePolicy {
        let (tx, rx) = mpsc::channel();
        *self.decisions.lock().expect("job lock") = Some(tx);
        InteractivePolicy {
            job: self.clone(),
            rx,
            max_iterations,
        }
    }

    /// Hands `decision` to a waiting interactive pipeline.
    pub fn decide(&self, decision: Decision) -> ApiResult<()> {
        let mut s = self.status.lock().expect("job lock");
        let Some(request) = s.awaiting.take() else {
            return Err(ApiError::conflict("job is not waiting for a decision"));
        };
        if !request.admits(&decision) {
            s.awaiting = Some(request);
            return Err(ApiError::validation(format!("decision {decision:?} does not answer this request")));
        }
        let sent = self
            .decisions
            .lock()
            .expect("job lock")
            .as_ref()
            .is_some_and(|tx| tx.send(decision).is_ok());
        if sent {
            Ok(())
        } else {
            Err(ApiError::conflict("job no longer accepts decisions"))
        }
    }

    fn await_decision(&self, request: &DecisionRequest) {
        self.status.lock().expect("job lock").awaiting = Some(request.clone());
    }
}

pub struct InteractivePolicy {
    job: Arc<Job>,
    rx: mpsc::Receiver<Decision>,
    max_iterations: usize,
}

impl Policy for InteractivePolicy {
    fn decide(&mut self, request: &DecisionRequest) -> glc_core::Result<Decision> {
        track(&self.job, request, self.max_iterations);
        self.job.await_decision(request);
        self.rx
            .recv()
            .map_err(|_| Error::Policy("decision channel closed".into()))
    }
}

/// Wraps the automatic policy to report progress.
pub struct TrackedPolicy {
    pub job: Arc<Job>,
    pub inner: AutomaticPolicy,
    pub max_iterations: usize,
}

impl Policy for TrackedPolicy {
    fn decide(&mut self, request: &DecisionRequest) -> glc_core::Result<Decision> {
        track(&self.job, request, self.max_iterations);
        self.inner.decide(request)
    }
}

/// Progress counts finished evaluations against the iteration bound.
fn track(job: &Job, request: &DecisionRequest, max_iterations: usize) {
    if let DecisionRequest::Review { iteration, .. } = request {
        job.set_progress(*iteration as f64 / max_iterations as f64);
    }
}
