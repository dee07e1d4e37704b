//! Async client for the GLC workbench service.

use std::time::Duration;

use reqwest::multipart::{Form, Part};
use reqwest::{Method, RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;

use glc_api::{
    ActivateRequest, DecisionBody, EditRequest, ErrorBody, ExportQuery, JobSpec, JobStatus, LayoutQuery,
    PurityQuery, PurityResponse, RulesQuery, RulesResponse, SdgRequest, SdgResponse, SessionInfo, VersionQuery,
};
use glc_core::layout::{GeometryFormat, Layout};
use glc_core::pipeline::Decision;
use glc_core::{GlcKind, LayoutConfig, NormalizedDataset};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server answered {status}: {}", body.message)]
    Api { status: StatusCode, body: ErrorBody },
}

impl ClientError {
    /// True for 4xx answers: the request itself was at fault.
    pub fn is_client_error(&self) -> bool {
        matches!(self, ClientError::Api { status, .. } if status.is_client_error())
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Clone, Debug)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Client {
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http.request(method, format!("{}{path}", self.base))
    }

    async fn send(&self, req: RequestBuilder) -> Result<reqwest::Response> {
        let res = req.send().await?;
        let status = res.status();
        if status.is_success() {
            return Ok(res);
        }
        let text = res.text().await?;
        let body = serde_json::from_str(&text).unwrap_or(ErrorBody {
            kind: if status.is_client_error() {
                glc_api::ErrorKind::Validation
            } else {
                glc_api::ErrorKind::Internal
            },
            message: text,
            current_version: None,
        });
        Err(ClientError::Api { status, body })
    }

    async fn json<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T> {
        Ok(self.send(req).await?.json().await?)
    }

    async fn text(&self, req: RequestBuilder) -> Result<String> {
        Ok(self.send(req).await?.text().await?)
    }

    fn post<B: Serialize>(&self, path: &str, body: &B) -> RequestBuilder {
        self.request(Method::POST, path).json(body)
    }

    pub async fn health(&self) -> Result<()> {
        self.send(self.request(Method::GET, "/health")).await.map(drop)
    }

    /// Uploads a CSV table as a new session.
    pub async fn create_session(&self, csv: Vec<u8>, file_name: &str, name: Option<&str>) -> Result<SessionInfo> {
        let mut form = Form::new().part("file", Part::bytes(csv).file_name(file_name.to_string()));
        if let Some(name) = name {
            form = form.text("name", name.to_string());
        }
        self.json(self.request(Method::POST, "/sessions").multipart(form)).await
    }

    pub async fn session(&self, id: &str) -> Result<SessionInfo> {
        self.json(self.request(Method::GET, &format!("/sessions/{id}"))).await
    }

    pub async fn dataset(&self, id: &str, version: Option<usize>) -> Result<NormalizedDataset> {
        let req = self.request(Method::GET, &format!("/sessions/{id}/dataset"));
        self.json(req.query(&VersionQuery { version })).await
    }

    pub async fn layout(&self, id: &str, query: &LayoutQuery) -> Result<Layout> {
        let query = LayoutQuery {
            format: Some(GeometryFormat::GeometryJson),
            ..query.clone()
        };
        self.json(self.request(Method::GET, &format!("/sessions/{id}/layout")).query(&query))
            .await
    }

    pub async fn layout_svg(&self, id: &str, query: &LayoutQuery) -> Result<String> {
        let query = LayoutQuery {
            format: Some(GeometryFormat::Svg),
            ..query.clone()
        };
        self.text(self.request(Method::GET, &format!("/sessions/{id}/layout")).query(&query))
            .await
    }

    pub async fn set_layout_config(&self, id: &str, kind: GlcKind, config: &LayoutConfig) -> Result<LayoutConfig> {
        let req = self.request(Method::PUT, &format!("/sessions/{id}/layouts/{kind}"));
        self.json(req.json(config)).await
    }

    pub async fn purity(&self, id: &str, query: &PurityQuery) -> Result<PurityResponse> {
        self.json(self.request(Method::GET, &format!("/sessions/{id}/purity")).query(query))
            .await
    }

    pub async fn rules(&self, id: &str, query: &RulesQuery) -> Result<RulesResponse> {
        self.json(self.request(Method::GET, &format!("/sessions/{id}/rules")).query(query))
            .await
    }

    pub async fn edit(&self, id: &str, edit: &EditRequest) -> Result<SessionInfo> {
        self.json(self.post(&format!("/sessions/{id}/edits"), edit)).await
    }

    pub async fn activate(&self, id: &str, request: &ActivateRequest) -> Result<SessionInfo> {
        self.json(self.post(&format!("/sessions/{id}/activate"), request)).await
    }

    pub async fn sdg(&self, id: &str, request: &SdgRequest) -> Result<SdgResponse> {
        self.json(self.post(&format!("/sessions/{id}/sdg"), request)).await
    }

    /// The CSV text of a version.
    pub async fn export(&self, id: &str, query: &ExportQuery) -> Result<String> {
        self.text(self.request(Method::GET, &format!("/sessions/{id}/export")).query(query))
            .await
    }

    pub async fn submit_job(&self, spec: &JobSpec) -> Result<JobStatus> {
        self.json(self.post("/jobs", spec)).await
    }

    pub async fn job(&self, id: &str) -> Result<JobStatus> {
        self.json(self.request(Method::GET, &format!("/jobs/{id}"))).await
    }

    pub async fn decide(&self, id: &str, decision: Decision) -> Result<JobStatus> {
        self.json(self.post(&format!("/jobs/{id}/decision"), &DecisionBody { decision }))
            .await
    }

    /// Polls until the job finishes or asks for a decision.
    pub async fn wait_for_job(&self, id: &str, poll: Duration) -> Result<JobStatus> {
        loop {
            let status = self.job(id).await?;
            if status.state.is_finished() || status.awaiting.is_some() {
                return Ok(status);
            }
            tokio::time::sleep(poll).await;
        }
    }
}
