use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, FromRequest, FromRequestParts, Multipart, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use tokio::sync::Mutex;
use uuid::Uuid;

use glc_api::{
    ActivateRequest, DecisionBody, EditRequest, ExportQuery, JobResult, JobSpec, LayoutQuery, PolicySpec,
    PurityQuery, PurityResponse, RulesQuery, RulesResponse, SdgRequest, SdgResponse, SessionInfo, VersionQuery,
};
use glc_core::data::{load_dataset, normalize_dataset, Format};
use glc_core::eval::{monte_carlo_cv, validate_eval};
use glc_core::layout::{export_geometry, layout, GeometryFormat};
use glc_core::pipeline::{run_sdg_adl, AutomaticPolicy, Policy};
use glc_core::purity::{apply_visibility, Visibility};
use glc_core::rules::{evaluate_ruleset, induce_interval_rules};
use glc_core::sdg::{generate, quality_metrics};
use glc_core::{EditCommand, GlcKind, LayoutConfig, NormalizedDataset};

use crate::error::{ApiError, ApiResult};
use crate::jobs::{Job, TrackedPolicy};
use crate::session::Session;
use crate::AppState;

const DEFAULT_MIN_SUPPORT: usize = 3;

#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
struct Body<T>(T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
struct Query<T>(T);

pub fn router(state: AppState) -> Router {
    let limit = state.max_upload;
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/dataset", get(get_dataset))
        .route("/sessions/{id}/layout", get(get_layout))
        .route("/sessions/{id}/layouts/{kind}", put(put_layout_config))
        .route("/sessions/{id}/purity", get(get_purity))
        .route("/sessions/{id}/rules", get(get_rules))
        .route("/sessions/{id}/edits", post(post_edit))
        .route("/sessions/{id}/activate", post(post_activate))
        .route("/sessions/{id}/sdg", post(post_sdg))
        .route("/sessions/{id}/export", get(get_export))
        .route("/jobs", post(post_job))
        .route("/jobs/{id}", get(get_job))
        .route("/jobs/{id}/decision", post(post_decision))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

fn lookup(state: &AppState, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
    state
        .sessions
        .read()
        .expect("session map")
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("no session {id}")))
}

fn find_job(state: &AppState, id: &str) -> ApiResult<Arc<Job>> {
    state
        .jobs
        .read()
        .expect("job map")
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("no job {id}")))
}

fn save(state: &AppState, session: &Session) -> ApiResult<()> {
    if let Some(store) = &state.store {
        store.save(session)?;
    }
    Ok(())
}

/// Appends a version and persists it; the append is undone if saving fails.
fn commit(
    state: &AppState,
    session: &mut Session,
    dataset: NormalizedDataset,
    parent: usize,
    action: String,
) -> ApiResult<usize> {
    let v = session.push(dataset, parent, action);
    if let Err(e) = save(state, session) {
        session.versions.pop();
        return Err(e);
    }
    Ok(v)
}

async fn create_session(
    State(state): State<AppState>,
    mut multipart: Multipart,
) -> ApiResult<(StatusCode, Json<SessionInfo>)> {
    let mut name = None;
    let mut upload = None;
    while let Some(field) = multipart.next_field().await? {
        if field.name() == Some("name") {
            name = Some(field.text().await?);
        } else if upload.is_none() {
            let file_name = field.file_name().map(str::to_owned);
            upload = Some((file_name, field.bytes().await?));
        }
    }
    let (file_name, bytes) = upload.ok_or_else(|| ApiError::validation("upload has no dataset part"))?;
    let dataset = normalize_dataset(&load_dataset(bytes.as_ref(), Format::Csv)?);

    let id = Uuid::new_v4().simple().to_string();
    let name = name.or(file_name).unwrap_or_else(|| "dataset".into());
    let session = Session::new(id.clone(), name, dataset);
    save(&state, &session)?;
    let info = session.info();
    tracing::info!(session = %id, cases = info.cases, "session created");
    state
        .sessions
        .write()
        .expect("session map")
        .insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(info)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionInfo>> {
    Ok(Json(lookup(&state, &id)?.lock().await.info()))
}

async fn get_dataset(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<VersionQuery>,
) -> ApiResult<Json<NormalizedDataset>> {
    let ds = lookup(&state, &id)?.lock().await.dataset(q.version)?;
    Ok(Json((*ds).clone()))
}

async fn get_layout(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<LayoutQuery>,
) -> ApiResult<Response> {
    let (ds, config) = {
        let s = lookup(&state, &id)?;
        let s = s.lock().await;
        let base = s.layout_config(q.kind.unwrap_or(GlcKind::Pc));
        (s.dataset(q.version)?, q.apply(base).map_err(ApiError::validation)?)
    };
    let geometry = layout(&ds, &config)?;
    let format = q.format.unwrap_or(GeometryFormat::GeometryJson);
    let content_type = match format {
        GeometryFormat::Svg => "image/svg+xml",
        GeometryFormat::GeometryJson => "application/json",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], export_geometry(&geometry, format)?).into_response())
}

async fn put_layout_config(
    State(state): State<AppState>,
    Path((id, kind)): Path<(String, String)>,
    Body(config): Body<LayoutConfig>,
) -> ApiResult<Json<LayoutConfig>> {
    let kind: GlcKind = kind.parse()?;
    if config.kind != kind {
        return Err(ApiError::validation(format!("config is for {}, not {kind}", config.kind)));
    }
    config.validate()?;
    let s = lookup(&state, &id)?;
    let mut s = s.lock().await;
    let n = s.dataset(None)?.n_attributes();
    if config.n_attributes() != n {
        return Err(ApiError::validation(format!(
            "config covers {} attributes, dataset has {n}",
            config.n_attributes()
        )));
    }
    let previous = s.layouts.insert(kind, config.clone());
    if let Err(e) = save(&state, &s) {
        match previous {
            Some(p) => s.layouts.insert(kind, p),
            None => s.layouts.remove(&kind),
        };
        return Err(e);
    }
    Ok(Json(config))
}

async fn get_purity(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<PurityQuery>,
) -> ApiResult<Json<PurityResponse>> {
    let s = lookup(&state, &id)?;
    let mut s = s.lock().await;
    let ds = s.dataset(q.version)?;
    let report = s.purity(q.version, q.min_support.unwrap_or(DEFAULT_MIN_SUPPORT))?;
    let mode = if q.hide_pure {
        Visibility::HidePure
    } else {
        Visibility::ShowAll
    };
    let visible = apply_visibility(&ds, &report, mode)?;
    Ok(Json(PurityResponse {
        report: (*report).clone(),
        visible,
    }))
}

async fn get_rules(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<RulesQuery>,
) -> ApiResult<Json<RulesResponse>> {
    let ds = lookup(&state, &id)?.lock().await.dataset(q.version)?;
    let rules = induce_interval_rules(
        &ds,
        q.min_purity.unwrap_or(1.0),
        q.min_support.unwrap_or(DEFAULT_MIN_SUPPORT),
    )?;
    let confusion = evaluate_ruleset(&rules, &ds)?;
    Ok(Json(RulesResponse {
        text: rules.to_text(),
        rules,
        confusion,
    }))
}

fn describe(command: &EditCommand) -> String {
    match command {
        EditCommand::Shift { case_ids, .. } => format!("shift {} cases", case_ids.len()),
        EditCommand::Clone { case_ids } => format!("clone {} cases", case_ids.len()),
        EditCommand::Delete { case_ids } => format!("delete {} cases", case_ids.len()),
        EditCommand::Relabel { case_ids, class } => format!("relabel {} cases as {class}", case_ids.len()),
    }
}

async fn post_edit(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Body(req): Body<EditRequest>,
) -> ApiResult<Json<SessionInfo>> {
    let s = lookup(&state, &id)?;
    let mut s = s.lock().await;
    s.check_expected(req.expected_version)?;
    let head = s.head();
    let next = s.dataset(None)?.edit(&req.command)?;
    commit(&state, &mut s, next, head, describe(&req.command))?;
    Ok(Json(s.info()))
}

async fn post_activate(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Body(req): Body<ActivateRequest>,
) -> ApiResult<Json<SessionInfo>> {
    let s = lookup(&state, &id)?;
    let mut s = s.lock().await;
    s.check_expected(req.expected_version)?;
    let old = s.dataset(Some(req.version))?;
    commit(&state, &mut s, (*old).clone(), req.version, format!("restore v{}", req.version))?;
    Ok(Json(s.info()))
}

async fn post_sdg(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Body(req): Body<SdgRequest>,
) -> ApiResult<Json<SdgResponse>> {
    let s = lookup(&state, &id)?;
    let mut s = s.lock().await;
    if req.commit {
        let expected = req
            .expected_version
            .ok_or_else(|| ApiError::validation("committing a batch needs expected_version"))?;
        s.check_expected(expected)?;
    }
    let ds = s.dataset(None)?;
    let batch = generate(&ds, &req.strategy, req.seed)?;
    let quality = req
        .quality_k
        .map(|k| quality_metrics(&ds.real_only(), &batch, k))
        .transpose()?;
    let session = if req.commit {
        let head = s.head();
        let next = batch.apply_to(&ds)?;
        let action = format!("generate {} {} (seed {})", batch.len(), req.strategy.name(), req.seed);
        commit(&state, &mut s, next, head, action)?;
        Some(s.info())
    } else {
        None
    };
    Ok(Json(SdgResponse {
        batch,
        quality,
        session,
    }))
}

async fn get_export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let (name, version, ds) = {
        let s = lookup(&state, &id)?;
        let s = s.lock().await;
        let v = q.version.unwrap_or(s.head());
        (s.name.clone(), v, s.dataset(Some(v))?)
    };
    let mut buf = Vec::new();
    if q.provenance {
        ds.write_csv_with_provenance(&mut buf, q.denormalize)?;
    } else {
        ds.write_csv(&mut buf, q.denormalize)?;
    }
    let stem = name.trim_end_matches(".csv").replace(['"', '/', '\\'], "_");
    let disposition = format!("attachment; filename=\"{stem}-v{version}.csv\"");
    Ok((
        [
            (header::CONTENT_TYPE, "text/csv".to_string()),
            (header::CONTENT_DISPOSITION, disposition),
        ],
        buf,
    )
        .into_response())
}

fn json_bytes(status: StatusCode, bytes: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

async fn post_job(State(state): State<AppState>, Body(spec): Body<JobSpec>) -> ApiResult<Response> {
    let (session_id, work): (String, Work) = match spec {
        JobSpec::Eval {
            session,
            version,
            exploration_version,
            exploration_session,
            config,
            classifiers,
        } => {
            let (train, exploration) = {
                let s = lookup(&state, &session)?;
                let s = s.lock().await;
                let train = s.dataset(version)?;
                let exploration = match &exploration_session {
                    Some(_) if exploration_version.is_some() => {
                        return Err(ApiError::validation(
                            "give exploration_version or exploration_session, not both",
                        ))
                    }
                    Some(_) => None,
                    None => Some(s.dataset(exploration_version.or(version))?.real_only()),
                };
                (train, exploration)
            };
            let exploration = match (exploration, exploration_session) {
                (Some(e), _) => e,
                (None, Some(other)) => {
                    let ds = lookup(&state, &other)?.lock().await.dataset(None)?;
                    ds.real_only().rescaled(&train.stats)?
                }
                (None, None) => unreachable!("exploration chosen above"),
            };
            validate_eval(&config, &train, &exploration, &classifiers)?;
            (
                session,
                Work::Eval {
                    train,
                    exploration,
                    config,
                    classifiers,
                },
            )
        }
        JobSpec::Pipeline {
            session,
            version,
            config,
            policy,
        } => {
            config.validate()?;
            if let PolicySpec::Automatic { per_class, tolerance, .. } = &policy {
                if *per_class < 1 {
                    return Err(ApiError::validation("per_class must be at least 1"));
                }
                if tolerance.is_some_and(|t| !(t.is_finite() && t >= 0.0)) {
                    return Err(ApiError::validation("tolerance must be a non-negative number"));
                }
            }
            let (base, base_version) = {
                let s = lookup(&state, &session)?;
                let s = s.lock().await;
                let v = version.unwrap_or(s.head());
                (s.dataset(Some(v))?, v)
            };
            if base.is_empty() {
                return Err(ApiError::validation("session version has no cases"));
            }
            (
                session,
                Work::Pipeline {
                    base,
                    base_version,
                    config,
                    policy,
                },
            )
        }
    };

    let id = Uuid::new_v4().simple().to_string();
    let job = Job::new(id.clone(), session_id.clone());
    state.jobs.write().expect("job map").insert(id.clone(), job.clone());
    let body = job.status_json();
    tokio::spawn(run_job(state, job, session_id, work));
    Ok(json_bytes(StatusCode::ACCEPTED, body))
}

enum Work {
    Eval {
        train: Arc<NormalizedDataset>,
        exploration: NormalizedDataset,
        config: glc_core::eval::EvalConfig,
        classifiers: Vec<glc_core::eval::ClassifierKind>,
    },
    Pipeline {
        base: Arc<NormalizedDataset>,
        base_version: usize,
        config: glc_core::pipeline::PipelineConfig,
        policy: PolicySpec,
    },
}

async fn run_job(state: AppState, job: Arc<Job>, session_id: String, work: Work) {
    let Ok(_permit) = state.workers.clone().acquire_owned().await else {
        job.finish(Err("worker pool closed".into()));
        return;
    };
    job.set_running();
    let id = job.status().id;
    tracing::info!(job = %id, "job started");
    let outcome = match work {
        Work::Eval {
            train,
            exploration,
            config,
            classifiers,
        } => {
            let j = job.clone();
            tokio::task::spawn_blocking(move || {
                let progress = |done: usize, total: usize| j.set_progress(done as f64 / total as f64);
                monte_carlo_cv(&config, &train, &exploration, &classifiers, Some(&progress))
                    .map(|report| JobResult::Eval { report })
                    .map_err(|e| e.to_string())
            })
            .await
            .unwrap_or_else(|e| Err(format!("job panicked: {e}")))
        }
        Work::Pipeline {
            base,
            base_version,
            config,
            policy,
        } => {
            let j = job.clone();
            let run = tokio::task::spawn_blocking(move || {
                let mut policy: Box<dyn Policy> = match policy {
                    PolicySpec::Automatic {
                        per_class,
                        seed,
                        tolerance,
                    } => {
                        let mut inner = AutomaticPolicy::new(per_class, seed);
                        if let Some(t) = tolerance {
                            inner.tolerance = t;
                        }
                        Box::new(TrackedPolicy {
                            job: j,
                            inner,
                            max_iterations: config.max_iterations,
                        })
                    }
                    PolicySpec::Interactive => Box::new(j.interactive_policy(config.max_iterations)),
                };
                run_sdg_adl(&base, policy.as_mut(), &config).map_err(|e| e.to_string())
            })
            .await
            .unwrap_or_else(|e| Err(format!("job panicked: {e}")));
            match run {
                Ok(outcome) => record_pipeline(&state, &session_id, &id, base_version, outcome).await,
                Err(e) => Err(e),
            }
        }
    };
    match &outcome {
        Ok(_) => tracing::info!(job = %id, "job done"),
        Err(e) => tracing::warn!(job = %id, error = %e, "job failed"),
    }
    job.finish(outcome);
}

async fn record_pipeline(
    state: &AppState,
    session_id: &str,
    job_id: &str,
    base_version: usize,
    outcome: glc_core::pipeline::PipelineOutcome,
) -> Result<JobResult, String> {
    let s = lookup(state, session_id).map_err(|e| e.body.message)?;
    let mut s = s.lock().await;
    let version = commit(
        state,
        &mut s,
        outcome.dataset,
        base_version,
        format!("pipeline job {job_id}"),
    )
    .map_err(|e| e.body.message)?;
    Ok(JobResult::Pipeline {
        log: outcome.log,
        version,
    })
}

async fn get_job(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(json_bytes(StatusCode::OK, find_job(&state, &id)?.status_json()))
}

async fn post_decision(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Body(body): Body<DecisionBody>,
) -> ApiResult<Response> {
    let job = find_job(&state, &id)?;
    job.decide(body.decision)?;
    Ok(json_bytes(StatusCode::OK, job.status_json()))
}
