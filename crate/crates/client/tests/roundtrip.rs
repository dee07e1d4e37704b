use std::time::Duration;

use reqwest::StatusCode;

use glc_api::{
    ActivateRequest, EditRequest, ErrorKind, ExportQuery, JobResult, JobSpec, JobState, LayoutQuery, PolicySpec,
    PurityQuery, RulesQuery, SdgRequest,
};
use glc_client::{Client, ClientError};
use glc_core::eval::{ClassifierKind, EvalConfig};
use glc_core::pipeline::{Decision, DecisionRequest, PipelineConfig, Termination};
use glc_core::sdg::SdgStrategy;
use glc_core::{CaseId, EditCommand, GlcKind};
use glc_service::{spawn_local, ServiceConfig};

const IRIS: &[u8] = include_bytes!("../../core/data/iris.csv");
const POLL: Duration = Duration::from_millis(20);

async fn client() -> Client {
    let addr = spawn_local(&ServiceConfig::default()).await.unwrap();
    Client::new(format!("http://{addr}/"))
}

async fn iris(client: &Client) -> String {
    client.create_session(IRIS.to_vec(), "iris.csv", None).await.unwrap().id
}

#[tokio::test]
async fn session_views() {
    let client = client().await;
    client.health().await.unwrap();
    let id = iris(&client).await;
    let info = client.session(&id).await.unwrap();
    assert_eq!(info.name, "iris.csv");
    assert_eq!(info.cases, 150);

    let query = LayoutQuery {
        kind: Some(GlcKind::Spc),
        ..LayoutQuery::default()
    };
    let layout = client.layout(&id, &query).await.unwrap();
    assert_eq!(layout.kind, GlcKind::Spc);
    assert_eq!(layout.glyphs.len(), 150);
    assert!(client.layout_svg(&id, &query).await.unwrap().contains("<svg "));

    let mut config = layout.config.clone();
    config.attribute_order = vec![1, 0, 3, 2];
    client.set_layout_config(&id, GlcKind::Spc, &config).await.unwrap();
    assert_eq!(client.layout(&id, &query).await.unwrap().config, config);

    let purity = client
        .purity(
            &id,
            &PurityQuery {
                version: None,
                min_support: Some(3),
                hide_pure: true,
            },
        )
        .await
        .unwrap();
    assert_eq!(purity.visible, purity.report.lp_case_ids);

    let rules = client.rules(&id, &RulesQuery::default()).await.unwrap();
    assert_eq!(rules.confusion.classes.len(), 3);

    let ds = client.dataset(&id, Some(0)).await.unwrap();
    assert_eq!(ds.len(), 150);
    let csv = client.export(&id, &ExportQuery::default()).await.unwrap();
    assert_eq!(csv.lines().count(), 151);
}

#[tokio::test]
async fn edits_conflicts_and_undo() {
    let client = client().await;
    let id = iris(&client).await;
    let delete = EditRequest {
        expected_version: 0,
        command: EditCommand::Delete {
            case_ids: (0..30).map(CaseId).collect(),
        },
    };
    assert_eq!(client.edit(&id, &delete).await.unwrap().cases, 120);

    let err = client.edit(&id, &delete).await.unwrap_err();
    assert!(err.is_client_error());
    match err {
        ClientError::Api { status, body } => {
            assert_eq!(status, StatusCode::CONFLICT);
            assert_eq!(body.kind, ErrorKind::Conflict);
            assert_eq!(body.current_version, Some(1));
        }
        other => panic!("{other}"),
    }

    let undo = client
        .activate(
            &id,
            &ActivateRequest {
                expected_version: 1,
                version: 0,
            },
        )
        .await
        .unwrap();
    assert_eq!((undo.version, undo.cases), (2, 150));

    let missing = client.session("missing").await.unwrap_err();
    assert!(matches!(missing, ClientError::Api { status: StatusCode::NOT_FOUND, .. }));
}

#[tokio::test]
async fn sdg_commit() {
    let client = client().await;
    let id = iris(&client).await;
    let res = client
        .sdg(
            &id,
            &SdgRequest {
                strategy: SdgStrategy::Unbounded { count: 12 },
                seed: 3,
                commit: true,
                expected_version: Some(0),
                quality_k: None,
            },
        )
        .await
        .unwrap();
    assert_eq!(res.batch.cases.len(), 12);
    let session = res.session.unwrap();
    assert_eq!((session.version, session.cases), (1, 162));
}

#[tokio::test]
async fn eval_job_and_separate_exploration() {
    let client = client().await;
    let train = iris(&client).await;
    let explore = iris(&client).await;
    let spec = |exploration_session| JobSpec::Eval {
        session: train.clone(),
        version: None,
        exploration_version: None,
        exploration_session,
        config: EvalConfig::new(2, 5, 9),
        classifiers: vec![ClassifierKind::Lda],
    };
    let mut reports = Vec::new();
    for exploration in [None, Some(explore.clone())] {
        let job = client.submit_job(&spec(exploration)).await.unwrap();
        let done = client.wait_for_job(&job.id, POLL).await.unwrap();
        assert_eq!(done.state, JobState::Done, "{:?}", done.error);
        let Some(JobResult::Eval { report }) = done.result else {
            panic!("not an eval result");
        };
        reports.push(report);
    }
    assert_eq!(reports[0].rows, reports[1].rows);

    let bad = JobSpec::Eval {
        session: train,
        version: None,
        exploration_version: None,
        exploration_session: Some("missing".into()),
        config: EvalConfig::new(2, 5, 9),
        classifiers: vec![ClassifierKind::Lda],
    };
    assert!(client.submit_job(&bad).await.unwrap_err().is_client_error());
}

#[tokio::test]
async fn interactive_pipeline_decisions() {
    let client = client().await;
    let id = iris(&client).await;
    let mut config = PipelineConfig::new(EvalConfig::new(2, 5, 1));
    config.max_iterations = 1;
    config.classifiers = vec![ClassifierKind::Lda];
    let job = client
        .submit_job(&JobSpec::Pipeline {
            session: id,
            version: None,
            config,
            policy: PolicySpec::Interactive,
        })
        .await
        .unwrap();
    let paused = client.wait_for_job(&job.id, POLL).await.unwrap();
    let Some(DecisionRequest::Generate { classes, .. }) = paused.awaiting else {
        panic!("expected a generation request, got {paused:?}");
    };
    let strategies = classes
        .iter()
        .map(|c| SdgStrategy::InBoundsUniform {
            class: c.clone(),
            count: 3,
        })
        .collect();
    client
        .decide(&job.id, Decision::Generate { strategies, seed: 5 })
        .await
        .unwrap();

    let review = loop {
        let s = client.wait_for_job(&job.id, POLL).await.unwrap();
        if matches!(s.awaiting, Some(DecisionRequest::Review { .. })) || s.state.is_finished() {
            break s;
        }
        tokio::time::sleep(POLL).await;
    };
    assert!(matches!(review.awaiting, Some(DecisionRequest::Review { .. })), "{review:?}");
    client.decide(&job.id, Decision::Accept).await.unwrap();

    let done = loop {
        let s = client.wait_for_job(&job.id, POLL).await.unwrap();
        match &s.awaiting {
            Some(DecisionRequest::NextGlc { .. }) => {
                client.decide(&job.id, Decision::Finish).await.unwrap();
            }
            Some(other) => panic!("unexpected request {other:?}"),
            None if s.state.is_finished() => break s,
            None => {}
        }
        tokio::time::sleep(POLL).await;
    };
    assert_eq!(done.state, JobState::Done, "{:?}", done.error);
    let Some(JobResult::Pipeline { log, .. }) = done.result else {
        panic!("not a pipeline result");
    };
    assert!(matches!(log.termination, Termination::Finished | Termination::IterationBound));
    assert!(log.versions.last().unwrap().synthetic > 0);
}
