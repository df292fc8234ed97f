//! HTTP service over the engine: query answering, event ingestion, triple
//! lookup, and health.
//!
//! Concurrency model: the live engine sits behind an atomic handle swap.
//! Queries clone the current handle and answer against that immutable
//! snapshot. Event batches serialize through a writer lock, apply to a
//! private clone, and swap the handle only when the whole batch succeeded,
//! so a query never observes a half-applied batch and a bad batch changes
//! nothing.

use std::sync::{Arc, RwLock};

use axum::body::Body;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{read_stream_jsonl, ApplySummary, DynamicsError, EventApplier};
use crate::engine::{Engine, EngineError, QueryResponse};
use crate::genclient::GenError;
use crate::retrieval::{QueryContext, RetrievalError};
use crate::store::{Node, SourceFamily, TripleId};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("binding {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serving: {0}")]
    Serve(#[from] std::io::Error),
}

/// Shared server state: the query-visible snapshot and the writer that
/// serializes event batches onto it.
#[derive(Clone)]
pub struct ServiceState {
    live: Arc<RwLock<Arc<Engine>>>,
    writer: Arc<tokio::sync::Mutex<EventApplier>>,
}

impl ServiceState {
    pub fn new(engine: Engine) -> Self {
        ServiceState {
            live: Arc::new(RwLock::new(Arc::new(engine))),
            writer: Arc::new(tokio::sync::Mutex::new(EventApplier::new())),
        }
    }

    /// The engine snapshot current requests answer against.
    pub fn snapshot(&self) -> Arc<Engine> {
        Arc::clone(&self.live.read().expect("engine lock"))
    }

    fn swap(&self, engine: Engine) {
        *self.live.write().expect("engine lock") = Arc::new(engine);
    }
}

#[derive(Debug, Deserialize)]
struct QueryRequest {
    text: String,
    #[serde(default)]
    context: Vec<String>,
}

#[derive(Debug, Serialize)]
struct HealthResponse {
    revision: u64,
    triple_count: usize,
}

/// Wire form of one stored triple, live or superseded.
#[derive(Debug, Serialize, Deserialize)]
struct TripleView {
    id: String,
    subject: String,
    relation: String,
    object: Node,
    predicted: bool,
    score: f64,
    doc_uri: String,
    paragraph: u32,
    source_family: SourceFamily,
    revision_date: chrono::DateTime<chrono::Utc>,
    valid_from: chrono::DateTime<chrono::Utc>,
    live: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    superseded_by: Option<String>,
}

/// An error response: status code plus a JSON body naming the stage.
#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, message: message.into() }
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::NOT_FOUND, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.message });
        (self.status, Json(body)).into_response()
    }
}

/// Status mapping for a failed query: backend trouble is 503, a rejected
/// question is 400, a backend answer that failed citation validation is 502.
fn engine_error(e: EngineError) -> ApiError {
    let status = match &e {
        EngineError::Generation(GenError::Transport(_) | GenError::BadStatus(_)) => {
            StatusCode::SERVICE_UNAVAILABLE
        }
        EngineError::Retrieval(RetrievalError::EmptyQuery | RetrievalError::ZeroK) => {
            StatusCode::BAD_REQUEST
        }
        EngineError::CitationIntegrity(_) => StatusCode::BAD_GATEWAY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    };
    ApiError { status, message: e.to_string() }
}

fn dynamics_error(e: DynamicsError) -> ApiError {
    match &e {
        DynamicsError::OutOfOrder { .. }
        | DynamicsError::Rejected { .. }
        | DynamicsError::ParseLine { .. }
        | DynamicsError::BadProbe(_)
        | DynamicsError::Store(_) => ApiError::bad_request(e.to_string()),
        DynamicsError::Engine(inner) => {
            ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, message: inner.to_string() }
        }
        DynamicsError::Io(_) => ApiError::internal(e.to_string()),
    }
}

async fn post_query(
    State(state): State<ServiceState>,
    body: String,
) -> Result<Json<QueryResponse>, ApiError> {
    let request: QueryRequest = serde_json::from_str(&body)
        .map_err(|e| ApiError::bad_request(format!("query request: {e}")))?;
    if request.text.trim().is_empty() {
        return Err(ApiError::bad_request("query request: text must be non-empty"));
    }
    let engine = state.snapshot();
    let response = tokio::task::spawn_blocking(move || {
        let mut ctx = QueryContext::empty();
        for entity in &request.context {
            ctx.note_entity(entity);
        }
        engine.respond(&request.text, &ctx)
    })
    .await
    .map_err(|e| ApiError::internal(format!("query task: {e}")))?
    .map_err(engine_error)?;
    Ok(Json(response))
}

async fn post_events(
    State(state): State<ServiceState>,
    body: String,
) -> Result<Json<Vec<ApplySummary>>, ApiError> {
    let events = read_stream_jsonl(&body)
        .map_err(|e| ApiError::bad_request(format!("event stream: {e}")))?;
    if events.is_empty() {
        return Ok(Json(Vec::new()));
    }

    // Writer lock held across the batch: batches serialize, queries do not.
    let mut writer = state.writer.lock().await;
    let snapshot = state.snapshot();
    let mut applier = writer.clone();
    let applied = tokio::task::spawn_blocking(move || {
        let mut working = (*snapshot).clone();
        let mut summaries = Vec::with_capacity(events.len());
        for event in &events {
            summaries.push(applier.apply(&mut working, event)?);
        }
        Ok::<_, DynamicsError>((working, applier, summaries))
    })
    .await
    .map_err(|e| ApiError::internal(format!("event task: {e}")))?;

    let (working, applier, summaries) = applied.map_err(dynamics_error)?;
    *writer = applier;
    state.swap(working);
    Ok(Json(summaries))
}

async fn get_triple(
    State(state): State<ServiceState>,
    Path(id): Path<String>,
) -> Result<Json<TripleView>, ApiError> {
    let triple_id = TripleId::from_hex(&id)
        .map_err(|_| ApiError::bad_request(format!("triple lookup: bad id {id:?}")))?;
    let engine = state.snapshot();
    let t = engine
        .kg()
        .get(triple_id)
        .ok_or_else(|| ApiError::not_found(format!("triple lookup: no triple {id}")))?;
    Ok(Json(TripleView {
        id: t.id.to_hex(),
        subject: t.subject.clone(),
        relation: t.relation.clone(),
        object: t.object.clone(),
        predicted: t.predicted,
        score: t.score,
        doc_uri: t.provenance.doc_uri.clone(),
        paragraph: t.provenance.paragraph,
        source_family: t.provenance.source_family,
        revision_date: t.provenance.revision_date,
        valid_from: t.valid_from,
        live: t.is_live(),
        superseded_by: t.superseded_by.map(|s| s.to_hex()),
    }))
}

async fn get_health(State(state): State<ServiceState>) -> Json<HealthResponse> {
    let engine = state.snapshot();
    Json(HealthResponse {
        revision: engine.revision(),
        triple_count: engine.kg().live_triples().count(),
    })
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such route")
}

/// The service routes over shared state. Exposed separately from [`serve`]
/// so tests can drive the router without a socket.
pub fn router(state: ServiceState) -> Router {
    Router::new()
        .route("/query", post(post_query))
        .route("/events", post(post_events))
        .route("/triples/:id", get(get_triple))
        .route("/health", get(get_health))
        .fallback(fallback)
        .with_state(state)
}

/// Bind and serve until the process is stopped.
pub async fn serve(engine: Engine, bind: &str) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| ServiceError::Bind { addr: bind.to_string(), source: e })?;
    let app = router(ServiceState::new(engine));
    axum::serve(listener, app).await?;
    Ok(())
}

/// Convenience for JSON POST bodies in tests and examples.
pub fn json_request(uri: &str, body: String) -> axum::http::Request<Body> {
    axum::http::Request::post(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body))
        .expect("request builds")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{demo_engine, generate_stream, stream_to_jsonl};
    use crate::dynamics::{EventKind, UpdateEvent};
    use crate::store::{compute_id, Literal};
    use http_body_util::BodyExt;
    use tower::ServiceExt;

    const FIG_QUERY: &str =
        "Which slice type should I configure for a service requiring under 50 ms latency?";

    fn app() -> Router {
        router(ServiceState::new(demo_engine().unwrap()))
    }

    async fn send(
        app: &Router,
        request: axum::http::Request<Body>,
    ) -> (StatusCode, serde_json::Value) {
        let response = app.clone().oneshot(request).await.unwrap();
        let status = response.status();
        let bytes = response.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            serde_json::Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap()
        };
        (status, value)
    }

    async fn get_json(app: &Router, uri: &str) -> (StatusCode, serde_json::Value) {
        let request = axum::http::Request::get(uri).body(Body::empty()).unwrap();
        send(app, request).await
    }

    fn query_body(text: &str) -> String {
        serde_json::json!({ "text": text }).to_string()
    }

    #[tokio::test]
    async fn health_reports_revision_and_live_count() {
        let app = app();
        let (status, body) = get_json(&app, "/health").await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["revision"], 32);
        assert_eq!(body["triple_count"], 32);
    }

    #[tokio::test]
    async fn query_endpoint_answers_with_citations_deterministically() {
        let app = app();
        let (status, first) = send(&app, json_request("/query", query_body(FIG_QUERY))).await;
        assert_eq!(status, StatusCode::OK);
        assert!(first["answer"]
            .as_str()
            .unwrap()
            .starts_with("Configure the slice as SST Type 2 (URLLC)."));
        assert!(!first["citations"].as_array().unwrap().is_empty());
        for c in first["citations"].as_array().unwrap() {
            assert!(!c["doc_uri"].as_str().unwrap().is_empty());
        }
        let (_, second) = send(&app, json_request("/query", query_body(FIG_QUERY))).await;
        assert_eq!(first, second);
    }

    #[tokio::test]
    async fn malformed_and_blank_queries_are_rejected() {
        let app = app();
        let (status, body) = send(&app, json_request("/query", "{not json".to_string())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        assert!(body["error"].as_str().unwrap().contains("query request"));
        let (status, _) = send(&app, json_request("/query", query_body("   "))).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
    }

    #[tokio::test]
    async fn triple_lookup_round_trips_and_distinguishes_bad_ids() {
        let app = app();
        let id = compute_id("SST_2", "suitable_for", &Node::entity("URLLC")).to_hex();
        let (status, body) = get_json(&app, &format!("/triples/{id}")).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["subject"], "SST_2");
        assert_eq!(body["relation"], "suitable_for");
        assert_eq!(body["live"], true);
        assert!(!body["doc_uri"].as_str().unwrap().is_empty());

        let (status, _) = get_json(&app, "/triples/zz").await;
        assert_eq!(status, StatusCode::BAD_REQUEST);

        let missing = compute_id("gNodeB-42", "serves", &Node::entity("Slice_99")).to_hex();
        let (status, _) = get_json(&app, &format!("/triples/{missing}")).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
    }

    #[tokio::test]
    async fn event_batch_advances_the_snapshot_atomically() {
        let app = app();
        let batch = stream_to_jsonl(&generate_stream(2));
        let (status, summaries) = send(&app, json_request("/events", batch)).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(summaries.as_array().unwrap().len(), 2);

        let (_, health) = get_json(&app, "/health").await;
        assert_eq!(health["revision"], 34, "two effective changes past the demo store's 32");
        assert_eq!(health["triple_count"], 32, "supersessions keep the live count");

        let question = query_body("What was the last change recorded on gNodeB-43?");
        let (status, body) = send(&app, json_request("/query", question)).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(
            body["answer"],
            "The latest change on gNodeB-43 was a spectrum reassignment to band n78 at 03:15 UTC."
        );
    }

    #[tokio::test]
    async fn failing_batch_changes_nothing() {
        let app = app();
        let good = generate_stream(1).remove(0);
        let bad = UpdateEvent {
            event_id: "evt-bad".to_string(),
            timestamp: good.timestamp + chrono::Duration::seconds(5),
            target: "UPF-X".to_string(),
            kind: EventKind::TiltAdjust { degrees: 3 },
        };
        let batch = format!(
            "{}\n{}\n",
            serde_json::to_string(&good).unwrap(),
            serde_json::to_string(&bad).unwrap()
        );
        let (status, body) = send(&app, json_request("/events", batch)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "type-conflicting event rejects the batch");
        assert!(body["error"].as_str().unwrap().contains("evt-bad"));

        let (_, health) = get_json(&app, "/health").await;
        assert_eq!(health["revision"], 32, "failed batch left no partial state");

        let n77 = compute_id(
            "gNodeB-43",
            "last_change",
            &Node::Literal(Literal::Text(
                "spectrum reassign to n77 at 2025-07-15T02:00:00Z".to_string(),
            )),
        )
        .to_hex();
        let (_, view) = get_json(&app, &format!("/triples/{n77}")).await;
        assert_eq!(view["live"], true, "seed change record still live");
    }

    #[tokio::test]
    async fn out_of_order_batches_are_refused_across_requests() {
        let app = app();
        let events = generate_stream(2);
        let second = serde_json::to_string(&events[1]).unwrap();
        let first = serde_json::to_string(&events[0]).unwrap();

        let (status, _) = send(&app, json_request("/events", format!("{second}\n"))).await;
        assert_eq!(status, StatusCode::OK);
        let (status, body) = send(&app, json_request("/events", format!("{first}\n"))).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        assert!(body["error"].as_str().unwrap().contains("arrives before already-applied"));
    }

    #[tokio::test]
    async fn unknown_routes_are_404() {
        let app = app();
        let (status, _) = get_json(&app, "/nope").await;
        assert_eq!(status, StatusCode::NOT_FOUND);
    }
}
