// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Local HTTP protocol for interactive front ends. Each session owns one
//! board and its tree; sessions share nothing but the registry that finds
//! them. See `docs/serve-protocol.md` for request and response bodies.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::engine::{
    run_tree_cancellable, sample_runs, Board, Element, EngineError, MultiverseTree, TreeConfig,
};
use crate::entanglement::{blink_sample_seeded, entanglement_report};
use crate::io::{detection_csv, fixtures, parse_setup, IoError, SetupDocument};
use crate::photon::{ket_components, ComplexFormat, FormattedComplex, PolarizationBasis};

/// Request header echoed back so clients can drop stale responses.
pub const SEQUENCE_HEADER: &str = "x-request-seq";

/// Largest `n` accepted by the sampling endpoints.
pub const MAX_SAMPLE_RUNS: u64 = 1_000_000;

struct Session {
    doc: SetupDocument,
    board: Board,
    tree: Option<MultiverseTree>,
}

struct Slot {
    session: tokio::sync::Mutex<Session>,
    /// Set to stop the expansion running in this session.
    cancel: Arc<AtomicBool>,
}

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<u64, Arc<Slot>>>>,
    next_id: Arc<AtomicU64>,
}

impl AppState {
    fn slot(&self, id: u64) -> Result<Arc<Slot>, ApiError> {
        self.sessions
            .lock()
            .expect("registry lock")
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session {id}")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
    fn not_found(m: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, m)
    }
    fn invalid(m: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, m)
    }
    fn bad_request(m: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, m)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<IoError> for ApiError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::UnknownFixture(_) => ApiError::not_found(e.to_string()),
            IoError::Engine(EngineError::Cancelled) => {
                ApiError::new(StatusCode::CONFLICT, "expansion cancelled")
            }
            IoError::Engine(ref inner) if !is_board_error(inner) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
            }
            _ => ApiError::invalid(e.to_string()),
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        IoError::Engine(e).into()
    }
}

fn is_board_error(e: &EngineError) -> bool {
    matches!(
        e,
        EngineError::InvalidBoard(_) | EngineError::InvalidElement { .. } | EngineError::NoSource
    )
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

type ApiResult<T> = Result<T, ApiError>;

/// The protocol router.
pub fn router() -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/fixtures", get(list_fixtures))
        .route("/validate", post(validate))
        .route("/sessions", post(create_session))
        .route("/sessions/{sid}", get(get_session).delete(delete_session))
        .route("/sessions/{sid}/setup", put(replace_setup))
        .route("/sessions/{sid}/elements", post(add_element))
        .route(
            "/sessions/{sid}/elements/{eid}",
            put(edit_element).delete(remove_element),
        )
        .route("/sessions/{sid}/operators/{eid}", get(operator_view))
        .route("/sessions/{sid}/tree", post(expand).get(get_tree))
        .route("/sessions/{sid}/cancel", post(cancel))
        .route("/sessions/{sid}/nodes/{node}", get(node_state))
        .route(
            "/sessions/{sid}/nodes/{node}/entanglement",
            get(node_entanglement),
        )
        .route("/sessions/{sid}/nodes/{node}/blink", get(node_blink))
        .route("/sessions/{sid}/sample", post(sample))
        .route("/sessions/{sid}/csv", get(csv_export))
        .layer(middleware::from_fn(echo_sequence))
        .with_state(AppState::default())
}

/// Serve until the process is interrupted.
pub async fn serve(host: &str, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    axum::serve(listener, router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn echo_sequence(req: Request, next: Next) -> Response {
    let seq = req.headers().get(SEQUENCE_HEADER).cloned();
    let mut resp = next.run(req).await;
    if let Some(v) = seq {
        resp.headers_mut().insert(SEQUENCE_HEADER, v);
    }
    resp
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

async fn list_fixtures() -> Json<Value> {
    let list: Vec<Value> = fixtures::library()
        .into_iter()
        .map(|d| json!({ "name": d.name, "description": d.description }))
        .collect();
    Json(Value::Array(list))
}

fn parse_body(body: &Bytes) -> ApiResult<SetupDocument> {
    let text = std::str::from_utf8(body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(parse_setup(text)?)
}

fn board_summary(doc: &SetupDocument, board: &Board) -> Value {
    json!({
        "name": doc.name,
        "elements": board.elements().len(),
        "wires": board.wires().len(),
        "photons": board.photon_count(),
        "detectors": board.detector_ids(),
    })
}

async fn validate(body: Bytes) -> Response {
    let checked = parse_body(&body).and_then(|doc| {
        let board = doc.to_board()?;
        Ok(board_summary(&doc, &board))
    });
    match checked {
        Ok(summary) => Json(json!({ "valid": true, "board": summary })).into_response(),
        Err(e) => (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(json!({ "valid": false, "error": e.message })),
        )
            .into_response(),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    fixture: Option<String>,
    setup: Option<Value>,
}

async fn create_session(
    State(st): State<AppState>,
    Json(req): Json<CreateSession>,
) -> ApiResult<Response> {
    let doc = match (req.fixture, req.setup) {
        (Some(name), None) => fixtures::fixture(&name)?,
        (None, Some(v)) => parse_setup(&v.to_string())?,
        _ => {
            return Err(ApiError::bad_request(
                "give exactly one of `fixture` or `setup`",
            ))
        }
    };
    let board = doc.to_board()?;
    let id = st.next_id.fetch_add(1, Ordering::Relaxed) + 1;
    let body = json!({ "session": id, "board": board_summary(&doc, &board), "setup": doc });
    let slot = Slot {
        session: tokio::sync::Mutex::new(Session {
            doc,
            board,
            tree: None,
        }),
        cancel: Arc::new(AtomicBool::new(false)),
    };
    st.sessions
        .lock()
        .expect("registry lock")
        .insert(id, Arc::new(slot));
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_session(State(st): State<AppState>, Path(sid): Path<u64>) -> ApiResult<Json<Value>> {
    let slot = st.slot(sid)?;
    let s = slot.session.lock().await;
    Ok(Json(json!({
        "session": sid,
        "board": board_summary(&s.doc, &s.board),
        "setup": s.doc,
        "tree": s.tree.as_ref().map(|t| tree_summary(&s.board, t)),
    })))
}

async fn delete_session(State(st): State<AppState>, Path(sid): Path<u64>) -> ApiResult<StatusCode> {
    let slot = st
        .sessions
        .lock()
        .expect("registry lock")
        .remove(&sid)
        .ok_or_else(|| ApiError::not_found(format!("no session {sid}")))?;
    slot.cancel.store(true, Ordering::Relaxed);
    Ok(StatusCode::NO_CONTENT)
}

/// Validate `doc` and commit it to the session only if it builds.
fn commit(s: &mut Session, doc: SetupDocument) -> ApiResult<Json<Value>> {
    let board = doc.to_board()?;
    let summary = board_summary(&doc, &board);
    s.doc = doc;
    s.board = board;
    s.tree = None;
    Ok(Json(json!({ "board": summary, "setup": s.doc })))
}

async fn replace_setup(
    State(st): State<AppState>,
    Path(sid): Path<u64>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let doc = parse_body(&body)?;
    let slot = st.slot(sid)?;
    let mut s = slot.session.lock().await;
    commit(&mut s, doc)
}

async fn add_element(
    State(st): State<AppState>,
    Path(sid): Path<u64>,
    Json(element): Json<Element>,
) -> ApiResult<Json<Value>> {
    let slot = st.slot(sid)?;
    let mut s = slot.session.lock().await;
    let mut doc = s.doc.clone();
    doc.elements.push(element);
    commit(&mut s, doc)
}

async fn edit_element(
    State(st): State<AppState>,
    Path((sid, eid)): Path<(u64, String)>,
    Json(element): Json<Element>,
) -> ApiResult<Json<Value>> {
    let slot = st.slot(sid)?;
    let mut s = slot.session.lock().await;
    let mut doc = s.doc.clone();
    let i = doc
        .elements
        .iter()
        .position(|e| e.id == eid)
        .ok_or_else(|| ApiError::not_found(format!("no element `{eid}`")))?;
    if element.id != eid {
        for w in &mut doc.wires {
            if w.from == eid {
                w.from = element.id.clone();
            }
            if w.to == eid {
                w.to = element.id.clone();
            }
        }
    }
    doc.elements[i] = element;
    commit(&mut s, doc)
}

async fn remove_element(
    State(st): State<AppState>,
    Path((sid, eid)): Path<(u64, String)>,
) -> ApiResult<Json<Value>> {
    let slot = st.slot(sid)?;
    let mut s = slot.session.lock().await;
    let mut doc = s.doc.clone();
    let before = doc.elements.len();
    doc.elements.retain(|e| e.id != eid);
    if doc.elements.len() == before {
        return Err(ApiError::not_found(format!("no element `{eid}`")));
    }
    doc.wires.retain(|w| w.from != eid && w.to != eid);
    doc.goals.retain(|g| g.detector != eid);
    commit(&mut s, doc)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ViewQuery {
    basis: Option<String>,
    format: Option<String>,
    control: Option<bool>,
    seed: Option<u64>,
}

impl ViewQuery {
    fn basis(&self) -> ApiResult<PolarizationBasis> {
        self.basis
            .as_deref()
            .map_or(Ok(PolarizationBasis::HV), str::parse)
            .map_err(ApiError::bad_request)
    }
    fn format(&self) -> ApiResult<ComplexFormat> {
        self.format
            .as_deref()
            .map_or(Ok(ComplexFormat::Cartesian), str::parse)
            .map_err(ApiError::bad_request)
    }
}

#[derive(Serialize)]
struct MatrixEntry {
    out: Vec<String>,
    #[serde(rename = "in")]
    input: Vec<String>,
    re: f64,
    im: f64,
    value: FormattedComplex,
}

async fn operator_view(
    State(st): State<AppState>,
    Path((sid, eid)): Path<(u64, String)>,
    Query(q): Query<ViewQuery>,
) -> ApiResult<Json<Value>> {
    let format = q.format()?;
    let slot = st.slot(sid)?;
    let s = slot.session.lock().await;
    if s.board.element(&eid).is_none() {
        return Err(ApiError::not_found(format!("no element `{eid}`")));
    }
    let control = q.control.unwrap_or(false);
    let Some(op) = s.board.local_operator(&eid, control) else {
        return Ok(Json(
            json!({ "element": eid, "control": control, "operator": null }),
        ));
    };
    let label = |dims: &[crate::tensor::Dimension], c: &[usize]| -> Vec<String> {
        dims.iter()
            .zip(c)
            .map(|(d, &i)| d.label(i).to_string())
            .collect()
    };
    let entries: Vec<MatrixEntry> = op
        .iter()
        .map(|(o, i, z)| MatrixEntry {
            out: label(op.out_dims(), &o),
            input: label(op.in_dims(), &i),
            re: z.re,
            im: z.im,
            value: FormattedComplex::new(z, format),
        })
        .collect();
    let dims = |ds: &[crate::tensor::Dimension]| -> Vec<Value> {
        ds.iter()
            .map(|d| json!({ "name": d.name(), "labels": d.labels() }))
            .collect()
    };
    Ok(Json(json!({
        "element": eid,
        "control": control,
        "operator": {
            "out_dims": dims(op.out_dims()),
            "in_dims": dims(op.in_dims()),
            "entries": entries,
        }
    })))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ExpandRequest {
    max_steps: Option<usize>,
    min_branch_probability: Option<f64>,
    max_nodes: Option<usize>,
}

fn tree_summary(board: &Board, t: &MultiverseTree) -> Value {
    let detectors: BTreeMap<&str, f64> = board
        .detector_ids()
        .into_iter()
        .map(|id| (id, t.detector_probability(id)))
        .collect();
    let leaves: Vec<Value> = t
        .leaves()
        .map(|n| json!({ "id": n.id, "step": n.step, "probability": n.probability, "status": n.status }))
        .collect();
    json!({
        "nodes": t.nodes.len(),
        "explored_mass": t.explored_mass,
        "truncated_mass": t.truncated_mass,
        "budget_exhausted": t.budget_exhausted,
        "max_state_entries": t.max_state_entries,
        "detectors": detectors,
        "leaves": leaves,
    })
}

async fn expand(
    State(st): State<AppState>,
    Path(sid): Path<u64>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let req: ExpandRequest = if body.is_empty() {
        ExpandRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(e.to_string()))?
    };
    let d = TreeConfig::default();
    let config = TreeConfig {
        max_steps: req.max_steps.unwrap_or(d.max_steps),
        min_branch_probability: req
            .min_branch_probability
            .unwrap_or(d.min_branch_probability),
        max_nodes: req.max_nodes.unwrap_or(d.max_nodes),
    };
    let slot = st.slot(sid)?;
    let mut s = slot.session.lock().await;
    slot.cancel.store(false, Ordering::Relaxed);
    let board = s.board.clone();
    let flag = slot.cancel.clone();
    let tree = tokio::task::spawn_blocking(move || run_tree_cancellable(&board, config, &flag))
        .await
        .map_err(internal)??;
    let summary = tree_summary(&s.board, &tree);
    s.tree = Some(tree);
    Ok(Json(summary))
}

async fn cancel(State(st): State<AppState>, Path(sid): Path<u64>) -> ApiResult<Json<Value>> {
    let slot = st.slot(sid)?;
    slot.cancel.store(true, Ordering::Relaxed);
    Ok(Json(json!({ "cancelled": true })))
}

async fn get_tree(
    State(st): State<AppState>,
    Path(sid): Path<u64>,
    Query(q): Query<ViewQuery>,
) -> ApiResult<Response> {
    let basis = q.basis()?;
    let slot = st.slot(sid)?;
    let s = slot.session.lock().await;
    let t = s
        .tree
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "tree not expanded yet"))?;
    Ok((
        [(
            header::CONTENT_TYPE,
            HeaderValue::from_static("application/json"),
        )],
        t.to_json_string(basis),
    )
        .into_response())
}

fn node_of(s: &Session, node: usize) -> ApiResult<&crate::engine::SimulationNode> {
    let t = s
        .tree
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "tree not expanded yet"))?;
    t.node(node)
        .ok_or_else(|| ApiError::not_found(format!("no node {node}")))
}

async fn node_state(
    State(st): State<AppState>,
    Path((sid, node)): Path<(u64, usize)>,
    Query(q): Query<ViewQuery>,
) -> ApiResult<Json<Value>> {
    let (basis, format) = (q.basis()?, q.format()?);
    let slot = st.slot(sid)?;
    let s = slot.session.lock().await;
    let n = node_of(&s, node)?;
    let kets = ket_components(&n.state, basis, format).map_err(internal)?;
    Ok(Json(json!({
        "id": n.id,
        "parent": n.parent,
        "children": n.children,
        "step": n.step,
        "probability": n.probability,
        "status": n.status,
        "photons": n.photon_count(),
        "events": n.events,
        "classical": n.classical,
        "basis": basis,
        "kets": kets,
    })))
}

fn normalized_state(n: &crate::engine::SimulationNode) -> ApiResult<crate::tensor::SparseVector> {
    if n.state.particles().is_empty() {
        return Err(ApiError::invalid(format!("node {} holds no photons", n.id)));
    }
    n.state.normalized().map_err(internal)
}

async fn node_entanglement(
    State(st): State<AppState>,
    Path((sid, node)): Path<(u64, usize)>,
) -> ApiResult<Json<Value>> {
    let slot = st.slot(sid)?;
    let s = slot.session.lock().await;
    let state = normalized_state(node_of(&s, node)?)?;
    let report = entanglement_report(&state).map_err(internal)?;
    Ok(Json(serde_json::to_value(report).map_err(internal)?))
}

async fn node_blink(
    State(st): State<AppState>,
    Path((sid, node)): Path<(u64, usize)>,
    Query(q): Query<ViewQuery>,
) -> ApiResult<Json<Value>> {
    let (basis, format) = (q.basis()?, q.format()?);
    let seed = q.seed.unwrap_or(0);
    let slot = st.slot(sid)?;
    let s = slot.session.lock().await;
    let state = normalized_state(node_of(&s, node)?)?;
    let b = blink_sample_seeded(&state, seed).map_err(internal)?;
    let states = b
        .states
        .iter()
        .map(|v| ket_components(v, basis, format))
        .collect::<Result<Vec<_>, _>>()
        .map_err(internal)?;
    Ok(Json(json!({
        "seed": seed,
        "particles": b.particles,
        "weights": b.weights,
        "states": states,
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRequest {
    n: u64,
    #[serde(default)]
    seed: u64,
    max_steps: Option<usize>,
}

fn check_n(n: u64) -> ApiResult<()> {
    if n > MAX_SAMPLE_RUNS {
        return Err(ApiError::bad_request(format!(
            "n = {n} exceeds the limit of {MAX_SAMPLE_RUNS}"
        )));
    }
    Ok(())
}

async fn sample(
    State(st): State<AppState>,
    Path(sid): Path<u64>,
    Json(req): Json<SampleRequest>,
) -> ApiResult<Json<Value>> {
    check_n(req.n)?;
    let slot = st.slot(sid)?;
    let board = slot.session.lock().await.board.clone();
    let max_steps = req.max_steps.unwrap_or(TreeConfig::default().max_steps);
    let (n, seed) = (req.n, req.seed);
    let runs = tokio::task::spawn_blocking(move || {
        sample_runs(&board, seed, n, max_steps).map(|r| (board, r))
    })
    .await
    .map_err(internal)??;
    let (board, runs) = runs;
    let counts: BTreeMap<&str, u64> = board
        .detector_ids()
        .into_iter()
        .map(|id| {
            (
                id,
                runs.iter().filter(|r| r.classical.detector_bit(id)).count() as u64,
            )
        })
        .collect();
    Ok(Json(
        json!({ "runs": n, "seed": seed, "detections": counts }),
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CsvQuery {
    n: u64,
    #[serde(default)]
    seed: u64,
}

async fn csv_export(
    State(st): State<AppState>,
    Path(sid): Path<u64>,
    Query(q): Query<CsvQuery>,
) -> ApiResult<Response> {
    check_n(q.n)?;
    let slot = st.slot(sid)?;
    let board = slot.session.lock().await.board.clone();
    let max_steps = TreeConfig::default().max_steps;
    let text = tokio::task::spawn_blocking(move || -> Result<String, IoError> {
        let runs = sample_runs(&board, q.seed, q.n, max_steps)?;
        detection_csv(&board, &runs)
    })
    .await
    .map_err(internal)??;
    Ok((
        [(header::CONTENT_TYPE, HeaderValue::from_static("text/csv"))],
        text,
    )
        .into_response())
}
