use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use histwidget_core::actions::OverrideRecipe;
use histwidget_core::api::{
    CreateWidget, DecisionRequest, GraphSummary, ReplayRequest, ReplayResponse, RestoreRequest, WidgetCreated,
};
use histwidget_core::demo::alignment::{self, AlignmentOptions};
use histwidget_core::demo::explorer::{self, ExplorerOptions};
use histwidget_core::graph::{PropertyGraph, SchemaGraph};
use histwidget_core::protocol::{unknown_widget, Envelope, Session};
use histwidget_core::replay::{build_widget, replay_log, WidgetKind};
use histwidget_core::state::{ActionId, ActionRecord, DataState, ExportDocument, StateId};
use histwidget_core::widget::{ActionDispatch, HistoryRow, Widget};
use histwidget_core::Error;
use serde::Deserialize;
use serde_json::json;

use crate::error::{ApiError, ApiResult};
use crate::AppState;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/graphs/validate", post(validate_graph))
        .route("/graphs/schema", post(graph_schema))
        .route("/replay", post(replay))
        .route("/widgets", get(list_widgets).post(create_widget))
        .route("/widgets/{id}", get(current_state).delete(delete_widget))
        .route("/widgets/{id}/comm", post(comm))
        .route("/widgets/{id}/actions", post(dispatch))
        .route("/widgets/{id}/restore", post(restore))
        .route("/widgets/{id}/decisions", post(decide))
        .route(
            "/widgets/{id}/overrides/{name}",
            put(set_override).delete(clear_override),
        )
        .route("/widgets/{id}/states/{state_id}", get(state_by_id))
        .route("/widgets/{id}/history", get(history))
        .route("/widgets/{id}/history/view", get(history_view))
        .route("/widgets/{id}/export", get(export))
        .with_state(state)
}

fn parse_graph(text: &str) -> ApiResult<PropertyGraph> {
    Ok(PropertyGraph::from_json_str(text)?)
}

async fn validate_graph(body: String) -> ApiResult<Json<GraphSummary>> {
    let g = parse_graph(&body)?;
    Ok(Json(GraphSummary {
        nodes: g.nodes().len(),
        edges: g.edges().len(),
        node_types: g.node_types().count(),
    }))
}

async fn graph_schema(body: String) -> ApiResult<Json<SchemaGraph>> {
    Ok(Json(parse_graph(&body)?.compute_schema()))
}

async fn list_widgets(State(app): State<AppState>) -> Json<Vec<String>> {
    Json(app.widget_ids())
}

fn new_widget(req: CreateWidget) -> ApiResult<Widget> {
    let graph = Arc::new(PropertyGraph::from_document(req.graph)?);
    let widget_id = req
        .widget_id
        .unwrap_or_else(|| format!("{}-{}", req.widget_type, uuid::Uuid::new_v4().simple()));
    let overrides = req
        .init_overrides
        .into_iter()
        .map(|(name, recipe)| (name, recipe.into_user_function()))
        .collect();
    let widget = match req.widget_type {
        WidgetKind::Explorer => explorer::make_explorer_with(
            graph,
            ExplorerOptions {
                widget_id,
                initial_node_type: req.initial_node_type,
            },
            overrides,
        )?,
        WidgetKind::Alignment => {
            let candidates = req
                .candidates
                .ok_or_else(|| Error::Contract("the alignment widget needs candidates".into()))?;
            let candidates = alignment::candidates_from_json_str(&candidates.to_string())?;
            let defaults = AlignmentOptions::default();
            let options = AlignmentOptions {
                widget_id,
                hops: req.hops.unwrap_or(defaults.hops),
                direction: req.direction.unwrap_or(defaults.direction),
            };
            alignment::make_alignment_widget_with(graph, candidates, options, overrides)?
        }
    };
    Ok(widget)
}

async fn create_widget(
    State(app): State<AppState>,
    Json(req): Json<CreateWidget>,
) -> ApiResult<(StatusCode, Json<WidgetCreated>)> {
    let widget = new_widget(req)?;
    let created = WidgetCreated {
        widget_id: widget.widget_id().to_owned(),
        state_id: widget.current_state_id(),
        render_spec: widget.render_spec(),
    };
    app.insert(Session::new(widget))?;
    tracing::info!(widget_id = %created.widget_id, "widget created");
    Ok((StatusCode::CREATED, Json(created)))
}

async fn delete_widget(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    app.remove(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

/// One inbound protocol frame in, the reply frames out. Protocol-level
/// failures come back as `error` envelopes; only an undecodable frame is an
/// HTTP error.
async fn comm(State(app): State<AppState>, Path(id): Path<String>, frame: Bytes) -> ApiResult<Json<Vec<Envelope>>> {
    let envelope: Envelope =
        serde_json::from_slice(&frame).map_err(|e| Error::Protocol(format!("malformed frame: {e}")))?;
    let Ok(session) = app.session(&id) else {
        return Ok(Json(vec![unknown_widget(&envelope)]));
    };
    let replies = session.lock().await.handle_inbound(&envelope);
    Ok(Json(replies))
}

async fn with_widget<T>(
    app: &AppState,
    id: &str,
    f: impl FnOnce(&mut Widget) -> Result<T, Error>,
) -> ApiResult<Json<T>> {
    let session = app.session(id)?;
    let mut guard = session.lock().await;
    Ok(Json(f(guard.widget_mut())?))
}

async fn dispatch(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(d): Json<ActionDispatch>,
) -> ApiResult<Json<DataState>> {
    with_widget(&app, &id, |w| w.handle_action(&d)).await
}

async fn restore(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<RestoreRequest>,
) -> ApiResult<Json<DataState>> {
    with_widget(&app, &id, |w| w.restore(req.state_id)).await
}

async fn decide(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<DecisionRequest>,
) -> ApiResult<Json<DataState>> {
    with_widget(&app, &id, |w| {
        alignment::set_decision(w, &req.candidate_id, &req.decision)
    })
    .await
}

async fn set_override(
    State(app): State<AppState>,
    Path((id, name)): Path<(String, String)>,
    Json(recipe): Json<OverrideRecipe>,
) -> ApiResult<Json<DataState>> {
    with_widget(&app, &id, |w| w.set_override(&name, recipe.into_user_function())).await
}

async fn clear_override(
    State(app): State<AppState>,
    Path((id, name)): Path<(String, String)>,
) -> ApiResult<Json<DataState>> {
    with_widget(&app, &id, |w| w.clear_override(&name)).await
}

async fn current_state(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<DataState>> {
    with_widget(&app, &id, |w| w.get_state(w.current_state_id())).await
}

async fn state_by_id(
    State(app): State<AppState>,
    Path((id, state_id)): Path<(String, u64)>,
) -> ApiResult<Json<DataState>> {
    with_widget(&app, &id, |w| w.get_state(StateId(state_id))).await
}

#[derive(Deserialize)]
struct HistoryRange {
    from: Option<u64>,
    to: Option<u64>,
}

async fn history(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(range): Query<HistoryRange>,
) -> ApiResult<Json<Vec<ActionRecord>>> {
    with_widget(&app, &id, |w| {
        let range = match (range.from, range.to) {
            (None, None) => None,
            (from, to) => Some((ActionId(from.unwrap_or(0)), ActionId(to.unwrap_or(u64::MAX)))),
        };
        w.history_list(range)
    })
    .await
}

async fn history_view(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<HistoryRow>>> {
    with_widget(&app, &id, |w| Ok(w.history_view_model())).await
}

#[derive(Deserialize)]
struct ExportQuery {
    state_id: Option<u64>,
}

async fn export(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Json<ExportDocument>> {
    with_widget(&app, &id, |w| w.export_data(q.state_id.map(StateId))).await
}

fn run_replay(req: ReplayRequest) -> Result<ReplayResponse, Error> {
    let graph = Arc::new(PropertyGraph::from_json_str(&req.graph)?);
    let candidates = req
        .candidates
        .as_deref()
        .map(alignment::candidates_from_json_str)
        .transpose()?;
    let kind = req.widget_type;
    let (widget, report) = replay_log(
        |overrides| build_widget(kind, kind.as_str(), graph, candidates, overrides),
        &req.log,
    )?;
    Ok(ReplayResponse {
        report,
        export: widget.export_data(None)?,
    })
}

async fn replay(Json(req): Json<ReplayRequest>) -> ApiResult<Json<ReplayResponse>> {
    let outcome = tokio::task::spawn_blocking(move || run_replay(req))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "backend", e.to_string()))?;
    Ok(Json(outcome?))
}
