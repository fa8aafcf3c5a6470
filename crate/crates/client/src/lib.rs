//! Thin async client for the histwidget service.

use histwidget_core::actions::OverrideRecipe;
use histwidget_core::api::{
    CreateWidget, DecisionRequest, ErrorBody, GraphSummary, ReplayRequest, ReplayResponse, RestoreRequest,
    WidgetCreated,
};
use histwidget_core::graph::SchemaGraph;
use histwidget_core::protocol::Envelope;
use histwidget_core::state::{ActionRecord, DataState, ExportDocument, StateId};
use histwidget_core::widget::{ActionDispatch, HistoryRow};
use reqwest::{Method, RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const DEFAULT_SERVER: &str = "http://127.0.0.1:7878";

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    /// The service could not be reached or the connection failed.
    #[error("cannot reach the service: {0}")]
    Transport(#[from] reqwest::Error),
    /// The service answered with an error.
    #[error("{code}: {message}")]
    Api {
        status: StatusCode,
        code: String,
        message: String,
    },
}

impl ClientError {
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { code, .. } => Some(code),
            ClientError::Transport(_) => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            base: base.into().trim_end_matches('/').to_owned(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http.request(method, format!("{}{path}", self.base))
    }

    async fn send<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T> {
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        Err(api_error(status, resp.text().await?))
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        self.send(self.request(Method::POST, path).json(body)).await
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        self.send(self.request(Method::GET, path)).await
    }

    async fn post_text<T: DeserializeOwned>(&self, path: &str, text: String) -> Result<T> {
        let req = self
            .request(Method::POST, path)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(text);
        self.send(req).await
    }

    pub async fn health(&self) -> Result<serde_json::Value> {
        self.get("/health").await
    }

    /// Validates a graph document given as text.
    pub async fn validate_graph(&self, graph_json: impl Into<String>) -> Result<GraphSummary> {
        self.post_text("/graphs/validate", graph_json.into()).await
    }

    pub async fn schema(&self, graph_json: impl Into<String>) -> Result<SchemaGraph> {
        self.post_text("/graphs/schema", graph_json.into()).await
    }

    pub async fn replay(&self, req: &ReplayRequest) -> Result<ReplayResponse> {
        self.post("/replay", req).await
    }

    pub async fn create_widget(&self, req: &CreateWidget) -> Result<WidgetHandle> {
        let created: WidgetCreated = self.post("/widgets", req).await?;
        Ok(WidgetHandle {
            client: self.clone(),
            created,
        })
    }

    pub async fn widget_ids(&self) -> Result<Vec<String>> {
        self.get("/widgets").await
    }

    /// Handle for a widget created elsewhere.
    pub fn widget(&self, created: WidgetCreated) -> WidgetHandle {
        WidgetHandle {
            client: self.clone(),
            created,
        }
    }
}

/// A live widget on the service.
#[derive(Debug, Clone)]
pub struct WidgetHandle {
    client: Client,
    created: WidgetCreated,
}

impl WidgetHandle {
    pub fn id(&self) -> &str {
        &self.created.widget_id
    }

    pub fn created(&self) -> &WidgetCreated {
        &self.created
    }

    fn path(&self, rest: &str) -> String {
        format!("/widgets/{}{rest}", self.created.widget_id)
    }

    pub async fn dispatch(&self, d: &ActionDispatch) -> Result<DataState> {
        self.client.post(&self.path("/actions"), d).await
    }

    pub async fn restore(&self, state_id: StateId) -> Result<DataState> {
        self.client
            .post(&self.path("/restore"), &RestoreRequest { state_id })
            .await
    }

    pub async fn set_decision(&self, candidate_id: &str, decision: &str) -> Result<DataState> {
        let body = DecisionRequest {
            candidate_id: candidate_id.to_owned(),
            decision: decision.to_owned(),
        };
        self.client.post(&self.path("/decisions"), &body).await
    }

    pub async fn set_override(&self, action: &str, recipe: &OverrideRecipe) -> Result<DataState> {
        let req = self
            .client
            .request(Method::PUT, &self.path(&format!("/overrides/{action}")))
            .json(recipe);
        self.client.send(req).await
    }

    pub async fn clear_override(&self, action: &str) -> Result<DataState> {
        let req = self
            .client
            .request(Method::DELETE, &self.path(&format!("/overrides/{action}")));
        self.client.send(req).await
    }

    pub async fn current(&self) -> Result<DataState> {
        self.client.get(&self.path("")).await
    }

    pub async fn state(&self, state_id: StateId) -> Result<DataState> {
        self.client.get(&self.path(&format!("/states/{}", state_id.0))).await
    }

    pub async fn history(&self) -> Result<Vec<ActionRecord>> {
        self.client.get(&self.path("/history")).await
    }

    pub async fn history_view(&self) -> Result<Vec<HistoryRow>> {
        self.client.get(&self.path("/history/view")).await
    }

    pub async fn export(&self, state_id: Option<StateId>) -> Result<ExportDocument> {
        let query = state_id.map(|s| format!("?state_id={}", s.0)).unwrap_or_default();
        self.client.get(&self.path(&format!("/export{query}"))).await
    }

    /// Sends one protocol frame and returns the replies.
    pub async fn comm(&self, envelope: &Envelope) -> Result<Vec<Envelope>> {
        self.client.post(&self.path("/comm"), envelope).await
    }

    pub async fn delete(self) -> Result<()> {
        let resp = self.client.request(Method::DELETE, &self.path("")).send().await?;
        let status = resp.status();
        if status.is_success() {
            Ok(())
        } else {
            Err(api_error(status, resp.text().await?))
        }
    }
}

fn api_error(status: StatusCode, text: String) -> ClientError {
    match serde_json::from_str::<ErrorBody>(&text) {
        Ok(body) => ClientError::Api {
            status,
            code: body.error.code,
            message: body.error.message,
        },
        // framework rejections (bad JSON body and the like) are plain text
        Err(_) => ClientError::Api {
            status,
            code: "bad_request".to_owned(),
            message: text,
        },
    }
}
