//! HTTP/JSON service hosting live widgets.
//!
//! Each widget lives in a [`Session`] behind its own async mutex, which is the
//! widget's single mutation queue: requests for one widget are applied one at
//! a time in arrival order, while different widgets proceed independently.

mod error;
mod routes;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use histwidget_core::protocol::Session;
use tokio::sync::Mutex;

pub use error::{ApiError, ApiResult};
pub use routes::router;

pub type SharedSession = Arc<Mutex<Session>>;

/// Serves `app` on `listener` until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, app: axum::Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}

#[derive(Clone, Default)]
pub struct AppState {
    widgets: Arc<RwLock<HashMap<String, SharedSession>>>,
}

impl AppState {
    pub fn new() -> Self {
        AppState::default()
    }

    pub fn session(&self, widget_id: &str) -> ApiResult<SharedSession> {
        self.widgets
            .read()
            .expect("widget map lock")
            .get(widget_id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_widget(widget_id))
    }

    /// Registers `session` unless its widget id is already taken.
    pub fn insert(&self, session: Session) -> ApiResult<()> {
        let id = session.widget().widget_id().to_owned();
        let mut map = self.widgets.write().expect("widget map lock");
        if map.contains_key(&id) {
            return Err(ApiError::new(
                axum::http::StatusCode::CONFLICT,
                "conflict",
                format!("widget `{id}` already exists"),
            ));
        }
        map.insert(id, Arc::new(Mutex::new(session)));
        Ok(())
    }

    pub fn remove(&self, widget_id: &str) -> ApiResult<()> {
        self.widgets
            .write()
            .expect("widget map lock")
            .remove(widget_id)
            .map(drop)
            .ok_or_else(|| ApiError::unknown_widget(widget_id))
    }

    pub fn widget_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.widgets.read().expect("widget map lock").keys().cloned().collect();
        ids.sort();
        ids
    }
}
