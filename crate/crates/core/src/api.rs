//! Request and response bodies of the widget service.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::actions::OverrideRecipe;
use crate::graph::{Direction, GraphDocument};
use crate::replay::{ReplayReport, WidgetKind};
use crate::state::{ExportDocument, StateId};
use crate::widget::RenderSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateWidget {
    pub widget_type: WidgetKind,
    /// Generated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widget_id: Option<String>,
    pub graph: GraphDocument,
    /// Candidate list, required for the alignment widget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_node_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hops: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub init_overrides: BTreeMap<String, OverrideRecipe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidgetCreated {
    pub widget_id: String,
    pub state_id: StateId,
    pub render_spec: RenderSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestoreRequest {
    pub state_id: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub candidate_id: String,
    pub decision: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub node_types: usize,
}

/// Inputs travel as file contents so the service never reads client paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRequest {
    pub widget_type: WidgetKind,
    pub graph: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<String>,
    pub log: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayResponse {
    pub report: ReplayReport,
    pub export: ExportDocument,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}
