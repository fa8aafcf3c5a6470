//! Deterministic replay of recorded action logs.
//!
//! A log is newline-delimited JSON in the action-log format; only
//! `interaction_type`, `component_id`, `element` and `params` are read, so
//! hand-written dispatch lines work as well. Blank lines are skipped and not
//! counted. Failures are collected per line and never stop the replay.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::actions::{OverrideRecipe, UserFunction};
use crate::demo::alignment::{self, AlignmentCandidate, AlignmentOptions};
use crate::demo::explorer::{self, ExplorerOptions};
use crate::error::{Error, Result};
use crate::graph::PropertyGraph;
use crate::state::{Element, InteractionType, StateId};
use crate::widget::{ActionDispatch, Widget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WidgetKind {
    Explorer,
    Alignment,
}

impl WidgetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WidgetKind::Explorer => explorer::WIDGET_TYPE,
            WidgetKind::Alignment => alignment::WIDGET_TYPE,
        }
    }
}

impl fmt::Display for WidgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WidgetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explorer" => Ok(WidgetKind::Explorer),
            "alignment" => Ok(WidgetKind::Alignment),
            other => Err(Error::contract(format!("unknown widget type `{other}`"))),
        }
    }
}

/// Builds one of the demo widgets with a fixed id.
pub fn build_widget(
    kind: WidgetKind,
    widget_id: &str,
    graph: Arc<PropertyGraph>,
    candidates: Option<Vec<AlignmentCandidate>>,
    init_overrides: Vec<(String, UserFunction)>,
) -> Result<Widget> {
    match kind {
        WidgetKind::Explorer => explorer::make_explorer_with(
            graph,
            ExplorerOptions {
                widget_id: widget_id.to_owned(),
                ..Default::default()
            },
            init_overrides,
        ),
        WidgetKind::Alignment => {
            let candidates = candidates.ok_or_else(|| Error::contract("the alignment widget needs candidates"))?;
            alignment::make_alignment_widget_with(
                graph,
                candidates,
                AlignmentOptions {
                    widget_id: widget_id.to_owned(),
                    ..Default::default()
                },
                init_overrides,
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    pub line_no: usize,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub actions_applied: usize,
    pub errors: Vec<LineError>,
    pub final_state_id: StateId,
    pub final_export_path: Option<String>,
}

#[derive(Deserialize)]
struct LogLine {
    interaction_type: String,
    component_id: String,
    #[serde(default)]
    element: Option<Element>,
    #[serde(default)]
    params: Value,
}

pub const BAD_LINE: &str = "bad_line";
pub const UDF_UNAVAILABLE: &str = "udf_unavailable";

fn line_error(line_no: usize, code: &str, message: impl Into<String>) -> LineError {
    LineError {
        line_no,
        code: code.to_owned(),
        message: message.into(),
    }
}

fn recipe_override(params: &Value, line_no: usize) -> std::result::Result<(String, UserFunction), LineError> {
    let name = params
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| line_error(line_no, BAD_LINE, "override needs `name`"))?;
    let recipe = params.get("recipe").ok_or_else(|| {
        line_error(
            line_no,
            UDF_UNAVAILABLE,
            format!("override of `{name}` has no replayable recipe"),
        )
    })?;
    let recipe: OverrideRecipe =
        serde_json::from_value(recipe.clone()).map_err(|e| line_error(line_no, BAD_LINE, format!("recipe: {e}")))?;
    Ok((name.to_owned(), recipe.into_user_function()))
}

fn apply_line(widget: &mut Widget, line: LogLine, line_no: usize) -> std::result::Result<(), LineError> {
    let from_err = |e: Error| line_error(line_no, e.code(), e.to_string());
    let interaction: InteractionType = line.interaction_type.parse().map_err(from_err)?;
    match interaction {
        InteractionType::Init => Err(line_error(line_no, "contract", "`init` may only be the first line")),
        InteractionType::Restore => {
            let from = line
                .params
                .get("restored_from")
                .and_then(Value::as_u64)
                .ok_or_else(|| line_error(line_no, BAD_LINE, "restore needs `restored_from`"))?;
            widget.restore(StateId(from)).map(drop).map_err(from_err)
        }
        InteractionType::Override => {
            let (name, func) = recipe_override(&line.params, line_no)?;
            widget.set_override(&name, func).map(drop).map_err(from_err)
        }
        InteractionType::ClearOverride => {
            let name = line
                .params
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| line_error(line_no, BAD_LINE, "clear_override needs `name`"))?;
            widget.clear_override(name).map(drop).map_err(from_err)
        }
        _ => {
            let element = line.element.unwrap_or_else(|| Element::new(line.component_id.clone()));
            let dispatch = ActionDispatch::new(interaction, line.component_id, element, line.params);
            widget.handle_action(&dispatch).map(drop).map_err(from_err)
        }
    }
}

/// Replays `log` onto a widget built by `factory`. A leading `init` line
/// contributes its replayable init-time overrides to the factory call.
pub fn replay_log<F>(factory: F, log: &str) -> Result<(Widget, ReplayReport)>
where
    F: FnOnce(Vec<(String, UserFunction)>) -> Result<Widget>,
{
    let mut lines = log
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();

    let mut applied = 0;
    let mut errors = Vec::new();
    let mut overrides = Vec::new();

    let leading_init = lines.peek().and_then(|(no, text)| {
        let line: LogLine = serde_json::from_str(text).ok()?;
        (line.interaction_type == InteractionType::Init.as_str()).then_some((*no, line))
    });
    if let Some((line_no, init)) = leading_init {
        lines.next();
        let list = init.params.get("init_overrides").and_then(Value::as_array);
        let rebuilt: std::result::Result<Vec<_>, LineError> = list
            .into_iter()
            .flatten()
            .map(|p| recipe_override(p, line_no))
            .collect();
        // one line, one outcome: the first failing override is reported
        match rebuilt {
            Ok(list) => {
                overrides = list;
                applied += 1;
            }
            Err(e) => errors.push(e),
        }
    }

    let mut widget = factory(overrides)?;

    for (line_no, text) in lines {
        let outcome = serde_json::from_str::<LogLine>(text)
            .map_err(|e| line_error(line_no, BAD_LINE, e.to_string()))
            .and_then(|line| apply_line(&mut widget, line, line_no));
        match outcome {
            Ok(()) => applied += 1,
            Err(e) => errors.push(e),
        }
    }

    let report = ReplayReport {
        actions_applied: applied,
        errors,
        final_state_id: widget.current_state_id(),
        final_export_path: None,
    };
    Ok((widget, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::explorer::select_type;
    use crate::fixtures::g0;
    use serde_json::json;

    fn explorer_factory(overrides: Vec<(String, UserFunction)>) -> Result<Widget> {
        build_widget(WidgetKind::Explorer, "replay", Arc::new(g0()), None, overrides)
    }

    fn line(d: &ActionDispatch) -> String {
        serde_json::to_string(d).unwrap()
    }

    #[test]
    fn empty_log_stays_at_init() {
        let (w, report) = replay_log(explorer_factory, "").unwrap();
        assert_eq!(report.final_state_id, StateId(0));
        assert_eq!(report.actions_applied, 0);
        let fresh = explorer_factory(vec![]).unwrap();
        assert_eq!(
            w.export_data(None).unwrap().payload,
            fresh.export_data(None).unwrap().payload
        );
    }

    #[test]
    fn select_then_restore_returns_to_state_zero() {
        let log = format!(
            "{}\n{}\n",
            line(&select_type("Skill")),
            json!({"interaction_type": "restore", "component_id": "history", "params": {"restored_from": 0}})
        );
        let (w, report) = replay_log(explorer_factory, &log).unwrap();
        assert_eq!(report.actions_applied, 2);
        assert!(report.errors.is_empty());
        assert_eq!(w.current_payload(), &w.get_state(StateId(0)).unwrap().payload);
    }

    #[test]
    fn one_malformed_line_among_five() {
        let sel = line(&select_type("Skill"));
        let log = [sel.as_str(), sel.as_str(), "{not json", sel.as_str(), sel.as_str()].join("\n");
        let (_, report) = replay_log(explorer_factory, &log).unwrap();
        assert_eq!(report.actions_applied, 4);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].line_no, 3);
        assert_eq!(report.errors[0].code, BAD_LINE);
    }

    #[test]
    fn failing_actions_are_reported_with_their_code() {
        let log = [
            line(&select_type("Tool")),
            json!({"interaction_type": "hover", "component_id": "x"}).to_string(),
            json!({"interaction_type": "override", "component_id": "shared_actions", "params": {"name": "get_schema", "source_text": "def f(): ..."}}).to_string(),
            json!({"interaction_type": "init", "component_id": "widget"}).to_string(),
        ]
        .join("\n");
        let (_, report) = replay_log(explorer_factory, &log).unwrap();
        let codes: Vec<_> = report.errors.iter().map(|e| e.code.as_str()).collect();
        assert_eq!(codes, ["not_found", "contract", UDF_UNAVAILABLE, "contract"]);
        assert_eq!(report.actions_applied, 0);
    }

    #[test]
    fn replaying_a_journal_reproduces_the_session() {
        let mut w = explorer_factory(vec![(
            explorer::GET_NODE_DISTRIBUTION.into(),
            OverrideRecipe::SortByLabel { descending: false }.into_user_function(),
        )])
        .unwrap();
        w.handle_action(&select_type("Skill")).unwrap();
        w.set_override(
            explorer::GET_NODE_DISTRIBUTION,
            OverrideRecipe::TopK { k: 1 }.into_user_function(),
        )
        .unwrap();
        w.restore(StateId(1)).unwrap();
        w.clear_override(explorer::GET_NODE_DISTRIBUTION).unwrap();

        let journal: String = w
            .history_list(None)
            .unwrap()
            .iter()
            .map(|r| serde_json::to_string(r).unwrap() + "\n")
            .collect();
        let (replayed, report) = replay_log(explorer_factory, &journal).unwrap();
        assert!(report.errors.is_empty(), "{:?}", report.errors);
        assert_eq!(report.actions_applied, w.history_len());
        for i in 0..w.history_len() as u64 {
            assert_eq!(
                replayed.get_state(StateId(i)).unwrap().payload,
                w.get_state(StateId(i)).unwrap().payload
            );
        }
    }
}
