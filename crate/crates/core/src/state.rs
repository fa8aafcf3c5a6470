//! Append-only Data States store and action history for a single widget.
//!
//! Every mutation appends exactly one [`ActionRecord`] and exactly one
//! [`DataState`]. Nothing is ever removed or rewritten: a restore loads an
//! old payload into a *new* state.

use std::fmt;
use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Nesting limit for payloads. Anything deeper is treated as unserializable.
pub const MAX_PAYLOAD_DEPTH: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub u64);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionType {
    Init,
    Select,
    Deselect,
    Pan,
    Zoom,
    Filter,
    Sort,
    Input,
    SetDecision,
    Restore,
    Override,
    ClearOverride,
}

impl InteractionType {
    pub const ALL: [InteractionType; 12] = [
        InteractionType::Init,
        InteractionType::Select,
        InteractionType::Deselect,
        InteractionType::Pan,
        InteractionType::Zoom,
        InteractionType::Filter,
        InteractionType::Sort,
        InteractionType::Input,
        InteractionType::SetDecision,
        InteractionType::Restore,
        InteractionType::Override,
        InteractionType::ClearOverride,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InteractionType::Init => "init",
            InteractionType::Select => "select",
            InteractionType::Deselect => "deselect",
            InteractionType::Pan => "pan",
            InteractionType::Zoom => "zoom",
            InteractionType::Filter => "filter",
            InteractionType::Sort => "sort",
            InteractionType::Input => "input",
            InteractionType::SetDecision => "set_decision",
            InteractionType::Restore => "restore",
            InteractionType::Override => "override",
            InteractionType::ClearOverride => "clear_override",
        }
    }

    /// Whether a frontend may send this interaction in an `action_dispatch`.
    /// Lifecycle and provenance records are produced by the kernel only.
    pub fn is_dispatchable(self) -> bool {
        !matches!(
            self,
            InteractionType::Init
                | InteractionType::Restore
                | InteractionType::Override
                | InteractionType::ClearOverride
        )
    }
}

impl fmt::Display for InteractionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InteractionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InteractionType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::contract(format!("unknown interaction type `{s}`")))
    }
}

/// Where in a component an interaction happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub path: String,
    #[serde(default)]
    pub datum: Option<Value>,
}

impl Element {
    pub fn new(path: impl Into<String>) -> Self {
        Element {
            path: path.into(),
            datum: None,
        }
    }

    pub fn with_datum(path: impl Into<String>, datum: Value) -> Self {
        Element {
            path: path.into(),
            datum: Some(datum),
        }
    }
}

/// The event context captured for one interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionContext {
    pub interaction_type: InteractionType,
    pub component_id: String,
    pub element: Element,
    pub params: Value,
}

impl ActionContext {
    pub fn new(
        interaction_type: InteractionType,
        component_id: impl Into<String>,
        element: Element,
        params: Value,
    ) -> Self {
        ActionContext {
            interaction_type,
            component_id: component_id.into(),
            element,
            params,
        }
    }

    /// Builds a context from loosely typed parts, as they arrive from a log
    /// line or a frontend message.
    pub fn parse(
        interaction_type: &str,
        component_id: impl Into<String>,
        element: Element,
        params: Value,
    ) -> Result<Self> {
        Ok(ActionContext::new(
            interaction_type.parse()?,
            component_id,
            element,
            params,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub action_id: ActionId,
    pub timestamp: i64,
    pub interaction_type: InteractionType,
    pub component_id: String,
    pub element: Element,
    pub params: Value,
    pub result_state_id: StateId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataState {
    pub state_id: StateId,
    pub payload: Value,
    pub created_at: i64,
    pub origin_action_id: ActionId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportDocument {
    pub widget_id: String,
    pub widget_type: String,
    pub state_id: StateId,
    pub exported_at: String,
    pub payload: Value,
}

#[derive(Debug)]
struct StoredState {
    state_id: StateId,
    payload: Arc<Value>,
    created_at: i64,
    origin_action_id: ActionId,
}

impl StoredState {
    fn snapshot(&self) -> DataState {
        DataState {
            state_id: self.state_id,
            payload: Value::clone(&self.payload),
            created_at: self.created_at,
            origin_action_id: self.origin_action_id,
        }
    }
}

/// Newline-delimited JSON sink receiving one line per appended record.
pub struct ActionJournal {
    out: Box<dyn Write + Send + Sync>,
}

impl ActionJournal {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path.as_ref())?;
        Ok(ActionJournal::from_writer(BufWriter::new(file)))
    }

    pub fn from_writer(out: impl Write + Send + Sync + 'static) -> Self {
        ActionJournal { out: Box::new(out) }
    }

    fn append(&mut self, record: &ActionRecord) -> Result<()> {
        let line = serde_json::to_string(record).map_err(|e| Error::Payload(e.to_string()))?;
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}

impl fmt::Debug for ActionJournal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ActionJournal")
    }
}

/// Reads an action log written by [`ActionJournal`].
pub fn read_action_log(path: impl AsRef<Path>) -> Result<Vec<ActionRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Format(e.to_string())))
        .collect()
}

/// Converts any serializable value into a payload tree, rejecting values that
/// cannot be represented in the export format.
pub fn to_payload<T: Serialize + ?Sized>(value: &T) -> Result<Value> {
    let v = serde_json::to_value(value).map_err(|e| Error::Payload(e.to_string()))?;
    if !v.is_object() {
        return Err(Error::Payload(format!(
            "payload must be an object, got {}",
            json_kind(&v)
        )));
    }
    if depth(&v) > MAX_PAYLOAD_DEPTH {
        return Err(Error::Payload(format!(
            "payload nesting exceeds {MAX_PAYLOAD_DEPTH} levels"
        )));
    }
    Ok(v)
}

fn json_kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "bool",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn depth(v: &Value) -> usize {
    // iterative so that hostile inputs cannot blow the stack
    let mut max = 0;
    let mut stack = vec![(v, 1usize)];
    while let Some((v, d)) = stack.pop() {
        max = max.max(d);
        match v {
            Value::Array(items) => stack.extend(items.iter().map(|i| (i, d + 1))),
            Value::Object(map) => stack.extend(map.values().map(|i| (i, d + 1))),
            _ => {}
        }
    }
    max
}

pub(crate) fn now_millis() -> i64 {
    Utc::now().timestamp_millis()
}

pub(crate) fn iso8601(millis: i64) -> String {
    Utc.timestamp_millis_opt(millis)
        .single()
        .unwrap_or_else(Utc::now)
        .to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Data States plus action history for one widget.
#[derive(Debug)]
pub struct StateStore {
    widget_id: String,
    widget_type: String,
    states: Vec<StoredState>,
    history: Vec<ActionRecord>,
    journal: Option<ActionJournal>,
}

impl StateStore {
    pub fn new(widget_id: impl Into<String>, widget_type: impl Into<String>) -> Self {
        StateStore {
            widget_id: widget_id.into(),
            widget_type: widget_type.into(),
            states: Vec::new(),
            history: Vec::new(),
            journal: None,
        }
    }

    pub fn set_journal(&mut self, journal: ActionJournal) {
        self.journal = Some(journal);
    }

    pub fn widget_id(&self) -> &str {
        &self.widget_id
    }

    pub fn widget_type(&self) -> &str {
        &self.widget_type
    }

    pub fn is_initialized(&self) -> bool {
        !self.states.is_empty()
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn current_state_id(&self) -> Option<StateId> {
        self.states.last().map(|s| s.state_id)
    }

    pub fn current_payload(&self) -> Option<&Value> {
        self.states.last().map(|s| s.payload.as_ref())
    }

    /// Appends a new state holding `new_payload` and a record describing
    /// the interaction that produced it.
    pub fn record_action<T: Serialize + ?Sized>(
        &mut self,
        context: ActionContext,
        new_payload: &T,
    ) -> Result<(ActionRecord, DataState)> {
        let payload = to_payload(new_payload)?;
        self.append(context, Arc::new(payload))
    }

    fn append(&mut self, context: ActionContext, payload: Arc<Value>) -> Result<(ActionRecord, DataState)> {
        let first = self.history.is_empty();
        match context.interaction_type {
            InteractionType::Init if !first => {
                return Err(Error::contract("widget is already initialized"));
            }
            t if first && t != InteractionType::Init => {
                return Err(Error::contract(format!("first action must be `init`, got `{t}`")));
            }
            InteractionType::Restore => {
                let from = context
                    .params
                    .get("restored_from")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| Error::contract("restore record needs `restored_from`"))?;
                self.stored(StateId(from))?;
            }
            _ => {}
        }

        let now = now_millis();
        let state_id = StateId(self.states.len() as u64);
        let action_id = ActionId(self.history.len() as u64);
        let record = ActionRecord {
            action_id,
            timestamp: now,
            interaction_type: context.interaction_type,
            component_id: context.component_id,
            element: context.element,
            params: context.params,
            result_state_id: state_id,
        };
        if let Some(journal) = self.journal.as_mut() {
            journal.append(&record)?;
        }
        let stored = StoredState {
            state_id,
            payload,
            created_at: now,
            origin_action_id: action_id,
        };
        let snapshot = stored.snapshot();
        self.states.push(stored);
        self.history.push(record.clone());
        Ok((record, snapshot))
    }

    fn stored(&self, state_id: StateId) -> Result<&StoredState> {
        usize::try_from(state_id.0)
            .ok()
            .and_then(|i| self.states.get(i))
            .ok_or_else(|| Error::not_found(format!("state {state_id}")))
    }

    /// Returns a copy of the stored state. Mutating it never affects the store.
    pub fn get_state(&self, state_id: StateId) -> Result<DataState> {
        self.stored(state_id).map(StoredState::snapshot)
    }

    /// Borrowed view of a stored payload.
    pub fn payload(&self, state_id: StateId) -> Result<&Value> {
        self.stored(state_id).map(|s| s.payload.as_ref())
    }

    /// Loads the payload of `state_id` into a new state. History is never
    /// rewound.
    pub fn restore(&mut self, state_id: StateId) -> Result<DataState> {
        let payload = Arc::clone(&self.stored(state_id)?.payload);
        let context = ActionContext::new(
            InteractionType::Restore,
            "history",
            Element::new(format!("history/{state_id}")),
            json!({ "restored_from": state_id.0 }),
        );
        self.append(context, payload).map(|(_, state)| state)
    }

    pub fn export_state(&self, state_id: Option<StateId>) -> Result<ExportDocument> {
        let stored = match state_id {
            Some(id) => self.stored(id)?,
            None => self
                .states
                .last()
                .ok_or_else(|| Error::not_found("widget has no states"))?,
        };
        Ok(ExportDocument {
            widget_id: self.widget_id.clone(),
            widget_type: self.widget_type.clone(),
            state_id: stored.state_id,
            exported_at: iso8601(now_millis()),
            payload: Value::clone(&stored.payload),
        })
    }

    /// Full history, or the records with `from <= action_id <= to`.
    pub fn history_list(&self, range: Option<(ActionId, ActionId)>) -> Result<Vec<ActionRecord>> {
        match range {
            None => Ok(self.history.clone()),
            Some((from, to)) if from > to => Err(Error::contract(format!("inverted history range {from}..{to}"))),
            Some((from, to)) => Ok(self
                .history
                .iter()
                .filter(|r| r.action_id >= from && r.action_id <= to)
                .cloned()
                .collect()),
        }
    }

    pub fn records(&self) -> &[ActionRecord] {
        &self.history
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn ctx(t: InteractionType) -> ActionContext {
        ActionContext::new(t, "c", Element::new("c/0"), json!({}))
    }

    fn store_with(n: usize) -> StateStore {
        let mut s = StateStore::new("w", "test");
        s.record_action(ctx(InteractionType::Init), &json!({"v": 0})).unwrap();
        for i in 1..n {
            s.record_action(ctx(InteractionType::Select), &json!({"v": i})).unwrap();
        }
        s
    }

    #[test]
    fn first_init_gets_zero_ids() {
        let mut s = StateStore::new("w", "test");
        let (rec, st) = s.record_action(ctx(InteractionType::Init), &json!({"p": 0})).unwrap();
        assert_eq!(st.state_id, StateId(0));
        assert_eq!(rec.action_id, ActionId(0));
        assert_eq!(st.payload, json!({"p": 0}));
        assert_eq!(st.origin_action_id, rec.action_id);
    }

    #[test]
    fn sequential_ids_are_monotone() {
        let s = store_with(3);
        let ids: Vec<_> = s.records().iter().map(|r| r.action_id.0).collect();
        assert_eq!(ids, [0, 1, 2]);
        let sids: Vec<_> = s.records().iter().map(|r| r.result_state_id.0).collect();
        assert_eq!(sids, [0, 1, 2]);
    }

    struct Cyclic;

    impl Serialize for Cyclic {
        fn serialize<S: serde::Serializer>(&self, _: S) -> std::result::Result<S::Ok, S::Error> {
            Err(serde::ser::Error::custom("cyclic reference detected"))
        }
    }

    #[test]
    fn unserializable_payload_is_rejected() {
        let mut s = store_with(1);
        let err = s.record_action(ctx(InteractionType::Select), &Cyclic).unwrap_err();
        assert!(matches!(err, Error::Payload(_)));

        let mut tuple_keys = HashMap::new();
        tuple_keys.insert((1, 2), 3);
        let err = s.record_action(ctx(InteractionType::Select), &tuple_keys).unwrap_err();
        assert!(matches!(err, Error::Payload(_)));

        let mut deep = json!(0);
        for _ in 0..MAX_PAYLOAD_DEPTH + 1 {
            deep = json!({ "n": deep });
        }
        let err = s.record_action(ctx(InteractionType::Select), &deep).unwrap_err();
        assert!(matches!(err, Error::Payload(_)));
        assert_eq!(s.history_len(), 1);
    }

    #[test]
    fn unknown_interaction_type_is_contract_error() {
        let err = ActionContext::parse("hover", "c", Element::new("c"), json!({})).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn init_must_come_first_and_once() {
        let mut s = StateStore::new("w", "t");
        assert!(matches!(
            s.record_action(ctx(InteractionType::Select), &json!({})),
            Err(Error::Contract(_))
        ));
        s.record_action(ctx(InteractionType::Init), &json!({})).unwrap();
        assert!(matches!(
            s.record_action(ctx(InteractionType::Init), &json!({})),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn get_state_returns_defensive_copy() {
        let s = store_with(2);
        let mut copy = s.get_state(StateId(1)).unwrap();
        copy.payload["v"] = json!("mutated");
        assert_eq!(s.get_state(StateId(1)).unwrap().payload, json!({"v": 1}));
        assert!(matches!(s.get_state(StateId(999)), Err(Error::NotFound(_))));
    }

    #[test]
    fn restore_appends_a_new_state() {
        let mut s = store_with(5);
        let restored = s.restore(StateId(1)).unwrap();
        assert_eq!(restored.state_id, StateId(5));
        assert_eq!(restored.payload, s.get_state(StateId(1)).unwrap().payload);
        assert_eq!(s.history_len(), 6);
        let last = s.records().last().unwrap();
        assert_eq!(last.interaction_type, InteractionType::Restore);
        assert_eq!(last.params["restored_from"], json!(1));

        let again = s.restore(StateId(5)).unwrap();
        assert_eq!(again.payload, restored.payload);

        assert!(matches!(s.restore(StateId(7)), Err(Error::NotFound(_))));
        assert_eq!(s.history_len(), 7);
    }

    #[test]
    fn export_defaults_to_current_state() {
        let s = store_with(1);
        let doc = s.export_state(None).unwrap();
        assert_eq!(doc.state_id, StateId(0));
        assert_eq!(doc.payload, json!({"v": 0}));
        let a = s.export_state(Some(StateId(0))).unwrap();
        let b = s.export_state(Some(StateId(0))).unwrap();
        assert_eq!(
            (&a.widget_id, &a.widget_type, a.state_id, &a.payload),
            (&b.widget_id, &b.widget_type, b.state_id, &b.payload)
        );
        assert!(chrono::DateTime::parse_from_rfc3339(&a.exported_at).is_ok());
        assert!(matches!(s.export_state(Some(StateId(3))), Err(Error::NotFound(_))));

        let keys: Vec<_> = serde_json::to_value(&doc)
            .unwrap()
            .as_object()
            .unwrap()
            .keys()
            .cloned()
            .collect();
        assert_eq!(keys, ["exported_at", "payload", "state_id", "widget_id", "widget_type"]);
    }

    #[test]
    fn history_ranges() {
        let s = store_with(5);
        assert_eq!(store_with(1).history_list(None).unwrap().len(), 1);
        let sub = s.history_list(Some((ActionId(1), ActionId(2)))).unwrap();
        let ids: Vec<_> = sub.iter().map(|r| r.action_id.0).collect();
        assert_eq!(ids, [1, 2]);
        assert!(matches!(
            s.history_list(Some((ActionId(3), ActionId(1)))),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn journal_lines_use_exact_field_names() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("actions.ndjson");
        let mut s = StateStore::new("w", "t");
        s.set_journal(ActionJournal::create(&path).unwrap());
        s.record_action(ctx(InteractionType::Init), &json!({})).unwrap();
        s.restore(StateId(0)).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let first: Value = serde_json::from_str(lines[0]).unwrap();
        let mut keys: Vec<_> = first.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "action_id",
                "component_id",
                "element",
                "interaction_type",
                "params",
                "result_state_id",
                "timestamp"
            ]
        );
        assert_eq!(read_action_log(&path).unwrap(), s.history_list(None).unwrap());
    }
}
