//! Versioned message protocol between a kernel-side widget and a frontend.
//!
//! Frames are single JSON documents with exactly the keys
//! `protocol_version`, `widget_id`, `seq`, `msg_type` and `body`. Sequence
//! numbers are strictly increasing per widget and per direction; the kernel
//! rejects any inbound frame whose `seq` is not greater than the last one it
//! accepted.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::state::{ActionRecord, DataState, StateId};
use crate::widget::{ActionDispatch, Widget};

pub const PROTOCOL_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flow {
    FrontendToKernel,
    KernelToFrontend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MsgType {
    Ready,
    RenderSpec,
    StateUpdate,
    HistoryUpdate,
    ActionDispatch,
    RestoreRequest,
    Error,
}

impl MsgType {
    pub fn flow(self) -> Flow {
        match self {
            MsgType::Ready | MsgType::ActionDispatch | MsgType::RestoreRequest => Flow::FrontendToKernel,
            MsgType::RenderSpec | MsgType::StateUpdate | MsgType::HistoryUpdate | MsgType::Error => {
                Flow::KernelToFrontend
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MsgType::Ready => "ready",
            MsgType::RenderSpec => "render_spec",
            MsgType::StateUpdate => "state_update",
            MsgType::HistoryUpdate => "history_update",
            MsgType::ActionDispatch => "action_dispatch",
            MsgType::RestoreRequest => "restore_request",
            MsgType::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub protocol_version: String,
    pub widget_id: String,
    pub seq: u64,
    pub msg_type: MsgType,
    pub body: Value,
}

impl Envelope {
    pub fn new(widget_id: impl Into<String>, seq: u64, msg_type: MsgType, body: Value) -> Self {
        Envelope {
            protocol_version: PROTOCOL_VERSION.to_owned(),
            widget_id: widget_id.into(),
            seq,
            msg_type,
            body,
        }
    }

    pub fn error_code(&self) -> Option<&str> {
        (self.msg_type == MsgType::Error)
            .then(|| self.body.get("code").and_then(Value::as_str))
            .flatten()
    }
}

fn check(envelope: &Envelope, flow: Flow) -> Result<()> {
    if envelope.protocol_version != PROTOCOL_VERSION {
        return Err(Error::Protocol(format!(
            "unsupported protocol version `{}`",
            envelope.protocol_version
        )));
    }
    if envelope.msg_type.flow() != flow {
        return Err(Error::Protocol(format!(
            "`{}` cannot travel {:?}",
            envelope.msg_type.as_str(),
            flow
        )));
    }
    Ok(())
}

/// Serializes an envelope travelling in `flow` to a UTF-8 JSON frame.
pub fn encode(envelope: &Envelope, flow: Flow) -> Result<Vec<u8>> {
    check(envelope, flow)?;
    serde_json::to_vec(envelope).map_err(|e| Error::Protocol(e.to_string()))
}

/// Parses a frame received in `flow`.
pub fn decode(frame: &[u8], flow: Flow) -> Result<Envelope> {
    let envelope: Envelope =
        serde_json::from_slice(frame).map_err(|e| Error::Protocol(format!("malformed frame: {e}")))?;
    check(&envelope, flow)?;
    Ok(envelope)
}

pub mod codes {
    pub const SEQ_ORDER: &str = "seq_order";
    pub const UNKNOWN_WIDGET: &str = "unknown_widget";
    pub const BAD_BODY: &str = "bad_body";
    pub const DIRECTION: &str = "direction";
    pub const VERSION: &str = "version";
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RestoreBody {
    state_id: StateId,
}

/// Kernel side of one widget's channel: the widget plus the sequencing
/// state of its connection.
#[derive(Debug)]
pub struct Session {
    widget: Widget,
    last_inbound: Option<u64>,
    next_outbound: u64,
    history_sent: usize,
}

impl Session {
    pub fn new(widget: Widget) -> Self {
        Session {
            widget,
            last_inbound: None,
            next_outbound: 0,
            history_sent: 0,
        }
    }

    pub fn widget(&self) -> &Widget {
        &self.widget
    }

    /// Direct access for notebook-side calls (overrides, export). Changes made
    /// here reach the frontend with the next `history_update`.
    pub fn widget_mut(&mut self) -> &mut Widget {
        &mut self.widget
    }

    pub fn into_widget(self) -> Widget {
        self.widget
    }

    fn out(&mut self, msg_type: MsgType, body: Value) -> Envelope {
        let seq = self.next_outbound;
        self.next_outbound += 1;
        Envelope::new(self.widget.widget_id(), seq, msg_type, body)
    }

    fn error(&mut self, code: &str, message: impl Into<String>, in_reply_to: u64) -> Envelope {
        let body = json!({ "code": code, "message": message.into(), "in_reply_to": in_reply_to });
        self.out(MsgType::Error, body)
    }

    fn state_update(&mut self, state: &DataState) -> Envelope {
        let body = json!({
            "state_id": state.state_id,
            "action_id": state.origin_action_id,
            "payload": state.payload,
        });
        self.out(MsgType::StateUpdate, body)
    }

    fn history_update(&mut self) -> Envelope {
        let records = &self.widget.store().records()[self.history_sent..];
        let body = json!({ "length": self.widget.history_len(), "records": records });
        self.history_sent = self.widget.history_len();
        self.out(MsgType::HistoryUpdate, body)
    }

    /// Processes one inbound envelope and returns the envelopes to send back,
    /// in order. Errors are reported as `error` envelopes and never change
    /// the widget.
    pub fn handle_inbound(&mut self, envelope: &Envelope) -> Vec<Envelope> {
        let seq = envelope.seq;
        if envelope.widget_id != self.widget.widget_id() {
            return vec![unknown_widget(envelope)];
        }
        if envelope.protocol_version != PROTOCOL_VERSION {
            let msg = format!("unsupported protocol version `{}`", envelope.protocol_version);
            return vec![self.error(codes::VERSION, msg, seq)];
        }
        if envelope.msg_type.flow() != Flow::FrontendToKernel {
            let msg = format!("`{}` is a kernel-to-frontend message", envelope.msg_type.as_str());
            return vec![self.error(codes::DIRECTION, msg, seq)];
        }
        if self.last_inbound.is_some_and(|last| seq <= last) {
            let msg = format!("seq {seq} is not after {}", self.last_inbound.unwrap_or_default());
            return vec![self.error(codes::SEQ_ORDER, msg, seq)];
        }
        self.last_inbound = Some(seq);

        match envelope.msg_type {
            MsgType::Ready => {
                self.history_sent = 0;
                let spec = serde_json::to_value(self.widget.render_spec()).expect("render spec is plain data");
                let current = self
                    .widget
                    .get_state(self.widget.current_state_id())
                    .expect("current state exists");
                let render = self.out(MsgType::RenderSpec, spec);
                vec![render, self.state_update(&current)]
            }
            MsgType::ActionDispatch => {
                let dispatch: ActionDispatch = match serde_json::from_value(envelope.body.clone()) {
                    Ok(d) => d,
                    Err(e) => return vec![self.error(codes::BAD_BODY, e.to_string(), seq)],
                };
                self.apply(seq, |w| w.handle_action(&dispatch))
            }
            MsgType::RestoreRequest => {
                let body: RestoreBody = match serde_json::from_value(envelope.body.clone()) {
                    Ok(b) => b,
                    Err(e) => return vec![self.error(codes::BAD_BODY, e.to_string(), seq)],
                };
                self.apply(seq, |w| w.restore(body.state_id))
            }
            _ => unreachable!("flow checked above"),
        }
    }

    fn apply(&mut self, seq: u64, op: impl FnOnce(&mut Widget) -> Result<DataState>) -> Vec<Envelope> {
        match op(&mut self.widget) {
            Ok(state) => {
                let update = self.state_update(&state);
                vec![update, self.history_update()]
            }
            Err(e) => vec![self.error(e.code(), e.to_string(), seq)],
        }
    }

    /// Decodes a raw frame, handles it and encodes the replies.
    pub fn handle_frame(&mut self, frame: &[u8]) -> Result<Vec<Vec<u8>>> {
        let envelope: Envelope =
            serde_json::from_slice(frame).map_err(|e| Error::Protocol(format!("malformed frame: {e}")))?;
        self.handle_inbound(&envelope)
            .iter()
            .map(|e| encode(e, Flow::KernelToFrontend))
            .collect()
    }
}

/// Several independent widget sessions addressed by widget id.
#[derive(Debug, Default)]
pub struct Kernel {
    sessions: BTreeMap<String, Session>,
}

impl Kernel {
    pub fn new() -> Self {
        Kernel::default()
    }

    pub fn add(&mut self, widget: Widget) -> Result<()> {
        let id = widget.widget_id().to_owned();
        if self.sessions.contains_key(&id) {
            return Err(Error::contract(format!("widget `{id}` already registered")));
        }
        self.sessions.insert(id, Session::new(widget));
        Ok(())
    }

    pub fn session(&self, widget_id: &str) -> Option<&Session> {
        self.sessions.get(widget_id)
    }

    pub fn session_mut(&mut self, widget_id: &str) -> Option<&mut Session> {
        self.sessions.get_mut(widget_id)
    }

    pub fn handle_inbound(&mut self, envelope: &Envelope) -> Vec<Envelope> {
        match self.sessions.get_mut(&envelope.widget_id) {
            Some(session) => session.handle_inbound(envelope),
            None => vec![unknown_widget(envelope)],
        }
    }
}

/// Error reply for a frame addressed to a widget that does not exist.
pub fn unknown_widget(envelope: &Envelope) -> Envelope {
    Envelope::new(
        envelope.widget_id.clone(),
        0,
        MsgType::Error,
        json!({
            "code": codes::UNKNOWN_WIDGET,
            "message": format!("no widget `{}`", envelope.widget_id),
            "in_reply_to": envelope.seq,
        }),
    )
}

/// Builds frontend-side messages with increasing sequence numbers.
#[derive(Debug, Clone)]
pub struct Script {
    widget_id: String,
    next_seq: u64,
    messages: Vec<Envelope>,
}

impl Script {
    pub fn new(widget_id: impl Into<String>) -> Self {
        Script {
            widget_id: widget_id.into(),
            next_seq: 0,
            messages: Vec::new(),
        }
    }

    pub fn raw(mut self, msg_type: MsgType, body: Value) -> Self {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.messages
            .push(Envelope::new(self.widget_id.clone(), seq, msg_type, body));
        self
    }

    /// Appends a message with an explicit `seq`; later messages continue
    /// after the largest seq used so far.
    pub fn with_seq(mut self, seq: u64, msg_type: MsgType, body: Value) -> Self {
        self.next_seq = self.next_seq.max(seq + 1);
        self.messages
            .push(Envelope::new(self.widget_id.clone(), seq, msg_type, body));
        self
    }

    pub fn ready(self) -> Self {
        self.raw(MsgType::Ready, json!({}))
    }

    pub fn dispatch(self, dispatch: &ActionDispatch) -> Self {
        let body = serde_json::to_value(dispatch).expect("dispatch is plain data");
        self.raw(MsgType::ActionDispatch, body)
    }

    pub fn restore(self, state_id: StateId) -> Self {
        self.raw(MsgType::RestoreRequest, json!({ "state_id": state_id }))
    }

    pub fn build(self) -> Vec<Envelope> {
        self.messages
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub flow: Flow,
    pub envelope: Envelope,
}

/// Every envelope exchanged during a headless session, in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn outbound(&self) -> impl Iterator<Item = &Envelope> {
        self.entries
            .iter()
            .filter(|e| e.flow == Flow::KernelToFrontend)
            .map(|e| &e.envelope)
    }

    pub fn count(&self, msg_type: MsgType) -> usize {
        self.entries.iter().filter(|e| e.envelope.msg_type == msg_type).count()
    }

    pub fn last_state_update(&self) -> Option<&Envelope> {
        self.outbound().filter(|e| e.msg_type == MsgType::StateUpdate).last()
    }

    /// Action records carried by the `history_update` messages, i.e. the
    /// widget's action log as the frontend saw it.
    pub fn action_log(&self) -> Result<Vec<ActionRecord>> {
        let mut records: Vec<ActionRecord> = Vec::new();
        for env in self.outbound().filter(|e| e.msg_type == MsgType::HistoryUpdate) {
            let batch: Vec<ActionRecord> =
                serde_json::from_value(env.body["records"].clone()).map_err(|e| Error::Protocol(e.to_string()))?;
            for r in batch {
                // a reconnect resends history from the start
                if records.last().is_none_or(|last| r.action_id > last.action_id) {
                    records.push(r);
                }
            }
        }
        Ok(records)
    }

    /// The action log as newline-delimited JSON.
    pub fn to_action_log_ndjson(&self) -> Result<String> {
        let mut out = String::new();
        for r in self.action_log()? {
            out.push_str(&serde_json::to_string(&r).map_err(|e| Error::Protocol(e.to_string()))?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Plays the frontend role: feeds `script` to the session through the wire
/// format, one message at a time, and records everything.
pub fn headless_session(session: &mut Session, script: impl IntoIterator<Item = Envelope>) -> Transcript {
    let mut transcript = Transcript::default();
    for message in script {
        let frame = serde_json::to_vec(&message).expect("envelopes are plain data");
        let inbound: Envelope = serde_json::from_slice(&frame).expect("frame was just encoded");
        let replies = session.handle_inbound(&inbound);
        transcript.entries.push(TranscriptEntry {
            flow: Flow::FrontendToKernel,
            envelope: inbound,
        });
        for reply in replies {
            let reply = encode(&reply, Flow::KernelToFrontend)
                .and_then(|frame| decode(&frame, Flow::KernelToFrontend))
                .expect("kernel replies are valid envelopes");
            transcript.entries.push(TranscriptEntry {
                flow: Flow::KernelToFrontend,
                envelope: reply,
            });
        }
    }
    transcript
}
