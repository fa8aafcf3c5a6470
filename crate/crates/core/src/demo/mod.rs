//! The two demo widgets built on the framework.

pub mod alignment;
pub mod explorer;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::Direction;
use crate::widget::{ActionDispatch, Handler, HandlerContext};

/// Looks up `key` in the element datum first, then in the params.
pub(crate) fn str_param<'a>(d: &'a ActionDispatch, key: &str) -> Option<&'a str> {
    d.element
        .datum
        .as_ref()
        .and_then(|v| v.get(key))
        .and_then(Value::as_str)
        .or_else(|| d.params.get(key).and_then(Value::as_str))
}

pub(crate) fn direction_param(d: &ActionDispatch) -> Result<Option<Direction>> {
    d.params
        .get("direction")
        .and_then(Value::as_str)
        .map(str::parse)
        .transpose()
}

pub(crate) fn default_viewport() -> Value {
    json!({ "x": 0.0, "y": 0.0, "zoom": 1.0 })
}

fn number(d: &ActionDispatch, key: &str, default: f64) -> Result<f64> {
    match d.params.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v
            .as_f64()
            .filter(|f| f.is_finite())
            .ok_or_else(|| Error::contract(format!("`{key}` must be a finite number"))),
    }
}

/// `pan` and `zoom` handlers editing `payload.viewport[component]`.
pub(crate) fn viewport_handlers(component: &'static str) -> BTreeMap<String, Handler> {
    let mut handlers: BTreeMap<String, Handler> = BTreeMap::new();
    handlers.insert(
        "pan".into(),
        Arc::new(move |ctx: &HandlerContext<'_>, d: &ActionDispatch| {
            let dx = number(d, "dx", 0.0)?;
            let dy = number(d, "dy", 0.0)?;
            let mut payload = ctx.current.clone();
            let vp = &mut payload["viewport"][component];
            vp["x"] = json!(vp["x"].as_f64().unwrap_or(0.0) + dx);
            vp["y"] = json!(vp["y"].as_f64().unwrap_or(0.0) + dy);
            Ok(payload)
        }),
    );
    handlers.insert(
        "zoom".into(),
        Arc::new(move |ctx: &HandlerContext<'_>, d: &ActionDispatch| {
            let factor = number(d, "factor", 1.0)?;
            if factor <= 0.0 {
                return Err(Error::contract("zoom factor must be positive"));
            }
            let mut payload = ctx.current.clone();
            let vp = &mut payload["viewport"][component];
            vp["zoom"] = json!(vp["zoom"].as_f64().unwrap_or(1.0) * factor);
            Ok(payload)
        }),
    );
    handlers
}
