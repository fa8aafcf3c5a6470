//! Shared actions: named data operations whose implementation a notebook user
//! can wrap or replace at runtime.
//!
//! An override receives the call parameters and the default implementation,
//! so it can post-process the default's output (a sort or filter wrapper) or
//! ignore it entirely.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::{sort_entries, SortOrder};

pub type ActionFn = Arc<dyn Fn(&Value) -> Result<Value> + Send + Sync>;

/// The default implementation as seen from inside an override.
pub type DefaultOp<'a> = dyn Fn(&Value) -> std::result::Result<Value, UdfFailure> + 'a;

pub type OverrideFn = Arc<dyn Fn(&Value, &DefaultOp<'_>) -> std::result::Result<Value, UdfFailure> + Send + Sync>;

/// Failure raised from inside a user function.
#[derive(Debug, Clone, PartialEq)]
pub struct UdfFailure(pub String);

impl fmt::Display for UdfFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<Error> for UdfFailure {
    fn from(e: Error) -> Self {
        UdfFailure(e.to_string())
    }
}

impl From<String> for UdfFailure {
    fn from(s: String) -> Self {
        UdfFailure(s)
    }
}

impl From<&str> for UdfFailure {
    fn from(s: &str) -> Self {
        UdfFailure(s.to_owned())
    }
}

/// A user-supplied override together with whatever provenance could be
/// captured for it.
#[derive(Clone)]
pub struct UserFunction {
    name: String,
    source: Option<String>,
    recipe: Option<OverrideRecipe>,
    func: OverrideFn,
}

impl UserFunction {
    pub fn new<F>(name: impl Into<String>, func: F) -> Self
    where
        F: Fn(&Value, &DefaultOp<'_>) -> std::result::Result<Value, UdfFailure> + Send + Sync + 'static,
    {
        UserFunction {
            name: name.into(),
            source: None,
            recipe: None,
            func: Arc::new(func),
        }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Captured source text, falling back to the function name.
    pub fn source_text(&self) -> &str {
        self.source.as_deref().unwrap_or(&self.name)
    }

    pub fn recipe(&self) -> Option<&OverrideRecipe> {
        self.recipe.as_ref()
    }

    /// Provenance parameters recorded in the action history.
    pub fn provenance(&self, action: &str) -> Value {
        let mut v = json!({ "name": action, "source_text": self.source_text() });
        if let Some(recipe) = &self.recipe {
            v["recipe"] = serde_json::to_value(recipe).expect("recipes are plain data");
        }
        v
    }
}

impl fmt::Debug for UserFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserFunction")
            .field("name", &self.name)
            .field("source", &self.source)
            .field("recipe", &self.recipe)
            .finish()
    }
}

/// Serializable overrides. These are what a remote notebook (or a replayed
/// log) can install, since closures cannot cross a process boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OverrideRecipe {
    /// Calls the default unchanged.
    Identity,
    /// Sorts `[[label, value], ...]` output by label.
    SortByLabel {
        #[serde(default)]
        descending: bool,
    },
    /// Sorts `[[label, value], ...]` output by value, largest first.
    SortByValue,
    /// Keeps the first `k` entries of a list output.
    TopK { k: usize },
    /// Reduces a sub-graph output to the focus node and its parents: sources
    /// of the focus node's incoming edges, optionally of one relation type.
    ParentOnly {
        #[serde(default)]
        rel_type: Option<String>,
    },
    /// Always raises with `message`.
    Fail { message: String },
}

impl OverrideRecipe {
    pub fn into_user_function(self) -> UserFunction {
        let source = serde_json::to_string(&self).expect("recipes are plain data");
        let name = match &self {
            OverrideRecipe::Identity => "identity",
            OverrideRecipe::SortByLabel { .. } => "sort_by_label",
            OverrideRecipe::SortByValue => "sort_by_value",
            OverrideRecipe::TopK { .. } => "top_k",
            OverrideRecipe::ParentOnly { .. } => "parent_only",
            OverrideRecipe::Fail { .. } => "fail",
        };
        let recipe = self.clone();
        let mut f = UserFunction::new(name, move |params, default| recipe.apply(params, default)).with_source(source);
        f.recipe = Some(self);
        f
    }

    fn apply(&self, params: &Value, default: &DefaultOp<'_>) -> std::result::Result<Value, UdfFailure> {
        match self {
            OverrideRecipe::Identity => default(params),
            OverrideRecipe::SortByLabel { descending } => {
                let mut entries = pairs(default(params)?)?;
                sort_entries(&mut entries, SortOrder::LabelAsc);
                if *descending {
                    entries.reverse();
                }
                Ok(json!(entries))
            }
            OverrideRecipe::SortByValue => {
                let mut entries = pairs(default(params)?)?;
                sort_entries(&mut entries, SortOrder::ValueDesc);
                Ok(json!(entries))
            }
            OverrideRecipe::TopK { k } => match default(params)? {
                Value::Array(mut items) => {
                    items.truncate(*k);
                    Ok(Value::Array(items))
                }
                _ => Err("top_k expects a list output".into()),
            },
            OverrideRecipe::ParentOnly { rel_type } => {
                let focus = params
                    .get("node_id")
                    .and_then(Value::as_str)
                    .ok_or("parent_only needs a `node_id` parameter")?
                    .to_owned();
                parent_only(default(params)?, &focus, rel_type.as_deref())
            }
            OverrideRecipe::Fail { message } => Err(UdfFailure(message.clone())),
        }
    }
}

fn pairs(v: Value) -> std::result::Result<Vec<(String, u64)>, UdfFailure> {
    serde_json::from_value(v).map_err(|e| UdfFailure(format!("expected [[label, value], ...]: {e}")))
}

fn parent_only(sub: Value, focus: &str, rel_type: Option<&str>) -> std::result::Result<Value, UdfFailure> {
    let edges = sub
        .get("edges")
        .and_then(Value::as_array)
        .ok_or("parent_only expects a sub-graph output")?;
    let kept_edges: Vec<&Value> = edges
        .iter()
        .filter(|e| e.get("dst").and_then(Value::as_str) == Some(focus))
        .filter(|e| rel_type.is_none_or(|r| e.get("type").and_then(Value::as_str) == Some(r)))
        .collect();
    let keep: Vec<&str> = kept_edges
        .iter()
        .filter_map(|e| e.get("src").and_then(Value::as_str))
        .chain(std::iter::once(focus))
        .collect();
    let nodes: Vec<&Value> = sub
        .get("nodes")
        .and_then(Value::as_array)
        .ok_or("parent_only expects a sub-graph output")?
        .iter()
        .filter(|n| n.get("id").and_then(Value::as_str).is_some_and(|id| keep.contains(&id)))
        .collect();
    Ok(json!({ "nodes": nodes, "edges": kept_edges }))
}

struct Entry {
    default_op: ActionFn,
    override_op: Option<UserFunction>,
}

/// Per-widget registry of shared actions.
#[derive(Default)]
pub struct SharedActions {
    entries: BTreeMap<String, Entry>,
}

impl fmt::Debug for SharedActions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(
                self.entries
                    .iter()
                    .map(|(k, e)| (k, e.override_op.as_ref().map(UserFunction::source_text))),
            )
            .finish()
    }
}

impl SharedActions {
    pub fn new() -> Self {
        SharedActions::default()
    }

    pub fn register_default<F>(&mut self, name: impl Into<String>, default_op: F) -> Result<()>
    where
        F: Fn(&Value) -> Result<Value> + Send + Sync + 'static,
    {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::contract(format!("shared action `{name}` already registered")));
        }
        self.entries.insert(
            name,
            Entry {
                default_op: Arc::new(default_op),
                override_op: None,
            },
        );
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn entry(&self, name: &str) -> Result<&Entry> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::not_found(format!("shared action `{name}`")))
    }

    fn entry_mut(&mut self, name: &str) -> Result<&mut Entry> {
        self.entries
            .get_mut(name)
            .ok_or_else(|| Error::not_found(format!("shared action `{name}`")))
    }

    pub fn override_of(&self, name: &str) -> Result<Option<&UserFunction>> {
        Ok(self.entry(name)?.override_op.as_ref())
    }

    /// Installs `func`, returning the override it replaced.
    pub fn set_override(&mut self, name: &str, func: UserFunction) -> Result<Option<UserFunction>> {
        Ok(self.entry_mut(name)?.override_op.replace(func))
    }

    /// Removes any override, returning it.
    pub fn clear_override(&mut self, name: &str) -> Result<Option<UserFunction>> {
        Ok(self.entry_mut(name)?.override_op.take())
    }

    /// Runs the override when one is installed, the default otherwise. A user
    /// function that fails or panics surfaces as [`Error::Udf`].
    pub fn invoke(&self, name: &str, params: &Value) -> Result<Value> {
        let entry = self.entry(name)?;
        let default_op = &entry.default_op;
        let Some(user) = &entry.override_op else {
            return default_op(params);
        };
        // An error from the default that the override merely passes on keeps
        // its own kind, so an identity wrapper behaves exactly like the default.
        let default_err: RefCell<Option<Error>> = RefCell::new(None);
        let default = |p: &Value| {
            default_op(p).map_err(|e| {
                let failure = UdfFailure::from(e.clone());
                *default_err.borrow_mut() = Some(e);
                failure
            })
        };
        let udf = |message: String| Error::Udf {
            action: name.to_owned(),
            message,
        };
        match catch_unwind(AssertUnwindSafe(|| (user.func)(params, &default))) {
            Ok(Ok(v)) => Ok(v),
            Ok(Err(UdfFailure(message))) => match default_err.into_inner() {
                Some(e) if e.to_string() == message => Err(e),
                _ => Err(udf(message)),
            },
            Err(panic) => {
                let message = panic
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| panic.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "user function panicked".to_owned());
                Err(udf(message))
            }
        }
    }
}
