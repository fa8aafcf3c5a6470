//! Stateful widget lifecycle: component declaration, initialization through
//! shared actions, declarative dispatch routing, history view and export.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::actions::{SharedActions, UserFunction};
use crate::error::{Error, Result};
use crate::state::{
    ActionContext, ActionId, ActionJournal, ActionRecord, DataState, Element, ExportDocument, InteractionType, StateId,
    StateStore,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Graph,
    BarChart,
    Table,
    DecisionTable,
    TextPanel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub component_id: String,
    pub kind: ComponentKind,
    pub title: String,
    /// interaction type → handler name
    pub bindings: BTreeMap<InteractionType, String>,
    /// Top-level payload key this component renders.
    pub data_key: String,
}

impl ComponentSpec {
    pub fn new(
        component_id: impl Into<String>,
        kind: ComponentKind,
        title: impl Into<String>,
        data_key: impl Into<String>,
    ) -> Self {
        ComponentSpec {
            component_id: component_id.into(),
            kind,
            title: title.into(),
            bindings: BTreeMap::new(),
            data_key: data_key.into(),
        }
    }

    pub fn bind(mut self, interaction: InteractionType, handler: impl Into<String>) -> Self {
        self.bindings.insert(interaction, handler.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidgetSpec {
    pub widget_id: String,
    pub widget_type: String,
    pub components: Vec<ComponentSpec>,
    pub shared_actions: Vec<String>,
}

/// Body of the `render_spec` message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub widget_type: String,
    pub components: Vec<ComponentSpec>,
}

/// One interaction sent by a frontend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDispatch {
    pub interaction_type: InteractionType,
    pub component_id: String,
    pub element: Element,
    #[serde(default)]
    pub params: Value,
}

impl ActionDispatch {
    pub fn new(
        interaction_type: InteractionType,
        component_id: impl Into<String>,
        element: Element,
        params: Value,
    ) -> Self {
        ActionDispatch {
            interaction_type,
            component_id: component_id.into(),
            element,
            params,
        }
    }
}

/// What a handler sees: the shared actions (so overrides apply) and the
/// payload of the current state.
pub struct HandlerContext<'a> {
    pub actions: &'a SharedActions,
    pub current: &'a Value,
}

pub type Handler = Arc<dyn Fn(&HandlerContext<'_>, &ActionDispatch) -> Result<Value> + Send + Sync>;
pub type PayloadBuilder = Arc<dyn Fn(&HandlerContext<'_>) -> Result<Value> + Send + Sync>;

/// Everything needed to instantiate a widget type.
pub struct WidgetDefinition {
    pub spec: WidgetSpec,
    pub actions: SharedActions,
    pub handlers: BTreeMap<String, Handler>,
    /// Builds the state 0 payload (`current` is `null`).
    pub initial: PayloadBuilder,
    /// Rebuilds the current payload after an override changed.
    pub recompute: PayloadBuilder,
}

impl WidgetDefinition {
    fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for c in &self.spec.components {
            if !ids.insert(c.component_id.as_str()) {
                return Err(Error::contract(format!("duplicate component id `{}`", c.component_id)));
            }
            for (interaction, handler) in &c.bindings {
                if !interaction.is_dispatchable() {
                    return Err(Error::contract(format!(
                        "`{interaction}` cannot be bound on `{}`",
                        c.component_id
                    )));
                }
                if !self.handlers.contains_key(handler) {
                    return Err(Error::contract(format!(
                        "component `{}` binds unknown handler `{handler}`",
                        c.component_id
                    )));
                }
            }
        }
        for name in &self.spec.shared_actions {
            if !self.actions.contains(name) {
                return Err(Error::contract(format!(
                    "shared action `{name}` declared but not registered"
                )));
            }
        }
        Ok(())
    }
}

/// One row of the history panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub action_id: ActionId,
    pub interaction_type: InteractionType,
    pub component_id: String,
    pub summary: String,
    pub state_id: StateId,
    pub restorable: bool,
}

fn summarize(r: &ActionRecord) -> String {
    let name = || r.params.get("name").and_then(Value::as_str).unwrap_or("?");
    match r.interaction_type {
        InteractionType::Init => format!("initialized {}", r.component_id),
        InteractionType::Restore => format!(
            "restored state {}",
            r.params.get("restored_from").unwrap_or(&Value::Null)
        ),
        InteractionType::Override => format!("overrode `{}`", name()),
        InteractionType::ClearOverride => format!("cleared override of `{}`", name()),
        t => {
            let target = match &r.element.datum {
                Some(Value::Object(m)) => m
                    .values()
                    .next()
                    .map(|v| v.as_str().map(str::to_owned).unwrap_or_else(|| v.to_string())),
                Some(Value::String(s)) => Some(s.clone()),
                Some(other) if !other.is_null() => Some(other.to_string()),
                _ => None,
            };
            match target {
                Some(t_) => format!("{t} {t_} on {}", r.component_id),
                None => format!("{t} on {}", r.component_id),
            }
        }
    }
}

pub struct Widget {
    spec: WidgetSpec,
    actions: SharedActions,
    handlers: BTreeMap<String, Handler>,
    recompute: PayloadBuilder,
    store: StateStore,
}

impl fmt::Debug for Widget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Widget")
            .field("widget_id", &self.spec.widget_id)
            .field("widget_type", &self.spec.widget_type)
            .field("actions", &self.actions)
            .field("history_len", &self.store.history_len())
            .finish()
    }
}

impl Widget {
    /// Instantiates a widget. `init_overrides` are installed before state 0
    /// is computed and recorded in the init record's params.
    pub fn init(definition: WidgetDefinition, init_overrides: Vec<(String, UserFunction)>) -> Result<Self> {
        Widget::init_with_journal(definition, init_overrides, None)
    }

    pub fn init_with_journal(
        definition: WidgetDefinition,
        init_overrides: Vec<(String, UserFunction)>,
        journal: Option<ActionJournal>,
    ) -> Result<Self> {
        definition.validate()?;
        let WidgetDefinition {
            spec,
            mut actions,
            handlers,
            initial,
            recompute,
        } = definition;

        let mut provenance = Vec::with_capacity(init_overrides.len());
        for (name, func) in init_overrides {
            provenance.push(func.provenance(&name));
            actions.set_override(&name, func)?;
        }

        let payload = initial(&HandlerContext {
            actions: &actions,
            current: &Value::Null,
        })?;

        let mut store = StateStore::new(spec.widget_id.clone(), spec.widget_type.clone());
        if let Some(journal) = journal {
            store.set_journal(journal);
        }
        let context = ActionContext::new(
            InteractionType::Init,
            "widget",
            Element::new(spec.widget_id.clone()),
            json!({
                "widget_type": spec.widget_type,
                "components": spec.components.iter().map(|c| &c.component_id).collect::<Vec<_>>(),
                "shared_actions": spec.shared_actions,
                "init_overrides": provenance,
            }),
        );
        store.record_action(context, &payload)?;

        Ok(Widget {
            spec,
            actions,
            handlers,
            recompute,
            store,
        })
    }

    pub fn widget_id(&self) -> &str {
        &self.spec.widget_id
    }

    pub fn widget_type(&self) -> &str {
        &self.spec.widget_type
    }

    pub fn spec(&self) -> &WidgetSpec {
        &self.spec
    }

    pub fn render_spec(&self) -> RenderSpec {
        RenderSpec {
            widget_type: self.spec.widget_type.clone(),
            components: self.spec.components.clone(),
        }
    }

    pub fn component(&self, component_id: &str) -> Option<&ComponentSpec> {
        self.spec.components.iter().find(|c| c.component_id == component_id)
    }

    pub fn actions(&self) -> &SharedActions {
        &self.actions
    }

    pub fn store(&self) -> &StateStore {
        &self.store
    }

    pub fn history_len(&self) -> usize {
        self.store.history_len()
    }

    pub fn current_state_id(&self) -> StateId {
        self.store
            .current_state_id()
            .expect("an initialized widget has state 0")
    }

    pub fn current_payload(&self) -> &Value {
        self.store.current_payload().expect("an initialized widget has state 0")
    }

    pub fn get_state(&self, state_id: StateId) -> Result<DataState> {
        self.store.get_state(state_id)
    }

    pub fn history_list(&self, range: Option<(ActionId, ActionId)>) -> Result<Vec<ActionRecord>> {
        self.store.history_list(range)
    }

    /// Routes a frontend interaction to its bound handler and records the
    /// resulting state. Nothing changes on failure.
    pub fn handle_action(&mut self, dispatch: &ActionDispatch) -> Result<DataState> {
        if !dispatch.interaction_type.is_dispatchable() {
            return Err(Error::contract(format!(
                "`{}` cannot be dispatched by a frontend",
                dispatch.interaction_type
            )));
        }
        let component = self
            .component(&dispatch.component_id)
            .ok_or_else(|| Error::contract(format!("no component `{}`", dispatch.component_id)))?;
        let handler_name = component.bindings.get(&dispatch.interaction_type).ok_or_else(|| {
            Error::contract(format!(
                "`{}` is not bound on `{}`",
                dispatch.interaction_type, dispatch.component_id
            ))
        })?;
        let handler = self.handlers.get(handler_name).expect("bindings are validated at init");
        let payload = handler(
            &HandlerContext {
                actions: &self.actions,
                current: self.current_payload(),
            },
            dispatch,
        )?;
        let context = ActionContext::new(
            dispatch.interaction_type,
            dispatch.component_id.clone(),
            dispatch.element.clone(),
            dispatch.params.clone(),
        );
        self.store.record_action(context, &payload).map(|(_, state)| state)
    }

    pub fn restore(&mut self, state_id: StateId) -> Result<DataState> {
        self.store.restore(state_id)
    }

    /// Installs a runtime override, recomputes the components and records
    /// both in one new state. If recomputation fails the previous override
    /// is put back.
    pub fn set_override(&mut self, name: &str, func: UserFunction) -> Result<DataState> {
        let provenance = func.provenance(name);
        let previous = self.actions.set_override(name, func)?;
        let context = ActionContext::new(
            InteractionType::Override,
            "shared_actions",
            Element::new(format!("shared_actions/{name}")),
            provenance,
        );
        self.recompute_and_record(name, context, previous)
    }

    /// Removes a runtime override. Clearing when none is installed still
    /// records a history entry.
    pub fn clear_override(&mut self, name: &str) -> Result<DataState> {
        let previous = self.actions.clear_override(name)?;
        let context = ActionContext::new(
            InteractionType::ClearOverride,
            "shared_actions",
            Element::new(format!("shared_actions/{name}")),
            json!({ "name": name }),
        );
        self.recompute_and_record(name, context, previous)
    }

    fn recompute_and_record(
        &mut self,
        name: &str,
        context: ActionContext,
        previous: Option<UserFunction>,
    ) -> Result<DataState> {
        let outcome = (self.recompute)(&HandlerContext {
            actions: &self.actions,
            current: self.current_payload(),
        })
        .and_then(|payload| self.store.record_action(context, &payload));
        match outcome {
            Ok((_, state)) => Ok(state),
            Err(e) => {
                let reverted = match previous {
                    Some(f) => self.actions.set_override(name, f),
                    None => self.actions.clear_override(name),
                };
                reverted.expect("name was just resolved");
                Err(e)
            }
        }
    }

    pub fn history_view_model(&self) -> Vec<HistoryRow> {
        self.store
            .records()
            .iter()
            .map(|r| HistoryRow {
                action_id: r.action_id,
                interaction_type: r.interaction_type,
                component_id: r.component_id.clone(),
                summary: summarize(r),
                state_id: r.result_state_id,
                restorable: true,
            })
            .collect()
    }

    pub fn export_data(&self, state_id: Option<StateId>) -> Result<ExportDocument> {
        self.store.export_state(state_id)
    }
}
