//! Graph exploration widget: a schema view coordinated with per-node and
//! per-relation distribution charts.
//!
//! Selecting a node type on the schema recomputes both charts in a single
//! state. Selecting a bar filters neighbors of that node; selecting a
//! relation bar filters the selected type by that relation.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::actions::{SharedActions, UserFunction};
use crate::error::{Error, Result};
use crate::graph::{Direction, Distribution, PropertyGraph, SortOrder};
use crate::state::InteractionType;
use crate::widget::{
    ActionDispatch, ComponentKind, ComponentSpec, Handler, HandlerContext, Widget, WidgetDefinition, WidgetSpec,
};

use super::{direction_param, str_param, viewport_handlers};

pub const WIDGET_TYPE: &str = "explorer";
pub const SCHEMA: &str = "schema-graph";
pub const NODE_DIST: &str = "node-dist";
pub const REL_DIST: &str = "rel-dist";

pub const GET_SCHEMA: &str = "get_schema";
pub const GET_NODE_DISTRIBUTION: &str = "get_node_distribution";
pub const GET_RELATION_DISTRIBUTION: &str = "get_relation_distribution";

const INCOMING: &str = "(incoming)";
const OUTGOING: &str = "(outgoing)";

#[derive(Debug, Clone)]
pub struct ExplorerOptions {
    pub widget_id: String,
    /// Node type selected in state 0, if any.
    pub initial_node_type: Option<String>,
}

impl Default for ExplorerOptions {
    fn default() -> Self {
        ExplorerOptions {
            widget_id: WIDGET_TYPE.to_owned(),
            initial_node_type: None,
        }
    }
}

pub fn make_explorer(graph: Arc<PropertyGraph>) -> Result<Widget> {
    Widget::init(definition(graph, ExplorerOptions::default())?, vec![])
}

pub fn make_explorer_with(
    graph: Arc<PropertyGraph>,
    options: ExplorerOptions,
    init_overrides: Vec<(String, UserFunction)>,
) -> Result<Widget> {
    Widget::init(definition(graph, options)?, init_overrides)
}

/// `rel(incoming)` / `rel(outgoing)` label for the relation chart.
pub fn relation_label(rel_type: &str, direction: Direction) -> String {
    match direction {
        Direction::In => format!("{rel_type}{INCOMING}"),
        Direction::Out => format!("{rel_type}{OUTGOING}"),
        Direction::Both => rel_type.to_owned(),
    }
}

fn parse_relation_label(label: &str) -> (&str, Direction) {
    if let Some(rel) = label.strip_suffix(INCOMING) {
        (rel, Direction::In)
    } else if let Some(rel) = label.strip_suffix(OUTGOING) {
        (rel, Direction::Out)
    } else {
        (label, Direction::Both)
    }
}

fn register_actions(graph: &Arc<PropertyGraph>) -> Result<SharedActions> {
    let mut actions = SharedActions::new();

    let g = Arc::clone(graph);
    actions.register_default(GET_SCHEMA, move |_| {
        Ok(serde_json::to_value(g.compute_schema()).expect("schema is plain data"))
    })?;

    let g = Arc::clone(graph);
    actions.register_default(GET_NODE_DISTRIBUTION, move |p| {
        let node_type = p
            .get("node_type")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::contract("`node_type` is required"))?;
        let rel_type = p.get("rel_type").and_then(Value::as_str);
        let direction = p.get("direction").and_then(Value::as_str).map(str::parse).transpose()?;
        Ok(g.node_distribution(node_type, rel_type, direction)?.to_value())
    })?;

    // Without a direction the chart splits every relation into its incoming
    // and outgoing bars.
    let g = Arc::clone(graph);
    actions.register_default(GET_RELATION_DISTRIBUTION, move |p| {
        let node_type = p
            .get("node_type")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::contract("`node_type` is required"))?;
        match p.get("direction").and_then(Value::as_str) {
            Some(d) => Ok(g.relation_distribution(node_type, d.parse()?)?.to_value()),
            None => {
                let mut entries = Vec::new();
                for direction in [Direction::In, Direction::Out] {
                    entries.extend(
                        g.relation_distribution(node_type, direction)?
                            .entries
                            .into_iter()
                            .map(|(rel, n)| (relation_label(&rel, direction), n)),
                    );
                }
                Ok(Distribution::new(entries, SortOrder::ValueDesc).to_value())
            }
        }
    })?;
    Ok(actions)
}

fn empty_selection() -> Value {
    json!({ "node_type": null, "dist_params": {}, "node_id": null, "relation": null })
}

/// Recomputes the coordinated charts for the selection in `payload`.
fn fill_charts(actions: &SharedActions, payload: &mut Value) -> Result<()> {
    let selection = &payload["selection"];
    match selection["node_type"].as_str() {
        Some(node_type) => {
            let mut params = selection["dist_params"].clone();
            params["node_type"] = json!(node_type);
            let nodes = actions.invoke(GET_NODE_DISTRIBUTION, &params)?;
            let rels = actions.invoke(GET_RELATION_DISTRIBUTION, &json!({ "node_type": node_type }))?;
            payload["node_distribution"] = nodes;
            payload["relation_distribution"] = rels;
        }
        None => {
            payload["node_distribution"] = json!([]);
            payload["relation_distribution"] = json!([]);
        }
    }
    Ok(())
}

fn select_node_type(ctx: &HandlerContext<'_>, d: &ActionDispatch) -> Result<Value> {
    let node_type =
        str_param(d, "node_type").ok_or_else(|| Error::contract("select on the schema needs a `node_type`"))?;
    let mut dist_params = json!({});
    if let Some(rel) = d.params.get("rel_type").filter(|v| !v.is_null()) {
        dist_params["rel_type"] = rel.clone();
    }
    if let Some(dir) = d.params.get("direction").filter(|v| !v.is_null()) {
        dist_params["direction"] = dir.clone();
    }
    let mut payload = ctx.current.clone();
    payload["selection"] = empty_selection();
    payload["selection"]["node_type"] = json!(node_type);
    payload["selection"]["dist_params"] = dist_params;
    payload["filtered_nodes"] = json!([]);
    fill_charts(ctx.actions, &mut payload)?;
    Ok(payload)
}

fn clear_selection(ctx: &HandlerContext<'_>, _: &ActionDispatch) -> Result<Value> {
    let mut payload = ctx.current.clone();
    payload["selection"] = empty_selection();
    payload["filtered_nodes"] = json!([]);
    fill_charts(ctx.actions, &mut payload)?;
    Ok(payload)
}

fn select_node(graph: &PropertyGraph, ctx: &HandlerContext<'_>, d: &ActionDispatch) -> Result<Value> {
    let node_id = match str_param(d, "node_id") {
        Some(id) => graph
            .node(id)
            .ok_or_else(|| Error::not_found(format!("node `{id}`")))?
            .id
            .clone(),
        None => {
            let label =
                str_param(d, "label").ok_or_else(|| Error::contract("bar select needs a `label` or `node_id`"))?;
            let node_type = ctx.current["selection"]["node_type"]
                .as_str()
                .ok_or_else(|| Error::contract("select a node type before selecting a bar"))?;
            graph
                .instance_labels(node_type)?
                .into_iter()
                .find(|(l, _)| l == label)
                .map(|(_, n)| n.id.clone())
                .ok_or_else(|| Error::not_found(format!("bar `{label}`")))?
        }
    };
    let rel_type = d.params.get("rel_type").and_then(Value::as_str);
    let direction = direction_param(d)?.unwrap_or(Direction::Both);
    let neighbors = graph.neighbors(&node_id, rel_type, direction)?;

    let mut payload = ctx.current.clone();
    payload["selection"]["node_id"] = json!(node_id);
    payload["selection"]["relation"] = json!({ "rel_type": rel_type, "direction": direction });
    payload["filtered_nodes"] = json!(neighbors);
    Ok(payload)
}

fn select_relation(graph: &PropertyGraph, ctx: &HandlerContext<'_>, d: &ActionDispatch) -> Result<Value> {
    let node_type = ctx.current["selection"]["node_type"]
        .as_str()
        .ok_or_else(|| Error::contract("select a node type before selecting a relation"))?;
    let (rel_type, direction) = match (str_param(d, "rel_type"), str_param(d, "label")) {
        (Some(rel), _) => (rel, direction_param(d)?.unwrap_or(Direction::Both)),
        (None, Some(label)) => parse_relation_label(label),
        (None, None) => return Err(Error::contract("relation select needs a `label` or `rel_type`")),
    };
    let ids = graph.filter_by_relation(node_type, rel_type, direction)?;
    let mut payload = ctx.current.clone();
    payload["selection"]["node_id"] = Value::Null;
    payload["selection"]["relation"] = json!({ "rel_type": rel_type, "direction": direction });
    payload["filtered_nodes"] = json!(ids);
    Ok(payload)
}

pub fn definition(graph: Arc<PropertyGraph>, options: ExplorerOptions) -> Result<WidgetDefinition> {
    if let Some(t) = &options.initial_node_type {
        if !graph.has_node_type(t) {
            return Err(Error::not_found(format!("node type `{t}`")));
        }
    }
    let actions = register_actions(&graph)?;

    let mut handlers: BTreeMap<String, Handler> = BTreeMap::new();
    handlers.insert("select_node_type".into(), Arc::new(select_node_type));
    handlers.insert("clear_selection".into(), Arc::new(clear_selection));
    let g = Arc::clone(&graph);
    handlers.insert(
        "select_node".into(),
        Arc::new(move |ctx: &HandlerContext<'_>, d: &ActionDispatch| select_node(&g, ctx, d)),
    );
    let g = Arc::clone(&graph);
    handlers.insert(
        "filter_by_relation".into(),
        Arc::new(move |ctx: &HandlerContext<'_>, d: &ActionDispatch| select_relation(&g, ctx, d)),
    );
    handlers.extend(viewport_handlers(SCHEMA));

    let components = vec![
        ComponentSpec::new(SCHEMA, ComponentKind::Graph, "Graph schema", "schema")
            .bind(InteractionType::Select, "select_node_type")
            .bind(InteractionType::Deselect, "clear_selection")
            .bind(InteractionType::Pan, "pan")
            .bind(InteractionType::Zoom, "zoom"),
        ComponentSpec::new(
            NODE_DIST,
            ComponentKind::BarChart,
            "Node distribution",
            "node_distribution",
        )
        .bind(InteractionType::Select, "select_node"),
        ComponentSpec::new(
            REL_DIST,
            ComponentKind::BarChart,
            "Relation distribution",
            "relation_distribution",
        )
        .bind(InteractionType::Select, "filter_by_relation"),
    ];

    let initial_type = options.initial_node_type.clone();
    let initial = Arc::new(move |ctx: &HandlerContext<'_>| {
        let mut payload = json!({
            "schema": ctx.actions.invoke(GET_SCHEMA, &json!({}))?,
            "selection": empty_selection(),
            "node_distribution": [],
            "relation_distribution": [],
            "filtered_nodes": [],
            "viewport": { (SCHEMA): super::default_viewport() },
        });
        if let Some(t) = &initial_type {
            payload["selection"]["node_type"] = json!(t);
            fill_charts(ctx.actions, &mut payload)?;
        }
        Ok(payload)
    });
    let recompute = Arc::new(|ctx: &HandlerContext<'_>| {
        let mut payload = ctx.current.clone();
        payload["schema"] = ctx.actions.invoke(GET_SCHEMA, &json!({}))?;
        fill_charts(ctx.actions, &mut payload)?;
        Ok(payload)
    });

    Ok(WidgetDefinition {
        spec: WidgetSpec {
            widget_id: options.widget_id,
            widget_type: WIDGET_TYPE.into(),
            components,
            shared_actions: vec![
                GET_SCHEMA.into(),
                GET_NODE_DISTRIBUTION.into(),
                GET_RELATION_DISTRIBUTION.into(),
            ],
        },
        actions,
        handlers,
        initial,
        recompute,
    })
}

/// Dispatch selecting `node_type` on the schema view.
pub fn select_type(node_type: &str) -> ActionDispatch {
    ActionDispatch::new(
        InteractionType::Select,
        SCHEMA,
        crate::state::Element::with_datum(format!("{SCHEMA}/{node_type}"), json!({ "node_type": node_type })),
        json!({}),
    )
}
