//! Alignment verification widget: a candidate table with merge decisions,
//! the corpus context of the selected candidate and the sub-graph around its
//! graph entity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::actions::{SharedActions, UserFunction};
use crate::error::{Error, Result};
use crate::graph::{Direction, PropertyGraph};
use crate::state::{DataState, Element, InteractionType};
use crate::widget::{
    ActionDispatch, ComponentKind, ComponentSpec, Handler, HandlerContext, Widget, WidgetDefinition, WidgetSpec,
};

use super::{str_param, viewport_handlers};

pub const WIDGET_TYPE: &str = "alignment";
pub const CANDIDATES: &str = "candidates";
pub const CONTEXT: &str = "context";
pub const SUBGRAPH: &str = "subgraph";
pub const GET_SUBGRAPH: &str = "get_subgraph";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    #[default]
    Undecided,
    Insert,
    Ignore,
    Defer,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Undecided => "undecided",
            Decision::Insert => "insert",
            Decision::Ignore => "ignore",
            Decision::Defer => "defer",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "undecided" => Ok(Decision::Undecided),
            "insert" => Ok(Decision::Insert),
            "ignore" => Ok(Decision::Ignore),
            "defer" => Ok(Decision::Defer),
            other => Err(Error::contract(format!(
                "decision must be one of insert, ignore, defer, undecided; got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentCandidate {
    pub candidate_id: String,
    pub corpus_term: String,
    pub corpus_descriptions: Vec<String>,
    pub graph_entity_id: String,
    #[serde(default)]
    pub decision: Decision,
}

/// Parses a candidates file: a JSON array of candidate objects. Any
/// `decision` field on input is ignored.
pub fn candidates_from_json_str(text: &str) -> Result<Vec<AlignmentCandidate>> {
    #[derive(Deserialize)]
    struct Input {
        candidate_id: String,
        corpus_term: String,
        corpus_descriptions: Vec<String>,
        graph_entity_id: String,
    }
    let rows: Vec<Input> =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("candidates document: {e}")))?;
    Ok(rows
        .into_iter()
        .map(|r| AlignmentCandidate {
            candidate_id: r.candidate_id,
            corpus_term: r.corpus_term,
            corpus_descriptions: r.corpus_descriptions,
            graph_entity_id: r.graph_entity_id,
            decision: Decision::Undecided,
        })
        .collect())
}

pub fn load_candidates(path: impl AsRef<Path>) -> Result<Vec<AlignmentCandidate>> {
    let text =
        std::fs::read_to_string(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    candidates_from_json_str(&text)
}

#[derive(Debug, Clone)]
pub struct AlignmentOptions {
    pub widget_id: String,
    pub hops: u32,
    pub direction: Direction,
}

impl Default for AlignmentOptions {
    fn default() -> Self {
        AlignmentOptions {
            widget_id: WIDGET_TYPE.to_owned(),
            hops: 1,
            direction: Direction::Both,
        }
    }
}

pub fn make_alignment_widget(graph: Arc<PropertyGraph>, candidates: Vec<AlignmentCandidate>) -> Result<Widget> {
    Widget::init(definition(graph, candidates, AlignmentOptions::default())?, vec![])
}

pub fn make_alignment_widget_with(
    graph: Arc<PropertyGraph>,
    candidates: Vec<AlignmentCandidate>,
    options: AlignmentOptions,
    init_overrides: Vec<(String, UserFunction)>,
) -> Result<Widget> {
    Widget::init(definition(graph, candidates, options)?, init_overrides)
}

/// Records a merge decision for one candidate.
pub fn set_decision(widget: &mut Widget, candidate_id: &str, decision: &str) -> Result<DataState> {
    widget.handle_action(&decision_dispatch(candidate_id, decision))
}

pub fn decision_dispatch(candidate_id: &str, decision: &str) -> ActionDispatch {
    ActionDispatch::new(
        InteractionType::SetDecision,
        CANDIDATES,
        Element::with_datum(
            format!("{CANDIDATES}/{candidate_id}/decision"),
            json!({ "candidate_id": candidate_id }),
        ),
        json!({ "candidate_id": candidate_id, "decision": decision }),
    )
}

pub fn select_candidate_dispatch(candidate_id: &str) -> ActionDispatch {
    ActionDispatch::new(
        InteractionType::Select,
        CANDIDATES,
        Element::with_datum(
            format!("{CANDIDATES}/{candidate_id}"),
            json!({ "candidate_id": candidate_id }),
        ),
        json!({}),
    )
}

struct Catalog {
    graph: Arc<PropertyGraph>,
    candidates: Vec<AlignmentCandidate>,
    hops: u32,
    direction: Direction,
}

impl Catalog {
    fn get(&self, candidate_id: &str) -> Result<&AlignmentCandidate> {
        self.candidates
            .iter()
            .find(|c| c.candidate_id == candidate_id)
            .ok_or_else(|| Error::not_found(format!("candidate `{candidate_id}`")))
    }

    fn subgraph_params(&self, candidate: &AlignmentCandidate) -> Value {
        json!({
            "node_id": candidate.graph_entity_id,
            "hops": self.hops,
            "direction": self.direction,
        })
    }

    fn rows(&self) -> Value {
        self.candidates
            .iter()
            .map(|c| {
                json!({
                    "candidate_id": c.candidate_id,
                    "corpus_term": c.corpus_term,
                    "graph_entity_id": c.graph_entity_id,
                    "graph_entity_title": self.graph.node(&c.graph_entity_id).map(|n| n.title.as_str()),
                    "decision": c.decision,
                })
            })
            .collect()
    }

    fn decisions(&self) -> Value {
        self.candidates
            .iter()
            .map(|c| (c.candidate_id.clone(), json!(c.decision)))
            .collect::<serde_json::Map<_, _>>()
            .into()
    }
}

fn select_candidate(cat: &Catalog, ctx: &HandlerContext<'_>, d: &ActionDispatch) -> Result<Value> {
    let id = str_param(d, "candidate_id").ok_or_else(|| Error::contract("select needs a `candidate_id`"))?;
    let candidate = cat.get(id)?;
    let sub = ctx.actions.invoke(GET_SUBGRAPH, &cat.subgraph_params(candidate))?;
    let mut payload = ctx.current.clone();
    payload["selected_candidate"] = json!(id);
    payload["context"] = json!({
        "candidate_id": candidate.candidate_id,
        "corpus_term": candidate.corpus_term,
        "descriptions": candidate.corpus_descriptions,
    });
    payload["subgraph"] = sub;
    Ok(payload)
}

fn apply_decision(cat: &Catalog, ctx: &HandlerContext<'_>, d: &ActionDispatch) -> Result<Value> {
    let id = str_param(d, "candidate_id").ok_or_else(|| Error::contract("set_decision needs a `candidate_id`"))?;
    cat.get(id)?;
    let decision: Decision = d
        .params
        .get("decision")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::contract("set_decision needs a string `decision`"))?
        .parse()?;
    let mut payload = ctx.current.clone();
    payload["decisions"][id] = json!(decision);
    if let Some(rows) = payload["candidates"].as_array_mut() {
        for row in rows.iter_mut().filter(|r| r["candidate_id"] == id) {
            row["decision"] = json!(decision);
        }
    }
    Ok(payload)
}

pub fn definition(
    graph: Arc<PropertyGraph>,
    candidates: Vec<AlignmentCandidate>,
    options: AlignmentOptions,
) -> Result<WidgetDefinition> {
    let mut seen = BTreeSet::new();
    for c in &candidates {
        if !seen.insert(c.candidate_id.as_str()) {
            return Err(Error::Format(format!("duplicate candidate id `{}`", c.candidate_id)));
        }
        if graph.node(&c.graph_entity_id).is_none() {
            return Err(Error::Format(format!(
                "candidate `{}` references missing graph entity `{}`",
                c.candidate_id, c.graph_entity_id
            )));
        }
    }
    if options.hops == 0 {
        return Err(Error::contract("sub-graph hops must be at least 1"));
    }

    let mut actions = SharedActions::new();
    let g = Arc::clone(&graph);
    let (default_hops, default_direction) = (options.hops, options.direction);
    actions.register_default(GET_SUBGRAPH, move |p| {
        let node_id = p
            .get("node_id")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::contract("`node_id` is required"))?;
        let hops = match p.get("hops") {
            None | Some(Value::Null) => default_hops,
            Some(v) => v
                .as_u64()
                .and_then(|h| u32::try_from(h).ok())
                .ok_or_else(|| Error::contract("`hops` must be a positive integer"))?,
        };
        let direction = match p.get("direction").and_then(Value::as_str) {
            Some(d) => d.parse()?,
            None => default_direction,
        };
        Ok(serde_json::to_value(g.subgraph(node_id, hops, direction)?).expect("graphs are plain data"))
    })?;

    let catalog = Arc::new(Catalog {
        graph,
        candidates,
        hops: options.hops,
        direction: options.direction,
    });

    let mut handlers: BTreeMap<String, Handler> = BTreeMap::new();
    let cat = Arc::clone(&catalog);
    handlers.insert(
        "select_candidate".into(),
        Arc::new(move |ctx: &HandlerContext<'_>, d: &ActionDispatch| select_candidate(&cat, ctx, d)),
    );
    let cat = Arc::clone(&catalog);
    handlers.insert(
        "set_decision".into(),
        Arc::new(move |ctx: &HandlerContext<'_>, d: &ActionDispatch| apply_decision(&cat, ctx, d)),
    );
    handlers.extend(viewport_handlers(SUBGRAPH));

    let components = vec![
        ComponentSpec::new(
            CANDIDATES,
            ComponentKind::DecisionTable,
            "Alignment candidates",
            "candidates",
        )
        .bind(InteractionType::Select, "select_candidate")
        .bind(InteractionType::SetDecision, "set_decision"),
        ComponentSpec::new(CONTEXT, ComponentKind::Table, "Corpus context", "context"),
        ComponentSpec::new(SUBGRAPH, ComponentKind::Graph, "Sub-graph", "subgraph")
            .bind(InteractionType::Pan, "pan")
            .bind(InteractionType::Zoom, "zoom"),
    ];

    let cat = Arc::clone(&catalog);
    let initial = Arc::new(move |_: &HandlerContext<'_>| {
        Ok(json!({
            "candidates": cat.rows(),
            "decisions": cat.decisions(),
            "selected_candidate": null,
            "context": null,
            "subgraph": { "nodes": [], "edges": [] },
            "viewport": { (SUBGRAPH): super::default_viewport() },
        }))
    });
    let cat = Arc::clone(&catalog);
    let recompute = Arc::new(move |ctx: &HandlerContext<'_>| {
        let mut payload = ctx.current.clone();
        if let Some(id) = ctx.current["selected_candidate"].as_str() {
            payload["subgraph"] = ctx.actions.invoke(GET_SUBGRAPH, &cat.subgraph_params(cat.get(id)?))?;
        }
        Ok(payload)
    });

    Ok(WidgetDefinition {
        spec: WidgetSpec {
            widget_id: options.widget_id,
            widget_type: WIDGET_TYPE.into(),
            components,
            shared_actions: vec![GET_SUBGRAPH.into()],
        },
        actions,
        handlers,
        initial,
        recompute,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::OverrideRecipe;
    use crate::fixtures::g0;
    use crate::state::StateId;

    fn candidates() -> Vec<AlignmentCandidate> {
        crate::fixtures::g0_candidates()
    }

    fn widget() -> Widget {
        make_alignment_widget(Arc::new(g0()), candidates()).unwrap()
    }

    fn node_ids(sub: &Value) -> BTreeSet<String> {
        sub["nodes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|n| n["id"].as_str().unwrap().to_owned())
            .collect()
    }

    #[test]
    fn all_candidates_start_undecided() {
        let w = widget();
        assert_eq!(
            w.current_payload()["decisions"],
            json!({"c1": "undecided", "c2": "undecided", "c3": "undecided"})
        );
    }

    #[test]
    fn selecting_a_candidate_shows_context_and_subgraph() {
        let mut w = widget();
        let s = w.handle_action(&select_candidate_dispatch("c1")).unwrap();
        assert_eq!(
            node_ids(&s.payload["subgraph"]),
            ["n1", "n2", "n3"].map(String::from).into()
        );
        assert_eq!(
            s.payload["context"]["descriptions"],
            json!(["the art of preparing food", "cooking skills"])
        );
    }

    #[test]
    fn parent_only_override_shrinks_the_subgraph() {
        let mut w = widget();
        w.handle_action(&select_candidate_dispatch("c2")).unwrap();
        let default_nodes = node_ids(&w.current_payload()["subgraph"]);
        assert_eq!(default_nodes, ["n1", "n3"].map(String::from).into());

        let s = w
            .set_override(
                GET_SUBGRAPH,
                OverrideRecipe::ParentOnly { rel_type: None }.into_user_function(),
            )
            .unwrap();
        // n1 has no parents, so only the node itself is left
        assert_eq!(node_ids(&s.payload["subgraph"]), ["n1"].map(String::from).into());

        let s = w.handle_action(&select_candidate_dispatch("c3")).unwrap();
        let filtered = node_ids(&s.payload["subgraph"]);
        assert_eq!(filtered, ["n2", "n4"].map(String::from).into());
    }

    #[test]
    fn decisions_and_restore() {
        let mut w = widget();
        let s = set_decision(&mut w, "c1", "insert").unwrap();
        assert_eq!(s.payload["decisions"]["c1"], "insert");
        assert_eq!(s.payload["candidates"][0]["decision"], "insert");

        assert!(matches!(set_decision(&mut w, "c1", "maybe"), Err(Error::Contract(_))));
        assert!(matches!(set_decision(&mut w, "c9", "insert"), Err(Error::NotFound(_))));
        assert_eq!(w.history_len(), 2);

        w.restore(StateId(0)).unwrap();
        let export = w.export_data(None).unwrap();
        assert_eq!(export.payload["decisions"]["c1"], "undecided");
    }

    #[test]
    fn invalid_candidates_are_rejected() {
        let mut bad = candidates();
        bad[0].graph_entity_id = "n9".into();
        assert!(matches!(
            make_alignment_widget(Arc::new(g0()), bad),
            Err(Error::Format(_))
        ));
        let mut dup = candidates();
        dup[1].candidate_id = "c1".into();
        assert!(matches!(
            make_alignment_widget(Arc::new(g0()), dup),
            Err(Error::Format(_))
        ));
        assert!(matches!(candidates_from_json_str("{}"), Err(Error::Format(_))));
    }
}
