//! Test support: seeded random graphs, random interaction sequences and a
//! brute-force oracle for the graph operations.
//!
//! The oracle works from the raw node and edge lists only. It never touches
//! the adjacency index that [`PropertyGraph`] builds, so agreement between the
//! two is meaningful.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

use crate::actions::OverrideRecipe;
use crate::demo::explorer::{self, NODE_DIST, REL_DIST, SCHEMA};
use crate::graph::{Direction, Edge, Node, PropertyGraph};
use crate::state::{Element, InteractionType, StateId};
use crate::widget::{ActionDispatch, Widget};

pub const NODE_TYPES: [&str; 4] = ["Occupation", "Skill", "Tool", "Task"];
pub const REL_TYPES: [&str; 3] = ["requires", "uses", "part_of"];
pub const DIRECTIONS: [Direction; 3] = [Direction::In, Direction::Out, Direction::Both];

/// Random graph with at most `max_nodes` nodes and `max_edges` edges.
/// Titles collide now and then, and self-loops and parallel edges occur.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize, max_edges: usize) -> PropertyGraph {
    let n = rng.gen_range(0..=max_nodes);
    let type_count = rng.gen_range(1..=NODE_TYPES.len());
    let nodes: Vec<Node> = (0..n)
        .map(|i| {
            let title = if rng.gen_bool(0.1) {
                format!("dup{}", rng.gen_range(0..3))
            } else {
                format!("t{i:03}")
            };
            Node::new(format!("n{i}"), NODE_TYPES[rng.gen_range(0..type_count)], title)
        })
        .collect();
    let m = if n == 0 { 0 } else { rng.gen_range(0..=max_edges) };
    let edges = (0..m)
        .map(|_| {
            Edge::new(
                format!("n{}", rng.gen_range(0..n)),
                format!("n{}", rng.gen_range(0..n)),
                *REL_TYPES.choose(rng).expect("non-empty"),
            )
        })
        .collect();
    PropertyGraph::new(nodes, edges).expect("generated graphs are valid")
}

/// Brute-force reference implementations over plain node and edge lists.
pub struct Oracle<'a> {
    nodes: &'a [Node],
    edges: &'a [Edge],
}

impl<'a> Oracle<'a> {
    pub fn new(graph: &'a PropertyGraph) -> Self {
        Oracle {
            nodes: graph.nodes(),
            edges: graph.edges(),
        }
    }

    fn type_of(&self, id: &str) -> &str {
        &self
            .nodes
            .iter()
            .find(|n| n.id == id)
            .expect("endpoint exists")
            .node_type
    }

    pub fn type_nodes(&self) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        for n in self.nodes {
            *out.entry(n.node_type.clone()).or_insert(0) += 1;
        }
        out
    }

    pub fn type_edges(&self) -> BTreeMap<(String, String, String), u64> {
        let mut out = BTreeMap::new();
        for e in self.edges {
            let key = (
                self.type_of(&e.src).to_owned(),
                e.rel_type.clone(),
                self.type_of(&e.dst).to_owned(),
            );
            *out.entry(key).or_insert(0) += 1;
        }
        out
    }

    fn degree(&self, id: &str, rel: Option<&str>, dir: Direction) -> u64 {
        let mut d = 0;
        for e in self.edges {
            if rel.is_some_and(|r| r != e.rel_type) {
                continue;
            }
            if matches!(dir, Direction::In | Direction::Both) && e.dst == id {
                d += 1;
            }
            if matches!(dir, Direction::Out | Direction::Both) && e.src == id {
                d += 1;
            }
        }
        d
    }

    /// `None` when the type has no instances.
    pub fn node_distribution(
        &self,
        node_type: &str,
        rel: Option<&str>,
        dir: Option<Direction>,
    ) -> Option<Vec<(String, u64)>> {
        let members: Vec<&Node> = self.nodes.iter().filter(|n| n.node_type == node_type).collect();
        if members.is_empty() {
            return None;
        }
        let mut title_count: HashMap<&str, usize> = HashMap::new();
        for n in &members {
            *title_count.entry(&n.title).or_insert(0) += 1;
        }
        let dir = dir.unwrap_or(Direction::Both);
        let mut entries: Vec<(String, u64)> = members
            .iter()
            .map(|n| {
                let label = if title_count[n.title.as_str()] > 1 {
                    format!("{} [{}]", n.title, n.id)
                } else {
                    n.title.clone()
                };
                (label, self.degree(&n.id, rel, dir))
            })
            .collect();
        // value descending, then label ascending
        entries.sort_by(|a, b| (std::cmp::Reverse(a.1), &a.0).cmp(&(std::cmp::Reverse(b.1), &b.0)));
        Some(entries)
    }

    pub fn relation_distribution(&self, node_type: &str, dir: Direction) -> Option<Vec<(String, u64)>> {
        if !self.nodes.iter().any(|n| n.node_type == node_type) {
            return None;
        }
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for e in self.edges {
            let mut k = 0;
            if matches!(dir, Direction::In | Direction::Both) && self.type_of(&e.dst) == node_type {
                k += 1;
            }
            if matches!(dir, Direction::Out | Direction::Both) && self.type_of(&e.src) == node_type {
                k += 1;
            }
            if k > 0 {
                *counts.entry(e.rel_type.clone()).or_insert(0) += k;
            }
        }
        let mut entries: Vec<(String, u64)> = counts.into_iter().collect();
        entries.sort_by(|a, b| (std::cmp::Reverse(a.1), &a.0).cmp(&(std::cmp::Reverse(b.1), &b.0)));
        Some(entries)
    }

    pub fn filter_by_relation(&self, node_type: &str, rel: &str, dir: Direction) -> Option<Vec<String>> {
        if !self.nodes.iter().any(|n| n.node_type == node_type) {
            return None;
        }
        let mut ids = BTreeSet::new();
        for e in self.edges.iter().filter(|e| e.rel_type == rel) {
            if matches!(dir, Direction::In | Direction::Both) && self.type_of(&e.dst) == node_type {
                ids.insert(e.dst.clone());
            }
            if matches!(dir, Direction::Out | Direction::Both) && self.type_of(&e.src) == node_type {
                ids.insert(e.src.clone());
            }
        }
        Some(ids.into_iter().collect())
    }

    /// Node ids within `hops` steps, by repeated full edge scans.
    pub fn reachable(&self, start: &str, hops: u32, dir: Direction) -> BTreeSet<String> {
        let mut seen: BTreeSet<String> = BTreeSet::from([start.to_owned()]);
        let mut frontier = seen.clone();
        for _ in 0..hops {
            let mut next = BTreeSet::new();
            for e in self.edges {
                if matches!(dir, Direction::Out | Direction::Both) && frontier.contains(&e.src) {
                    next.insert(e.dst.clone());
                }
                if matches!(dir, Direction::In | Direction::Both) && frontier.contains(&e.dst) {
                    next.insert(e.src.clone());
                }
            }
            frontier = next.difference(&seen).cloned().collect();
            seen.extend(frontier.iter().cloned());
        }
        seen
    }

    /// Edges crossed while expanding a `hops`-step neighbourhood: those
    /// leaving a node fewer than `hops` steps away, in original order.
    pub fn subgraph_edges(&self, start: &str, hops: u32, dir: Direction) -> Vec<Edge> {
        let inner = self.reachable(start, hops.saturating_sub(1), dir);
        self.edges
            .iter()
            .filter(|e| {
                (matches!(dir, Direction::Out | Direction::Both) && inner.contains(&e.src))
                    || (matches!(dir, Direction::In | Direction::Both) && inner.contains(&e.dst))
            })
            .cloned()
            .collect()
    }
}

/// One step of a randomized Explorer session.
#[derive(Debug, Clone)]
pub enum Step {
    Dispatch(ActionDispatch),
    Restore(StateId),
    Override(OverrideRecipe),
    ClearOverride,
}

/// Draws a random step for an Explorer over `graph`. Roughly a quarter of the
/// steps are expected to fail (unknown types, unbound interactions, bad
/// restore ids, raising overrides).
pub fn random_explorer_step<R: Rng>(rng: &mut R, graph: &PropertyGraph, widget: &Widget) -> Step {
    let types: Vec<&str> = graph.node_types().collect();
    let max_state = widget.current_state_id().0;
    match rng.gen_range(0..12) {
        0..=2 => {
            let t = if types.is_empty() || rng.gen_bool(0.15) {
                "NoSuchType"
            } else {
                types.choose(rng).expect("non-empty")
            };
            Step::Dispatch(explorer::select_type(t))
        }
        3 => Step::Dispatch(ActionDispatch::new(
            InteractionType::Deselect,
            SCHEMA,
            Element::new(SCHEMA),
            json!({}),
        )),
        4 => Step::Dispatch(ActionDispatch::new(
            InteractionType::Pan,
            SCHEMA,
            Element::new("schema-graph/canvas"),
            json!({ "dx": rng.gen_range(-50..50), "dy": rng.gen_range(-50..50) }),
        )),
        5 => Step::Dispatch(ActionDispatch::new(
            InteractionType::Zoom,
            SCHEMA,
            Element::new("schema-graph/canvas"),
            json!({ "factor": *[0.5, 2.0, 0.0, -1.0].choose(rng).expect("non-empty") }),
        )),
        6 => {
            let label = widget.current_payload()["node_distribution"]
                .as_array()
                .and_then(|bars| bars.choose(rng))
                .and_then(|bar| bar[0].as_str())
                .unwrap_or("missing")
                .to_owned();
            Step::Dispatch(ActionDispatch::new(
                InteractionType::Select,
                NODE_DIST,
                Element::with_datum(format!("{NODE_DIST}/{label}"), json!({ "label": label })),
                json!({
                    "rel_type": REL_TYPES.choose(rng),
                    "direction": DIRECTIONS.choose(rng).map(|d| d.as_str()),
                }),
            ))
        }
        7 => {
            let label = widget.current_payload()["relation_distribution"]
                .as_array()
                .and_then(|bars| bars.choose(rng))
                .and_then(|bar| bar[0].as_str())
                .unwrap_or("requires(incoming)")
                .to_owned();
            Step::Dispatch(ActionDispatch::new(
                InteractionType::Select,
                REL_DIST,
                Element::with_datum(format!("{REL_DIST}/{label}"), json!({ "label": label })),
                json!({}),
            ))
        }
        8 => {
            // unbound interaction or unknown component
            let d = if rng.gen_bool(0.5) {
                ActionDispatch::new(InteractionType::Zoom, NODE_DIST, Element::new(NODE_DIST), json!({}))
            } else {
                ActionDispatch::new(
                    InteractionType::Select,
                    "no-such-component",
                    Element::new("x"),
                    json!({}),
                )
            };
            Step::Dispatch(d)
        }
        9 => Step::Restore(StateId(rng.gen_range(0..=max_state + 2))),
        10 => Step::Override(match rng.gen_range(0..4) {
            0 => OverrideRecipe::SortByLabel { descending: false },
            1 => OverrideRecipe::TopK { k: rng.gen_range(0..4) },
            2 => OverrideRecipe::Identity,
            _ => OverrideRecipe::Fail {
                message: "user function raised".into(),
            },
        }),
        _ => Step::ClearOverride,
    }
}

/// Applies `step`, returning whether it succeeded.
pub fn apply_step(widget: &mut Widget, step: &Step) -> bool {
    match step {
        Step::Dispatch(d) => widget.handle_action(d).is_ok(),
        Step::Restore(k) => widget.restore(*k).is_ok(),
        Step::Override(r) => widget
            .set_override(explorer::GET_NODE_DISTRIBUTION, r.clone().into_user_function())
            .is_ok(),
        Step::ClearOverride => widget.clear_override(explorer::GET_NODE_DISTRIBUTION).is_ok(),
    }
}

/// Random JSON value of bounded depth, for round-trip properties.
pub fn random_json<R: Rng>(rng: &mut R, depth: u32) -> Value {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..5) {
            0 => Value::Null,
            1 => json!(rng.gen_bool(0.5)),
            2 => json!(rng.gen_range(-1_000_000i64..1_000_000)),
            3 => json!(rng.gen_range(-1.0e6..1.0e6)),
            _ => json!(format!("s{}-\u{e9}\u{1f600}", rng.gen_range(0..1000))),
        };
    }
    if rng.gen_bool(0.5) {
        Value::Array((0..rng.gen_range(0..4)).map(|_| random_json(rng, depth - 1)).collect())
    } else {
        Value::Object(
            (0..rng.gen_range(0..4))
                .map(|i| (format!("k{i}"), random_json(rng, depth - 1)))
                .collect(),
        )
    }
}
