//! File-loaded property graph and the data operations the demo widgets run
//! against it.
//!
//! The graph is immutable after construction. Adjacency lists and a per-type
//! node index are built once so that every operation is a walk over incident
//! edges rather than a scan of the whole edge list.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    #[serde(rename = "type")]
    pub node_type: String,
    pub title: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub attrs: Map<String, Value>,
}

impl Node {
    pub fn new(id: impl Into<String>, node_type: impl Into<String>, title: impl Into<String>) -> Self {
        Node {
            id: id.into(),
            node_type: node_type.into(),
            title: title.into(),
            attrs: Map::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: String,
    pub dst: String,
    #[serde(rename = "type")]
    pub rel_type: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub attrs: Map<String, Value>,
}

impl Edge {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, rel_type: impl Into<String>) -> Self {
        Edge {
            src: src.into(),
            dst: dst.into(),
            rel_type: rel_type.into(),
            attrs: Map::new(),
        }
    }
}

/// On-disk graph document: `{"nodes": [...], "edges": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
    Both,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
            Direction::Both => "both",
        }
    }

    fn includes_in(self) -> bool {
        matches!(self, Direction::In | Direction::Both)
    }

    fn includes_out(self) -> bool {
        matches!(self, Direction::Out | Direction::Both)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in" => Ok(Direction::In),
            "out" => Ok(Direction::Out),
            "both" => Ok(Direction::Both),
            other => Err(Error::contract(format!("unknown direction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortOrder {
    ValueDesc,
    LabelAsc,
}

/// Labeled counts, kept in `sort_order`. Labels are unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub entries: Vec<(String, u64)>,
    pub sort_order: SortOrder,
}

impl Distribution {
    pub fn new(mut entries: Vec<(String, u64)>, sort_order: SortOrder) -> Self {
        sort_entries(&mut entries, sort_order);
        Distribution { entries, sort_order }
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|(_, v)| v).sum()
    }

    /// The `[[label, value], ...]` form used in widget payloads.
    pub fn to_value(&self) -> Value {
        serde_json::to_value(&self.entries).expect("distribution entries are plain data")
    }
}

pub fn sort_entries(entries: &mut [(String, u64)], order: SortOrder) {
    match order {
        SortOrder::ValueDesc => entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0))),
        SortOrder::LabelAsc => entries.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1))),
    }
}

/// Type-level summary of a graph.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SchemaGraph {
    pub type_nodes: BTreeMap<String, u64>,
    pub type_edges: BTreeMap<(String, String, String), u64>,
}

#[derive(Serialize, Deserialize)]
struct TypeEdgeRow {
    src_type: String,
    rel_type: String,
    dst_type: String,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    type_edges: Vec<TypeEdgeRow>,
    type_nodes: BTreeMap<String, u64>,
}

impl Serialize for SchemaGraph {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SchemaRepr {
            type_edges: self
                .type_edges
                .iter()
                .map(|((s, r, d), c)| TypeEdgeRow {
                    src_type: s.clone(),
                    rel_type: r.clone(),
                    dst_type: d.clone(),
                    count: *c,
                })
                .collect(),
            type_nodes: self.type_nodes.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SchemaGraph {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = SchemaRepr::deserialize(deserializer)?;
        Ok(SchemaGraph {
            type_nodes: repr.type_nodes,
            type_edges: repr
                .type_edges
                .into_iter()
                .map(|r| ((r.src_type, r.rel_type, r.dst_type), r.count))
                .collect(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct PropertyGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
    by_type: BTreeMap<String, Vec<usize>>,
    // edge indices per node
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl PartialEq for PropertyGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Serialize for PropertyGraph {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc<'a> {
            nodes: &'a [Node],
            edges: &'a [Edge],
        }
        Doc {
            nodes: &self.nodes,
            edges: &self.edges,
        }
        .serialize(serializer)
    }
}

impl PropertyGraph {
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        let mut by_type: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate node id `{}`", node.id)));
            }
            by_type.entry(node.node_type.clone()).or_default().push(i);
        }
        let mut outgoing = vec![Vec::new(); nodes.len()];
        let mut incoming = vec![Vec::new(); nodes.len()];
        for (i, edge) in edges.iter().enumerate() {
            let endpoint = |id: &str| {
                index.get(id).copied().ok_or_else(|| {
                    Error::Format(format!(
                        "edge #{} ({} -[{}]-> {}) references missing node `{}`",
                        i + 1,
                        edge.src,
                        edge.rel_type,
                        edge.dst,
                        id
                    ))
                })
            };
            let src = endpoint(&edge.src)?;
            let dst = endpoint(&edge.dst)?;
            outgoing[src].push(i);
            incoming[dst].push(i);
        }
        Ok(PropertyGraph {
            nodes,
            edges,
            index,
            by_type,
            outgoing,
            incoming,
        })
    }

    pub fn from_document(doc: GraphDocument) -> Result<Self> {
        PropertyGraph::new(doc.nodes, doc.edges)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: GraphDocument =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("graph document: {e}")))?;
        PropertyGraph::from_document(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        PropertyGraph::from_json_str(&text)
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn has_node_type(&self, node_type: &str) -> bool {
        self.by_type.contains_key(node_type)
    }

    pub fn node_types(&self) -> impl Iterator<Item = &str> {
        self.by_type.keys().map(String::as_str)
    }

    fn node_index(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::not_found(format!("node `{id}`")))
    }

    fn instances(&self, node_type: &str) -> Result<&[usize]> {
        self.by_type
            .get(node_type)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::not_found(format!("node type `{node_type}`")))
    }

    /// Edges incident to node `idx` under `direction`, as (edge index, neighbor index).
    /// A self-loop is reported once per matching endpoint.
    fn incident(&self, idx: usize, direction: Direction) -> impl Iterator<Item = (usize, usize)> + '_ {
        let ins = direction
            .includes_in()
            .then(|| self.incoming[idx].iter().map(|&e| (e, self.index[&self.edges[e].src])))
            .into_iter()
            .flatten();
        let outs = direction
            .includes_out()
            .then(|| self.outgoing[idx].iter().map(|&e| (e, self.index[&self.edges[e].dst])))
            .into_iter()
            .flatten();
        ins.chain(outs)
    }

    fn degree(&self, idx: usize, rel_type: Option<&str>, direction: Direction) -> u64 {
        self.incident(idx, direction)
            .filter(|&(e, _)| rel_type.is_none_or(|r| self.edges[e].rel_type == r))
            .count() as u64
    }

    pub fn compute_schema(&self) -> SchemaGraph {
        let type_nodes = self
            .by_type
            .iter()
            .map(|(t, members)| (t.clone(), members.len() as u64))
            .collect();
        let mut type_edges = BTreeMap::new();
        for (src, outs) in self.outgoing.iter().enumerate() {
            for &e in outs {
                let edge = &self.edges[e];
                let dst = self.index[&edge.dst];
                *type_edges
                    .entry((
                        self.nodes[src].node_type.clone(),
                        edge.rel_type.clone(),
                        self.nodes[dst].node_type.clone(),
                    ))
                    .or_insert(0) += 1;
            }
        }
        SchemaGraph { type_nodes, type_edges }
    }

    /// Bar labels for the instances of a type: the title, or `title [id]`
    /// when several instances of the type share a title.
    pub fn instance_labels(&self, node_type: &str) -> Result<Vec<(String, &Node)>> {
        let members = self.instances(node_type)?;
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for &i in members {
            *seen.entry(self.nodes[i].title.as_str()).or_insert(0) += 1;
        }
        Ok(members
            .iter()
            .map(|&i| {
                let n = &self.nodes[i];
                let label = if seen[n.title.as_str()] > 1 {
                    format!("{} [{}]", n.title, n.id)
                } else {
                    n.title.clone()
                };
                (label, n)
            })
            .collect())
    }

    /// Per-instance degree of every node of `node_type`, restricted to
    /// `rel_type` and `direction` when given.
    pub fn node_distribution(
        &self,
        node_type: &str,
        rel_type: Option<&str>,
        direction: Option<Direction>,
    ) -> Result<Distribution> {
        let direction = direction.unwrap_or(Direction::Both);
        let entries = self
            .instance_labels(node_type)?
            .into_iter()
            .map(|(label, node)| (label, self.degree(self.index[&node.id], rel_type, direction)))
            .collect();
        Ok(Distribution::new(entries, SortOrder::ValueDesc))
    }

    /// Edge counts per relation type incident to instances of `node_type`.
    /// With `Both`, an edge is counted once at each qualifying endpoint.
    pub fn relation_distribution(&self, node_type: &str, direction: Direction) -> Result<Distribution> {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for &i in self.instances(node_type)? {
            for (e, _) in self.incident(i, direction) {
                *counts.entry(self.edges[e].rel_type.as_str()).or_insert(0) += 1;
            }
        }
        Ok(Distribution::new(
            counts.into_iter().map(|(k, v)| (k.to_owned(), v)).collect(),
            SortOrder::ValueDesc,
        ))
    }

    /// Ids of `node_type` instances with at least one incident `rel_type`
    /// edge under `direction`, sorted by id.
    pub fn filter_by_relation(&self, node_type: &str, rel_type: &str, direction: Direction) -> Result<Vec<String>> {
        let mut ids: Vec<String> = self
            .instances(node_type)?
            .iter()
            .filter(|&&i| self.degree(i, Some(rel_type), direction) > 0)
            .map(|&i| self.nodes[i].id.clone())
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Distinct neighbors of `node_id` over `rel_type` edges (any type when
    /// `None`) under `direction`, sorted by id.
    pub fn neighbors(&self, node_id: &str, rel_type: Option<&str>, direction: Direction) -> Result<Vec<String>> {
        let idx = self.node_index(node_id)?;
        let mut ids: Vec<String> = self
            .incident(idx, direction)
            .filter(|&(e, _)| rel_type.is_none_or(|r| self.edges[e].rel_type == r))
            .map(|(_, n)| self.nodes[n].id.clone())
            .collect();
        ids.sort();
        ids.dedup();
        Ok(ids)
    }

    /// Nodes reachable from `node_id` within `hops` steps under `direction`,
    /// with the edges crossed while expanding. Output keeps the original
    /// node and edge order.
    pub fn subgraph(&self, node_id: &str, hops: u32, direction: Direction) -> Result<PropertyGraph> {
        let start = self.node_index(node_id)?;
        if hops == 0 {
            return Err(Error::contract("subgraph hops must be at least 1"));
        }
        let mut dist: Vec<Option<u32>> = vec![None; self.nodes.len()];
        let mut edge_used = vec![false; self.edges.len()];
        dist[start] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(cur) = queue.pop_front() {
            let d = dist[cur].expect("queued nodes have a distance");
            if d >= hops {
                continue;
            }
            for (e, next) in self.incident(cur, direction) {
                edge_used[e] = true;
                if dist[next].is_none() {
                    dist[next] = Some(d + 1);
                    queue.push_back(next);
                }
            }
        }
        let nodes = self
            .nodes
            .iter()
            .zip(&dist)
            .filter(|(_, d)| d.is_some())
            .map(|(n, _)| n.clone())
            .collect();
        let edges = self
            .edges
            .iter()
            .zip(&edge_used)
            .filter(|(_, used)| **used)
            .map(|(e, _)| e.clone())
            .collect();
        PropertyGraph::new(nodes, edges)
    }
}
