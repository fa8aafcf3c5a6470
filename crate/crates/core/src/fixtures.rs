//! Small reference graph used in docs, tests and the CLI examples.
//!
//! `n1(Occupation "Chef")`, `n2(Occupation "Baker")`, `n3(Skill "cooking")`,
//! `n4(Skill "baking")` with `requires` edges n1→n3, n2→n4, n2→n3.
//! Three alignment candidates point into it.

use crate::demo::alignment::{candidates_from_json_str, AlignmentCandidate};
use crate::graph::PropertyGraph;

pub const G0_JSON: &str = r#"{
  "nodes": [
    {"id": "n1", "type": "Occupation", "title": "Chef"},
    {"id": "n2", "type": "Occupation", "title": "Baker"},
    {"id": "n3", "type": "Skill", "title": "cooking"},
    {"id": "n4", "type": "Skill", "title": "baking"}
  ],
  "edges": [
    {"src": "n1", "dst": "n3", "type": "requires"},
    {"src": "n2", "dst": "n4", "type": "requires"},
    {"src": "n2", "dst": "n3", "type": "requires"}
  ]
}
"#;

pub fn g0() -> PropertyGraph {
    PropertyGraph::from_json_str(G0_JSON).expect("G0 fixture is valid")
}

pub const G0_CANDIDATES_JSON: &str = r#"[
  {"candidate_id": "c1", "corpus_term": "cookery", "corpus_descriptions": ["the art of preparing food", "cooking skills"], "graph_entity_id": "n3"},
  {"candidate_id": "c2", "corpus_term": "chef", "corpus_descriptions": ["a professional cook"], "graph_entity_id": "n1"},
  {"candidate_id": "c3", "corpus_term": "pastry", "corpus_descriptions": ["baked dough"], "graph_entity_id": "n4"}
]
"#;

pub fn g0_candidates() -> Vec<AlignmentCandidate> {
    candidates_from_json_str(G0_CANDIDATES_JSON).expect("candidate fixture is valid")
}
