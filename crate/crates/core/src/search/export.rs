//! JSON export of a search tree for tooling and golden tests.

use serde::{Deserialize, Serialize};

use super::node::{NodeStatus, SearchTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExportedNode {
    pub id: usize,
    pub parent_id: Option<usize>,
    pub tactic: Option<String>,
    pub logprob: Option<f64>,
    pub depth: usize,
    /// `open`, `proved` or `error`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub score: Option<f64>,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedTree {
    pub nodes: Vec<ExportedNode>,
}

impl From<&SearchTree> for ExportedTree {
    fn from(tree: &SearchTree) -> Self {
        let nodes = tree
            .nodes()
            .map(|(id, n)| {
                let (status, error) = match &n.status {
                    NodeStatus::Open => ("open", None),
                    NodeStatus::Proved => ("proved", None),
                    NodeStatus::Error(m) => ("error", Some(m.clone())),
                };
                ExportedNode {
                    id: id.0,
                    parent_id: n.parent.map(|p| p.0),
                    tactic: n.incoming.as_ref().map(|t| t.tactic.clone()),
                    logprob: n.incoming.as_ref().map(|t| t.logprob),
                    depth: n.depth,
                    status: status.to_string(),
                    error,
                    score: n.score,
                    state: n.state.text().to_string(),
                }
            })
            .collect();
        ExportedTree { nodes }
    }
}

impl SearchTree {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ExportedTree::from(self)).expect("tree serializes")
    }
}
