use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hashing::stable_u64;

/// Serialized goal text plus a stable id derived from it.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct ProofState {
    text: String,
    id: StateId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub u64);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl ProofState {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let id = StateId(stable_u64(text.as_bytes()));
        ProofState { text, id }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn id(&self) -> StateId {
        self.id
    }

    /// Placeholder state carried by proof-finished nodes.
    pub fn no_goals() -> Self {
        ProofState::new("no goals")
    }
}

impl From<String> for ProofState {
    fn from(text: String) -> Self {
        ProofState::new(text)
    }
}

impl From<ProofState> for String {
    fn from(s: ProofState) -> Self {
        s.text
    }
}

impl fmt::Debug for ProofState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProofState({:?})", self.text)
    }
}

impl fmt::Display for ProofState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// A generated tactic with its natural-log model probability (≤ 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TacticCandidate {
    pub tactic: String,
    pub logprob: f64,
}

impl TacticCandidate {
    pub fn new(tactic: impl Into<String>, logprob: f64) -> Self {
        TacticCandidate {
            tactic: tactic.into(),
            logprob,
        }
    }
}

/// Index of a node inside its [`SearchTree`]. Doubles as the insertion index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeStatus {
    Open,
    Proved,
    Error(String),
}

impl NodeStatus {
    pub fn is_error(&self) -> bool {
        matches!(self, NodeStatus::Error(_))
    }
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub state: ProofState,
    pub parent: Option<NodeId>,
    pub incoming: Option<TacticCandidate>,
    /// Edges from the root.
    pub depth: usize,
    /// Sum of incoming logprobs along the root path.
    pub cum_logprob: f64,
    pub status: NodeStatus,
    pub insertion_index: usize,
    /// Fixed at insertion; `None` for the root, which is never scored.
    pub score: Option<f64>,
    /// Whether the policy has been queried at this node.
    pub expanded: bool,
}

/// Length-normalized path score `cum_logprob / depth^alpha`.
///
/// `depth` must be at least 1: the root is expanded unconditionally and never
/// ranked. `alpha = 0` gives the raw log-probability sum, `alpha = 1` the mean
/// per-step log-probability.
pub fn score(cum_logprob: f64, depth: usize, alpha: f64) -> f64 {
    assert!(depth >= 1, "the root (depth 0) is never scored");
    debug_assert!((0.0..=1.0).contains(&alpha));
    if alpha == 0.0 {
        cum_logprob
    } else if alpha == 1.0 {
        cum_logprob / depth as f64
    } else {
        cum_logprob / (depth as f64).powf(alpha)
    }
}

/// Arena of search nodes in insertion order.
#[derive(Debug, Clone)]
pub struct SearchTree {
    nodes: Vec<SearchNode>,
}

impl SearchTree {
    pub fn new(root: ProofState) -> Self {
        SearchTree {
            nodes: vec![SearchNode {
                state: root,
                parent: None,
                incoming: None,
                depth: 0,
                cum_logprob: 0.0,
                status: NodeStatus::Open,
                insertion_index: 0,
                score: None,
                expanded: false,
            }],
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &SearchNode {
        &self.nodes[id.0]
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut SearchNode {
        &mut self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &SearchNode)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    /// Children of `id` in insertion order.
    pub fn children(&self, id: NodeId) -> impl Iterator<Item = (NodeId, &SearchNode)> {
        self.nodes().filter(move |(_, n)| n.parent == Some(id))
    }

    /// Appends a child of `parent` reached by `tactic`. The score is computed
    /// here, once, with the search's `alpha`.
    pub fn push_child(
        &mut self,
        parent: NodeId,
        tactic: TacticCandidate,
        state: ProofState,
        status: NodeStatus,
        alpha: f64,
    ) -> NodeId {
        let p = &self.nodes[parent.0];
        let depth = p.depth + 1;
        let cum_logprob = p.cum_logprob + tactic.logprob;
        let id = NodeId(self.nodes.len());
        self.nodes.push(SearchNode {
            state,
            parent: Some(parent),
            incoming: Some(tactic),
            depth,
            cum_logprob,
            status,
            insertion_index: id.0,
            score: Some(score(cum_logprob, depth, alpha)),
            expanded: false,
        });
        id
    }

    /// Root-to-leaf `(state, tactic)` steps ending at `proved`.
    ///
    /// # Panics
    /// If `proved` is not a `Proved` node or its parent chain is broken.
    pub fn reconstruct_path(&self, proved: NodeId) -> ProofPath {
        let leaf = self.node(proved);
        assert_eq!(leaf.status, NodeStatus::Proved, "path requested for unproved node");
        let mut steps = Vec::with_capacity(leaf.depth);
        let mut cur = proved;
        while let Some(parent) = self.node(cur).parent {
            let tactic = self
                .node(cur)
                .incoming
                .clone()
                .expect("non-root node carries its incoming tactic");
            assert!(parent.0 < cur.0, "parent chain must point backwards");
            steps.push(ProofStep {
                state: self.node(parent).state.clone(),
                tactic,
            });
            cur = parent;
        }
        assert_eq!(cur, self.root(), "parent chain does not reach the root");
        steps.reverse();
        assert_eq!(steps.len(), leaf.depth, "path length must equal node depth");
        ProofPath { steps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofStep {
    pub state: ProofState,
    pub tactic: TacticCandidate,
}

/// A successful state-tactic sequence from the goal to a finished proof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofPath {
    pub steps: Vec<ProofStep>,
}

impl ProofPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn tactics(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().map(|s| s.tactic.tactic.as_str())
    }
}
