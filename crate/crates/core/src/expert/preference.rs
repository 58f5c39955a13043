//! Mining preference tuples from a solved search tree.

use std::collections::HashSet;

use crate::environment::messages;
use crate::expert::dataset::PreferenceTuple;
use crate::search::{NodeId, NodeStatus, ProofPath, SearchTree};

/// Preference tuples along the proof ending at `proved`.
///
/// For every state on the path, each sibling of the on-path child that failed
/// with a tactic error yields one tuple. Transposition children (status
/// `duplicate`) are skipped, and each rejected tactic appears at most once per
/// state. Valid but off-path siblings are not negatives.
pub fn preference_pairs_at(tree: &SearchTree, proved: NodeId, round: usize) -> Vec<PreferenceTuple> {
    let mut on_path = Vec::new();
    let mut cur = proved;
    while let Some(parent) = tree.node(cur).parent {
        on_path.push((parent, cur));
        cur = parent;
    }
    on_path.reverse();

    let mut tuples = Vec::new();
    for (parent, child) in on_path {
        let chosen = &tree
            .node(child)
            .incoming
            .as_ref()
            .expect("non-root node has an incoming tactic")
            .tactic;
        let mut used = HashSet::new();
        for (id, sib) in tree.children(parent) {
            if id == child {
                continue;
            }
            let NodeStatus::Error(msg) = &sib.status else { continue };
            if msg == messages::DUPLICATE {
                continue;
            }
            let rejected = &sib.incoming.as_ref().expect("child has a tactic").tactic;
            if rejected == chosen || !used.insert(rejected.clone()) {
                continue;
            }
            tuples.push(PreferenceTuple {
                state: tree.node(parent).state.text().to_string(),
                chosen: chosen.clone(),
                rejected: rejected.clone(),
                error: msg.clone(),
                round,
            });
        }
    }
    tuples
}

/// As [`preference_pairs_at`], locating the proved leaf whose path is `path`.
/// Returns nothing when the tree holds no such leaf.
pub fn extract_preference_pairs(tree: &SearchTree, path: &ProofPath, round: usize) -> Vec<PreferenceTuple> {
    tree.nodes()
        .filter(|(_, n)| n.status == NodeStatus::Proved && n.depth == path.len())
        .map(|(id, _)| id)
        .find(|&id| &tree.reconstruct_path(id) == path)
        .map(|id| preference_pairs_at(tree, id, round))
        .unwrap_or_default()
}
