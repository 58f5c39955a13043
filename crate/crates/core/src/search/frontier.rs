//! Bounded priority queue of open nodes.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::node::NodeId;

/// Ordering key: higher score first, then earlier insertion.
#[derive(Debug, Clone, Copy)]
struct Key {
    score: f64,
    node: NodeId,
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    // Ascending order puts the best entry last: larger score, and for equal
    // scores the smaller insertion index.
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Open nodes ordered by score with FIFO tie-breaking.
///
/// When more than `capacity` nodes are held, the lowest-ranked one is dropped.
#[derive(Debug, Clone)]
pub struct Frontier {
    entries: BTreeSet<Key>,
    capacity: usize,
    dropped: usize,
}

impl Frontier {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Frontier {
            entries: BTreeSet::new(),
            capacity,
            dropped: 0,
        }
    }

    /// Inserts a node; returns the node evicted by the capacity bound, if any.
    pub fn push(&mut self, node: NodeId, score: f64) -> Option<NodeId> {
        self.entries.insert(Key { score, node });
        if self.entries.len() > self.capacity {
            self.dropped += 1;
            self.entries.pop_first().map(|k| k.node)
        } else {
            None
        }
    }

    /// Removes and returns the best node, or `None` when empty.
    pub fn pop(&mut self) -> Option<NodeId> {
        self.entries.pop_last().map(|k| k.node)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }
}
