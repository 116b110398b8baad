//! Synchronous gradient exchange.
//!
//! A [`GradientSample`] is the only thing agents ever send each other. The
//! mailbox table is rebuilt every evaluation from the current topology, so
//! an agent can only ever read samples from its neighbours.

use crate::error::{FlockError, Result};
use crate::graph::Topology;
use crate::types::Vec2;

/// Reference frame a sample is expressed in. All agents share the NE frame,
/// so conversion into it is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Frame {
    #[default]
    CommonNe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientSample {
    pub sender: usize,
    pub gradient: Vec2,
    pub stamp: u64,
    pub frame: Frame,
}

/// Per-agent inboxes for one exchange round.
#[derive(Debug, Clone, PartialEq)]
pub struct Mailboxes {
    boxes: Vec<Vec<GradientSample>>,
    stamp: u64,
}

impl Mailboxes {
    pub fn inbox(&self, i: usize) -> &[GradientSample] {
        &self.boxes[i]
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn stamp(&self) -> u64 {
        self.stamp
    }

    /// Total samples delivered in this round.
    pub fn message_count(&self) -> usize {
        self.boxes.iter().map(Vec::len).sum()
    }
}

/// Delivers every agent's gradient to exactly its current neighbours.
pub fn publish_all(gradients: &[Vec2], topo: &Topology, step: u64) -> Result<Mailboxes> {
    if gradients.len() != topo.n_agents() {
        return Err(FlockError::InvalidArgument(format!(
            "expected {} gradients, got {}",
            topo.n_agents(),
            gradients.len()
        )));
    }
    if let Some(i) = gradients.iter().position(|g| !g.is_finite()) {
        return Err(FlockError::InvalidArgument(format!("agent {i} published a non-finite gradient")));
    }
    let boxes = topo
        .adjacency()
        .into_iter()
        .map(|nbrs| {
            nbrs.into_iter()
                .map(|j| GradientSample { sender: j, gradient: gradients[j], stamp: step, frame: Frame::CommonNe })
                .collect()
        })
        .collect();
    Ok(Mailboxes { boxes, stamp: step })
}
