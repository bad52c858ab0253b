//! Rebuilds topology state from a snapshot and a stream of deltas.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::protocol::{LinkState, NodeState, ServerEvent, Snapshot};
use crate::clock::Tick;
use crate::topology::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("delta at t={time} references unknown node {id}")]
    UnknownNode { time: Tick, id: NodeId },
    #[error("delta at t={time} adds node {id} twice")]
    DuplicateNode { time: Tick, id: NodeId },
    #[error("delta at t={time} has inconsistent link {a}-{b}")]
    LinkMismatch { time: Tick, a: NodeId, b: NodeId },
    #[error("delta at t={time} precedes state time {state}")]
    OutOfOrder { time: Tick, state: Tick },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayState {
    pub time: Tick,
    pub nodes: BTreeMap<NodeId, NodeState>,
    pub links: BTreeSet<LinkState>,
}

impl ReplayState {
    pub fn from_snapshot(snapshot: &Snapshot) -> Self {
        ReplayState {
            time: snapshot.time,
            nodes: snapshot.nodes.iter().map(|n| (n.id, n.clone())).collect(),
            links: snapshot.links.iter().copied().collect(),
        }
    }

    /// Applies one event. Non-delta events only advance time; a snapshot
    /// replaces the whole state.
    pub fn apply(&mut self, event: &ServerEvent) -> Result<(), ReplayError> {
        let time = event.time();
        if event.is_delta() && time < self.time {
            return Err(ReplayError::OutOfOrder {
                time,
                state: self.time,
            });
        }
        match event {
            ServerEvent::Snapshot(s) => {
                *self = ReplayState::from_snapshot(s);
                return Ok(());
            }
            ServerEvent::NodeAdded {
                id,
                x,
                y,
                properties,
                ..
            } => {
                let node = NodeState {
                    id: *id,
                    x: *x,
                    y: *y,
                    properties: properties.clone(),
                };
                if self.nodes.insert(*id, node).is_some() {
                    return Err(ReplayError::DuplicateNode { time, id: *id });
                }
            }
            ServerEvent::NodeRemoved { id, .. } => {
                self.nodes
                    .remove(id)
                    .ok_or(ReplayError::UnknownNode { time, id: *id })?;
            }
            ServerEvent::NodeMoved { id, x, y, .. } => {
                let n = self
                    .nodes
                    .get_mut(id)
                    .ok_or(ReplayError::UnknownNode { time, id: *id })?;
                n.x = *x;
                n.y = *y;
            }
            ServerEvent::LinkAdded { link, .. } => {
                if !self.nodes.contains_key(&link.a)
                    || !self.nodes.contains_key(&link.b)
                    || !self.links.insert(*link)
                {
                    return Err(ReplayError::LinkMismatch {
                        time,
                        a: link.a,
                        b: link.b,
                    });
                }
            }
            ServerEvent::LinkRemoved { link, .. } => {
                if !self.links.remove(link) {
                    return Err(ReplayError::LinkMismatch {
                        time,
                        a: link.a,
                        b: link.b,
                    });
                }
            }
            ServerEvent::PropertyChanged { id, key, value, .. } => {
                let n = self
                    .nodes
                    .get_mut(id)
                    .ok_or(ReplayError::UnknownNode { time, id: *id })?;
                n.properties.insert(key.clone(), value.clone());
            }
            ServerEvent::Error { .. }
            | ServerEvent::Paused { .. }
            | ServerEvent::Resumed { .. } => {}
        }
        self.time = self.time.max(time);
        Ok(())
    }

    pub fn to_snapshot(&self, time: Tick) -> Snapshot {
        Snapshot {
            time,
            nodes: self.nodes.values().cloned().collect(),
            links: self.links.iter().copied().collect(),
        }
    }
}
