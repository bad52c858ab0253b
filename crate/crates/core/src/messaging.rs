//! Neighbor-gated message passing with one-tick latency.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::clock::Tick;
use crate::property::PropertyValue;
use crate::topology::{NodeId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Destination {
    /// Every node linked to the sender when the envelope is delivered.
    Broadcast,
    Node(NodeId),
}

impl From<NodeId> for Destination {
    fn from(id: NodeId) -> Self {
        Destination::Node(id)
    }
}

impl From<Option<NodeId>> for Destination {
    fn from(id: Option<NodeId>) -> Self {
        id.map_or(Destination::Broadcast, Destination::Node)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    Value(PropertyValue),
    Bytes(Vec<u8>),
}

impl Payload {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Payload::Value(v) => v.as_str(),
            Payload::Bytes(_) => None,
        }
    }
}

impl<T: Into<PropertyValue>> From<T> for Payload {
    fn from(v: T) -> Self {
        Payload::Value(v.into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub sender: NodeId,
    pub destination: Destination,
    pub payload: Payload,
    pub sent_at: Tick,
}

/// FIFO of in-flight envelopes. Envelopes are appended in send order, and
/// since time never decreases the queue is also ordered by `sent_at`.
#[derive(Debug, Clone, Default)]
pub struct Mailroom {
    pending: VecDeque<Envelope>,
}

impl Mailroom {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Envelope> {
        self.pending.iter()
    }

    pub(crate) fn post(&mut self, envelope: Envelope) {
        debug_assert!(self
            .pending
            .back()
            .is_none_or(|e| e.sent_at <= envelope.sent_at));
        self.pending.push_back(envelope);
    }

    /// Removes and returns every envelope sent strictly before `now`.
    pub(crate) fn take_due(&mut self, now: Tick) -> Vec<Envelope> {
        let split = self.pending.partition_point(|e| e.sent_at < now);
        self.pending.drain(..split).collect()
    }
}

/// Recipients of `envelope` under the current topology, ascending by id.
pub fn resolve_recipients(envelope: &Envelope, topology: &Topology) -> Vec<NodeId> {
    if !topology.contains(envelope.sender) {
        return Vec::new();
    }
    match envelope.destination {
        Destination::Broadcast => topology
            .neighbors(envelope.sender)
            .map(|n| n.into_iter().collect())
            .unwrap_or_default(),
        Destination::Node(id) => {
            if topology.are_linked(envelope.sender, id) {
                vec![id]
            } else {
                Vec::new()
            }
        }
    }
}
