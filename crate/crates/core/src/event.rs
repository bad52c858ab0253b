use crate::clock::Tick;
use crate::geometry::Point;
use crate::property::{Properties, PropertyValue};
use crate::topology::{Link, NodeId};

/// An observable kernel state change.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    NodeAdded {
        id: NodeId,
        position: Point,
        properties: Properties,
    },
    NodeRemoved {
        id: NodeId,
    },
    NodeMoved {
        id: NodeId,
        position: Point,
    },
    LinkAdded(Link),
    LinkRemoved(Link),
    PropertyChanged {
        id: NodeId,
        key: String,
        value: PropertyValue,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedEvent {
    pub time: Tick,
    pub event: Event,
}
