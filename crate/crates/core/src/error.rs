use thiserror::Error;

use crate::behavior::Capabilities;
use crate::geometry::Point;
use crate::topology::NodeId;

/// Errors raised by kernel operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("unknown node model `{0}`")]
    UnknownModel(String),
    #[error("non-finite coordinates ({}, {})", .0.x, .0.y)]
    InvalidGeometry(Point),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("invalid link {0}-{1}")]
    InvalidLink(NodeId, NodeId),
    #[error("link {0}-{1} already exists")]
    DuplicateLink(NodeId, NodeId),
    #[error("no link {0}-{1}")]
    UnknownLink(NodeId, NodeId),
    #[error("property keys and model names must be non-empty")]
    InvalidKey,
    #[error("communication range must be finite and non-negative, got {0}")]
    InvalidRange(f64),
    #[error("clock period must be at least 1, got {0}")]
    InvalidPeriod(u64),
    #[error("node {0} has no clock registration")]
    UnknownListener(NodeId),
    #[error("direction target coincides with the node position")]
    DegenerateDirection,
    #[error("move distance must be finite and non-negative, got {0}")]
    InvalidDistance(f64),
    #[error("node {0} has no waypoint target")]
    MissingWaypoint(NodeId),
    #[error("behavior lacks capability {0:?}")]
    Forbidden(Capabilities),
    #[error("{0}")]
    Behavior(String),
}

impl KernelError {
    /// Stable camelCase code used in wire `error` events.
    pub fn code(&self) -> &'static str {
        match self {
            KernelError::UnknownModel(_) => "unknownModel",
            KernelError::InvalidGeometry(_) => "invalidGeometry",
            KernelError::UnknownNode(_) => "unknownNode",
            KernelError::InvalidLink(..) => "invalidLink",
            KernelError::DuplicateLink(..) => "duplicateLink",
            KernelError::UnknownLink(..) => "unknownLink",
            KernelError::InvalidKey => "invalidKey",
            KernelError::InvalidRange(_) => "invalidRange",
            KernelError::InvalidPeriod(_) => "invalidPeriod",
            KernelError::UnknownListener(_) => "unknownListener",
            KernelError::DegenerateDirection => "degenerateDirection",
            KernelError::InvalidDistance(_) => "invalidDistance",
            KernelError::MissingWaypoint(_) => "missingWaypoint",
            KernelError::Forbidden(_) => "forbidden",
            KernelError::Behavior(_) => "behavior",
        }
    }
}
