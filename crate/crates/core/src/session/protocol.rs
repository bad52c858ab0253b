//! Newline-delimited JSON wire protocol.
//!
//! Clients send `{"cmd": ...}` objects; the server answers with
//! `{"ev": ...}` objects. Trace files use the same event schema, one event
//! per line.

use serde::{Deserialize, Serialize};

use crate::clock::Tick;
use crate::event::{Event, TimedEvent};
use crate::geometry::Point;
use crate::property::{Properties, PropertyValue};
use crate::simulation::Command;
use crate::topology::{Link, LinkMode, NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "camelCase", deny_unknown_fields)]
pub enum ClientCommand {
    AddNode {
        x: f64,
        y: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<String>,
    },
    MoveNode {
        id: NodeId,
        x: f64,
        y: f64,
    },
    RemoveNode {
        id: NodeId,
    },
    Pause,
    Resume,
    SetRate {
        #[serde(rename = "ticksPerSecond")]
        ticks_per_second: f64,
    },
    Snapshot,
}

impl ClientCommand {
    /// The kernel mutation this command requests, if any.
    pub fn to_kernel(&self, default_model: &str) -> Option<Command> {
        match self {
            ClientCommand::AddNode { x, y, model } => Some(Command::AddNode {
                position: Point::new(*x, *y),
                model: model.clone().unwrap_or_else(|| default_model.to_owned()),
            }),
            ClientCommand::MoveNode { id, x, y } => Some(Command::MoveNode {
                id: *id,
                position: Point::new(*x, *y),
            }),
            ClientCommand::RemoveNode { id } => Some(Command::RemoveNode { id: *id }),
            _ => None,
        }
    }
}

/// A recorded command and the tick in which it was applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledCommand {
    pub tick: Tick,
    #[serde(flatten)]
    pub command: ClientCommand,
}

/// Parses a command script: one [`ScheduledCommand`] per line, blank lines
/// and `#` comments ignored. Entries must be in non-decreasing tick order.
pub fn parse_script(text: &str) -> Result<Vec<ScheduledCommand>, (usize, String)> {
    let mut out: Vec<ScheduledCommand> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cmd: ScheduledCommand =
            serde_json::from_str(line).map_err(|e| (i + 1, e.to_string()))?;
        if out.last().is_some_and(|prev| prev.tick > cmd.tick) {
            return Err((i + 1, format!("tick {} goes backwards", cmd.tick)));
        }
        out.push(cmd);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub properties: Properties,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkState {
    pub a: NodeId,
    pub b: NodeId,
    pub mode: LinkMode,
}

impl From<&Link> for LinkState {
    fn from(l: &Link) -> Self {
        LinkState {
            a: l.a(),
            b: l.b(),
            mode: l.mode(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: Tick,
    pub nodes: Vec<NodeState>,
    pub links: Vec<LinkState>,
}

impl Snapshot {
    pub fn capture(topology: &Topology, time: Tick) -> Self {
        Snapshot {
            time,
            nodes: topology
                .nodes()
                .map(|n| NodeState {
                    id: n.id(),
                    x: n.position().x,
                    y: n.position().y,
                    properties: n.properties().clone(),
                })
                .collect(),
            links: topology.links().map(LinkState::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ev", rename_all = "camelCase")]
pub enum ServerEvent {
    Snapshot(Snapshot),
    NodeAdded {
        time: Tick,
        id: NodeId,
        x: f64,
        y: f64,
        properties: Properties,
    },
    NodeRemoved {
        time: Tick,
        id: NodeId,
    },
    NodeMoved {
        time: Tick,
        id: NodeId,
        x: f64,
        y: f64,
    },
    LinkAdded {
        time: Tick,
        #[serde(flatten)]
        link: LinkState,
    },
    LinkRemoved {
        time: Tick,
        #[serde(flatten)]
        link: LinkState,
    },
    PropertyChanged {
        time: Tick,
        id: NodeId,
        key: String,
        value: PropertyValue,
    },
    Error {
        time: Tick,
        code: String,
        detail: String,
    },
    Paused {
        time: Tick,
    },
    Resumed {
        time: Tick,
    },
}

impl ServerEvent {
    pub fn time(&self) -> Tick {
        match self {
            ServerEvent::Snapshot(s) => s.time,
            ServerEvent::NodeAdded { time, .. }
            | ServerEvent::NodeRemoved { time, .. }
            | ServerEvent::NodeMoved { time, .. }
            | ServerEvent::LinkAdded { time, .. }
            | ServerEvent::LinkRemoved { time, .. }
            | ServerEvent::PropertyChanged { time, .. }
            | ServerEvent::Error { time, .. }
            | ServerEvent::Paused { time }
            | ServerEvent::Resumed { time } => *time,
        }
    }

    pub fn is_delta(&self) -> bool {
        matches!(
            self,
            ServerEvent::NodeAdded { .. }
                | ServerEvent::NodeRemoved { .. }
                | ServerEvent::NodeMoved { .. }
                | ServerEvent::LinkAdded { .. }
                | ServerEvent::LinkRemoved { .. }
                | ServerEvent::PropertyChanged { .. }
        )
    }

    pub fn error(time: Tick, code: &str, detail: impl Into<String>) -> Self {
        ServerEvent::Error {
            time,
            code: code.to_owned(),
            detail: detail.into(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("server events always serialize")
    }
}

impl From<TimedEvent> for ServerEvent {
    fn from(TimedEvent { time, event }: TimedEvent) -> Self {
        match event {
            Event::NodeAdded {
                id,
                position,
                properties,
            } => ServerEvent::NodeAdded {
                time,
                id,
                x: position.x,
                y: position.y,
                properties,
            },
            Event::NodeRemoved { id } => ServerEvent::NodeRemoved { time, id },
            Event::NodeMoved { id, position } => ServerEvent::NodeMoved {
                time,
                id,
                x: position.x,
                y: position.y,
            },
            Event::LinkAdded(l) => ServerEvent::LinkAdded {
                time,
                link: (&l).into(),
            },
            Event::LinkRemoved(l) => ServerEvent::LinkRemoved {
                time,
                link: (&l).into(),
            },
            Event::PropertyChanged { id, key, value } => ServerEvent::PropertyChanged {
                time,
                id,
                key,
                value,
            },
        }
    }
}
