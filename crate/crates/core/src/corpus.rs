//! The Red-Green reference algorithms.
//!
//! Every variant colors a node `"green"` when it has at least one neighbor
//! and `"red"` otherwise, each reacting to a different source of events.
//! They are addressable by name from scenario files and the CLI.

use crate::behavior::{
    Behavior, BehaviorFactory, Capabilities, HookResult, NodeContext, TopologyListener,
};
use crate::messaging::{Destination, Envelope};
use crate::simulation::Simulation;
use crate::topology::{Link, NodeId};

pub const COLOR: &str = "color";
pub const GREEN: &str = "green";
pub const RED: &str = "red";
pub const HELLO: &str = "HELLO";

pub const RED_GREEN_V1: &str = "red-green-v1";
pub const RED_GREEN_V2: &str = "red-green-v2";
pub const RED_GREEN_V3: &str = "red-green-v3";
pub const RED_GREEN_V4: &str = "red-green-v4";
pub const RED_GREEN_CENTRALIZED: &str = "red-green-centralized";

/// Names accepted by [`behavior`].
pub const BEHAVIOR_NAMES: [&str; 4] = [RED_GREEN_V1, RED_GREEN_V2, RED_GREEN_V3, RED_GREEN_V4];
/// Names accepted by [`topology_listener`].
pub const LISTENER_NAMES: [&str; 1] = [RED_GREEN_CENTRALIZED];

pub fn behavior(name: &str) -> Option<BehaviorFactory> {
    match name {
        RED_GREEN_V1 => Some(red_green_v1()),
        RED_GREEN_V2 => Some(red_green_v2()),
        RED_GREEN_V3 => Some(red_green_v3()),
        RED_GREEN_V4 => Some(red_green_v4()),
        _ => None,
    }
}

pub fn topology_listener(name: &str) -> Option<Box<dyn TopologyListener>> {
    match name {
        RED_GREEN_CENTRALIZED => Some(red_green_centralized()),
        _ => None,
    }
}

fn color_by_degree(ctx: &mut NodeContext<'_>) -> HookResult {
    let color = if ctx.degree()? > 0 { GREEN } else { RED };
    ctx.set_property(COLOR, color)
}

/// Polls its neighborhood every `period` ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct RedGreenV1 {
    pub period: u64,
}

impl Default for RedGreenV1 {
    fn default() -> Self {
        RedGreenV1 { period: 10 }
    }
}

impl Behavior for RedGreenV1 {
    fn capabilities(&self) -> Capabilities {
        Capabilities::CLOCK | Capabilities::PROPERTIES
    }

    fn on_attach(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        ctx.add_clock_listener(self.period)
    }

    fn on_clock(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        color_by_degree(ctx)
    }
}

pub fn red_green_v1() -> BehaviorFactory {
    BehaviorFactory::from_prototype(RED_GREEN_V1, RedGreenV1::default())
}

/// Reacts to its own link additions and removals. Never uses the clock.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RedGreenV2;

impl Behavior for RedGreenV2 {
    fn capabilities(&self) -> Capabilities {
        Capabilities::PROPERTIES | Capabilities::NODE_EVENTS
    }

    fn on_attach(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        ctx.set_property(COLOR, RED)?;
        ctx.subscribe_node_events()
    }

    fn on_link_added(&mut self, ctx: &mut NodeContext<'_>, _link: &Link) -> HookResult {
        ctx.set_property(COLOR, GREEN)
    }

    fn on_link_removed(&mut self, ctx: &mut NodeContext<'_>, _link: &Link) -> HookResult {
        if ctx.degree()? == 0 {
            ctx.set_property(COLOR, RED)?;
        }
        Ok(())
    }
}

pub fn red_green_v2() -> BehaviorFactory {
    BehaviorFactory::from_prototype(RED_GREEN_V2, RedGreenV2)
}

/// Discovers neighbors through periodic HELLO beacons.
///
/// The node turns green on any reception and red when, at its own beacon
/// time, the last reception is older than one period.
#[derive(Debug, Clone, PartialEq)]
pub struct RedGreenV3 {
    pub period: u64,
    /// Starts one period in the past so the first beacon does not paint red.
    pub last_reception_date: i64,
}

impl Default for RedGreenV3 {
    fn default() -> Self {
        RedGreenV3 {
            period: 30,
            last_reception_date: -30,
        }
    }
}

impl Behavior for RedGreenV3 {
    fn capabilities(&self) -> Capabilities {
        Capabilities::CLOCK | Capabilities::MESSAGING | Capabilities::PROPERTIES
    }

    fn on_attach(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        ctx.add_clock_listener(self.period)?;
        ctx.subscribe_messages()
    }

    fn on_clock(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        ctx.send(Destination::Broadcast, HELLO)?;
        let now = ctx.current_time()? as i64;
        if self.last_reception_date < now - self.period as i64 {
            ctx.set_property(COLOR, RED)?;
        }
        Ok(())
    }

    fn on_message(&mut self, ctx: &mut NodeContext<'_>, _envelope: &Envelope) -> HookResult {
        ctx.set_property(COLOR, GREEN)?;
        self.last_reception_date = ctx.current_time()? as i64;
        Ok(())
    }
}

pub fn red_green_v3() -> BehaviorFactory {
    BehaviorFactory::from_prototype(RED_GREEN_V3, RedGreenV3::default())
}

/// V1 polling combined with a RandomWayPoint step before each check.
#[derive(Debug, Clone, PartialEq)]
pub struct RedGreenV4 {
    pub period: u64,
}

impl Default for RedGreenV4 {
    fn default() -> Self {
        RedGreenV4 { period: 10 }
    }
}

impl Behavior for RedGreenV4 {
    fn capabilities(&self) -> Capabilities {
        Capabilities::CLOCK | Capabilities::PROPERTIES | Capabilities::MOBILITY
    }

    fn on_attach(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        ctx.waypoint_init()?;
        ctx.add_clock_listener(self.period)
    }

    fn on_clock(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        ctx.waypoint_move()?;
        color_by_degree(ctx)
    }
}

pub fn red_green_v4() -> BehaviorFactory {
    BehaviorFactory::from_prototype(RED_GREEN_V4, RedGreenV4::default())
}

/// A global observer that colors every node from topology events; nodes
/// themselves carry no behavior.
#[derive(Debug, Clone, Default)]
pub struct RedGreenCentralized;

impl RedGreenCentralized {
    fn color_if_isolated(sim: &mut Simulation, id: NodeId) -> HookResult {
        if sim.topology().contains(id) && sim.neighbors(id)?.is_empty() {
            sim.set_property(id, COLOR, RED.into())?;
        }
        Ok(())
    }
}

impl TopologyListener for RedGreenCentralized {
    fn on_node_added(&mut self, sim: &mut Simulation, id: NodeId) -> HookResult {
        let color = if sim.neighbors(id)?.is_empty() {
            RED
        } else {
            GREEN
        };
        sim.set_property(id, COLOR, color.into())
    }

    fn on_link_added(&mut self, sim: &mut Simulation, link: &Link) -> HookResult {
        for end in link.endpoints() {
            if sim.topology().contains(end) {
                sim.set_property(end, COLOR, GREEN.into())?;
            }
        }
        Ok(())
    }

    fn on_link_removed(&mut self, sim: &mut Simulation, link: &Link) -> HookResult {
        for end in link.endpoints() {
            Self::color_if_isolated(sim, end)?;
        }
        Ok(())
    }
}

pub fn red_green_centralized() -> Box<dyn TopologyListener> {
    Box::new(RedGreenCentralized)
}
