//! Algorithms attached to nodes, and the service handle they act through.
//!
//! A [`Behavior`] is a set of optional event hooks. Hooks never touch the
//! kernel directly: they receive a [`NodeContext`] scoped to their node and
//! gated by the [`Capabilities`] the behavior declares. Calls outside that
//! set fail with [`KernelError::Forbidden`] and are recorded in the
//! simulation diagnostics.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use bitflags::bitflags;

use crate::clock::Tick;
use crate::error::KernelError;
use crate::geometry::Point;
use crate::messaging::{Destination, Envelope, Payload};
use crate::property::PropertyValue;
use crate::simulation::Simulation;
use crate::topology::{Link, Node, NodeId};

pub type HookResult = Result<(), KernelError>;

bitflags! {
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
    pub struct Capabilities: u32 {
        /// Read and write node properties.
        const PROPERTIES = 1 << 0;
        /// Register clock listeners and read the current time.
        const CLOCK = 1 << 1;
        /// Send messages and subscribe to incoming ones.
        const MESSAGING = 1 << 2;
        /// Subscribe to the node's own link, movement and property events.
        const NODE_EVENTS = 1 << 3;
        /// Change direction and position.
        const MOBILITY = 1 << 4;
        /// Unrestricted access to the simulation (structural edits).
        const TOPOLOGY = 1 << 5;
    }
}

#[allow(unused_variables)]
pub trait Behavior: Send {
    fn capabilities(&self) -> Capabilities {
        Capabilities::all()
    }

    /// Runs once when the node is created, before it joins the topology.
    /// Property writes made here are folded into the `nodeAdded` event.
    fn on_attach(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        Ok(())
    }

    fn on_clock(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        Ok(())
    }

    fn on_message(&mut self, ctx: &mut NodeContext<'_>, envelope: &Envelope) -> HookResult {
        Ok(())
    }

    fn on_link_added(&mut self, ctx: &mut NodeContext<'_>, link: &Link) -> HookResult {
        Ok(())
    }

    fn on_link_removed(&mut self, ctx: &mut NodeContext<'_>, link: &Link) -> HookResult {
        Ok(())
    }

    fn on_node_moved(&mut self, ctx: &mut NodeContext<'_>) -> HookResult {
        Ok(())
    }

    fn on_property_changed(&mut self, ctx: &mut NodeContext<'_>, key: &str) -> HookResult {
        Ok(())
    }
}

/// Global observer of structural changes.
#[allow(unused_variables)]
pub trait TopologyListener: Send {
    fn on_node_added(&mut self, sim: &mut Simulation, id: NodeId) -> HookResult {
        Ok(())
    }

    /// `node` has already left the topology.
    fn on_node_removed(&mut self, sim: &mut Simulation, node: &Node) -> HookResult {
        Ok(())
    }

    fn on_link_added(&mut self, sim: &mut Simulation, link: &Link) -> HookResult {
        Ok(())
    }

    fn on_link_removed(&mut self, sim: &mut Simulation, link: &Link) -> HookResult {
        Ok(())
    }
}

type MakeBehavior = dyn Fn() -> Box<dyn Behavior> + Send + Sync;

/// Named constructor for the behavior a node model instantiates.
#[derive(Clone)]
pub struct BehaviorFactory {
    name: Arc<str>,
    make: Arc<MakeBehavior>,
}

impl BehaviorFactory {
    pub fn new<F>(name: &str, make: F) -> Self
    where
        F: Fn() -> Box<dyn Behavior> + Send + Sync + 'static,
    {
        BehaviorFactory {
            name: name.into(),
            make: Arc::new(make),
        }
    }

    /// Every node gets its own clone of `prototype`.
    pub fn from_prototype<B>(name: &str, prototype: B) -> Self
    where
        B: Behavior + Clone + Sync + 'static,
    {
        Self::new(name, move || Box::new(prototype.clone()))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn instantiate(&self) -> Box<dyn Behavior> {
        (self.make)()
    }
}

impl fmt::Debug for BehaviorFactory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("BehaviorFactory").field(&self.name).finish()
    }
}

/// Services available to a behavior hook, scoped to one node.
pub struct NodeContext<'a> {
    sim: &'a mut Simulation,
    node: NodeId,
    caps: Capabilities,
}

impl<'a> NodeContext<'a> {
    pub(crate) fn new(sim: &'a mut Simulation, node: NodeId, caps: Capabilities) -> Self {
        NodeContext { sim, node, caps }
    }

    fn require(&mut self, cap: Capabilities) -> Result<(), KernelError> {
        if self.caps.contains(cap) {
            Ok(())
        } else {
            self.sim.record_violation(self.node, cap);
            Err(KernelError::Forbidden(cap))
        }
    }

    pub fn id(&self) -> NodeId {
        self.node
    }

    pub fn capabilities(&self) -> Capabilities {
        self.caps
    }

    pub fn position(&self) -> Result<Point, KernelError> {
        Ok(self.sim.topology().try_node(self.node)?.position())
    }

    pub fn neighbors(&self) -> Result<BTreeSet<NodeId>, KernelError> {
        self.sim.neighbors(self.node)
    }

    pub fn degree(&self) -> Result<usize, KernelError> {
        self.neighbors().map(|n| n.len())
    }

    pub fn distance(&self, p: &Point) -> Result<f64, KernelError> {
        self.sim.distance(self.node, p)
    }

    pub fn property(&mut self, key: &str) -> Result<Option<PropertyValue>, KernelError> {
        self.require(Capabilities::PROPERTIES)?;
        Ok(self.sim.property(self.node, key)?.cloned())
    }

    pub fn set_property(&mut self, key: &str, value: impl Into<PropertyValue>) -> HookResult {
        self.require(Capabilities::PROPERTIES)?;
        self.sim.set_property(self.node, key, value.into())
    }

    pub fn current_time(&mut self) -> Result<Tick, KernelError> {
        self.require(Capabilities::CLOCK)?;
        Ok(self.sim.current_time())
    }

    pub fn add_clock_listener(&mut self, period: u64) -> HookResult {
        self.require(Capabilities::CLOCK)?;
        self.sim.add_clock_listener(self.node, period)
    }

    pub fn remove_clock_listener(&mut self) -> HookResult {
        self.require(Capabilities::CLOCK)?;
        self.sim.remove_clock_listener(self.node)
    }

    pub fn subscribe_messages(&mut self) -> HookResult {
        self.require(Capabilities::MESSAGING)?;
        self.sim.subscribe_messages(self.node)
    }

    pub fn send(
        &mut self,
        destination: impl Into<Destination>,
        payload: impl Into<Payload>,
    ) -> HookResult {
        self.require(Capabilities::MESSAGING)?;
        self.sim.send(self.node, destination.into(), payload.into())
    }

    pub fn subscribe_node_events(&mut self) -> HookResult {
        self.require(Capabilities::NODE_EVENTS)?;
        self.sim.subscribe_node_events(self.node)
    }

    pub fn set_direction(&mut self, toward: Point) -> HookResult {
        self.require(Capabilities::MOBILITY)?;
        self.sim.set_direction(self.node, toward)
    }

    pub fn set_direction_angle(&mut self, theta: f64) -> HookResult {
        self.require(Capabilities::MOBILITY)?;
        self.sim.set_direction_angle(self.node, theta)
    }

    pub fn move_forward(&mut self, distance: f64) -> HookResult {
        self.require(Capabilities::MOBILITY)?;
        self.sim.move_forward(self.node, distance)
    }

    /// Draws a fresh RandomWayPoint target.
    pub fn waypoint_init(&mut self) -> HookResult {
        self.require(Capabilities::MOBILITY | Capabilities::PROPERTIES)?;
        self.sim.waypoint_init(self.node)
    }

    /// Performs one RandomWayPoint step.
    pub fn waypoint_move(&mut self) -> HookResult {
        self.require(Capabilities::MOBILITY | Capabilities::PROPERTIES)?;
        self.sim.waypoint_move(self.node)
    }

    pub fn simulation(&mut self) -> Result<&mut Simulation, KernelError> {
        self.require(Capabilities::TOPOLOGY)?;
        Ok(self.sim)
    }
}
