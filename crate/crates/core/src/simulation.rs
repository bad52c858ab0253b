//! The simulation loop: structural operations, event dispatch and ticks.
//!
//! Every structural change is recorded as an [`Event`] and then delivered
//! synchronously: first to the node listeners of the affected endpoints
//! (lower id first), then to topology listeners in registration order.
//! Hooks may call back into the simulation. A notification aimed at a hook
//! that is already running is queued and delivered as soon as that hook
//! returns, so every listener still sees every event exactly once.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};

use log::warn;

use crate::behavior::{Behavior, Capabilities, NodeContext, TopologyListener};
use crate::clock::{ClockSchedule, Tick};
use crate::error::KernelError;
use crate::event::{Event, TimedEvent};
use crate::geometry::Point;
use crate::messaging::{resolve_recipients, Destination, Envelope, Mailroom, Payload};
use crate::mobility::RandomWaypoint;
use crate::property::PropertyValue;
use crate::rng::SimRng;
use crate::topology::{
    Link, LinkMode, Node, NodeId, NodeModel, Topology, DEFAULT_HEIGHT, DEFAULT_WIDTH,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub width: f64,
    pub height: f64,
    pub seed: u64,
    pub waypoint: RandomWaypoint,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            seed: 0,
            waypoint: RandomWaypoint::default(),
        }
    }
}

/// External mutation request, applied in phase 1 of the next tick.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    AddNode { position: Point, model: String },
    MoveNode { id: NodeId, position: Point },
    RemoveNode { id: NodeId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutcome {
    /// Opaque tag supplied with the command (the session uses client ids).
    pub origin: Option<u64>,
    pub command: Command,
    pub result: Result<Option<NodeId>, KernelError>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickReport {
    pub time: Tick,
    pub commands: Vec<CommandOutcome>,
    pub deliveries: usize,
    pub events: Vec<TimedEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HookFailure {
    pub time: Tick,
    /// `None` for topology listeners.
    pub node: Option<NodeId>,
    pub hook: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapabilityViolation {
    pub time: Tick,
    pub node: NodeId,
    pub capability: Capabilities,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub hook_failures: Vec<HookFailure>,
    pub violations: Vec<CapabilityViolation>,
    pub delivered_messages: u64,
    pub dropped_envelopes: u64,
}

#[derive(Debug, Clone)]
enum NodeNotice {
    Clock,
    Message(Envelope),
    LinkAdded(Link),
    LinkRemoved(Link),
    Moved,
    PropertyChanged(String),
}

impl NodeNotice {
    fn hook_name(&self) -> &'static str {
        match self {
            NodeNotice::Clock => "onClock",
            NodeNotice::Message(_) => "onMessage",
            NodeNotice::LinkAdded(_) => "linkAdded",
            NodeNotice::LinkRemoved(_) => "linkRemoved",
            NodeNotice::Moved => "nodeMoved",
            NodeNotice::PropertyChanged(_) => "propertyChanged",
        }
    }
}

#[derive(Debug, Clone)]
enum TopologyNotice {
    NodeAdded(NodeId),
    NodeRemoved(Box<Node>),
    LinkAdded(Link),
    LinkRemoved(Link),
}

impl TopologyNotice {
    fn hook_name(&self) -> &'static str {
        match self {
            TopologyNotice::NodeAdded(_) => "nodeAdded",
            TopologyNotice::NodeRemoved(_) => "nodeRemoved",
            TopologyNotice::LinkAdded(_) => "linkAdded",
            TopologyNotice::LinkRemoved(_) => "linkRemoved",
        }
    }
}

struct BehaviorSlot {
    /// `None` while one of its hooks is running.
    behavior: Option<Box<dyn Behavior>>,
    caps: Capabilities,
    node_events: bool,
    messages: bool,
    deferred: VecDeque<NodeNotice>,
}

struct ListenerSlot {
    listener: Option<Box<dyn TopologyListener>>,
    deferred: VecDeque<TopologyNotice>,
}

pub struct Simulation {
    pub(crate) topology: Topology,
    pub(crate) clock: ClockSchedule<NodeId>,
    pub(crate) mailroom: Mailroom,
    pub(crate) rng: SimRng,
    pub(crate) waypoint: RandomWaypoint,
    behaviors: BTreeMap<NodeId, BehaviorSlot>,
    listeners: Vec<ListenerSlot>,
    attaching: BTreeSet<NodeId>,
    commands: VecDeque<(Option<u64>, Command)>,
    events: Vec<TimedEvent>,
    recording: bool,
    diagnostics: Diagnostics,
}

impl Default for Simulation {
    fn default() -> Self {
        Simulation::new(SimulationConfig::default())
    }
}

impl Simulation {
    pub fn new(config: SimulationConfig) -> Self {
        Simulation {
            topology: Topology::new(config.width, config.height),
            clock: ClockSchedule::new(),
            mailroom: Mailroom::new(),
            rng: SimRng::new(config.seed),
            waypoint: config.waypoint,
            behaviors: BTreeMap::new(),
            listeners: Vec::new(),
            attaching: BTreeSet::new(),
            commands: VecDeque::new(),
            events: Vec::new(),
            recording: true,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn clock(&self) -> &ClockSchedule<NodeId> {
        &self.clock
    }

    pub fn mailroom(&self) -> &Mailroom {
        &self.mailroom
    }

    pub fn rng_mut(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    pub fn waypoint(&self) -> &RandomWaypoint {
        &self.waypoint
    }

    pub fn current_time(&self) -> Tick {
        self.clock.current_time()
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn take_diagnostics(&mut self) -> Diagnostics {
        std::mem::take(&mut self.diagnostics)
    }

    /// Turns event recording on or off. Recording is on by default; turn it
    /// off for long runs where nobody drains the log.
    pub fn set_recording(&mut self, on: bool) {
        self.recording = on;
    }

    pub fn drain_events(&mut self) -> Vec<TimedEvent> {
        std::mem::take(&mut self.events)
    }

    // ----- node models -------------------------------------------------

    pub fn set_model(&mut self, name: &str, model: NodeModel) -> Result<(), KernelError> {
        self.topology.set_model(name, model)
    }

    pub fn model(&self, name: &str) -> Result<&NodeModel, KernelError> {
        self.topology.model(name)
    }

    pub fn add_topology_listener(&mut self, listener: Box<dyn TopologyListener>) {
        self.listeners.push(ListenerSlot {
            listener: Some(listener),
            deferred: VecDeque::new(),
        });
    }

    // ----- structure --------------------------------------------------

    pub fn add_node(&mut self, position: Point, model: &str) -> Result<NodeId, KernelError> {
        let (id, factory) = self.topology.insert_node(position, model)?;
        if let Some(factory) = factory {
            let mut behavior = factory.instantiate();
            let caps = behavior.capabilities();
            self.behaviors.insert(
                id,
                BehaviorSlot {
                    behavior: None,
                    caps,
                    node_events: false,
                    messages: false,
                    deferred: VecDeque::new(),
                },
            );
            self.attaching.insert(id);
            self.guarded(Some(id), "onAttach", |sim| {
                behavior.on_attach(&mut NodeContext::new(sim, id, caps))
            });
            self.attaching.remove(&id);
            if let Some(slot) = self.behaviors.get_mut(&id) {
                slot.deferred.clear();
                slot.behavior = Some(behavior);
            }
        }
        if !self.topology.contains(id) {
            // removed by its own on_attach
            return Ok(id);
        }
        let node = self.topology.try_node(id)?;
        let event = Event::NodeAdded {
            id,
            position: node.position(),
            properties: node.properties().clone(),
        };
        self.record(event);
        self.notify_listeners(TopologyNotice::NodeAdded(id));
        self.recompute_wireless(id);
        Ok(id)
    }

    pub fn remove_node(&mut self, id: NodeId) -> Result<(), KernelError> {
        self.topology.try_node(id)?;
        while let Some(link) = self.topology.incident_links(id).into_iter().next() {
            self.unlink(link);
            if !self.topology.contains(id) {
                return Ok(());
            }
        }
        self.clock.remove_listener(id);
        self.behaviors.remove(&id);
        let node = self.topology.remove_isolated_node(id)?;
        self.record(Event::NodeRemoved { id });
        self.notify_listeners(TopologyNotice::NodeRemoved(Box::new(node)));
        Ok(())
    }

    pub fn add_wired_link(&mut self, a: NodeId, b: NodeId) -> Result<(), KernelError> {
        let link = Link::new(a, b, LinkMode::Wired)?;
        self.topology.try_node(a)?;
        self.topology.try_node(b)?;
        if self.topology.has_link(&link) {
            return Err(KernelError::DuplicateLink(link.a(), link.b()));
        }
        self.link(link);
        Ok(())
    }

    pub fn remove_wired_link(&mut self, a: NodeId, b: NodeId) -> Result<(), KernelError> {
        let link = Link::new(a, b, LinkMode::Wired)?;
        if !self.topology.has_link(&link) {
            return Err(KernelError::UnknownLink(link.a(), link.b()));
        }
        self.unlink(link);
        Ok(())
    }

    pub fn neighbors(&self, id: NodeId) -> Result<BTreeSet<NodeId>, KernelError> {
        self.topology.neighbors(id)
    }

    pub fn property(&self, id: NodeId, key: &str) -> Result<Option<&PropertyValue>, KernelError> {
        Ok(self.topology.try_node(id)?.property(key))
    }

    /// Stores `value` and fires `propertyChanged`, even when the value is
    /// unchanged.
    pub fn set_property(
        &mut self,
        id: NodeId,
        key: &str,
        value: PropertyValue,
    ) -> Result<(), KernelError> {
        if key.is_empty() {
            return Err(KernelError::InvalidKey);
        }
        let node = self.topology.try_node_mut(id)?;
        node.properties.insert(key.to_owned(), value.clone());
        if self.attaching.contains(&id) {
            return Ok(());
        }
        self.record(Event::PropertyChanged {
            id,
            key: key.to_owned(),
            value,
        });
        self.notify_node(id, NodeNotice::PropertyChanged(key.to_owned()));
        Ok(())
    }

    /// Teleports a node, then refreshes its wireless links.
    pub fn move_to(&mut self, id: NodeId, position: Point) -> Result<(), KernelError> {
        let position = position.validated()?;
        self.topology.try_node_mut(id)?.position = position;
        self.after_move(id);
        Ok(())
    }

    pub fn set_comm_range(&mut self, id: NodeId, range: f64) -> Result<(), KernelError> {
        if !range.is_finite() || range < 0.0 {
            return Err(KernelError::InvalidRange(range));
        }
        self.topology.try_node_mut(id)?.comm_range = range;
        self.refresh_links(id);
        Ok(())
    }

    pub fn set_wireless_enabled(&mut self, id: NodeId, enabled: bool) -> Result<(), KernelError> {
        self.topology.try_node_mut(id)?.wireless_enabled = enabled;
        self.refresh_links(id);
        Ok(())
    }

    pub(crate) fn after_move(&mut self, id: NodeId) {
        if self.attaching.contains(&id) {
            return;
        }
        let position = match self.topology.node(id) {
            Some(n) => n.position(),
            None => return,
        };
        self.record(Event::NodeMoved { id, position });
        self.notify_node(id, NodeNotice::Moved);
        self.recompute_wireless(id);
    }

    fn refresh_links(&mut self, id: NodeId) {
        if !self.attaching.contains(&id) {
            self.recompute_wireless(id);
        }
    }

    /// Restores the wireless closure for every pair involving `id`.
    ///
    /// Each pair is re-evaluated at the moment it is visited, so listeners
    /// that move nodes while the loop runs cannot leave it stale.
    fn recompute_wireless(&mut self, id: NodeId) {
        let others: Vec<NodeId> = self
            .topology
            .node_ids()
            .into_iter()
            .filter(|o| *o != id)
            .collect();
        for pass_adds in [false, true] {
            for &other in &others {
                if !self.topology.contains(id) {
                    return;
                }
                let Ok(link) = Link::new(id, other, LinkMode::Wireless) else {
                    continue;
                };
                let exists = self.topology.has_link(&link);
                let wanted = self.topology.in_wireless_range(id, other);
                if pass_adds && wanted && !exists {
                    self.link(link);
                } else if !pass_adds && exists && !wanted {
                    self.unlink(link);
                }
            }
        }
    }

    fn link(&mut self, link: Link) {
        if self.topology.insert_link(link) {
            self.record(Event::LinkAdded(link));
            for end in link.endpoints() {
                self.notify_node(end, NodeNotice::LinkAdded(link));
            }
            self.notify_listeners(TopologyNotice::LinkAdded(link));
        }
    }

    fn unlink(&mut self, link: Link) {
        if self.topology.remove_link(&link) {
            self.record(Event::LinkRemoved(link));
            for end in link.endpoints() {
                self.notify_node(end, NodeNotice::LinkRemoved(link));
            }
            self.notify_listeners(TopologyNotice::LinkRemoved(link));
        }
    }

    // ----- clock and subscriptions ----------------------------------

    pub fn add_clock_listener(&mut self, id: NodeId, period: u64) -> Result<(), KernelError> {
        self.topology.try_node(id)?;
        self.clock.add_listener(id, period)
    }

    pub fn remove_clock_listener(&mut self, id: NodeId) -> Result<(), KernelError> {
        if self.clock.remove_listener(id) == 0 {
            return Err(KernelError::UnknownListener(id));
        }
        Ok(())
    }

    pub fn subscribe_node_events(&mut self, id: NodeId) -> Result<(), KernelError> {
        self.topology.try_node(id)?;
        if let Some(slot) = self.behaviors.get_mut(&id) {
            slot.node_events = true;
        }
        Ok(())
    }

    pub fn subscribe_messages(&mut self, id: NodeId) -> Result<(), KernelError> {
        self.topology.try_node(id)?;
        if let Some(slot) = self.behaviors.get_mut(&id) {
            slot.messages = true;
        }
        Ok(())
    }

    // ----- messaging --------------------------------------------------

    /// Queues an envelope for delivery on the next tick. An unknown explicit
    /// destination is not an error here; it is resolved at delivery.
    pub fn send(
        &mut self,
        sender: NodeId,
        destination: Destination,
        payload: Payload,
    ) -> Result<(), KernelError> {
        self.topology.try_node(sender)?;
        self.mailroom.post(Envelope {
            sender,
            destination,
            payload,
            sent_at: self.current_time(),
        });
        Ok(())
    }

    /// Delivers every envelope sent before the current tick, in FIFO order.
    /// Recipients are resolved per envelope against the live topology.
    fn deliver_due(&mut self) -> usize {
        let mut delivered = 0;
        for envelope in self.mailroom.take_due(self.current_time()) {
            let recipients = resolve_recipients(&envelope, &self.topology);
            if recipients.is_empty() {
                self.diagnostics.dropped_envelopes += 1;
                continue;
            }
            for to in recipients {
                if !self.topology.are_linked(envelope.sender, to) {
                    continue;
                }
                if self.behaviors.get(&to).is_some_and(|s| s.messages) {
                    self.notify_node(to, NodeNotice::Message(envelope.clone()));
                    delivered += 1;
                }
            }
        }
        self.diagnostics.delivered_messages += delivered as u64;
        delivered
    }

    // ----- ticks --------------------------------------------------------

    pub fn enqueue(&mut self, origin: Option<u64>, command: Command) {
        self.commands.push_back((origin, command));
    }

    pub fn queued_commands(&self) -> usize {
        self.commands.len()
    }

    pub fn apply_command(&mut self, command: &Command) -> Result<Option<NodeId>, KernelError> {
        match command {
            Command::AddNode { position, model } => self.add_node(*position, model).map(Some),
            Command::MoveNode { id, position } => self.move_to(*id, *position).map(|_| None),
            Command::RemoveNode { id } => self.remove_node(*id).map(|_| None),
        }
    }

    /// Applies queued commands immediately, without advancing time.
    pub fn apply_queued(&mut self) -> Vec<CommandOutcome> {
        let queued: Vec<_> = self.commands.drain(..).collect();
        queued
            .into_iter()
            .map(|(origin, command)| {
                let result = self.apply_command(&command);
                CommandOutcome {
                    origin,
                    command,
                    result,
                }
            })
            .collect()
    }

    /// Runs one time unit: commands, message delivery, clock callbacks,
    /// event flush, then `now += 1`.
    pub fn tick(&mut self) -> TickReport {
        let time = self.current_time();
        let commands = self.apply_queued();
        let deliveries = self.deliver_due();
        for id in self.clock.due() {
            if self.topology.contains(id) {
                self.notify_node(id, NodeNotice::Clock);
            }
        }
        let events = self.drain_events();
        self.clock.advance();
        TickReport {
            time,
            commands,
            deliveries,
            events,
        }
    }

    pub fn run_ticks(&mut self, n: u64) -> Vec<TickReport> {
        (0..n).map(|_| self.tick()).collect()
    }

    // ----- dispatch ---------------------------------------------------

    fn record(&mut self, event: Event) {
        if self.recording {
            self.events.push(TimedEvent {
                time: self.current_time(),
                event,
            });
        }
    }

    pub(crate) fn record_violation(&mut self, node: NodeId, capability: Capabilities) {
        self.diagnostics.violations.push(CapabilityViolation {
            time: self.current_time(),
            node,
            capability,
        });
    }

    fn guarded<F>(&mut self, node: Option<NodeId>, hook: &'static str, f: F)
    where
        F: FnOnce(&mut Simulation) -> Result<(), KernelError>,
    {
        let message = match catch_unwind(AssertUnwindSafe(|| f(self))) {
            Ok(Ok(())) => return,
            Ok(Err(KernelError::Forbidden(_))) => return,
            Ok(Err(e)) => e.to_string(),
            Err(panic) => panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_owned()),
        };
        warn!("{hook} hook failed on {node:?}: {message}");
        self.diagnostics.hook_failures.push(HookFailure {
            time: self.current_time(),
            node,
            hook,
            message,
        });
    }

    fn notify_node(&mut self, id: NodeId, notice: NodeNotice) {
        let Some(slot) = self.behaviors.get_mut(&id) else {
            return;
        };
        let subscribed = match notice {
            NodeNotice::Clock => true,
            NodeNotice::Message(_) => slot.messages,
            NodeNotice::LinkAdded(_)
            | NodeNotice::LinkRemoved(_)
            | NodeNotice::Moved
            | NodeNotice::PropertyChanged(_) => slot.node_events,
        };
        if !subscribed || self.attaching.contains(&id) {
            return;
        }
        let Some(mut behavior) = slot.behavior.take() else {
            slot.deferred.push_back(notice);
            return;
        };
        let caps = slot.caps;
        let mut next = Some(notice);
        while let Some(notice) = next {
            self.guarded(Some(id), notice.hook_name(), |sim| {
                let mut ctx = NodeContext::new(sim, id, caps);
                match &notice {
                    NodeNotice::Clock => behavior.on_clock(&mut ctx),
                    NodeNotice::Message(env) => behavior.on_message(&mut ctx, env),
                    NodeNotice::LinkAdded(l) => behavior.on_link_added(&mut ctx, l),
                    NodeNotice::LinkRemoved(l) => behavior.on_link_removed(&mut ctx, l),
                    NodeNotice::Moved => behavior.on_node_moved(&mut ctx),
                    NodeNotice::PropertyChanged(k) => behavior.on_property_changed(&mut ctx, k),
                }
            });
            next = self
                .behaviors
                .get_mut(&id)
                .and_then(|s| s.deferred.pop_front());
        }
        if let Some(slot) = self.behaviors.get_mut(&id) {
            slot.behavior = Some(behavior);
        }
    }

    fn notify_listeners(&mut self, notice: TopologyNotice) {
        let count = self.listeners.len();
        for index in 0..count {
            let Some(mut listener) = self.listeners[index].listener.take() else {
                self.listeners[index].deferred.push_back(notice.clone());
                continue;
            };
            let mut next = Some(notice.clone());
            while let Some(notice) = next {
                self.guarded(None, notice.hook_name(), |sim| match &notice {
                    TopologyNotice::NodeAdded(id) => listener.on_node_added(sim, *id),
                    TopologyNotice::NodeRemoved(node) => listener.on_node_removed(sim, node),
                    TopologyNotice::LinkAdded(l) => listener.on_link_added(sim, l),
                    TopologyNotice::LinkRemoved(l) => listener.on_link_removed(sim, l),
                });
                next = self.listeners[index].deferred.pop_front();
            }
            self.listeners[index].listener = Some(listener);
        }
    }
}
