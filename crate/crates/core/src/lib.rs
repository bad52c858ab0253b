//! A deterministic, event-driven simulation kernel for distributed
//! algorithms on dynamic networks.
//!
//! Nodes live in a plane and link automatically when mutually within radio
//! range. Algorithms are [`Behavior`]s attached to nodes through named
//! [`NodeModel`]s, or global [`TopologyListener`]s. A discrete clock drives
//! periodic callbacks, and messages travel one tick between linked nodes.
//!
//! ```
//! use dynakernel::{corpus, NodeModel, Point, Simulation, DEFAULT_MODEL};
//!
//! let mut sim = Simulation::default();
//! sim.set_model(DEFAULT_MODEL, NodeModel::with_behavior(corpus::red_green_v1())).unwrap();
//! let a = sim.add_node(Point::new(0.0, 0.0), DEFAULT_MODEL).unwrap();
//! sim.add_node(Point::new(50.0, 0.0), DEFAULT_MODEL).unwrap();
//! sim.tick();
//! assert_eq!(sim.property(a, "color").unwrap().unwrap().as_str(), Some("green"));
//! ```

pub mod behavior;
pub mod clock;
pub mod corpus;
pub mod error;
pub mod event;
pub mod geometry;
pub mod messaging;
pub mod mobility;
pub mod property;
pub mod rng;
pub mod session;
pub mod simulation;
pub mod tikz;
pub mod topology;

pub use behavior::{
    Behavior, BehaviorFactory, Capabilities, HookResult, NodeContext, TopologyListener,
};
pub use clock::{ClockSchedule, Tick};
pub use error::KernelError;
pub use event::{Event, TimedEvent};
pub use geometry::Point;
pub use messaging::{Destination, Envelope, Mailroom, Payload};
pub use mobility::RandomWaypoint;
pub use property::{Properties, PropertyValue};
pub use rng::SimRng;
pub use simulation::{
    Command, CommandOutcome, Diagnostics, Simulation, SimulationConfig, TickReport,
};
pub use tikz::{to_tikz, TikzOptions};
pub use topology::{Link, LinkMode, Node, NodeId, NodeModel, Topology, DEFAULT_MODEL};
