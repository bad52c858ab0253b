//! Structural state: nodes, links and the node-model registry.
//!
//! [`Topology`] is pure data. It never fires events; the [`Simulation`]
//! drives every mutation that must be observed by listeners.
//!
//! [`Simulation`]: crate::simulation::Simulation

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::behavior::BehaviorFactory;
use crate::error::KernelError;
use crate::geometry::Point;
use crate::property::{Properties, PropertyValue};

pub const DEFAULT_MODEL: &str = "default";
pub const DEFAULT_COMM_RANGE: f64 = 100.0;
pub const DEFAULT_WIDTH: f64 = 800.0;
pub const DEFAULT_HEIGHT: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkMode {
    Wireless,
    Wired,
}

/// An undirected link. Endpoints are stored in ascending order so `(a, b)`
/// and `(b, a)` are the same value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    a: NodeId,
    b: NodeId,
    mode: LinkMode,
}

impl Link {
    pub fn new(a: NodeId, b: NodeId, mode: LinkMode) -> Result<Self, KernelError> {
        if a == b {
            return Err(KernelError::InvalidLink(a, b));
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Ok(Link { a, b, mode })
    }

    pub fn endpoints(&self) -> [NodeId; 2] {
        [self.a, self.b]
    }

    pub fn a(&self) -> NodeId {
        self.a
    }

    pub fn b(&self) -> NodeId {
        self.b
    }

    pub fn mode(&self) -> LinkMode {
        self.mode
    }

    pub fn touches(&self, id: NodeId) -> bool {
        self.a == id || self.b == id
    }

    /// The endpoint opposite to `id`, if `id` is an endpoint.
    pub fn other(&self, id: NodeId) -> Option<NodeId> {
        if id == self.a {
            Some(self.b)
        } else if id == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    id: NodeId,
    pub(crate) position: Point,
    pub(crate) direction: f64,
    pub(crate) comm_range: f64,
    pub(crate) wireless_enabled: bool,
    pub(crate) properties: Properties,
    behavior_name: Option<String>,
}

impl Node {
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn position(&self) -> Point {
        self.position
    }

    /// Heading in radians, measured from +x toward +y.
    pub fn direction(&self) -> f64 {
        self.direction
    }

    pub fn comm_range(&self) -> f64 {
        self.comm_range
    }

    pub fn wireless_enabled(&self) -> bool {
        self.wireless_enabled
    }

    pub fn properties(&self) -> &Properties {
        &self.properties
    }

    pub fn property(&self, key: &str) -> Option<&PropertyValue> {
        self.properties.get(key)
    }

    /// Name of the behavior the node was created with.
    pub fn behavior_name(&self) -> Option<&str> {
        self.behavior_name.as_deref()
    }

    pub fn distance(&self, p: &Point) -> f64 {
        self.position.distance(p)
    }
}

/// Prototype cloned into every node created under a model name.
#[derive(Clone)]
pub struct NodeModel {
    pub behavior: Option<BehaviorFactory>,
    pub properties: Properties,
    pub comm_range: f64,
    pub wireless: bool,
}

impl Default for NodeModel {
    fn default() -> Self {
        NodeModel {
            behavior: None,
            properties: Properties::new(),
            comm_range: DEFAULT_COMM_RANGE,
            wireless: true,
        }
    }
}

impl NodeModel {
    pub fn with_behavior(behavior: BehaviorFactory) -> Self {
        NodeModel {
            behavior: Some(behavior),
            ..NodeModel::default()
        }
    }

    pub fn comm_range(mut self, range: f64) -> Self {
        self.comm_range = range;
        self
    }

    pub fn wireless(mut self, wireless: bool) -> Self {
        self.wireless = wireless;
        self
    }

    pub fn property(mut self, key: impl Into<String>, value: impl Into<PropertyValue>) -> Self {
        self.properties.insert(key.into(), value.into());
        self
    }

    fn validate(&self) -> Result<(), KernelError> {
        if !self.comm_range.is_finite() || self.comm_range < 0.0 {
            return Err(KernelError::InvalidRange(self.comm_range));
        }
        if self.properties.keys().any(String::is_empty) {
            return Err(KernelError::InvalidKey);
        }
        Ok(())
    }
}

impl fmt::Debug for NodeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NodeModel")
            .field("behavior", &self.behavior.as_ref().map(|b| b.name()))
            .field("properties", &self.properties)
            .field("comm_range", &self.comm_range)
            .field("wireless", &self.wireless)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct Topology {
    nodes: BTreeMap<NodeId, Node>,
    links: BTreeSet<Link>,
    adjacency: BTreeMap<NodeId, BTreeSet<Link>>,
    models: BTreeMap<String, NodeModel>,
    next_id: u32,
    width: f64,
    height: f64,
}

impl Default for Topology {
    fn default() -> Self {
        Topology::new(DEFAULT_WIDTH, DEFAULT_HEIGHT)
    }
}

impl Topology {
    pub fn new(width: f64, height: f64) -> Self {
        let mut models = BTreeMap::new();
        models.insert(DEFAULT_MODEL.to_owned(), NodeModel::default());
        Topology {
            nodes: BTreeMap::new(),
            links: BTreeSet::new(),
            adjacency: BTreeMap::new(),
            models,
            next_id: 0,
            width,
            height,
        }
    }

    pub fn dimensions(&self) -> (f64, f64) {
        (self.width, self.height)
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn try_node(&self, id: NodeId) -> Result<&Node, KernelError> {
        self.nodes.get(&id).ok_or(KernelError::UnknownNode(id))
    }

    pub(crate) fn try_node_mut(&mut self, id: NodeId) -> Result<&mut Node, KernelError> {
        self.nodes.get_mut(&id).ok_or(KernelError::UnknownNode(id))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.keys().copied().collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Links in ascending `(a, b, mode)` order.
    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.iter()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn has_link(&self, link: &Link) -> bool {
        self.links.contains(link)
    }

    /// Whether `a` and `b` share a link of any mode.
    pub fn are_linked(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency
            .get(&a)
            .is_some_and(|ls| ls.iter().any(|l| l.other(a) == Some(b)))
    }

    pub fn incident_links(&self, id: NodeId) -> Vec<Link> {
        self.adjacency
            .get(&id)
            .map(|ls| ls.iter().copied().collect())
            .unwrap_or_default()
    }

    pub fn neighbors(&self, id: NodeId) -> Result<BTreeSet<NodeId>, KernelError> {
        let links = self
            .adjacency
            .get(&id)
            .ok_or(KernelError::UnknownNode(id))?;
        Ok(links.iter().filter_map(|l| l.other(id)).collect())
    }

    pub fn degree(&self, id: NodeId) -> Result<usize, KernelError> {
        self.neighbors(id).map(|n| n.len())
    }

    /// The wireless disk predicate: both ends radio-enabled and mutually in
    /// range, boundary inclusive.
    pub fn in_wireless_range(&self, a: NodeId, b: NodeId) -> bool {
        if a == b {
            return false;
        }
        match (self.nodes.get(&a), self.nodes.get(&b)) {
            (Some(na), Some(nb)) => {
                na.wireless_enabled
                    && nb.wireless_enabled
                    && na.position.distance(&nb.position) <= na.comm_range.min(nb.comm_range)
            }
            _ => false,
        }
    }

    pub fn model(&self, name: &str) -> Result<&NodeModel, KernelError> {
        self.models
            .get(name)
            .ok_or_else(|| KernelError::UnknownModel(name.to_owned()))
    }

    pub fn set_model(&mut self, name: &str, model: NodeModel) -> Result<(), KernelError> {
        if name.is_empty() {
            return Err(KernelError::InvalidKey);
        }
        model.validate()?;
        self.models.insert(name.to_owned(), model);
        Ok(())
    }

    pub fn model_names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }

    /// Creates a node from `model_name` without linking it. The model's
    /// behavior factory is returned for the caller to instantiate.
    pub(crate) fn insert_node(
        &mut self,
        position: Point,
        model_name: &str,
    ) -> Result<(NodeId, Option<BehaviorFactory>), KernelError> {
        let position = position.validated()?;
        let model = self.model(model_name)?.clone();
        let id = NodeId(self.next_id);
        self.next_id += 1;
        let node = Node {
            id,
            position,
            direction: 0.0,
            comm_range: model.comm_range,
            wireless_enabled: model.wireless,
            properties: model.properties,
            behavior_name: model.behavior.as_ref().map(|b| b.name().to_owned()),
        };
        self.nodes.insert(id, node);
        self.adjacency.insert(id, BTreeSet::new());
        Ok((id, model.behavior))
    }

    /// Removes a node that no longer has incident links.
    pub(crate) fn remove_isolated_node(&mut self, id: NodeId) -> Result<Node, KernelError> {
        debug_assert!(self.adjacency.get(&id).is_none_or(|l| l.is_empty()));
        self.adjacency.remove(&id);
        self.nodes.remove(&id).ok_or(KernelError::UnknownNode(id))
    }

    pub(crate) fn insert_link(&mut self, link: Link) -> bool {
        if !self.links.insert(link) {
            return false;
        }
        for end in link.endpoints() {
            self.adjacency.entry(end).or_default().insert(link);
        }
        true
    }

    pub(crate) fn remove_link(&mut self, link: &Link) -> bool {
        if !self.links.remove(link) {
            return false;
        }
        for end in link.endpoints() {
            if let Some(ls) = self.adjacency.get_mut(&end) {
                ls.remove(link);
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_nodes(dist: f64) -> (Topology, NodeId, NodeId) {
        let mut t = Topology::default();
        let (a, _) = t.insert_node(Point::ORIGIN, DEFAULT_MODEL).unwrap();
        let (b, _) = t.insert_node(Point::new(dist, 0.0), DEFAULT_MODEL).unwrap();
        (t, a, b)
    }

    #[test]
    fn link_identity_is_undirected() {
        let l1 = Link::new(NodeId(3), NodeId(1), LinkMode::Wired).unwrap();
        let l2 = Link::new(NodeId(1), NodeId(3), LinkMode::Wired).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(l1.endpoints(), [NodeId(1), NodeId(3)]);
        assert_eq!(l1.other(NodeId(1)), Some(NodeId(3)));
        assert_eq!(l1.other(NodeId(2)), None);
        assert!(matches!(
            Link::new(NodeId(0), NodeId(0), LinkMode::Wired),
            Err(KernelError::InvalidLink(..))
        ));
    }

    #[test]
    fn range_boundary_is_inclusive() {
        let (t, a, b) = two_nodes(100.0);
        assert!(t.in_wireless_range(a, b));
        let (t, a, b) = two_nodes(100.000_001);
        assert!(!t.in_wireless_range(a, b));
    }

    #[test]
    fn asymmetric_ranges_use_the_smaller() {
        let (mut t, a, b) = two_nodes(80.0);
        t.try_node_mut(b).unwrap().comm_range = 50.0;
        assert!(!t.in_wireless_range(a, b));
        assert!(!t.in_wireless_range(b, a));
        t.try_node_mut(b).unwrap().comm_range = 80.0;
        assert!(t.in_wireless_range(b, a));
    }

    #[test]
    fn neighbors_deduplicate_modes() {
        let (mut t, a, b) = two_nodes(10.0);
        t.insert_link(Link::new(a, b, LinkMode::Wireless).unwrap());
        t.insert_link(Link::new(a, b, LinkMode::Wired).unwrap());
        assert_eq!(t.link_count(), 2);
        assert_eq!(t.neighbors(a).unwrap(), BTreeSet::from([b]));
        assert_eq!(t.degree(b).unwrap(), 1);
    }

    #[test]
    fn default_model_always_present() {
        let t = Topology::default();
        let m = t.model(DEFAULT_MODEL).unwrap();
        assert!(m.behavior.is_none());
        assert_eq!(m.comm_range, DEFAULT_COMM_RANGE);
        assert!(m.wireless);
        assert!(matches!(t.model("nope"), Err(KernelError::UnknownModel(_))));
    }

    #[test]
    fn model_validation() {
        let mut t = Topology::default();
        assert_eq!(
            t.set_model("", NodeModel::default()),
            Err(KernelError::InvalidKey)
        );
        assert!(matches!(
            t.set_model("x", NodeModel::default().comm_range(-1.0)),
            Err(KernelError::InvalidRange(_))
        ));
        assert_eq!(
            t.set_model("x", NodeModel::default().property("", 1i64)),
            Err(KernelError::InvalidKey)
        );
    }

    #[test]
    fn insert_rejects_bad_input() {
        let mut t = Topology::default();
        assert!(matches!(
            t.insert_node(Point::ORIGIN, "ghost"),
            Err(KernelError::UnknownModel(_))
        ));
        assert!(matches!(
            t.insert_node(Point::new(f64::NAN, 1.0), DEFAULT_MODEL),
            Err(KernelError::InvalidGeometry(_))
        ));
        assert_eq!(t.node_count(), 0);
    }
}
