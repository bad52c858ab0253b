//! Direction, stepping and the RandomWayPoint mobility model.
//!
//! RandomWayPoint is stateless: a node's current waypoint lives in its
//! `"target"` property, so any behavior can drive it.

use crate::error::KernelError;
use crate::geometry::Point;
use crate::property::PropertyValue;
use crate::simulation::Simulation;
use crate::topology::NodeId;

pub const TARGET_KEY: &str = "target";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomWaypoint {
    /// Distance covered per step; also the arrival threshold.
    pub step: f64,
    /// Targets are drawn from `[0, width) × [0, height)` on the integer grid.
    pub width: u32,
    pub height: u32,
}

impl Default for RandomWaypoint {
    fn default() -> Self {
        RandomWaypoint {
            step: 5.0,
            width: 400,
            height: 300,
        }
    }
}

impl RandomWaypoint {
    /// A configuration whose steps never move a node.
    pub fn frozen() -> Self {
        RandomWaypoint {
            step: 0.0,
            ..Self::default()
        }
    }
}

impl Simulation {
    /// Points the node at `toward`. Only the angle is kept.
    pub fn set_direction(&mut self, id: NodeId, toward: Point) -> Result<(), KernelError> {
        let toward = toward.validated()?;
        let node = self.topology.try_node_mut(id)?;
        if node.position == toward {
            return Err(KernelError::DegenerateDirection);
        }
        node.direction = node.position.angle_to(&toward);
        Ok(())
    }

    pub fn set_direction_angle(&mut self, id: NodeId, theta: f64) -> Result<(), KernelError> {
        if !theta.is_finite() {
            return Err(KernelError::InvalidGeometry(Point::new(theta, theta)));
        }
        self.topology.try_node_mut(id)?.direction = theta;
        Ok(())
    }

    /// Advances the node along its direction. Positions are never clamped.
    /// Fires `nodeMoved` (even for a zero step) and relinks synchronously.
    pub fn move_forward(&mut self, id: NodeId, distance: f64) -> Result<(), KernelError> {
        if !distance.is_finite() || distance < 0.0 {
            return Err(KernelError::InvalidDistance(distance));
        }
        let node = self.topology.try_node_mut(id)?;
        node.position = node.position.advanced(node.direction, distance);
        self.after_move(id);
        Ok(())
    }

    pub fn distance(&self, id: NodeId, p: &Point) -> Result<f64, KernelError> {
        Ok(self.topology.try_node(id)?.distance(p))
    }

    pub fn waypoint_init(&mut self, id: NodeId) -> Result<(), KernelError> {
        self.topology.try_node(id)?;
        let target = Point::new(
            self.rng.next_int(self.waypoint.width) as f64,
            self.rng.next_int(self.waypoint.height) as f64,
        );
        self.set_property(id, TARGET_KEY, PropertyValue::Point(target))
    }

    /// One step: aim at the target, move, and pick a new target once closer
    /// than one step.
    ///
    /// A node sitting exactly on its target keeps its previous heading.
    pub fn waypoint_move(&mut self, id: NodeId) -> Result<(), KernelError> {
        let target = self
            .property(id, TARGET_KEY)?
            .and_then(PropertyValue::as_point)
            .ok_or(KernelError::MissingWaypoint(id))?;
        match self.set_direction(id, target) {
            Ok(()) | Err(KernelError::DegenerateDirection) => {}
            Err(e) => return Err(e),
        }
        let step = self.waypoint.step;
        self.move_forward(id, step)?;
        if self.distance(id, &target)? < step {
            self.waypoint_init(id)?;
        }
        Ok(())
    }
}
