//! Plane geometry shared by the topology, mobility and export layers.
//!
//! Trigonometry goes through `libm` so that positions computed from angles are
//! bit-identical on every platform; traces hash the same everywhere.

use serde::{Deserialize, Serialize};

use crate::error::KernelError;

/// A point in the simulation plane, in distance units.
///
/// The plane is screen-like: `x` grows to the right and `y` grows downward,
/// so angles increase from the +x axis toward the +y axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Returns `self` if both coordinates are finite.
    pub fn validated(self) -> Result<Self, KernelError> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(KernelError::InvalidGeometry(self))
        }
    }

    /// Euclidean distance, computed as `sqrt(dx² + dy²)`.
    pub fn distance(&self, other: &Point) -> f64 {
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        (dx * dx + dy * dy).sqrt()
    }

    /// Angle of the vector from `self` to `toward`, in radians.
    pub fn angle_to(&self, toward: &Point) -> f64 {
        libm::atan2(toward.y - self.y, toward.x - self.x)
    }

    /// The point reached by travelling `distance` along `angle`.
    pub fn advanced(&self, angle: f64, distance: f64) -> Point {
        Point {
            x: self.x + distance * libm::cos(angle),
            y: self.y + distance * libm::sin(angle),
        }
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}
