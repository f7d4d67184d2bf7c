//! The k-legged spider: `k >= 2` half-lines glued at a common hub.
//!
//! It is a metric tree, hence NPC, but not a Riemannian manifold: the hub is a
//! branch point. Geodesics between points on different legs pass through it.

use std::fmt;

/// A point `(leg, radius)`; the hub is stored canonically as `(1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiderPoint {
    leg: usize,
    radius: f64,
}

impl SpiderPoint {
    /// Legs are numbered from 1. Radius 0 maps every leg to the hub.
    pub fn new(leg: usize, radius: f64) -> Self {
        if radius == 0.0 {
            Self::hub()
        } else {
            Self { leg, radius }
        }
    }

    pub fn hub() -> Self {
        Self { leg: 1, radius: 0.0 }
    }

    pub fn leg(&self) -> usize {
        self.leg
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_hub(&self) -> bool {
        self.radius == 0.0
    }

    /// Signed coordinate under the isometry of the two-legged spider with the
    /// real line: leg 1 is the positive half-axis, leg 2 the negative one.
    pub fn signed_coordinate(&self) -> f64 {
        if self.leg == 1 {
            self.radius
        } else {
            -self.radius
        }
    }

    pub fn from_signed_coordinate(x: f64) -> Self {
        if x >= 0.0 {
            Self::new(1, x)
        } else {
            Self::new(2, -x)
        }
    }
}

impl fmt::Display for SpiderPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.leg, self.radius)
    }
}

fn same_ray(x: &SpiderPoint, y: &SpiderPoint) -> bool {
    x.leg == y.leg || x.is_hub() || y.is_hub()
}

pub fn distance(x: &SpiderPoint, y: &SpiderPoint) -> f64 {
    if same_ray(x, y) {
        (x.radius - y.radius).abs()
    } else {
        x.radius + y.radius
    }
}

pub fn geodesic(x: &SpiderPoint, y: &SpiderPoint, t: f64) -> SpiderPoint {
    if t == 0.0 || x == y {
        return *x;
    }
    if t == 1.0 {
        return *y;
    }
    if same_ray(x, y) {
        let leg = if x.is_hub() { y.leg } else { x.leg };
        return SpiderPoint::new(leg, x.radius + t * (y.radius - x.radius));
    }
    // arc length travelled from x; the hub sits at arc length x.radius
    let travelled = t * (x.radius + y.radius);
    if travelled <= x.radius {
        SpiderPoint::new(x.leg, x.radius - travelled)
    } else {
        SpiderPoint::new(y.leg, travelled - x.radius)
    }
}
