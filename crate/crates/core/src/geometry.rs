//! Planar geometry shared by the world, the map and the planner.
//!
//! Headings are in degrees, clockwise, with 0 pointing along +y.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Point reached by travelling `distance` meters along absolute `heading`.
    pub fn offset(&self, heading: f64, distance: f64) -> Point {
        let (dx, dy) = heading_vector(heading);
        Point::new(self.x + dx * distance, self.y + dy * distance)
    }

    /// Absolute heading from `self` towards `other`.
    pub fn heading_to(&self, other: &Point) -> f64 {
        normalize_heading((other.x - self.x).atan2(other.y - self.y).to_degrees())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_heading(heading),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

pub fn normalize_heading(degrees: f64) -> f64 {
    let h = degrees.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

/// Unit vector (dx, dy) for a clockwise-from-+y heading.
pub fn heading_vector(heading: f64) -> (f64, f64) {
    let r = heading.to_radians();
    (r.sin(), r.cos())
}

/// Smallest absolute angular difference between two headings, in [0, 180].
pub fn angular_gap(a: f64, b: f64) -> f64 {
    let d = normalize_heading(a - b);
    d.min(360.0 - d)
}

/// The eight egocentric direction sectors, numbered clockwise from Front.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sector {
    Front = 1,
    RightFront = 2,
    RightSide = 3,
    RightRear = 4,
    Behind = 5,
    LeftRear = 6,
    LeftSide = 7,
    LeftFront = 8,
}

impl Sector {
    pub const ALL: [Sector; 8] = [
        Sector::Front,
        Sector::RightFront,
        Sector::RightSide,
        Sector::RightRear,
        Sector::Behind,
        Sector::LeftRear,
        Sector::LeftSide,
        Sector::LeftFront,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(index: u8) -> Option<Sector> {
        Self::ALL.get(usize::from(index).checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Sector::Front => "Front",
            Sector::RightFront => "Right Front",
            Sector::RightSide => "Right Side",
            Sector::RightRear => "Right Rear",
            Sector::Behind => "Behind",
            Sector::LeftRear => "Left Rear",
            Sector::LeftSide => "Left Side",
            Sector::LeftFront => "Left Front",
        }
    }

    pub fn from_name(name: &str) -> Option<Sector> {
        Self::ALL.iter().copied().find(|s| s.name() == name)
    }

    /// Sector containing a relative heading. Each sector is a half-open
    /// 45 degree arc centred on its axis, so 337.5 belongs to Front and
    /// 22.5 to Right Front.
    pub fn of_heading(rel_heading: f64) -> Sector {
        let h = normalize_heading(rel_heading + 22.5);
        let k = ((h / 45.0).floor() as usize).min(7);
        Self::ALL[k]
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
