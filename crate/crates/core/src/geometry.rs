//! Shared value types: poses, wheel travel, grid cells and the robot's
//! physical configuration.
//!
//! Units are millimetres and radians throughout. The map frame has its origin
//! at the outer corner of the top-left cell, +x running along columns and +y
//! running along rows; heading 0 points along +x and positive angles are
//! counter-clockwise in that (x, y) frame.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Wraps an angle into (-π, π]. Non-finite input comes back as NaN.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    if !a.is_finite() {
        return f64::NAN;
    }
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Maps `a` onto the half-open interval (-π, π].
pub fn normalize_angle(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(invalid(format!("angle must be finite, got {a}")));
    }
    Ok(wrap_angle(a))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Point2) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Robot position and heading. `theta` is kept in (-π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(invalid(format!(
                "pose position must be finite, got ({x}, {y})"
            )));
        }
        Ok(Self {
            x,
            y,
            theta: normalize_angle(theta)?,
        })
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Per-step travel of the left and right wheels. Negative is backwards.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelDelta {
    pub d_left: f64,
    pub d_right: f64,
}

impl WheelDelta {
    pub const fn new(d_left: f64, d_right: f64) -> Self {
        Self { d_left, d_right }
    }

    pub fn is_finite(&self) -> bool {
        self.d_left.is_finite() && self.d_right.is_finite()
    }
}

/// Grid cell coordinate, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn manhattan(&self, other: Cell) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotConfig {
    /// Distance between the two drive wheels, mm.
    pub wheelbase: f64,
    /// Radius of the bounding disk used for collisions, mm.
    pub body_radius: f64,
    /// mm/s
    pub max_linear_speed: f64,
    /// rad/s
    pub max_angular_speed: f64,
    pub sonar_max_range: f64,
    pub sonar_count: usize,
    pub camera_fov: f64,
    pub camera_frame_width: u32,
    pub camera_frame_height: u32,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            wheelbase: 330.0,
            body_radius: 200.0,
            max_linear_speed: 400.0,
            max_angular_speed: 0.8,
            sonar_max_range: 5000.0,
            sonar_count: 8,
            camera_fov: PI / 3.0,
            camera_frame_width: 640,
            camera_frame_height: 480,
        }
    }
}

impl RobotConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wheelbase", self.wheelbase),
            ("body_radius", self.body_radius),
            ("max_linear_speed", self.max_linear_speed),
            ("max_angular_speed", self.max_angular_speed),
            ("sonar_max_range", self.sonar_max_range),
            ("camera_fov", self.camera_fov),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {value}")));
            }
        }
        if self.sonar_count == 0 {
            return Err(invalid("sonar_count must be at least 1"));
        }
        if self.camera_fov > TAU {
            return Err(invalid("camera_fov must not exceed a full turn"));
        }
        if self.camera_frame_width == 0 || self.camera_frame_height == 0 {
            return Err(invalid("camera frame dimensions must be nonzero"));
        }
        Ok(())
    }

    /// Relative bearings of the sonar ring, spread evenly across the front
    /// half-plane from -π/2 (right) to +π/2 (left). A single sensor looks
    /// straight ahead.
    pub fn sonar_bearings(&self) -> Vec<f64> {
        let n = self.sonar_count;
        if n == 1 {
            return vec![0.0];
        }
        (0..n)
            .map(|i| -FRAC_PI_2 + PI * i as f64 / (n - 1) as f64)
            .collect()
    }
}
