use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::odometry::MotionCommand;

/// Axis-aligned box in image pixels, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn center_x(&self) -> f64 {
        (self.x_min + self.x_max) / 2.0
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }
}

/// One detector output. The simulated camera produces these; a real detector
/// would plug in at the same seam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    pub confidence: f64,
    pub bbox: BBox,
}

impl Detection {
    /// Checks box ordering, confidence range and horizontal frame bounds.
    /// `frame_height` is optional because steering only needs the width.
    pub fn validate(&self, frame_width: f64, frame_height: Option<f64>) -> Result<()> {
        let b = &self.bbox;
        let fail = |msg: String| Err(Error::InvalidDetection(msg));
        if ![b.x_min, b.y_min, b.x_max, b.y_max, self.confidence]
            .iter()
            .all(|v| v.is_finite())
        {
            return fail("non-finite field".into());
        }
        if !(b.x_min < b.x_max && b.y_min < b.y_max) {
            return fail(format!("degenerate box {b:?}"));
        }
        if b.x_min < 0.0 || b.x_max > frame_width || b.y_min < 0.0 {
            return fail(format!("box {b:?} outside the {frame_width}px frame"));
        }
        if let Some(h) = frame_height {
            if b.y_max > h {
                return fail(format!("box {b:?} below the {h}px frame"));
            }
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return fail(format!("confidence {} outside [0, 1]", self.confidence));
        }
        Ok(())
    }
}

/// Highest-confidence detection carrying `target_label`. Ties go to the
/// leftmost box, then to the earlier entry.
pub fn select_target<'a>(detections: &'a [Detection], target_label: &str) -> Option<&'a Detection> {
    let mut best: Option<&Detection> = None;
    for d in detections.iter().filter(|d| d.label == target_label) {
        best = match best {
            Some(b)
                if b.confidence > d.confidence
                    || (b.confidence == d.confidence && b.bbox.x_min <= d.bbox.x_min) =>
            {
                Some(b)
            }
            _ => Some(d),
        };
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub target_label: String,
    /// Odd, at least 3.
    pub segment_count: usize,
    /// Halt once the target is closer than this, mm.
    pub approach_distance: f64,
    pub pursuit_speed: f64,
    pub turn_speed: f64,
    /// Turn away from the target's side of the image instead of toward it.
    pub invert_turns: bool,
    /// Physical width assumed when estimating range from box width, mm.
    pub target_width: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            target_label: "person".into(),
            segment_count: 3,
            approach_distance: 500.0,
            pursuit_speed: 300.0,
            turn_speed: 0.5,
            invert_turns: false,
            target_width: 500.0,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_count < 3 || self.segment_count.is_multiple_of(2) {
            return Err(invalid(format!(
                "segment_count must be odd and at least 3, got {}",
                self.segment_count
            )));
        }
        if !(self.approach_distance > 0.0) {
            return Err(invalid("approach_distance must be positive"));
        }
        if !(self.pursuit_speed > 0.0 && self.turn_speed > 0.0) {
            return Err(invalid("tracker speeds must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Search,
    Pursuit,
    Approach,
    Halted,
}

impl Zone {
    pub fn as_str(&self) -> &'static str {
        match self {
            Zone::Search => "search",
            Zone::Pursuit => "pursuit",
            Zone::Approach => "approach",
            Zone::Halted => "halted",
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOutput {
    pub command: MotionCommand,
    pub zone: Zone,
}

/// Range from apparent width with a pinhole model:
/// `target_width · focal / bbox_width`, focal = `frame_width / (2·tan(fov/2))`.
pub fn estimate_range(bbox: &BBox, target_width: f64, frame_width: f64, fov: f64) -> f64 {
    let focal = frame_width / (2.0 * (fov / 2.0).tan());
    target_width * focal / bbox.width()
}

/// One step of segment-based target tracking.
///
/// Image x grows with counter-clockwise bearing, so a box right of centre
/// calls for a positive angular rate. Within twice the approach distance the
/// forward speed tapers; inside the approach distance the robot halts.
pub fn track_step(
    target: Option<&Detection>,
    range_to_target: Option<f64>,
    cfg: &TrackerConfig,
    frame_width: u32,
) -> Result<TrackOutput> {
    if frame_width == 0 {
        return Err(invalid("frame_width must be positive"));
    }
    let Some(target) = target else {
        return Ok(TrackOutput {
            command: MotionCommand::new(0.0, cfg.turn_speed),
            zone: Zone::Search,
        });
    };
    let fw = frame_width as f64;
    target.validate(fw, None)?;

    if let Some(range) = range_to_target {
        if range < cfg.approach_distance {
            return Ok(TrackOutput {
                command: MotionCommand::STOP,
                zone: Zone::Halted,
            });
        }
    }
    let n = cfg.segment_count.max(1);
    let segment = ((target.bbox.center_x() / (fw / n as f64)).floor() as usize).min(n - 1);
    let offset = segment as i64 - (n / 2) as i64;
    let near = range_to_target.is_some_and(|r| r < 2.0 * cfg.approach_distance);
    let zone = if near { Zone::Approach } else { Zone::Pursuit };

    let command = if offset == 0 {
        let speed = match range_to_target {
            Some(r) if near => {
                cfg.pursuit_speed
                    * ((r - cfg.approach_distance) / cfg.approach_distance).clamp(0.25, 1.0)
            }
            _ => cfg.pursuit_speed,
        };
        MotionCommand::new(speed, 0.0)
    } else {
        let mut angular = cfg.turn_speed * offset as f64 / (n / 2) as f64;
        if cfg.invert_turns {
            angular = -angular;
        }
        MotionCommand::new(0.0, angular)
    };
    Ok(TrackOutput { command, zone })
}
