use std::collections::VecDeque;

use crate::geometry::Pose;
use crate::odometry::MotionCommand;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSample {
    pub pose: Pose,
    /// A nonzero command was issued on this sample.
    pub driving: bool,
}

/// Bounded history of recent poses and whether the robot was told to move.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseHistory {
    samples: VecDeque<MotionSample>,
    capacity: usize,
}

impl PoseHistory {
    pub fn new(capacity: usize) -> Self {
        Self {
            samples: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
        }
    }

    pub fn push(&mut self, pose: Pose, command: MotionCommand) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(MotionSample {
            pose,
            driving: !command.is_stop(),
        });
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> impl DoubleEndedIterator<Item = &MotionSample> {
        self.samples.iter()
    }
}

/// True when the last `window` positions fit in a box whose diagonal is under
/// `epsilon` although the robot was commanded to move during that window.
/// Spinning in place for a whole window counts: it is how turn-left/turn-right
/// dithering shows up.
pub fn detect_stuck(history: &PoseHistory, window: usize, epsilon: f64) -> bool {
    if window < 2 || history.len() < window {
        return false;
    }
    let recent = history.samples().rev().take(window);
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut driving = false;
    for s in recent {
        x0 = x0.min(s.pose.x);
        y0 = y0.min(s.pose.y);
        x1 = x1.max(s.pose.x);
        y1 = y1.max(s.pose.y);
        driving |= s.driving;
    }
    driving && (x1 - x0).hypot(y1 - y0) < epsilon
}
