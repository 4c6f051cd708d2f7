//! Dead-reckoning pose estimation and the turn-then-drive waypoint follower.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{wrap_angle, Point2, Pose, RobotConfig, WheelDelta};

pub const DEFAULT_DIST_TOLERANCE: f64 = 50.0;
pub const DEFAULT_ANGLE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OdometryState {
    pub pose: Pose,
    /// Sum of |Δd| over every update, mm.
    pub accumulated_distance: f64,
}

impl OdometryState {
    pub fn new(pose: Pose) -> Self {
        Self {
            pose,
            accumulated_distance: 0.0,
        }
    }
}

/// Velocity command for the drive base: mm/s forward, rad/s counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionCommand {
    pub linear: f64,
    pub angular: f64,
}

impl MotionCommand {
    pub const STOP: MotionCommand = MotionCommand {
        linear: 0.0,
        angular: 0.0,
    };

    pub const fn new(linear: f64, angular: f64) -> Self {
        Self { linear, angular }
    }

    pub fn is_stop(&self) -> bool {
        self.linear == 0.0 && self.angular == 0.0
    }

    /// Saturates both components to the robot's speed limits.
    pub fn clamped(self, config: &RobotConfig) -> Self {
        Self {
            linear: self
                .linear
                .clamp(-config.max_linear_speed, config.max_linear_speed),
            angular: self
                .angular
                .clamp(-config.max_angular_speed, config.max_angular_speed),
        }
    }
}

/// Advances `state` by one pair of wheel travels using the midpoint-heading
/// update:
///
/// ```text
/// Δd = (d_left + d_right) / 2
/// Δθ = (d_right - d_left) / wheelbase
/// x += Δd·cos(θ + Δθ/2),  y += Δd·sin(θ + Δθ/2),  θ += Δθ
/// ```
pub fn integrate(
    state: &OdometryState,
    delta: WheelDelta,
    wheelbase: f64,
) -> Result<OdometryState> {
    if !(wheelbase.is_finite() && wheelbase > 0.0) {
        return Err(invalid(format!(
            "wheelbase must be positive, got {wheelbase}"
        )));
    }
    if !delta.is_finite() {
        return Err(invalid("wheel travel must be finite"));
    }
    let dd = (delta.d_left + delta.d_right) / 2.0;
    let dtheta = (delta.d_right - delta.d_left) / wheelbase;
    let mid = state.pose.theta + dtheta / 2.0;
    let (sin, cos) = mid.sin_cos();
    Ok(OdometryState {
        pose: Pose {
            x: state.pose.x + dd * cos,
            y: state.pose.y + dd * sin,
            theta: wrap_angle(state.pose.theta + dtheta),
        },
        accumulated_distance: state.accumulated_distance + dd.abs(),
    })
}

/// Signed turn (counter-clockwise positive) that would face `target`.
pub fn heading_to(from: &Pose, target: Point2) -> Result<f64> {
    let dx = target.x - from.x;
    let dy = target.y - from.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateTarget);
    }
    Ok(wrap_angle(dy.atan2(dx) - from.theta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointPlan {
    pub waypoints: Vec<Point2>,
    pub current_index: usize,
    pub dist_tolerance: f64,
    pub angle_tolerance: f64,
}

impl WaypointPlan {
    pub fn new(waypoints: Vec<Point2>) -> Self {
        Self {
            waypoints,
            current_index: 0,
            dist_tolerance: DEFAULT_DIST_TOLERANCE,
            angle_tolerance: DEFAULT_ANGLE_TOLERANCE,
        }
    }

    pub fn with_tolerances(mut self, dist_tolerance: f64, angle_tolerance: f64) -> Result<Self> {
        if !(dist_tolerance > 0.0 && angle_tolerance > 0.0) {
            return Err(invalid("waypoint tolerances must be positive"));
        }
        self.dist_tolerance = dist_tolerance;
        self.angle_tolerance = angle_tolerance;
        Ok(self)
    }

    pub fn current(&self) -> Option<Point2> {
        self.waypoints.get(self.current_index).copied()
    }

    pub fn is_complete(&self) -> bool {
        self.current_index >= self.waypoints.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointStep {
    pub command: MotionCommand,
    /// The current waypoint was consumed on this step.
    pub advanced: bool,
    /// The last waypoint was consumed on this step.
    pub reached_goal: bool,
}

/// One control step of the turn-then-drive follower. The command is either a
/// pure rotation or a pure translation, never both.
pub fn waypoint_step(
    state: &OdometryState,
    plan: &mut WaypointPlan,
    config: &RobotConfig,
) -> Result<WaypointStep> {
    let target = plan
        .current()
        .ok_or_else(|| Error::InvalidState("waypoint plan has no remaining waypoints".into()))?;
    if state.pose.position().distance(target) < plan.dist_tolerance {
        plan.current_index += 1;
        return Ok(WaypointStep {
            command: MotionCommand::STOP,
            advanced: true,
            reached_goal: plan.is_complete(),
        });
    }
    let error = heading_to(&state.pose, target)?;
    let command = if error.abs() > plan.angle_tolerance {
        MotionCommand::new(0.0, config.max_angular_speed.copysign(error))
    } else {
        MotionCommand::new(config.max_linear_speed, 0.0)
    };
    Ok(WaypointStep {
        command,
        advanced: false,
        reached_goal: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn origin() -> OdometryState {
        OdometryState::default()
    }

    #[test]
    fn straight_drive() {
        let s = integrate(&origin(), WheelDelta::new(100.0, 100.0), 200.0).unwrap();
        assert_eq!(
            s.pose,
            Pose {
                x: 100.0,
                y: 0.0,
                theta: 0.0
            }
        );
        assert_eq!(s.accumulated_distance, 100.0);
    }

    #[test]
    fn pure_rotation() {
        let s = integrate(&origin(), WheelDelta::new(-50.0, 50.0), 200.0).unwrap();
        assert_eq!(
            s.pose,
            Pose {
                x: 0.0,
                y: 0.0,
                theta: 0.5
            }
        );
        assert_eq!(s.accumulated_distance, 0.0);
    }

    #[test]
    fn gentle_arc() {
        // Δd = 100, Δθ = 0.1: x = 100·cos(0.05), y = 100·sin(0.05)
        let s = integrate(&origin(), WheelDelta::new(90.0, 110.0), 200.0).unwrap();
        assert_abs_diff_eq!(s.pose.x, 99.875_026_039_496_62, epsilon = 1e-9);
        assert_abs_diff_eq!(s.pose.y, 4.997_916_927_067_833, epsilon = 1e-9);
        assert_abs_diff_eq!(s.pose.theta, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn backwards_travel_accumulates_distance() {
        let s = integrate(&origin(), WheelDelta::new(-30.0, -30.0), 200.0).unwrap();
        assert_eq!(s.pose.x, -30.0);
        assert_eq!(s.accumulated_distance, 30.0);
    }

    #[test]
    fn rejects_bad_wheelbase() {
        assert!(integrate(&origin(), WheelDelta::new(1.0, 1.0), 0.0).is_err());
        assert!(integrate(&origin(), WheelDelta::new(1.0, 1.0), -3.0).is_err());
        assert!(integrate(&origin(), WheelDelta::new(f64::NAN, 1.0), 100.0).is_err());
    }

    #[test]
    fn heading_examples() {
        let p = Pose::default();
        assert_eq!(heading_to(&p, Point2::new(100.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(heading_to(&p, Point2::new(0.0, 100.0)).unwrap(), FRAC_PI_2);
        let up = Pose::new(0.0, 0.0, FRAC_PI_2).unwrap();
        // bearing to (-100, 0) is π; minus heading π/2
        let expected = (0.0f64).atan2(-100.0) - FRAC_PI_2;
        assert_abs_diff_eq!(heading_to(&up, Point2::new(-100.0, 0.0)).unwrap(), expected);
        assert_abs_diff_eq!(expected, PI / 2.0, epsilon = 1e-12);
        assert_eq!(
            heading_to(&p, Point2::new(0.0, 0.0)),
            Err(Error::DegenerateTarget)
        );
    }

    #[test]
    fn waypoint_straight_ahead_drives_forward() {
        let mut plan = WaypointPlan::new(vec![Point2::new(2200.0, 0.0)]);
        let cfg = RobotConfig::default();
        let step = waypoint_step(&origin(), &mut plan, &cfg).unwrap();
        assert_eq!(step.command, MotionCommand::new(cfg.max_linear_speed, 0.0));
        assert_eq!(plan.current_index, 0);
    }

    #[test]
    fn consumes_waypoint_within_tolerance() {
        let mut plan = WaypointPlan::new(vec![Point2::new(2200.0, 0.0)]);
        let state = OdometryState::new(Pose::new(2195.0, 0.0, 0.0).unwrap());
        let step = waypoint_step(&state, &mut plan, &RobotConfig::default()).unwrap();
        assert!(step.advanced && step.reached_goal);
        assert!(step.command.is_stop());
        assert_eq!(plan.current_index, 1);
        assert!(matches!(
            waypoint_step(&state, &mut plan, &RobotConfig::default()),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn rotates_toward_lateral_waypoint() {
        let mut plan = WaypointPlan::new(vec![Point2::new(0.0, 1000.0)]);
        let cfg = RobotConfig::default();
        let step = waypoint_step(&origin(), &mut plan, &cfg).unwrap();
        let oracle = heading_to(&Pose::default(), Point2::new(0.0, 1000.0)).unwrap();
        assert!(oracle > plan.angle_tolerance);
        assert_eq!(step.command, MotionCommand::new(0.0, cfg.max_angular_speed));

        let mut plan = WaypointPlan::new(vec![Point2::new(0.0, -1000.0)]);
        let step = waypoint_step(&origin(), &mut plan, &cfg).unwrap();
        assert_eq!(
            step.command,
            MotionCommand::new(0.0, -cfg.max_angular_speed)
        );
    }

    #[test]
    fn empty_plan_is_invalid_state() {
        let mut plan = WaypointPlan::new(vec![]);
        assert!(matches!(
            waypoint_step(&origin(), &mut plan, &RobotConfig::default()),
            Err(Error::InvalidState(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pose() -> impl Strategy<Value = Pose> {
            (-1e4f64..1e4, -1e4f64..1e4, -PI..PI).prop_map(|(x, y, t)| Pose::new(x, y, t).unwrap())
        }

        proptest! {
            #[test]
            fn straight_drive_keeps_heading(p in pose(), d in -500.0f64..500.0, wb in 50.0f64..800.0) {
                let s = integrate(&OdometryState::new(p), WheelDelta::new(d, d), wb).unwrap();
                prop_assert_eq!(s.pose.theta, p.theta);
                let moved = s.pose.position().distance(p.position());
                prop_assert!((moved - d.abs()).abs() < 1e-9);
            }

            #[test]
            fn rotation_keeps_position(p in pose(), d in -500.0f64..500.0, wb in 50.0f64..800.0) {
                let s = integrate(&OdometryState::new(p), WheelDelta::new(-d, d), wb).unwrap();
                prop_assert_eq!((s.pose.x, s.pose.y), (p.x, p.y));
                let turned = wrap_angle(s.pose.theta - p.theta - 2.0 * d / wb);
                prop_assert!(turned.abs() < 1e-9);
            }

            #[test]
            fn halved_steps_agree(p in pose(), a in -5.0f64..5.0, b in -5.0f64..5.0) {
                // |Δd| ≤ 10 mm and |Δθ| ≤ 0.01 rad for the combined step
                let wb = 2000.0;
                let once = integrate(&OdometryState::new(p), WheelDelta::new(2.0 * a, 2.0 * b), wb).unwrap();
                let half = integrate(&OdometryState::new(p), WheelDelta::new(a, b), wb).unwrap();
                let twice = integrate(&half, WheelDelta::new(a, b), wb).unwrap();
                prop_assert!(once.pose.position().distance(twice.pose.position()) < 0.1);
            }

            #[test]
            fn never_turns_and_drives_at_once(p in pose(), tx in -5e3f64..5e3, ty in -5e3f64..5e3) {
                let mut plan = WaypointPlan::new(vec![Point2::new(tx, ty)]);
                let step = waypoint_step(&OdometryState::new(p), &mut plan, &RobotConfig::default()).unwrap();
                prop_assert!(step.command.linear == 0.0 || step.command.angular == 0.0);
            }
        }
    }
}
