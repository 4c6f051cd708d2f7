//! Deterministic 2-D kinematic simulator standing in for the physical robot.
//!
//! Ground truth advances along exact arcs; the wheel travel handed to
//! odometry is derived from the commanded velocities and optionally perturbed
//! by multiplicative Gaussian encoder noise.

mod episode;
mod sensors;

pub use episode::{
    run_episode, Autopilot, BehaviorEvent, BehaviorMode, ChannelSink, EpisodeOptions,
    EpisodeReport, EventKind, JsonlSink, NullSink, TelemetryFrame, TelemetrySink, TickReport,
    WaypointArrival,
};
pub use sensors::{
    camera_detect, camera_observe, cast_ray, rotating_range, sonar_scan, Observation,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{wrap_angle, Point2, Pose, RobotConfig, WheelDelta};
use crate::grid::GridMap;
use crate::odometry::MotionCommand;

/// Contact resolution bisects the colliding sub-step this many times.
const CONTACT_ITERATIONS: u32 = 8;

/// A detectable object in the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl Target {
    pub fn new(label: impl Into<String>, x: f64, y: f64, radius: f64) -> Self {
        Self {
            label: label.into(),
            x,
            y,
            radius,
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub map: GridMap,
    /// Ground truth.
    pub robot_pose: Pose,
    pub robot_config: RobotConfig,
    pub targets: Vec<Target>,
    pub sim_time_ms: u64,
    /// Camera pan relative to the body, radians.
    pub camera_pan: f64,
    /// σ of the per-wheel multiplicative encoder noise; 0 disables it.
    pub encoder_noise: f64,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub delta: WheelDelta,
    pub collided: bool,
}

impl WorldState {
    /// Robot placed at the centre of the map's start cell, facing +x.
    pub fn new(map: GridMap, robot_config: RobotConfig, seed: u64) -> Result<Self> {
        let start = map.cell_to_world(map.start())?;
        let pose = Pose::new(start.x, start.y, 0.0)?;
        Self::with_pose(map, robot_config, pose, seed)
    }

    pub fn with_pose(
        map: GridMap,
        robot_config: RobotConfig,
        pose: Pose,
        seed: u64,
    ) -> Result<Self> {
        robot_config.validate()?;
        if map.disk_overlaps(pose.position(), robot_config.body_radius) {
            return Err(invalid(format!(
                "robot body (radius {} mm) at ({:.0}, {:.0}) overlaps a wall",
                robot_config.body_radius, pose.x, pose.y
            )));
        }
        Ok(Self {
            map,
            robot_pose: pose,
            robot_config,
            targets: Vec::new(),
            sim_time_ms: 0,
            camera_pan: 0.0,
            encoder_noise: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// True when the robot body overlaps an occupied cell at `pose`.
    pub fn collides_at(&self, pose: &Pose) -> bool {
        self.map
            .disk_overlaps(pose.position(), self.robot_config.body_radius)
    }

    /// Advances the world by `dt_ms` under `cmd`. Motion that would put the
    /// body into a wall stops at contact and reports `collided`.
    pub fn step(&mut self, cmd: MotionCommand, dt_ms: u64) -> Result<StepOutcome> {
        if dt_ms == 0 {
            return Err(invalid("time step must be positive"));
        }
        if !(cmd.linear.is_finite() && cmd.angular.is_finite()) {
            return Err(invalid("motion command must be finite"));
        }
        let cmd = cmd.clamped(&self.robot_config);
        let dt = dt_ms as f64 / 1000.0;
        let start = self.robot_pose;

        let fraction = if cmd.linear == 0.0 {
            // Rotating a disk in place never changes what it overlaps.
            1.0
        } else {
            self.free_fraction(&start, cmd, dt)
        };
        let collided = fraction < 1.0;
        self.robot_pose = arc_pose(&start, cmd, dt * fraction);
        self.sim_time_ms += dt_ms;

        let half_track = cmd.angular * self.robot_config.wheelbase / 2.0;
        let travel = dt * fraction;
        let mut delta = WheelDelta::new(
            (cmd.linear - half_track) * travel,
            (cmd.linear + half_track) * travel,
        );
        if self.encoder_noise > 0.0 {
            let noise = Normal::new(0.0, self.encoder_noise)
                .map_err(|e| invalid(format!("encoder noise: {e}")))?;
            delta.d_left *= 1.0 + noise.sample(&mut self.rng);
            delta.d_right *= 1.0 + noise.sample(&mut self.rng);
        }
        Ok(StepOutcome { delta, collided })
    }

    /// Largest fraction of the step the body can travel without touching a
    /// wall. The arc is sampled at quarter-cell spacing to find the first
    /// blocked sample, then the gap is bisected.
    fn free_fraction(&self, start: &Pose, cmd: MotionCommand, dt: f64) -> f64 {
        let arc_len = (cmd.linear * dt).abs();
        let samples = ((arc_len / (self.map.resolution() / 4.0)).ceil() as usize).max(1);
        let mut free = 0.0;
        for i in 1..=samples {
            let f = i as f64 / samples as f64;
            if self.collides_at(&arc_pose(start, cmd, dt * f)) {
                let mut blocked = f;
                for _ in 0..CONTACT_ITERATIONS {
                    let mid = (free + blocked) / 2.0;
                    if self.collides_at(&arc_pose(start, cmd, dt * mid)) {
                        blocked = mid;
                    } else {
                        free = mid;
                    }
                }
                return free;
            }
            free = f;
        }
        1.0
    }
}

/// Pose after following `cmd` exactly for `t` seconds.
pub fn arc_pose(start: &Pose, cmd: MotionCommand, t: f64) -> Pose {
    let v = cmd.linear;
    let w = cmd.angular;
    let theta = start.theta + w * t;
    let (x, y) = if w.abs() < 1e-12 {
        (
            start.x + v * t * start.theta.cos(),
            start.y + v * t * start.theta.sin(),
        )
    } else {
        let r = v / w;
        (
            start.x + r * (theta.sin() - start.theta.sin()),
            start.y - r * (theta.cos() - start.theta.cos()),
        )
    };
    Pose {
        x,
        y,
        theta: wrap_angle(theta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cell;
    use crate::planner::parse_map;
    use approx::assert_abs_diff_eq;

    fn open_world(w: usize, h: usize) -> WorldState {
        let map = GridMap::open(w, h, 100.0, Cell::new(h / 2, w / 2), Cell::new(0, 0)).unwrap();
        WorldState::new(map, RobotConfig::default(), 1).unwrap()
    }

    #[test]
    fn straight_step() {
        let mut world = open_world(20, 20);
        let before = world.robot_pose;
        let out = world.step(MotionCommand::new(100.0, 0.0), 100).unwrap();
        assert_eq!(out.delta, WheelDelta::new(10.0, 10.0));
        assert!(!out.collided);
        assert_abs_diff_eq!(world.robot_pose.x - before.x, 10.0, epsilon = 1e-12);
        assert_eq!(world.robot_pose.y, before.y);
        assert_eq!(world.sim_time_ms, 100);
    }

    #[test]
    fn spin_in_place() {
        let map = GridMap::open(20, 20, 100.0, Cell::new(10, 10), Cell::new(0, 0)).unwrap();
        let cfg = RobotConfig {
            wheelbase: 200.0,
            max_angular_speed: 2.0,
            ..RobotConfig::default()
        };
        let mut world = WorldState::new(map, cfg, 1).unwrap();
        let before = world.robot_pose;
        let out = world.step(MotionCommand::new(0.0, 1.0), 100).unwrap();
        assert_abs_diff_eq!(out.delta.d_left, -10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.delta.d_right, 10.0, epsilon = 1e-12);
        // Δθ = (d_right - d_left) / wheelbase
        assert_abs_diff_eq!(
            (out.delta.d_right - out.delta.d_left) / 200.0,
            0.1,
            epsilon = 1e-12
        );
        assert_eq!(
            (world.robot_pose.x, world.robot_pose.y),
            (before.x, before.y)
        );
        assert_abs_diff_eq!(world.robot_pose.theta, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn stops_at_wall_contact() {
        // Wall cell spans x in [400, 500); body radius 200 touches it at x = 200.
        let map = parse_map("..M.#\n....E").unwrap();
        let mut world = WorldState::with_pose(
            map,
            RobotConfig::default(),
            Pose::new(195.0, 50.0, 0.0).unwrap(),
            1,
        )
        .unwrap();
        let out = world.step(MotionCommand::new(100.0, 0.0), 100).unwrap();
        assert!(out.collided);
        assert!(world.robot_pose.x <= 200.0 && world.robot_pose.x > 199.9);
        assert!(!world.collides_at(&world.robot_pose));
        assert!(out.delta.d_left < 10.0);
    }

    #[test]
    fn rejects_zero_dt() {
        let mut world = open_world(5, 5);
        assert!(world.step(MotionCommand::STOP, 0).is_err());
    }

    #[test]
    fn start_inside_wall_is_rejected() {
        let map = parse_map("#M#\n..E").unwrap();
        assert!(WorldState::new(map, RobotConfig::default(), 0).is_err());
    }

    #[test]
    fn arc_matches_chord_geometry() {
        let p = Pose::default();
        let q = arc_pose(&p, MotionCommand::new(100.0, 0.5), 1.0);
        // radius 200, swept 0.5 rad
        assert_abs_diff_eq!(q.x, 200.0 * 0.5f64.sin(), epsilon = 1e-9);
        assert_abs_diff_eq!(q.y, 200.0 * (1.0 - 0.5f64.cos()), epsilon = 1e-9);
        assert_abs_diff_eq!(q.theta, 0.5, epsilon = 1e-12);
    }
}
