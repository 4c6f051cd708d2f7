use std::collections::VecDeque;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::sync::mpsc::SyncSender;

use serde::{Deserialize, Serialize};

use crate::behaviors::{
    avoid_step_ring_with_cause, avoid_step_rotating, detect_stuck, select_target, track_step,
    AvoidAction, AvoidConfig, EscapeCause, PoseHistory, ScanPhase, SonarRing, TrackerConfig, Zone,
};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Point2, Pose};
use crate::odometry::{integrate, waypoint_step, MotionCommand, OdometryState, WaypointPlan};
use crate::planner::{astar_from, to_waypoints};

use super::sensors::{camera_observe, rotating_range, sonar_scan};
use super::{arc_pose, WorldState};

const STUCK_WINDOW: usize = 20;
const STUCK_EPSILON: f64 = 20.0;
/// Clearance kept when a backup is cut short by something behind the robot.
const BACKUP_MARGIN: f64 = 20.0;

/// One periodic telemetry record. Pose is ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub timestamp_ms: u64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v_left: f64,
    pub v_right: f64,
    pub mode: String,
    pub sonar: Vec<f64>,
    pub zone_or_action: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorMode {
    Idle,
    Manual,
    Odometry,
    Tracking,
    /// Fixed sonar ring.
    Avoidance,
    /// Single servo-mounted sensor.
    RotatingAvoidance,
}

impl BehaviorMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BehaviorMode::Idle => "idle",
            BehaviorMode::Manual => "manual",
            BehaviorMode::Odometry => "odometry",
            BehaviorMode::Tracking => "tracking",
            BehaviorMode::Avoidance => "avoidance",
            BehaviorMode::RotatingAvoidance => "rotating_avoidance",
        }
    }

    pub fn is_autonomous(&self) -> bool {
        !matches!(self, BehaviorMode::Idle | BehaviorMode::Manual)
    }
}

impl fmt::Display for BehaviorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BehaviorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "idle" => BehaviorMode::Idle,
            "manual" => BehaviorMode::Manual,
            "odometry" => BehaviorMode::Odometry,
            "tracking" => BehaviorMode::Tracking,
            "avoidance" => BehaviorMode::Avoidance,
            "rotating_avoidance" => BehaviorMode::RotatingAvoidance,
            other => return Err(invalid(format!("unknown mode {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    WaypointReached,
    GoalReached,
    CornerTrap,
    HaltedAtTarget,
    NoPath,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::WaypointReached => "waypoint_reached",
            EventKind::GoalReached => "goal_reached",
            EventKind::CornerTrap => "corner_trap",
            EventKind::HaltedAtTarget => "halted_at_target",
            EventKind::NoPath => "no_path",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorEvent {
    pub kind: EventKind,
    pub timestamp_ms: u64,
}

/// Consumer of telemetry frames. Implementations must accept frames from the
/// stepping thread; a reader may drain them concurrently on the other end.
pub trait TelemetrySink {
    fn frame(&mut self, frame: &TelemetryFrame) -> io::Result<()>;
}

impl TelemetrySink for Vec<TelemetryFrame> {
    fn frame(&mut self, frame: &TelemetryFrame) -> io::Result<()> {
        self.push(frame.clone());
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TelemetrySink for NullSink {
    fn frame(&mut self, _: &TelemetryFrame) -> io::Result<()> {
        Ok(())
    }
}

/// Newline-delimited JSON, one frame per line.
#[derive(Debug)]
pub struct JsonlSink<W: Write> {
    out: W,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> TelemetrySink for JsonlSink<W> {
    fn frame(&mut self, frame: &TelemetryFrame) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, frame)?;
        self.out.write_all(b"\n")
    }
}

/// Single-producer, single-consumer hand-off to another thread. Blocks when
/// the bounded channel is full.
#[derive(Debug, Clone)]
pub struct ChannelSink(pub SyncSender<TelemetryFrame>);

impl TelemetrySink for ChannelSink {
    fn frame(&mut self, frame: &TelemetryFrame) -> io::Result<()> {
        self.0
            .send(frame.clone())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "telemetry reader hung up"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaypointArrival {
    pub index: usize,
    pub waypoint: Point2,
    pub timestamp_ms: u64,
    /// Ground-truth distance to the waypoint when the follower consumed it.
    pub error_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    pub frame: TelemetryFrame,
    pub events: Vec<BehaviorEvent>,
    pub arrival: Option<WaypointArrival>,
    pub collided: bool,
    /// The active behavior has nothing left to do (goal reached, halted at
    /// target, or no path).
    pub finished: bool,
}

/// Runs whichever controller the current mode selects, one tick at a time.
#[derive(Debug, Clone)]
pub struct Autopilot {
    mode: BehaviorMode,
    tracker: TrackerConfig,
    avoid: AvoidConfig,
    ring: SonarRing,
    odometry: OdometryState,
    plan: Option<WaypointPlan>,
    maneuver: VecDeque<(MotionCommand, &'static str)>,
    scan_phase: ScanPhase,
    history: PoseHistory,
    manual: MotionCommand,
    sonar: Vec<f64>,
    finished: bool,
    /// An escape maneuver is queued; the stuck window restarts once it ends.
    escaping: bool,
    /// The previous step ended in wall contact.
    bumped: bool,
    dt_ms: u64,
}

impl Autopilot {
    pub fn new(world: &WorldState, tracker: TrackerConfig, avoid: AvoidConfig) -> Result<Self> {
        tracker.validate()?;
        avoid.validate()?;
        Ok(Self {
            mode: BehaviorMode::Idle,
            tracker,
            avoid,
            ring: SonarRing::from_config(&world.robot_config),
            odometry: OdometryState::new(world.robot_pose),
            plan: None,
            maneuver: VecDeque::new(),
            scan_phase: ScanPhase::Clear,
            history: PoseHistory::new(STUCK_WINDOW),
            manual: MotionCommand::STOP,
            sonar: sonar_scan(world),
            finished: false,
            escaping: false,
            bumped: false,
            dt_ms: 100,
        })
    }

    pub fn mode(&self) -> BehaviorMode {
        self.mode
    }

    pub fn estimate(&self) -> &OdometryState {
        &self.odometry
    }

    pub fn plan(&self) -> Option<&WaypointPlan> {
        self.plan.as_ref()
    }

    pub fn tracker_mut(&mut self) -> &mut TrackerConfig {
        &mut self.tracker
    }

    pub fn tracker(&self) -> &TrackerConfig {
        &self.tracker
    }

    pub fn avoid(&self) -> &AvoidConfig {
        &self.avoid
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn last_sonar(&self) -> &[f64] {
        &self.sonar
    }

    /// Latches a manual command; ignored unless the mode is manual.
    pub fn set_manual(&mut self, cmd: MotionCommand) {
        self.manual = cmd;
    }

    pub fn set_plan(&mut self, plan: WaypointPlan) {
        self.plan = Some(plan);
        self.finished = false;
    }

    pub fn clear_plan(&mut self) {
        self.plan = None;
    }

    /// Re-anchors odometry and sensing on the world's current ground truth.
    pub fn reset(&mut self, world: &WorldState) {
        self.odometry = OdometryState::new(world.robot_pose);
        self.ring = SonarRing::from_config(&world.robot_config);
        self.sonar = sonar_scan(world);
        self.stop();
    }

    /// Halts any motion in progress and clears per-behavior state.
    pub fn stop(&mut self) {
        self.manual = MotionCommand::STOP;
        self.maneuver.clear();
        self.scan_phase = ScanPhase::Clear;
        self.history.clear();
        self.finished = false;
        self.escaping = false;
    }

    /// Switches behavior after stopping. Entering odometry mode without a
    /// pending plan plans one from the current estimate to the map's goals.
    pub fn set_mode(&mut self, world: &WorldState, mode: BehaviorMode) -> Vec<BehaviorEvent> {
        self.stop();
        self.mode = mode;
        let mut events = Vec::new();
        if mode == BehaviorMode::Odometry
            && self.plan.as_ref().is_none_or(WaypointPlan::is_complete)
        {
            match plan_route(world, self.odometry.pose.position()) {
                Ok(plan) => self.plan = Some(plan),
                Err(_) => {
                    self.plan = None;
                    self.finished = true;
                    events.push(BehaviorEvent {
                        kind: EventKind::NoPath,
                        timestamp_ms: world.sim_time_ms,
                    });
                }
            }
        }
        events
    }

    /// Senses, decides, steps the world by `dt_ms` and integrates odometry.
    pub fn tick(&mut self, world: &mut WorldState, dt_ms: u64) -> Result<TickReport> {
        if dt_ms == 0 {
            return Err(invalid("tick period must be positive"));
        }
        self.dt_ms = dt_ms;
        let decided_at = world.sim_time_ms;
        let mut events = Vec::new();
        let mut arrival = None;
        let (cmd, label) = self.decide(world, &mut events, &mut arrival)?;
        let cmd = cmd.clamped(&world.robot_config);

        let out = world.step(cmd, dt_ms)?;
        self.odometry = integrate(&self.odometry, out.delta, world.robot_config.wheelbase)?;
        self.history.push(self.odometry.pose, cmd);
        self.sonar = sonar_scan(world);
        self.bumped = out.collided;

        for e in &mut events {
            e.timestamp_ms = decided_at;
        }
        let dt = dt_ms as f64 / 1000.0;
        let pose = world.robot_pose;
        Ok(TickReport {
            frame: TelemetryFrame {
                timestamp_ms: world.sim_time_ms,
                x: pose.x,
                y: pose.y,
                theta: pose.theta,
                v_left: out.delta.d_left / dt,
                v_right: out.delta.d_right / dt,
                mode: self.mode.as_str().to_string(),
                sonar: self.sonar.clone(),
                zone_or_action: label.to_string(),
            },
            events,
            arrival,
            collided: out.collided,
            finished: self.finished,
        })
    }

    fn decide(
        &mut self,
        world: &mut WorldState,
        events: &mut Vec<BehaviorEvent>,
        arrival: &mut Option<WaypointArrival>,
    ) -> Result<(MotionCommand, &'static str)> {
        let event = |kind| BehaviorEvent {
            kind,
            timestamp_ms: 0,
        };
        match self.mode {
            BehaviorMode::Idle => Ok((MotionCommand::STOP, "idle")),
            BehaviorMode::Manual => Ok((
                self.manual,
                if self.manual.is_stop() {
                    "stopped"
                } else {
                    "driving"
                },
            )),
            BehaviorMode::Odometry => {
                if self.finished {
                    return Ok((MotionCommand::STOP, "goal"));
                }
                let Some(plan) = self.plan.as_mut() else {
                    return Ok((MotionCommand::STOP, "no_plan"));
                };
                let step = waypoint_step(&self.odometry, plan, &world.robot_config)?;
                if step.advanced {
                    let index = plan.current_index - 1;
                    let waypoint = plan.waypoints[index];
                    *arrival = Some(WaypointArrival {
                        index,
                        waypoint,
                        timestamp_ms: world.sim_time_ms,
                        error_mm: world.robot_pose.position().distance(waypoint),
                    });
                    events.push(event(EventKind::WaypointReached));
                }
                if step.reached_goal {
                    events.push(event(EventKind::GoalReached));
                    self.finished = true;
                    return Ok((step.command, "goal"));
                }
                let label = if step.advanced {
                    "waypoint"
                } else if step.command.angular != 0.0 {
                    "rotate"
                } else {
                    "drive"
                };
                Ok((step.command, label))
            }
            BehaviorMode::Tracking => {
                if self.finished {
                    return Ok((MotionCommand::STOP, Zone::Halted.as_str()));
                }
                let observations = camera_observe(world);
                let detections: Vec<_> = observations.iter().map(|o| o.detection.clone()).collect();
                let chosen = select_target(&detections, &self.tracker.target_label);
                let range = chosen
                    .and_then(|c| detections.iter().position(|d| std::ptr::eq(d, c)))
                    .map(|i| observations[i].range);
                let out = track_step(
                    chosen,
                    range,
                    &self.tracker,
                    world.robot_config.camera_frame_width,
                )?;
                if out.zone == Zone::Halted {
                    events.push(event(EventKind::HaltedAtTarget));
                    self.finished = true;
                }
                Ok((out.command, out.zone.as_str()))
            }
            BehaviorMode::Avoidance => {
                if let Some(next) = self.maneuver.pop_front() {
                    return Ok(next);
                }
                if self.escaping {
                    self.history.clear();
                    self.escaping = false;
                }
                let stuck = detect_stuck(&self.history, STUCK_WINDOW, STUCK_EPSILON);
                let (action, cause) = avoid_step_ring_with_cause(
                    &self.sonar,
                    &self.ring,
                    &self.avoid,
                    stuck,
                    world.rng_mut(),
                )?;
                if cause == Some(EscapeCause::CornerTrap) {
                    events.push(event(EventKind::CornerTrap));
                }
                self.escaping = cause.is_some();
                self.queue(world, action);
                Ok(self
                    .maneuver
                    .pop_front()
                    .unwrap_or((MotionCommand::STOP, action.kind())))
            }
            BehaviorMode::RotatingAvoidance => {
                if let Some(next) = self.maneuver.pop_front() {
                    return Ok(next);
                }
                let mut reading = rotating_range(world, self.scan_phase.servo_angle(&self.avoid))?;
                if self.bumped && self.scan_phase == ScanPhase::Clear {
                    // A single narrow beam misses edges the body can still
                    // clip; contact counts as an obstacle at zero range.
                    reading = 0.0;
                }
                let (action, next) = avoid_step_rotating(reading, &self.avoid, self.scan_phase)?;
                self.scan_phase = next;
                self.queue(world, action);
                Ok(self
                    .maneuver
                    .pop_front()
                    .unwrap_or((MotionCommand::STOP, action.kind())))
            }
        }
    }

    /// Expands an avoidance action into per-tick commands.
    fn queue(&mut self, world: &WorldState, action: AvoidAction) {
        let cfg = &world.robot_config;
        let label = action.kind();
        match action {
            AvoidAction::Proceed => self
                .maneuver
                .push_back((MotionCommand::new(cfg.max_linear_speed, 0.0), label)),
            AvoidAction::TurnLeft { angle } => self.queue_turn(cfg.max_angular_speed, angle, label),
            AvoidAction::TurnRight { angle } => {
                self.queue_turn(cfg.max_angular_speed, -angle, label)
            }
            AvoidAction::Escape { backup, turn } => {
                self.queue_backup(world, backup, label);
                self.queue_turn(cfg.max_angular_speed, turn, label);
            }
            AvoidAction::Backup { distance } => self.queue_backup(world, distance, label),
            AvoidAction::ScanRight { .. } | AvoidAction::ScanLeft { .. } | AvoidAction::Halt => {
                self.maneuver.push_back((MotionCommand::STOP, label))
            }
        }
    }

    fn queue_turn(&mut self, rate: f64, angle: f64, label: &'static str) {
        let dt = self.dt_ms as f64 / 1000.0;
        for w in split_motion(angle.abs(), rate * dt) {
            self.maneuver
                .push_back((MotionCommand::new(0.0, (w / dt).copysign(angle)), label));
        }
    }

    /// Backs up by `distance`, cut short so the body keeps clear of anything
    /// behind it (the rear bumper).
    fn queue_backup(&mut self, world: &WorldState, distance: f64, label: &'static str) {
        let speed = world.robot_config.max_linear_speed;
        let pose = world.robot_pose;
        let reverse = MotionCommand::new(-1.0, 0.0);
        let mut free = 0.0;
        let probe = 10.0;
        while free < distance + BACKUP_MARGIN {
            let next = (free + probe).min(distance + BACKUP_MARGIN);
            if world.collides_at(&arc_pose(&pose, reverse, next)) {
                break;
            }
            free = next;
        }
        let allowed = distance.min((free - BACKUP_MARGIN).max(0.0));
        let dt = self.dt_ms as f64 / 1000.0;
        for d in split_motion(allowed, speed * dt) {
            self.maneuver
                .push_back((MotionCommand::new(-d / dt, 0.0), label));
        }
    }
}

/// Splits `total` into chunks of at most `per_tick`, the last one partial.
fn split_motion(total: f64, per_tick: f64) -> Vec<f64> {
    if !(total > 0.0 && per_tick > 0.0) {
        return Vec::new();
    }
    let n = ((total / per_tick) - 1e-9).ceil().max(1.0) as usize;
    let mut out = vec![per_tick; n - 1];
    out.push(total - per_tick * (n - 1) as f64);
    out
}

/// Plans from `from` to the nearest goal, preferring a grid inflated by the
/// robot's body radius and falling back to the raw grid.
pub(crate) fn plan_route(world: &WorldState, from: Point2) -> Result<WaypointPlan> {
    let map = &world.map;
    let cell = map
        .world_to_cell(from)
        .ok_or_else(|| invalid("robot is outside the map"))?;
    let inflated = map.inflated(world.robot_config.body_radius);
    let search = if inflated.is_occupied(cell) {
        astar_from(map, cell)
    } else {
        astar_from(&inflated, cell).or_else(|_| astar_from(map, cell))
    }?;
    let path = to_waypoints(&search.path, map)?;
    Ok(WaypointPlan::new(path.nodes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOptions {
    pub mode: BehaviorMode,
    pub tick_ms: u64,
    pub max_ticks: u64,
    pub tracker: TrackerConfig,
    pub avoid: AvoidConfig,
    /// Explicit waypoints for odometry mode; planned with A* when absent.
    pub waypoints: Option<Vec<Point2>>,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        Self {
            mode: BehaviorMode::Idle,
            tick_ms: 100,
            max_ticks: 1000,
            tracker: TrackerConfig::default(),
            avoid: AvoidConfig::default(),
            waypoints: None,
        }
    }
}

impl EpisodeOptions {
    pub fn new(mode: BehaviorMode, max_ticks: u64) -> Self {
        Self {
            mode,
            max_ticks,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReport {
    pub ticks_used: u64,
    /// Ticks on which motion was cut short by a wall.
    pub collisions: u64,
    pub goal_reached: bool,
    pub halted: bool,
    pub final_pose: Pose,
    pub final_estimate: Pose,
    pub events: Vec<BehaviorEvent>,
    pub arrivals: Vec<WaypointArrival>,
    pub error: Option<String>,
}

impl EpisodeReport {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

/// Runs one closed-loop episode, writing one frame per tick to `sink`. Stops
/// at the goal (odometry), at the target (tracking), on error, or after
/// `max_ticks`.
pub fn run_episode(
    mut world: WorldState,
    options: &EpisodeOptions,
    sink: &mut dyn TelemetrySink,
) -> EpisodeReport {
    let mut report = EpisodeReport {
        ticks_used: 0,
        collisions: 0,
        goal_reached: false,
        halted: false,
        final_pose: world.robot_pose,
        final_estimate: world.robot_pose,
        events: Vec::new(),
        arrivals: Vec::new(),
        error: None,
    };
    let mut pilot = match Autopilot::new(&world, options.tracker.clone(), options.avoid.clone()) {
        Ok(p) => p,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    if let Some(waypoints) = &options.waypoints {
        pilot.set_plan(WaypointPlan::new(waypoints.clone()));
    }
    report.events.extend(pilot.set_mode(&world, options.mode));
    if pilot.is_finished() {
        report.error = Some(Error::NoPath.to_string());
        return report;
    }

    for _ in 0..options.max_ticks {
        let tick = match pilot.tick(&mut world, options.tick_ms) {
            Ok(t) => t,
            Err(e) => {
                report.error = Some(e.to_string());
                break;
            }
        };
        report.ticks_used += 1;
        report.collisions += u64::from(tick.collided);
        for e in &tick.events {
            match e.kind {
                EventKind::GoalReached => report.goal_reached = true,
                EventKind::HaltedAtTarget => report.halted = true,
                _ => {}
            }
        }
        report.events.extend(tick.events.iter().copied());
        report.arrivals.extend(tick.arrival);
        if let Err(e) = sink.frame(&tick.frame) {
            report.error = Some(format!("telemetry sink: {e}"));
            break;
        }
        if tick.finished {
            break;
        }
    }
    report.final_pose = world.robot_pose;
    report.final_estimate = pilot.estimate().pose;
    report
}
