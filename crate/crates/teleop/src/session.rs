//! One operator's control session. Owns the simulated world and the
//! autopilot; everything else talks to it through messages.

use navsim_core::behaviors::{AvoidConfig, TrackerConfig};
use navsim_core::sim::{camera_detect, Autopilot, BehaviorMode, WorldState};
use navsim_core::{parse_map, MotionCommand};

use crate::protocol::{decode, ControlMessage, DriveDir, ServerMessage};

/// Manual drive commands expire after this long without a fresh one.
pub const WATCHDOG_MS: u64 = 500;

#[derive(Debug, Clone)]
pub struct Session {
    world: WorldState,
    pilot: Autopilot,
    tick_ms: u64,
    last_drive_ms: Option<u64>,
    connected: bool,
}

impl Session {
    pub fn new(
        world: WorldState,
        tracker: TrackerConfig,
        avoid: AvoidConfig,
        tick_ms: u64,
    ) -> navsim_core::Result<Self> {
        if tick_ms == 0 {
            return Err(navsim_core::Error::InvalidArgument(
                "tick period must be positive".into(),
            ));
        }
        let pilot = Autopilot::new(&world, tracker, avoid)?;
        Ok(Self {
            world,
            pilot,
            tick_ms,
            last_drive_ms: None,
            connected: false,
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn mode(&self) -> BehaviorMode {
        self.pilot.mode()
    }

    pub fn pilot(&self) -> &Autopilot {
        &self.pilot
    }

    pub fn tick_ms(&self) -> u64 {
        self.tick_ms
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn connect(&mut self) {
        self.connected = true;
    }

    /// A dropped link zeroes the command and leaves the robot idle.
    pub fn disconnect(&mut self) {
        self.connected = false;
        self.pilot.set_mode(&self.world, BehaviorMode::Idle);
        self.last_drive_ms = None;
    }

    /// Decodes one frame and handles it; bad frames become error replies.
    pub fn handle_text(&mut self, raw: &str) -> Vec<ServerMessage> {
        match decode(raw) {
            Ok(msg) => self.handle_message(msg),
            Err(e) => vec![ServerMessage::error(e.to_string())],
        }
    }

    pub fn handle_message(&mut self, msg: ControlMessage) -> Vec<ServerMessage> {
        let ack = ServerMessage::Ack { echo: msg.clone() };
        match &msg {
            ControlMessage::SetMode { mode } => {
                let events = self.pilot.set_mode(&self.world, *mode);
                self.last_drive_ms = None;
                let mut out = vec![ack];
                out.extend(events.into_iter().map(|e| ServerMessage::Event {
                    kind: e.kind,
                    timestamp_ms: e.timestamp_ms,
                }));
                out
            }
            ControlMessage::Drive { dir } => {
                if self.pilot.mode() != BehaviorMode::Manual {
                    return vec![ServerMessage::error("manual drive requires manual mode")];
                }
                let cfg = &self.world.robot_config;
                let (v, w) = (cfg.max_linear_speed, cfg.max_angular_speed);
                let cmd = match dir {
                    DriveDir::Forward => MotionCommand::new(v, 0.0),
                    DriveDir::Backward => MotionCommand::new(-v, 0.0),
                    DriveDir::Left => MotionCommand::new(0.0, w),
                    DriveDir::Right => MotionCommand::new(0.0, -w),
                    DriveDir::Stop => MotionCommand::STOP,
                };
                self.pilot.set_manual(cmd);
                self.last_drive_ms = Some(self.world.sim_time_ms);
                vec![ack]
            }
            ControlMessage::Camera { pan_deg } => {
                if !(-90.0..=90.0).contains(pan_deg) {
                    return vec![ServerMessage::error(format!(
                        "camera pan must be within [-90, 90] degrees, got {pan_deg}"
                    ))];
                }
                self.world.camera_pan = pan_deg.to_radians();
                vec![ack]
            }
            ControlMessage::SetTarget { label } => {
                if label.trim().is_empty() {
                    return vec![ServerMessage::error("target label must not be empty")];
                }
                self.pilot.tracker_mut().target_label = label.clone();
                vec![ack]
            }
            ControlMessage::LoadMap { map_text } => self.load_map(map_text, ack),
            ControlMessage::DetectOnce => vec![ServerMessage::Detections {
                detections: camera_detect(&self.world),
            }],
        }
    }

    fn load_map(&mut self, text: &str, ack: ServerMessage) -> Vec<ServerMessage> {
        let map = match parse_map(text) {
            Ok(m) => m,
            Err(e) => return vec![ServerMessage::error(format!("map rejected: {e}"))],
        };
        let mut world = match WorldState::new(map, self.world.robot_config.clone(), 0) {
            Ok(w) => w,
            Err(e) => return vec![ServerMessage::error(format!("map rejected: {e}"))],
        };
        world.targets = std::mem::take(&mut self.world.targets);
        world.encoder_noise = self.world.encoder_noise;
        world.camera_pan = self.world.camera_pan;
        world.sim_time_ms = self.world.sim_time_ms;
        // Keep the random stream going rather than restarting it.
        *world.rng_mut() = self.world.rng_mut().clone();
        self.world = world;

        let mode = self.pilot.mode();
        self.pilot.clear_plan();
        self.pilot.reset(&self.world);
        let events = self.pilot.set_mode(&self.world, mode);
        let mut out = vec![ack];
        out.extend(events.into_iter().map(|e| ServerMessage::Event {
            kind: e.kind,
            timestamp_ms: e.timestamp_ms,
        }));
        out
    }

    /// Advances one tick: exactly one telemetry frame, then any events.
    pub fn tick(&mut self) -> navsim_core::Result<Vec<ServerMessage>> {
        if self.pilot.mode() == BehaviorMode::Manual {
            let expired = self
                .last_drive_ms
                .is_none_or(|t| self.world.sim_time_ms.saturating_sub(t) >= WATCHDOG_MS);
            if expired {
                self.pilot.set_manual(MotionCommand::STOP);
            }
        }
        let report = self.pilot.tick(&mut self.world, self.tick_ms)?;
        let mut out = Vec::with_capacity(1 + report.events.len());
        out.push(ServerMessage::Telemetry(report.frame));
        out.extend(report.events.into_iter().map(|e| ServerMessage::Event {
            kind: e.kind,
            timestamp_ms: e.timestamp_ms,
        }));
        Ok(out)
    }
}
