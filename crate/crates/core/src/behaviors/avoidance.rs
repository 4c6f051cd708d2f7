use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::RobotConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AvoidConfig {
    /// Readings below this count as an obstacle, mm from the robot centre.
    pub threshold: f64,
    pub backup_distance: f64,
    /// Escape turn magnitude is drawn uniformly from this range, radians.
    pub escape_turn_range: (f64, f64),
    /// Servo angles for the rotating sensor, degrees (90 = straight ahead).
    pub scan_angle_right: f64,
    pub scan_angle_left: f64,
    /// Turn issued when only one side of the ring is blocked, radians.
    pub turn_step: f64,
    /// Turn issued after a rotating-sensor scan, radians.
    pub scan_turn: f64,
}

impl Default for AvoidConfig {
    fn default() -> Self {
        Self {
            threshold: 400.0,
            backup_distance: 150.0,
            escape_turn_range: (FRAC_PI_4, 3.0 * FRAC_PI_4),
            scan_angle_right: 10.0,
            scan_angle_left: 70.0,
            turn_step: 0.3,
            scan_turn: FRAC_PI_3,
        }
    }
}

impl AvoidConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(invalid("avoidance threshold must be positive"));
        }
        let (lo, hi) = self.escape_turn_range;
        if !(lo > 0.0 && lo <= hi && hi <= PI) {
            return Err(invalid(format!(
                "escape_turn_range must lie within (0, π], got ({lo}, {hi})"
            )));
        }
        for angle in [self.scan_angle_right, self.scan_angle_left] {
            if !(0.0..=180.0).contains(&angle) {
                return Err(invalid(format!("servo angle {angle} outside [0, 180]")));
            }
        }
        if self.backup_distance < 0.0 || !(self.turn_step > 0.0) || !(self.scan_turn > 0.0) {
            return Err(invalid("avoidance distances and turns must be positive"));
        }
        Ok(())
    }
}

/// Decision of an avoidance step. Turn magnitudes are radians, backups mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AvoidAction {
    Proceed,
    TurnLeft {
        angle: f64,
    },
    TurnRight {
        angle: f64,
    },
    /// Back up, then turn by the signed `turn` (counter-clockwise positive).
    Escape {
        backup: f64,
        turn: f64,
    },
    ScanRight {
        servo_deg: f64,
    },
    ScanLeft {
        servo_deg: f64,
    },
    Backup {
        distance: f64,
    },
    Halt,
}

impl AvoidAction {
    pub fn kind(&self) -> &'static str {
        match self {
            AvoidAction::Proceed => "proceed",
            AvoidAction::TurnLeft { .. } => "turn_left",
            AvoidAction::TurnRight { .. } => "turn_right",
            AvoidAction::Escape { .. } => "escape",
            AvoidAction::ScanRight { .. } => "scan_right",
            AvoidAction::ScanLeft { .. } => "scan_left",
            AvoidAction::Backup { .. } => "backup",
            AvoidAction::Halt => "halt",
        }
    }
}

impl fmt::Display for AvoidAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind())
    }
}

/// Fixed-bearing range sensors. Bearings in (0, π) are the left half,
/// (-π, 0) the right half; a sensor at exactly 0 counts for both.
#[derive(Debug, Clone, PartialEq)]
pub struct SonarRing {
    bearings: Vec<f64>,
    max_range: f64,
}

impl SonarRing {
    pub fn new(bearings: Vec<f64>, max_range: f64) -> Self {
        Self {
            bearings,
            max_range,
        }
    }

    pub fn from_config(config: &RobotConfig) -> Self {
        Self::new(config.sonar_bearings(), config.sonar_max_range)
    }

    pub fn bearings(&self) -> &[f64] {
        &self.bearings
    }

    pub fn len(&self) -> usize {
        self.bearings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bearings.is_empty()
    }

    /// Minimum reading over the left and right halves. An empty half reads
    /// as infinitely clear.
    pub fn half_minima(&self, readings: &[f64]) -> Result<(f64, f64)> {
        if readings.len() != self.bearings.len() {
            return Err(invalid(format!(
                "expected {} sonar readings, got {}",
                self.bearings.len(),
                readings.len()
            )));
        }
        let mut left = f64::INFINITY;
        let mut right = f64::INFINITY;
        for (&bearing, &r) in self.bearings.iter().zip(readings) {
            if !(r >= 0.0 && r <= self.max_range) {
                return Err(invalid(format!(
                    "sonar reading {r} outside [0, {}]",
                    self.max_range
                )));
            }
            if (0.0..PI).contains(&bearing) {
                left = left.min(r);
            }
            if bearing <= 0.0 && bearing > -PI {
                right = right.min(r);
            }
        }
        Ok((left, right))
    }
}

/// Whether a ring decision came from a corner trap or a stuck condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscapeCause {
    CornerTrap,
    Stuck,
}

/// Reactive step for the fixed sonar ring.
///
/// Both halves blocked (a corner trap) or a stuck robot trigger an escape:
/// back up, then a random turn away from the nearer side. One blocked half
/// turns away from it. Otherwise proceed.
pub fn avoid_step_ring<R: Rng + ?Sized>(
    readings: &[f64],
    ring: &SonarRing,
    cfg: &AvoidConfig,
    stuck: bool,
    rng: &mut R,
) -> Result<AvoidAction> {
    avoid_step_ring_with_cause(readings, ring, cfg, stuck, rng).map(|(a, _)| a)
}

pub fn avoid_step_ring_with_cause<R: Rng + ?Sized>(
    readings: &[f64],
    ring: &SonarRing,
    cfg: &AvoidConfig,
    stuck: bool,
    rng: &mut R,
) -> Result<(AvoidAction, Option<EscapeCause>)> {
    let (left, right) = ring.half_minima(readings)?;
    let left_blocked = left < cfg.threshold;
    let right_blocked = right < cfg.threshold;
    let cause = if left_blocked && right_blocked {
        Some(EscapeCause::CornerTrap)
    } else if stuck {
        Some(EscapeCause::Stuck)
    } else {
        None
    };
    if let Some(cause) = cause {
        let (lo, hi) = cfg.escape_turn_range;
        let magnitude = if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        };
        let counter_clockwise = if left < right {
            false
        } else if right < left {
            true
        } else {
            rng.random_bool(0.5)
        };
        let turn = if counter_clockwise {
            magnitude
        } else {
            -magnitude
        };
        return Ok((
            AvoidAction::Escape {
                backup: cfg.backup_distance,
                turn,
            },
            Some(cause),
        ));
    }
    let action = if left_blocked {
        AvoidAction::TurnRight {
            angle: cfg.turn_step,
        }
    } else if right_blocked {
        AvoidAction::TurnLeft {
            angle: cfg.turn_step,
        }
    } else {
        AvoidAction::Proceed
    };
    Ok((action, None))
}

/// State of the rotating-sensor cycle. Each phase says where the servo
/// should point for the reading passed to the next step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum ScanPhase {
    /// Sensor forward, driving.
    Clear,
    /// Backed away from an obstacle; sensor at the right scan angle.
    ScanRight,
    /// Sensor at the left scan angle, right range recorded.
    ScanLeft { right: f64 },
    /// Both ranges recorded.
    Decide { right: f64, left: f64 },
}

impl ScanPhase {
    pub fn servo_angle(&self, cfg: &AvoidConfig) -> f64 {
        match self {
            ScanPhase::Clear | ScanPhase::Decide { .. } => 90.0,
            ScanPhase::ScanRight => cfg.scan_angle_right,
            ScanPhase::ScanLeft { .. } => cfg.scan_angle_left,
        }
    }
}

/// One step of the rotating-sensor cycle: proceed while clear; on a close
/// obstacle halt and back up, range right then left, and turn toward the
/// longer reading (ties turn right). `reading` is taken at
/// [`ScanPhase::servo_angle`] of the current phase.
pub fn avoid_step_rotating(
    reading: f64,
    cfg: &AvoidConfig,
    phase: ScanPhase,
) -> Result<(AvoidAction, ScanPhase)> {
    if !(reading >= 0.0) {
        return Err(invalid(format!(
            "range must be non-negative, got {reading}"
        )));
    }
    Ok(match phase {
        ScanPhase::Clear if reading >= cfg.threshold => (AvoidAction::Proceed, ScanPhase::Clear),
        ScanPhase::Clear => (
            AvoidAction::Backup {
                distance: cfg.backup_distance,
            },
            ScanPhase::ScanRight,
        ),
        ScanPhase::ScanRight => (
            AvoidAction::ScanRight {
                servo_deg: cfg.scan_angle_right,
            },
            ScanPhase::ScanLeft { right: reading },
        ),
        ScanPhase::ScanLeft { right } => (
            AvoidAction::ScanLeft {
                servo_deg: cfg.scan_angle_left,
            },
            ScanPhase::Decide {
                right,
                left: reading,
            },
        ),
        ScanPhase::Decide { right, left } => {
            let action = if left > right {
                AvoidAction::TurnLeft {
                    angle: cfg.scan_turn,
                }
            } else {
                AvoidAction::TurnRight {
                    angle: cfg.scan_turn,
                }
            };
            (action, ScanPhase::Clear)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring() -> SonarRing {
        SonarRing::from_config(&RobotConfig::default())
    }

    /// Readings with the four right sensors at `right` and the four left at `left`.
    fn split(left: f64, right: f64) -> Vec<f64> {
        let mut v = vec![right; 4];
        v.extend([left; 4]);
        v
    }

    #[test]
    fn open_space_proceeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = avoid_step_ring(
            &[5000.0; 8],
            &ring(),
            &AvoidConfig::default(),
            false,
            &mut rng,
        )
        .unwrap();
        assert_eq!(a, AvoidAction::Proceed);
    }

    #[test]
    fn turns_away_from_one_side() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = AvoidConfig::default();
        let a = avoid_step_ring(&split(200.0, 3000.0), &ring(), &cfg, false, &mut rng).unwrap();
        assert_eq!(
            a,
            AvoidAction::TurnRight {
                angle: cfg.turn_step
            }
        );
        let a = avoid_step_ring(&split(3000.0, 200.0), &ring(), &cfg, false, &mut rng).unwrap();
        assert_eq!(
            a,
            AvoidAction::TurnLeft {
                angle: cfg.turn_step
            }
        );
    }

    #[test]
    fn corner_trap_escapes_away_from_nearer_side() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = AvoidConfig::default();
        let (a, cause) =
            avoid_step_ring_with_cause(&split(200.0, 250.0), &ring(), &cfg, false, &mut rng)
                .unwrap();
        assert_eq!(cause, Some(EscapeCause::CornerTrap));
        let AvoidAction::Escape { backup, turn } = a else {
            panic!("expected escape, got {a:?}");
        };
        assert_eq!(backup, cfg.backup_distance);
        assert!(turn < 0.0, "left is nearer, so turn clockwise");
        assert!((cfg.escape_turn_range.0..=cfg.escape_turn_range.1).contains(&-turn));
    }

    #[test]
    fn stuck_forces_escape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, cause) = avoid_step_ring_with_cause(
            &[5000.0; 8],
            &ring(),
            &AvoidConfig::default(),
            true,
            &mut rng,
        )
        .unwrap();
        assert!(matches!(a, AvoidAction::Escape { .. }));
        assert_eq!(cause, Some(EscapeCause::Stuck));
    }

    #[test]
    fn escape_is_reproducible() {
        let cfg = AvoidConfig::default();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            avoid_step_ring(&split(100.0, 100.0), &ring(), &cfg, false, &mut rng).unwrap()
        };
        assert_eq!(run(11), run(11));
    }

    #[test]
    fn wrong_length_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(avoid_step_ring(
            &[5000.0; 7],
            &ring(),
            &AvoidConfig::default(),
            false,
            &mut rng
        )
        .is_err());
        assert!(avoid_step_ring(
            &[-1.0; 8],
            &ring(),
            &AvoidConfig::default(),
            false,
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn forward_sensor_counts_for_both_halves() {
        let ring = SonarRing::new(vec![-1.0, 0.0, 1.0], 5000.0);
        assert_eq!(
            ring.half_minima(&[900.0, 100.0, 800.0]).unwrap(),
            (100.0, 100.0)
        );
    }

    #[test]
    fn rotating_cycle() {
        let cfg = AvoidConfig::default();
        assert_eq!(
            avoid_step_rotating(2000.0, &cfg, ScanPhase::Clear).unwrap(),
            (AvoidAction::Proceed, ScanPhase::Clear)
        );
        let (a, p) = avoid_step_rotating(250.0, &cfg, ScanPhase::Clear).unwrap();
        assert_eq!(
            a,
            AvoidAction::Backup {
                distance: cfg.backup_distance
            }
        );
        assert_eq!(p, ScanPhase::ScanRight);
        assert_eq!(p.servo_angle(&cfg), 10.0);
        let (a, p) = avoid_step_rotating(3000.0, &cfg, p).unwrap();
        assert_eq!(a, AvoidAction::ScanRight { servo_deg: 10.0 });
        assert_eq!(p.servo_angle(&cfg), 70.0);
        let (a, p) = avoid_step_rotating(800.0, &cfg, p).unwrap();
        assert_eq!(a, AvoidAction::ScanLeft { servo_deg: 70.0 });
        assert_eq!(
            p,
            ScanPhase::Decide {
                right: 3000.0,
                left: 800.0
            }
        );
        let (a, p) = avoid_step_rotating(0.0, &cfg, p).unwrap();
        assert_eq!(
            a,
            AvoidAction::TurnRight {
                angle: cfg.scan_turn
            }
        );
        assert_eq!(p, ScanPhase::Clear);
    }

    #[test]
    fn rotating_decision_mirrors() {
        let cfg = AvoidConfig::default();
        let decide = |right, left| {
            avoid_step_rotating(0.0, &cfg, ScanPhase::Decide { right, left })
                .unwrap()
                .0
        };
        assert_eq!(
            decide(3000.0, 800.0),
            AvoidAction::TurnRight {
                angle: cfg.scan_turn
            }
        );
        assert_eq!(
            decide(800.0, 3000.0),
            AvoidAction::TurnLeft {
                angle: cfg.scan_turn
            }
        );
        assert_eq!(
            decide(500.0, 500.0),
            AvoidAction::TurnRight {
                angle: cfg.scan_turn
            }
        );
    }

    #[test]
    fn rotating_rejects_negative_range() {
        assert!(avoid_step_rotating(-1.0, &AvoidConfig::default(), ScanPhase::Clear).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(AvoidConfig::default().validate().is_ok());
        let bad = AvoidConfig {
            escape_turn_range: (0.0, 1.0),
            ..AvoidConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mirror_symmetry(readings in proptest::collection::vec(0.0f64..5000.0, 8), seed in any::<u64>()) {
                let cfg = AvoidConfig::default();
                let mirrored: Vec<f64> = readings.iter().rev().copied().collect();
                let a = avoid_step_ring(&readings, &ring(), &cfg, false, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                let b = avoid_step_ring(&mirrored, &ring(), &cfg, false, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                let expected = match a {
                    AvoidAction::TurnLeft { angle } => AvoidAction::TurnRight { angle },
                    AvoidAction::TurnRight { angle } => AvoidAction::TurnLeft { angle },
                    other => other,
                };
                prop_assert_eq!(b.kind(), expected.kind());
                if let (AvoidAction::TurnLeft { .. } | AvoidAction::TurnRight { .. }, _) = (a, b) {
                    prop_assert_eq!(b, expected);
                }
            }

            #[test]
            fn never_proceeds_when_blocked(readings in proptest::collection::vec(0.0f64..5000.0, 8), seed in any::<u64>()) {
                let cfg = AvoidConfig::default();
                let (l, r) = ring().half_minima(&readings).unwrap();
                let a = avoid_step_ring(&readings, &ring(), &cfg, false, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                if l < cfg.threshold || r < cfg.threshold {
                    prop_assert_ne!(a, AvoidAction::Proceed);
                }
            }

            #[test]
            fn cycle_returns_to_clear(readings in proptest::collection::vec(0.0f64..5000.0, 4), first in 0.0f64..399.0) {
                let cfg = AvoidConfig::default();
                // leaving Clear: the full trip back takes four transitions
                let (_, mut phase) = avoid_step_rotating(first, &cfg, ScanPhase::Clear).unwrap();
                let mut steps = 1;
                for &r in &readings[..3] {
                    if phase == ScanPhase::Clear { break; }
                    phase = avoid_step_rotating(r, &cfg, phase).unwrap().1;
                    steps += 1;
                }
                prop_assert_eq!(phase, ScanPhase::Clear);
                prop_assert!(steps <= 4);
                for start in [ScanPhase::ScanRight, ScanPhase::ScanLeft { right: 100.0 }, ScanPhase::Decide { right: 1.0, left: 2.0 }] {
                    let mut phase = start;
                    let mut steps = 0;
                    // A trip through the cycle takes at most four transitions.
                    for &r in &readings {
                        let (_, next) = avoid_step_rotating(r, &cfg, phase).unwrap();
                        steps += 1;
                        phase = next;
                        if phase == ScanPhase::Clear { break; }
                    }
                    prop_assert_eq!(phase, ScanPhase::Clear);
                    prop_assert!(steps <= 4);
                }
            }
        }
    }
}
