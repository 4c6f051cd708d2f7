use crate::behaviors::{BBox, Detection};
use crate::error::{invalid, Result};
use crate::geometry::{wrap_angle, Point2};
use crate::grid::GridMap;

use super::WorldState;

/// Distance from `origin` along `angle` to the boundary of the first occupied
/// cell, clamped to `max_range`. Grid traversal is a DDA walk over cell
/// boundaries; rays that leave the grid see nothing further.
pub fn cast_ray(map: &GridMap, origin: Point2, angle: f64, max_range: f64) -> f64 {
    let res = map.resolution();
    let (w, h) = map.extent();
    let (dy, dx) = angle.sin_cos();

    // Clip the ray to the grid rectangle (slab test).
    let mut t_enter = 0.0f64;
    let mut t_exit = max_range;
    for (o, d, hi) in [(origin.x, dx, w), (origin.y, dy, h)] {
        if d.abs() < 1e-15 {
            if o < 0.0 || o >= hi {
                return max_range;
            }
        } else {
            let (a, b) = ((0.0 - o) / d, (hi - o) / d);
            t_enter = t_enter.max(a.min(b));
            t_exit = t_exit.min(a.max(b));
        }
    }
    if t_enter > t_exit {
        return max_range;
    }

    let px = origin.x + dx * t_enter;
    let py = origin.y + dy * t_enter;
    let mut col = ((px / res).floor() as i64).clamp(0, map.width() as i64 - 1);
    let mut row = ((py / res).floor() as i64).clamp(0, map.height() as i64 - 1);

    let step_col: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_row: i64 = if dy > 0.0 { 1 } else { -1 };
    let next_boundary = |cell: i64, step: i64| (cell + i64::from(step > 0)) as f64 * res;
    let mut t_max_x = if dx.abs() < 1e-15 {
        f64::INFINITY
    } else {
        (next_boundary(col, step_col) - origin.x) / dx
    };
    let mut t_max_y = if dy.abs() < 1e-15 {
        f64::INFINITY
    } else {
        (next_boundary(row, step_row) - origin.y) / dy
    };
    let t_delta_x = if dx.abs() < 1e-15 {
        f64::INFINITY
    } else {
        res / dx.abs()
    };
    let t_delta_y = if dy.abs() < 1e-15 {
        f64::INFINITY
    } else {
        res / dy.abs()
    };

    let mut t = t_enter;
    loop {
        if map.occupied_at(row, col) {
            return t.clamp(0.0, max_range);
        }
        if t_max_x < t_max_y {
            t = t_max_x;
            t_max_x += t_delta_x;
            col += step_col;
        } else {
            t = t_max_y;
            t_max_y += t_delta_y;
            row += step_row;
        }
        if t > t_exit
            || row < 0
            || col < 0
            || row >= map.height() as i64
            || col >= map.width() as i64
        {
            return max_range;
        }
    }
}

/// One reading per sonar of the ring, in the order of
/// [`RobotConfig::sonar_bearings`](crate::geometry::RobotConfig::sonar_bearings).
pub fn sonar_scan(world: &WorldState) -> Vec<f64> {
    let pose = world.robot_pose;
    let max = world.robot_config.sonar_max_range;
    world
        .robot_config
        .sonar_bearings()
        .into_iter()
        .map(|b| cast_ray(&world.map, pose.position(), pose.theta + b, max))
        .collect()
}

/// Range from a servo-mounted sensor. 90° looks straight ahead, 0° fully right.
pub fn rotating_range(world: &WorldState, servo_angle_deg: f64) -> Result<f64> {
    if !(0.0..=180.0).contains(&servo_angle_deg) {
        return Err(invalid(format!(
            "servo angle must be within [0, 180] degrees, got {servo_angle_deg}"
        )));
    }
    let bearing = (servo_angle_deg - 90.0).to_radians();
    let pose = world.robot_pose;
    Ok(cast_ray(
        &world.map,
        pose.position(),
        pose.theta + bearing,
        world.robot_config.sonar_max_range,
    ))
}

/// A simulated detection together with the ground truth behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub detection: Detection,
    pub target_index: usize,
    /// Centre-to-centre range, mm.
    pub range: f64,
    /// Bearing relative to the camera axis, radians.
    pub bearing: f64,
}

/// Geometric stand-in for an object detector: every target inside the field
/// of view with a clear line of sight yields one box.
pub fn camera_observe(world: &WorldState) -> Vec<Observation> {
    let cfg = &world.robot_config;
    let fw = cfg.camera_frame_width as f64;
    let fh = cfg.camera_frame_height as f64;
    let fov = cfg.camera_fov;
    let vfov = fov * fh / fw;
    let pose = world.robot_pose;
    let axis = pose.theta + world.camera_pan;

    let mut out = Vec::new();
    for (i, target) in world.targets.iter().enumerate() {
        let dx = target.x - pose.x;
        let dy = target.y - pose.y;
        let range = dx.hypot(dy);
        if range <= f64::EPSILON {
            continue;
        }
        let bearing = wrap_angle(dy.atan2(dx) - axis);
        if bearing.abs() > fov / 2.0 {
            continue;
        }
        if cast_ray(&world.map, pose.position(), dy.atan2(dx), range) < range {
            continue;
        }
        let cx = fw * (0.5 + bearing / fov);
        let width = fw * (2.0 * (target.radius / range).atan()) / fov;
        let height = fh * (2.0 * (1.5 * target.radius / range).atan()) / vfov;
        let bbox = BBox {
            x_min: (cx - width / 2.0).max(0.0),
            x_max: (cx + width / 2.0).min(fw),
            y_min: (fh / 2.0 - height / 2.0).max(0.0),
            y_max: (fh / 2.0 + height / 2.0).min(fh),
        };
        if bbox.x_max <= bbox.x_min || bbox.y_max <= bbox.y_min {
            continue;
        }
        let confidence = (1.0 - range / (4.0 * cfg.sonar_max_range)).clamp(0.5, 1.0);
        out.push(Observation {
            detection: Detection {
                label: target.label.clone(),
                confidence,
                bbox,
            },
            target_index: i,
            range,
            bearing,
        });
    }
    out
}

pub fn camera_detect(world: &WorldState) -> Vec<Detection> {
    camera_observe(world)
        .into_iter()
        .map(|o| o.detection)
        .collect()
}
