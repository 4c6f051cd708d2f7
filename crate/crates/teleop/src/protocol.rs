//! Wire format: one JSON object per line, tagged by a `type` field. Unknown
//! fields are ignored so older peers can talk to newer ones.

use navsim_core::behaviors::Detection;
use navsim_core::sim::{BehaviorMode, EventKind, TelemetryFrame};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveDir {
    Forward,
    Backward,
    Left,
    Right,
    Stop,
}

/// Panel to service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControlMessage {
    SetMode {
        mode: BehaviorMode,
    },
    Drive {
        dir: DriveDir,
    },
    /// Pan in degrees, [-90, 90]; positive turns the same way as positive heading.
    Camera {
        pan_deg: f64,
    },
    SetTarget {
        label: String,
    },
    LoadMap {
        map_text: String,
    },
    DetectOnce,
}

/// Service to panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Telemetry(TelemetryFrame),
    Detections { detections: Vec<Detection> },
    Event { kind: EventKind, timestamp_ms: u64 },
    Error { message: String },
    Ack { echo: ControlMessage },
}

impl ServerMessage {
    pub fn error(message: impl Into<String>) -> Self {
        ServerMessage::Error {
            message: message.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ServerMessage::Telemetry(_) => "telemetry",
            ServerMessage::Detections { .. } => "detections",
            ServerMessage::Event { .. } => "event",
            ServerMessage::Error { .. } => "error",
            ServerMessage::Ack { .. } => "ack",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("cannot decode frame {raw:?}: {reason}")]
pub struct DecodeError {
    pub reason: String,
    pub raw: String,
}

/// Single-line JSON, no trailing newline.
pub fn encode<T: Serialize>(msg: &T) -> String {
    // Every field type here serializes infallibly.
    serde_json::to_string(msg).expect("protocol messages always serialize")
}

fn decode_as<T: for<'de> Deserialize<'de>>(raw: &str) -> Result<T, DecodeError> {
    let fail = |reason: String| DecodeError {
        reason,
        raw: raw.to_string(),
    };
    let value: serde_json::Value = serde_json::from_str(raw.trim_end_matches(['\r', '\n']))
        .map_err(|e| fail(e.to_string()))?;
    if !value.is_object() {
        return Err(fail("frame is not a JSON object".into()));
    }
    if value.get("type").and_then(|t| t.as_str()).is_none() {
        return Err(fail("missing string field \"type\"".into()));
    }
    serde_json::from_value(value).map_err(|e| fail(e.to_string()))
}

pub fn decode(raw: &str) -> Result<ControlMessage, DecodeError> {
    decode_as(raw)
}

pub fn decode_server(raw: &str) -> Result<ServerMessage, DecodeError> {
    decode_as(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_mode_round_trip() {
        let m = ControlMessage::SetMode {
            mode: BehaviorMode::Manual,
        };
        let text = encode(&m);
        assert_eq!(text, r#"{"type":"set_mode","mode":"manual"}"#);
        assert_eq!(decode(&text).unwrap(), m);
    }

    #[test]
    fn extra_fields_are_dropped() {
        let m = decode(r#"{"type":"drive","dir":"left","speed":9,"x":{"y":1}}"#).unwrap();
        assert_eq!(
            m,
            ControlMessage::Drive {
                dir: DriveDir::Left
            }
        );
        assert_eq!(encode(&m), r#"{"type":"drive","dir":"left"}"#);
    }

    #[test]
    fn malformed_frames() {
        let e = decode("[]").unwrap_err();
        assert_eq!(e.raw, "[]");
        assert!(decode("{").is_err());
        assert!(decode(r#"{"dir":"left"}"#).is_err());
        assert!(decode(r#"{"type":"teleport"}"#).is_err());
        assert!(decode(r#"{"type":"drive"}"#).is_err());
        assert!(decode(r#"{"type":"drive","dir":"up"}"#).is_err());
    }

    #[test]
    fn unit_variant_encodes_type_only() {
        assert_eq!(
            encode(&ControlMessage::DetectOnce),
            r#"{"type":"detect_once"}"#
        );
        assert_eq!(
            decode(r#"{"type":"detect_once"}"#).unwrap(),
            ControlMessage::DetectOnce
        );
    }

    #[test]
    fn telemetry_is_flat() {
        let frame = TelemetryFrame {
            timestamp_ms: 100,
            x: 1.0,
            y: 2.0,
            theta: 0.5,
            v_left: 3.0,
            v_right: 4.0,
            mode: "idle".into(),
            sonar: vec![1.0, 2.0],
            zone_or_action: "idle".into(),
        };
        let msg = ServerMessage::Telemetry(frame);
        let text = encode(&msg);
        assert!(text.starts_with(r#"{"type":"telemetry","timestamp_ms":100,"#));
        assert_eq!(decode_server(&text).unwrap(), msg);
    }
}
