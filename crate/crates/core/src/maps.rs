//! Maps bundled with the crate, at 100 mm per cell.

/// 9.0 m x 4.7 m room with only perimeter walls.
pub const OPEN_ROOM: &str = include_str!("../maps/open_room.txt");

/// Same footprint split into three rooms joined by doorways, with furniture.
pub const CLUTTERED_ROOM: &str = include_str!("../maps/cluttered_room.txt");

/// Looks up a bundled map by name.
pub fn by_name(name: &str) -> Option<&'static str> {
    match name {
        "open_room" => Some(OPEN_ROOM),
        "cluttered_room" => Some(CLUTTERED_ROOM),
        _ => None,
    }
}

pub const NAMES: [&str; 2] = ["open_room", "cluttered_room"];
