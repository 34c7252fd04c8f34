//! Detection events as they arrive from the cameras.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::chips::ChipColor;
use crate::record::Location;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Viewpoint {
    Chipboard,
    Overhead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    ChipStack,
    Card,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetArea {
    Main,
    Side,
    Other,
}

/// Pixel box `[x, y, w, h]`, origin top-left.
pub type BBox = [f64; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedObject {
    pub kind: ObjectKind,
    /// Card rank 1-13; absent when the index corner could not be read.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<ChipColor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bet_area: Option<BetArea>,
    pub bbox: BBox,
    pub conf: f64,
}

impl DetectedObject {
    pub fn card(rank: Option<u8>, orientation: Orientation, location: Location, bbox: BBox, conf: f64) -> Self {
        DetectedObject {
            kind: ObjectKind::Card,
            rank,
            orientation: Some(orientation),
            location: Some(location),
            color: None,
            count: None,
            bet_area: None,
            bbox,
            conf,
        }
    }

    pub fn chips(color: ChipColor, count: u32, area: BetArea, seat: u8, bbox: BBox, conf: f64) -> Self {
        DetectedObject {
            kind: ObjectKind::ChipStack,
            rank: None,
            orientation: None,
            location: Some(Location::Player(seat)),
            color: Some(color),
            count: Some(count),
            bet_area: Some(area),
            bbox,
            conf,
        }
    }

    pub fn x(&self) -> f64 {
        self.bbox[0]
    }

    /// Structurally valid: attributes present for the object's kind.
    pub fn is_well_formed(&self) -> bool {
        let conf_ok = (0.0..=1.0).contains(&self.conf);
        match self.kind {
            ObjectKind::Card => {
                conf_ok
                    && self.location.is_some()
                    && self.orientation.is_some()
                    && self.rank.is_none_or(|r| (1..=13).contains(&r))
            }
            ObjectKind::ChipStack => {
                conf_ok
                    && matches!(self.location, Some(Location::Player(_)))
                    && self.color.is_some()
                    && self.count.is_some_and(|c| c >= 1)
                    && self.bet_area.is_some()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFrame {
    pub frame_index: u64,
    /// Capture time in seconds.
    pub ts: f64,
    pub viewpoint: Viewpoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera_id: Option<u32>,
    pub objects: Vec<DetectedObject>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ControlEvent {
    HandStart {
        hand_id: u64,
        frame_index: u64,
        /// Seat number to player id.
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty", deserialize_with = "seat_keys")]
        players: BTreeMap<u8, String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shoe: Option<u32>,
    },
    HandEnd {
        hand_id: u64,
        frame_index: u64,
    },
}

impl ControlEvent {
    pub fn frame_index(&self) -> u64 {
        match self {
            ControlEvent::HandStart { frame_index, .. } | ControlEvent::HandEnd { frame_index, .. } => *frame_index,
        }
    }
}

// Tagged enums buffer their input, and buffered JSON object keys are always
// strings, so seat numbers are parsed by hand.
fn seat_keys<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BTreeMap<u8, String>, D::Error> {
    BTreeMap::<String, String>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| {
            k.parse::<u8>()
                .map(|seat| (seat, v))
                .map_err(|_| serde::de::Error::custom("seat key is not a number"))
        })
        .collect()
}

/// One line of a detection stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StreamItem {
    Control(ControlEvent),
    Frame(DetectionFrame),
}

/// Sort key inside one frame tick: hand start, chipboard frames, overhead
/// frame, hand end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemKey {
    pub frame_index: u64,
    pub slot: u8,
    pub camera: u32,
}

impl StreamItem {
    pub fn frame_index(&self) -> u64 {
        self.key().frame_index
    }

    pub fn key(&self) -> ItemKey {
        match self {
            StreamItem::Control(c @ ControlEvent::HandStart { .. }) => ItemKey {
                frame_index: c.frame_index(),
                slot: 0,
                camera: 0,
            },
            StreamItem::Control(c) => ItemKey {
                frame_index: c.frame_index(),
                slot: 3,
                camera: 0,
            },
            StreamItem::Frame(f) => ItemKey {
                frame_index: f.frame_index,
                slot: match f.viewpoint {
                    Viewpoint::Chipboard => 1,
                    Viewpoint::Overhead => 2,
                },
                camera: f.camera_id.unwrap_or(0),
            },
        }
    }
}
