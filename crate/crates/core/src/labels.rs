//! SemanticKITTI class ids used by the defaults and the synthetic scenes.

use alloc::collections::BTreeSet;

use crate::cloud::Label;

pub const UNLABELED: Label = Label(0);
pub const CAR: Label = Label(10);
pub const ROAD: Label = Label(40);
pub const PARKING: Label = Label(44);
pub const SIDEWALK: Label = Label(48);
pub const OTHER_GROUND: Label = Label(49);
pub const BUILDING: Label = Label(50);
pub const FENCE: Label = Label(51);
pub const OTHER_STRUCTURE: Label = Label(52);
pub const LANE_MARKING: Label = Label(60);
pub const VEGETATION: Label = Label(70);
pub const TRUNK: Label = Label(71);
pub const TERRAIN: Label = Label(72);
pub const POLE: Label = Label(80);
pub const TRAFFIC_SIGN: Label = Label(81);

pub const DEFAULT_GROUND: [Label; 6] = [ROAD, PARKING, SIDEWALK, OTHER_GROUND, LANE_MARKING, TERRAIN];

/// Road, parking, sidewalk, other-ground, lane-marking and terrain.
pub fn default_ground_labels() -> BTreeSet<Label> {
    DEFAULT_GROUND.into_iter().collect()
}
