use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The 14 body parts, in mask order. Mask index = position + 1; 0 is
/// background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyPart {
    Head,
    Torso,
    LUpperArm,
    RUpperArm,
    LLowerArm,
    RLowerArm,
    LHand,
    RHand,
    LUpperLeg,
    RUpperLeg,
    LLowerLeg,
    RLowerLeg,
    LFoot,
    RFoot,
}

impl BodyPart {
    pub const ALL: [BodyPart; 14] = [
        BodyPart::Head,
        BodyPart::Torso,
        BodyPart::LUpperArm,
        BodyPart::RUpperArm,
        BodyPart::LLowerArm,
        BodyPart::RLowerArm,
        BodyPart::LHand,
        BodyPart::RHand,
        BodyPart::LUpperLeg,
        BodyPart::RUpperLeg,
        BodyPart::LLowerLeg,
        BodyPart::RLowerLeg,
        BodyPart::LFoot,
        BodyPart::RFoot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BodyPart::Head => "head",
            BodyPart::Torso => "torso",
            BodyPart::LUpperArm => "l_upper_arm",
            BodyPart::RUpperArm => "r_upper_arm",
            BodyPart::LLowerArm => "l_lower_arm",
            BodyPart::RLowerArm => "r_lower_arm",
            BodyPart::LHand => "l_hand",
            BodyPart::RHand => "r_hand",
            BodyPart::LUpperLeg => "l_upper_leg",
            BodyPart::RUpperLeg => "r_upper_leg",
            BodyPart::LLowerLeg => "l_lower_leg",
            BodyPart::RLowerLeg => "r_lower_leg",
            BodyPart::LFoot => "l_foot",
            BodyPart::RFoot => "r_foot",
        }
    }

    /// Position in [`BodyPart::ALL`].
    pub fn position(self) -> usize {
        self as usize
    }

    pub fn mask_index(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_mask_index(index: u8) -> Option<BodyPart> {
        BodyPart::ALL.get((index as usize).checked_sub(1)?).copied()
    }

    /// The left/right counterpart; central parts map to themselves.
    pub fn opposite(self) -> BodyPart {
        match self {
            BodyPart::Head | BodyPart::Torso => self,
            // Left and right variants alternate in ALL.
            _ if self.position().is_multiple_of(2) => BodyPart::ALL[self.position() + 1],
            _ => BodyPart::ALL[self.position() - 1],
        }
    }

    pub fn is_right(self) -> bool {
        self.position() >= 2 && self.position() % 2 == 1
    }
}

impl fmt::Display for BodyPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BodyPart {
    type Err = String;

    fn from_str(s: &str) -> Result<BodyPart, String> {
        BodyPart::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown body part '{s}'"))
    }
}

/// Names of the vertex groups carrying each body part, in [`BodyPart::ALL`]
/// order. The default uses the part names themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BodyPartIndexing {
    names: [String; 14],
}

impl BodyPartIndexing {
    pub fn new(names: [String; 14]) -> BodyPartIndexing {
        BodyPartIndexing { names }
    }

    pub fn names(&self) -> &[String; 14] {
        &self.names
    }

    pub fn group_name(&self, part: BodyPart) -> &str {
        &self.names[part.position()]
    }
}

impl Default for BodyPartIndexing {
    fn default() -> BodyPartIndexing {
        BodyPartIndexing { names: BodyPart::ALL.map(|p| p.name().to_string()) }
    }
}
