//! The closed label alphabet: idle plus the seven WHO washing movements,
//! identified by their number in the WHO hand-hygiene technique.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A frame label. Codes follow the WHO guideline numbering; `Idle` (code 0)
/// covers everything that is not one of the recognised movements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MovementClass {
    Idle,
    PalmToPalm,
    PalmOverDorsum,
    FingersInterlaced,
    BackOfFingers,
    ThumbRub,
    FingertipsToPalm,
    FaucetWithTowel,
}

/// Number of classes, and the length of every score vector.
pub const NUM_CLASSES: usize = 8;

impl MovementClass {
    /// All classes in canonical code order (0, 2, 3, 4, 5, 6, 7, 10).
    pub const ALL: [MovementClass; NUM_CLASSES] = [
        MovementClass::Idle,
        MovementClass::PalmToPalm,
        MovementClass::PalmOverDorsum,
        MovementClass::FingersInterlaced,
        MovementClass::BackOfFingers,
        MovementClass::ThumbRub,
        MovementClass::FingertipsToPalm,
        MovementClass::FaucetWithTowel,
    ];

    /// The seven washing movements, excluding idle.
    pub const WASHING: [MovementClass; 7] = [
        MovementClass::PalmToPalm,
        MovementClass::PalmOverDorsum,
        MovementClass::FingersInterlaced,
        MovementClass::BackOfFingers,
        MovementClass::ThumbRub,
        MovementClass::FingertipsToPalm,
        MovementClass::FaucetWithTowel,
    ];

    pub const fn code(self) -> u8 {
        match self {
            MovementClass::Idle => 0,
            MovementClass::PalmToPalm => 2,
            MovementClass::PalmOverDorsum => 3,
            MovementClass::FingersInterlaced => 4,
            MovementClass::BackOfFingers => 5,
            MovementClass::ThumbRub => 6,
            MovementClass::FingertipsToPalm => 7,
            MovementClass::FaucetWithTowel => 10,
        }
    }

    pub fn from_code(code: i64) -> Result<Self> {
        Ok(match code {
            0 => MovementClass::Idle,
            2 => MovementClass::PalmToPalm,
            3 => MovementClass::PalmOverDorsum,
            4 => MovementClass::FingersInterlaced,
            5 => MovementClass::BackOfFingers,
            6 => MovementClass::ThumbRub,
            7 => MovementClass::FingertipsToPalm,
            10 => MovementClass::FaucetWithTowel,
            other => return Err(Error::UnknownMovementCode(other)),
        })
    }

    /// Position in [`MovementClass::ALL`]; the index into score vectors and
    /// confusion matrices.
    pub const fn index(self) -> usize {
        match self {
            MovementClass::Idle => 0,
            MovementClass::PalmToPalm => 1,
            MovementClass::PalmOverDorsum => 2,
            MovementClass::FingersInterlaced => 3,
            MovementClass::BackOfFingers => 4,
            MovementClass::ThumbRub => 5,
            MovementClass::FingertipsToPalm => 6,
            MovementClass::FaucetWithTowel => 7,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub const fn name(self) -> &'static str {
        match self {
            MovementClass::Idle => "idle",
            MovementClass::PalmToPalm => "palm_to_palm",
            MovementClass::PalmOverDorsum => "palm_over_dorsum",
            MovementClass::FingersInterlaced => "fingers_interlaced",
            MovementClass::BackOfFingers => "back_of_fingers",
            MovementClass::ThumbRub => "thumb_rub",
            MovementClass::FingertipsToPalm => "fingertips_to_palm",
            MovementClass::FaucetWithTowel => "faucet_with_towel",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    pub const fn is_washing(self) -> bool {
        !matches!(self, MovementClass::Idle)
    }
}

impl Default for MovementClass {
    fn default() -> Self {
        MovementClass::Idle
    }
}

impl fmt::Display for MovementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Accepts either a numeric code or a canonical name.
impl FromStr for MovementClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(code) = s.parse::<i64>() {
            return MovementClass::from_code(code);
        }
        MovementClass::from_name(s)
            .ok_or_else(|| Error::Validation(format!("unknown movement '{s}'")))
    }
}

impl Serialize for MovementClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for MovementClass {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let code = i64::deserialize(deserializer)?;
        MovementClass::from_code(code).map_err(serde::de::Error::custom)
    }
}
