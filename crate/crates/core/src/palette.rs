//! The twelve hues of the traditional color wheel used as object classes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CLASS_COUNT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WheelColor {
    pub class: u8,
    pub abbrev: &'static str,
    pub name: &'static str,
    pub rgb: [u8; 3],
}

/// Full-saturation RGB for each wheel class, in class-index order.
pub const WHEEL: [WheelColor; CLASS_COUNT] = [
    WheelColor {
        class: 0,
        abbrev: "r",
        name: "red",
        rgb: [255, 0, 0],
    },
    WheelColor {
        class: 1,
        abbrev: "or",
        name: "orange-red",
        rgb: [255, 64, 0],
    },
    WheelColor {
        class: 2,
        abbrev: "o",
        name: "orange",
        rgb: [255, 128, 0],
    },
    WheelColor {
        class: 3,
        abbrev: "yo",
        name: "yellow-orange",
        rgb: [255, 192, 0],
    },
    WheelColor {
        class: 4,
        abbrev: "y",
        name: "yellow",
        rgb: [255, 255, 0],
    },
    WheelColor {
        class: 5,
        abbrev: "gy",
        name: "green-yellow",
        rgb: [128, 255, 0],
    },
    WheelColor {
        class: 6,
        abbrev: "g",
        name: "green",
        rgb: [0, 255, 0],
    },
    WheelColor {
        class: 7,
        abbrev: "bg",
        name: "blue-green",
        rgb: [0, 255, 128],
    },
    WheelColor {
        class: 8,
        abbrev: "b",
        name: "blue",
        rgb: [0, 0, 255],
    },
    WheelColor {
        class: 9,
        abbrev: "vb",
        name: "violet-blue",
        rgb: [64, 0, 255],
    },
    WheelColor {
        class: 10,
        abbrev: "v",
        name: "violet",
        rgb: [128, 0, 255],
    },
    WheelColor {
        class: 11,
        abbrev: "rv",
        name: "red-violet",
        rgb: [255, 0, 128],
    },
];

pub fn color(class: u8) -> Result<&'static WheelColor> {
    WHEEL
        .get(class as usize)
        .ok_or_else(|| Error::Config(format!("color class {class} outside 0..{CLASS_COUNT}")))
}

pub fn abbrev(class: u8) -> &'static str {
    WHEEL.get(class as usize).map_or("?", |c| c.abbrev)
}

/// Accepts an abbreviation (`"bg"`), a full name, or a numeric index.
pub fn parse_class(s: &str) -> Result<u8> {
    let s = s.trim();
    if let Ok(i) = s.parse::<u8>() {
        return color(i).map(|c| c.class);
    }
    WHEEL
        .iter()
        .find(|c| c.abbrev.eq_ignore_ascii_case(s) || c.name.eq_ignore_ascii_case(s))
        .map(|c| c.class)
        .ok_or_else(|| Error::Config(format!("unknown color class `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_distinct_entries() {
        for (i, c) in WHEEL.iter().enumerate() {
            assert_eq!(c.class as usize, i);
        }
        let mut rgbs: Vec<_> = WHEEL.iter().map(|c| c.rgb).collect();
        rgbs.sort();
        rgbs.dedup();
        assert_eq!(rgbs.len(), CLASS_COUNT);
    }

    #[test]
    fn parses_classes() {
        assert_eq!(parse_class("bg").unwrap(), 7);
        assert_eq!(parse_class("Violet").unwrap(), 10);
        assert_eq!(parse_class("3").unwrap(), 3);
        assert!(parse_class("12").is_err());
        assert!(parse_class("teal").is_err());
    }
}
