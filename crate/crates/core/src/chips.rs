use alloc::collections::BTreeMap;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChipColor {
    Black,
    Green,
    Red,
    Blue,
}

impl ChipColor {
    /// Highest denomination first under the default map.
    pub const ALL: [ChipColor; 4] = [ChipColor::Black, ChipColor::Green, ChipColor::Red, ChipColor::Blue];

    pub fn name(self) -> &'static str {
        match self {
            ChipColor::Black => "black",
            ChipColor::Green => "green",
            ChipColor::Red => "red",
            ChipColor::Blue => "blue",
        }
    }
}

impl fmt::Display for ChipColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChipColor {
    type Err = ();
    fn from_str(s: &str) -> core::result::Result<Self, ()> {
        ChipColor::ALL.into_iter().find(|c| c.name() == s).ok_or(())
    }
}

/// Dollar value of each chip colour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChipValueMap {
    pub red: Money,
    pub green: Money,
    pub black: Money,
    pub blue: Money,
}

impl Default for ChipValueMap {
    fn default() -> Self {
        ChipValueMap {
            red: Money::from_dollars(5),
            green: Money::from_dollars(25),
            black: Money::from_dollars(100),
            blue: Money::from_dollars(1),
        }
    }
}

impl ChipValueMap {
    pub fn validate(&self) -> Result<()> {
        if ChipColor::ALL.iter().all(|&c| self.value(c).is_positive()) {
            Ok(())
        } else {
            Err(Error::Config("chip denominations must be positive"))
        }
    }

    pub fn value(&self, color: ChipColor) -> Money {
        match color {
            ChipColor::Red => self.red,
            ChipColor::Green => self.green,
            ChipColor::Black => self.black,
            ChipColor::Blue => self.blue,
        }
    }

    pub fn total(&self, breakdown: &BTreeMap<ChipColor, u32>) -> Money {
        breakdown.iter().map(|(&c, &n)| self.value(c) * n as i64).sum()
    }

    /// Greedy decomposition into the fewest chips, largest denomination
    /// first. `None` if the amount cannot be made exactly.
    pub fn breakdown(&self, amount: Money) -> Option<BTreeMap<ChipColor, u32>> {
        let mut colors = ChipColor::ALL;
        colors.sort_by_key(|&c| core::cmp::Reverse(self.value(c)));
        let mut left = amount.cents();
        let mut out = BTreeMap::new();
        for c in colors {
            let v = self.value(c).cents();
            let n = left / v;
            if n > 0 {
                out.insert(c, n as u32);
                left -= n * v;
            }
        }
        (left == 0).then_some(out)
    }
}
