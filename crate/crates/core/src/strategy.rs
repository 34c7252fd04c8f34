//! First-decision strategy tables keyed by player hand class and dealer
//! upcard.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::card::Card;
use crate::error::{Error, Result};
use crate::rules::Tally;

/// Six-deck, dealer stands on soft 17, no double after split, dealer peeks.
pub const CANONICAL_GRID: &str = include_str!("../data/basic_s17_6d.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Hit,
    Stand,
    #[serde(rename = "double")]
    DoubleDown,
    Split,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Hit, Action::Stand, Action::DoubleDown, Action::Split];

    pub fn letter(self) -> char {
        match self {
            Action::Hit => 'H',
            Action::Stand => 'S',
            Action::DoubleDown => 'D',
            Action::Split => 'P',
        }
    }

    pub fn from_letter(c: char) -> Option<Action> {
        match c {
            'H' => Some(Action::Hit),
            'S' => Some(Action::Stand),
            'D' => Some(Action::DoubleDown),
            'P' => Some(Action::Split),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Hit => "hit",
            Action::Stand => "stand",
            Action::DoubleDown => "double",
            Action::Split => "split",
        })
    }
}

/// Row of a strategy table. Pairs are keyed by blackjack value, so a pair
/// of kings is `Pair(10)` and a pair of aces is `Pair(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HandClass {
    Hard(u8),
    Soft(u8),
    Pair(u8),
}

impl HandClass {
    pub const ROWS: usize = 34;

    /// Every row in table order: hard 5-20, soft 13-20, pairs A-10.
    pub fn all() -> impl Iterator<Item = HandClass> {
        (5..=20)
            .map(HandClass::Hard)
            .chain((13..=20).map(HandClass::Soft))
            .chain((1..=10).map(HandClass::Pair))
    }

    pub fn index(self) -> usize {
        match self {
            HandClass::Hard(t) => t as usize - 5,
            HandClass::Soft(t) => 16 + t as usize - 13,
            HandClass::Pair(v) => 24 + v as usize - 1,
        }
    }

    pub fn is_valid(self) -> bool {
        match self {
            HandClass::Hard(t) => (5..=20).contains(&t),
            HandClass::Soft(t) => (13..=20).contains(&t),
            HandClass::Pair(v) => (1..=10).contains(&v),
        }
    }

    pub fn allows(self, action: Action) -> bool {
        action != Action::Split || matches!(self, HandClass::Pair(_))
    }

    pub fn label(self) -> String {
        match self {
            HandClass::Hard(t) => format!("H{}", t),
            HandClass::Soft(t) => format!("S{}", t),
            HandClass::Pair(1) => String::from("PA"),
            HandClass::Pair(v) => format!("P{}", v),
        }
    }

    pub fn parse_label(label: &str) -> Option<HandClass> {
        let (kind, rest) = label.split_at(label.char_indices().nth(1)?.0);
        let class = match (kind, rest) {
            ("P", "A") => HandClass::Pair(1),
            ("H", n) => HandClass::Hard(n.parse().ok()?),
            ("S", n) => HandClass::Soft(n.parse().ok()?),
            ("P", n) => HandClass::Pair(n.parse().ok()?),
            _ => return None,
        };
        class.is_valid().then_some(class)
    }

    /// Classify a hand: pairs first, then soft, then hard. Returns `None`
    /// for totals of 21 or more, where there is nothing to decide.
    pub fn classify(cards: &[Card], pair_allowed: bool) -> Result<Option<HandClass>> {
        if cards.len() < 2 {
            return Err(Error::Unclassifiable("fewer than two cards"));
        }
        if pair_allowed && cards.len() == 2 && cards[0].rank == cards[1].rank {
            return Ok(Some(HandClass::Pair(cards[0].value())));
        }
        let total = Tally::of(cards).total();
        if total.best >= 21 {
            return Ok(None);
        }
        if total.soft && total.best >= 13 {
            return Ok(Some(HandClass::Soft(total.best)));
        }
        // Only A-A (soft 12) or 2-2 (hard 4) land here when pairs are
        // excluded; both play like a small hard total.
        Ok(Some(HandClass::Hard(total.hard.clamp(5, 20))))
    }
}

impl fmt::Display for HandClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Column index of a dealer upcard: 2..=10 map to 0..=8, ace to 9.
pub fn upcard_index(upcard: Card) -> usize {
    match upcard.value() {
        1 => 9,
        v => v as usize - 2,
    }
}

pub const UPCARD_LABELS: [&str; 10] = ["2", "3", "4", "5", "6", "7", "8", "9", "10", "A"];

/// Upcard value for a column index (ace = 1).
pub fn upcard_value(index: usize) -> u8 {
    if index == 9 {
        1
    } else {
        index as u8 + 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Canonical,
    Derived {
        hands_per_cell: u64,
        seed: u64,
    },
    /// A player's observed first decisions, basic strategy elsewhere.
    Empirical {
        hands: u64,
    },
    Loaded,
}

/// What the player may do at this decision point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Legal {
    pub double: bool,
    pub split: bool,
}

impl Legal {
    /// First decision on an unsplit two-card hand.
    pub fn first_decision(cards: &[Card]) -> Self {
        Legal {
            double: cards.len() == 2,
            split: cards.len() == 2 && cards[0].rank == cards[1].rank,
        }
    }

    pub fn allows(self, action: Action) -> bool {
        match action {
            Action::Hit | Action::Stand => true,
            Action::DoubleDown => self.double,
            Action::Split => self.split,
        }
    }
}

/// Action per (hand class, upcard). Always total over all 340 cells.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTable {
    cells: Vec<Action>,
    pub provenance: Provenance,
}

impl StrategyTable {
    pub fn canonical() -> Self {
        let mut table = Self::parse_grid(CANONICAL_GRID).expect("bundled grid parses");
        table.provenance = Provenance::Canonical;
        table
    }

    /// Build from a function over every cell; fails if any returned action
    /// is illegal for its row.
    pub fn from_fn(provenance: Provenance, mut f: impl FnMut(HandClass, usize) -> Action) -> Result<Self> {
        let mut cells = Vec::with_capacity(HandClass::ROWS * 10);
        for class in HandClass::all() {
            for col in 0..10 {
                let action = f(class, col);
                if !class.allows(action) {
                    return Err(Error::Table(format!("{} in row {}", action, class)));
                }
                cells.push(action);
            }
        }
        Ok(StrategyTable { cells, provenance })
    }

    pub fn get(&self, class: HandClass, upcard_col: usize) -> Action {
        self.cells[class.index() * 10 + upcard_col]
    }

    pub fn cells(&self) -> impl Iterator<Item = (HandClass, usize, Action)> + '_ {
        HandClass::all().flat_map(move |class| (0..10).map(move |col| (class, col, self.get(class, col))))
    }

    /// Table action for the first decision on a hand.
    pub fn lookup(&self, cards: &[Card], upcard: Card) -> Result<Action> {
        self.lookup_with(cards, upcard, Legal::first_decision(cards))
    }

    /// Table action adjusted to what is legal: a disallowed double becomes a
    /// hit and a disallowed split is re-read as a plain total. Totals of 21
    /// or more always stand.
    pub fn lookup_with(&self, cards: &[Card], upcard: Card, legal: Legal) -> Result<Action> {
        let Some(class) = HandClass::classify(cards, legal.split)? else {
            return Ok(Action::Stand);
        };
        let action = self.get(class, upcard_index(upcard));
        Ok(match action {
            Action::DoubleDown if !legal.double => Action::Hit,
            other => other,
        })
    }

    /// CSV grid: header `hand,2,...,10,A`, one row per hand class, cells
    /// `H`/`S`/`D`/`P`.
    pub fn to_grid(&self) -> String {
        let mut out = String::from("hand");
        for l in UPCARD_LABELS {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for class in HandClass::all() {
            out.push_str(&class.label());
            for col in 0..10 {
                out.push(',');
                out.push(self.get(class, col).letter());
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_grid(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Table(String::from("empty grid")))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() != 11 || cols[1..] != UPCARD_LABELS {
            return Err(Error::Table(format!("bad header `{}`", header)));
        }
        let mut cells: Vec<Option<Action>> = alloc::vec![None; HandClass::ROWS * 10];
        for (n, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 11 {
                return Err(Error::Table(format!("row {} has {} fields", n + 2, fields.len())));
            }
            let class = HandClass::parse_label(fields[0])
                .ok_or_else(|| Error::Table(format!("unknown row label `{}`", fields[0])))?;
            for (col, f) in fields[1..].iter().enumerate() {
                let action = f
                    .chars()
                    .next()
                    .filter(|_| f.len() == 1)
                    .and_then(Action::from_letter)
                    .ok_or_else(|| Error::Table(format!("bad cell `{}` in row {}", f, fields[0])))?;
                if !class.allows(action) {
                    return Err(Error::Table(format!("split in non-pair row {}", fields[0])));
                }
                let slot = &mut cells[class.index() * 10 + col];
                if slot.is_some() {
                    return Err(Error::Table(format!("duplicate row {}", fields[0])));
                }
                *slot = Some(action);
            }
        }
        let cells = cells
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Table(String::from("grid is missing rows")))?;
        Ok(StrategyTable {
            cells,
            provenance: Provenance::Loaded,
        })
    }

    /// Fraction of cells where the two tables agree.
    pub fn agreement(&self, other: &StrategyTable) -> f64 {
        let same = self.cells.iter().zip(&other.cells).filter(|(a, b)| a == b).count();
        same as f64 / self.cells.len() as f64
    }
}

impl fmt::Display for StrategyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_grid())
    }
}
