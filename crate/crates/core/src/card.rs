use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Card denomination, 1 (ace) through 13 (king).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rank(u8);

impl Rank {
    pub const ACE: Rank = Rank(1);
    pub const TEN: Rank = Rank(10);
    pub const JACK: Rank = Rank(11);
    pub const QUEEN: Rank = Rank(12);
    pub const KING: Rank = Rank(13);

    pub fn new(rank: u8) -> Result<Self> {
        if (1..=13).contains(&rank) {
            Ok(Rank(rank))
        } else {
            Err(Error::InvalidRank(rank))
        }
    }

    pub const fn get(self) -> u8 {
        self.0
    }

    /// Blackjack value with the ace counted as 1.
    pub const fn value(self) -> u8 {
        if self.0 > 10 {
            10
        } else {
            self.0
        }
    }

    pub const fn is_ace(self) -> bool {
        self.0 == 1
    }

    pub fn all() -> impl Iterator<Item = Rank> {
        (1..=13).map(Rank)
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            1 => f.write_str("A"),
            11 => f.write_str("J"),
            12 => f.write_str("Q"),
            13 => f.write_str("K"),
            n => write!(f, "{}", n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suit {
    Clubs,
    Diamonds,
    Hearts,
    Spades,
}

/// A playing card. Suits never influence outcomes and are not persisted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Card {
    pub rank: Rank,
    pub suit: Option<Suit>,
}

impl Card {
    pub const fn new(rank: Rank) -> Self {
        Card { rank, suit: None }
    }

    /// Build from a raw rank. Panics on an out-of-range rank, so only use
    /// it with literals.
    pub fn of(rank: u8) -> Self {
        Card::new(Rank::new(rank).expect("rank literal in 1..=13"))
    }

    pub const fn value(self) -> u8 {
        self.rank.value()
    }

    pub const fn is_ace(self) -> bool {
        self.rank.is_ace()
    }

    /// Ten, jack, queen or king.
    pub const fn is_ten_value(self) -> bool {
        self.rank.0 >= 10
    }
}

impl PartialEq<u8> for Card {
    fn eq(&self, other: &u8) -> bool {
        self.rank.0 == *other
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.rank.fmt(f)
    }
}

impl Serialize for Card {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.rank.0)
    }
}

impl<'de> Deserialize<'de> for Card {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let raw = u8::deserialize(d)?;
        Rank::new(raw)
            .map(Card::new)
            .map_err(|_| serde::de::Error::custom("card rank outside 1..=13"))
    }
}

impl Serialize for Rank {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for Rank {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let raw = u8::deserialize(d)?;
        Rank::new(raw).map_err(|_| serde::de::Error::custom("rank outside 1..=13"))
    }
}

/// Shorthand for building card lists in tests and examples.
pub fn cards(ranks: &[u8]) -> alloc::vec::Vec<Card> {
    ranks.iter().map(|&r| Card::of(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_bounds() {
        assert!(Rank::new(0).is_err());
        assert!(Rank::new(14).is_err());
        assert_eq!(Rank::new(13).unwrap().value(), 10);
        assert_eq!(Rank::new(1).unwrap().value(), 1);
    }

    #[test]
    fn blackjack_value_is_min_rank_ten() {
        for r in Rank::all() {
            assert_eq!(r.value(), r.get().min(10));
        }
    }
}
