//! The assimilated (or simulated) record of one played hand.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;
use core::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::card::Card;
use crate::chips::ChipColor;
use crate::engine::MAX_SEATS;
use crate::money::Money;
use crate::rules::{adjudicate, is_natural, Outcome, RuleConfig, Tally};
use crate::strategy::Action;

/// Where something sits on the table. Written as `p3` or `dealer`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    Player(u8),
    Dealer,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Player(s) => write!(f, "p{}", s),
            Location::Dealer => f.write_str("dealer"),
        }
    }
}

impl FromStr for Location {
    type Err = ();
    fn from_str(s: &str) -> core::result::Result<Self, ()> {
        if s == "dealer" {
            return Ok(Location::Dealer);
        }
        let seat: u8 = s.strip_prefix('p').ok_or(())?.parse().map_err(|_| ())?;
        if (1..=MAX_SEATS).contains(&seat) {
            Ok(Location::Player(seat))
        } else {
            Err(())
        }
    }
}

impl Serialize for Location {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Location {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(d)?;
        s.parse()
            .map_err(|_| de::Error::custom(alloc::format!("bad location `{}`", s)))
    }
}

/// Something the assimilator wants a human to look at.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "flag", rename_all = "snake_case")]
pub enum ReviewFlag {
    /// Fewer than the required share of chipboard frames arrived.
    LowConfidenceBet { seat: u8 },
    /// A card window had no usable rank detections.
    UnknownCard { location: Location },
    /// Card orientation and chip markers disagree.
    MarkerConflict { seat: u8 },
    /// Dealer draws do not sit at decreasing gaps to the right.
    DealerSpatial,
    /// A second card appeared left of the upcard.
    DealerInconsistent,
    /// Card layout changed in a way no legal deal explains.
    TrackingInconsistency { location: Location },
    /// Hand closed by inactivity rather than a hand_end event.
    BoundaryTimeout,
    /// Upcard or hole card never observed; no settlement.
    MissingDealer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayedHand {
    /// `None` marks a card whose rank could not be read.
    pub cards: Vec<Option<Card>>,
    pub decisions: Vec<Action>,
    pub doubled: bool,
    pub outcome: Option<Outcome>,
    pub net: Option<Money>,
}

impl PlayedHand {
    pub fn known_cards(&self) -> Option<Vec<Card>> {
        self.cards.iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatRecord {
    pub seat: u8,
    pub player_id: String,
    pub initial_bet: Money,
    pub chips: BTreeMap<ChipColor, u32>,
    pub side_bet_present: bool,
    pub split: bool,
    /// One hand, or two after a split, in play order.
    pub hands: Vec<PlayedHand>,
    pub net: Option<Money>,
}

impl SeatRecord {
    /// Every bet on the seat including split and double stakes.
    pub fn total_wagered(&self) -> Money {
        self.hands
            .iter()
            .map(|h| {
                if h.doubled {
                    self.initial_bet * 2
                } else {
                    self.initial_bet
                }
            })
            .sum()
    }

    /// Decisions in the order they were taken across all hands; a split is
    /// the seat's first decision.
    pub fn decisions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        if self.split {
            out.push(Action::Split);
        }
        for h in &self.hands {
            out.extend_from_slice(&h.decisions);
        }
        out
    }

    pub fn first_decision(&self) -> Option<Action> {
        self.decisions().first().copied()
    }

    /// The seat's first two cards as dealt, before any split.
    pub fn initial_cards(&self) -> Option<[Card; 2]> {
        if self.split {
            Some([
                (*self.hands.first()?.cards.first()?)?,
                (*self.hands.get(1)?.cards.first()?)?,
            ])
        } else {
            let h = self.hands.first()?;
            Some([(*h.cards.first()?)?, (*h.cards.get(1)?)?])
        }
    }

    pub fn all_cards(&self) -> impl Iterator<Item = Option<Card>> + '_ {
        self.hands.iter().flat_map(|h| h.cards.iter().copied())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DealerRecord {
    pub upcard: Option<Card>,
    pub hole_card: Option<Card>,
    pub draws: Vec<Option<Card>>,
}

impl DealerRecord {
    /// Full dealer hand if every card is known.
    pub fn known_cards(&self) -> Option<Vec<Card>> {
        let mut v = alloc::vec![self.upcard?, self.hole_card?];
        for d in &self.draws {
            v.push((*d)?);
        }
        Some(v)
    }

    pub fn all_cards(&self) -> impl Iterator<Item = Option<Card>> + '_ {
        [self.upcard, self.hole_card]
            .into_iter()
            .chain(self.draws.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandRecord {
    pub hand_id: u64,
    #[serde(default)]
    pub session: String,
    /// Shoe sequence number; the count resets whenever it changes.
    #[serde(default)]
    pub shoe: u32,
    pub seats: Vec<SeatRecord>,
    pub dealer: DealerRecord,
    /// False when settlement was impossible.
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<ReviewFlag>,
}

impl HandRecord {
    /// Every card on the table in dealing-independent order: seats, then
    /// dealer.
    pub fn all_cards(&self) -> impl Iterator<Item = Option<Card>> + '_ {
        self.seats
            .iter()
            .flat_map(|s| s.all_cards())
            .chain(self.dealer.all_cards())
    }

    pub fn seat(&self, seat: u8) -> Option<&SeatRecord> {
        self.seats.iter().find(|s| s.seat == seat)
    }

    /// Outcome and net for every hand, computed from cards, bets and
    /// doubled flags alone. `None` if any card needed is unknown.
    pub fn recompute_settlement(&self, rules: &RuleConfig) -> Option<Vec<(Vec<Outcome>, Money)>> {
        let dealer = self.dealer.known_cards()?;
        let dealer_total = Tally::of(&dealer).total();
        let dealer_natural = is_natural(&dealer[..2], false);
        let mut out = Vec::with_capacity(self.seats.len());
        for seat in &self.seats {
            let mut outcomes = Vec::new();
            let mut net = Money::ZERO;
            for hand in &seat.hands {
                let cards = hand.known_cards()?;
                let total = Tally::of(&cards).total();
                let outcome = adjudicate(total, is_natural(&cards, seat.split), dealer_total, dealer_natural);
                net += rules.settle(outcome, seat.initial_bet, hand.doubled).ok()?;
                outcomes.push(outcome);
            }
            out.push((outcomes, net));
        }
        Some(out)
    }

    /// Fill in outcomes and nets from the cards. Marks the record complete
    /// on success; on failure clears all settlement fields.
    pub fn settle(&mut self, rules: &RuleConfig) -> bool {
        match self.recompute_settlement(rules) {
            Some(results) => {
                for (seat, (outcomes, net)) in self.seats.iter_mut().zip(results) {
                    for (hand, outcome) in seat.hands.iter_mut().zip(outcomes) {
                        hand.net = rules.settle(outcome, seat.initial_bet, hand.doubled).ok();
                        hand.outcome = Some(outcome);
                    }
                    seat.net = Some(net);
                }
                self.complete = true;
            }
            None => {
                for seat in &mut self.seats {
                    seat.net = None;
                    for hand in &mut seat.hands {
                        hand.outcome = None;
                        hand.net = None;
                    }
                }
                self.complete = false;
            }
        }
        self.complete
    }

    /// Same play as `other`: bets, chips, side bets, cards, decisions,
    /// outcomes, nets and dealer cards. Review flags and the completeness
    /// marker are ignored.
    pub fn same_play(&self, other: &HandRecord) -> bool {
        self.hand_id == other.hand_id && self.seats == other.seats && self.dealer == other.dealer
    }
}
