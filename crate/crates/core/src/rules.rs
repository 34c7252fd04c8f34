//! Blackjack domain rules: hand totals, dealer policy, adjudication and
//! settlement.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::card::Card;
use crate::error::{Error, Result};
use crate::money::Money;
use crate::shoe::CardSource;

/// Dealer behaviour on a soft 17.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Soft17 {
    #[default]
    Stand,
    Hit,
}

/// House rules. Defaults: six decks, dealer stands on soft 17, 3:2
/// blackjack, no double after split, one split per hand, split aces take
/// one card, dealer peeks for blackjack, reshuffle at 75% penetration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub deck_count: u8,
    pub dealer_soft_17: Soft17,
    pub blackjack_payout_num: u32,
    pub blackjack_payout_den: u32,
    pub double_after_split: bool,
    pub split_aces_one_card: bool,
    pub dealer_peeks: bool,
    pub penetration: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            deck_count: 6,
            dealer_soft_17: Soft17::Stand,
            blackjack_payout_num: 3,
            blackjack_payout_den: 2,
            double_after_split: false,
            split_aces_one_card: true,
            dealer_peeks: true,
            penetration: 0.75,
        }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.deck_count == 0 {
            return Err(Error::Config("deck_count must be at least 1"));
        }
        if self.blackjack_payout_den == 0 {
            return Err(Error::Config("blackjack_payout_den must be positive"));
        }
        if !(self.penetration > 0.0 && self.penetration <= 1.0) {
            return Err(Error::Config("penetration must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn shoe_size(&self) -> usize {
        52 * self.deck_count as usize
    }

    pub fn settle(&self, outcome: Outcome, bet: Money, doubled: bool) -> Result<Money> {
        settle(
            outcome,
            bet,
            doubled,
            self.blackjack_payout_num,
            self.blackjack_payout_den,
        )
    }

    pub fn dealer_must_hit(&self, total: HandTotal) -> bool {
        total.best < 17 || (total.best == 17 && total.soft && self.dealer_soft_17 == Soft17::Hit)
    }
}

/// The resolved value of a hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandTotal {
    /// Sum with every ace counted as 1.
    pub hard: u8,
    /// True iff an ace is currently counted as 11.
    pub soft: bool,
    /// The best total: `hard + 10` when soft, `hard` otherwise.
    pub best: u8,
}

impl HandTotal {
    /// A total with no soft ace, mostly useful for adjudication tables.
    pub const fn hard(total: u8) -> Self {
        HandTotal {
            hard: total,
            soft: false,
            best: total,
        }
    }

    pub fn from_hard(hard: u8, has_ace: bool) -> Self {
        if has_ace && hard + 10 <= 21 {
            HandTotal {
                hard,
                soft: true,
                best: hard + 10,
            }
        } else {
            HandTotal {
                hard,
                soft: false,
                best: hard,
            }
        }
    }

    pub const fn is_bust(self) -> bool {
        self.best > 21
    }
}

/// Running hand value that tracks aces explicitly. Cheap to update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub hard: u8,
    pub aces: u8,
    pub cards: u8,
}

impl Tally {
    pub fn of(cards: &[Card]) -> Self {
        let mut t = Tally::default();
        for &c in cards {
            t.push(c);
        }
        t
    }

    pub fn push(&mut self, card: Card) {
        self.hard += card.value();
        self.cards += 1;
        if card.is_ace() {
            self.aces += 1;
        }
    }

    pub fn total(self) -> HandTotal {
        HandTotal::from_hard(self.hard, self.aces > 0)
    }
}

/// Best legal total of a hand, with the soft flag set iff an ace can count
/// as 11 without busting.
pub fn hand_total(cards: &[Card]) -> Result<HandTotal> {
    if cards.is_empty() {
        return Err(Error::EmptyHand);
    }
    Ok(Tally::of(cards).total())
}

/// True for a two-card 21 that is eligible to be paid as a blackjack.
pub fn is_natural(cards: &[Card], from_split: bool) -> bool {
    !from_split && cards.len() == 2 && Tally::of(cards).total().best == 21
}

/// Player outcome for one resolved hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Won,
    Loss,
    Push,
    Bust,
    Blackjack,
}

impl Outcome {
    pub const ALL: [Outcome; 5] = [
        Outcome::Won,
        Outcome::Loss,
        Outcome::Push,
        Outcome::Bust,
        Outcome::Blackjack,
    ];
}

/// Resolve a player hand against the dealer.
///
/// Rows, in priority order: player over 21 busts; a player natural wins as
/// a blackjack unless the dealer also has one (push); a dealer natural beats
/// any other player hand; a dealer over 21 loses to any live player hand;
/// otherwise higher total wins and equal totals push.
pub fn adjudicate(player: HandTotal, player_natural: bool, dealer: HandTotal, dealer_natural: bool) -> Outcome {
    if player.is_bust() {
        return Outcome::Bust;
    }
    if player_natural {
        return if dealer_natural {
            Outcome::Push
        } else {
            Outcome::Blackjack
        };
    }
    if dealer_natural {
        return Outcome::Loss;
    }
    if dealer.is_bust() {
        return Outcome::Won;
    }
    match player.best.cmp(&dealer.best) {
        core::cmp::Ordering::Greater => Outcome::Won,
        core::cmp::Ordering::Equal => Outcome::Push,
        core::cmp::Ordering::Less => Outcome::Loss,
    }
}

/// Signed amount won by the player. Even money for wins, the configured
/// ratio for a blackjack, doubled stakes double both ways.
pub fn settle(outcome: Outcome, bet: Money, doubled: bool, bj_num: u32, bj_den: u32) -> Result<Money> {
    if !bet.is_positive() {
        return Err(Error::NonPositiveBet);
    }
    let stake = if doubled { bet * 2 } else { bet };
    Ok(match outcome {
        Outcome::Won => stake,
        Outcome::Loss | Outcome::Bust => -stake,
        Outcome::Push => Money::ZERO,
        Outcome::Blackjack => {
            if doubled {
                return Err(Error::DoubledBlackjack);
            }
            bet.ratio(bj_num, bj_den)
        }
    })
}

/// Complete the dealer hand: draw until the rules say stand. `dealer` holds
/// the upcard and hole card; the returned vector is the full dealer hand.
pub fn dealer_play<S: CardSource + ?Sized>(rules: &RuleConfig, dealer: &[Card], shoe: &mut S) -> Result<Vec<Card>> {
    if dealer.len() < 2 {
        return Err(Error::Unclassifiable("dealer needs upcard and hole card"));
    }
    let mut hand = dealer.to_vec();
    let mut tally = Tally::of(dealer);
    while rules.dealer_must_hit(tally.total()) {
        let card = shoe.draw()?;
        tally.push(card);
        hand.push(card);
    }
    Ok(hand)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::cards;
    use crate::shoe::Shoe;

    #[test]
    fn totals() {
        let t = hand_total(&cards(&[1, 13])).unwrap();
        assert_eq!((t.best, t.soft), (21, true));
        let t = hand_total(&cards(&[10, 6, 7])).unwrap();
        assert_eq!(t.best, 23);
        assert!(t.is_bust());
        assert_eq!(hand_total(&[]), Err(Error::EmptyHand));
    }

    #[test]
    fn ace_ace_nine_by_enumeration() {
        // Enumerate every 1/11 assignment of the aces and keep the best
        // total that does not exceed 21.
        let hand = cards(&[1, 1, 9]);
        let aces = hand.iter().filter(|c| c.is_ace()).count();
        let base: u8 = hand.iter().filter(|c| !c.is_ace()).map(|c| c.value()).sum();
        let mut best = None;
        for mask in 0..(1u8 << aces) {
            let elevens = mask.count_ones() as u8;
            let total = base + elevens * 11 + (aces as u8 - elevens);
            if total <= 21 {
                best = best.max(Some((total, elevens > 0)));
            }
        }
        let t = hand_total(&hand).unwrap();
        assert_eq!(Some((t.best, t.soft)), best);
        assert_eq!((t.best, t.soft), (21, true));
    }

    #[test]
    fn dealer_stands_and_draws() {
        let rules = RuleConfig::default();
        let mut shoe = Shoe::from_cards(cards(&[9]));
        assert_eq!(
            dealer_play(&rules, &cards(&[10, 7]), &mut shoe).unwrap(),
            cards(&[10, 7])
        );

        let mut shoe = Shoe::from_cards(cards(&[5]));
        assert_eq!(
            dealer_play(&rules, &cards(&[10, 6]), &mut shoe).unwrap(),
            cards(&[10, 6, 5])
        );

        let mut shoe = Shoe::from_cards(cards(&[4]));
        assert_eq!(dealer_play(&rules, &cards(&[1, 6]), &mut shoe).unwrap(), cards(&[1, 6]));

        let h17 = RuleConfig {
            dealer_soft_17: Soft17::Hit,
            ..RuleConfig::default()
        };
        let mut shoe = Shoe::from_cards(cards(&[4]));
        assert_eq!(
            dealer_play(&h17, &cards(&[1, 6]), &mut shoe).unwrap(),
            cards(&[1, 6, 4])
        );
    }

    #[test]
    fn dealer_exhausts_shoe() {
        let mut shoe = Shoe::from_cards(cards(&[2]));
        assert_eq!(
            dealer_play(&RuleConfig::default(), &cards(&[10, 2]), &mut shoe),
            Err(Error::ShoeExhausted)
        );
    }

    #[test]
    fn adjudication_examples() {
        let d20 = HandTotal::hard(20);
        assert_eq!(adjudicate(HandTotal::hard(22), false, d20, false), Outcome::Bust);
        assert_eq!(adjudicate(HandTotal::hard(20), false, d20, false), Outcome::Push);
        assert_eq!(
            adjudicate(HandTotal::hard(18), false, HandTotal::hard(22), false),
            Outcome::Won
        );
        assert_eq!(
            adjudicate(HandTotal::hard(22), false, HandTotal::hard(23), false),
            Outcome::Bust
        );
        let bj = hand_total(&cards(&[1, 12])).unwrap();
        assert_eq!(adjudicate(bj, true, d20, false), Outcome::Blackjack);
        assert_eq!(adjudicate(bj, true, bj, true), Outcome::Push);
        assert_eq!(adjudicate(HandTotal::hard(21), false, bj, true), Outcome::Loss);
    }

    #[test]
    fn settlement() {
        let b = Money::from_dollars(50);
        let s = |o, d| settle(o, b, d, 3, 2);
        assert_eq!(s(Outcome::Won, false), Ok(Money::from_dollars(50)));
        assert_eq!(s(Outcome::Won, true), Ok(Money::from_dollars(100)));
        assert_eq!(s(Outcome::Bust, true), Ok(Money::from_dollars(-100)));
        assert_eq!(s(Outcome::Blackjack, false), Ok(Money::from_dollars(75)));
        assert_eq!(s(Outcome::Push, false), Ok(Money::ZERO));
        assert_eq!(s(Outcome::Blackjack, true), Err(Error::DoubledBlackjack));
        assert_eq!(
            settle(Outcome::Won, Money::ZERO, false, 3, 2),
            Err(Error::NonPositiveBet)
        );
    }
}
