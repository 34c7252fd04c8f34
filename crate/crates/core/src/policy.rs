//! Player decision policies: the basic-strategy table and a set of
//! suboptimal styles used for theo comparisons.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, RngCore};

use crate::card::Card;
use crate::error::Result;
use crate::rules::Tally;
use crate::strategy::{Action, Legal, StrategyTable};

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Follow a strategy table (the canonical table for "basic").
    Table {
        name: String,
        table: StrategyTable,
    },
    /// Hit below 17, never double or split.
    MimicDealer,
    /// Hit only while the best total is below 12.
    NeverBust,
    AlwaysStand,
    /// Uniform choice among legal actions.
    RandomLegal,
}

impl Policy {
    pub fn basic() -> Self {
        Policy::Table {
            name: String::from("basic"),
            table: StrategyTable::canonical(),
        }
    }

    pub fn from_table(name: &str, table: StrategyTable) -> Self {
        Policy::Table {
            name: name.to_string(),
            table,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Policy::Table { name, .. } => name,
            Policy::MimicDealer => "mimic-dealer",
            Policy::NeverBust => "never-bust",
            Policy::AlwaysStand => "always-stand",
            Policy::RandomLegal => "random-legal",
        }
    }

    /// The action this policy takes. Never returns an action that `legal`
    /// forbids.
    pub fn decide<R: RngCore + ?Sized>(
        &self,
        cards: &[Card],
        upcard: Card,
        legal: Legal,
        rng: &mut R,
    ) -> Result<Action> {
        let total = Tally::of(cards).total();
        Ok(match self {
            Policy::Table { table, .. } => table.lookup_with(cards, upcard, legal)?,
            Policy::MimicDealer => {
                if total.best < 17 {
                    Action::Hit
                } else {
                    Action::Stand
                }
            }
            Policy::NeverBust => {
                if total.best < 12 {
                    Action::Hit
                } else {
                    Action::Stand
                }
            }
            Policy::AlwaysStand => Action::Stand,
            Policy::RandomLegal => {
                let options: Vec<Action> = Action::ALL.iter().copied().filter(|&a| legal.allows(a)).collect();
                options[rng.random_range(0..options.len())]
            }
        })
    }

    pub fn never_doubles_or_splits(&self) -> bool {
        matches!(self, Policy::MimicDealer | Policy::NeverBust | Policy::AlwaysStand)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        Ok(match s {
            "basic" => Policy::basic(),
            "mimic-dealer" => Policy::MimicDealer,
            "never-bust" => Policy::NeverBust,
            "always-stand" => Policy::AlwaysStand,
            "random-legal" => Policy::RandomLegal,
            other => return Err(alloc::format!("unknown policy `{}`", other)),
        })
    }
}

/// Every named policy shipped with the crate, basic first.
pub fn suboptimal_policies() -> Vec<Policy> {
    alloc::vec![
        Policy::basic(),
        Policy::MimicDealer,
        Policy::NeverBust,
        Policy::AlwaysStand,
        Policy::RandomLegal,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::cards;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn decide(p: &Policy, hand: &[u8], up: u8) -> Action {
        let hand = cards(hand);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        p.decide(&hand, Card::of(up), Legal::first_decision(&hand), &mut rng)
            .unwrap()
    }

    #[test]
    fn named_examples() {
        assert_eq!(decide(&Policy::MimicDealer, &[10, 6], 6), Action::Hit);
        assert_eq!(decide(&Policy::MimicDealer, &[10, 7], 6), Action::Stand);
        assert_eq!(decide(&Policy::NeverBust, &[10, 2], 6), Action::Stand);
        assert_eq!(decide(&Policy::NeverBust, &[9, 2], 6), Action::Hit);
        assert_eq!(decide(&Policy::AlwaysStand, &[2, 3], 10), Action::Stand);
    }

    #[test]
    fn random_legal_stays_legal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let three = cards(&[2, 3, 4]);
        let pair = cards(&[8, 8]);
        let mut seen_split = false;
        for _ in 0..500 {
            let a = Policy::RandomLegal
                .decide(&three, Card::of(9), Legal::first_decision(&three), &mut rng)
                .unwrap();
            assert!(matches!(a, Action::Hit | Action::Stand));
            let a = Policy::RandomLegal
                .decide(&pair, Card::of(9), Legal::first_decision(&pair), &mut rng)
                .unwrap();
            seen_split |= a == Action::Split;
        }
        assert!(seen_split);
    }

    #[test]
    fn names_parse() {
        for p in suboptimal_policies() {
            assert_eq!(p.name().parse::<Policy>().unwrap().name(), p.name());
        }
        assert!("martingale".parse::<Policy>().is_err());
    }
}
