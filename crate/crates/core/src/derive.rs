//! Basic strategy derived by Monte-Carlo.
//!
//! Each (hand class, upcard) cell is estimated on its own RNG stream, so the
//! result does not depend on the order or thread cells are computed on.
//! Every legal action in a cell sees the same shuffled remainder of the shoe
//! (common random numbers), which keeps EV differences far less noisy than
//! the EVs themselves.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::card::{Card, Rank};
use crate::error::Result;
use crate::money::Money;
use crate::rules::{adjudicate, dealer_play, is_natural, RuleConfig, Tally};
use crate::shoe::{CardSource, Composition, Replay};
use crate::strategy::{upcard_value, Action, HandClass, Legal, Provenance, StrategyTable};

/// Cells whose best and runner-up EVs differ by less than this are ties.
pub const NEAR_TIE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEstimate {
    pub class: HandClass,
    pub upcard_col: usize,
    /// Mean net per unit of initial bet, in `Action::ALL` order; `None` for
    /// actions not legal in the cell.
    pub ev: [Option<f64>; 4],
    pub best: Action,
    /// Best EV minus runner-up EV.
    pub margin: f64,
}

impl CellEstimate {
    pub fn near_tie(&self) -> bool {
        self.margin < NEAR_TIE
    }

    pub fn ev_of(&self, action: Action) -> Option<f64> {
        let i = Action::ALL.iter().position(|a| *a == action)?;
        self.ev[i]
    }
}

#[derive(Debug, Clone)]
pub struct Derivation {
    pub table: StrategyTable,
    pub cells: Vec<CellEstimate>,
}

impl Derivation {
    /// Share of non-tie cells where `table` picks the same action.
    pub fn agreement_excluding_ties(&self, table: &StrategyTable) -> (usize, usize) {
        let mut agree = 0;
        let mut counted = 0;
        for cell in self.cells.iter().filter(|c| !c.near_tie()) {
            counted += 1;
            if table.get(cell.class, cell.upcard_col) == cell.best {
                agree += 1;
            }
        }
        (agree, counted)
    }
}

/// Position of a cell in table order; also its RNG stream.
pub fn cell_stream(class: HandClass, upcard_col: usize) -> u64 {
    (class.index() * 10 + upcard_col) as u64
}

/// Starting two-card hands for a class with their sampling weights.
fn starting_hands(class: HandClass, comp: &Composition) -> Vec<([Card; 2], u64)> {
    let mut out = Vec::new();
    match class {
        HandClass::Pair(v) => out.push(([Card::of(v), Card::of(v)], 1)),
        HandClass::Soft(t) => out.push(([Card::of(1), Card::of(t - 11)], 1)),
        HandClass::Hard(t) => {
            for a in Rank::all().filter(|r| !r.is_ace()) {
                for b in Rank::all().filter(|r| !r.is_ace() && *r != a) {
                    if a.value() + b.value() == t {
                        out.push((
                            [Card::new(a), Card::new(b)],
                            comp.count(a) as u64 * comp.count(b) as u64,
                        ));
                    }
                }
            }
        }
    }
    out
}

fn pick<R: Rng>(hands: &[([Card; 2], u64)], rng: &mut R) -> [Card; 2] {
    let total: u64 = hands.iter().map(|h| h.1).sum();
    let mut x = rng.random_range(0..total);
    for (cards, w) in hands {
        if x < *w {
            return *cards;
        }
        x -= w;
    }
    unreachable!("weights cover the range")
}

/// Finish a hand with the table's play.
fn finish<S: CardSource>(
    table: &StrategyTable,
    hand: &mut Vec<Card>,
    upcard: Card,
    mut legal: Legal,
    src: &mut S,
) -> Result<()> {
    loop {
        if Tally::of(hand).total().best >= 21 {
            return Ok(());
        }
        match table.lookup_with(hand, upcard, legal)? {
            Action::Stand => return Ok(()),
            Action::DoubleDown => {
                hand.push(src.draw()?);
                return Ok(());
            }
            _ => hand.push(src.draw()?),
        }
        legal.double = false;
    }
}

/// Net of one line of play, per unit initial bet.
fn play_line<S: CardSource>(
    rules: &RuleConfig,
    table: &StrategyTable,
    player: [Card; 2],
    dealer: [Card; 2],
    first: Action,
    src: &mut S,
) -> Result<f64> {
    let unit = Money::from_cents(10_000);
    let upcard = dealer[0];
    let continuation = Legal {
        double: false,
        split: false,
    };
    let mut hands: Vec<(Vec<Card>, bool)> = Vec::with_capacity(2);
    let split = first == Action::Split;
    match first {
        Action::Stand => hands.push((player.to_vec(), false)),
        Action::Hit => {
            let mut h = player.to_vec();
            h.push(src.draw()?);
            finish(table, &mut h, upcard, continuation, src)?;
            hands.push((h, false));
        }
        Action::DoubleDown => {
            let mut h = player.to_vec();
            h.push(src.draw()?);
            hands.push((h, true));
        }
        Action::Split => {
            for c in player {
                let mut h = alloc::vec![c, src.draw()?];
                let mut doubled = false;
                if !(c.is_ace() && rules.split_aces_one_card) {
                    let legal = Legal {
                        double: rules.double_after_split,
                        split: false,
                    };
                    if Tally::of(&h).total().best < 21 && table.lookup_with(&h, upcard, legal)? == Action::DoubleDown {
                        h.push(src.draw()?);
                        doubled = true;
                    } else {
                        finish(table, &mut h, upcard, legal, src)?;
                    }
                }
                hands.push((h, doubled));
            }
        }
    }
    let dealer_natural = is_natural(&dealer, false);
    let live = hands.iter().any(|(h, _)| !Tally::of(h).total().is_bust());
    let dealer_hand = if live && !dealer_natural {
        dealer_play(rules, &dealer, src)?
    } else {
        dealer.to_vec()
    };
    let dealer_total = Tally::of(&dealer_hand).total();
    let mut net = Money::ZERO;
    for (h, doubled) in &hands {
        let outcome = adjudicate(Tally::of(h).total(), is_natural(h, split), dealer_total, dealer_natural);
        net += rules.settle(outcome, unit, *doubled)?;
    }
    Ok(net.cents() as f64 / unit.cents() as f64)
}

/// Estimate the EV of every legal first action in one cell. Continuations
/// after the first action follow the canonical table.
pub fn estimate_cell(
    rules: &RuleConfig,
    class: HandClass,
    upcard_col: usize,
    hands: u64,
    seed: u64,
) -> Result<CellEstimate> {
    let table = StrategyTable::canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell_stream(class, upcard_col));
    let upcard = Card::of(upcard_value(upcard_col));
    let mut base = Composition::full(rules.deck_count);
    base.remove(upcard)?;
    let starts = starting_hands(class, &base);
    let actions: Vec<Action> = Action::ALL.iter().copied().filter(|a| class.allows(*a)).collect();
    let mut sums = [0.0f64; 4];
    let mut cache = Vec::with_capacity(32);
    for _ in 0..hands {
        let player = pick(&starts, &mut rng);
        let mut comp = base.clone();
        comp.remove(player[0])?;
        comp.remove(player[1])?;
        let hole = loop {
            let hole = comp.draw_with(&mut rng)?;
            if rules.dealer_peeks && is_natural(&[upcard, hole], false) {
                comp.put_back(hole);
                continue;
            }
            break hole;
        };
        cache.clear();
        for (i, action) in Action::ALL.iter().enumerate() {
            if !actions.contains(action) {
                continue;
            }
            let mut src = Replay::new(&mut cache, &mut comp, &mut rng);
            sums[i] += play_line(rules, &table, player, [upcard, hole], *action, &mut src)?;
        }
    }
    let mut ev = [None; 4];
    for (i, action) in Action::ALL.iter().enumerate() {
        if actions.contains(action) {
            ev[i] = Some(sums[i] / hands.max(1) as f64);
        }
    }
    let mut best = Action::Hit;
    let mut best_ev = f64::NEG_INFINITY;
    for (i, action) in Action::ALL.iter().enumerate() {
        if let Some(e) = ev[i] {
            if e > best_ev {
                best_ev = e;
                best = *action;
            }
        }
    }
    let runner_up = ev
        .iter()
        .zip(Action::ALL)
        .filter(|(_, a)| *a != best)
        .filter_map(|(e, _)| *e)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CellEstimate {
        class,
        upcard_col,
        ev,
        best,
        margin: best_ev - runner_up,
    })
}

/// Build the table from per-cell estimates (in any order).
pub fn assemble(mut cells: Vec<CellEstimate>, hands_per_cell: u64, seed: u64) -> Result<Derivation> {
    cells.sort_by_key(|c| cell_stream(c.class, c.upcard_col));
    let table = StrategyTable::from_fn(Provenance::Derived { hands_per_cell, seed }, |class, col| {
        cells
            .get(cell_stream(class, col) as usize)
            .filter(|c| c.class == class && c.upcard_col == col)
            .map_or(Action::Stand, |c| c.best)
    })?;
    Ok(Derivation { table, cells })
}

/// Every cell in table order.
pub fn all_cells() -> impl Iterator<Item = (HandClass, usize)> {
    HandClass::all().flat_map(|class| (0..10).map(move |col| (class, col)))
}

/// Derive a full table on the current thread.
pub fn derive_strategy(rules: &RuleConfig, hands_per_cell: u64, seed: u64) -> Result<Derivation> {
    rules.validate()?;
    let mut cells = Vec::with_capacity(HandClass::ROWS * 10);
    for (class, col) in all_cells() {
        cells.push(estimate_cell(rules, class, col, hands_per_cell, seed)?);
    }
    assemble(cells, hands_per_cell, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stand_on_twenty() {
        let cell = estimate_cell(&RuleConfig::default(), HandClass::Hard(20), 3, 20_000, 1).unwrap();
        assert_eq!(cell.best, Action::Stand);
        assert!(cell.ev_of(Action::Split).is_none());
        for e in cell.ev.iter().flatten() {
            assert!((-2.0..=1.5).contains(e));
        }
    }

    #[test]
    fn reproducible() {
        let rules = RuleConfig::default();
        let a = estimate_cell(&rules, HandClass::Pair(8), 8, 5_000, 3).unwrap();
        let b = estimate_cell(&rules, HandClass::Pair(8), 8, 5_000, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.ev_of(Action::Split).is_some());
    }

    #[test]
    fn starting_hands_have_the_class_total() {
        let comp = Composition::full(6);
        for t in 5..=20 {
            let hands = starting_hands(HandClass::Hard(t), &comp);
            assert!(!hands.is_empty());
            for (cards, w) in hands {
                assert!(w > 0);
                assert_ne!(cards[0].rank, cards[1].rank);
                assert_eq!(HandClass::classify(&cards, true).unwrap(), Some(HandClass::Hard(t)));
            }
        }
    }

    #[test]
    fn replay_repeats_cards() {
        let mut comp = Composition::full(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut cache = Vec::new();
        let first: Vec<Card> = {
            let mut src = Replay::new(&mut cache, &mut comp, &mut rng);
            (0..5).map(|_| src.draw().unwrap()).collect()
        };
        let mut src = Replay::new(&mut cache, &mut comp, &mut rng);
        let again: Vec<Card> = (0..7).map(|_| src.draw().unwrap()).collect();
        assert_eq!(&again[..5], &first[..]);
        assert_eq!(comp.total(), 45);
    }
}
