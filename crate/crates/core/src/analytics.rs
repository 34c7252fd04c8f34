//! Player intelligence from hand records: high-low counting, the linear
//! hold model, cumulative holds, skill scoring and counting detection.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::card::Card;
use crate::chips::ChipValueMap;
use crate::engine::{play_round, RoundMeta, SeatPlan};
use crate::error::{Error, Result};
use crate::money::Money;
use crate::policy::Policy;
use crate::record::{HandRecord, SeatRecord};
use crate::rules::{Outcome, RuleConfig};
use crate::shoe::{Composition, Replay};
use crate::simulator::{CountBucket, Tally};
use crate::stats::{linear_fit, pearson};
use crate::strategy::{upcard_index, Action, HandClass, Provenance, StrategyTable};

/// High-low tag: +1 for 2-6, 0 for 7-9, -1 for tens and aces.
pub fn hi_lo_tag(card: Card) -> i32 {
    match card.rank.get() {
        2..=6 => 1,
        7..=9 => 0,
        _ => -1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountState {
    pub running_count: i32,
    pub cards_seen: u32,
    pub decks_total: f64,
}

impl CountState {
    pub fn fresh(deck_count: u8) -> Self {
        CountState {
            running_count: 0,
            cards_seen: 0,
            decks_total: deck_count as f64,
        }
    }

    pub fn decks_remaining(&self) -> f64 {
        self.decks_total - self.cards_seen as f64 / 52.0
    }

    /// Running count per deck remaining; `None` once the shoe is empty.
    pub fn scaled_count(&self) -> Option<f64> {
        let left = self.decks_remaining();
        (left > 0.0).then(|| self.running_count as f64 / left)
    }
}

/// Count one more card. Fails if more cards are seen than the shoe holds.
pub fn high_low_update(state: CountState, card: Card) -> Result<CountState> {
    let seen = state.cards_seen + 1;
    if seen as f64 > state.decks_total * 52.0 {
        return Err(Error::CountOverflow);
    }
    Ok(CountState {
        running_count: state.running_count + hi_lo_tag(card),
        cards_seen: seen,
        decks_total: state.decks_total,
    })
}

/// Expected house hold as a straight line in the scaled count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoldModel {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl HoldModel {
    /// Published fit for a six-deck game, kept for comparison.
    pub const REFERENCE: HoldModel = HoldModel {
        slope: -0.00474,
        intercept: 0.00512,
        r_squared: 0.98326,
    };

    pub const DEFAULT_R_SQUARED_FLOOR: f64 = 0.9;

    pub fn fit(buckets: &[CountBucket]) -> Option<HoldModel> {
        let pts: Vec<(f64, f64)> = buckets.iter().map(|b| (b.scaled_count, b.hold_pct)).collect();
        linear_fit(&pts).map(|f| HoldModel {
            slope: f.slope,
            intercept: f.intercept,
            r_squared: f.r_squared,
        })
    }

    pub fn usable(&self, r_squared_floor: f64) -> bool {
        self.r_squared >= r_squared_floor
    }

    /// Scaled count at which the house edge vanishes.
    pub fn break_even(&self) -> Option<f64> {
        (self.slope != 0.0).then(|| -self.intercept / self.slope)
    }
}

pub fn expected_hold(model: &HoldModel, scaled_count: f64) -> f64 {
    model.slope * scaled_count + model.intercept
}

/// Bet-weighted and flat-bet cumulative holds over `(bet, hold)` pairs.
///
/// Weights are formed as `bet / total`, and the flat bettor's weight as
/// `(total / n) / total`, so constant bets give bitwise-equal results.
pub fn cumulative_holds(hands: &[(Money, f64)]) -> Result<(f64, f64)> {
    if hands.is_empty() {
        return Err(Error::NoHands);
    }
    let total: i64 = hands.iter().map(|(b, _)| b.cents()).sum();
    if total <= 0 {
        return Err(Error::NonPositiveBet);
    }
    let total = total as f64;
    let flat_weight = (total / hands.len() as f64) / total;
    let mut player = 0.0;
    let mut flat = 0.0;
    for (bet, hold) in hands {
        player += (bet.cents() as f64 / total) * hold;
        flat += flat_weight * hold;
    }
    Ok((player, flat))
}

/// Running `(H_player, H_flatbet)` after each hand.
pub fn cumulative_series(hands: &[(Money, f64)]) -> Vec<(f64, f64)> {
    (1..=hands.len())
        .map(|n| cumulative_holds(&hands[..n]).unwrap_or((0.0, 0.0)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CountingThresholds {
    pub r_min: f64,
    pub a_min: f64,
    pub min_hands: usize,
}

impl Default for CountingThresholds {
    fn default() -> Self {
        CountingThresholds {
            r_min: 0.5,
            a_min: 0.001,
            min_hands: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingVerdict {
    /// Pearson r of bet against scaled count; `None` for flat bets.
    pub correlation: Option<f64>,
    pub h_player: f64,
    pub h_flatbet: f64,
    /// `h_flatbet - h_player`: hold the player's bet sizing removed.
    pub advantage: f64,
    pub flagged: bool,
}

/// Judge per-hand `(scaled_count, bet)` pairs for card counting.
pub fn counting_flag(
    hands: &[(f64, Money)],
    model: &HoldModel,
    thresholds: &CountingThresholds,
) -> Result<CountingVerdict> {
    if hands.len() < thresholds.min_hands {
        return Err(Error::TooFewHands {
            needed: thresholds.min_hands,
            got: hands.len(),
        });
    }
    let counts: Vec<f64> = hands.iter().map(|h| h.0).collect();
    let bets: Vec<f64> = hands.iter().map(|h| h.1.cents() as f64).collect();
    let correlation = pearson(&counts, &bets);
    let weighted: Vec<(Money, f64)> = hands.iter().map(|&(x, b)| (b, expected_hold(model, x))).collect();
    let (h_player, h_flatbet) = cumulative_holds(&weighted)?;
    let advantage = h_flatbet - h_player;
    let flagged = correlation.is_some_and(|r| r >= thresholds.r_min) && advantage >= thresholds.a_min;
    Ok(CountingVerdict {
        correlation,
        h_player,
        h_flatbet,
        advantage,
        flagged,
    })
}

/// Scaled count at the start of each hand, tracked from the cards on the
/// table. The count restarts whenever the session or shoe number changes.
/// Unreadable cards are skipped. `None` when the shoe is exhausted.
pub fn scaled_counts_at_start(hands: &[HandRecord], deck_count: u8) -> Result<Vec<Option<f64>>> {
    let mut out = Vec::with_capacity(hands.len());
    let mut state = CountState::fresh(deck_count);
    let mut current: Option<(&str, u32)> = None;
    for hand in hands {
        let key = (hand.session.as_str(), hand.shoe);
        if current != Some(key) {
            state = CountState::fresh(deck_count);
            current = Some(key);
        }
        out.push(state.scaled_count());
        for card in hand.all_cards().flatten() {
            state = high_low_update(state, card)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deviation {
    pub hand_id: u64,
    pub seat: u8,
    pub class: HandClass,
    pub upcard: Card,
    pub taken: Action,
    pub ideal: Action,
}

/// How the player's empirical policy is compared with basic strategy.
#[derive(Debug, Clone)]
pub struct MultiplierConfig {
    pub rules: RuleConfig,
    pub hands: u64,
    pub seed: u64,
    /// Basic strategy's hold, used to turn a hold gap into a theo ratio.
    pub reference_hold: f64,
}

impl Default for MultiplierConfig {
    fn default() -> Self {
        MultiplierConfig {
            rules: RuleConfig::default(),
            hands: 100_000,
            seed: 0,
            reference_hold: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillEvaluation {
    /// Hands with a first decision that could be scored.
    pub scored: usize,
    pub matched: usize,
    /// Hands skipped because a card needed was unreadable.
    pub excluded_unknown: usize,
    /// Fraction of scored first decisions that match the ideal table.
    pub skill_score: Option<f64>,
    pub deviations: Vec<Deviation>,
    pub skill_theo_multiplier: Option<f64>,
    /// Modal first decision per observed cell.
    #[serde(skip)]
    pub empirical: Option<StrategyTable>,
}

/// The seat's first decision with the cards it was made on.
fn first_decision(seat: &SeatRecord) -> Option<([Card; 2], Action)> {
    Some((seat.initial_cards()?, seat.first_decision()?))
}

/// Score each seat's first decision against `ideal`. Later decisions are not
/// scored. Pass `multiplier` to also estimate the theo multiplier.
pub fn skill_evaluate<'a, I>(
    seats: I,
    ideal: &StrategyTable,
    multiplier: Option<&MultiplierConfig>,
) -> Result<SkillEvaluation>
where
    I: IntoIterator<Item = (&'a HandRecord, &'a SeatRecord)>,
{
    let mut eval = SkillEvaluation {
        scored: 0,
        matched: 0,
        excluded_unknown: 0,
        skill_score: None,
        deviations: Vec::new(),
        skill_theo_multiplier: None,
        empirical: None,
    };
    let mut observed: BTreeMap<(HandClass, usize), [u32; 4]> = BTreeMap::new();
    for (hand, seat) in seats {
        if seat.first_decision().is_none() {
            continue;
        }
        let Some(upcard) = hand.dealer.upcard else {
            eval.excluded_unknown += 1;
            continue;
        };
        let Some((cards, taken)) = first_decision(seat) else {
            eval.excluded_unknown += 1;
            continue;
        };
        let Some(class) = HandClass::classify(&cards, true)? else {
            continue;
        };
        let ideal_action = ideal.lookup(&cards, upcard)?;
        eval.scored += 1;
        if taken == ideal_action {
            eval.matched += 1;
        } else {
            eval.deviations.push(Deviation {
                hand_id: hand.hand_id,
                seat: seat.seat,
                class,
                upcard,
                taken,
                ideal: ideal_action,
            });
        }
        let slot = Action::ALL.iter().position(|a| *a == taken).unwrap_or(0);
        observed.entry((class, upcard_index(upcard))).or_default()[slot] += 1;
    }
    if eval.scored > 0 {
        eval.skill_score = Some(eval.matched as f64 / eval.scored as f64);
        let empirical = StrategyTable::from_fn(
            Provenance::Empirical {
                hands: eval.scored as u64,
            },
            |class, col| {
                let fallback = ideal.get(class, col);
                let Some(votes) = observed.get(&(class, col)) else {
                    return fallback;
                };
                let top = *votes.iter().max().unwrap_or(&0);
                let fallback_slot = Action::ALL.iter().position(|a| *a == fallback).unwrap_or(0);
                if votes[fallback_slot] == top {
                    return fallback;
                }
                Action::ALL[votes.iter().position(|v| *v == top).unwrap_or(0)]
            },
        )?;
        if let Some(cfg) = multiplier {
            let delta = paired_loss_difference(
                &cfg.rules,
                &Policy::from_table("empirical", empirical.clone()),
                &Policy::from_table("ideal", ideal.clone()),
                cfg.hands,
                cfg.seed,
            )?;
            eval.skill_theo_multiplier = Some(1.0 + delta / cfg.reference_hold);
        }
        eval.empirical = Some(empirical);
    }
    Ok(eval)
}

/// Mean extra loss per unit initial bet of `player` over `reference`. Each
/// hand is dealt from a fresh shoe and both policies see the same card
/// order, so identical play gives exactly zero.
pub fn paired_loss_difference(
    rules: &RuleConfig,
    player: &Policy,
    reference: &Policy,
    hands: u64,
    seed: u64,
) -> Result<f64> {
    if hands == 0 {
        return Err(Error::NoHands);
    }
    let mut card_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rng_a = ChaCha8Rng::seed_from_u64(seed);
    rng_a.set_stream(1);
    let mut rng_b = rng_a.clone();
    let chips = ChipValueMap::default();
    let bet = Money::from_dollars(100);
    let plan = |policy| {
        [SeatPlan {
            seat: 1,
            player_id: String::new(),
            bet,
            side_bet: false,
            policy,
        }]
    };
    let (plan_a, plan_b) = (plan(player), plan(reference));
    let (mut a, mut b) = (Tally::default(), Tally::default());
    let mut cache = Vec::with_capacity(32);
    for _ in 0..hands {
        let mut comp = Composition::full(rules.deck_count);
        cache.clear();
        for (plan, tally, rng) in [(&plan_a, &mut a, &mut rng_a), (&plan_b, &mut b, &mut rng_b)] {
            let mut src = Replay::new(&mut cache, &mut comp, &mut card_rng);
            let record = play_round(rules, &mut src, plan, &chips, rng, RoundMeta::default())?;
            let seat = &record.seats[0];
            tally.record(seat.total_wagered(), seat.net.unwrap_or(Money::ZERO));
        }
    }
    Ok((b.net - a.net) as f64 / (bet.cents() as f64 * hands as f64))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeTally {
    pub won: u32,
    pub loss: u32,
    pub push: u32,
    pub bust: u32,
    pub blackjack: u32,
}

impl OutcomeTally {
    pub fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Won => self.won += 1,
            Outcome::Loss => self.loss += 1,
            Outcome::Push => self.push += 1,
            Outcome::Bust => self.bust += 1,
            Outcome::Blackjack => self.blackjack += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerPersona {
    pub player_id: String,
    pub hands_played: usize,
    pub average_bet: Money,
    pub total_wagered: Money,
    pub net: Money,
    pub outcomes: OutcomeTally,
    pub skill: SkillEvaluation,
    /// `None` when there were too few hands to judge.
    pub counting: Option<CountingVerdict>,
}

impl PlayerPersona {
    pub fn skill_score(&self) -> Option<f64> {
        self.skill.skill_score
    }

    pub fn counting_flagged(&self) -> bool {
        self.counting.is_some_and(|c| c.flagged)
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub deck_count: u8,
    pub hold_model: HoldModel,
    pub thresholds: CountingThresholds,
    pub multiplier: Option<MultiplierConfig>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            deck_count: 6,
            hold_model: HoldModel::REFERENCE,
            thresholds: CountingThresholds::default(),
            multiplier: None,
        }
    }
}

/// Per-hand `(scaled_count, bet)` for one player, in record order.
pub fn player_bets(hands: &[HandRecord], counts: &[Option<f64>], player_id: &str) -> Vec<(f64, Money)> {
    hands
        .iter()
        .zip(counts)
        .flat_map(|(h, c)| {
            h.seats
                .iter()
                .filter(move |s| s.player_id == player_id)
                .filter_map(move |s| Some(((*c)?, s.initial_bet)))
        })
        .collect()
}

/// One persona per distinct player id, sorted by id. Hands are taken in the
/// order given, which is also the order the count is tracked in.
pub fn build_personas(
    hands: &[HandRecord],
    ideal: &StrategyTable,
    config: &AnalysisConfig,
) -> Result<Vec<PlayerPersona>> {
    let counts = scaled_counts_at_start(hands, config.deck_count)?;
    let mut players: BTreeMap<&str, Vec<(&HandRecord, &SeatRecord)>> = BTreeMap::new();
    for h in hands {
        for s in &h.seats {
            players.entry(s.player_id.as_str()).or_default().push((h, s));
        }
    }
    let mut out = Vec::with_capacity(players.len());
    for (id, seats) in players {
        let mut outcomes = OutcomeTally::default();
        let mut net = Money::ZERO;
        let mut wagered = Money::ZERO;
        let mut initial = Money::ZERO;
        for (_, s) in &seats {
            initial += s.initial_bet;
            wagered += s.total_wagered();
            net += s.net.unwrap_or(Money::ZERO);
            for outcome in s.hands.iter().filter_map(|h| h.outcome) {
                outcomes.add(outcome);
            }
        }
        let skill = skill_evaluate(seats.iter().copied(), ideal, config.multiplier.as_ref())?;
        let bets = player_bets(hands, &counts, id);
        let counting = match counting_flag(&bets, &config.hold_model, &config.thresholds) {
            Ok(v) => Some(v),
            Err(Error::TooFewHands { .. }) => None,
            Err(e) => return Err(e),
        };
        out.push(PlayerPersona {
            player_id: String::from(id),
            hands_played: seats.len(),
            average_bet: Money::from_cents(initial.cents() / seats.len() as i64),
            total_wagered: wagered,
            net,
            outcomes,
            skill,
            counting,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::cards;
    use crate::shoe::CardSource;
    use crate::shoe::Shoe;

    #[test]
    fn count_examples() {
        let s = high_low_update(CountState::fresh(6), Card::of(5)).unwrap();
        assert_eq!(s.running_count, 1);
        assert!((s.scaled_count().unwrap() - 1.0 / (6.0 - 1.0 / 52.0)).abs() < 1e-12);
        let mut s = CountState::fresh(6);
        for c in cards(&[13, 1]) {
            s = high_low_update(s, c).unwrap();
        }
        assert_eq!(s.running_count, -2);
    }

    #[test]
    fn full_deck_balances() {
        let mut shoe = Shoe::new(1, 5);
        let mut s = CountState::fresh(1);
        for _ in 0..52 {
            s = high_low_update(s, shoe.draw().unwrap()).unwrap();
        }
        assert_eq!(s.running_count, 0);
        assert_eq!(s.scaled_count(), None);
        assert_eq!(high_low_update(s, Card::of(2)), Err(Error::CountOverflow));
    }

    #[test]
    fn reference_model() {
        let m = HoldModel::REFERENCE;
        assert_eq!(expected_hold(&m, 0.0), 0.00512);
        assert!((m.break_even().unwrap() - 1.08).abs() < 0.005);
        assert!((expected_hold(&m, 2.0) + 0.00436).abs() < 1e-12);
    }

    #[test]
    fn worked_cumulative_example() {
        let (p, f) = cumulative_holds(&[(Money::from_dollars(50), 0.005), (Money::from_dollars(150), -0.004)]).unwrap();
        assert!((p + 0.00175).abs() < 1e-15);
        assert!((f - 0.0005).abs() < 1e-15);
        assert_eq!(cumulative_holds(&[]), Err(Error::NoHands));
    }

    #[test]
    fn big_bets_on_good_counts_lower_player_hold() {
        let hands = [
            (Money::from_dollars(10), 0.01),
            (Money::from_dollars(10), 0.005),
            (Money::from_dollars(200), -0.01),
        ];
        let (p, f) = cumulative_holds(&hands).unwrap();
        assert!(p < f);
    }

    #[test]
    fn flat_and_anti_bettors() {
        let m = HoldModel::REFERENCE;
        let t = CountingThresholds::default();
        let flat: Vec<(f64, Money)> = (0..20)
            .map(|i| (i as f64 * 0.3 - 2.0, Money::from_dollars(25)))
            .collect();
        let v = counting_flag(&flat, &m, &t).unwrap();
        assert_eq!(v.correlation, None);
        assert_eq!(v.advantage, 0.0);
        assert!(!v.flagged);
        let anti: Vec<(f64, Money)> = (0..20)
            .map(|i| {
                let x = i as f64 * 0.3 - 3.0;
                (x, Money::from_dollars(if x < 0.0 { 100 } else { 10 }))
            })
            .collect();
        let v = counting_flag(&anti, &m, &t).unwrap();
        assert!(v.advantage < 0.0);
        assert!(!v.flagged);
        assert!(matches!(
            counting_flag(&flat[..5], &m, &t),
            Err(Error::TooFewHands { .. })
        ));
    }
}
