//! Monte-Carlo theo simulation.
//!
//! Work is split into fixed-size batches, each with its own RNG streams
//! derived from the seed and batch index. Batch tallies are exact integer
//! sums, so merging is associative and a run gives identical results no
//! matter how batches are spread over workers.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Hypergeometric};
use serde::{Deserialize, Serialize};

use crate::analytics::{high_low_update, CountState};
use crate::chips::ChipValueMap;
use crate::engine::{play_round, RoundMeta, SeatPlan};
use crate::error::{Error, Result};
use crate::money::Money;
use crate::policy::Policy;
use crate::record::HandRecord;
use crate::rules::RuleConfig;
use crate::shoe::{Composition, Shoe};
use crate::stats::{linear_fit, LinearFit};

pub const BATCH_HANDS: u64 = 10_000;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub hands: u64,
    pub bet: Money,
    pub hands_per_hour: u32,
    pub policy: Policy,
    pub rules: RuleConfig,
    pub seed: u64,
    /// Keep every hand's record in the result.
    pub log_hands: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            hands: 1_000_000,
            bet: Money::from_dollars(50),
            hands_per_hour: 60,
            policy: Policy::basic(),
            rules: RuleConfig::default(),
            seed: 0,
            log_hands: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hands == 0 {
            return Err(Error::Config("hands must be at least 1"));
        }
        if !self.bet.is_positive() {
            return Err(Error::NonPositiveBet);
        }
        self.rules.validate()
    }

    pub fn batch_count(&self) -> u64 {
        self.hands.div_ceil(BATCH_HANDS)
    }

    fn batch_len(&self, index: u64) -> u64 {
        (self.hands - index * BATCH_HANDS).min(BATCH_HANDS)
    }
}

/// Exact running sums for a set of hands.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tally {
    pub hands: u64,
    pub wagered: i64,
    pub net: i64,
    /// Sum of squared per-hand nets, in cents squared.
    pub net_sq: i128,
    pub log: Vec<HandRecord>,
}

impl Tally {
    pub fn record(&mut self, wagered: Money, net: Money) {
        self.hands += 1;
        self.wagered += wagered.cents();
        self.net += net.cents();
        self.net_sq += net.cents() as i128 * net.cents() as i128;
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.hands += other.hands;
        self.wagered += other.wagered;
        self.net += other.net;
        self.net_sq += other.net_sq;
        self.log.extend(other.log);
        self
    }

    /// House hold: minus the player's net over the amount wagered.
    pub fn hold(&self) -> f64 {
        if self.wagered == 0 {
            0.0
        } else {
            -(self.net as f64) / self.wagered as f64
        }
    }

    /// Standard error of `hold`, treating the mean wager as fixed.
    pub fn hold_std_error(&self) -> f64 {
        if self.hands < 2 || self.wagered == 0 {
            return 0.0;
        }
        let n = self.hands as f64;
        let mean = self.net as f64 / n;
        let var = (self.net_sq as f64 / n - mean * mean) * n / (n - 1.0);
        let mean_wager = self.wagered as f64 / n;
        libm::sqrt(var.max(0.0) / n) / mean_wager
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub policy: String,
    pub hands: u64,
    pub total_wagered: Money,
    pub net: Money,
    pub hold_pct: f64,
    pub hold_std_error: f64,
    /// Expected player loss per hour of play.
    pub theo_per_hour: f64,
    #[serde(skip)]
    pub per_hand_log: Vec<HandRecord>,
}

impl SimResult {
    pub fn from_tally(config: &SimConfig, tally: Tally) -> Self {
        let loss_per_hand = -(tally.net as f64) / 100.0 / tally.hands.max(1) as f64;
        SimResult {
            policy: String::from(config.policy.name()),
            hands: tally.hands,
            total_wagered: Money::from_cents(tally.wagered),
            net: Money::from_cents(tally.net),
            hold_pct: tally.hold(),
            hold_std_error: tally.hold_std_error(),
            theo_per_hour: loss_per_hand * config.hands_per_hour as f64,
            per_hand_log: tally.log,
        }
    }
}

fn streams(seed: u64, stream: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut shoe_rng = ChaCha8Rng::seed_from_u64(seed);
    shoe_rng.set_stream(2 * stream);
    let mut decision_rng = ChaCha8Rng::seed_from_u64(seed);
    decision_rng.set_stream(2 * stream + 1);
    (shoe_rng, decision_rng)
}

/// Play batch `index` of a simulation from a fresh shoe.
pub fn simulate_batch(config: &SimConfig, index: u64) -> Result<Tally> {
    let (shoe_rng, mut decision_rng) = streams(config.seed, index);
    let mut shoe = Shoe::with_rng(config.rules.deck_count, shoe_rng);
    let chips = ChipValueMap::default();
    let plan = [SeatPlan {
        seat: 1,
        player_id: String::new(),
        bet: config.bet,
        side_bet: false,
        policy: &config.policy,
    }];
    let mut tally = Tally::default();
    let mut shoe_no = 0u32;
    for h in 0..config.batch_len(index) {
        if shoe.needs_reshuffle(config.rules.penetration) {
            shoe.reshuffle();
            shoe_no += 1;
        }
        let meta = RoundMeta {
            hand_id: index * BATCH_HANDS + h,
            session: String::new(),
            shoe: shoe_no,
        };
        let record = play_round(&config.rules, &mut shoe, &plan, &chips, &mut decision_rng, meta)?;
        let seat = &record.seats[0];
        tally.record(seat.total_wagered(), seat.net.unwrap_or(Money::ZERO));
        if config.log_hands {
            tally.log.push(record);
        }
    }
    Ok(tally)
}

/// Run a whole simulation on the current thread.
pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let mut total = Tally::default();
    for i in 0..config.batch_count() {
        total = total.merge(simulate_batch(config, i)?);
    }
    Ok(SimResult::from_tally(config, total))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoRow {
    pub policy: String,
    pub hold_pct: f64,
    pub theo_per_hour: f64,
    pub ratio_to_basic: f64,
    /// Basic theo was not positive, so ratios mean nothing.
    pub unstable: bool,
}

/// Theo of each policy relative to the policy named "basic".
pub fn theo_ratio_report(results: &[SimResult]) -> Result<Vec<TheoRow>> {
    if results.len() < 2 {
        return Err(Error::Config("need at least two policies"));
    }
    let basic = results
        .iter()
        .find(|r| r.policy == "basic")
        .ok_or(Error::Config("report needs the basic policy"))?;
    let unstable = basic.theo_per_hour <= 0.0;
    Ok(results
        .iter()
        .map(|r| TheoRow {
            policy: r.policy.clone(),
            hold_pct: r.hold_pct,
            theo_per_hour: r.theo_per_hour,
            ratio_to_basic: r.theo_per_hour / basic.theo_per_hour,
            unstable,
        })
        .collect())
}

/// Simulate each policy under the same config and report theo ratios.
pub fn theo_ratio_report_for(policies: &[Policy], config: &SimConfig) -> Result<Vec<TheoRow>> {
    let mut results = Vec::with_capacity(policies.len());
    for p in policies {
        let cfg = SimConfig {
            policy: p.clone(),
            ..config.clone()
        };
        results.push(simulate(&cfg)?);
    }
    theo_ratio_report(&results)
}

/// Hi-lo tag classes and their per-deck card counts.
const LOW_RANKS: [u8; 5] = [2, 3, 4, 5, 6];
const NEUTRAL_RANKS: [u8; 3] = [7, 8, 9];
const HIGH_RANKS: [u8; 5] = [1, 10, 11, 12, 13];

/// Upper bound on rejection attempts per accepted shoe state.
pub const MAX_ATTEMPTS_PER_HAND: u64 = 100_000;

fn hypergeom<R: Rng>(rng: &mut R, population: u64, successes: u64, draws: u64) -> u64 {
    if draws == 0 || successes == 0 {
        return 0;
    }
    if successes == population {
        return draws;
    }
    Hypergeometric::new(population, successes, draws)
        .expect("valid hypergeometric parameters")
        .sample(rng)
}

/// Split `removed` cards of one tag class across its ranks.
fn remove_within_class<R: Rng>(rng: &mut R, counts: &mut [u32; 13], ranks: &[u8], per_rank: u64, removed: u64) {
    let mut left_pop = per_rank * ranks.len() as u64;
    let mut left = removed;
    for &r in ranks {
        let take = hypergeom(rng, left_pop, per_rank, left);
        counts[r as usize - 1] -= take as u32;
        left -= take;
        left_pop -= per_rank;
    }
}

/// Rejection sampler for shoe states at a given scaled count.
///
/// The number of cards already dealt is uniform over
/// `0..=penetration * shoe_size`; which cards were dealt follows the
/// multivariate hypergeometric law of a shuffled shoe. States are redrawn
/// until the scaled count lies in `[target - 0.5, target + 0.5)`.
#[derive(Debug, Clone)]
pub struct ShoeStateSampler {
    decks: u64,
    max_dealt: u64,
    /// Low cards among `n` dealt, indexed by `n`.
    lows: Vec<Option<Hypergeometric>>,
    /// High cards among `m` dealt non-low cards, indexed by `m`.
    highs: Vec<Option<Hypergeometric>>,
}

impl ShoeStateSampler {
    pub fn new(rules: &RuleConfig) -> Self {
        let decks = rules.deck_count as u64;
        let size = 52 * decks;
        let max_dealt = ((rules.penetration * size as f64) as u64).min(size - 1);
        let dist = |pop: u64, succ: u64, draws: u64| {
            (draws > 0 && draws <= pop)
                .then(|| Hypergeometric::new(pop, succ, draws).expect("valid hypergeometric parameters"))
        };
        ShoeStateSampler {
            decks,
            max_dealt,
            lows: (0..=max_dealt).map(|n| dist(size, 20 * decks, n)).collect(),
            highs: (0..=max_dealt).map(|m| dist(32 * decks, 20 * decks, m)).collect(),
        }
    }

    pub fn sample<R: Rng>(&self, target: f64, rng: &mut R, max_attempts: u64) -> Option<Composition> {
        let size = 52 * self.decks;
        for _ in 0..max_attempts {
            let dealt = rng.random_range(0..=self.max_dealt);
            let lows = self.lows[dealt as usize].as_ref().map_or(0, |d| d.sample(rng));
            let highs = self.highs[(dealt - lows) as usize]
                .as_ref()
                .map_or(0, |d| d.sample(rng));
            let neutrals = dealt - lows - highs;
            let running = lows as f64 - highs as f64;
            let scaled = running / ((size - dealt) as f64 / 52.0);
            if scaled < target - 0.5 || scaled >= target + 0.5 {
                continue;
            }
            let per_rank = 4 * self.decks;
            let mut counts = [per_rank as u32; 13];
            remove_within_class(rng, &mut counts, &LOW_RANKS, per_rank, lows);
            remove_within_class(rng, &mut counts, &NEUTRAL_RANKS, per_rank, neutrals);
            remove_within_class(rng, &mut counts, &HIGH_RANKS, per_rank, highs);
            return Some(Composition::from_counts(counts));
        }
        None
    }
}

/// One-off convenience over [`ShoeStateSampler`].
pub fn sample_conditioned_shoe<R: Rng>(
    rules: &RuleConfig,
    target: f64,
    rng: &mut R,
    max_attempts: u64,
) -> Option<Composition> {
    ShoeStateSampler::new(rules).sample(target, rng, max_attempts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountBucket {
    pub scaled_count: f64,
    pub hands: u64,
    pub hold_pct: f64,
    pub hold_std_error: f64,
}

/// One batch of hands for a scaled-count bucket. `None` if the bucket
/// could not be reached.
pub fn count_bucket_batch(config: &SimConfig, bucket_index: u64, target: f64, batch: u64) -> Result<Option<Tally>> {
    let stream = (bucket_index << 32) | batch;
    let (mut shoe_rng, mut decision_rng) = streams(config.seed ^ 0xC0C0_u64, stream);
    let chips = ChipValueMap::default();
    let plan = [SeatPlan {
        seat: 1,
        player_id: String::new(),
        bet: config.bet,
        side_bet: false,
        policy: &config.policy,
    }];
    let sampler = ShoeStateSampler::new(&config.rules);
    let mut tally = Tally::default();
    for _ in 0..config.batch_len(batch) {
        let Some(mut comp) = sampler.sample(target, &mut shoe_rng, MAX_ATTEMPTS_PER_HAND) else {
            return Ok(None);
        };
        let mut dealer = comp.dealer(&mut shoe_rng);
        let record = play_round(
            &config.rules,
            &mut dealer,
            &plan,
            &chips,
            &mut decision_rng,
            RoundMeta::default(),
        )?;
        let seat = &record.seats[0];
        tally.record(seat.total_wagered(), seat.net.unwrap_or(Money::ZERO));
    }
    Ok(Some(tally))
}

pub fn bucket_result(target: f64, tally: &Tally) -> CountBucket {
    CountBucket {
        scaled_count: target,
        hands: tally.hands,
        hold_pct: tally.hold(),
        hold_std_error: tally.hold_std_error(),
    }
}

/// Hold per scaled-count bucket. Buckets outside [-10, 10] or unreachable
/// for the deck count are skipped.
pub fn hold_vs_scaled_count(config: &SimConfig, buckets: &[f64]) -> Result<Vec<CountBucket>> {
    config.validate()?;
    let mut out = Vec::new();
    'bucket: for (bi, &target) in buckets.iter().enumerate() {
        if !(-10.0..=10.0).contains(&target) {
            continue;
        }
        let mut total = Tally::default();
        for b in 0..config.batch_count() {
            match count_bucket_batch(config, bi as u64, target, b)? {
                Some(t) => total = total.merge(t),
                None => continue 'bucket,
            }
        }
        out.push(bucket_result(target, &total));
    }
    Ok(out)
}

/// Least-squares line through (scaled count, hold) points.
pub fn fit_hold_line(buckets: &[CountBucket]) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = buckets.iter().map(|b| (b.scaled_count, b.hold_pct)).collect();
    linear_fit(&pts)
}

/// How a session seat sizes its bets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetPolicy {
    Flat {
        bet: Money,
    },
    /// `base * max(1, true count)`, whole dollars.
    Counter {
        base: Money,
    },
    /// Bets big when the count is bad: `base * max(1, -true count)`.
    AntiCounter {
        base: Money,
    },
}

impl BetPolicy {
    pub fn bet(&self, true_count: f64) -> Money {
        let scaled = |base: Money, units: f64| {
            let units = if units > 1.0 { units } else { 1.0 };
            Money::from_dollars(libm::round(base.dollars() * units) as i64).max(Money::from_dollars(1))
        };
        match *self {
            BetPolicy::Flat { bet } => bet,
            BetPolicy::Counter { base } => scaled(base, true_count),
            BetPolicy::AntiCounter { base } => scaled(base, -true_count),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionSeat {
    pub seat: u8,
    pub player_id: String,
    pub policy: Policy,
    pub betting: BetPolicy,
    pub side_bet: bool,
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub rules: RuleConfig,
    pub chips: ChipValueMap,
    pub hands: u64,
    pub seed: u64,
    pub session: String,
    pub seats: Vec<SessionSeat>,
}

/// Play a multi-seat session on one shoe, hand ids from 1. Bets follow
/// each seat's bet policy against the true count before the deal.
pub fn simulate_session(config: &SessionConfig) -> Result<Vec<HandRecord>> {
    config.rules.validate()?;
    let (shoe_rng, mut decision_rng) = streams(config.seed ^ 0x5E55, 0);
    let mut shoe = Shoe::with_rng(config.rules.deck_count, shoe_rng);
    let mut count = CountState::fresh(config.rules.deck_count);
    let mut shoe_no = 1u32;
    let mut out = Vec::with_capacity(config.hands as usize);
    for h in 0..config.hands {
        if shoe.needs_reshuffle(config.rules.penetration) {
            shoe.reshuffle();
            shoe_no += 1;
            count = CountState::fresh(config.rules.deck_count);
        }
        let tc = count.scaled_count().unwrap_or(0.0);
        let plans: Vec<SeatPlan<'_>> = config
            .seats
            .iter()
            .map(|s| SeatPlan {
                seat: s.seat,
                player_id: s.player_id.clone(),
                bet: s.betting.bet(tc),
                side_bet: s.side_bet,
                policy: &s.policy,
            })
            .collect();
        let meta = RoundMeta {
            hand_id: h + 1,
            session: config.session.clone(),
            shoe: shoe_no,
        };
        let record = play_round(&config.rules, &mut shoe, &plans, &config.chips, &mut decision_rng, meta)?;
        for card in record.all_cards().flatten() {
            count = high_low_update(count, card)?;
        }
        out.push(record);
    }
    Ok(out)
}
