//! Rebuilds hand records from an out-of-order stream of detection frames.
//!
//! Items pass through a watermark reorder buffer, are grouped into hands by
//! control events (or by a run of empty frames), and each closed hand is
//! assembled: bets by frame vote, cards by tracked windows, dealer cards by
//! position, decisions from card orientation and chip stacks.

pub mod frames;
pub mod reorder;
pub mod tracking;
pub mod voting;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::card::Card;
use crate::chips::ChipValueMap;
use crate::money::Money;
use crate::record::{DealerRecord, HandRecord, Location, PlayedHand, ReviewFlag, SeatRecord};
use crate::rules::{is_natural, RuleConfig, Tally};
use crate::strategy::Action;

pub use frames::{
    BBox, BetArea, ControlEvent, DetectedObject, DetectionFrame, ItemKey, ObjectKind, Orientation, StreamItem,
    Viewpoint,
};
pub use reorder::{reorder_all, ReorderBuffer, ReorderStats};
pub use tracking::{sequence_dealer_cards, CardSighting, DealerSequence, DealerTracker, SeatTracker, TrackedCard};
pub use voting::{mode_by, vote_main_bet, vote_main_bet_forced, BetVote, ChipObservation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssimilatorConfig {
    pub rules: RuleConfig,
    pub chips: ChipValueMap,
    /// Received frames a new card layout must persist before it counts.
    pub stability_frames: u32,
    /// Frames the reorder buffer waits for stragglers.
    pub max_lag: u64,
    /// Share of expected chipboard frames needed before voting a bet.
    pub bet_quorum: f64,
    /// Horizontal gap in pixels separating a player's split hands.
    pub cluster_gap: f64,
    /// Pixels within which a dealer card is the same card.
    pub dealer_tolerance: f64,
    /// Consecutive empty overhead frames that close a hand.
    pub empty_timeout: u64,
}

impl Default for AssimilatorConfig {
    fn default() -> Self {
        AssimilatorConfig {
            rules: RuleConfig::default(),
            chips: ChipValueMap::default(),
            stability_frames: 3,
            max_lag: 20,
            bet_quorum: voting::DEFAULT_QUORUM,
            cluster_gap: 60.0,
            dealer_tolerance: 15.0,
            empty_timeout: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssimilatorStats {
    pub reorder: ReorderStats,
    pub hands: u64,
    pub malformed_objects: u64,
    pub timeouts: u64,
}

/// What a seat's chips and cards say about its decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct SeatEvidence {
    /// Voted cards per sub-hand.
    pub hands: Vec<Vec<TrackedCard>>,
    /// Copies of the initial bet seen in the main area at the end.
    pub bet_groups: u32,
}

/// Per-hand decisions, which hands were doubled, and whether the chips and
/// card orientation disagreed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferredPlay {
    pub split: bool,
    pub decisions: Vec<Vec<Action>>,
    pub doubled: Vec<bool>,
    pub marker_conflict: bool,
}

fn best_total(cards: &[TrackedCard]) -> Option<u8> {
    let known: Option<Vec<Card>> = cards.iter().map(|c| c.card).collect();
    known.map(|k| Tally::of(&k).total().best)
}

/// Decisions from the table markers: two sub-hands mean a split; a
/// horizontal third card backed by an extra chip stack is a double; any
/// other card after the second is a hit; a live hand that stops drawing
/// stood. `dealer_natural_peeked` and naturals end play before any
/// decision.
pub fn infer_play(rules: &RuleConfig, evidence: &SeatEvidence, dealer_natural_peeked: bool) -> InferredPlay {
    let split = evidence.hands.len() == 2;
    let n = evidence.hands.len();
    let mut play = InferredPlay {
        split,
        decisions: alloc::vec![Vec::new(); n],
        doubled: alloc::vec![false; n],
        marker_conflict: false,
    };
    if dealer_natural_peeked {
        return play;
    }
    if !split {
        if let Some(h) = evidence.hands.first() {
            let known: Option<Vec<Card>> = h.iter().map(|c| c.card).collect();
            if h.len() == 2 && known.is_some_and(|k| is_natural(&k, false)) {
                return play;
            }
        }
    }
    let base_groups = if split { 2 } else { 1 };
    if split && evidence.bet_groups < 2 {
        play.marker_conflict = true;
    }
    let may_double = !split || rules.double_after_split;
    let wants_double: Vec<bool> = evidence
        .hands
        .iter()
        .map(|h| h.len() == 3 && h[2].horizontal && may_double)
        .collect();
    let claimed = wants_double.iter().filter(|d| **d).count() as u32;
    let doubles_backed = evidence.bet_groups >= base_groups + claimed;
    for (i, hand) in evidence.hands.iter().enumerate() {
        if hand.iter().skip(2).any(|c| c.horizontal) && !(wants_double[i] && doubles_backed) {
            play.marker_conflict = true;
        }
        let one_card_aces =
            split && rules.split_aces_one_card && hand.first().and_then(|c| c.card).is_some_and(|c| c.is_ace());
        if one_card_aces {
            continue;
        }
        let doubled = wants_double[i] && doubles_backed;
        let d = &mut play.decisions[i];
        if doubled {
            d.push(Action::DoubleDown);
            play.doubled[i] = true;
            continue;
        }
        d.extend(core::iter::repeat_n(Action::Hit, hand.len().saturating_sub(2)));
        if best_total(hand).is_none_or(|t| t < 21) {
            d.push(Action::Stand);
        }
    }
    play
}

/// The seat's first decision, or `None` if play never reached it.
pub fn infer_decision(rules: &RuleConfig, evidence: &SeatEvidence, dealer_natural_peeked: bool) -> Option<Action> {
    let play = infer_play(rules, evidence, dealer_natural_peeked);
    if play.split {
        return Some(Action::Split);
    }
    play.decisions.first().and_then(|d| d.first().copied())
}

#[derive(Debug, Clone)]
struct HandBuilder {
    hand_id: u64,
    session: String,
    shoe: u32,
    players: BTreeMap<u8, String>,
    start_frame: u64,
    last_frame: u64,
    /// Per chipboard frame: camera, frame index and each seat's view.
    chipboard: Vec<(u32, u64, BTreeMap<u8, ChipObservation>)>,
    camera_seats: BTreeMap<u32, BTreeSet<u8>>,
    seats: BTreeMap<u8, SeatTracker>,
    dealer: DealerTracker,
    empty_run: u64,
    active: bool,
    flags: Vec<ReviewFlag>,
}

impl HandBuilder {
    fn new(config: &AssimilatorConfig, hand_id: u64, start_frame: u64) -> Self {
        HandBuilder {
            hand_id,
            session: String::new(),
            shoe: 0,
            players: BTreeMap::new(),
            start_frame,
            last_frame: start_frame,
            chipboard: Vec::new(),
            camera_seats: BTreeMap::new(),
            seats: BTreeMap::new(),
            dealer: DealerTracker::new(config.stability_frames, config.dealer_tolerance),
            empty_run: 0,
            active: false,
            flags: Vec::new(),
        }
    }

    fn chipboard_frame(&mut self, frame: &DetectionFrame, stats: &mut AssimilatorStats) {
        let camera = frame.camera_id.unwrap_or(0);
        let mut view: BTreeMap<u8, ChipObservation> = BTreeMap::new();
        for obj in &frame.objects {
            if obj.kind != ObjectKind::ChipStack {
                continue;
            }
            if !obj.is_well_formed() {
                stats.malformed_objects += 1;
                continue;
            }
            let Some(Location::Player(seat)) = obj.location else {
                continue;
            };
            let obs = view.entry(seat).or_insert_with(|| ChipObservation {
                frame_index: frame.frame_index,
                ..ChipObservation::default()
            });
            match obj.bet_area {
                Some(BetArea::Main) => {
                    obs.stacks
                        .push((obj.color.expect("checked"), obj.count.expect("checked"), obj.conf))
                }
                Some(BetArea::Side) => obs.side_bet = true,
                _ => {}
            }
        }
        self.camera_seats
            .entry(camera)
            .or_default()
            .extend(view.keys().copied());
        self.chipboard.push((camera, frame.frame_index, view));
    }

    fn overhead_frame(&mut self, config: &AssimilatorConfig, frame: &DetectionFrame, stats: &mut AssimilatorStats) {
        let mut by_location: BTreeMap<Location, Vec<CardSighting>> = BTreeMap::new();
        for obj in &frame.objects {
            if obj.kind != ObjectKind::Card {
                continue;
            }
            if !obj.is_well_formed() {
                stats.malformed_objects += 1;
                continue;
            }
            by_location
                .entry(obj.location.expect("checked"))
                .or_default()
                .push(CardSighting {
                    x: obj.x(),
                    rank: obj.rank,
                    orientation: obj.orientation.expect("checked"),
                    conf: obj.conf,
                });
        }
        for loc in by_location.keys() {
            if let Location::Player(seat) = *loc {
                self.seats
                    .entry(seat)
                    .or_insert_with(|| SeatTracker::new(seat, config.stability_frames, config.cluster_gap));
            }
        }
        for (seat, tracker) in &mut self.seats {
            let sightings = by_location.get(&Location::Player(*seat)).map_or(&[][..], Vec::as_slice);
            tracker.observe(frame.frame_index, sightings);
        }
        let dealer = by_location.get(&Location::Dealer).map_or(&[][..], Vec::as_slice);
        self.dealer.observe(frame.frame_index, dealer);
    }

    /// Chipboard views of one seat over `[from, to)`, one per frame from a
    /// camera that covers the seat.
    fn seat_chips(&self, seat: u8, from: u64, to: u64) -> Vec<ChipObservation> {
        self.chipboard
            .iter()
            .filter(|(cam, idx, _)| {
                *idx >= from && *idx < to && self.camera_seats.get(cam).is_some_and(|s| s.contains(&seat))
            })
            .map(|(_, idx, view)| {
                view.get(&seat).cloned().unwrap_or(ChipObservation {
                    frame_index: *idx,
                    ..ChipObservation::default()
                })
            })
            .collect()
    }

    fn finish(mut self, config: &AssimilatorConfig) -> HandRecord {
        let rules = &config.rules;
        let first_card = self
            .seats
            .values()
            .filter_map(SeatTracker::first_admission)
            .chain(self.dealer.first_admission())
            .min()
            .unwrap_or(self.last_frame + 1);
        let window_end = first_card.max(self.start_frame + 1);
        let expected = (window_end - self.start_frame) as usize;

        let seq = sequence_dealer_cards(&self.dealer.appearances());
        self.flags.extend(seq.flags.iter().cloned());
        let upcard = seq.upcard.flatten();
        let hole = seq.hole_card.flatten();
        if seq.upcard.is_none() || seq.hole_card.is_none() {
            self.flags.push(ReviewFlag::MissingDealer);
        }
        for c in seq
            .upcard
            .iter()
            .chain(seq.hole_card.iter())
            .chain(seq.draws.iter().map(|d| d as &Option<Card>))
        {
            if c.is_none() {
                let f = ReviewFlag::UnknownCard {
                    location: Location::Dealer,
                };
                if !self.flags.contains(&f) {
                    self.flags.push(f);
                }
            }
        }
        let dealer_natural_peeked =
            rules.dealer_peeks && matches!((upcard, hole), (Some(u), Some(h)) if is_natural(&[u, h], false));

        let mut seat_ids: BTreeSet<u8> = self.seats.keys().copied().collect();
        seat_ids.extend(self.camera_seats.values().flatten().copied());
        let mut seats = Vec::new();
        let mut playable = true;
        for seat in seat_ids {
            let bet_frames = self.seat_chips(seat, self.start_frame, window_end);
            let vote = vote_main_bet(&bet_frames, &config.chips, expected, config.bet_quorum)
                .unwrap_or_else(|| vote_main_bet_forced(&bet_frames, &config.chips, expected, config.bet_quorum));
            if !vote.amount.is_positive() {
                continue;
            }
            if vote.low_confidence {
                self.flags.push(ReviewFlag::LowConfidenceBet { seat });
            }
            let (cards, last_change) = match self.seats.get(&seat) {
                Some(t) => {
                    self.flags.extend(t.flags.iter().cloned());
                    (t.result(), t.last_admission().unwrap_or(window_end))
                }
                None => (Vec::new(), window_end),
            };
            let end_frames = self.seat_chips(seat, last_change, self.last_frame + 1);
            let colours = vote.chips.len().max(1) as u32;
            let stacks = mode_by(end_frames.iter().map(|f| (f.stacks.len() as u32, 0.0))).unwrap_or(colours);
            let evidence = SeatEvidence {
                bet_groups: (stacks + colours / 2) / colours,
                hands: cards,
            };
            let play = infer_play(rules, &evidence, dealer_natural_peeked);
            if play.marker_conflict {
                self.flags.push(ReviewFlag::MarkerConflict { seat });
            }
            if evidence.hands.is_empty() || evidence.hands.iter().any(|h| h.len() < if play.split { 1 } else { 2 }) {
                self.flags.push(ReviewFlag::TrackingInconsistency {
                    location: Location::Player(seat),
                });
                playable = false;
            }
            let mut hands = Vec::new();
            for (i, h) in evidence.hands.iter().enumerate() {
                if h.iter().any(|c| c.card.is_none()) {
                    self.flags.push(ReviewFlag::UnknownCard {
                        location: Location::Player(seat),
                    });
                }
                hands.push(PlayedHand {
                    cards: h.iter().map(|c| c.card).collect(),
                    decisions: play.decisions[i].clone(),
                    doubled: play.doubled[i],
                    outcome: None,
                    net: None,
                });
            }
            seats.push(SeatRecord {
                seat,
                player_id: self
                    .players
                    .get(&seat)
                    .cloned()
                    .unwrap_or_else(|| format!("seat-{}", seat)),
                initial_bet: vote.amount,
                chips: vote.chips,
                side_bet_present: vote.side_bet,
                split: play.split,
                hands,
                net: None,
            });
        }

        let mut record = HandRecord {
            hand_id: self.hand_id,
            session: self.session,
            shoe: self.shoe,
            seats,
            dealer: DealerRecord {
                upcard,
                hole_card: hole,
                draws: seq.draws,
            },
            complete: false,
            flags: Vec::new(),
        };
        if playable && !self.flags.contains(&ReviewFlag::MissingDealer) {
            record.settle(rules);
        }
        self.flags.sort();
        self.flags.dedup();
        record.flags = self.flags;
        record
    }
}

/// Streaming assimilator for one table.
#[derive(Debug, Clone)]
pub struct Assimilator {
    config: AssimilatorConfig,
    buffer: ReorderBuffer,
    current: Option<HandBuilder>,
    done: Vec<HandRecord>,
    last_hand_id: Option<u64>,
    stats: AssimilatorStats,
}

impl Assimilator {
    pub fn new(config: AssimilatorConfig) -> Self {
        Assimilator {
            buffer: ReorderBuffer::new(config.max_lag),
            config,
            current: None,
            done: Vec::new(),
            last_hand_id: None,
            stats: AssimilatorStats::default(),
        }
    }

    pub fn config(&self) -> &AssimilatorConfig {
        &self.config
    }

    /// Feed one item in arrival order.
    pub fn push(&mut self, item: StreamItem) {
        let mut ready = Vec::new();
        self.buffer.push(item, &mut ready);
        for item in ready {
            self.process(item);
        }
    }

    /// Hands completed so far.
    pub fn drain(&mut self) -> Vec<HandRecord> {
        core::mem::take(&mut self.done)
    }

    /// End of stream: flush the buffer and close any open hand.
    pub fn finish(mut self) -> (Vec<HandRecord>, AssimilatorStats) {
        let mut ready = Vec::new();
        self.buffer.flush(&mut ready);
        for item in ready {
            self.process(item);
        }
        if let Some(open) = self.current.take() {
            self.close(open, true);
        }
        self.stats.reorder = self.buffer.stats();
        (self.done, self.stats)
    }

    pub fn stats(&self) -> AssimilatorStats {
        AssimilatorStats {
            reorder: self.buffer.stats(),
            ..self.stats
        }
    }

    fn close(&mut self, mut hand: HandBuilder, timed_out: bool) {
        if timed_out {
            hand.flags.push(ReviewFlag::BoundaryTimeout);
            self.stats.timeouts += 1;
        }
        self.last_hand_id = Some(hand.hand_id);
        self.stats.hands += 1;
        self.done.push(hand.finish(&self.config));
    }

    fn process(&mut self, item: StreamItem) {
        match item {
            StreamItem::Control(ControlEvent::HandStart {
                hand_id,
                frame_index,
                players,
                session,
                shoe,
            }) => {
                if let Some(open) = self.current.take() {
                    self.close(open, true);
                }
                let mut b = HandBuilder::new(&self.config, hand_id, frame_index);
                b.players = players;
                b.session = session.unwrap_or_default();
                b.shoe = shoe.unwrap_or(0);
                self.current = Some(b);
            }
            StreamItem::Control(ControlEvent::HandEnd { frame_index, .. }) => {
                if let Some(mut open) = self.current.take() {
                    open.last_frame = open.last_frame.max(frame_index);
                    self.close(open, false);
                }
            }
            StreamItem::Frame(frame) => self.frame(frame),
        }
    }

    fn frame(&mut self, frame: DetectionFrame) {
        let empty = frame.objects.is_empty();
        if self.current.is_none() {
            if empty {
                return;
            }
            let id = self.last_hand_id.map_or(1, |h| h + 1);
            self.current = Some(HandBuilder::new(&self.config, id, frame.frame_index));
        }
        let config = &self.config;
        let hand = self.current.as_mut().expect("open hand");
        hand.last_frame = hand.last_frame.max(frame.frame_index);
        match frame.viewpoint {
            Viewpoint::Chipboard => hand.chipboard_frame(&frame, &mut self.stats),
            Viewpoint::Overhead => hand.overhead_frame(config, &frame, &mut self.stats),
        }
        if !empty {
            hand.empty_run = 0;
            hand.active = true;
        } else if frame.viewpoint == Viewpoint::Overhead {
            hand.empty_run += 1;
            if hand.active && hand.empty_run >= config.empty_timeout {
                let open = self.current.take().expect("open hand");
                self.close(open, true);
            }
        }
    }
}

/// Assimilate a complete stream given in arrival order.
pub fn assimilate(
    items: impl IntoIterator<Item = StreamItem>,
    config: &AssimilatorConfig,
) -> (Vec<HandRecord>, AssimilatorStats) {
    let mut a = Assimilator::new(config.clone());
    for item in items {
        a.push(item);
    }
    a.finish()
}

/// Money helper for tests and reports: net of a record's seats.
pub fn table_net(record: &HandRecord) -> Option<Money> {
    record.seats.iter().map(|s| s.net).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn card(rank: u8, horizontal: bool) -> TrackedCard {
        TrackedCard {
            card: Some(Card::of(rank)),
            horizontal,
        }
    }

    fn evidence(hands: &[&[(u8, bool)]], groups: u32) -> SeatEvidence {
        SeatEvidence {
            hands: hands
                .iter()
                .map(|h| h.iter().map(|&(r, o)| card(r, o)).collect())
                .collect(),
            bet_groups: groups,
        }
    }

    #[test]
    fn markers() {
        let rules = RuleConfig::default();
        let hit = evidence(&[&[(5, false), (6, false), (2, false)]], 1);
        assert_eq!(infer_decision(&rules, &hit, false), Some(Action::Hit));
        let dbl = evidence(&[&[(5, false), (6, false), (9, true)]], 2);
        assert_eq!(infer_decision(&rules, &dbl, false), Some(Action::DoubleDown));
        let split = evidence(&[&[(8, false), (3, false)], &[(8, false), (10, false)]], 2);
        let play = infer_play(&rules, &split, false);
        assert_eq!(infer_decision(&rules, &split, false), Some(Action::Split));
        assert_eq!(play.decisions, [alloc::vec![Action::Stand], alloc::vec![Action::Stand]]);
        let stand = evidence(&[&[(10, false), (8, false)]], 1);
        assert_eq!(infer_decision(&rules, &stand, false), Some(Action::Stand));
    }

    #[test]
    fn horizontal_card_without_second_stack_is_a_hit() {
        let rules = RuleConfig::default();
        let ev = evidence(&[&[(5, false), (6, false), (9, true)]], 1);
        let play = infer_play(&rules, &ev, false);
        assert_eq!(play.decisions[0], [Action::Hit, Action::Stand]);
        assert!(play.marker_conflict);
        assert!(!play.doubled[0]);
    }

    #[test]
    fn no_decisions_on_naturals() {
        let rules = RuleConfig::default();
        let bj = evidence(&[&[(1, false), (13, false)]], 1);
        assert_eq!(infer_decision(&rules, &bj, false), None);
        let peek = evidence(&[&[(10, false), (6, false)]], 1);
        assert_eq!(infer_decision(&rules, &peek, true), None);
        let twenty_one = evidence(&[&[(5, false), (6, false), (10, false)]], 1);
        assert_eq!(infer_play(&rules, &twenty_one, false).decisions[0], [Action::Hit]);
    }
}
