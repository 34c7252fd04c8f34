//! Renders ground-truth hands into detection streams, with optional noise.
//!
//! Geometry is a fixed schematic table: seat anchors along the bottom, the
//! dealer row along the top, cards 60x90 px (90x60 when turned for a
//! double). Timing follows the real dealing order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assimilator::{BetArea, ControlEvent, DetectedObject, DetectionFrame, Orientation, StreamItem, Viewpoint};
use crate::card::Card;
use crate::chips::ChipColor;
use crate::error::{Error, Result};
use crate::record::{HandRecord, Location, SeatRecord};
use crate::rules::{is_natural, RuleConfig};
use crate::strategy::Action;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseProfile {
    /// Chance each camera frame is lost.
    pub frame_drop_rate: f64,
    /// Arrival delay is uniform in `[0, reorder_window)` frames.
    pub reorder_window: u64,
    /// Chance a card sighting reports a wrong rank.
    pub rank_confusion_rate: f64,
    /// Chance a chip stack count is off by one.
    pub chip_count_jitter_rate: f64,
    pub orientation_flip_rate: f64,
    /// Chance an overhead frame shows a card that is not there.
    pub phantom_rate: f64,
    pub seed: u64,
}

impl Default for NoiseProfile {
    fn default() -> Self {
        NoiseProfile::NONE
    }
}

impl NoiseProfile {
    pub const NONE: NoiseProfile = NoiseProfile {
        frame_drop_rate: 0.0,
        reorder_window: 0,
        rank_confusion_rate: 0.0,
        chip_count_jitter_rate: 0.0,
        orientation_flip_rate: 0.0,
        phantom_rate: 0.0,
        seed: 0,
    };

    pub fn validate(&self) -> Result<()> {
        let rates = [
            self.frame_drop_rate,
            self.rank_confusion_rate,
            self.chip_count_jitter_rate,
            self.orientation_flip_rate,
            self.phantom_rate,
        ];
        if rates.iter().all(|r| (0.0..1.0).contains(r)) {
            Ok(())
        } else {
            Err(Error::Config("noise rates must lie in [0, 1)"))
        }
    }

    pub fn is_silent(&self) -> bool {
        *self
            == NoiseProfile {
                seed: self.seed,
                ..NoiseProfile::NONE
            }
    }
}

/// Phase lengths in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Timing {
    pub fps: u32,
    pub betting: f64,
    pub deal_step: f64,
    pub think: f64,
    pub reveal: f64,
    pub settle: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            fps: 10,
            betting: 2.0,
            deal_step: 0.5,
            think: 1.5,
            reveal: 1.0,
            settle: 2.0,
        }
    }
}

impl Timing {
    fn frames(&self, secs: f64) -> u64 {
        (libm::round(secs * self.fps as f64) as u64).max(1)
    }
}

pub const CARD_W: f64 = 60.0;
pub const CARD_H: f64 = 90.0;
const SEAT_Y: f64 = 800.0;
const CHIP_Y: f64 = 700.0;
const DEALER_Y: f64 = 100.0;
const UPCARD_X: f64 = 500.0;
const HOLE_X: f64 = 430.0;
const FIRST_DRAW_GAP: f64 = 80.0;
const DRAW_SHRINK: f64 = 0.85;
const SPLIT_OFFSET: f64 = 250.0;

pub fn seat_anchor(seat: u8) -> f64 {
    200.0 + (seat as f64 - 1.0) * 600.0
}

/// Chipboard camera covering a seat: 1 for seats 1-4, 2 for 5-7.
pub fn camera_for(seat: u8) -> u32 {
    if seat <= 4 {
        1
    } else {
        2
    }
}

/// Dealer card x positions: upcard, hole, then draws with shrinking gaps.
pub fn dealer_positions(draws: usize) -> Vec<f64> {
    let mut xs = alloc::vec![UPCARD_X, HOLE_X];
    let mut x = UPCARD_X;
    for k in 0..draws {
        x += FIRST_DRAW_GAP * libm::pow(DRAW_SHRINK, k as f64);
        xs.push(x);
    }
    xs
}

#[derive(Debug, Clone)]
struct SeatView {
    seat: u8,
    chips: Vec<(ChipColor, u32)>,
    groups: u32,
    side_bet: bool,
    /// Cards per sub-hand, with horizontal marker.
    hands: Vec<Vec<(Card, bool)>>,
}

#[derive(Debug, Clone, Default)]
struct TableView {
    seats: Vec<SeatView>,
    dealer: Vec<(f64, Card)>,
}

impl TableView {
    fn seat(&mut self, seat: u8) -> &mut SeatView {
        self.seats.iter_mut().find(|s| s.seat == seat).expect("seat in view")
    }

    fn chipboard(&self, camera: u32) -> Vec<DetectedObject> {
        let mut out = Vec::new();
        for s in self.seats.iter().filter(|s| camera_for(s.seat) == camera) {
            let base = seat_anchor(s.seat);
            let mut i = 0.0;
            for _ in 0..s.groups {
                for &(color, count) in &s.chips {
                    out.push(DetectedObject::chips(
                        color,
                        count,
                        BetArea::Main,
                        s.seat,
                        [base + 45.0 * i, CHIP_Y, 40.0, 40.0],
                        0.95,
                    ));
                    i += 1.0;
                }
            }
            if s.side_bet {
                out.push(DetectedObject::chips(
                    ChipColor::Red,
                    1,
                    BetArea::Side,
                    s.seat,
                    [base - 60.0, CHIP_Y, 40.0, 40.0],
                    0.95,
                ));
            }
        }
        out
    }

    fn overhead(&self) -> Vec<DetectedObject> {
        let mut out = Vec::new();
        for s in &self.seats {
            for (h, hand) in s.hands.iter().enumerate() {
                let x0 = seat_anchor(s.seat) + h as f64 * SPLIT_OFFSET;
                for (k, &(card, horizontal)) in hand.iter().enumerate() {
                    let (orientation, w, hgt) = if horizontal {
                        (Orientation::Horizontal, CARD_H, CARD_W)
                    } else {
                        (Orientation::Vertical, CARD_W, CARD_H)
                    };
                    let bbox = [x0 + 20.0 * k as f64, SEAT_Y + 15.0 * k as f64, w, hgt];
                    out.push(DetectedObject::card(
                        Some(card.rank.get()),
                        orientation,
                        Location::Player(s.seat),
                        bbox,
                        0.95,
                    ));
                }
            }
        }
        for &(x, card) in &self.dealer {
            out.push(DetectedObject::card(
                Some(card.rank.get()),
                Orientation::Vertical,
                Location::Dealer,
                [x, DEALER_Y, CARD_W, CARD_H],
                0.95,
            ));
        }
        out
    }
}

fn known(c: &Option<Card>) -> Result<Card> {
    c.ok_or(Error::Unclassifiable("rendered hands need every card"))
}

struct Renderer<'a> {
    timing: &'a Timing,
    cameras: Vec<u32>,
    frame: u64,
    view: TableView,
    /// (frame index, viewpoint camera, objects)
    frames: Vec<DetectionFrame>,
}

impl Renderer<'_> {
    fn hold(&mut self, frames: u64) {
        for _ in 0..frames {
            let ts = self.frame as f64 / self.timing.fps as f64;
            for &cam in &self.cameras {
                self.frames.push(DetectionFrame {
                    frame_index: self.frame,
                    ts,
                    viewpoint: Viewpoint::Chipboard,
                    camera_id: Some(cam),
                    objects: self.view.chipboard(cam),
                });
            }
            self.frames.push(DetectionFrame {
                frame_index: self.frame,
                ts,
                viewpoint: Viewpoint::Overhead,
                camera_id: None,
                objects: self.view.overhead(),
            });
            self.frame += 1;
        }
    }
}

/// Noise-free frames for one hand starting at `start_frame`, plus the
/// index one past its hand end event.
fn render_frames(
    hand: &HandRecord,
    rules: &RuleConfig,
    timing: &Timing,
    start_frame: u64,
) -> Result<(ControlEvent, Vec<DetectionFrame>, ControlEvent)> {
    let mut cameras: Vec<u32> = hand.seats.iter().map(|s| camera_for(s.seat)).collect();
    cameras.sort();
    cameras.dedup();
    let mut r = Renderer {
        timing,
        cameras,
        frame: start_frame,
        view: TableView::default(),
        frames: Vec::new(),
    };
    for s in &hand.seats {
        r.view.seats.push(SeatView {
            seat: s.seat,
            chips: s.chips.iter().map(|(&c, &n)| (c, n)).collect(),
            groups: 1,
            side_bet: s.side_bet_present,
            hands: Vec::new(),
        });
    }
    let start = ControlEvent::HandStart {
        hand_id: hand.hand_id,
        frame_index: start_frame,
        players: hand
            .seats
            .iter()
            .map(|s| (s.seat, s.player_id.clone()))
            .collect::<BTreeMap<_, _>>(),
        session: (!hand.session.is_empty()).then(|| hand.session.clone()),
        shoe: Some(hand.shoe),
    };
    let step = timing.frames(timing.deal_step);
    let think = timing.frames(timing.think);
    let reveal = timing.frames(timing.reveal);
    r.hold(timing.frames(timing.betting));

    let firsts: Vec<[Card; 2]> = hand
        .seats
        .iter()
        .map(|s| {
            s.initial_cards()
                .ok_or(Error::Unclassifiable("seat without two dealt cards"))
        })
        .collect::<Result<_>>()?;
    for (s, cards) in hand.seats.iter().zip(&firsts) {
        r.view.seat(s.seat).hands.push(alloc::vec![(cards[0], false)]);
        r.hold(step);
    }
    let upcard = known(&hand.dealer.upcard)?;
    let hole = known(&hand.dealer.hole_card)?;
    let xs = dealer_positions(hand.dealer.draws.len());
    r.view.dealer.push((xs[0], upcard));
    r.hold(step);
    for (s, cards) in hand.seats.iter().zip(&firsts) {
        r.view.seat(s.seat).hands[0].push((cards[1], false));
        r.hold(step);
    }
    let peeked = rules.dealer_peeks && is_natural(&[upcard, hole], false);
    let mut hole_shown = false;
    if peeked {
        r.view.dealer.push((xs[1], hole));
        hole_shown = true;
        r.hold(reveal);
    }
    for s in &hand.seats {
        play_seat(&mut r, s, think, step)?;
    }
    if !hole_shown {
        r.view.dealer.push((xs[1], hole));
        r.hold(reveal);
    }
    for (k, d) in hand.dealer.draws.iter().enumerate() {
        r.view.dealer.push((xs[2 + k], known(d)?));
        r.hold(reveal);
    }
    r.hold(timing.frames(timing.settle));
    let end = ControlEvent::HandEnd {
        hand_id: hand.hand_id,
        frame_index: r.frame,
    };
    Ok((start, r.frames, end))
}

fn play_seat(r: &mut Renderer<'_>, s: &SeatRecord, think: u64, step: u64) -> Result<()> {
    let seat = s.seat;
    if s.split {
        r.view.seat(seat).groups += 1;
        r.hold(think);
        let moved = r.view.seat(seat).hands[0].pop().expect("two cards");
        r.view.seat(seat).hands.push(alloc::vec![moved]);
        r.hold(step);
        for (h, played) in s.hands.iter().enumerate() {
            let second = known(
                played
                    .cards
                    .get(1)
                    .ok_or(Error::Unclassifiable("split hand without a second card"))?,
            )?;
            r.view.seat(seat).hands[h].push((second, false));
            r.hold(step);
            play_hand(r, seat, h, &played.cards[2..], &played.decisions, think)?;
        }
    } else if let Some(played) = s.hands.first() {
        play_hand(r, seat, 0, &played.cards[2..], &played.decisions, think)?;
    }
    Ok(())
}

fn play_hand(
    r: &mut Renderer<'_>,
    seat: u8,
    h: usize,
    extra: &[Option<Card>],
    decisions: &[Action],
    think: u64,
) -> Result<()> {
    let mut cards = extra.iter();
    for &d in decisions {
        if d == Action::DoubleDown {
            r.view.seat(seat).groups += 1;
        }
        r.hold(think);
        match d {
            Action::Hit | Action::DoubleDown => {
                let card = known(cards.next().ok_or(Error::Unclassifiable("decision without a card"))?)?;
                r.view.seat(seat).hands[h].push((card, d == Action::DoubleDown));
            }
            Action::Stand | Action::Split => {}
        }
    }
    Ok(())
}

/// One rendered item with its arrival time in frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrival {
    pub at: f64,
    pub item: StreamItem,
}

fn confuse(rank: u8, rng: &mut ChaCha8Rng) -> u8 {
    let other = rng.random_range(1..13u8);
    if other >= rank {
        other + 1
    } else {
        other
    }
}

fn apply_noise(frame: &mut DetectionFrame, noise: &NoiseProfile, occupied: &[u8], rng: &mut ChaCha8Rng) {
    for obj in &mut frame.objects {
        if let Some(rank) = obj.rank {
            if noise.rank_confusion_rate > 0.0 && rng.random_bool(noise.rank_confusion_rate) {
                obj.rank = Some(confuse(rank, rng));
            }
        }
        if let Some(o) = obj.orientation {
            if noise.orientation_flip_rate > 0.0 && rng.random_bool(noise.orientation_flip_rate) {
                obj.orientation = Some(match o {
                    Orientation::Horizontal => Orientation::Vertical,
                    Orientation::Vertical => Orientation::Horizontal,
                });
            }
        }
        if let Some(n) = obj.count {
            if noise.chip_count_jitter_rate > 0.0 && rng.random_bool(noise.chip_count_jitter_rate) {
                obj.count = Some(if n > 1 && rng.random_bool(0.5) { n - 1 } else { n + 1 });
            }
        }
    }
    if frame.viewpoint == Viewpoint::Overhead && noise.phantom_rate > 0.0 && rng.random_bool(noise.phantom_rate) {
        let pick = rng.random_range(0..=occupied.len());
        let rank = rng.random_range(1..=13u8);
        let (location, x, y) = match occupied.get(pick) {
            Some(&seat) => (
                Location::Player(seat),
                seat_anchor(seat) + 20.0 * rng.random_range(0..6) as f64,
                SEAT_Y,
            ),
            None => (Location::Dealer, UPCARD_X + rng.random_range(-150.0..300.0), DEALER_Y),
        };
        frame.objects.push(DetectedObject::card(
            Some(rank),
            Orientation::Vertical,
            location,
            [x, y, CARD_W, CARD_H],
            0.6,
        ));
    }
}

/// Render one hand from `start_frame`. Returns the noisy items with arrival
/// times and the first free frame index after the hand. The noise stream is
/// keyed by the profile seed and the hand id, so hands can be rendered
/// independently.
pub fn render_stream(
    hand: &HandRecord,
    rules: &RuleConfig,
    timing: &Timing,
    noise: &NoiseProfile,
    start_frame: u64,
) -> Result<(Vec<Arrival>, u64)> {
    noise.validate()?;
    let (start, frames, end) = render_frames(hand, rules, timing, start_frame)?;
    let next = end.frame_index() + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(hand.hand_id);
    let occupied: Vec<u8> = hand.seats.iter().map(|s| s.seat).collect();
    let window = noise.reorder_window as f64;
    let delay = |rng: &mut ChaCha8Rng| {
        if window > 0.0 {
            rng.random_range(0.0..window)
        } else {
            0.0
        }
    };
    let mut out = Vec::with_capacity(frames.len() + 2);
    let at = start.frame_index() as f64 + delay(&mut rng);
    out.push(Arrival {
        at,
        item: StreamItem::Control(start),
    });
    for mut f in frames {
        if noise.frame_drop_rate > 0.0 && rng.random_bool(noise.frame_drop_rate) {
            continue;
        }
        apply_noise(&mut f, noise, &occupied, &mut rng);
        out.push(Arrival {
            at: f.frame_index as f64 + delay(&mut rng),
            item: StreamItem::Frame(f),
        });
    }
    out.push(Arrival {
        at: end.frame_index() as f64 + delay(&mut rng),
        item: StreamItem::Control(end),
    });
    Ok((out, next))
}

/// Render consecutive hands into one stream in arrival order.
pub fn render_session(
    hands: &[HandRecord],
    rules: &RuleConfig,
    timing: &Timing,
    noise: &NoiseProfile,
) -> Result<Vec<StreamItem>> {
    let mut all = Vec::new();
    let mut frame = 0;
    for hand in hands {
        let (items, next) = render_stream(hand, rules, timing, noise, frame)?;
        all.extend(items);
        frame = next;
    }
    Ok(order_arrivals(all))
}

/// Sort by arrival time; equal times keep their render order.
pub fn order_arrivals(mut items: Vec<Arrival>) -> Vec<StreamItem> {
    items.sort_by(|a, b| a.at.total_cmp(&b.at));
    items.into_iter().map(|a| a.item).collect()
}

/// Frames each hand occupies, without rendering noise. Lets callers assign
/// start frames before rendering hands in parallel.
pub fn hand_span(hand: &HandRecord, rules: &RuleConfig, timing: &Timing) -> Result<u64> {
    let (start, _, end) = render_frames(hand, rules, timing, 0)?;
    Ok(end.frame_index() + 1 - start.frame_index())
}

/// Stamp ground truth with the string form used by the sidecar file.
pub fn truth_id(hand: &HandRecord) -> String {
    alloc::format!("{}:{}", hand.session, hand.hand_id)
}
