//! Card tracking from overhead frames: player fans, dealer row.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::frames::Orientation;
use super::voting::mode_by;
use crate::card::{Card, Rank};
use crate::record::{Location, ReviewFlag};

/// One card as seen in one overhead frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CardSighting {
    pub x: f64,
    pub rank: Option<u8>,
    pub orientation: Orientation,
    pub conf: f64,
}

#[derive(Debug, Clone, Default)]
struct Slot {
    ranks: Vec<(u8, f64)>,
    orientations: Vec<(Orientation, f64)>,
}

impl Slot {
    fn see(&mut self, s: &CardSighting) {
        if let Some(r) = s.rank {
            self.ranks.push((r, s.conf));
        }
        self.orientations.push((s.orientation, s.conf));
    }

    fn result(&self) -> TrackedCard {
        TrackedCard {
            card: mode_by(self.ranks.iter().copied())
                .and_then(|r| Rank::new(r).ok())
                .map(Card::new),
            horizontal: mode_by(self.orientations.iter().copied()) == Some(Orientation::Horizontal),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackedCard {
    /// `None` if no frame gave a readable rank.
    pub card: Option<Card>,
    pub horizontal: bool,
}

/// Group sightings (sorted by x) into sub-hands split at gaps wider than
/// `gap`.
pub fn cluster(sorted: &[CardSighting], gap: f64) -> Vec<Vec<CardSighting>> {
    let mut out: Vec<Vec<CardSighting>> = Vec::new();
    for s in sorted {
        match out.last_mut() {
            Some(group) if s.x - group.last().map_or(s.x, |l| l.x) <= gap => group.push(*s),
            _ => out.push(alloc::vec![*s]),
        }
    }
    out
}

fn sorted(sightings: &[CardSighting]) -> Vec<CardSighting> {
    let mut v = sightings.to_vec();
    v.sort_by(|a, b| a.x.total_cmp(&b.x));
    v
}

/// Tracks one seat's cards through layout changes. A new layout (sub-hand
/// sizes) is adopted only after it holds for `stability` consecutive
/// received frames.
/// Proposed layout: cards per hand, frames seen, first frame, and the
/// sightings stashed while it waits to be adopted.
type Candidate = (Vec<usize>, u32, u64, Vec<Vec<Vec<CardSighting>>>);

#[derive(Debug, Clone)]
pub struct SeatTracker {
    seat: u8,
    stability: u32,
    gap: f64,
    hands: Vec<Vec<Slot>>,
    candidate: Option<Candidate>,
    first_admission: Option<u64>,
    last_admission: Option<u64>,
    pub flags: Vec<ReviewFlag>,
}

impl SeatTracker {
    pub fn new(seat: u8, stability: u32, gap: f64) -> Self {
        SeatTracker {
            seat,
            stability: stability.max(1),
            gap,
            hands: Vec::new(),
            candidate: None,
            first_admission: None,
            last_admission: None,
            flags: Vec::new(),
        }
    }

    fn layout(&self) -> Vec<usize> {
        self.hands.iter().map(Vec::len).collect()
    }

    /// Frame index at which the first card showed up.
    pub fn first_admission(&self) -> Option<u64> {
        self.first_admission
    }

    pub fn last_admission(&self) -> Option<u64> {
        self.last_admission
    }

    pub fn observe(&mut self, frame_index: u64, sightings: &[CardSighting]) {
        let groups = cluster(&sorted(sightings), self.gap);
        let layout: Vec<usize> = groups.iter().map(Vec::len).collect();
        if layout == self.layout() {
            self.candidate = None;
            self.vote(&groups);
            return;
        }
        match &mut self.candidate {
            Some((l, n, _, stash)) if *l == layout => {
                *n += 1;
                stash.push(groups);
            }
            _ => self.candidate = Some((layout, 1, frame_index, alloc::vec![groups])),
        }
        if self.candidate.as_ref().is_some_and(|c| c.1 >= self.stability) {
            let (layout, _, since, stash) = self.candidate.take().expect("candidate present");
            if self.transition(&layout) {
                self.first_admission.get_or_insert(since);
                self.last_admission = Some(since);
                for g in &stash {
                    self.vote(g);
                }
            }
        }
    }

    fn vote(&mut self, groups: &[Vec<CardSighting>]) {
        for (hand, group) in self.hands.iter_mut().zip(groups) {
            for (slot, s) in hand.iter_mut().zip(group) {
                slot.see(s);
            }
        }
    }

    /// Apply a stable layout change. Returns false for changes no legal deal
    /// explains, which are flagged and ignored.
    fn transition(&mut self, new: &[usize]) -> bool {
        let old = self.layout();
        if new.is_empty() {
            // Cards swept at the end of the hand.
            return false;
        }
        let grows = |a: &[usize], b: &[usize]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| y >= x);
        if old.len() <= 1 && new.len() == 1 && new[0] >= old.first().copied().unwrap_or(0) {
            if self.hands.is_empty() {
                self.hands.push(Vec::new());
            }
            self.hands[0].resize_with(new[0], Slot::default);
            return true;
        }
        if old == [2] && new.len() == 2 && new[0] >= 1 && new[1] >= 1 {
            let second = self.hands[0].pop().expect("two cards");
            self.hands.push(alloc::vec![second]);
            for (hand, &n) in self.hands.iter_mut().zip(new) {
                hand.resize_with(n, Slot::default);
            }
            return true;
        }
        if grows(&old, new) {
            for (hand, &n) in self.hands.iter_mut().zip(new) {
                hand.resize_with(n, Slot::default);
            }
            return true;
        }
        let flag = ReviewFlag::TrackingInconsistency {
            location: Location::Player(self.seat),
        };
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
        false
    }

    /// Voted cards per sub-hand, left to right.
    pub fn result(&self) -> Vec<Vec<TrackedCard>> {
        self.hands
            .iter()
            .map(|h| h.iter().map(Slot::result).collect())
            .collect()
    }
}

#[derive(Debug, Clone)]
struct DealerSlot {
    x: f64,
    admitted_at: u64,
    slot: Slot,
}

#[derive(Debug, Clone)]
struct DealerCandidate {
    x: f64,
    seen: u32,
    since: u64,
    slot: Slot,
}

/// Tracks dealer cards by position. A card at a new position must persist
/// for `stability` consecutive received frames to be admitted.
#[derive(Debug, Clone)]
pub struct DealerTracker {
    stability: u32,
    tolerance: f64,
    cards: Vec<DealerSlot>,
    candidates: Vec<DealerCandidate>,
}

impl DealerTracker {
    pub fn new(stability: u32, tolerance: f64) -> Self {
        DealerTracker {
            stability: stability.max(1),
            tolerance,
            cards: Vec::new(),
            candidates: Vec::new(),
        }
    }

    pub fn first_admission(&self) -> Option<u64> {
        self.cards.iter().map(|c| c.admitted_at).min()
    }

    pub fn observe(&mut self, frame_index: u64, sightings: &[CardSighting]) {
        let mut next: Vec<DealerCandidate> = Vec::new();
        for s in sorted(sightings) {
            if let Some(card) = self.cards.iter_mut().find(|c| (c.x - s.x).abs() <= self.tolerance) {
                card.slot.see(&s);
                continue;
            }
            if next.iter().any(|c| (c.x - s.x).abs() <= self.tolerance) {
                continue;
            }
            let mut cand = match self.candidates.iter().position(|c| (c.x - s.x).abs() <= self.tolerance) {
                Some(i) => {
                    let mut c = self.candidates.swap_remove(i);
                    c.seen += 1;
                    c
                }
                None => DealerCandidate {
                    x: s.x,
                    seen: 1,
                    since: frame_index,
                    slot: Slot::default(),
                },
            };
            cand.slot.see(&s);
            next.push(cand);
        }
        // Candidates missing from this frame start over.
        self.candidates.clear();
        for c in next {
            if c.seen >= self.stability {
                self.cards.push(DealerSlot {
                    x: c.x,
                    admitted_at: c.since,
                    slot: c.slot,
                });
            } else {
                self.candidates.push(c);
            }
        }
    }

    /// Admitted cards as `(x, card)` in order of appearance; cards admitted
    /// together are ordered left to right.
    pub fn appearances(&self) -> Vec<(f64, Option<Card>)> {
        let mut v: Vec<&DealerSlot> = self.cards.iter().collect();
        v.sort_by(|a, b| a.admitted_at.cmp(&b.admitted_at).then(a.x.total_cmp(&b.x)));
        v.into_iter().map(|c| (c.x, c.slot.result().card)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DealerSequence {
    pub upcard: Option<Option<Card>>,
    pub hole_card: Option<Option<Card>>,
    pub draws: Vec<Option<Card>>,
    pub flags: Vec<ReviewFlag>,
}

/// Order dealer cards from their positions and appearance order: the first
/// card is the upcard, the card to its left the hole card, and later cards
/// to the right are draws in time order. Draw gaps, measured from the
/// upcard, must shrink left to right.
pub fn sequence_dealer_cards(appearances: &[(f64, Option<Card>)]) -> DealerSequence {
    let mut seq = DealerSequence {
        upcard: None,
        hole_card: None,
        draws: Vec::new(),
        flags: Vec::new(),
    };
    let Some(&(up_x, up)) = appearances.first() else {
        return seq;
    };
    seq.upcard = Some(up);
    let mut prev_x = up_x;
    let mut prev_gap = f64::INFINITY;
    let mut spatial_ok = true;
    for &(x, card) in &appearances[1..] {
        if x < up_x {
            if seq.hole_card.is_none() {
                seq.hole_card = Some(card);
                continue;
            }
            if !seq.flags.contains(&ReviewFlag::DealerInconsistent) {
                seq.flags.push(ReviewFlag::DealerInconsistent);
            }
            seq.draws.push(card);
            continue;
        }
        let gap = x - prev_x;
        if gap <= 0.0 || gap >= prev_gap {
            spatial_ok = false;
        }
        prev_gap = gap;
        prev_x = x;
        seq.draws.push(card);
    }
    if !spatial_ok {
        seq.flags.push(ReviewFlag::DealerSpatial);
    }
    seq
}
