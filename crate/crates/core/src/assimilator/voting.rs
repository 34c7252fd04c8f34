//! Majority votes over frames.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::chips::{ChipColor, ChipValueMap};
use crate::money::Money;

/// Most frequent value. Ties go to the larger summed confidence, then to
/// the smaller value.
pub fn mode_by<T: Ord + Copy>(votes: impl IntoIterator<Item = (T, f64)>) -> Option<T> {
    let mut tally: BTreeMap<T, (usize, f64)> = BTreeMap::new();
    for (v, conf) in votes {
        let e = tally.entry(v).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += conf;
    }
    let mut best: Option<(T, usize, f64)> = None;
    // Ascending iteration plus strict comparisons keeps the smaller value on
    // a full tie.
    for (v, (n, conf)) in tally {
        match best {
            Some((_, bn, bc)) if n < bn || (n == bn && conf <= bc) => {}
            _ => best = Some((v, n, conf)),
        }
    }
    best.map(|b| b.0)
}

/// One chipboard frame's view of a seat's bet.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChipObservation {
    pub frame_index: u64,
    /// Main-area stacks: colour, chip count, confidence.
    pub stacks: Vec<(ChipColor, u32, f64)>,
    pub side_bet: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetVote {
    pub amount: Money,
    pub chips: BTreeMap<ChipColor, u32>,
    pub side_bet: bool,
    pub received: usize,
    pub expected: usize,
    /// Voted on fewer frames than the quorum.
    pub low_confidence: bool,
}

pub const DEFAULT_QUORUM: f64 = 0.7;

/// Frames needed before a vote may be taken.
pub fn quorum_frames(expected: usize, quorum: f64) -> usize {
    libm::ceil(expected as f64 * quorum - 1e-9) as usize
}

/// Vote the main bet once at least `quorum` of the expected frames have
/// arrived; `None` until then.
pub fn vote_main_bet(
    frames: &[ChipObservation],
    values: &ChipValueMap,
    expected: usize,
    quorum: f64,
) -> Option<BetVote> {
    if frames.is_empty() || frames.len() < quorum_frames(expected, quorum) {
        return None;
    }
    Some(vote_main_bet_forced(frames, values, expected, quorum))
}

/// Vote over whatever arrived, marking the result low-confidence when the
/// quorum was not reached.
pub fn vote_main_bet_forced(
    frames: &[ChipObservation],
    values: &ChipValueMap,
    expected: usize,
    quorum: f64,
) -> BetVote {
    let mut colors: Vec<ChipColor> = frames.iter().flat_map(|f| f.stacks.iter().map(|s| s.0)).collect();
    colors.sort();
    colors.dedup();
    let mut chips = BTreeMap::new();
    for color in colors {
        let votes = frames.iter().map(|f| {
            f.stacks
                .iter()
                .filter(|s| s.0 == color)
                .fold((0u32, 0.0), |(n, c), s| (n + s.1, c + s.2))
        });
        if let Some(n) = mode_by(votes) {
            if n > 0 {
                chips.insert(color, n);
            }
        }
    }
    let side = frames.iter().filter(|f| f.side_bet).count();
    BetVote {
        amount: values.total(&chips),
        chips,
        side_bet: 2 * side > frames.len(),
        received: frames.len(),
        expected,
        low_confidence: frames.len() < quorum_frames(expected, quorum),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn red(n: u32, conf: f64, i: u64) -> ChipObservation {
        ChipObservation {
            frame_index: i,
            stacks: alloc::vec![(ChipColor::Red, n, conf)],
            side_bet: false,
        }
    }

    #[test]
    fn mode_of_frames() {
        let mut frames: Vec<_> = (0..9).map(|i| red(4, 0.9, i)).collect();
        frames.push(red(3, 0.9, 9));
        let v = vote_main_bet(&frames, &ChipValueMap::default(), 10, DEFAULT_QUORUM).unwrap();
        assert_eq!(v.amount, Money::from_dollars(20));
        assert_eq!(v.chips.get(&ChipColor::Red), Some(&4));
        assert!(!v.low_confidence);
    }

    #[test]
    fn waits_for_quorum() {
        let frames: Vec<_> = (0..6).map(|i| red(4, 0.9, i)).collect();
        assert!(vote_main_bet(&frames, &ChipValueMap::default(), 10, DEFAULT_QUORUM).is_none());
        assert!(vote_main_bet(&frames[..6], &ChipValueMap::default(), 8, DEFAULT_QUORUM).is_some());
        let forced = vote_main_bet_forced(&frames, &ChipValueMap::default(), 10, DEFAULT_QUORUM);
        assert!(forced.low_confidence);
        assert_eq!(forced.amount, Money::from_dollars(20));
    }

    #[test]
    fn ties() {
        let mut frames: Vec<_> = (0..5).map(|i| red(4, 0.8, i)).collect();
        frames.extend((5..10).map(|i| red(5, 0.9, i)));
        let v = vote_main_bet(&frames, &ChipValueMap::default(), 10, DEFAULT_QUORUM).unwrap();
        assert_eq!(v.chips[&ChipColor::Red], 5);
        let mut frames: Vec<_> = (0..5).map(|i| red(4, 0.9, i)).collect();
        frames.extend((5..10).map(|i| red(5, 0.9, i)));
        let v = vote_main_bet(&frames, &ChipValueMap::default(), 10, DEFAULT_QUORUM).unwrap();
        assert_eq!(v.chips[&ChipColor::Red], 4);
    }

    #[test]
    fn rank_mode() {
        assert_eq!(mode_by([(7u8, 0.9), (7, 0.9), (7, 0.9), (1, 0.99)]), Some(7));
        assert_eq!(mode_by::<u8>([]), None);
    }
}
