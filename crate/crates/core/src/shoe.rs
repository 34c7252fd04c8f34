//! Card sources: a seeded multi-deck shoe and a rank-count composition used
//! for conditioned sampling.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::card::{Card, Rank};
use crate::error::{Error, Result};

/// Anything cards can be dealt from.
pub trait CardSource {
    fn draw(&mut self) -> Result<Card>;
}

/// A dealing shoe. Cards are dealt without replacement from a seeded
/// shuffle; suits are not tracked.
#[derive(Debug, Clone)]
pub struct Shoe {
    deck_count: u8,
    cards: Vec<Card>,
    next: usize,
    rng: ChaCha8Rng,
}

impl Shoe {
    /// A freshly shuffled shoe of `deck_count` decks.
    pub fn new(deck_count: u8, seed: u64) -> Self {
        Self::with_rng(deck_count, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(deck_count: u8, rng: ChaCha8Rng) -> Self {
        let mut cards = Vec::with_capacity(52 * deck_count as usize);
        for rank in Rank::all() {
            for _ in 0..4 * deck_count as usize {
                cards.push(Card::new(rank));
            }
        }
        let mut shoe = Shoe {
            deck_count,
            cards,
            next: 0,
            rng,
        };
        shoe.reshuffle();
        shoe
    }

    /// A shoe that deals exactly `cards` in order. Reshuffling it permutes
    /// the same cards.
    pub fn from_cards(cards: Vec<Card>) -> Self {
        Shoe {
            deck_count: cards.len().div_ceil(52).max(1) as u8,
            cards,
            next: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn deck_count(&self) -> u8 {
        self.deck_count
    }

    pub fn capacity(&self) -> usize {
        self.cards.len()
    }

    pub fn dealt(&self) -> usize {
        self.next
    }

    pub fn remaining(&self) -> usize {
        self.cards.len() - self.next
    }

    /// True once the dealt fraction reaches `penetration`.
    pub fn needs_reshuffle(&self, penetration: f64) -> bool {
        self.next as f64 >= penetration * self.cards.len() as f64
    }

    pub fn reshuffle(&mut self) {
        self.cards.shuffle(&mut self.rng);
        self.next = 0;
    }

    /// Per-rank counts of the undealt cards, index 0 = ace.
    pub fn remaining_counts(&self) -> [u32; 13] {
        let mut counts = [0u32; 13];
        for c in &self.cards[self.next..] {
            counts[c.rank.get() as usize - 1] += 1;
        }
        counts
    }
}

impl CardSource for Shoe {
    fn draw(&mut self) -> Result<Card> {
        let card = *self.cards.get(self.next).ok_or(Error::ShoeExhausted)?;
        self.next += 1;
        Ok(card)
    }
}

/// A shoe known only by how many cards of each rank remain; draws are
/// uniform over the remaining cards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composition {
    counts: [u32; 13],
    total: u32,
}

impl Composition {
    pub fn full(deck_count: u8) -> Self {
        let per = 4 * deck_count as u32;
        Composition {
            counts: [per; 13],
            total: per * 13,
        }
    }

    pub fn from_counts(counts: [u32; 13]) -> Self {
        Composition {
            counts,
            total: counts.iter().sum(),
        }
    }

    pub fn counts(&self) -> &[u32; 13] {
        &self.counts
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn count(&self, rank: Rank) -> u32 {
        self.counts[rank.get() as usize - 1]
    }

    /// Take a specific card out. Fails if none of that rank is left.
    pub fn remove(&mut self, card: Card) -> Result<()> {
        let slot = &mut self.counts[card.rank.get() as usize - 1];
        if *slot == 0 {
            return Err(Error::ShoeExhausted);
        }
        *slot -= 1;
        self.total -= 1;
        Ok(())
    }

    pub fn put_back(&mut self, card: Card) {
        self.counts[card.rank.get() as usize - 1] += 1;
        self.total += 1;
    }

    pub fn draw_with<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<Card> {
        if self.total == 0 {
            return Err(Error::ShoeExhausted);
        }
        let mut pick = rng.random_range(0..self.total);
        for (i, n) in self.counts.iter_mut().enumerate() {
            if pick < *n {
                *n -= 1;
                self.total -= 1;
                return Ok(Card::new(Rank::new(i as u8 + 1)?));
            }
            pick -= *n;
        }
        unreachable!("pick is below total")
    }

    /// Bind a random source so the composition can act as a `CardSource`.
    pub fn dealer<'a, R: RngCore>(&'a mut self, rng: &'a mut R) -> CompositionDealer<'a, R> {
        CompositionDealer { comp: self, rng }
    }
}

pub struct CompositionDealer<'a, R> {
    comp: &'a mut Composition,
    rng: &'a mut R,
}

impl<R: RngCore> CardSource for CompositionDealer<'_, R> {
    fn draw(&mut self) -> Result<Card> {
        self.comp.draw_with(self.rng)
    }
}

/// Cards pre-drawn into a fixed sequence; lets several lines of play see
/// the same cards (common random numbers).
#[derive(Debug, Clone)]
pub struct Sequence<'a> {
    cards: &'a [Card],
    next: usize,
}

impl<'a> Sequence<'a> {
    pub fn new(cards: &'a [Card]) -> Self {
        Sequence { cards, next: 0 }
    }
}

impl CardSource for Sequence<'_> {
    fn draw(&mut self) -> Result<Card> {
        let card = *self.cards.get(self.next).ok_or(Error::ShoeExhausted)?;
        self.next += 1;
        Ok(card)
    }
}

/// Cards drawn lazily from a composition and remembered, so several lines
/// of play can replay the same order. Start a new `Replay` over the same
/// cache to rewind.
pub struct Replay<'a, R> {
    cache: &'a mut Vec<Card>,
    pos: usize,
    comp: &'a mut Composition,
    rng: &'a mut R,
}

impl<'a, R: RngCore> Replay<'a, R> {
    pub fn new(cache: &'a mut Vec<Card>, comp: &'a mut Composition, rng: &'a mut R) -> Self {
        Replay {
            cache,
            pos: 0,
            comp,
            rng,
        }
    }
}

impl<R: RngCore> CardSource for Replay<'_, R> {
    fn draw(&mut self) -> Result<Card> {
        if self.pos == self.cache.len() {
            let card = self.comp.draw_with(self.rng)?;
            self.cache.push(card);
        }
        self.pos += 1;
        Ok(self.cache[self.pos - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_drawn_shoe_has_exact_rank_frequencies() {
        for decks in [1u8, 2, 6, 8] {
            let mut shoe = Shoe::new(decks, 7);
            let mut counts = [0u32; 13];
            while let Ok(c) = shoe.draw() {
                counts[c.rank.get() as usize - 1] += 1;
            }
            assert!(counts.iter().all(|&n| n == 4 * decks as u32));
            assert_eq!(shoe.draw(), Err(Error::ShoeExhausted));
        }
    }

    #[test]
    fn shuffle_is_seeded() {
        let mut s1 = Shoe::new(6, 99);
        let mut s2 = Shoe::new(6, 99);
        let mut s3 = Shoe::new(6, 100);
        let mut differs = false;
        for _ in 0..312 {
            let c = s1.draw();
            assert_eq!(c, s2.draw());
            differs |= c != s3.draw();
        }
        assert!(differs);
    }

    #[test]
    fn penetration() {
        let mut shoe = Shoe::new(1, 3);
        for _ in 0..38 {
            shoe.draw().unwrap();
        }
        assert!(!shoe.needs_reshuffle(0.75));
        shoe.draw().unwrap();
        assert!(shoe.needs_reshuffle(0.75));
        shoe.reshuffle();
        assert_eq!(shoe.remaining(), 52);
    }

    #[test]
    fn composition_draws_until_empty() {
        let mut comp = Composition::full(1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = [0u32; 13];
        for _ in 0..52 {
            let c = comp.draw_with(&mut rng).unwrap();
            seen[c.rank.get() as usize - 1] += 1;
        }
        assert_eq!(seen, [4; 13]);
        assert_eq!(comp.draw_with(&mut rng), Err(Error::ShoeExhausted));
    }
}
