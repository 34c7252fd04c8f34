//! Post-vision blackjack table intelligence.
//!
//! This crate is `no_std` (with `alloc`) and holds every piece of pure game
//! logic: the rules engine, strategy tables and policies, the Monte-Carlo
//! simulator, the detection-stream assimilator, the synthetic stream
//! renderer and the player analytics. IO, file formats and the CLI live in
//! the `tableintel` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod assimilator;
pub mod card;
pub mod chips;
pub mod derive;
pub mod engine;
pub mod error;
pub mod money;
pub mod policy;
pub mod record;
pub mod rules;
pub mod shoe;
pub mod simulator;
pub mod stats;
pub mod strategy;
pub mod synth;

pub use card::{Card, Rank, Suit};
pub use error::{Error, Result};
pub use money::Money;
pub use record::{DealerRecord, HandRecord, PlayedHand, SeatRecord};
pub use rules::{Outcome, RuleConfig, Soft17};
pub use strategy::{Action, HandClass, StrategyTable};
