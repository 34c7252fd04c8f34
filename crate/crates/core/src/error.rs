use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("rank {0} is outside 1..=13")]
    InvalidRank(u8),
    #[error("hand has no cards")]
    EmptyHand,
    #[error("shoe is exhausted")]
    ShoeExhausted,
    #[error("a doubled hand cannot be a blackjack")]
    DoubledBlackjack,
    #[error("bet must be positive")]
    NonPositiveBet,
    #[error("hand cannot be classified: {0}")]
    Unclassifiable(&'static str),
    #[error("strategy table: {0}")]
    Table(alloc::string::String),
    #[error("card count exceeds shoe capacity")]
    CountOverflow,
    #[error("no hands supplied")]
    NoHands,
    #[error("need at least {needed} hands, got {got}")]
    TooFewHands { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}
