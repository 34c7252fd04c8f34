//! Plays one round of blackjack for up to seven seats and records it.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::RngCore;

use crate::card::Card;
use crate::chips::ChipValueMap;
use crate::error::{Error, Result};
use crate::money::Money;
use crate::policy::Policy;
use crate::record::{DealerRecord, HandRecord, PlayedHand, SeatRecord};
use crate::rules::{is_natural, RuleConfig, Tally};
use crate::shoe::CardSource;
use crate::strategy::{Action, Legal};

pub const MAX_SEATS: u8 = 7;

/// One occupied seat for the coming round.
#[derive(Debug, Clone)]
pub struct SeatPlan<'a> {
    pub seat: u8,
    pub player_id: String,
    pub bet: Money,
    pub side_bet: bool,
    pub policy: &'a Policy,
}

/// Identifiers stamped on the produced record.
#[derive(Debug, Clone, Default)]
pub struct RoundMeta {
    pub hand_id: u64,
    pub session: String,
    pub shoe: u32,
}

struct HandState {
    cards: Vec<Card>,
    tally: Tally,
    decisions: Vec<Action>,
    doubled: bool,
}

impl HandState {
    fn new(cards: &[Card]) -> Self {
        HandState {
            cards: cards.to_vec(),
            tally: Tally::of(cards),
            decisions: Vec::new(),
            doubled: false,
        }
    }

    fn push(&mut self, card: Card) {
        self.cards.push(card);
        self.tally.push(card);
    }
}

/// Deal and play a full round. Seats are dealt in the order given, one
/// card each around the table, then the dealer upcard, a second round, and
/// the dealer hole card.
///
/// Chip breakdowns use `chips`; bets that cannot be made from the chip set
/// are rejected.
pub fn play_round<S, R>(
    rules: &RuleConfig,
    shoe: &mut S,
    seats: &[SeatPlan<'_>],
    chips: &ChipValueMap,
    decision_rng: &mut R,
    meta: RoundMeta,
) -> Result<HandRecord>
where
    S: CardSource + ?Sized,
    R: RngCore + ?Sized,
{
    if seats.is_empty() || seats.len() > MAX_SEATS as usize {
        return Err(Error::Config("a round needs between one and seven seats"));
    }
    let mut first = Vec::with_capacity(seats.len());
    for _ in seats {
        first.push(shoe.draw()?);
    }
    let upcard = shoe.draw()?;
    let mut initial = Vec::with_capacity(seats.len());
    for (i, _) in seats.iter().enumerate() {
        initial.push([first[i], shoe.draw()?]);
    }
    let hole = shoe.draw()?;
    let dealer_natural = is_natural(&[upcard, hole], false);

    let mut played: Vec<(bool, Vec<HandState>)> = Vec::with_capacity(seats.len());
    for (plan, dealt) in seats.iter().zip(&initial) {
        if !plan.bet.is_positive() {
            return Err(Error::NonPositiveBet);
        }
        if rules.dealer_peeks && dealer_natural || is_natural(dealt, false) {
            played.push((false, alloc::vec![HandState::new(dealt)]));
            continue;
        }
        played.push(play_seat(rules, shoe, plan.policy, *dealt, upcard, decision_rng)?);
    }

    let any_live = played.iter().any(|(split, hands)| {
        hands
            .iter()
            .any(|h| !h.tally.total().is_bust() && !is_natural(&h.cards, *split))
    });
    let dealer_cards = if any_live && !dealer_natural {
        crate::rules::dealer_play(rules, &[upcard, hole], shoe)?
    } else {
        alloc::vec![upcard, hole]
    };

    let mut record = HandRecord {
        hand_id: meta.hand_id,
        session: meta.session,
        shoe: meta.shoe,
        seats: Vec::with_capacity(seats.len()),
        dealer: DealerRecord {
            upcard: Some(upcard),
            hole_card: Some(hole),
            draws: dealer_cards[2..].iter().copied().map(Some).collect(),
        },
        complete: false,
        flags: Vec::new(),
    };
    for (plan, (split, hands)) in seats.iter().zip(played) {
        let breakdown: BTreeMap<_, _> = chips
            .breakdown(plan.bet)
            .ok_or(Error::Config("bet cannot be built from the chip set"))?;
        record.seats.push(SeatRecord {
            seat: plan.seat,
            player_id: plan.player_id.clone(),
            initial_bet: plan.bet,
            chips: breakdown,
            side_bet_present: plan.side_bet,
            split,
            hands: hands
                .into_iter()
                .map(|h| PlayedHand {
                    cards: h.cards.into_iter().map(Some).collect(),
                    decisions: h.decisions,
                    doubled: h.doubled,
                    outcome: None,
                    net: None,
                })
                .collect(),
            net: None,
        });
    }
    record.settle(rules);
    Ok(record)
}

fn play_seat<S, R>(
    rules: &RuleConfig,
    shoe: &mut S,
    policy: &Policy,
    dealt: [Card; 2],
    upcard: Card,
    rng: &mut R,
) -> Result<(bool, Vec<HandState>)>
where
    S: CardSource + ?Sized,
    R: RngCore + ?Sized,
{
    let first_action = policy.decide(&dealt, upcard, Legal::first_decision(&dealt), rng)?;
    if first_action != Action::Split {
        let mut hand = HandState::new(&dealt);
        play_hand(rules, shoe, policy, &mut hand, upcard, false, Some(first_action), rng)?;
        return Ok((false, alloc::vec![hand]));
    }
    let mut hands = alloc::vec![HandState::new(&dealt[..1]), HandState::new(&dealt[1..])];
    let aces = dealt[0].is_ace();
    for hand in &mut hands {
        hand.push(shoe.draw()?);
        if aces && rules.split_aces_one_card {
            continue;
        }
        play_hand(rules, shoe, policy, hand, upcard, true, None, rng)?;
    }
    Ok((true, hands))
}

#[allow(clippy::too_many_arguments)]
fn play_hand<S, R>(
    rules: &RuleConfig,
    shoe: &mut S,
    policy: &Policy,
    hand: &mut HandState,
    upcard: Card,
    from_split: bool,
    mut first_action: Option<Action>,
    rng: &mut R,
) -> Result<()>
where
    S: CardSource + ?Sized,
    R: RngCore + ?Sized,
{
    while hand.tally.total().best < 21 {
        let legal = Legal {
            double: hand.cards.len() == 2 && (!from_split || rules.double_after_split),
            split: false,
        };
        let action = match first_action.take() {
            Some(a) => a,
            None => policy.decide(&hand.cards, upcard, legal, rng)?,
        };
        hand.decisions.push(action);
        match action {
            Action::Hit => hand.push(shoe.draw()?),
            Action::DoubleDown => {
                hand.doubled = true;
                hand.push(shoe.draw()?);
                break;
            }
            Action::Stand => break,
            Action::Split => return Err(Error::Unclassifiable("split chosen where it is not allowed")),
        }
    }
    Ok(())
}
