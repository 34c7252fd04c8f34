use tableintel_core::analytics::{counting_flag, player_bets, scaled_counts_at_start, CountingThresholds, HoldModel};
use tableintel_core::chips::ChipValueMap;
use tableintel_core::money::Money;
use tableintel_core::policy::Policy;
use tableintel_core::simulator::{simulate, simulate_session, BetPolicy, SessionConfig, SessionSeat, SimConfig};
use tableintel_core::RuleConfig;

#[test]
fn standard_error_shrinks_like_root_n() {
    let sizes = [10_000u64, 40_000, 160_000, 640_000];
    let errors: Vec<f64> = sizes
        .iter()
        .map(|&hands| {
            simulate(&SimConfig {
                hands,
                seed: 3,
                ..SimConfig::default()
            })
            .unwrap()
            .hold_std_error
        })
        .collect();
    for w in errors.windows(2) {
        // Four times the hands, half the error.
        let ratio = w[0] / w[1];
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}, errors {errors:?}");
    }
}

#[test]
fn counter_bets_follow_the_count() {
    let seat = |seat, betting| SessionSeat {
        seat,
        player_id: format!("p{seat}"),
        policy: Policy::basic(),
        betting,
        side_bet: false,
    };
    let hands = simulate_session(&SessionConfig {
        rules: RuleConfig::default(),
        chips: ChipValueMap::default(),
        hands: 400,
        seed: 1,
        session: "s".into(),
        seats: vec![
            seat(
                1,
                BetPolicy::Counter {
                    base: Money::from_dollars(10),
                },
            ),
            seat(
                2,
                BetPolicy::Flat {
                    bet: Money::from_dollars(10),
                },
            ),
        ],
    })
    .unwrap();
    let counts = scaled_counts_at_start(&hands, 6).unwrap();
    let counter = player_bets(&hands, &counts, "p1");
    for &(tc, bet) in &counter {
        let units = if tc > 1.0 { tc } else { 1.0 };
        assert_eq!(bet, Money::from_dollars((10.0 * units).round() as i64));
    }
    let t = CountingThresholds::default();
    assert!(counting_flag(&counter, &HoldModel::REFERENCE, &t).unwrap().flagged);
    let flat = counting_flag(&player_bets(&hands, &counts, "p2"), &HoldModel::REFERENCE, &t).unwrap();
    assert_eq!(flat.advantage, 0.0);
    assert!(!flat.flagged);
}

#[test]
fn shoe_numbers_advance_on_reshuffle() {
    let hands = simulate_session(&SessionConfig {
        rules: RuleConfig::default(),
        chips: ChipValueMap::default(),
        hands: 300,
        seed: 2,
        session: "s".into(),
        seats: vec![SessionSeat {
            seat: 1,
            player_id: "a".into(),
            policy: Policy::basic(),
            betting: BetPolicy::Flat {
                bet: Money::from_dollars(5),
            },
            side_bet: false,
        }],
    })
    .unwrap();
    let shoes: Vec<u32> = hands.iter().map(|h| h.shoe).collect();
    assert_eq!(shoes[0], 1);
    assert!(shoes.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
    assert!(*shoes.last().unwrap() > 3);
    let cards_per_shoe = 6 * 52;
    let mut dealt = 0;
    for w in hands.windows(2) {
        dealt += w[0].all_cards().count();
        if w[1].shoe != w[0].shoe {
            assert!(dealt * 4 >= cards_per_shoe * 3);
            dealt = 0;
        }
    }
}
