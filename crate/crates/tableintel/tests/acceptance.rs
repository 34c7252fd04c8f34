//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Built with `harness = false` so the lines always print.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as RunnerConfig, TestRunner};
use tableintel::jsonl::{self, HANDS};
use tableintel::parallel;
use tableintel_core::analytics::{build_personas, cumulative_holds, AnalysisConfig};
use tableintel_core::chips::ChipValueMap;
use tableintel_core::policy::{suboptimal_policies, Policy};
use tableintel_core::simulator::{fit_hold_line, simulate_session, BetPolicy, SessionConfig, SessionSeat, SimConfig};
use tableintel_core::strategy::StrategyTable;
use tableintel_core::{HandRecord, Money, RuleConfig};

const BIN: &str = env!("CARGO_BIN_EXE_tableintel");

type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "tableintel {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn read_hands(path: &Path) -> Vec<HandRecord> {
    let (hands, diags) = jsonl::read_file::<HandRecord>(path, HANDS).unwrap();
    assert!(diags.is_empty(), "{path:?}: {diags:?}");
    hands
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn basic_hold() -> Verdict {
    let cfg = SimConfig {
        hands: 1_000_000,
        seed: 0,
        ..SimConfig::default()
    };
    let r = parallel::simulate(&cfg, 0).unwrap();
    verdict(
        (r.hold_pct - 0.005).abs() <= 0.002,
        format!(
            "hold {:.5} (se {:.5}) over {} hands, want 0.005 +/- 0.002",
            r.hold_pct, r.hold_std_error, r.hands
        ),
    )
}

fn theo_amplification() -> Verdict {
    let cfg = SimConfig {
        hands: 1_000_000,
        seed: 0,
        ..SimConfig::default()
    };
    let (_, rows) = parallel::theo_report(&suboptimal_policies(), &cfg, 0).unwrap();
    let others: Vec<_> = rows.iter().filter(|r| r.policy != "basic").collect();
    let all_above_one = others.iter().all(|r| r.ratio_to_basic > 1.0 && !r.unstable);
    let max = others
        .iter()
        .map(|r| r.ratio_to_basic)
        .fold(f64::NEG_INFINITY, f64::max);
    let listing: Vec<String> = others
        .iter()
        .map(|r| format!("{} {:.2}x", r.policy, r.ratio_to_basic))
        .collect();
    verdict(
        all_above_one && (5.0..=12.0).contains(&max),
        format!(
            "ratios [{}]; max {max:.2}, want all > 1 and max in [5, 12]",
            listing.join(", ")
        ),
    )
}

fn hold_vs_count() -> Verdict {
    let cfg = SimConfig {
        hands: 1_000_000,
        seed: 0,
        ..SimConfig::default()
    };
    let targets: Vec<f64> = (-2..=6).map(f64::from).collect();
    let buckets = parallel::hold_vs_count(&cfg, &targets, 0).unwrap();
    if buckets.len() != targets.len() {
        return verdict(
            false,
            format!("only {} of {} buckets reachable", buckets.len(), targets.len()),
        );
    }
    let fit = fit_hold_line(&buckets).unwrap();
    let root = fit.root().unwrap_or(f64::NAN);
    let pass = fit.slope < 0.0 && fit.r_squared >= 0.9 && (root - 1.08).abs() <= 0.5;
    verdict(
        pass,
        format!(
            "slope {:.5}, intercept {:.5}, R^2 {:.4}, zero at {root:.3}; want slope < 0, R^2 >= 0.9, zero 1.08 +/- 0.5",
            fit.slope, fit.intercept, fit.r_squared
        ),
    )
}

fn synth_and_assimilate(dir: &Path, name: &str, hands: u64, noise: Option<&str>) -> (Vec<HandRecord>, Vec<HandRecord>) {
    let stream = dir.join(format!("{name}.jsonl"));
    let truth = dir.join(format!("{name}-truth.jsonl"));
    let rebuilt = dir.join(format!("{name}-hands.jsonl"));
    let hands = hands.to_string();
    let mut args = vec![
        "synth",
        "--hands",
        &hands,
        "--seats",
        "1,2,3,4,5",
        "--betting",
        "counter",
        "--out",
        s(&stream),
        "--truth",
        s(&truth),
        "--seed",
        "7",
    ];
    let noise_path = dir.join(format!("{name}-noise.toml"));
    if let Some(profile) = noise {
        fs::write(&noise_path, profile).unwrap();
        args.extend(["--noise", s(&noise_path)]);
    }
    run_cli(&args);
    run_cli(&["assimilate", "--in", s(&stream), "--out", s(&rebuilt)]);
    (read_hands(&truth), read_hands(&rebuilt))
}

fn exact_hands(truth: &[HandRecord], got: &[HandRecord]) -> usize {
    let by_id: BTreeMap<u64, &HandRecord> = got.iter().map(|h| (h.hand_id, h)).collect();
    truth
        .iter()
        .filter(|t| by_id.get(&t.hand_id).is_some_and(|g| g.same_play(t) && g.complete))
        .count()
}

/// (correct, placements): every truth card compared with the card in the
/// same position of the rebuilt hand; missing cards count as wrong.
fn card_accuracy(truth: &[HandRecord], got: &[HandRecord]) -> (usize, usize) {
    let by_id: BTreeMap<u64, &HandRecord> = got.iter().map(|h| (h.hand_id, h)).collect();
    let mut correct = 0;
    let mut total = 0;
    for t in truth {
        let rebuilt: Vec<_> = by_id
            .get(&t.hand_id)
            .map(|g| g.all_cards().collect())
            .unwrap_or_default();
        for (i, card) in t.all_cards().enumerate() {
            let card = card.expect("truth cards are known");
            total += 1;
            if rebuilt
                .get(i)
                .copied()
                .flatten()
                .is_some_and(|c| c.value() == card.value())
            {
                correct += 1;
            }
        }
    }
    (correct, total)
}

fn round_trip(dir: &Path) -> Verdict {
    let (truth, got) = synth_and_assimilate(dir, "clean", 500, None);
    let exact = exact_hands(&truth, &got);
    verdict(
        truth.len() == 500 && got.len() == 500 && exact == 500,
        format!("{exact}/{} hands identical ({} rebuilt)", truth.len(), got.len()),
    )
}

fn noise_robustness(dir: &Path) -> Verdict {
    let (truth, got) = synth_and_assimilate(
        dir,
        "drops",
        200,
        Some("frame_drop_rate = 0.3\nreorder_window = 15\nseed = 1\n"),
    );
    let exact = exact_hands(&truth, &got);
    let exact_ok = exact * 100 >= 95 * truth.len();
    let (truth, got) = synth_and_assimilate(dir, "ranks", 200, Some("rank_confusion_rate = 0.02\nseed = 2\n"));
    let (correct, placements) = card_accuracy(&truth, &got);
    let acc = correct as f64 / placements as f64;
    verdict(
        exact_ok && placements >= 600 && acc >= 0.98,
        format!(
            "drops+reorder: {exact}/{} exact (want >= 95%); rank confusion: {correct}/{placements} card values = {:.2}% (want >= 98% over >= 600)",
            truth.len(),
            acc * 100.0
        ),
    )
}

fn cumulative_identities() -> Verdict {
    let mut runner = TestRunner::new(RunnerConfig {
        cases: 2_000,
        ..RunnerConfig::default()
    });
    let strategy = (1i64..1_000_000, prop::collection::vec(-0.05f64..0.05, 1..300));
    let property = runner.run(&strategy, |(cents, holds)| {
        let hands: Vec<(Money, f64)> = holds.iter().map(|&h| (Money::from_cents(cents), h)).collect();
        let (p, f) = cumulative_holds(&hands).unwrap();
        prop_assert_eq!(p.to_bits(), f.to_bits());
        Ok(())
    });
    // Worked by hand: (50*0.005 + 150*(-0.004)) / 200 and (100 * 0.001) / 200.
    let (p, f) = cumulative_holds(&[(Money::from_dollars(50), 0.005), (Money::from_dollars(150), -0.004)]).unwrap();
    let rel = |got: f64, want: f64| ((got - want) / want).abs();
    let example_ok = rel(p, -0.00175) < 5e-11 && rel(f, 0.0005) < 5e-11;
    verdict(
        property.is_ok() && example_ok,
        format!(
            "constant-bet identity over 2000 cases: {}; example H_player {p:.12e}, H_flatbet {f:.12e}",
            if property.is_ok() { "exact" } else { "violated" }
        ),
    )
}

fn counting_detection() -> Verdict {
    let seat = |seat: u8, betting| SessionSeat {
        seat,
        player_id: format!("seat-{seat}"),
        policy: Policy::basic(),
        betting,
        side_bet: false,
    };
    let base = Money::from_dollars(25);
    let hands = simulate_session(&SessionConfig {
        rules: RuleConfig::default(),
        chips: ChipValueMap::default(),
        hands: 200,
        seed: 3,
        session: "count".into(),
        seats: vec![
            seat(2, BetPolicy::Counter { base }),
            seat(5, BetPolicy::Flat { bet: base }),
        ],
    })
    .unwrap();
    let personas = build_personas(&hands, &StrategyTable::canonical(), &AnalysisConfig::default()).unwrap();
    let counter = personas
        .iter()
        .find(|p| p.player_id == "seat-2")
        .and_then(|p| p.counting)
        .unwrap();
    let flat = personas
        .iter()
        .find(|p| p.player_id == "seat-5")
        .and_then(|p| p.counting)
        .unwrap();
    let r = counter.correlation.unwrap_or(f64::NAN);
    let pass = counter.flagged && r >= 0.5 && counter.advantage > 0.0 && flat.advantage == 0.0 && !flat.flagged;
    verdict(
        pass,
        format!(
            "counter: r {r:.3}, advantage {:.5}, flagged {}; flat: advantage {}, flagged {}",
            counter.advantage, counter.flagged, flat.advantage, flat.flagged
        ),
    )
}

fn strategy_derivation() -> Verdict {
    let d = parallel::derive(&RuleConfig::default(), 100_000, 0, 0).unwrap();
    let (agree, counted) = d.agreement_excluding_ties(&StrategyTable::canonical());
    verdict(
        counted > 0 && agree * 100 >= 95 * counted,
        format!(
            "{agree}/{counted} non-tie cells agree ({:.1}%), {} near ties excluded",
            100.0 * agree as f64 / counted.max(1) as f64,
            d.cells.len() - counted
        ),
    )
}

/// Run every subcommand in `dir`; return each output file and stdout.
fn run_all(dir: &Path, workers: &str) -> BTreeMap<String, Vec<u8>> {
    let p = |name: &str| dir.join(name);
    let noise = p("noise.toml");
    fs::write(
        &noise,
        "frame_drop_rate = 0.1\nreorder_window = 6\nrank_confusion_rate = 0.01\nseed = 9\n",
    )
    .unwrap();
    let common = ["--seed", "11", "--workers", workers];
    let mut outputs = BTreeMap::new();
    let mut go = |name: &str, args: &[&str]| {
        let mut full: Vec<&str> = args.to_vec();
        full.extend(common);
        outputs.insert(format!("{name} stdout"), run_cli(&full));
    };
    go(
        "simulate",
        &[
            "simulate",
            "--policy",
            "all",
            "--hands",
            "30000",
            "--out",
            s(&p("sim.csv")),
            "--theo-out",
            s(&p("theo.csv")),
            "--count-plot",
            s(&p("count.csv")),
            "--bucket-hands",
            "20000",
        ],
    );
    go(
        "derive-strategy",
        &[
            "derive-strategy",
            "--hands-per-cell",
            "2000",
            "--out",
            s(&p("derived.csv")),
        ],
    );
    go(
        "synth",
        &[
            "synth",
            "--hands",
            "60",
            "--betting",
            "counter",
            "--noise",
            s(&noise),
            "--out",
            s(&p("stream.jsonl")),
            "--truth",
            s(&p("truth.jsonl")),
        ],
    );
    go(
        "assimilate",
        &[
            "assimilate",
            "--in",
            s(&p("stream.jsonl")),
            "--out",
            s(&p("hands.jsonl")),
        ],
    );
    go(
        "analyze",
        &[
            "analyze",
            "--hands",
            s(&p("hands.jsonl")),
            "--strategy",
            s(&p("derived.csv")),
            "--out",
            s(&p("personas.json")),
            "--plots",
            s(&p("plots.csv")),
        ],
    );
    go(
        "ingest",
        &["ingest", "--in", s(&p("stream.jsonl")), "--store", s(&p("store"))],
    );
    go(
        "report",
        &[
            "report",
            "--store",
            s(&p("store")),
            "--session",
            "synth",
            "--json",
            s(&p("report.json")),
            "--text",
            s(&p("report.txt")),
        ],
    );
    for f in [
        "sim.csv",
        "theo.csv",
        "count.csv",
        "derived.csv",
        "stream.jsonl",
        "truth.jsonl",
        "hands.jsonl",
        "personas.json",
        "plots.csv",
        "store/hands.jsonl",
        "store/index.jsonl",
        "report.json",
        "report.txt",
    ] {
        outputs.insert(f.to_string(), fs::read(p(f)).unwrap());
    }
    outputs
}

fn determinism(root: &Path) -> Verdict {
    let dirs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|d| root.join(d)).collect();
    for d in &dirs {
        fs::create_dir_all(d).unwrap();
    }
    let first = run_all(&dirs[0], "1");
    let again = run_all(&dirs[1], "1");
    let wide = run_all(&dirs[2], "3");
    let differing: Vec<&String> = first
        .keys()
        .filter(|k| first.get(*k) != again.get(*k) || first.get(*k) != wide.get(*k))
        .collect();
    verdict(
        differing.is_empty(),
        format!(
            "{} outputs over 7 subcommands compared; differing: {differing:?}",
            first.len()
        ),
    )
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Check<'_>)> = vec![
        ("basic-strategy hold", Box::new(basic_hold)),
        ("theo amplification", Box::new(theo_amplification)),
        ("hold-vs-count linearity", Box::new(hold_vs_count)),
        ("zero-noise round trip", Box::new(|| round_trip(tmp.path()))),
        ("noise robustness", Box::new(|| noise_robustness(tmp.path()))),
        ("cumulative hold identities", Box::new(cumulative_identities)),
        ("counting detection", Box::new(counting_detection)),
        ("strategy derivation", Box::new(strategy_derivation)),
        ("determinism", Box::new(|| determinism(tmp.path()))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {} {name}: {} ({}) [{:.1}s]",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
