//! Command-line front end.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tableintel_core::analytics::{
    build_personas, cumulative_series, expected_hold, scaled_counts_at_start, PlayerPersona,
};
use tableintel_core::assimilator::{Assimilator, StreamItem};
use tableintel_core::policy::{suboptimal_policies, Policy};
use tableintel_core::simulator::{simulate_session, BetPolicy, SessionConfig, SessionSeat, SimConfig, SimResult};
use tableintel_core::strategy::StrategyTable;
use tableintel_core::{HandRecord, Money};

use crate::config::{load_noise, Config};
use crate::error::CliError;
use crate::jsonl::{self, Diagnostic, DETECTIONS, HANDS};
use crate::parallel;
use crate::report::session_report;
use crate::store::Store;

#[derive(Debug, Parser)]
#[command(
    name = "tableintel",
    version,
    about = "Blackjack table intelligence from detection streams"
)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (overrides the config; 0 = one per core).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo hold and theo per policy.
    Simulate(SimulateArgs),
    /// Derive a strategy table by simulation.
    DeriveStrategy(DeriveArgs),
    /// Simulate a session and render it as a detection stream.
    Synth(SynthArgs),
    /// Rebuild hand records from a detection stream.
    Assimilate(AssimilateArgs),
    /// Player personas and counting plot data from hand records.
    Analyze(AnalyzeArgs),
    /// Session report from the store or a hands file.
    Report(ReportArgs),
    /// Assimilate a detection stream into the hand store.
    Ingest(IngestArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Policy name, repeatable; `all` selects every shipped policy.
    #[arg(long = "policy", default_value = "basic")]
    pub policies: Vec<String>,
    #[arg(long, default_value_t = 1_000_000)]
    pub hands: u64,
    /// Flat bet in dollars.
    #[arg(long, default_value_t = 50)]
    pub bet: i64,
    #[arg(long, default_value_t = 60)]
    pub hands_per_hour: u32,
    /// Results CSV; `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Also write theo ratios against basic strategy.
    #[arg(long)]
    pub theo_out: Option<PathBuf>,
    /// Also write hold against scaled count (CSV of x,y) for the first policy.
    #[arg(long)]
    pub count_plot: Option<PathBuf>,
    /// Scaled-count buckets for the count plot.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "-2,-1,0,1,2,3,4,5,6"
    )]
    pub buckets: Vec<f64>,
    /// Hands per bucket (default: --hands).
    #[arg(long)]
    pub bucket_hands: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    #[arg(long, default_value_t = 100_000)]
    pub hands_per_cell: u64,
    /// Strategy grid CSV; `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Per-cell EV estimates as CSV.
    #[arg(long)]
    pub cells: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Betting {
    Flat,
    Counter,
    AntiCounter,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub hands: u64,
    #[arg(long, default_value = "basic")]
    pub policy: String,
    /// Noise profile (TOML key-value); none means a clean stream.
    #[arg(long)]
    pub noise: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth hand records.
    #[arg(long)]
    pub truth: PathBuf,
    /// Occupied seats.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub seats: Vec<u8>,
    #[arg(long, value_enum, default_value_t = Betting::Flat)]
    pub betting: Betting,
    /// Flat bet or counting base bet, dollars.
    #[arg(long, default_value_t = 25)]
    pub bet: i64,
    #[arg(long, default_value = "synth")]
    pub session: String,
}

#[derive(Debug, Args)]
pub struct AssimilateArgs {
    /// Detection stream; `-` for stdin.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Hand records; `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub hands: PathBuf,
    /// Ideal strategy grid; the shipped table when absent.
    #[arg(long)]
    pub strategy: Option<PathBuf>,
    /// Personas JSON; `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Per-hand cumulative holds per player as CSV.
    #[arg(long)]
    pub plots: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, required_unless_present = "hands", conflicts_with = "hands")]
    pub store: Option<PathBuf>,
    #[arg(long)]
    pub hands: Option<PathBuf>,
    #[arg(long)]
    pub session: String,
    #[arg(long)]
    pub strategy: Option<PathBuf>,
    /// JSON report file.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Text report file; stdout when neither output is given.
    #[arg(long)]
    pub text: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Detection stream; `-` for stdin.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub store: PathBuf,
    /// Session id for hands whose stream does not name one.
    #[arg(long)]
    pub session: Option<String>,
}

fn is_stdio(p: &Path) -> bool {
    p.as_os_str() == "-"
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if is_stdio(path) {
        let mut out = io::stdout().lock();
        out.write_all(bytes)
            .and_then(|_| out.flush())
            .map_err(CliError::internal)
    } else {
        fs::write(path, bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    if is_stdio(path) {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| CliError::input(format!("stdin: {e}")))?;
        Ok(buf)
    } else {
        fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }
}

fn jsonl_bytes<T: Serialize>(kind: &str, items: &[T]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    jsonl::write_to(&mut buf, kind, items)?;
    Ok(buf)
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(CliError::internal)?;
    }
    w.into_inner().map_err(CliError::internal)
}

fn report_diagnostics(source: &Path, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}: skipped {d}", source.display());
    }
}

fn parse_policy(name: &str) -> Result<Policy, CliError> {
    name.parse().map_err(CliError::input)
}

fn load_strategy(path: Option<&Path>) -> Result<StrategyTable, CliError> {
    match path {
        None => Ok(StrategyTable::canonical()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            StrategyTable::parse_grid(&text).map_err(|e| CliError::input(format!("{}: {e}", p.display())))
        }
    }
}

fn read_hands(path: &Path) -> Result<Vec<HandRecord>, CliError> {
    let (hands, diags) = jsonl::read_from::<HandRecord, _>(&read_input(path)?[..], HANDS)?;
    report_diagnostics(path, &diags);
    Ok(hands)
}

/// Parse a detection stream, skipping malformed lines.
pub fn read_stream(bytes: &[u8]) -> Result<(Vec<StreamItem>, Vec<Diagnostic>), CliError> {
    jsonl::read_from::<StreamItem, _>(bytes, DETECTIONS)
}

#[derive(Debug, Serialize)]
struct SimRow<'a> {
    policy: &'a str,
    hands: u64,
    total_wagered: Money,
    net: Money,
    hold_pct: f64,
    theo_per_hour: f64,
}

impl<'a> From<&'a SimResult> for SimRow<'a> {
    fn from(r: &'a SimResult) -> Self {
        SimRow {
            policy: &r.policy,
            hands: r.hands,
            total_wagered: r.total_wagered,
            net: r.net,
            hold_pct: r.hold_pct,
            theo_per_hour: r.theo_per_hour,
        }
    }
}

#[derive(Debug, Serialize)]
struct XY {
    x: f64,
    y: f64,
}

fn simulate(cli: &Cli, config: &Config, workers: usize, a: &SimulateArgs) -> Result<(), CliError> {
    let policies: Vec<Policy> = if a.policies.iter().any(|p| p == "all") {
        suboptimal_policies()
    } else {
        a.policies.iter().map(|p| parse_policy(p)).collect::<Result<_, _>>()?
    };
    let base = SimConfig {
        hands: a.hands,
        bet: Money::from_dollars(a.bet),
        hands_per_hour: a.hands_per_hour,
        policy: policies[0].clone(),
        rules: config.rules.clone(),
        seed: cli.seed,
        log_hands: false,
    };
    let mut results = Vec::with_capacity(policies.len());
    for p in &policies {
        results.push(parallel::simulate(
            &SimConfig {
                policy: p.clone(),
                ..base.clone()
            },
            workers,
        )?);
    }
    let rows: Vec<SimRow<'_>> = results.iter().map(SimRow::from).collect();
    write_output(&a.out, &csv_bytes(&rows)?)?;
    if let Some(path) = &a.theo_out {
        let theo = tableintel_core::simulator::theo_ratio_report(&results).map_err(CliError::input)?;
        write_output(path, &csv_bytes(&theo)?)?;
    }
    if let Some(path) = &a.count_plot {
        let cfg = SimConfig {
            hands: a.bucket_hands.unwrap_or(a.hands),
            ..base
        };
        let buckets = parallel::hold_vs_count(&cfg, &a.buckets, workers)?;
        let pts: Vec<XY> = buckets
            .iter()
            .map(|b| XY {
                x: b.scaled_count,
                y: b.hold_pct,
            })
            .collect();
        write_output(path, &csv_bytes(&pts)?)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CellRow {
    hand: String,
    upcard: &'static str,
    best: char,
    margin: f64,
    near_tie: bool,
    hit: Option<f64>,
    stand: Option<f64>,
    double: Option<f64>,
    split: Option<f64>,
}

fn derive_strategy(cli: &Cli, config: &Config, workers: usize, a: &DeriveArgs) -> Result<(), CliError> {
    let d = parallel::derive(&config.rules, a.hands_per_cell, cli.seed, workers)?;
    write_output(&a.out, d.table.to_grid().as_bytes())?;
    if let Some(path) = &a.cells {
        use tableintel_core::strategy::{Action, UPCARD_LABELS};
        let rows: Vec<CellRow> = d
            .cells
            .iter()
            .map(|c| CellRow {
                hand: c.class.label(),
                upcard: UPCARD_LABELS[c.upcard_col],
                best: c.best.letter(),
                margin: c.margin,
                near_tie: c.near_tie(),
                hit: c.ev_of(Action::Hit),
                stand: c.ev_of(Action::Stand),
                double: c.ev_of(Action::DoubleDown),
                split: c.ev_of(Action::Split),
            })
            .collect();
        write_output(path, &csv_bytes(&rows)?)?;
    }
    let (agree, counted) = d.agreement_excluding_ties(&StrategyTable::canonical());
    eprintln!("agreement with the shipped table: {agree}/{counted} cells outside near ties");
    Ok(())
}

fn synth(cli: &Cli, config: &Config, workers: usize, a: &SynthArgs) -> Result<(), CliError> {
    let policy = parse_policy(&a.policy)?;
    let mut noise = load_noise(a.noise.as_deref())?;
    noise.seed ^= cli.seed;
    if a.seats.is_empty() || a.seats.iter().any(|&s| !(1..=7).contains(&s)) {
        return Err(CliError::input("seats must be between 1 and 7"));
    }
    let mut seats = a.seats.clone();
    seats.sort_unstable();
    seats.dedup();
    let bet = Money::from_dollars(a.bet);
    let betting = match a.betting {
        Betting::Flat => BetPolicy::Flat { bet },
        Betting::Counter => BetPolicy::Counter { base: bet },
        Betting::AntiCounter => BetPolicy::AntiCounter { base: bet },
    };
    let session = SessionConfig {
        rules: config.rules.clone(),
        chips: config.chips,
        hands: a.hands,
        seed: cli.seed,
        session: a.session.clone(),
        seats: seats
            .iter()
            .map(|&seat| SessionSeat {
                seat,
                player_id: format!("player-{seat}"),
                policy: policy.clone(),
                betting,
                side_bet: false,
            })
            .collect(),
    };
    let hands = simulate_session(&session).map_err(CliError::input)?;
    let stream = parallel::render(&hands, &config.rules, &config.timing, &noise, workers)?;
    write_output(&a.out, &jsonl_bytes(DETECTIONS, &stream)?)?;
    write_output(&a.truth, &jsonl_bytes(HANDS, &hands)?)?;
    Ok(())
}

fn assimilate_items(config: &Config, items: Vec<StreamItem>) -> Vec<HandRecord> {
    let mut a = Assimilator::new(config.assimilator());
    for item in items {
        a.push(item);
    }
    let (hands, stats) = a.finish();
    eprintln!(
        "hands {}  late {}  duplicates {}  malformed objects {}  timeouts {}",
        stats.hands, stats.reorder.late, stats.reorder.duplicates, stats.malformed_objects, stats.timeouts
    );
    hands
}

fn assimilate(config: &Config, a: &AssimilateArgs) -> Result<(), CliError> {
    let (items, diags) = read_stream(&read_input(&a.input)?)?;
    report_diagnostics(&a.input, &diags);
    let hands = assimilate_items(config, items);
    write_output(&a.out, &jsonl_bytes(HANDS, &hands)?)
}

#[derive(Debug, Serialize)]
struct PlotRow<'a> {
    player_id: &'a str,
    hand: usize,
    scaled_count: f64,
    bet: Money,
    h_player: f64,
    h_flatbet: f64,
}

fn counting_rows<'a>(
    hands: &[HandRecord],
    personas: &'a [PlayerPersona],
    config: &Config,
) -> Result<Vec<PlotRow<'a>>, CliError> {
    let counts = scaled_counts_at_start(hands, config.rules.deck_count).map_err(CliError::input)?;
    let model = config.analysis(0).hold_model;
    let mut rows = Vec::new();
    for p in personas {
        let bets = tableintel_core::analytics::player_bets(hands, &counts, &p.player_id);
        let weighted: Vec<(Money, f64)> = bets.iter().map(|&(x, b)| (b, expected_hold(&model, x))).collect();
        for (i, ((hp, hf), (x, b))) in cumulative_series(&weighted).into_iter().zip(&bets).enumerate() {
            rows.push(PlotRow {
                player_id: &p.player_id,
                hand: i + 1,
                scaled_count: *x,
                bet: *b,
                h_player: hp,
                h_flatbet: hf,
            });
        }
    }
    Ok(rows)
}

fn analyze(cli: &Cli, config: &Config, a: &AnalyzeArgs) -> Result<(), CliError> {
    let hands = read_hands(&a.hands)?;
    let ideal = load_strategy(a.strategy.as_deref())?;
    let personas = build_personas(&hands, &ideal, &config.analysis(cli.seed)).map_err(CliError::input)?;
    let mut json = serde_json::to_string_pretty(&personas).map_err(CliError::internal)?;
    json.push('\n');
    write_output(&a.out, json.as_bytes())?;
    if let Some(path) = &a.plots {
        write_output(path, &csv_bytes(&counting_rows(&hands, &personas, config)?)?)?;
    }
    Ok(())
}

fn report(cli: &Cli, config: &Config, a: &ReportArgs) -> Result<(), CliError> {
    let hands = match (&a.store, &a.hands) {
        (Some(dir), _) => {
            if !dir.join("hands.jsonl").exists() {
                return Err(CliError::input(format!("{}: no hand store here", dir.display())));
            }
            Store::open(dir)?.hands(Some(&a.session))?
        }
        (None, Some(path)) => read_hands(path)?
            .into_iter()
            .filter(|h| h.session == a.session)
            .collect(),
        (None, None) => return Err(CliError::input("report needs --store or --hands")),
    };
    let ideal = load_strategy(a.strategy.as_deref())?;
    let r = session_report(&a.session, &hands, &ideal, &config.analysis(cli.seed), &config.labels)?;
    if let Some(path) = &a.json {
        write_output(path, r.to_json().as_bytes())?;
    }
    if let Some(path) = &a.text {
        write_output(path, r.to_text().as_bytes())?;
    }
    if a.json.is_none() && a.text.is_none() {
        write_output(Path::new("-"), r.to_text().as_bytes())?;
    }
    Ok(())
}

fn ingest(config: &Config, a: &IngestArgs) -> Result<(), CliError> {
    let (items, diags) = read_stream(&read_input(&a.input)?)?;
    report_diagnostics(&a.input, &diags);
    let mut hands = assimilate_items(config, items);
    if let Some(session) = &a.session {
        for h in hands.iter_mut().filter(|h| h.session.is_empty()) {
            h.session = session.clone();
        }
    }
    let mut store = Store::open(&a.store)?;
    let summary = store.append(&hands)?;
    println!(
        "stored {} new hands, {} duplicates, {} lines skipped",
        summary.added,
        summary.duplicates,
        diags.len()
    );
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = Config::load(cli.config.as_deref())?;
    let workers = cli.workers.unwrap_or(config.workers);
    match &cli.command {
        Command::Simulate(a) => simulate(cli, &config, workers, a),
        Command::DeriveStrategy(a) => derive_strategy(cli, &config, workers, a),
        Command::Synth(a) => synth(cli, &config, workers, a),
        Command::Assimilate(a) => assimilate(&config, a),
        Command::Analyze(a) => analyze(cli, &config, a),
        Command::Report(a) => report(cli, &config, a),
        Command::Ingest(a) => ingest(&config, a),
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
