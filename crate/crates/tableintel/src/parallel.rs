//! Multi-threaded drivers for the core computations.
//!
//! Work units are the same fixed batches, cells and hands the single-thread
//! versions use, each with its own seed-derived RNG stream. Results are
//! collected in unit order and merged with exact integer sums, so output
//! does not depend on the worker count.

use rayon::prelude::*;
use rayon::ThreadPool;
use tableintel_core::assimilator::StreamItem;
use tableintel_core::derive::{all_cells, assemble, estimate_cell, Derivation};
use tableintel_core::policy::Policy;
use tableintel_core::simulator::{
    bucket_result, count_bucket_batch, simulate_batch, theo_ratio_report, CountBucket, SimConfig, SimResult, Tally,
    TheoRow,
};
use tableintel_core::synth::{hand_span, order_arrivals, render_stream, NoiseProfile, Timing};
use tableintel_core::{HandRecord, RuleConfig};

use crate::error::CliError;

/// Thread pool with `workers` threads; 0 picks one per core.
pub fn pool(workers: usize) -> Result<ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(CliError::internal)
}

fn core_err(e: tableintel_core::Error) -> CliError {
    CliError::internal(e)
}

pub fn simulate(config: &SimConfig, workers: usize) -> Result<SimResult, CliError> {
    config.validate().map_err(CliError::input)?;
    let tallies: Vec<Tally> = pool(workers)?.install(|| {
        (0..config.batch_count())
            .into_par_iter()
            .map(|i| simulate_batch(config, i))
            .collect::<Result<_, _>>()
            .map_err(core_err)
    })?;
    let total = tallies.into_iter().fold(Tally::default(), Tally::merge);
    Ok(SimResult::from_tally(config, total))
}

pub fn theo_report(
    policies: &[Policy],
    config: &SimConfig,
    workers: usize,
) -> Result<(Vec<SimResult>, Vec<TheoRow>), CliError> {
    let mut results = Vec::with_capacity(policies.len());
    for p in policies {
        results.push(simulate(
            &SimConfig {
                policy: p.clone(),
                ..config.clone()
            },
            workers,
        )?);
    }
    let rows = theo_ratio_report(&results).map_err(CliError::input)?;
    Ok((results, rows))
}

/// Hold per scaled-count bucket; out-of-range or unreachable buckets are
/// left out.
pub fn hold_vs_count(config: &SimConfig, buckets: &[f64], workers: usize) -> Result<Vec<CountBucket>, CliError> {
    config.validate().map_err(CliError::input)?;
    let batches = config.batch_count();
    let units: Vec<(usize, u64)> = buckets
        .iter()
        .enumerate()
        .filter(|(_, t)| (-10.0..=10.0).contains(*t))
        .flat_map(|(bi, _)| (0..batches).map(move |b| (bi, b)))
        .collect();
    let tallies: Vec<Option<Tally>> = pool(workers)?.install(|| {
        units
            .par_iter()
            .map(|&(bi, b)| count_bucket_batch(config, bi as u64, buckets[bi], b))
            .collect::<Result<_, _>>()
            .map_err(core_err)
    })?;
    let mut out = Vec::new();
    for (bi, chunk) in units.chunks(batches as usize).zip(tallies.chunks(batches as usize)) {
        let Some(total) = chunk
            .iter()
            .try_fold(Tally::default(), |acc, t| t.clone().map(|t| acc.merge(t)))
        else {
            continue;
        };
        out.push(bucket_result(buckets[bi[0].0], &total));
    }
    Ok(out)
}

pub fn derive(rules: &RuleConfig, hands_per_cell: u64, seed: u64, workers: usize) -> Result<Derivation, CliError> {
    rules.validate().map_err(CliError::input)?;
    let cells: Vec<_> = all_cells().collect();
    let estimates = pool(workers)?.install(|| {
        cells
            .par_iter()
            .map(|&(class, col)| estimate_cell(rules, class, col, hands_per_cell, seed))
            .collect::<Result<Vec<_>, _>>()
            .map_err(core_err)
    })?;
    assemble(estimates, hands_per_cell, seed).map_err(core_err)
}

/// Render hands into one arrival-ordered stream, hands in parallel.
pub fn render(
    hands: &[HandRecord],
    rules: &RuleConfig,
    timing: &Timing,
    noise: &NoiseProfile,
    workers: usize,
) -> Result<Vec<StreamItem>, CliError> {
    noise.validate().map_err(CliError::input)?;
    let mut starts = Vec::with_capacity(hands.len());
    let mut frame = 0;
    for h in hands {
        starts.push(frame);
        frame += hand_span(h, rules, timing).map_err(CliError::input)?;
    }
    let rendered = pool(workers)?.install(|| {
        hands
            .par_iter()
            .zip(&starts)
            .map(|(h, &start)| render_stream(h, rules, timing, noise, start).map(|r| r.0))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::input)
    })?;
    Ok(order_arrivals(rendered.into_iter().flatten().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tableintel_core::synth::render_session;

    #[test]
    fn worker_count_does_not_matter() {
        let cfg = SimConfig {
            hands: 35_000,
            seed: 4,
            ..SimConfig::default()
        };
        let one = simulate(&cfg, 1).unwrap();
        let three = simulate(&cfg, 3).unwrap();
        assert_eq!(one, three);
        assert_eq!(one, tableintel_core::simulator::simulate(&cfg).unwrap());
    }

    #[test]
    fn buckets_match_single_thread() {
        let cfg = SimConfig {
            hands: 12_000,
            seed: 2,
            ..SimConfig::default()
        };
        let buckets = [-1.0, 2.0, 40.0];
        let par = hold_vs_count(&cfg, &buckets, 2).unwrap();
        let seq = tableintel_core::simulator::hold_vs_scaled_count(&cfg, &buckets).unwrap();
        assert_eq!(par, seq);
        assert_eq!(par.len(), 2);
    }

    #[test]
    fn parallel_render_matches_sequential() {
        let cfg = SimConfig {
            hands: 20,
            log_hands: true,
            ..SimConfig::default()
        };
        let hands = tableintel_core::simulator::simulate(&cfg).unwrap().per_hand_log;
        let noise = NoiseProfile {
            frame_drop_rate: 0.2,
            reorder_window: 8,
            seed: 5,
            ..NoiseProfile::NONE
        };
        let timing = Timing::default();
        let rules = RuleConfig::default();
        assert_eq!(
            render(&hands, &rules, &timing, &noise, 2).unwrap(),
            render_session(&hands, &rules, &timing, &noise).unwrap()
        );
    }
}
