//! Table configuration, read from a TOML key-value file.
//!
//! Every key is optional; missing keys take the documented defaults.
//!
//! ```toml
//! workers = 4
//!
//! [rules]
//! deck_count = 6
//! dealer_soft_17 = "stand"
//!
//! [assimilator]
//! max_lag = 20
//!
//! [labels]
//! expert = 0.95
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tableintel_core::analytics::{AnalysisConfig, CountingThresholds, HoldModel, MultiplierConfig};
use tableintel_core::assimilator::AssimilatorConfig;
use tableintel_core::chips::ChipValueMap;
use tableintel_core::synth::{NoiseProfile, Timing};
use tableintel_core::RuleConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssimilatorTuning {
    pub stability_frames: u32,
    pub max_lag: u64,
    pub bet_quorum: f64,
    pub cluster_gap: f64,
    pub dealer_tolerance: f64,
    pub empty_timeout: u64,
}

impl Default for AssimilatorTuning {
    fn default() -> Self {
        let d = AssimilatorConfig::default();
        AssimilatorTuning {
            stability_frames: d.stability_frames,
            max_lag: d.max_lag,
            bet_quorum: d.bet_quorum,
            cluster_gap: d.cluster_gap,
            dealer_tolerance: d.dealer_tolerance,
            empty_timeout: d.empty_timeout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisTuning {
    pub r_min: f64,
    pub a_min: f64,
    pub min_hands: usize,
    pub hold_slope: f64,
    pub hold_intercept: f64,
    /// Hands per policy when estimating the skill theo multiplier; 0 skips
    /// the estimate.
    pub multiplier_hands: u64,
    pub reference_hold: f64,
}

impl Default for AnalysisTuning {
    fn default() -> Self {
        let t = CountingThresholds::default();
        let m = MultiplierConfig::default();
        AnalysisTuning {
            r_min: t.r_min,
            a_min: t.a_min,
            min_hands: t.min_hands,
            hold_slope: HoldModel::REFERENCE.slope,
            hold_intercept: HoldModel::REFERENCE.intercept,
            multiplier_hands: 20_000,
            reference_hold: m.reference_hold,
        }
    }
}

/// Lower bounds of the skill labels; anything below `average` is Novice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkillLabels {
    pub expert: f64,
    pub skilled: f64,
    pub average: f64,
}

impl Default for SkillLabels {
    fn default() -> Self {
        SkillLabels {
            expert: 0.95,
            skilled: 0.85,
            average: 0.70,
        }
    }
}

impl SkillLabels {
    pub fn label(&self, score: Option<f64>) -> &'static str {
        match score {
            None => "Unrated",
            Some(s) if s >= self.expert => "Expert",
            Some(s) if s >= self.skilled => "Skilled",
            Some(s) if s >= self.average => "Average",
            Some(_) => "Novice",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Worker threads for parallel commands; 0 means one per core. Results
    /// do not depend on it.
    pub workers: usize,
    pub rules: RuleConfig,
    pub chips: ChipValueMap,
    pub assimilator: AssimilatorTuning,
    pub analysis: AnalysisTuning,
    pub labels: SkillLabels,
    pub timing: Timing,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Config::parse(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Config, CliError> {
        let config: Config = toml::from_str(text).map_err(|e| CliError::input(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.rules.validate().map_err(CliError::input)?;
        self.chips.validate().map_err(CliError::input)?;
        let a = &self.assimilator;
        if a.stability_frames == 0 || !(0.0..=1.0).contains(&a.bet_quorum) {
            return Err(CliError::input(
                "assimilator: stability_frames must be positive and bet_quorum in [0, 1]",
            ));
        }
        let l = &self.labels;
        if !(l.expert >= l.skilled && l.skilled >= l.average) {
            return Err(CliError::input("labels must satisfy expert >= skilled >= average"));
        }
        if self.timing.fps == 0 {
            return Err(CliError::input("timing.fps must be positive"));
        }
        Ok(())
    }

    pub fn assimilator(&self) -> AssimilatorConfig {
        let a = &self.assimilator;
        AssimilatorConfig {
            rules: self.rules.clone(),
            chips: self.chips,
            stability_frames: a.stability_frames,
            max_lag: a.max_lag,
            bet_quorum: a.bet_quorum,
            cluster_gap: a.cluster_gap,
            dealer_tolerance: a.dealer_tolerance,
            empty_timeout: a.empty_timeout,
        }
    }

    pub fn analysis(&self, seed: u64) -> AnalysisConfig {
        let a = &self.analysis;
        AnalysisConfig {
            deck_count: self.rules.deck_count,
            hold_model: HoldModel {
                slope: a.hold_slope,
                intercept: a.hold_intercept,
                r_squared: HoldModel::REFERENCE.r_squared,
            },
            thresholds: CountingThresholds {
                r_min: a.r_min,
                a_min: a.a_min,
                min_hands: a.min_hands,
            },
            multiplier: (a.multiplier_hands > 0).then(|| MultiplierConfig {
                rules: self.rules.clone(),
                hands: a.multiplier_hands,
                seed,
                reference_hold: a.reference_hold,
            }),
        }
    }
}

/// Read a noise profile (TOML key-value). The profile's own seed is
/// combined with the global seed so one flag reseeds everything.
pub fn load_noise(path: Option<&Path>) -> Result<NoiseProfile, CliError> {
    let Some(path) = path else {
        return Ok(NoiseProfile::NONE);
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let profile: NoiseProfile =
        toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    profile.validate().map_err(CliError::input)?;
    Ok(profile)
}
