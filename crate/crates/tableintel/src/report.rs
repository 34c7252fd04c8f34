//! End-of-session readout per player.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tableintel_core::analytics::{build_personas, AnalysisConfig, OutcomeTally, PlayerPersona};
use tableintel_core::strategy::StrategyTable;
use tableintel_core::{HandRecord, Money};

use crate::config::SkillLabels;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerReport {
    pub player_id: String,
    pub hands: usize,
    pub average_bet: Money,
    pub total_wagered: Money,
    pub net: Money,
    pub outcomes: OutcomeTally,
    pub skill_score: Option<f64>,
    pub skill_label: String,
    pub skill_theo_multiplier: Option<f64>,
    pub counting_flagged: bool,
    /// Hold removed by the player's bet sizing; `None` with too few hands.
    pub counting_advantage: Option<f64>,
    pub bet_count_correlation: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionTotals {
    pub hands: usize,
    pub incomplete_hands: usize,
    pub flagged_hands: usize,
    pub total_wagered: Money,
    /// Players' combined result; the house result is its negation.
    pub player_net: Money,
    pub hold_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session: String,
    pub players: Vec<PlayerReport>,
    pub totals: SessionTotals,
}

impl PlayerReport {
    pub fn from_persona(p: &PlayerPersona, labels: &SkillLabels) -> Self {
        PlayerReport {
            player_id: p.player_id.clone(),
            hands: p.hands_played,
            average_bet: p.average_bet,
            total_wagered: p.total_wagered,
            net: p.net,
            outcomes: p.outcomes,
            skill_score: p.skill.skill_score,
            skill_label: labels.label(p.skill.skill_score).to_string(),
            skill_theo_multiplier: p.skill.skill_theo_multiplier,
            counting_flagged: p.counting_flagged(),
            counting_advantage: p.counting.map(|c| c.advantage),
            bet_count_correlation: p.counting.and_then(|c| c.correlation),
        }
    }
}

/// Build the report for `hands`, which should all belong to `session`. An
/// empty session yields an empty report.
pub fn session_report(
    session: &str,
    hands: &[HandRecord],
    ideal: &StrategyTable,
    analysis: &AnalysisConfig,
    labels: &SkillLabels,
) -> Result<SessionReport, CliError> {
    let personas = build_personas(hands, ideal, analysis).map_err(CliError::input)?;
    let mut totals = SessionTotals {
        hands: hands.len(),
        ..SessionTotals::default()
    };
    for h in hands {
        if !h.complete {
            totals.incomplete_hands += 1;
        }
        if !h.flags.is_empty() {
            totals.flagged_hands += 1;
        }
        for s in &h.seats {
            totals.total_wagered += s.total_wagered();
            totals.player_net += s.net.unwrap_or(Money::ZERO);
        }
    }
    if totals.total_wagered.is_positive() {
        totals.hold_pct = Some(-(totals.player_net.cents() as f64) / totals.total_wagered.cents() as f64);
    }
    Ok(SessionReport {
        session: session.to_string(),
        players: personas.iter().map(|p| PlayerReport::from_persona(p, labels)).collect(),
        totals,
    })
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

impl SessionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let t = &self.totals;
        let _ = writeln!(out, "Session {}", self.session);
        let _ = writeln!(
            out,
            "  hands {}  incomplete {}  flagged {}  wagered ${:.2}  player net ${:.2}  hold {}",
            t.hands,
            t.incomplete_hands,
            t.flagged_hands,
            t.total_wagered.dollars(),
            t.player_net.dollars(),
            opt(t.hold_pct.map(|h| h * 100.0), 2) + "%",
        );
        for p in &self.players {
            let o = &p.outcomes;
            let _ = writeln!(out, "Player {}", p.player_id);
            let _ = writeln!(
                out,
                "  hands {}  average bet ${:.2}  net ${:.2}",
                p.hands,
                p.average_bet.dollars(),
                p.net.dollars()
            );
            let _ = writeln!(
                out,
                "  outcomes: won {} blackjack {} push {} loss {} bust {}",
                o.won, o.blackjack, o.push, o.loss, o.bust
            );
            let _ = writeln!(
                out,
                "  skill {} ({})  theo multiplier {}",
                p.skill_label,
                opt(p.skill_score, 3),
                opt(p.skill_theo_multiplier, 2)
            );
            let _ = writeln!(
                out,
                "  counting {}  advantage {}  correlation {}",
                if p.counting_flagged { "LIKELY" } else { "no" },
                opt(p.counting_advantage, 5),
                opt(p.bet_count_correlation, 3)
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_session_is_empty_report() {
        let r = session_report(
            "x",
            &[],
            &StrategyTable::canonical(),
            &AnalysisConfig::default(),
            &SkillLabels::default(),
        )
        .unwrap();
        assert!(r.players.is_empty());
        assert_eq!(r.totals.hands, 0);
        assert_eq!(r.totals.hold_pct, None);
        assert!(r.to_text().starts_with("Session x\n"));
    }
}
