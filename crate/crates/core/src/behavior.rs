//! Aggregation of transcripts into per-setting behavior, switching-point and
//! equivalent extraction, and the three competence tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gamespec::{GameKind, GamblingSetting, GameSetting};
use crate::parse::{Decision, ParseOutcome, Reply, TimeChoice};

#[derive(Debug, Error)]
pub enum BehaviorError {
    #[error("empty input")]
    EmptyInput,
    #[error("non-monotone grid: {0}")]
    NonMonotoneGrid(String),
    #[error("insufficient delays: {0}")]
    InsufficientDelays(String),
    #[error("summary payload mismatch: {0}")]
    PayloadMismatch(String),
}

/// Side of the grid a censored estimate fell off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Censoring {
    /// The crossing lies inside the grid.
    None,
    /// The crossing lies beyond the accept-everything / choose-now end.
    Low,
    /// No value crossed the threshold; the estimate sits at the extreme grid
    /// point and must not feed a regression unflagged.
    High,
}

/// Per-game aggregate counts for one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryPayload {
    Proposer {
        pool: u32,
        /// offer -> count over valid replies
        offer_counts: BTreeMap<u32, u32>,
    },
    Responder {
        offer: u32,
        n_accept: u32,
    },
    Gambling {
        /// accept count per sure option, canonical print order
        accept_counts: Vec<u32>,
    },
    Waiting {
        n_now: u32,
    },
}

/// Aggregates for one setting: totals plus the game-specific payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorSummary {
    pub setting_id: String,
    pub game: GameKind,
    pub n_total: u32,
    pub n_valid: u32,
    pub payload: SummaryPayload,
}

impl BehaviorSummary {
    pub fn validity_fraction(&self) -> f64 {
        if self.n_total == 0 {
            0.0
        } else {
            self.n_valid as f64 / self.n_total as f64
        }
    }

    /// Mean offer as a fraction of the pool (proposer settings).
    pub fn mean_offer_fraction(&self) -> Option<f64> {
        match &self.payload {
            SummaryPayload::Proposer { pool, offer_counts } if self.n_valid > 0 => {
                let total: u64 =
                    offer_counts.iter().map(|(o, c)| *o as u64 * *c as u64).sum();
                Some(total as f64 / self.n_valid as f64 / *pool as f64)
            }
            _ => None,
        }
    }

    /// Population standard deviation of the offer fraction within the setting.
    pub fn offer_fraction_std(&self) -> Option<f64> {
        match &self.payload {
            SummaryPayload::Proposer { pool, offer_counts } if self.n_valid > 0 => {
                let mean = self.mean_offer_fraction()?;
                let var: f64 = offer_counts
                    .iter()
                    .map(|(o, c)| {
                        let frac = *o as f64 / *pool as f64;
                        *c as f64 * (frac - mean).powi(2)
                    })
                    .sum::<f64>()
                    / self.n_valid as f64;
                Some(var.sqrt())
            }
            _ => None,
        }
    }

    pub fn accept_rate(&self) -> Option<f64> {
        match &self.payload {
            SummaryPayload::Responder { n_accept, .. } if self.n_valid > 0 => {
                Some(*n_accept as f64 / self.n_valid as f64)
            }
            _ => None,
        }
    }

    /// Accept rate per sure option in canonical print order.
    pub fn per_option_accept_rates(&self) -> Option<Vec<f64>> {
        match &self.payload {
            SummaryPayload::Gambling { accept_counts } if self.n_valid > 0 => Some(
                accept_counts.iter().map(|c| *c as f64 / self.n_valid as f64).collect(),
            ),
            _ => None,
        }
    }

    pub fn now_rate(&self) -> Option<f64> {
        match &self.payload {
            SummaryPayload::Waiting { n_now } if self.n_valid > 0 => {
                Some(*n_now as f64 / self.n_valid as f64)
            }
            _ => None,
        }
    }

    /// Merge another summary of the same setting into this one. Summarizing a
    /// concatenation of batches equals merging per-batch summaries.
    pub fn merge(&mut self, other: &BehaviorSummary) -> Result<(), BehaviorError> {
        if self.setting_id != other.setting_id {
            return Err(BehaviorError::PayloadMismatch(format!(
                "cannot merge {} into {}",
                other.setting_id, self.setting_id
            )));
        }
        self.n_total += other.n_total;
        self.n_valid += other.n_valid;
        match (&mut self.payload, &other.payload) {
            (
                SummaryPayload::Proposer { offer_counts, .. },
                SummaryPayload::Proposer { offer_counts: theirs, .. },
            ) => {
                for (offer, count) in theirs {
                    *offer_counts.entry(*offer).or_insert(0) += count;
                }
            }
            (
                SummaryPayload::Responder { n_accept, .. },
                SummaryPayload::Responder { n_accept: theirs, .. },
            ) => *n_accept += theirs,
            (
                SummaryPayload::Gambling { accept_counts },
                SummaryPayload::Gambling { accept_counts: theirs },
            ) => {
                for (mine, theirs) in accept_counts.iter_mut().zip(theirs) {
                    *mine += theirs;
                }
            }
            (
                SummaryPayload::Waiting { n_now },
                SummaryPayload::Waiting { n_now: theirs },
            ) => *n_now += theirs,
            _ => {
                return Err(BehaviorError::PayloadMismatch(
                    "mismatched payload kinds".into(),
                ))
            }
        }
        Ok(())
    }
}

/// Count one setting's parse outcomes into a summary. Invalid transcripts are
/// excluded from rates but kept in `n_total`.
pub fn summarize(
    setting: &GameSetting,
    outcomes: &[ParseOutcome],
) -> Result<BehaviorSummary, BehaviorError> {
    if outcomes.is_empty() {
        return Err(BehaviorError::EmptyInput);
    }
    let n_total = outcomes.len() as u32;
    let mut n_valid = 0u32;
    let payload = match setting {
        GameSetting::UltimatumProposer { pool } => {
            let mut offer_counts = BTreeMap::new();
            for outcome in outcomes {
                if let Some(Reply::Proposer { offer, .. }) = outcome.reply() {
                    n_valid += 1;
                    *offer_counts.entry(*offer).or_insert(0) += 1;
                }
            }
            SummaryPayload::Proposer { pool: *pool, offer_counts }
        }
        GameSetting::UltimatumResponder { offer, .. } => {
            let mut n_accept = 0;
            for outcome in outcomes {
                if let Some(Reply::Responder { decision, .. }) = outcome.reply() {
                    n_valid += 1;
                    if *decision == Decision::Accept {
                        n_accept += 1;
                    }
                }
            }
            SummaryPayload::Responder { offer: *offer, n_accept }
        }
        GameSetting::Gambling(g) => {
            let mut accept_counts = vec![0u32; g.sure_options.len()];
            for outcome in outcomes {
                if let Some(Reply::Gambling { decisions }) = outcome.reply() {
                    if decisions.len() == accept_counts.len() {
                        n_valid += 1;
                        for (count, decision) in accept_counts.iter_mut().zip(decisions) {
                            if *decision == Decision::Accept {
                                *count += 1;
                            }
                        }
                    }
                }
            }
            SummaryPayload::Gambling { accept_counts }
        }
        GameSetting::Waiting(_) => {
            let mut n_now = 0;
            for outcome in outcomes {
                if let Some(Reply::Waiting { choice }) = outcome.reply() {
                    n_valid += 1;
                    if *choice == TimeChoice::Now {
                        n_now += 1;
                    }
                }
            }
            SummaryPayload::Waiting { n_now }
        }
    };
    Ok(BehaviorSummary {
        setting_id: setting.id(),
        game: setting.game(),
        n_total,
        n_valid,
        payload,
    })
}

/// Run-level proposer statistics across settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub per_setting: Vec<BehaviorSummary>,
    /// Mean over settings of the per-setting mean offer fraction.
    pub e_omega: Option<f64>,
    /// Mean over settings of the within-setting offer-fraction std.
    pub e_sigma_n: Option<f64>,
    /// Std across settings of the per-setting mean offer fractions.
    pub sigma_m: Option<f64>,
}

impl RunSummary {
    pub fn from_summaries(per_setting: Vec<BehaviorSummary>) -> Self {
        let omegas: Vec<f64> =
            per_setting.iter().filter_map(|s| s.mean_offer_fraction()).collect();
        let sigmas: Vec<f64> =
            per_setting.iter().filter_map(|s| s.offer_fraction_std()).collect();
        let (e_omega, e_sigma_n, sigma_m) = if omegas.is_empty() {
            (None, None, None)
        } else {
            let mean = omegas.iter().sum::<f64>() / omegas.len() as f64;
            let var = omegas.iter().map(|w| (w - mean).powi(2)).sum::<f64>()
                / omegas.len() as f64;
            let e_sigma = sigmas.iter().sum::<f64>() / sigmas.len() as f64;
            (Some(mean), Some(e_sigma), Some(var.sqrt()))
        };
        Self { per_setting, e_omega, e_sigma_n, sigma_m }
    }
}

/// The grid value at which a rate curve crosses the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchingPoint {
    pub value: f64,
    pub censored: Censoring,
    pub threshold: f64,
}

/// Smallest value whose rate strictly exceeds `threshold`.
///
/// `curve` must be strictly ascending in value. `censored: Low` means the
/// first grid value already exceeds the threshold; `High` means none does
/// (the value is then the extreme grid point).
pub fn switching_point(
    curve: &[(f64, f64)],
    threshold: f64,
) -> Result<SwitchingPoint, BehaviorError> {
    if curve.is_empty() {
        return Err(BehaviorError::EmptyInput);
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(BehaviorError::NonMonotoneGrid(
            "values must be strictly ascending".into(),
        ));
    }
    if curve.iter().any(|(_, r)| !(0.0..=1.0).contains(r)) {
        return Err(BehaviorError::NonMonotoneGrid("rates must lie in [0, 1]".into()));
    }
    for (i, (value, rate)) in curve.iter().enumerate() {
        if *rate > threshold {
            let censored = if i == 0 { Censoring::Low } else { Censoring::None };
            return Ok(SwitchingPoint { value: *value, censored, threshold });
        }
    }
    Ok(SwitchingPoint {
        value: curve.last().expect("nonempty").0,
        censored: Censoring::High,
        threshold,
    })
}

/// A certainty or immediate equivalent located by the 50% crossing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equivalent {
    /// Setting key: the prospect id (gambling) or the delay in months
    /// (waiting).
    pub key: String,
    pub value: f64,
    pub censored: Censoring,
    /// The two grid values straddling the crossing; equal when censored.
    pub bracket: (f64, f64),
    /// More than one crossing after aggregation; the first one won.
    pub multiple_crossings: bool,
}

impl Equivalent {
    pub fn bracket_width(&self) -> f64 {
        (self.bracket.0 - self.bracket.1).abs()
    }
}

/// Walk accept/choose rates along best-to-worst values and return the
/// midpoint of the pair straddling the 50% crossing.
///
/// `points` must be strictly descending in value, with rates on the "take
/// the sure thing / take it now" side first. Censoring: `High` when even the
/// best value fails the threshold (the equivalent lies above the grid),
/// `Low` when every value passes (it lies below).
fn crossing_midpoint(
    key: String,
    points: &[(f64, f64)],
    threshold: f64,
) -> Result<Equivalent, BehaviorError> {
    if points.is_empty() {
        return Err(BehaviorError::EmptyInput);
    }
    if points.windows(2).any(|w| w[1].0 >= w[0].0) {
        return Err(BehaviorError::NonMonotoneGrid(
            "values must be strictly descending".into(),
        ));
    }
    let accepting: Vec<bool> = points.iter().map(|(_, r)| *r > threshold).collect();
    let prefix = accepting.iter().take_while(|a| **a).count();
    let multiple_crossings = accepting[prefix..].iter().any(|a| *a);
    if prefix == 0 {
        let best = points[0].0;
        return Ok(Equivalent {
            key,
            value: best,
            censored: Censoring::High,
            bracket: (best, best),
            multiple_crossings,
        });
    }
    if prefix == points.len() {
        let worst = points[points.len() - 1].0;
        return Ok(Equivalent {
            key,
            value: worst,
            censored: Censoring::Low,
            bracket: (worst, worst),
            multiple_crossings,
        });
    }
    let hi = points[prefix - 1].0;
    let lo = points[prefix].0;
    Ok(Equivalent {
        key,
        value: (hi + lo) / 2.0,
        censored: Censoring::None,
        bracket: (hi, lo),
        multiple_crossings,
    })
}

/// Certainty equivalent of a gambling setting from its per-option accept
/// rates: the midpoint of the adjacent sure options straddling the 50%
/// crossing along the best-to-worst option order.
pub fn certainty_equivalent(
    setting: &GamblingSetting,
    summary: &BehaviorSummary,
) -> Result<Equivalent, BehaviorError> {
    let rates = summary.per_option_accept_rates().ok_or_else(|| {
        BehaviorError::PayloadMismatch("expected a gambling summary with valid replies".into())
    })?;
    if rates.len() != setting.sure_options.len() {
        return Err(BehaviorError::PayloadMismatch("option count mismatch".into()));
    }
    let mut points: Vec<(f64, f64)> =
        setting.sure_options.iter().copied().zip(rates).collect();
    points.sort_by(|a, b| b.0.total_cmp(&a.0));
    crossing_midpoint(setting.prospect.id.clone(), &points, 0.5)
}

/// Immediate equivalent for one delay from (immediate amount, now-rate)
/// pairs in strictly descending amount order.
pub fn immediate_equivalent(
    delay_months: u32,
    points: &[(f64, f64)],
) -> Result<Equivalent, BehaviorError> {
    crossing_midpoint(delay_months.to_string(), points, 0.5)
}

/// One named competence check with its evidence line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetenceCheck {
    pub name: String,
    pub pass: bool,
    pub evidence: String,
}

/// Outcome of a competence test for one subject on one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetenceReport {
    pub game: GameKind,
    pub subject_id: String,
    pub validity_fraction: f64,
    pub checks: Vec<CompetenceCheck>,
    pub pass: bool,
}

const COMPETENCE_THRESHOLD: f64 = 0.8;

/// Ultimatum competence: a reply counts as valid only when it parses and its
/// stated payoffs match the arithmetic its offer or decision implies; the
/// test passes when strictly more than 80% of replies qualify.
pub fn competence_ultimatum(
    game: GameKind,
    subject_id: &str,
    n_total: u32,
    n_consistent: u32,
) -> CompetenceReport {
    let fraction = if n_total == 0 { 0.0 } else { n_consistent as f64 / n_total as f64 };
    let pass = fraction > COMPETENCE_THRESHOLD;
    CompetenceReport {
        game,
        subject_id: subject_id.to_string(),
        validity_fraction: fraction,
        checks: vec![CompetenceCheck {
            name: "arithmetic_consistency".into(),
            pass,
            evidence: format!("{n_consistent}/{n_total} replies arithmetically consistent"),
        }],
        pass,
    }
}

/// Is a single gambling reply monotone: accepts then rejects (at most one
/// switch) along the best-to-worst option order?
pub fn gambling_reply_monotone(setting: &GamblingSetting, decisions: &[Decision]) -> bool {
    if decisions.len() != setting.sure_options.len() {
        return false;
    }
    let mut pairs: Vec<(f64, bool)> = setting
        .sure_options
        .iter()
        .copied()
        .zip(decisions.iter().map(|d| *d == Decision::Accept))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let prefix = pairs.iter().take_while(|(_, accept)| *accept).count();
    pairs[prefix..].iter().all(|(_, accept)| !accept)
}

/// Gambling competence: a reply qualifies when it parses and is monotone;
/// pass requires strictly more than 80% qualifying.
pub fn competence_gambling(
    subject_id: &str,
    n_total: u32,
    n_monotone: u32,
) -> CompetenceReport {
    let fraction = if n_total == 0 { 0.0 } else { n_monotone as f64 / n_total as f64 };
    let pass = fraction > COMPETENCE_THRESHOLD;
    CompetenceReport {
        game: GameKind::Gambling,
        subject_id: subject_id.to_string(),
        validity_fraction: fraction,
        checks: vec![CompetenceCheck {
            name: "monotone_switching".into(),
            pass,
            evidence: format!("{n_monotone}/{n_total} replies monotone with one switch"),
        }],
        pass,
    }
}

/// Waiting competence: immediate equivalents must be non-increasing in delay
/// (with one grid step of slack for sampling noise at the boundary), and the
/// subject must prefer the delayed payment to nothing at every delay.
///
/// `zero_probes` holds, per delay, the fraction of valid replies choosing
/// the delayed payment when offered $0 now.
pub fn competence_waiting(
    subject_id: &str,
    validity_fraction: f64,
    ies: &[(u32, Equivalent)],
    zero_probes: &[(u32, f64)],
) -> Result<CompetenceReport, BehaviorError> {
    if ies.len() < 2 {
        return Err(BehaviorError::InsufficientDelays(format!(
            "{} delays with immediate equivalents; need at least 2",
            ies.len()
        )));
    }
    let mut sorted: Vec<&(u32, Equivalent)> = ies.iter().collect();
    sorted.sort_by_key(|(d, _)| *d);
    let mut monotone = true;
    let mut monotone_evidence = String::from("non-increasing across delays");
    for pair in sorted.windows(2) {
        let (d0, ie0) = pair[0];
        let (d1, ie1) = pair[1];
        let slack = ie0.bracket_width().max(ie1.bracket_width());
        if ie1.value > ie0.value + slack {
            monotone = false;
            monotone_evidence = format!(
                "IE rises from {:.2} (d={}) to {:.2} (d={}) beyond slack {:.2}",
                ie0.value, d0, ie1.value, d1, slack
            );
            break;
        }
    }
    let mut money_over_nothing = true;
    let mut probe_evidence = String::from("prefers delayed payment to $0 now at every delay");
    if zero_probes.is_empty() {
        // cannot certify the time-value check without the probe settings
        money_over_nothing = false;
        probe_evidence = String::from("no $0-now probe settings in the grid");
    }
    for (delay, later_rate) in zero_probes {
        if *later_rate <= 0.5 {
            money_over_nothing = false;
            probe_evidence = format!(
                "chooses $0 now over the delayed payment at d={delay} (later rate {later_rate:.2})"
            );
            break;
        }
    }
    let checks = vec![
        CompetenceCheck {
            name: "monotone_discounting".into(),
            pass: monotone,
            evidence: monotone_evidence,
        },
        CompetenceCheck {
            name: "money_over_nothing".into(),
            pass: money_over_nothing,
            evidence: probe_evidence,
        },
    ];
    let pass = validity_fraction > COMPETENCE_THRESHOLD && monotone && money_over_nothing;
    Ok(CompetenceReport {
        game: GameKind::Waiting,
        subject_id: subject_id.to_string(),
        validity_fraction,
        checks,
        pass,
    })
}
