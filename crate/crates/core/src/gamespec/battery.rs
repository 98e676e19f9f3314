//! The gambling battery: prospects plus their sure-option ladders.
//!
//! The default battery holds 56 two-outcome prospects: 24 gains, their 24
//! mirrored losses, and 8 mixed prospects. One loss entry is the published
//! worked example with its exact sure-option list; its ladder comes from the
//! log-gap generator below. Every other entry carries explicit sure options
//! placed to bracket the certainty equivalents of two reference agents (the
//! risk-neutral benchmark and the median human parameters from the classic
//! elicitation study) tightly and symmetrically. That is a static stand-in
//! for the two-stage refinement used in the original elicitation design: it
//! keeps the seven-option single-turn protocol while making midpoint
//! extraction nearly exact for the reference agents.

use serde::{Deserialize, Serialize};

use super::{GamblingSetting, GridError, Prospect};
use crate::estimation::cpt::{predict_ce, CptParams};

/// One battery record: a prospect and, optionally, explicit sure options in
/// print order. Entries without explicit options use [`sure_option_ladder`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryEntry {
    pub prospect: Prospect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sure_options: Option<Vec<f64>>,
}

impl BatteryEntry {
    pub fn to_setting(&self) -> Result<GamblingSetting, GridError> {
        let options = match &self.sure_options {
            Some(options) => options.clone(),
            None => default_ladder_for(&self.prospect),
        };
        GamblingSetting::new(self.prospect.clone(), options)
    }
}

fn round_cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Seven sure options from `a` to `b` with geometrically growing gaps
/// (ratio 10^(1/6) ~ 1.47), rounded to cents.
///
/// For the span -50 to -100 this reproduces the published list:
/// -50.00, -52.60, -56.41, -62.01, -70.23, -82.29, -100.00.
pub fn sure_option_ladder(a: f64, b: f64) -> Vec<f64> {
    (0..7)
        .map(|j| round_cents(a + (b - a) * (10f64.powf(j as f64 / 6.0) - 1.0) / 9.0))
        .collect()
}

/// Ladder endpoints in print order: gains run from the outcome nearest zero
/// up to the extreme; losses and mixed prospects run best-first.
fn default_ladder_for(prospect: &Prospect) -> Vec<f64> {
    let lo = prospect.min_outcome();
    let hi = prospect.max_outcome();
    if prospect.is_gain() {
        sure_option_ladder(lo, hi)
    } else {
        sure_option_ladder(hi, lo)
    }
}

/// Reference agents anchoring the calibrated ladders.
fn reference_agents() -> [CptParams; 2] {
    [CptParams::rational(), CptParams::new(0.88, 0.88, 2.25, 0.61, 0.69)]
}

/// Explicit sure options bracketing both reference agents' certainty
/// equivalents with symmetric +-delta pairs, filled out to seven points by
/// splitting the largest gaps.
fn calibrated_options(prospect: &Prospect) -> Vec<f64> {
    let lo = prospect.min_outcome();
    let hi = prospect.max_outcome();
    let span = hi - lo;
    let [rational, human] = reference_agents();
    let ce_r = predict_ce(&rational, prospect).expect("battery prospect is well-formed");
    let ce_h = predict_ce(&human, prospect).expect("battery prospect is well-formed");

    let mut points = vec![round_cents(lo), round_cents(hi)];
    let gap = (ce_r - ce_h).abs();
    if gap < 0.08 {
        let delta = (round_cents(span * 0.015)).max(0.05);
        let mid = (ce_r + ce_h) / 2.0;
        points.push(round_cents(mid - delta));
        points.push(round_cents(mid + delta));
    } else {
        let delta = (round_cents(span * 0.015)).max(0.05).min((round_cents(gap / 4.0)).max(0.02));
        for ce in [ce_r, ce_h] {
            points.push(round_cents(ce - delta));
            points.push(round_cents(ce + delta));
        }
    }
    points.sort_by(|a, b| a.total_cmp(b));
    points.dedup();

    while points.len() < 7 {
        let (mut widest, mut at) = (f64::NEG_INFINITY, 0);
        for i in 0..points.len() - 1 {
            let width = points[i + 1] - points[i];
            if width > widest {
                widest = width;
                at = i;
            }
        }
        let mut candidate = round_cents((points[at] + points[at + 1]) / 2.0);
        for ce in [ce_r, ce_h] {
            if (candidate - ce).abs() < 0.02 {
                candidate = round_cents(candidate + 0.05);
            }
        }
        points.push(candidate);
        points.sort_by(|a, b| a.total_cmp(b));
        points.dedup();
    }

    if prospect.is_gain() {
        points
    } else {
        points.reverse();
        points
    }
}

fn complement(p: f64) -> f64 {
    ((1.0 - p) * 1e6).round() / 1e6
}

fn pair(x: f64, q_extreme: f64) -> Vec<(f64, f64)> {
    vec![(x / 2.0, complement(q_extreme)), (x, q_extreme)]
}

fn single(x: f64, p: f64) -> Vec<(f64, f64)> {
    vec![(x, p), (0.0, complement(p))]
}

fn mirrored(outcomes: &[(f64, f64)]) -> Vec<(f64, f64)> {
    outcomes.iter().map(|(x, p)| (-x, *p)).collect()
}

/// The published worked example: lose 50 with 10% probability, lose 100 with
/// 90%, compared against the exact seven-option list from the study.
pub(crate) fn paper_example_entry() -> BatteryEntry {
    BatteryEntry {
        prospect: Prospect::new("lp100-90", vec![(-50.0, 0.1), (-100.0, 0.9)])
            .expect("static prospect is valid"),
        sure_options: Some(sure_option_ladder(-50.0, -100.0)),
    }
}

/// The worked-example entry as a ready-to-play setting.
pub fn paper_example_setting() -> GamblingSetting {
    paper_example_entry().to_setting().expect("static entry is valid")
}

/// The default 56-prospect battery.
pub fn default_battery() -> Vec<BatteryEntry> {
    let mut gains: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for q in [0.03f64, 0.09, 0.18, 0.32, 0.53, 0.82] {
        gains.push((format!("gp100-{:02}", (q * 100.0).round() as u32), pair(100.0, q)));
    }
    for q in [0.09f64, 0.32, 0.53, 0.82] {
        gains.push((format!("gp200-{:02}", (q * 100.0).round() as u32), pair(200.0, q)));
    }
    for q in [0.18f64, 0.53] {
        gains.push((format!("gp60-{:02}", (q * 100.0).round() as u32), pair(60.0, q)));
    }
    for p in [0.05f64, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95] {
        gains.push((format!("gs100-{:02}", (p * 100.0).round() as u32), single(100.0, p)));
    }
    for p in [0.10f64, 0.50, 0.90] {
        gains.push((format!("gs200-{:02}", (p * 100.0).round() as u32), single(200.0, p)));
    }
    gains.push(("gs50-50".to_string(), single(50.0, 0.50)));
    gains.push(("gp100-90".to_string(), pair(100.0, 0.90)));
    debug_assert_eq!(gains.len(), 24);

    let losses: Vec<(String, Vec<(f64, f64)>)> = gains
        .iter()
        .map(|(id, outs)| (id.replacen('g', "l", 1), mirrored(outs)))
        .collect();

    let mixed: Vec<(String, Vec<(f64, f64)>)> = vec![
        ("m100-50".into(), vec![(100.0, 0.5), (-50.0, 0.5)]),
        ("m100-100".into(), vec![(100.0, 0.5), (-100.0, 0.5)]),
        ("m150-75".into(), vec![(150.0, 0.5), (-75.0, 0.5)]),
        ("m150-150".into(), vec![(150.0, 0.5), (-150.0, 0.5)]),
        ("m200-100".into(), vec![(200.0, 0.5), (-100.0, 0.5)]),
        ("m200-200".into(), vec![(200.0, 0.5), (-200.0, 0.5)]),
        ("m50-25".into(), vec![(50.0, 0.5), (-25.0, 0.5)]),
        ("m50-50".into(), vec![(50.0, 0.5), (-50.0, 0.5)]),
    ];

    let mut battery = Vec::with_capacity(56);
    for (id, outcomes) in gains.into_iter().chain(losses).chain(mixed) {
        if id == "lp100-90" {
            battery.push(paper_example_entry());
            continue;
        }
        let prospect = Prospect::new(id, outcomes).expect("static battery prospect is valid");
        let sure_options = Some(calibrated_options(&prospect));
        battery.push(BatteryEntry { prospect, sure_options });
    }
    battery
}

#[derive(Serialize, Deserialize)]
struct BatteryFile {
    #[serde(rename = "prospect")]
    prospects: Vec<BatteryEntry>,
}

/// Load a battery from a TOML file with one `[[prospect]]` table per record.
pub fn load_battery(text: &str) -> Result<Vec<BatteryEntry>, GridError> {
    let file: BatteryFile = toml::from_str(text)
        .map_err(|e| GridError::InvalidGrid(format!("battery file: {e}")))?;
    for entry in &file.prospects {
        entry.to_setting()?;
    }
    Ok(file.prospects)
}

/// Serialize a battery to the TOML file format.
pub fn save_battery(battery: &[BatteryEntry]) -> String {
    let file = BatteryFile { prospects: battery.to_vec() };
    toml::to_string(&file).expect("battery serializes")
}
