//! Game definitions: setting grids, prompt assembly, and variants.
//!
//! Three games elicit economic behavior through text prompts: the ultimatum
//! game (played as proposer or responder), a gambling game over a battery of
//! two-outcome prospects with seven sure options each, and a waiting game
//! trading an immediate amount against a delayed payment.

mod battery;
mod templates;

pub use battery::{
    default_battery, load_battery, paper_example_setting, save_battery, sure_option_ladder,
    BatteryEntry,
};
pub use templates::{
    build_intervention_examples, build_prompt, format_delay, format_dollars_cents,
    format_percent, sure_option_phrase, waiting_option_phrases, ZERO_SHOT_COT_CUE,
};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Error)]
pub enum VariantError {
    #[error("variant not applicable: {0}")]
    NotApplicable(String),
}

/// Which game (and role) a setting, prompt, parser, or estimator belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    UltimatumProposer,
    UltimatumResponder,
    Gambling,
    Waiting,
}

impl GameKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GameKind::UltimatumProposer => "ultimatum_proposer",
            GameKind::UltimatumResponder => "ultimatum_responder",
            GameKind::Gambling => "gambling",
            GameKind::Waiting => "waiting",
        }
    }
}

/// A lottery over signed dollar outcomes with stated probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prospect {
    pub id: String,
    /// Ordered (amount, probability) pairs; amounts carry sign.
    pub outcomes: Vec<(f64, f64)>,
}

impl Prospect {
    pub fn new(id: impl Into<String>, outcomes: Vec<(f64, f64)>) -> Result<Self, GridError> {
        let prospect = Self { id: id.into(), outcomes };
        prospect.validate()?;
        Ok(prospect)
    }

    /// Skip validation; used by tests that exercise invalid prospects.
    pub fn new_unchecked(id: impl Into<String>, outcomes: Vec<(f64, f64)>) -> Self {
        Self { id: id.into(), outcomes }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.outcomes.is_empty() {
            return Err(GridError::InvalidGrid(format!("prospect {}: no outcomes", self.id)));
        }
        let total: f64 = self.outcomes.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(GridError::InvalidGrid(format!(
                "prospect {}: probabilities sum to {total}, not 1",
                self.id
            )));
        }
        if self.outcomes.iter().any(|(_, p)| !(0.0..=1.0).contains(p)) {
            return Err(GridError::InvalidGrid(format!(
                "prospect {}: probability outside [0, 1]",
                self.id
            )));
        }
        let mut nonzero: Vec<f64> =
            self.outcomes.iter().map(|(x, _)| *x).filter(|x| *x != 0.0).collect();
        nonzero.sort_by(|a, b| a.total_cmp(b));
        nonzero.dedup();
        if nonzero.len() > 2 {
            return Err(GridError::InvalidGrid(format!(
                "prospect {}: more than two distinct nonzero outcomes",
                self.id
            )));
        }
        Ok(())
    }

    pub fn expected_value(&self) -> f64 {
        self.outcomes.iter().map(|(x, p)| x * p).sum()
    }

    pub fn min_outcome(&self) -> f64 {
        self.outcomes.iter().map(|(x, _)| *x).fold(f64::INFINITY, f64::min)
    }

    pub fn max_outcome(&self) -> f64 {
        self.outcomes.iter().map(|(x, _)| *x).fold(f64::NEG_INFINITY, f64::max)
    }

    /// All nonzero outcomes are gains.
    pub fn is_gain(&self) -> bool {
        self.outcomes.iter().all(|(x, _)| *x >= 0.0)
    }

    /// All nonzero outcomes are losses.
    pub fn is_loss(&self) -> bool {
        self.outcomes.iter().all(|(x, _)| *x <= 0.0)
    }

    pub fn is_mixed(&self) -> bool {
        !self.is_gain() && !self.is_loss()
    }
}

/// One gambling turn: a prospect compared against seven sure options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamblingSetting {
    pub prospect: Prospect,
    /// Exactly seven sure amounts, in the order they are printed in the
    /// prompt: ascending for gains, best-first (descending) for losses and
    /// mixed prospects.
    pub sure_options: Vec<f64>,
    pub expected_value: f64,
}

impl GamblingSetting {
    pub fn new(prospect: Prospect, sure_options: Vec<f64>) -> Result<Self, GridError> {
        prospect.validate()?;
        if sure_options.len() != 7 {
            return Err(GridError::InvalidGrid(format!(
                "prospect {}: {} sure options, expected 7",
                prospect.id,
                sure_options.len()
            )));
        }
        let ascending = prospect.is_gain();
        for pair in sure_options.windows(2) {
            let ok = if ascending { pair[1] > pair[0] } else { pair[1] < pair[0] };
            if !ok {
                return Err(GridError::InvalidGrid(format!(
                    "prospect {}: sure options not strictly monotone",
                    prospect.id
                )));
            }
        }
        let lo = sure_options.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = sure_options.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if (lo - prospect.min_outcome()).abs() > 0.005 || (hi - prospect.max_outcome()).abs() > 0.005 {
            return Err(GridError::InvalidGrid(format!(
                "prospect {}: sure options [{lo}, {hi}] do not span the outcomes",
                prospect.id
            )));
        }
        let expected_value = prospect.expected_value();
        Ok(Self { prospect, sure_options, expected_value })
    }

    /// Sure options ordered best-to-worst for the subject (highest first).
    pub fn options_best_to_worst(&self) -> Vec<f64> {
        let mut v = self.sure_options.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

/// One waiting turn: an immediate amount against a delayed payment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WaitingSetting {
    pub delayed_amount: u32,
    pub delay_months: u32,
    pub immediate_amount: u32,
    /// Distance to the adjacent immediate amount in the enclosing grid;
    /// synthetic response noise shifts the decision boundary by this step.
    pub grid_step: u32,
}

impl WaitingSetting {
    pub fn new(delayed_amount: u32, delay_months: u32, immediate_amount: u32, grid_step: u32) -> Result<Self, GridError> {
        if delay_months == 0 {
            return Err(GridError::InvalidGrid("delay must be positive".into()));
        }
        if immediate_amount > delayed_amount {
            return Err(GridError::InvalidGrid(format!(
                "immediate amount {immediate_amount} exceeds delayed amount {delayed_amount}"
            )));
        }
        if grid_step == 0 {
            return Err(GridError::InvalidGrid("grid step must be positive".into()));
        }
        Ok(Self { delayed_amount, delay_months, immediate_amount, grid_step })
    }
}

/// One playable configuration of a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameSetting {
    UltimatumProposer { pool: u32 },
    UltimatumResponder { pool: u32, offer: u32 },
    Gambling(GamblingSetting),
    Waiting(WaitingSetting),
}

impl GameSetting {
    pub fn game(&self) -> GameKind {
        match self {
            GameSetting::UltimatumProposer { .. } => GameKind::UltimatumProposer,
            GameSetting::UltimatumResponder { .. } => GameKind::UltimatumResponder,
            GameSetting::Gambling(_) => GameKind::Gambling,
            GameSetting::Waiting(_) => GameKind::Waiting,
        }
    }

    /// Stable identifier, unique within a run.
    pub fn id(&self) -> String {
        match self {
            GameSetting::UltimatumProposer { pool } => format!("up-p{pool}"),
            GameSetting::UltimatumResponder { pool, offer } => format!("ur-p{pool}-o{offer}"),
            GameSetting::Gambling(g) => format!("g-{}", g.prospect.id),
            GameSetting::Waiting(w) => format!("w-d{}-x{}", w.delay_months, w.immediate_amount),
        }
    }
}

/// Grid specification for one game; drives [`enumerate_settings`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    UltimatumProposer { pools: Vec<u32> },
    UltimatumResponder { pool: u32, offers: Vec<u32> },
    Gambling { battery: Vec<BatteryEntry> },
    Waiting(WaitingGrid),
}

impl GridSpec {
    pub fn game(&self) -> GameKind {
        match self {
            GridSpec::UltimatumProposer { .. } => GameKind::UltimatumProposer,
            GridSpec::UltimatumResponder { .. } => GameKind::UltimatumResponder,
            GridSpec::Gambling { .. } => GameKind::Gambling,
            GridSpec::Waiting(_) => GameKind::Waiting,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitingGrid {
    pub delayed_amount: u32,
    pub delays_months: Vec<u32>,
    /// Immediate amounts in strictly descending order.
    pub immediate_amounts: Vec<u32>,
}

/// The default waiting grid: 7 delays from one month to fifty years crossed
/// with 31 immediate amounts (30 log-spaced from the delayed amount down to
/// 1% of it, plus zero), giving 217 settings.
pub fn default_waiting_grid() -> WaitingGrid {
    let delayed_amount = 1000u32;
    let mut immediate_amounts = Vec::with_capacity(31);
    for i in 0..30 {
        let value = 1000.0 * 10f64.powf(-2.0 * i as f64 / 29.0);
        immediate_amounts.push(value.round() as u32);
    }
    immediate_amounts.push(0);
    WaitingGrid {
        delayed_amount,
        delays_months: vec![1, 6, 12, 60, 120, 300, 600],
        immediate_amounts,
    }
}

/// A dense linear waiting grid (step one dollar) for high-resolution
/// parameter-recovery runs.
pub fn fine_waiting_grid(delays_months: Vec<u32>) -> WaitingGrid {
    WaitingGrid {
        delayed_amount: 1000,
        delays_months,
        immediate_amounts: (0..=1000).rev().collect(),
    }
}

/// The default ultimatum grids: proposer pools $2..$10, responder offers
/// $0..$10 on a $10 pool.
pub fn default_proposer_pools() -> Vec<u32> {
    (2..=10).collect()
}

pub fn default_responder_offers() -> (u32, Vec<u32>) {
    (10, (0..=10).collect())
}

/// Expand a grid specification into a deterministic, duplicate-free list of
/// settings in canonical order.
pub fn enumerate_settings(grid: &GridSpec) -> Result<Vec<GameSetting>, GridError> {
    let settings = match grid {
        GridSpec::UltimatumProposer { pools } => {
            if pools.is_empty() {
                return Err(GridError::InvalidGrid("empty pool list".into()));
            }
            if pools.iter().any(|p| *p < 1) {
                return Err(GridError::InvalidGrid("pool must be at least $1".into()));
            }
            pools.iter().map(|&pool| GameSetting::UltimatumProposer { pool }).collect()
        }
        GridSpec::UltimatumResponder { pool, offers } => {
            if offers.is_empty() {
                return Err(GridError::InvalidGrid("empty offer list".into()));
            }
            if *pool < 1 {
                return Err(GridError::InvalidGrid("pool must be at least $1".into()));
            }
            if offers.iter().any(|o| o > pool) {
                return Err(GridError::InvalidGrid(format!("offer exceeds pool {pool}")));
            }
            offers
                .iter()
                .map(|&offer| GameSetting::UltimatumResponder { pool: *pool, offer })
                .collect()
        }
        GridSpec::Gambling { battery } => {
            if battery.is_empty() {
                return Err(GridError::InvalidGrid("empty battery".into()));
            }
            battery
                .iter()
                .map(|entry| entry.to_setting().map(GameSetting::Gambling))
                .collect::<Result<Vec<_>, _>>()?
        }
        GridSpec::Waiting(grid) => {
            if grid.delays_months.is_empty() {
                return Err(GridError::InvalidGrid("empty delay list".into()));
            }
            let amounts = &grid.immediate_amounts;
            if amounts.len() < 2 {
                return Err(GridError::InvalidGrid("need at least two immediate amounts".into()));
            }
            if amounts.windows(2).any(|w| w[1] >= w[0]) {
                return Err(GridError::InvalidGrid(
                    "immediate amounts must be strictly descending".into(),
                ));
            }
            let mut settings = Vec::with_capacity(grid.delays_months.len() * amounts.len());
            for &delay in &grid.delays_months {
                for (i, &amount) in amounts.iter().enumerate() {
                    let step = if i + 1 < amounts.len() {
                        amounts[i] - amounts[i + 1]
                    } else {
                        amounts[i - 1] - amounts[i]
                    };
                    settings.push(GameSetting::Waiting(WaitingSetting::new(
                        grid.delayed_amount,
                        delay,
                        amount,
                        step.max(1),
                    )?));
                }
            }
            settings
        }
    };
    let mut ids: Vec<String> = settings.iter().map(|s| s.id()).collect();
    ids.sort();
    let before = ids.len();
    ids.dedup();
    if ids.len() != before {
        return Err(GridError::InvalidGrid("duplicate settings in grid".into()));
    }
    Ok(settings)
}

/// Answer-format ablation: the canonical field set or the reduced one
/// (free-text reason field dropped).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatAblation {
    #[default]
    Canonical,
    ReducedFields,
}

/// Reordering (and optional relabeling) of the multiple-choice options in the
/// user prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceAblation {
    /// `order[i]` is the canonical index printed at position `i`.
    pub order: Vec<usize>,
    /// Positional labels for labeled games (waiting); defaults to A, B, ...
    pub labels: Option<Vec<String>>,
}

impl ChoiceAblation {
    pub fn new(order: Vec<usize>) -> Self {
        Self { order, labels: None }
    }

    pub fn is_permutation_of(&self, n: usize) -> bool {
        if self.order.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &i in &self.order {
            if i >= n || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectStance {
    Averse,
    NotAverse,
    Seeking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasDimension {
    Risk,
    Loss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleKind {
    Gain,
    Loss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PersonaMode {
    RolePlay,
    Advice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgeGroup {
    Teenager,
    MiddleAged,
    Senior,
}

/// Prompting intervention applied on top of the canonical templates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intervention {
    #[default]
    None,
    /// A declarative stance sentence prepended to the premise.
    Direct { stance: DirectStance, dimension: BiasDimension },
    /// Step-by-step reasoning cue appended to the instructions.
    ZeroShotCot,
    /// One worked example appended after the answer format.
    OneShot { example: ExampleKind, order_seed: u64 },
    /// One gain and one loss example appended after the answer format.
    TwoShot { order_seed: u64 },
    /// Role-play or advice framing replacing the premise.
    Persona { mode: PersonaMode, age: AgeGroup },
}

/// Everything that perturbs a canonical prompt, plus the sampling temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub format_ablation: FormatAblation,
    pub choice_ablation: Option<ChoiceAblation>,
    pub intervention: Intervention,
    pub temperature: f64,
}

impl Default for VariantSpec {
    fn default() -> Self {
        Self::canonical()
    }
}

impl VariantSpec {
    /// The unablated, no-intervention variant at temperature 1.
    pub fn canonical() -> Self {
        Self {
            format_ablation: FormatAblation::Canonical,
            choice_ablation: None,
            intervention: Intervention::None,
            temperature: 1.0,
        }
    }

    /// Stable identifier used to key transcripts.
    pub fn id(&self) -> String {
        let mut parts = Vec::new();
        if self.format_ablation == FormatAblation::ReducedFields {
            parts.push("fmt-reduced".to_string());
        }
        if let Some(ablation) = &self.choice_ablation {
            let order: String = ablation.order.iter().map(|i| i.to_string()).collect();
            parts.push(format!("perm-{order}"));
        }
        match &self.intervention {
            Intervention::None => {}
            Intervention::Direct { stance, dimension } => {
                let s = match stance {
                    DirectStance::Averse => "averse",
                    DirectStance::NotAverse => "notaverse",
                    DirectStance::Seeking => "seeking",
                };
                let d = match dimension {
                    BiasDimension::Risk => "risk",
                    BiasDimension::Loss => "loss",
                };
                parts.push(format!("direct-{d}-{s}"));
            }
            Intervention::ZeroShotCot => parts.push("cot".to_string()),
            Intervention::OneShot { example, order_seed } => {
                let e = match example {
                    ExampleKind::Gain => "gain",
                    ExampleKind::Loss => "loss",
                };
                parts.push(format!("oneshot-{e}-s{order_seed}"));
            }
            Intervention::TwoShot { order_seed } => parts.push(format!("twoshot-s{order_seed}")),
            Intervention::Persona { mode, age } => {
                let m = match mode {
                    PersonaMode::RolePlay => "roleplay",
                    PersonaMode::Advice => "advice",
                };
                let a = match age {
                    AgeGroup::Teenager => "teen",
                    AgeGroup::MiddleAged => "middle",
                    AgeGroup::Senior => "senior",
                };
                parts.push(format!("persona-{m}-{a}"));
            }
        }
        if self.temperature != 1.0 {
            parts.push(format!("t{}", self.temperature));
        }
        if parts.is_empty() {
            "canonical".to_string()
        } else {
            parts.join("+")
        }
    }
}

/// Fully rendered prompt text for one setting under one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub game: GameKind,
    pub setting_id: String,
    pub variant: VariantSpec,
    pub premise: String,
    pub instructions: String,
    pub answer_format: String,
    pub user_prompt: String,
}

impl PromptBundle {
    /// The system-role text: premise, instructions, and answer format joined
    /// by blank lines.
    pub fn system_text(&self) -> String {
        format!("{}\n\n{}\n\n{}", self.premise, self.instructions, self.answer_format)
    }

    /// Digest of the rendered prompt bytes; identical inputs yield identical
    /// fingerprints.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.system_text().as_bytes());
        hasher.update([0u8]);
        hasher.update(self.user_prompt.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn variant_id(&self) -> String {
        self.variant.id()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn responder_grid_counts() {
        let (pool, offers) = default_responder_offers();
        let settings =
            enumerate_settings(&GridSpec::UltimatumResponder { pool, offers }).unwrap();
        assert_eq!(settings.len(), 11);
        assert_eq!(settings[0].id(), "ur-p10-o0");
        assert_eq!(settings[10].id(), "ur-p10-o10");
    }

    #[test]
    fn default_waiting_grid_has_217_settings() {
        let grid = default_waiting_grid();
        assert_eq!(grid.immediate_amounts.len(), 31);
        let settings = enumerate_settings(&GridSpec::Waiting(grid)).unwrap();
        assert_eq!(settings.len(), 217);
    }

    #[test]
    fn default_battery_has_56_settings() {
        let settings =
            enumerate_settings(&GridSpec::Gambling { battery: default_battery() }).unwrap();
        assert_eq!(settings.len(), 56);
    }

    #[test]
    fn offer_beyond_pool_is_invalid() {
        let err = enumerate_settings(&GridSpec::UltimatumResponder {
            pool: 10,
            offers: vec![0, 11],
        });
        assert!(matches!(err, Err(GridError::InvalidGrid(_))));
    }

    #[test]
    fn empty_ranges_are_invalid() {
        assert!(enumerate_settings(&GridSpec::UltimatumProposer { pools: vec![] }).is_err());
        assert!(enumerate_settings(&GridSpec::Waiting(WaitingGrid {
            delayed_amount: 1000,
            delays_months: vec![],
            immediate_amounts: vec![1000, 0],
        }))
        .is_err());
    }

    #[test]
    fn non_monotone_amounts_are_invalid() {
        assert!(enumerate_settings(&GridSpec::Waiting(WaitingGrid {
            delayed_amount: 1000,
            delays_months: vec![1],
            immediate_amounts: vec![1000, 500, 700, 0],
        }))
        .is_err());
    }

    #[test]
    fn prospect_invariants() {
        assert!(Prospect::new("a", vec![(50.0, 0.5), (0.0, 0.5)]).is_ok());
        assert!(Prospect::new("b", vec![(50.0, 0.5), (0.0, 0.4)]).is_err());
        assert!(Prospect::new("c", vec![(10.0, 0.3), (20.0, 0.3), (30.0, 0.4)]).is_err());
    }

    #[test]
    fn choice_ablation_permutation_check() {
        assert!(ChoiceAblation::new(vec![1, 0]).is_permutation_of(2));
        assert!(!ChoiceAblation::new(vec![1, 1]).is_permutation_of(2));
        assert!(!ChoiceAblation::new(vec![0, 1, 2]).is_permutation_of(2));
    }

    #[test]
    fn variant_ids_are_stable() {
        assert_eq!(VariantSpec::canonical().id(), "canonical");
        let mut v = VariantSpec::canonical();
        v.format_ablation = FormatAblation::ReducedFields;
        v.temperature = 0.0;
        assert_eq!(v.id(), "fmt-reduced+t0");
    }
}
