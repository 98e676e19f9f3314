//! Run configuration: subjects, game grids, prompt variants, sampling, and
//! the cited human reference parameters.
//!
//! Configs are TOML. Grids and the gambling battery may be spelled out
//! inline, reference the built-in defaults, or point at a battery file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use econprobe_core::gamespec::{
    default_battery, default_proposer_pools, default_responder_offers, default_waiting_grid,
    load_battery, AgeGroup, BiasDimension, ChoiceAblation, DirectStance, ExampleKind,
    FormatAblation, GameKind, GridSpec, Intervention, PersonaMode, VariantSpec, WaitingGrid,
};
use econprobe_core::subjects::SubjectSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub master_seed: u64,
    /// Samples per setting and variant; a variant may override it.
    pub n_samples: u32,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub subjects: Vec<SubjectSpec>,
    pub games: Vec<GameConfig>,
    /// Prompt variants to run; empty means canonical only.
    #[serde(default)]
    pub variants: Vec<VariantConfig>,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub human_reference: HumanReference,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_points_per_setting: usize,
    pub n_reps: usize,
    /// Bootstrap the nonlinear fits too (slower).
    pub nonlinear: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { n_points_per_setting: 10, n_reps: 50, nonlinear: false }
    }
}

/// Grid or battery selection for one game.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameConfig {
    UltimatumProposer {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pools: Option<Vec<u32>>,
    },
    UltimatumResponder {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pool: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offers: Option<Vec<u32>>,
    },
    Gambling {
        /// "default" or a path to a battery TOML file.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        battery: Option<String>,
    },
    Waiting {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delayed_amount: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delays_months: Option<Vec<u32>>,
        /// Strictly descending; omitted means the default log-spaced grid.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        immediate_amounts: Option<Vec<u32>>,
    },
}

impl GameConfig {
    pub fn game(&self) -> GameKind {
        match self {
            GameConfig::UltimatumProposer { .. } => GameKind::UltimatumProposer,
            GameConfig::UltimatumResponder { .. } => GameKind::UltimatumResponder,
            GameConfig::Gambling { .. } => GameKind::Gambling,
            GameConfig::Waiting { .. } => GameKind::Waiting,
        }
    }

    /// Resolve into a grid; `base_dir` anchors relative battery paths.
    pub fn to_grid(&self, base_dir: &Path) -> Result<GridSpec> {
        Ok(match self {
            GameConfig::UltimatumProposer { pools } => GridSpec::UltimatumProposer {
                pools: pools.clone().unwrap_or_else(default_proposer_pools),
            },
            GameConfig::UltimatumResponder { pool, offers } => {
                let (default_pool, default_offers) = default_responder_offers();
                GridSpec::UltimatumResponder {
                    pool: pool.unwrap_or(default_pool),
                    offers: offers.clone().unwrap_or(default_offers),
                }
            }
            GameConfig::Gambling { battery } => {
                let battery = match battery.as_deref() {
                    None | Some("default") => default_battery(),
                    Some(path) => {
                        let full = base_dir.join(path);
                        let text = std::fs::read_to_string(&full)
                            .with_context(|| format!("reading battery file {}", full.display()))?;
                        load_battery(&text)?
                    }
                };
                GridSpec::Gambling { battery }
            }
            GameConfig::Waiting { delayed_amount, delays_months, immediate_amounts } => {
                let default = default_waiting_grid();
                GridSpec::Waiting(WaitingGrid {
                    delayed_amount: delayed_amount.unwrap_or(default.delayed_amount),
                    delays_months: delays_months.clone().unwrap_or(default.delays_months),
                    immediate_amounts: immediate_amounts
                        .clone()
                        .unwrap_or(default.immediate_amounts),
                })
            }
        })
    }
}

/// TOML-friendly variant description.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VariantConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// "canonical" (default) or "reduced".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice_order: Option<Vec<usize>>,
    /// none | cot | direct | one_shot | two_shot | persona
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervention: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<String>,
}

impl VariantConfig {
    pub fn to_variant(&self) -> Result<VariantSpec> {
        let format_ablation = match self.format.as_deref() {
            None | Some("canonical") => FormatAblation::Canonical,
            Some("reduced") => FormatAblation::ReducedFields,
            Some(other) => bail!("unknown format ablation {other:?}"),
        };
        let intervention = match self.intervention.as_deref() {
            None | Some("none") => Intervention::None,
            Some("cot") | Some("zero_shot_cot") => Intervention::ZeroShotCot,
            Some("direct") => {
                let stance = match self.stance.as_deref() {
                    Some("averse") => DirectStance::Averse,
                    Some("not_averse") => DirectStance::NotAverse,
                    Some("seeking") => DirectStance::Seeking,
                    other => bail!("direct intervention needs stance averse|not_averse|seeking, got {other:?}"),
                };
                let dimension = match self.dimension.as_deref() {
                    Some("risk") => BiasDimension::Risk,
                    Some("loss") => BiasDimension::Loss,
                    other => bail!("direct intervention needs dimension risk|loss, got {other:?}"),
                };
                Intervention::Direct { stance, dimension }
            }
            Some("one_shot") => {
                let example = match self.example.as_deref() {
                    Some("gain") => ExampleKind::Gain,
                    Some("loss") => ExampleKind::Loss,
                    other => bail!("one_shot needs example gain|loss, got {other:?}"),
                };
                Intervention::OneShot { example, order_seed: self.order_seed.unwrap_or(0) }
            }
            Some("two_shot") => {
                Intervention::TwoShot { order_seed: self.order_seed.unwrap_or(0) }
            }
            Some("persona") => {
                let mode = match self.mode.as_deref() {
                    Some("role_play") => PersonaMode::RolePlay,
                    Some("advice") => PersonaMode::Advice,
                    other => bail!("persona needs mode role_play|advice, got {other:?}"),
                };
                let age = match self.age.as_deref() {
                    Some("teenager") => AgeGroup::Teenager,
                    Some("middle_aged") => AgeGroup::MiddleAged,
                    Some("senior") => AgeGroup::Senior,
                    other => bail!("persona needs age teenager|middle_aged|senior, got {other:?}"),
                };
                Intervention::Persona { mode, age }
            }
            Some(other) => bail!("unknown intervention {other:?}"),
        };
        Ok(VariantSpec {
            format_ablation,
            choice_ablation: self.choice_order.clone().map(ChoiceAblation::new),
            intervention,
            temperature: self.temperature.unwrap_or(1.0),
        })
    }
}

/// Cited human parameter values, stored as configuration with their sources;
/// the harness never recomputes them.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HumanReference {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fehr_schmidt: Option<FsReference>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpt: Option<CptReference>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperbolic: Option<HyperbolicReference>,
}

impl HumanReference {
    /// Median estimates from the classic elicitation studies, with sources.
    pub fn classic() -> Self {
        Self {
            fehr_schmidt: Some(FsReference {
                alpha: 0.85,
                beta: 0.315,
                source: "Fehr & Schmidt (1999), distribution means, QJE 114(3)".into(),
            }),
            cpt: Some(CptReference {
                alpha: 0.88,
                beta: 0.88,
                lambda: 2.25,
                phi_plus: 0.61,
                phi_minus: 0.69,
                source: "Tversky & Kahneman (1992), median estimates, JRU 5(4)".into(),
            }),
            hyperbolic: Some(HyperbolicReference {
                k_per_month: 0.01,
                source: "Rachlin, Raineri & Cross (1991), monetary discounting, JEAB 55(2)"
                    .into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FsReference {
    pub alpha: f64,
    pub beta: f64,
    pub source: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CptReference {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub phi_plus: f64,
    pub phi_minus: f64,
    pub source: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperbolicReference {
    pub k_per_month: f64,
    pub source: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = toml::from_str(&text).context("parsing config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            bail!("n_samples must be at least 1");
        }
        if self.subjects.is_empty() {
            bail!("at least one subject is required");
        }
        if self.games.is_empty() {
            bail!("at least one game is required");
        }
        let mut ids: Vec<&str> = self.subjects.iter().map(|s| s.id.as_str()).collect();
        ids.sort();
        let count = ids.len();
        ids.dedup();
        if ids.len() != count {
            bail!("subject ids must be unique");
        }
        for subject in &self.subjects {
            if subject.id.is_empty()
                || !subject.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            {
                bail!("subject id {:?} must be nonempty [A-Za-z0-9_-]", subject.id);
            }
        }
        for variant in &self.variants {
            variant.to_variant()?;
        }
        if let Some(reference) = &self.human_reference.fehr_schmidt {
            if reference.source.trim().is_empty() {
                bail!("human reference values must carry a source citation");
            }
        }
        if let Some(reference) = &self.human_reference.cpt {
            if reference.source.trim().is_empty() {
                bail!("human reference values must carry a source citation");
            }
        }
        if let Some(reference) = &self.human_reference.hyperbolic {
            if reference.source.trim().is_empty() {
                bail!("human reference values must carry a source citation");
            }
        }
        Ok(())
    }

    /// Variants to run: the configured list, or canonical when none given.
    pub fn variant_specs(&self) -> Result<Vec<(String, VariantSpec, u32)>> {
        if self.variants.is_empty() {
            return Ok(vec![("canonical".into(), VariantSpec::canonical(), self.n_samples)]);
        }
        self.variants
            .iter()
            .map(|vc| {
                let spec = vc.to_variant()?;
                let name = vc.name.clone().unwrap_or_else(|| spec.id());
                Ok((name, spec, vc.n_samples.unwrap_or(self.n_samples)))
            })
            .collect()
    }

    /// Digest of the canonical serialized config.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = toml::to_string(self).unwrap_or_default();
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn all_synthetic(&self) -> bool {
        self.subjects.iter().all(|s| s.is_synthetic())
    }
}
