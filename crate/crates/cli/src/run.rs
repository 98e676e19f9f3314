//! Pipeline orchestration: enumerate settings, render prompts, sample
//! subjects, parse, aggregate, run competence tests, and (for subjects that
//! pass) fit the utility models.
//!
//! Estimation is gated on competence: no fitted parameters are emitted for a
//! subject and game whose competence report fails. Estimation always reads
//! the canonical variant's transcripts; ablation and intervention variants
//! are sampled, summarized, and reported for robustness comparison.
//!
//! Point fits are seeded from a fixed constant (plus subject and model tags)
//! so replaying the same transcripts under a different master seed
//! reproduces point estimates bit-for-bit; only bootstrap resampling draws
//! from the master seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use econprobe_core::behavior::{
    certainty_equivalent, competence_gambling, competence_ultimatum, competence_waiting,
    gambling_reply_monotone, immediate_equivalent, summarize, BehaviorSummary, Censoring,
    CompetenceReport, Equivalent, RunSummary,
};
use econprobe_core::estimation::cpt::CptParams;
use econprobe_core::estimation::{
    bootstrap_ci, fit_cpt, fit_hyperbolic, fs_bootstrap, BootstrapCi,
    DiscountParams, EstimationError, FsObservations, FsParams,
};
use econprobe_core::gamespec::{
    build_prompt, enumerate_settings, GameKind, GameSetting, GridSpec, VariantError, VariantSpec,
};
use econprobe_core::parse::{parse_response, Decision, ParseOutcome, Reply};
use econprobe_core::subjects::{sample, SubjectSpec, Transcript};
use econprobe_core::seeds;

use crate::config::RunConfig;
use crate::report;
use crate::store;

/// Fixed seed root for point fits, independent of the run's master seed.
const FIT_SEED_ROOT: u64 = 0x5eed_f17;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub subjects_filter: Option<Vec<String>>,
    pub games_filter: Option<Vec<String>>,
    pub dry_run: bool,
    /// When false, stop after competence (the `competence` subcommand).
    pub estimate: bool,
    pub seed_override: Option<u64>,
    pub out_override: Option<PathBuf>,
    /// Anchors relative battery paths from the config.
    pub base_dir: PathBuf,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            subjects_filter: None,
            games_filter: None,
            dry_run: false,
            estimate: true,
            seed_override: None,
            out_override: None,
            base_dir: PathBuf::from("."),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CeRecord {
    pub prospect_id: String,
    pub value: f64,
    pub censored: bool,
    pub multiple_crossings: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IeRecord {
    pub delay_months: u32,
    pub value: f64,
    pub censored: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FsFitRecord {
    pub params: FsParams,
    pub responder_switching_point: f64,
    pub responder_censored: bool,
    pub mean_offer_share: f64,
    pub within_setting_std: f64,
    pub across_setting_std: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CptFitRecord {
    pub params: CptParams,
    pub n_censored: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<BootstrapCi>,
    pub ces: Vec<CeRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscountFitRecord {
    pub params: DiscountParams,
    pub n_censored: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<BootstrapCi>,
    pub ies: Vec<IeRecord>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SubjectFits {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fehr_schmidt: Option<FsFitRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpt: Option<CptFitRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperbolic: Option<DiscountFitRecord>,
    /// Models not fitted, with the gating or data reason.
    #[serde(default)]
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FitsDocument {
    pub master_seed: u64,
    pub subjects: BTreeMap<String, SubjectFits>,
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub competence: Vec<CompetenceReport>,
    pub fits: FitsDocument,
    pub failures: Vec<String>,
}

/// Everything collected for one subject on one game under one variant.
struct GameData {
    settings: Vec<GameSetting>,
    /// Per setting: parse outcomes of non-failed transcripts, canonical
    /// variant only.
    outcomes: Vec<Vec<ParseOutcome>>,
    summaries: Vec<BehaviorSummary>,
}

fn resolve_games(
    config: &RunConfig,
    options: &RunOptions,
) -> Result<Vec<(GameKind, Vec<GameSetting>)>> {
    let mut games = Vec::new();
    for game_config in &config.games {
        let kind = game_config.game();
        if let Some(filter) = &options.games_filter {
            if !filter.iter().any(|g| g == kind.as_str()) {
                continue;
            }
        }
        let grid: GridSpec = game_config.to_grid(&options.base_dir)?;
        let settings = enumerate_settings(&grid)?;
        games.push((kind, settings));
    }
    if games.is_empty() {
        bail!("no games left after filtering");
    }
    Ok(games)
}

fn resolve_subjects<'a>(
    config: &'a RunConfig,
    options: &RunOptions,
) -> Result<Vec<&'a SubjectSpec>> {
    let subjects: Vec<&SubjectSpec> = config
        .subjects
        .iter()
        .filter(|s| {
            options
                .subjects_filter
                .as_ref()
                .map(|filter| filter.iter().any(|id| id == &s.id))
                .unwrap_or(true)
        })
        .collect();
    if subjects.is_empty() {
        bail!("no subjects left after filtering");
    }
    Ok(subjects)
}

/// Execute the full pipeline and write all artifacts.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<RunArtifacts> {
    config.validate()?;
    let master_seed = options.seed_override.unwrap_or(config.master_seed);
    let out_dir = options
        .out_override
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("econprobe-out"));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let games = resolve_games(config, options)?;
    let subjects = resolve_subjects(config, options)?;
    let variants = config.variant_specs()?;

    if options.dry_run {
        let files = write_prompt_preview(&out_dir, &games, &variants)?;
        return Ok(RunArtifacts {
            out_dir,
            files,
            competence: Vec::new(),
            fits: FitsDocument { master_seed, ..Default::default() },
            failures: Vec::new(),
        });
    }

    let mut files: Vec<PathBuf> = Vec::new();
    let mut competence_reports: Vec<CompetenceReport> = Vec::new();
    let mut fits = FitsDocument { master_seed, ..Default::default() };
    let mut failures: Vec<String> = Vec::new();
    let mut summary_rows: Vec<Vec<String>> = Vec::new();
    let mut equivalent_rows: Vec<Vec<String>> = Vec::new();

    for subject in &subjects {
        match run_subject(
            config,
            options,
            subject,
            &games,
            &variants,
            master_seed,
            &out_dir,
            &mut files,
            &mut summary_rows,
            &mut equivalent_rows,
        ) {
            Ok((reports, subject_fits)) => {
                competence_reports.extend(reports);
                fits.subjects.insert(subject.id.clone(), subject_fits);
            }
            Err(e) => {
                // per-subject isolation: record and keep going
                failures.push(format!("{}: {e:#}", subject.id));
            }
        }
    }

    files.push(write_summaries(&out_dir, &summary_rows)?);
    files.push(write_equivalents(&out_dir, &equivalent_rows)?);
    files.push(write_competence(&out_dir, &competence_reports)?);
    if options.estimate {
        let fits_path = out_dir.join("fits.json");
        std::fs::write(&fits_path, serde_json::to_string_pretty(&fits)?)?;
        files.push(PathBuf::from("fits.json"));
        files.extend(report::emit_report(
            &out_dir,
            &fits,
            &competence_reports,
            &failures,
            &config.human_reference,
        )?);
    }

    let created_unix = if config.all_synthetic() {
        0
    } else {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
    };
    let meta = store::ManifestMeta {
        config_hash: config.hash(),
        master_seed,
        created_unix,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    store::write_manifest(&out_dir, &meta, &files)?;

    Ok(RunArtifacts { out_dir, files, competence: competence_reports, fits, failures })
}

/// A synthetic agent only plays the game its utility model covers; remote
/// subjects play everything.
fn subject_plays(subject: &SubjectSpec, kind: GameKind) -> bool {
    match &subject.kind {
        econprobe_core::subjects::SubjectKind::Synthetic(spec) => {
            econprobe_core::subjects::agent_plays(&spec.agent, kind)
        }
        econprobe_core::subjects::SubjectKind::Remote(_) => true,
    }
}

fn not_applicable_notes(
    subject: &SubjectSpec,
    games: &[(GameKind, Vec<GameSetting>)],
) -> Vec<String> {
    games
        .iter()
        .filter(|(kind, _)| !subject_plays(subject, *kind))
        .map(|(kind, _)| format!("{}: agent model does not play this game", kind.as_str()))
        .collect()
}

fn write_prompt_preview(
    out_dir: &Path,
    games: &[(GameKind, Vec<GameSetting>)],
    variants: &[(String, VariantSpec, u32)],
) -> Result<Vec<PathBuf>> {
    let dir = out_dir.join("prompts_preview");
    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    for (kind, settings) in games {
        let Some(setting) = settings.first() else { continue };
        for (name, variant, _) in variants {
            let bundle = match build_prompt(setting, variant) {
                Ok(b) => b,
                Err(VariantError::NotApplicable(_)) => continue,
            };
            let rel = PathBuf::from("prompts_preview")
                .join(format!("{}_{}.txt", kind.as_str(), name));
            std::fs::write(
                out_dir.join(&rel),
                format!("{}\n\n{}\n", bundle.system_text(), bundle.user_prompt),
            )?;
            files.push(rel);
        }
    }
    Ok(files)
}

#[allow(clippy::too_many_arguments)]
fn run_subject(
    config: &RunConfig,
    options: &RunOptions,
    subject: &SubjectSpec,
    games: &[(GameKind, Vec<GameSetting>)],
    variants: &[(String, VariantSpec, u32)],
    master_seed: u64,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
    summary_rows: &mut Vec<Vec<String>>,
    equivalent_rows: &mut Vec<Vec<String>>,
) -> Result<(Vec<CompetenceReport>, SubjectFits)> {
    let mut game_data: BTreeMap<GameKind, GameData> = BTreeMap::new();

    for (kind, settings) in games {
        if !subject_plays(subject, *kind) {
            continue;
        }
        let mut transcripts: Vec<Transcript> = Vec::new();
        let mut canonical_outcomes: Vec<Vec<ParseOutcome>> = Vec::new();
        let mut summaries: Vec<BehaviorSummary> = Vec::new();

        for (variant_name, variant, n_samples) in variants {
            let is_canonical = variant == &VariantSpec::canonical();
            let mut variant_outcomes: Vec<Vec<ParseOutcome>> = Vec::new();
            let mut applicable = true;
            for setting in settings {
                let bundle = match build_prompt(setting, variant) {
                    Ok(b) => b,
                    Err(VariantError::NotApplicable(_)) => {
                        applicable = false;
                        break;
                    }
                };
                let sample_seed = seeds::derive(
                    master_seed,
                    &["sample", &subject.id, kind.as_str(), variant_name],
                );
                let batch = sample(subject, &bundle, setting, *n_samples, sample_seed)
                    .map_err(|e| anyhow!("sampling {}: {e}", setting.id()))?;
                let outcomes: Vec<ParseOutcome> = batch
                    .iter()
                    .filter(|t| !t.failed)
                    .map(|t| parse_response(setting, variant, &t.raw_text))
                    .collect();
                let mut batch = batch;
                for transcript in batch.iter_mut().filter(|t| !t.failed) {
                    transcript.parse =
                        Some(parse_response(setting, variant, &transcript.raw_text));
                }
                transcripts.extend(batch);
                variant_outcomes.push(outcomes);
            }
            if !applicable {
                continue;
            }
            for (setting, outcomes) in settings.iter().zip(&variant_outcomes) {
                if outcomes.is_empty() {
                    continue;
                }
                let summary = summarize(setting, outcomes)?;
                summary_rows.push(summary_row(&subject.id, variant_name, &summary));
                if is_canonical {
                    summaries.push(summary);
                }
            }
            if is_canonical {
                canonical_outcomes = variant_outcomes;
            }
        }

        let rel = PathBuf::from("transcripts")
            .join(&subject.id)
            .join(format!("{}.jsonl", kind.as_str()));
        store::write_transcripts(&out_dir.join(&rel), &transcripts)?;
        files.push(rel);

        game_data.insert(
            *kind,
            GameData {
                settings: settings.clone(),
                outcomes: canonical_outcomes,
                summaries,
            },
        );
    }

    let (reports, mut fits) = analyze_subject(
        config,
        &subject.id,
        &game_data,
        master_seed,
        options.estimate,
        equivalent_rows,
    )?;
    fits.skipped.extend(not_applicable_notes(subject, games));
    Ok((reports, fits))
}

/// Competence tests and (when passed) model fits from collected game data.
fn analyze_subject(
    config: &RunConfig,
    subject_id: &str,
    game_data: &BTreeMap<GameKind, GameData>,
    master_seed: u64,
    estimate: bool,
    equivalent_rows: &mut Vec<Vec<String>>,
) -> Result<(Vec<CompetenceReport>, SubjectFits)> {
    let mut reports = Vec::new();
    let mut fits = SubjectFits::default();

    // --- ultimatum competence (arithmetic consistency) ---
    let mut ultimatum_pass: BTreeMap<GameKind, bool> = BTreeMap::new();
    for kind in [GameKind::UltimatumProposer, GameKind::UltimatumResponder] {
        if let Some(data) = game_data.get(&kind) {
            let (n_total, n_consistent) = ultimatum_consistency(data);
            let report = competence_ultimatum(kind, subject_id, n_total, n_consistent);
            ultimatum_pass.insert(kind, report.pass);
            reports.push(report);
        }
    }

    // --- gambling competence (monotone switching) ---
    let mut gambling_pass = None;
    if let Some(data) = game_data.get(&GameKind::Gambling) {
        let mut n_total = 0u32;
        let mut n_monotone = 0u32;
        for (setting, outcomes) in data.settings.iter().zip(&data.outcomes) {
            let GameSetting::Gambling(g) = setting else { continue };
            for outcome in outcomes {
                n_total += 1;
                if let Some(Reply::Gambling { decisions }) = outcome.reply() {
                    if gambling_reply_monotone(g, decisions) {
                        n_monotone += 1;
                    }
                }
            }
        }
        let report = competence_gambling(subject_id, n_total, n_monotone);
        gambling_pass = Some(report.pass);
        reports.push(report);
    }

    // --- waiting equivalents, probes, and competence ---
    let mut waiting_pass = None;
    let mut waiting_ies: Vec<(u32, Equivalent)> = Vec::new();
    if let Some(data) = game_data.get(&GameKind::Waiting) {
        let (ies, probes, validity) = waiting_equivalents(data);
        for (delay, ie) in &ies {
            equivalent_rows.push(equivalent_row(subject_id, "ie", &delay.to_string(), ie));
        }
        match competence_waiting(subject_id, validity, &ies, &probes) {
            Ok(report) => {
                waiting_pass = Some(report.pass);
                reports.push(report);
            }
            Err(e) => {
                fits.skipped.push(format!("hyperbolic: {e}"));
            }
        }
        waiting_ies = ies;
    }

    if !estimate {
        return Ok((reports, fits));
    }

    // --- inequity aversion fit ---
    let both_ultimatum = game_data.contains_key(&GameKind::UltimatumProposer)
        && game_data.contains_key(&GameKind::UltimatumResponder);
    if both_ultimatum {
        let proposer_ok = ultimatum_pass.get(&GameKind::UltimatumProposer).copied().unwrap_or(false);
        let responder_ok =
            ultimatum_pass.get(&GameKind::UltimatumResponder).copied().unwrap_or(false);
        if proposer_ok && responder_ok {
            match fit_fehr_schmidt(config, subject_id, game_data, master_seed) {
                Ok(record) => fits.fehr_schmidt = Some(record),
                Err(e) => fits.skipped.push(format!("fehr_schmidt: {e}")),
            }
        } else {
            fits.skipped.push("fehr_schmidt: competence test failed".into());
        }
    } else if game_data.contains_key(&GameKind::UltimatumProposer)
        || game_data.contains_key(&GameKind::UltimatumResponder)
    {
        fits.skipped.push("fehr_schmidt: needs both proposer and responder games".into());
    }

    // --- risk/loss aversion fit ---
    if let Some(data) = game_data.get(&GameKind::Gambling) {
        if gambling_pass == Some(true) {
            match fit_prospect_theory(config, subject_id, data, master_seed, equivalent_rows) {
                Ok(record) => fits.cpt = Some(record),
                Err(e) => fits.skipped.push(format!("cpt: {e}")),
            }
        } else {
            fits.skipped.push("cpt: competence test failed".into());
        }
    }

    // --- time discounting fit ---
    if let Some(data) = game_data.get(&GameKind::Waiting) {
        if waiting_pass == Some(true) {
            match fit_discounting(config, subject_id, data, &waiting_ies, master_seed) {
                Ok(record) => fits.hyperbolic = Some(record),
                Err(e) => fits.skipped.push(format!("hyperbolic: {e}")),
            }
        } else if waiting_pass == Some(false) {
            fits.skipped.push("hyperbolic: competence test failed".into());
        }
    }

    Ok((reports, fits))
}

/// (total replies, arithmetically consistent replies) over all settings.
fn ultimatum_consistency(data: &GameData) -> (u32, u32) {
    let mut n_total = 0u32;
    let mut n_consistent = 0u32;
    for (setting, outcomes) in data.settings.iter().zip(&data.outcomes) {
        let (pool, offer) = match setting {
            GameSetting::UltimatumProposer { pool } => (*pool, None),
            GameSetting::UltimatumResponder { pool, offer } => (*pool, Some(*offer)),
            _ => continue,
        };
        for outcome in outcomes {
            n_total += 1;
            if let Some(reply) = outcome.reply() {
                if let Ok((_, _, consistent)) =
                    econprobe_core::parse::extract_stated_payoffs(reply, pool, offer)
                {
                    if consistent {
                        n_consistent += 1;
                    }
                }
            }
        }
    }
    (n_total, n_consistent)
}

/// Immediate equivalents per delay, zero-amount probe rates, and overall
/// parse validity for the waiting game.
fn waiting_equivalents(data: &GameData) -> (Vec<(u32, Equivalent)>, Vec<(u32, f64)>, f64) {
    let mut by_delay: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
    let mut probes: Vec<(u32, f64)> = Vec::new();
    let mut n_total = 0u32;
    let mut n_valid = 0u32;
    for (setting, summary) in data.settings.iter().zip(&data.summaries) {
        let GameSetting::Waiting(w) = setting else { continue };
        n_total += summary.n_total;
        n_valid += summary.n_valid;
        let Some(now_rate) = summary.now_rate() else { continue };
        by_delay.entry(w.delay_months).or_default().push((w.immediate_amount as f64, now_rate));
        if w.immediate_amount == 0 {
            probes.push((w.delay_months, 1.0 - now_rate));
        }
    }
    let ies: Vec<(u32, Equivalent)> = by_delay
        .iter()
        .filter_map(|(delay, points)| {
            immediate_equivalent(*delay, points).ok().map(|ie| (*delay, ie))
        })
        .collect();
    let validity = if n_total == 0 { 0.0 } else { n_valid as f64 / n_total as f64 };
    (ies, probes, validity)
}

fn fit_fehr_schmidt(
    config: &RunConfig,
    subject_id: &str,
    game_data: &BTreeMap<GameKind, GameData>,
    master_seed: u64,
) -> Result<FsFitRecord, EstimationError> {
    let proposer = &game_data[&GameKind::UltimatumProposer];
    let responder = &game_data[&GameKind::UltimatumResponder];

    let mut proposer_offers: Vec<(u32, Vec<u32>)> = Vec::new();
    for (setting, outcomes) in proposer.settings.iter().zip(&proposer.outcomes) {
        let GameSetting::UltimatumProposer { pool } = setting else { continue };
        let offers: Vec<u32> = outcomes
            .iter()
            .filter_map(|o| match o.reply() {
                Some(Reply::Proposer { offer, .. }) => Some(*offer),
                _ => None,
            })
            .collect();
        proposer_offers.push((*pool, offers));
    }

    let mut responder_pool = 0u32;
    let mut responder_accepts: Vec<(u32, Vec<bool>)> = Vec::new();
    for (setting, outcomes) in responder.settings.iter().zip(&responder.outcomes) {
        let GameSetting::UltimatumResponder { pool, offer } = setting else { continue };
        responder_pool = *pool;
        let accepts: Vec<bool> = outcomes
            .iter()
            .filter_map(|o| match o.reply() {
                Some(Reply::Responder { decision, .. }) => Some(*decision == Decision::Accept),
                _ => None,
            })
            .collect();
        responder_accepts.push((*offer, accepts));
    }
    responder_accepts.sort_by_key(|(offer, _)| *offer);

    let observations = FsObservations { responder_pool, proposer_offers, responder_accepts };
    let bootstrap_seed = seeds::derive(master_seed, &["fs-bootstrap", subject_id]);
    let params = fs_bootstrap(
        &observations,
        config.bootstrap.n_points_per_setting,
        config.bootstrap.n_reps,
        bootstrap_seed,
    )?;

    let run_summary = RunSummary::from_summaries(proposer.summaries.clone());
    let curve: Vec<(f64, f64)> = observations
        .responder_accepts
        .iter()
        .map(|(offer, accepts)| {
            let rate = accepts.iter().filter(|a| **a).count() as f64 / accepts.len().max(1) as f64;
            (*offer as f64, rate)
        })
        .collect();
    let sp = econprobe_core::behavior::switching_point(&curve, 0.5)
        .map_err(|e| EstimationError::InsufficientData(e.to_string()))?;

    Ok(FsFitRecord {
        params,
        responder_switching_point: sp.value,
        responder_censored: sp.censored != Censoring::None,
        mean_offer_share: run_summary.e_omega.unwrap_or(f64::NAN),
        within_setting_std: run_summary.e_sigma_n.unwrap_or(f64::NAN),
        across_setting_std: run_summary.sigma_m.unwrap_or(f64::NAN),
    })
}

fn fit_prospect_theory(
    config: &RunConfig,
    subject_id: &str,
    data: &GameData,
    master_seed: u64,
    equivalent_rows: &mut Vec<Vec<String>>,
) -> Result<CptFitRecord, EstimationError> {
    let mut ces = Vec::new();
    let mut records = Vec::new();
    let mut n_censored = 0usize;
    for (setting, summary) in data.settings.iter().zip(&data.summaries) {
        let GameSetting::Gambling(g) = setting else { continue };
        let equivalent = certainty_equivalent(g, summary)
            .map_err(|e| EstimationError::InsufficientData(e.to_string()))?;
        equivalent_rows.push(equivalent_row(subject_id, "ce", &g.prospect.id, &equivalent));
        records.push(CeRecord {
            prospect_id: g.prospect.id.clone(),
            value: equivalent.value,
            censored: equivalent.censored != Censoring::None,
            multiple_crossings: equivalent.multiple_crossings,
        });
        if equivalent.censored == Censoring::None {
            ces.push((g.prospect.clone(), equivalent.value));
        } else {
            n_censored += 1;
        }
    }

    let fit_seed = seeds::derive(FIT_SEED_ROOT, &["cpt", subject_id]);
    let params = fit_cpt(&ces, fit_seed)?;

    let ci = if config.bootstrap.nonlinear {
        let boot_seed = seeds::derive(master_seed, &["cpt-bootstrap", subject_id]);
        Some(bootstrap_cpt(config, data, boot_seed)?)
    } else {
        None
    };

    Ok(CptFitRecord { params, n_censored, ci, ces: records })
}

/// Resample gambling transcripts per setting, recompute certainty
/// equivalents, and refit.
fn bootstrap_cpt(
    config: &RunConfig,
    data: &GameData,
    seed: u64,
) -> Result<BootstrapCi, EstimationError> {
    use rand::Rng;
    let per_setting: Vec<(&GameSetting, &Vec<ParseOutcome>)> =
        data.settings.iter().zip(&data.outcomes).collect();
    bootstrap_ci(config.bootstrap.n_reps, seed, |rep_seed| {
        let mut rng = seeds::rng(rep_seed, &["resample"]);
        let mut ces = Vec::new();
        for (setting, outcomes) in &per_setting {
            let GameSetting::Gambling(g) = setting else { continue };
            if outcomes.is_empty() {
                return None;
            }
            let resampled: Vec<ParseOutcome> = (0..outcomes.len())
                .map(|_| outcomes[rng.random_range(0..outcomes.len())].clone())
                .collect();
            let summary = summarize(setting, &resampled).ok()?;
            let equivalent = certainty_equivalent(g, &summary).ok()?;
            if equivalent.censored == Censoring::None {
                ces.push((g.prospect.clone(), equivalent.value));
            }
        }
        let fitted = fit_cpt(&ces, seeds::derive(rep_seed, &["refit"])).ok()?;
        Some(fitted.as_vec())
    })
}

fn fit_discounting(
    config: &RunConfig,
    subject_id: &str,
    data: &GameData,
    ies: &[(u32, Equivalent)],
    master_seed: u64,
) -> Result<DiscountFitRecord, EstimationError> {
    let delayed_amount = data
        .settings
        .iter()
        .find_map(|s| match s {
            GameSetting::Waiting(w) => Some(w.delayed_amount as f64),
            _ => None,
        })
        .unwrap_or(1000.0);
    let mut records = Vec::new();
    let mut usable = Vec::new();
    let mut n_censored = 0usize;
    for (delay, ie) in ies {
        records.push(IeRecord {
            delay_months: *delay,
            value: ie.value,
            censored: ie.censored != Censoring::None,
        });
        if ie.censored == Censoring::None {
            usable.push((*delay as f64, ie.value));
        } else {
            n_censored += 1;
        }
    }
    let params = fit_hyperbolic(&usable, delayed_amount, seeds::derive(FIT_SEED_ROOT, &["k", subject_id]))?;

    let ci = if config.bootstrap.nonlinear {
        let boot_seed = seeds::derive(master_seed, &["k-bootstrap", subject_id]);
        Some(bootstrap_discounting(config, data, delayed_amount, boot_seed)?)
    } else {
        None
    };

    Ok(DiscountFitRecord { params, n_censored, ci, ies: records })
}

fn bootstrap_discounting(
    config: &RunConfig,
    data: &GameData,
    delayed_amount: f64,
    seed: u64,
) -> Result<BootstrapCi, EstimationError> {
    use rand::Rng;
    bootstrap_ci(config.bootstrap.n_reps, seed, |rep_seed| {
        let mut rng = seeds::rng(rep_seed, &["resample"]);
        let mut by_delay: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
        for (setting, outcomes) in data.settings.iter().zip(&data.outcomes) {
            let GameSetting::Waiting(w) = setting else { continue };
            if outcomes.is_empty() {
                return None;
            }
            let resampled: Vec<ParseOutcome> = (0..outcomes.len())
                .map(|_| outcomes[rng.random_range(0..outcomes.len())].clone())
                .collect();
            let summary = summarize(setting, &resampled).ok()?;
            let now_rate = summary.now_rate()?;
            by_delay
                .entry(w.delay_months)
                .or_default()
                .push((w.immediate_amount as f64, now_rate));
        }
        let mut usable = Vec::new();
        for (delay, points) in &by_delay {
            let ie = immediate_equivalent(*delay, points).ok()?;
            if ie.censored == Censoring::None {
                usable.push((*delay as f64, ie.value));
            }
        }
        let fitted = fit_hyperbolic(&usable, delayed_amount, seeds::derive(rep_seed, &["refit"]))
            .ok()?;
        Some(vec![fitted.k])
    })
}

fn format_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn summary_row(subject_id: &str, variant_name: &str, summary: &BehaviorSummary) -> Vec<String> {
    let rates = summary
        .per_option_accept_rates()
        .map(|rs| rs.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(","))
        .unwrap_or_default();
    vec![
        subject_id.to_string(),
        summary.game.as_str().to_string(),
        summary.setting_id.clone(),
        variant_name.to_string(),
        summary.n_total.to_string(),
        summary.n_valid.to_string(),
        format!("{:.4}", summary.validity_fraction()),
        format_opt(summary.mean_offer_fraction()),
        format_opt(summary.offer_fraction_std()),
        format_opt(summary.accept_rate()),
        format_opt(summary.now_rate()),
        rates,
    ]
}

fn equivalent_row(subject_id: &str, kind: &str, key: &str, e: &Equivalent) -> Vec<String> {
    vec![
        subject_id.to_string(),
        kind.to_string(),
        key.to_string(),
        format!("{:.6}", e.value),
        format!("{:?}", e.censored).to_lowercase(),
        format!("{:.6}", e.bracket.0),
        format!("{:.6}", e.bracket.1),
        e.multiple_crossings.to_string(),
    ]
}

fn write_summaries(out_dir: &Path, rows: &[Vec<String>]) -> Result<PathBuf> {
    let rel = PathBuf::from("summaries.tsv");
    store::write_tsv(
        &out_dir.join(&rel),
        &[
            "subject",
            "game",
            "setting_id",
            "variant",
            "n_total",
            "n_valid",
            "validity_fraction",
            "mean_offer_fraction",
            "offer_fraction_std",
            "accept_rate",
            "now_rate",
            "option_accept_rates",
        ],
        rows,
    )?;
    Ok(rel)
}

fn write_equivalents(out_dir: &Path, rows: &[Vec<String>]) -> Result<PathBuf> {
    let rel = PathBuf::from("equivalents.tsv");
    store::write_tsv(
        &out_dir.join(&rel),
        &["subject", "kind", "key", "value", "censored", "bracket_hi", "bracket_lo", "multiple_crossings"],
        rows,
    )?;
    Ok(rel)
}

fn write_competence(out_dir: &Path, reports: &[CompetenceReport]) -> Result<PathBuf> {
    let rel = PathBuf::from("competence.tsv");
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let checks = r
                .checks
                .iter()
                .map(|c| format!("{}={}", c.name, if c.pass { "pass" } else { "fail" }))
                .collect::<Vec<_>>()
                .join(";");
            let evidence =
                r.checks.iter().map(|c| c.evidence.clone()).collect::<Vec<_>>().join(" | ");
            vec![
                r.subject_id.clone(),
                r.game.as_str().to_string(),
                format!("{:.4}", r.validity_fraction),
                if r.pass { "pass" } else { "fail" }.to_string(),
                checks,
                evidence,
            ]
        })
        .collect();
    store::write_tsv(
        &out_dir.join(&rel),
        &["subject", "game", "validity_fraction", "pass", "checks", "evidence"],
        &rows,
    )?;
    Ok(rel)
}

/// Re-derive fits from persisted transcripts without touching the network.
///
/// Produces the same point estimates as the originating run; bootstrap
/// intervals are re-drawn from the given master seed.
pub fn replay_fit(
    config: &RunConfig,
    transcripts_dir: &Path,
    options: &RunOptions,
) -> Result<FitsDocument> {
    config.validate()?;
    let master_seed = options.seed_override.unwrap_or(config.master_seed);
    let games = resolve_games(config, options)?;
    let subjects = resolve_subjects(config, options)?;

    let canonical_id = VariantSpec::canonical().id();
    let mut fits = FitsDocument { master_seed, ..Default::default() };
    let mut equivalent_rows = Vec::new();

    for subject in &subjects {
        let mut game_data: BTreeMap<GameKind, GameData> = BTreeMap::new();
        for (kind, settings) in &games {
            let path =
                transcripts_dir.join(&subject.id).join(format!("{}.jsonl", kind.as_str()));
            if !path.exists() {
                continue;
            }
            let transcripts = store::read_transcripts(&path)?;
            let mut by_setting: BTreeMap<String, Vec<&Transcript>> = BTreeMap::new();
            for transcript in &transcripts {
                if transcript.variant_id == canonical_id && !transcript.failed {
                    by_setting.entry(transcript.setting_id.clone()).or_default().push(transcript);
                }
            }
            let known: std::collections::BTreeSet<String> =
                settings.iter().map(|s| s.id()).collect();
            for setting_id in by_setting.keys() {
                if !known.contains(setting_id) {
                    bail!(
                        "transcript references setting {setting_id} not present in the config grid"
                    );
                }
            }
            let variant = VariantSpec::canonical();
            let mut outcomes = Vec::new();
            let mut summaries = Vec::new();
            let mut kept_settings = Vec::new();
            for setting in settings {
                let batch = by_setting.remove(&setting.id()).unwrap_or_default();
                if batch.is_empty() {
                    continue;
                }
                let parsed: Vec<ParseOutcome> = batch
                    .iter()
                    .map(|t| parse_response(setting, &variant, &t.raw_text))
                    .collect();
                summaries.push(summarize(setting, &parsed)?);
                outcomes.push(parsed);
                kept_settings.push(setting.clone());
            }
            if kept_settings.is_empty() {
                continue;
            }
            game_data.insert(
                *kind,
                GameData { settings: kept_settings, outcomes, summaries },
            );
        }
        if game_data.is_empty() {
            continue;
        }
        let (_, mut subject_fits) = analyze_subject(
            config,
            &subject.id,
            &game_data,
            master_seed,
            true,
            &mut equivalent_rows,
        )?;
        subject_fits.skipped.extend(not_applicable_notes(subject, &games));
        fits.subjects.insert(subject.id.clone(), subject_fits);
    }
    Ok(fits)
}
