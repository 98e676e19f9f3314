//! Synthetic round-trip validation: run the full pipeline on agents with
//! known utility parameters and check that estimation recovers them within
//! the documented quantization bounds.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;

use econprobe_core::estimation::AlphaEstimate;
use econprobe_core::subjects::{AgentParams, SubjectKind, SubjectSpec, SyntheticSpec};

use crate::config::{BootstrapConfig, GameConfig, HumanReference, RunConfig};
use crate::run::{run, FitsDocument, RunOptions};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self { name: name.to_string(), pass, detail }
    }
}

fn synthetic_subject(id: &str, agent: AgentParams) -> SubjectSpec {
    SubjectSpec {
        id: id.into(),
        kind: SubjectKind::Synthetic(SyntheticSpec::noise_free(agent)),
    }
}

fn base_config(seed: u64, subjects: Vec<SubjectSpec>, games: Vec<GameConfig>, n: u32) -> RunConfig {
    RunConfig {
        master_seed: seed,
        n_samples: n,
        output_dir: None,
        subjects,
        games,
        variants: Vec::new(),
        bootstrap: BootstrapConfig::default(),
        human_reference: HumanReference::classic(),
    }
}

fn scratch_dir(tag: &str, seed: u64) -> PathBuf {
    std::env::temp_dir().join(format!("econprobe-validate-{tag}-{seed}-{}", std::process::id()))
}

/// Run a synthetic config into a scratch directory and return its fits.
pub fn run_synthetic(config: &RunConfig, tag: &str) -> Result<FitsDocument> {
    let out = scratch_dir(tag, config.master_seed);
    let options = RunOptions { out_override: Some(out.clone()), ..Default::default() };
    let artifacts = run(config, &options)?;
    let fits = artifacts.fits;
    let _ = std::fs::remove_dir_all(&out);
    Ok(fits)
}

fn ultimatum_games() -> Vec<GameConfig> {
    vec![
        GameConfig::UltimatumProposer { pools: None },
        GameConfig::UltimatumResponder { pool: None, offers: None },
    ]
}

fn fine_waiting_game() -> GameConfig {
    GameConfig::Waiting {
        delayed_amount: Some(1000),
        delays_months: Some(vec![1, 6, 12, 60, 120, 300, 600]),
        immediate_amounts: Some((0..=1000).rev().collect()),
    }
}

/// Inequity-aversion round trip at N=100: recovered guilt within the
/// integer-offer bound (0.06) and envy within 0.20; wall time under 10 s.
pub fn check_fehr_schmidt(seed: u64) -> CheckResult {
    let start = Instant::now();
    let config = base_config(
        seed,
        vec![synthetic_subject("fs-agent", AgentParams::FehrSchmidt { alpha: 0.75, beta: 0.5 })],
        ultimatum_games(),
        100,
    );
    let fits = match run_synthetic(&config, "fs") {
        Ok(f) => f,
        Err(e) => return CheckResult::new("fehr_schmidt_round_trip", false, format!("{e:#}")),
    };
    let elapsed = start.elapsed();
    let Some(record) = fits.subjects.get("fs-agent").and_then(|s| s.fehr_schmidt.as_ref()) else {
        return CheckResult::new("fehr_schmidt_round_trip", false, "no fit emitted".into());
    };
    let beta_err = (record.params.beta - 0.5).abs();
    let alpha_err = match record.params.alpha {
        AlphaEstimate::Finite(a) => (a - 0.75).abs(),
        AlphaEstimate::Infinite => f64::INFINITY,
    };
    let pass = beta_err <= 0.06 && alpha_err <= 0.20 && elapsed.as_secs_f64() < 10.0;
    CheckResult::new(
        "fehr_schmidt_round_trip",
        pass,
        format!(
            "beta_err {beta_err:.4} (<=0.06), alpha_err {alpha_err:.4} (<=0.20), {:.2}s (<10s)",
            elapsed.as_secs_f64()
        ),
    )
}

/// Prospect-theory round trip over the default battery: every parameter
/// within 10% relative or 0.05 absolute, R^2 at least 0.98, under 60 s.
pub fn check_cpt(seed: u64) -> CheckResult {
    let truth = [0.88, 0.88, 2.25, 0.61, 0.69];
    let start = Instant::now();
    let config = base_config(
        seed,
        vec![synthetic_subject(
            "cpt-agent",
            AgentParams::Cpt {
                alpha: truth[0],
                beta: truth[1],
                lambda: truth[2],
                phi_plus: truth[3],
                phi_minus: truth[4],
            },
        )],
        vec![GameConfig::Gambling { battery: None }],
        10,
    );
    let fits = match run_synthetic(&config, "cpt") {
        Ok(f) => f,
        Err(e) => return CheckResult::new("cpt_round_trip", false, format!("{e:#}")),
    };
    let elapsed = start.elapsed();
    let Some(record) = fits.subjects.get("cpt-agent").and_then(|s| s.cpt.as_ref()) else {
        return CheckResult::new("cpt_round_trip", false, "no fit emitted".into());
    };
    let got = record.params.as_vec();
    let mut worst = 0.0f64;
    let mut within = true;
    for (g, t) in got.iter().zip(&truth) {
        let rel = (g - t).abs() / t;
        let abs = (g - t).abs();
        worst = worst.max(rel.min(abs / 0.05 * 0.10));
        if rel > 0.10 && abs > 0.05 {
            within = false;
        }
    }
    let r2 = record.params.fit.as_ref().and_then(|f| f.r_squared).unwrap_or(f64::NAN);
    let pass = within && r2 >= 0.98 && elapsed.as_secs_f64() < 60.0;
    CheckResult::new(
        "cpt_round_trip",
        pass,
        format!(
            "fitted {:?} vs {truth:?}, R^2 {r2:.4} (>=0.98), {:.2}s (<60s)",
            got.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        ),
    )
}

/// The expected-value maximizer recovers the identity: prospect-theory
/// parameters in [0.97, 1.03], discount rate at most 1e-4, guilt within one
/// integer step of its all-keeping policy.
pub fn check_rational_identity(seed: u64) -> CheckResult {
    let name = "rational_identity";
    // gambling
    let gambling = base_config(
        seed,
        vec![synthetic_subject("rational", AgentParams::Rational)],
        vec![GameConfig::Gambling { battery: None }],
        10,
    );
    let fits = match run_synthetic(&gambling, "rational-g") {
        Ok(f) => f,
        Err(e) => return CheckResult::new(name, false, format!("{e:#}")),
    };
    let Some(cpt) = fits.subjects.get("rational").and_then(|s| s.cpt.as_ref()) else {
        return CheckResult::new(name, false, "no prospect-theory fit emitted".into());
    };
    let params = cpt.params.as_vec();
    let band = params.iter().all(|v| (0.97..=1.03).contains(v));
    let r2 = cpt.params.fit.as_ref().and_then(|f| f.r_squared).unwrap_or(f64::NAN);

    // waiting on the dense grid
    let waiting = base_config(
        seed,
        vec![synthetic_subject("rational", AgentParams::Rational)],
        vec![fine_waiting_game()],
        1,
    );
    let fits = match run_synthetic(&waiting, "rational-w") {
        Ok(f) => f,
        Err(e) => return CheckResult::new(name, false, format!("{e:#}")),
    };
    let Some(discount) = fits.subjects.get("rational").and_then(|s| s.hyperbolic.as_ref()) else {
        return CheckResult::new(name, false, "no discounting fit emitted".into());
    };
    let k = discount.params.k;

    // ultimatum: the policy keeps beta = 0 exactly
    let ultimatum = base_config(
        seed,
        vec![synthetic_subject("rational", AgentParams::Rational)],
        ultimatum_games(),
        100,
    );
    let fits = match run_synthetic(&ultimatum, "rational-u") {
        Ok(f) => f,
        Err(e) => return CheckResult::new(name, false, format!("{e:#}")),
    };
    let Some(fs) = fits.subjects.get("rational").and_then(|s| s.fehr_schmidt.as_ref()) else {
        return CheckResult::new(name, false, "no inequity fit emitted".into());
    };
    let beta_err = fs.params.beta.abs();

    let pass = band && r2 >= 0.99 && k <= 1e-4 && beta_err <= 0.1;
    CheckResult::new(
        name,
        pass,
        format!(
            "cpt {:?} in band: {band}, R^2 {r2:.4} (>=0.99), k {k:.2e} (<=1e-4), beta_err {beta_err:.4} (<=1 step)",
            params.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

/// Discounting round trip at k in {0.01, 0.1, 1.0} per month on the dense
/// grid: each recovered within 5% relative with R^2 at least 0.99.
pub fn check_hyperbolic(seed: u64) -> CheckResult {
    let name = "hyperbolic_round_trip";
    let mut details = Vec::new();
    let mut pass = true;
    for (i, k) in [0.01, 0.1, 1.0].into_iter().enumerate() {
        let config = base_config(
            seed + i as u64,
            vec![synthetic_subject("h-agent", AgentParams::Hyperbolic { k_per_month: k })],
            vec![fine_waiting_game()],
            1,
        );
        let fits = match run_synthetic(&config, &format!("h{i}")) {
            Ok(f) => f,
            Err(e) => return CheckResult::new(name, false, format!("{e:#}")),
        };
        let Some(discount) = fits.subjects.get("h-agent").and_then(|s| s.hyperbolic.as_ref())
        else {
            return CheckResult::new(name, false, format!("k={k}: no fit emitted"));
        };
        let rel = (discount.params.k - k).abs() / k;
        let r2 = discount.params.fit.r_squared.unwrap_or(f64::NAN);
        if rel > 0.05 || r2 < 0.99 {
            pass = false;
        }
        details.push(format!("k={k}: fitted {:.6} (rel {rel:.4}), R^2 {r2:.4}", discount.params.k));
    }
    CheckResult::new(name, pass, details.join("; "))
}

/// The full synthetic validation suite.
pub fn validate_synthetic(seed: u64) -> Vec<CheckResult> {
    vec![
        check_fehr_schmidt(seed),
        check_cpt(seed),
        check_rational_identity(seed),
        check_hyperbolic(seed),
    ]
}
