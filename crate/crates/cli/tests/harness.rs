//! Harness integration: artifact determinism, replay, manifest integrity,
//! competence gating, and the prompt-rendering dry run.

use std::fs;
use std::path::Path;

use econprobe_cli::config::{BootstrapConfig, GameConfig, HumanReference, RunConfig};
use econprobe_cli::run::{replay_fit, run, RunOptions};
use econprobe_cli::store;
use econprobe_core::subjects::{
    AgentParams, SubjectKind, SubjectSpec, SyntheticSpec, Transcript,
    TRANSCRIPT_SCHEMA_VERSION,
};

fn synthetic(id: &str, agent: AgentParams) -> SubjectSpec {
    SubjectSpec { id: id.into(), kind: SubjectKind::Synthetic(SyntheticSpec::noise_free(agent)) }
}

fn small_config() -> RunConfig {
    RunConfig {
        master_seed: 42,
        n_samples: 20,
        output_dir: None,
        subjects: vec![
            // a little response noise so bootstrap resampling has variance
            SubjectSpec {
                id: "fs-agent".into(),
                kind: SubjectKind::Synthetic(SyntheticSpec {
                    agent: AgentParams::FehrSchmidt { alpha: 0.75, beta: 0.5 },
                    noise_seed: 9,
                    response_noise: 0.05,
                }),
            },
            synthetic(
                "cpt-agent",
                AgentParams::Cpt { alpha: 0.88, beta: 0.88, lambda: 2.25, phi_plus: 0.61, phi_minus: 0.69 },
            ),
        ],
        games: vec![
            GameConfig::UltimatumProposer { pools: Some(vec![2, 6, 10]) },
            GameConfig::UltimatumResponder { pool: Some(10), offers: None },
            GameConfig::Gambling { battery: None },
        ],
        variants: Vec::new(),
        bootstrap: BootstrapConfig { n_points_per_setting: 10, n_reps: 20, nonlinear: false },
        human_reference: HumanReference::classic(),
    }
}

fn options_into(dir: &Path) -> RunOptions {
    RunOptions { out_override: Some(dir.to_path_buf()), ..Default::default() }
}

#[test]
fn synthetic_rerun_is_byte_identical() {
    let config = small_config();
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let a = run(&config, &options_into(&out_a)).unwrap();
    let b = run(&config, &options_into(&out_b)).unwrap();
    assert!(a.failures.is_empty() && b.failures.is_empty());
    assert_eq!(a.files, b.files);
    for rel in &a.files {
        let bytes_a = fs::read(out_a.join(rel)).unwrap();
        let bytes_b = fs::read(out_b.join(rel)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{} differs between reruns", rel.display());
    }
    // the manifests themselves agree byte for byte (timestamps pinned for
    // synthetic-only runs)
    assert_eq!(
        fs::read(out_a.join("manifest.txt")).unwrap(),
        fs::read(out_b.join("manifest.txt")).unwrap()
    );
}

#[test]
fn manifest_verifies_and_detects_tampering() {
    let config = small_config();
    let dir = tempfile::tempdir().unwrap();
    run(&config, &options_into(dir.path())).unwrap();
    let meta = store::verify_manifest(dir.path()).unwrap();
    assert_eq!(meta.master_seed, 42);
    assert_eq!(meta.config_hash, config.hash());

    let victim = dir.path().join("summaries.tsv");
    let mut bytes = fs::read(&victim).unwrap();
    bytes.push(b'x');
    fs::write(&victim, bytes).unwrap();
    assert!(store::verify_manifest(dir.path()).is_err());
}

#[test]
fn replay_reproduces_fits_and_isolates_bootstrap_seed() {
    let config = small_config();
    let dir = tempfile::tempdir().unwrap();
    let artifacts = run(&config, &options_into(dir.path())).unwrap();
    let transcripts_dir = dir.path().join("transcripts");

    let replayed = replay_fit(&config, &transcripts_dir, &RunOptions::default()).unwrap();
    assert_eq!(
        serde_json::to_string(&artifacts.fits).unwrap(),
        serde_json::to_string(&replayed).unwrap(),
        "replay must reproduce the originating fits exactly"
    );

    // a different master seed re-draws bootstrap intervals but leaves the
    // point estimates untouched
    let reseeded = replay_fit(
        &config,
        &transcripts_dir,
        &RunOptions { seed_override: Some(4242), ..Default::default() },
    )
    .unwrap();
    let original_cpt = artifacts.fits.subjects["cpt-agent"].cpt.as_ref().unwrap();
    let reseeded_cpt = reseeded.subjects["cpt-agent"].cpt.as_ref().unwrap();
    assert_eq!(original_cpt.params.as_vec(), reseeded_cpt.params.as_vec());
    let original_fs = artifacts.fits.subjects["fs-agent"].fehr_schmidt.as_ref().unwrap();
    let reseeded_fs = reseeded.subjects["fs-agent"].fehr_schmidt.as_ref().unwrap();
    assert_eq!(original_fs.params.beta, reseeded_fs.params.beta);
    assert_ne!(
        original_fs.params.ci.as_ref().unwrap().beta_interval,
        reseeded_fs.params.ci.as_ref().unwrap().beta_interval,
        "bootstrap intervals should be re-drawn under a new master seed"
    );
}

#[test]
fn unknown_schema_version_fails_replay() {
    let config = small_config();
    let dir = tempfile::tempdir().unwrap();
    run(&config, &options_into(dir.path())).unwrap();
    let path = dir.path().join("transcripts/fs-agent/ultimatum_proposer.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let tampered = text.replace("\"schema_version\":1", "\"schema_version\":9");
    fs::write(&path, tampered).unwrap();
    let err = replay_fit(&config, &dir.path().join("transcripts"), &RunOptions::default());
    assert!(err.is_err(), "schema mismatch must fail replay");
}

#[test]
fn waiting_grid_without_zero_probe_gates_the_fit() {
    let config = RunConfig {
        master_seed: 7,
        n_samples: 1,
        output_dir: None,
        subjects: vec![synthetic("h-agent", AgentParams::Hyperbolic { k_per_month: 0.1 })],
        games: vec![GameConfig::Waiting {
            delayed_amount: Some(1000),
            delays_months: Some(vec![1, 12, 120]),
            // no $0 cell: the time-value probe cannot run
            immediate_amounts: Some((1..=1000).rev().collect()),
        }],
        variants: Vec::new(),
        bootstrap: BootstrapConfig::default(),
        human_reference: HumanReference::default(),
    };
    let dir = tempfile::tempdir().unwrap();
    let artifacts = run(&config, &options_into(dir.path())).unwrap();
    let report = artifacts
        .competence
        .iter()
        .find(|r| r.subject_id == "h-agent")
        .expect("competence report emitted");
    assert!(!report.pass);
    let fits = &artifacts.fits.subjects["h-agent"];
    assert!(fits.hyperbolic.is_none(), "no parameters may be emitted for a failed game");
    assert!(fits.skipped.iter().any(|s| s.contains("competence")), "{:?}", fits.skipped);
}

#[test]
fn non_monotone_gambling_transcripts_gate_the_fit() {
    // handcraft transcripts whose replies flip twice along the option order
    let config = RunConfig {
        master_seed: 7,
        n_samples: 1,
        output_dir: None,
        subjects: vec![synthetic("inconsistent", AgentParams::Rational)],
        games: vec![GameConfig::Gambling { battery: None }],
        variants: Vec::new(),
        bootstrap: BootstrapConfig::default(),
        human_reference: HumanReference::default(),
    };
    let dir = tempfile::tempdir().unwrap();
    let battery = econprobe_core::gamespec::default_battery();
    let mut transcripts = Vec::new();
    for entry in &battery {
        let setting = entry.to_setting().unwrap();
        let lines: Vec<String> = setting
            .sure_options
            .iter()
            .enumerate()
            .map(|(i, &option)| {
                // alternate accept/reject: never a single switch
                let word = if i % 2 == 0 { "accept" } else { "reject" };
                format!("{}: {word}", econprobe_core::gamespec::sure_option_phrase(option))
            })
            .collect();
        transcripts.push(Transcript {
            schema_version: TRANSCRIPT_SCHEMA_VERSION,
            subject_id: "inconsistent".into(),
            setting_id: format!("g-{}", entry.prospect.id),
            variant_id: "canonical".into(),
            sample_index: 0,
            raw_text: lines.join("\n"),
            request_fingerprint: String::new(),
            created_at: 0,
            failed: false,
            error: None,
            retries: 0,
            parse: None,
        });
    }
    let transcripts_dir = dir.path().join("transcripts");
    store::write_transcripts(
        &transcripts_dir.join("inconsistent/gambling.jsonl"),
        &transcripts,
    )
    .unwrap();
    let fits = replay_fit(&config, &transcripts_dir, &RunOptions::default()).unwrap();
    let subject = &fits.subjects["inconsistent"];
    assert!(subject.cpt.is_none());
    assert!(subject.skipped.iter().any(|s| s.contains("competence")), "{:?}", subject.skipped);
}

#[test]
fn dry_run_renders_prompts_only() {
    let config = small_config();
    let dir = tempfile::tempdir().unwrap();
    let options = RunOptions { dry_run: true, ..options_into(dir.path()) };
    let artifacts = run(&config, &options).unwrap();
    assert!(!artifacts.files.is_empty());
    for rel in &artifacts.files {
        assert!(rel.starts_with("prompts_preview"), "{}", rel.display());
        let text = fs::read_to_string(dir.path().join(rel)).unwrap();
        assert!(!text.is_empty());
    }
    assert!(!dir.path().join("transcripts").exists(), "dry run must not sample");
}

#[test]
fn subject_filter_limits_the_run() {
    let config = small_config();
    let dir = tempfile::tempdir().unwrap();
    let options = RunOptions {
        subjects_filter: Some(vec!["cpt-agent".into()]),
        games_filter: Some(vec!["gambling".into()]),
        ..options_into(dir.path())
    };
    let artifacts = run(&config, &options).unwrap();
    assert!(artifacts.fits.subjects.contains_key("cpt-agent"));
    assert!(!artifacts.fits.subjects.contains_key("fs-agent"));
    assert!(dir.path().join("transcripts/cpt-agent/gambling.jsonl").exists());
    assert!(!dir.path().join("transcripts/fs-agent").exists());
}

#[test]
fn report_renders_comparison_tables() {
    let config = small_config();
    let dir = tempfile::tempdir().unwrap();
    run(&config, &options_into(dir.path())).unwrap();
    let report = fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(report.contains("human reference"));
    assert!(report.contains("Risk and loss aversion"));
    assert!(report.contains("cpt-agent"));
    let weighting =
        fs::read_to_string(dir.path().join("plot_data/weighting_curve_cpt-agent.tsv")).unwrap();
    let mut lines = weighting.lines();
    assert_eq!(lines.next().unwrap(), "p\tw_gain\tw_loss");
    assert_eq!(weighting.lines().count(), 102);
}
