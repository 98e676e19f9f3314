//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test -p econprobe-cli --test acceptance -- --nocapture`
//! to see the per-criterion lines. The live-run criterion needs endpoint
//! credentials and is ignored by default.

use std::time::Instant;

use econprobe_cli::config::{BootstrapConfig, GameConfig, HumanReference, RunConfig};
use econprobe_cli::validate::{
    check_cpt, check_fehr_schmidt, check_hyperbolic, check_rational_identity,
};
use econprobe_core::behavior::{
    competence_gambling, competence_ultimatum, competence_waiting, gambling_reply_monotone,
    Censoring, Equivalent,
};
use econprobe_core::estimation::cpt::{predict_ce, weight, CptParams};
use econprobe_core::estimation::{fs_bootstrap, minimize_bounded, FsObservations};
use econprobe_core::gamespec::{
    build_prompt, default_battery, default_proposer_pools, default_responder_offers,
    default_waiting_grid, enumerate_settings, paper_example_setting, GameKind, GameSetting,
    GridSpec, Prospect, VariantSpec,
};
use econprobe_core::parse::{parse_response, Decision, Reply};
use econprobe_core::seeds;
use econprobe_core::subjects::{sample, AgentParams, SubjectSpec, SyntheticSpec};

fn report(criterion: u32, pass: bool, detail: &str) {
    println!("[criterion {criterion}] {} - {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_01_fehr_schmidt_round_trip() {
    let check = check_fehr_schmidt(41);
    report(1, check.pass, &check.detail);
}

#[test]
fn criterion_02_cpt_round_trip() {
    let check = check_cpt(43);
    report(2, check.pass, &check.detail);
}

#[test]
fn criterion_03_rational_agent_identity() {
    let check = check_rational_identity(47);
    report(3, check.pass, &check.detail);
}

#[test]
fn criterion_04_hyperbolic_round_trip() {
    let check = check_hyperbolic(53);
    report(4, check.pass, &check.detail);
}

#[test]
fn criterion_05_optimizer_matches_grid_search() {
    // two 2-parameter sub-fits against an exhaustive grid at step 1e-3: the
    // bounded simplex must reach an objective at least as low (within 1e-6)
    let truth = CptParams::new(0.88, 0.88, 2.25, 0.61, 0.69);
    let battery = default_battery();

    // deterministic perturbation moves the least-squares optimum off any
    // grid node and away from zero, so the comparison is nontrivial
    let perturb = |i: usize, ce: f64| ce + 0.4 * ((i % 3) as f64 - 1.0);
    let gains: Vec<(Prospect, f64)> = battery
        .iter()
        .filter(|e| e.prospect.is_gain())
        .take(10)
        .enumerate()
        .map(|(i, e)| (e.prospect.clone(), perturb(i, predict_ce(&truth, &e.prospect).unwrap())))
        .collect();
    let losses: Vec<(Prospect, f64)> = battery
        .iter()
        .filter(|e| e.prospect.is_loss())
        .take(10)
        .enumerate()
        .map(|(i, e)| (e.prospect.clone(), perturb(i, predict_ce(&truth, &e.prospect).unwrap())))
        .collect();

    // gains identify (alpha, phi_plus); losses identify (beta, phi_minus)
    let gain_objective = |x: &[f64]| -> f64 {
        let params = CptParams::new(x[0], truth.beta, truth.lambda, x[1], truth.phi_minus);
        gains.iter().map(|(p, ce)| (predict_ce(&params, p).unwrap() - ce).powi(2)).sum()
    };
    let loss_objective = |x: &[f64]| -> f64 {
        let params = CptParams::new(truth.alpha, x[0], truth.lambda, truth.phi_plus, x[1]);
        losses.iter().map(|(p, ce)| (predict_ce(&params, p).unwrap() - ce).powi(2)).sum()
    };

    let mut details = Vec::new();
    let bounds_box: [(f64, f64); 2] = [(0.2, 1.5), (0.3, 2.0)];
    for (name, bounds, objective) in [
        ("gains", bounds_box, &gain_objective as &dyn Fn(&[f64]) -> f64),
        ("losses", bounds_box, &loss_objective as &dyn Fn(&[f64]) -> f64),
    ] {
        let start = Instant::now();
        let mut grid_best = f64::INFINITY;
        let steps0 = ((bounds[0].1 - bounds[0].0) / 1e-3).round() as usize;
        let steps1 = ((bounds[1].1 - bounds[1].0) / 1e-3).round() as usize;
        for i in 0..=steps0 {
            let a = bounds[0].0 + i as f64 * 1e-3;
            for j in 0..=steps1 {
                let b = bounds[1].0 + j as f64 * 1e-3;
                let f = objective(&[a, b]);
                if f < grid_best {
                    grid_best = f;
                }
            }
        }
        let starts = econprobe_core::estimation::halton_starts(&bounds, 8, 5);
        let result = minimize_bounded(objective, &bounds, &starts).unwrap();
        let gap = result.fx - grid_best;
        details.push(format!(
            "{name}: simplex {:.3e} vs grid {grid_best:.3e} (gap {gap:.2e}, {:.1}s)",
            result.fx,
            start.elapsed().as_secs_f64()
        ));
        assert!(
            gap <= 1e-6,
            "{name}: simplex {:.6e} worse than grid {:.6e}",
            result.fx,
            grid_best
        );
    }
    report(5, true, &details.join("; "));
}

#[test]
fn criterion_06_bootstrap_coverage_under_noise() {
    // 10 points per setting x 50 replicates, exactly; over 20 seeded noisy
    // trials the 95% interval must cover the true guilt parameter in >= 17.
    // Even pools keep the integer-offer rounding unbiased at beta = 0.5.
    let true_beta = 0.5;
    let pools: Vec<u32> = vec![2, 4, 6, 8, 10];
    let (responder_pool, offers) = default_responder_offers();
    let mut covered = 0;
    for trial in 0..20u64 {
        let subject = SubjectSpec::synthetic(
            "noisy",
            SyntheticSpec {
                agent: AgentParams::FehrSchmidt { alpha: 0.75, beta: true_beta },
                noise_seed: 1000 + trial,
                response_noise: 0.1,
            },
        );
        let variant = VariantSpec::canonical();
        let trial_seed = seeds::derive(7000, &["coverage-trial", &trial.to_string()]);

        let mut proposer_offers = Vec::new();
        for &pool in &pools {
            let setting = GameSetting::UltimatumProposer { pool };
            let prompt = build_prompt(&setting, &variant).unwrap();
            let transcripts = sample(&subject, &prompt, &setting, 100, trial_seed).unwrap();
            let offers: Vec<u32> = transcripts
                .iter()
                .filter_map(|t| match parse_response(&setting, &variant, &t.raw_text).status {
                    econprobe_core::parse::ParseStatus::Valid(Reply::Proposer { offer, .. }) => {
                        Some(offer)
                    }
                    _ => None,
                })
                .collect();
            proposer_offers.push((pool, offers));
        }
        let mut responder_accepts = Vec::new();
        for &offer in &offers {
            let setting = GameSetting::UltimatumResponder { pool: responder_pool, offer };
            let prompt = build_prompt(&setting, &variant).unwrap();
            let transcripts = sample(&subject, &prompt, &setting, 100, trial_seed).unwrap();
            let accepts: Vec<bool> = transcripts
                .iter()
                .filter_map(|t| match parse_response(&setting, &variant, &t.raw_text).status {
                    econprobe_core::parse::ParseStatus::Valid(Reply::Responder {
                        decision,
                        ..
                    }) => Some(decision == Decision::Accept),
                    _ => None,
                })
                .collect();
            responder_accepts.push((offer, accepts));
        }

        let observations =
            FsObservations { responder_pool, proposer_offers, responder_accepts };
        let params = fs_bootstrap(&observations, 10, 50, trial_seed).unwrap();
        let ci = params.ci.unwrap();
        if ci.beta_interval.0 <= true_beta && true_beta <= ci.beta_interval.1 {
            covered += 1;
        }
    }
    report(6, covered >= 17, &format!("coverage {covered}/20 trials (need >= 17)"));
}

#[test]
fn criterion_07_parser_corpus_and_round_trip_totality() {
    // the corpus itself is asserted in detail by the core test suite; here
    // the acceptance gate re-runs totality: every synthetic agent's reply
    // parses as valid over every enumerated default setting
    let agents: Vec<AgentParams> = vec![
        AgentParams::Rational,
        AgentParams::FehrSchmidt { alpha: 0.75, beta: 0.5 },
        AgentParams::Cpt { alpha: 0.88, beta: 0.88, lambda: 2.25, phi_plus: 0.61, phi_minus: 0.69 },
        AgentParams::Hyperbolic { k_per_month: 0.1 },
    ];
    let (pool, offers) = default_responder_offers();
    let grids = vec![
        GridSpec::UltimatumProposer { pools: default_proposer_pools() },
        GridSpec::UltimatumResponder { pool, offers },
        GridSpec::Gambling { battery: default_battery() },
        GridSpec::Waiting(default_waiting_grid()),
    ];
    let variant = VariantSpec::canonical();
    let mut n_checked = 0u32;
    for grid in grids {
        for setting in enumerate_settings(&grid).unwrap() {
            for agent in &agents {
                let plays = match setting.game() {
                    GameKind::UltimatumProposer | GameKind::UltimatumResponder => matches!(
                        agent,
                        AgentParams::FehrSchmidt { .. } | AgentParams::Rational
                    ),
                    GameKind::Gambling => {
                        matches!(agent, AgentParams::Cpt { .. } | AgentParams::Rational)
                    }
                    GameKind::Waiting => {
                        matches!(agent, AgentParams::Hyperbolic { .. } | AgentParams::Rational)
                    }
                };
                if !plays {
                    continue;
                }
                let raw = econprobe_core::subjects::synthetic_respond(agent, &setting, 0.0, 3)
                    .unwrap();
                let outcome = parse_response(&setting, &variant, &raw);
                assert!(outcome.is_valid(), "{}: {raw}", setting.id());
                n_checked += 1;
            }
        }
    }
    // two applicable agents per game over (9 + 11 + 56 + 217) settings
    let expected = 2 * (9 + 11 + 56 + 217);
    report(
        7,
        n_checked == expected,
        &format!("{n_checked}/{expected} synthetic replies parsed valid across all settings"),
    );
}

#[test]
fn criterion_08_competence_fixtures() {
    use Decision::{Accept as A, Reject as R};
    let setting = paper_example_setting();
    let one_switch = gambling_reply_monotone(&setting, &[A, A, A, R, R, R, R]);
    let two_switches = gambling_reply_monotone(&setting, &[A, A, R, A, R, R, R]);

    // waiting zero-money probe: preferring $0 now at 50 years fails
    fn ie(value: f64) -> Equivalent {
        Equivalent {
            key: "d".into(),
            value,
            censored: Censoring::None,
            bracket: (value + 5.0, value - 5.0),
            multiple_crossings: false,
        }
    }
    let ies = vec![(1u32, ie(980.0)), (600u32, ie(50.0))];
    let zero_fail =
        competence_waiting("s", 1.0, &ies, &[(1, 1.0), (600, 0.4)]).unwrap();
    let zero_pass =
        competence_waiting("s", 1.0, &ies, &[(1, 1.0), (600, 0.9)]).unwrap();

    // ultimatum arithmetic mismatch is counted invalid
    let reply = Reply::Proposer { offer: 4, stated_self: Some(5.0), stated_other: Some(5.0) };
    let (_, _, consistent) =
        econprobe_core::parse::extract_stated_payoffs(&reply, 10, None).unwrap();

    // strict 80% boundary
    let at_boundary = competence_ultimatum(GameKind::UltimatumProposer, "s", 100, 80);
    let above_boundary = competence_ultimatum(GameKind::UltimatumProposer, "s", 100, 81);
    let gambling_boundary_fail = competence_gambling("s", 100, 80);
    let gambling_boundary_pass = competence_gambling("s", 100, 81);

    let pass = one_switch
        && !two_switches
        && !zero_fail.pass
        && zero_pass.pass
        && !consistent
        && !at_boundary.pass
        && above_boundary.pass
        && !gambling_boundary_fail.pass
        && gambling_boundary_pass.pass;
    report(
        8,
        pass,
        "one-switch pass, two-switch fail, $0-probe gating, arithmetic mismatch, strict 80/100 vs 81/100",
    );
}

#[test]
fn criterion_09_weighting_function_properties() {
    let mut phi = 0.3;
    while phi <= 2.0 + 1e-12 {
        assert_eq!(weight(0.0, phi).unwrap(), 0.0, "w(0) must be exactly 0 at phi={phi}");
        assert_eq!(weight(1.0, phi).unwrap(), 1.0, "w(1) must be exactly 1 at phi={phi}");
        let mut previous = 0.0;
        for i in 1..=99 {
            let p = i as f64 / 100.0;
            let w = weight(p, phi).unwrap();
            assert!(w > previous, "not strictly increasing at p={p}, phi={phi}");
            previous = w;
        }
        phi += 0.01;
    }
    for i in 0..=100 {
        let p = i as f64 / 100.0;
        assert!((weight(p, 1.0).unwrap() - p).abs() < 1e-12, "w(p; 1) must equal p");
    }
    report(9, true, "w(0)=0 and w(1)=1 exact, strictly increasing for phi in [0.3, 2], identity at phi=1");
}

/// Optional live-run anchors; requires endpoint credentials. Reported, not
/// gated, since model behavior drifts across versions.
///
/// Set ECONPROBE_LIVE_URL, ECONPROBE_LIVE_MODEL, and ECONPROBE_LIVE_TOKEN_ENV
/// (the name of the env var holding the bearer token), then run
/// `cargo test -p econprobe-cli --test acceptance -- --ignored --nocapture`.
#[test]
#[ignore = "requires live endpoint credentials"]
fn criterion_10_live_run_anchors() {
    let Ok(url) = std::env::var("ECONPROBE_LIVE_URL") else {
        println!("[criterion 10] SKIP - ECONPROBE_LIVE_URL not set");
        return;
    };
    let model = std::env::var("ECONPROBE_LIVE_MODEL").unwrap_or_else(|_| "gpt-4".into());
    let token_env = std::env::var("ECONPROBE_LIVE_TOKEN_ENV").ok();

    use econprobe_core::subjects::{RemoteSpec, RetryPolicy, SubjectKind};
    let config = RunConfig {
        master_seed: 42,
        n_samples: 100,
        output_dir: None,
        subjects: vec![SubjectSpec {
            id: "live".into(),
            kind: SubjectKind::Remote(RemoteSpec {
                base_url: url,
                model_name: model,
                temperature: 1.0,
                max_tokens: 512,
                auth_env: token_env,
                max_parallel: 4,
                retry: RetryPolicy::default(),
                rate_limit: None,
                timeout_secs: 120,
            }),
        }],
        games: vec![
            GameConfig::UltimatumProposer { pools: None },
            GameConfig::UltimatumResponder { pool: None, offers: None },
            GameConfig::Gambling { battery: None },
            GameConfig::Waiting { delayed_amount: None, delays_months: None, immediate_amounts: None },
        ],
        variants: Vec::new(),
        bootstrap: BootstrapConfig::default(),
        human_reference: HumanReference::classic(),
    };
    let fits = econprobe_cli::validate::run_synthetic(&config, "live").unwrap();
    if let Some(subject) = fits.subjects.get("live") {
        if let Some(fs) = &subject.fehr_schmidt {
            println!(
                "[criterion 10] live mean offer share {:.3} (anchor ~0.46)",
                fs.mean_offer_share
            );
        }
        if let Some(cpt) = &subject.cpt {
            println!(
                "[criterion 10] live CPT R^2 {:?} (anchor ~0.99)",
                cpt.params.fit.as_ref().and_then(|f| f.r_squared)
            );
        }
        if let Some(h) = &subject.hyperbolic {
            println!(
                "[criterion 10] live discounting R^2 {:?} (anchor ~0.99)",
                h.params.fit.r_squared
            );
        }
    }
}
