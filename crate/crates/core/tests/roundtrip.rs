//! End-to-end parameter recovery on synthetic agents with known utilities:
//! prompts -> synthetic responses -> strict parsing -> aggregation ->
//! equivalents -> model fits.

use econprobe_core::behavior::{
    certainty_equivalent, immediate_equivalent, summarize, switching_point, Censoring,
    Equivalent, RunSummary,
};
use econprobe_core::estimation::cpt::{predict_ce, CptParams};
use econprobe_core::estimation::{fit_cpt, fit_hyperbolic, fs_point_estimate, AlphaEstimate};
use econprobe_core::gamespec::{
    build_prompt, default_battery, default_proposer_pools, default_responder_offers,
    default_waiting_grid, enumerate_settings, fine_waiting_grid, GameSetting, GridSpec,
    Prospect, VariantSpec,
};
use econprobe_core::parse::{parse_response, ParseOutcome, Reply};
use econprobe_core::subjects::{sample, AgentParams, SubjectSpec, SyntheticSpec};

fn all_default_grids() -> Vec<GridSpec> {
    let (pool, offers) = default_responder_offers();
    vec![
        GridSpec::UltimatumProposer { pools: default_proposer_pools() },
        GridSpec::UltimatumResponder { pool, offers },
        GridSpec::Gambling { battery: default_battery() },
        GridSpec::Waiting(default_waiting_grid()),
    ]
}

fn agents() -> Vec<(&'static str, AgentParams)> {
    vec![
        ("rational", AgentParams::Rational),
        ("fehr-schmidt", AgentParams::FehrSchmidt { alpha: 0.75, beta: 0.5 }),
        (
            "cpt-median",
            AgentParams::Cpt { alpha: 0.88, beta: 0.88, lambda: 2.25, phi_plus: 0.61, phi_minus: 0.69 },
        ),
        ("hyperbolic", AgentParams::Hyperbolic { k_per_month: 0.1 }),
    ]
}

fn agent_plays(agent: &AgentParams, setting: &GameSetting) -> bool {
    use econprobe_core::gamespec::GameKind::*;
    match setting.game() {
        UltimatumProposer | UltimatumResponder => {
            matches!(agent, AgentParams::FehrSchmidt { .. } | AgentParams::Rational)
        }
        Gambling => matches!(agent, AgentParams::Cpt { .. } | AgentParams::Rational),
        Waiting => matches!(agent, AgentParams::Hyperbolic { .. } | AgentParams::Rational),
    }
}

/// Sample a synthetic subject once per setting and parse each reply.
fn pipeline_outcomes(
    agent: AgentParams,
    grid: &GridSpec,
    n: u32,
    noise: f64,
    seed: u64,
) -> Vec<(GameSetting, Vec<ParseOutcome>)> {
    let subject = SubjectSpec::synthetic(
        "subject",
        SyntheticSpec { agent, noise_seed: seed, response_noise: noise },
    );
    let variant = VariantSpec::canonical();
    enumerate_settings(grid)
        .unwrap()
        .into_iter()
        .map(|setting| {
            let prompt = build_prompt(&setting, &variant).unwrap();
            let transcripts = sample(&subject, &prompt, &setting, n, seed).unwrap();
            let outcomes: Vec<ParseOutcome> = transcripts
                .iter()
                .map(|t| parse_response(&setting, &variant, &t.raw_text))
                .collect();
            (setting, outcomes)
        })
        .collect()
}

#[test]
fn synthetic_replies_parse_for_every_agent_and_setting() {
    let variant = VariantSpec::canonical();
    for grid in all_default_grids() {
        for setting in enumerate_settings(&grid).unwrap() {
            for (name, agent) in agents() {
                if !agent_plays(&agent, &setting) {
                    continue;
                }
                let raw = econprobe_core::subjects::synthetic_respond(&agent, &setting, 0.0, 7)
                    .unwrap();
                let outcome = parse_response(&setting, &variant, &raw);
                assert!(
                    outcome.is_valid(),
                    "agent {name} setting {} produced unparseable text:\n{raw}\n{outcome:?}",
                    setting.id()
                );
            }
        }
    }
}

fn gambling_ces(agent: AgentParams, noise: f64, seed: u64, n: u32) -> Vec<(Prospect, Equivalent)> {
    let grid = GridSpec::Gambling { battery: default_battery() };
    pipeline_outcomes(agent, &grid, n, noise, seed)
        .into_iter()
        .map(|(setting, outcomes)| {
            let GameSetting::Gambling(g) = &setting else { unreachable!() };
            let summary = summarize(&setting, &outcomes).unwrap();
            let ce = certainty_equivalent(g, &summary).unwrap();
            (g.prospect.clone(), ce)
        })
        .collect()
}

#[test]
fn cpt_round_trip_recovers_human_median_parameters() {
    let truth = [0.88, 0.88, 2.25, 0.61, 0.69];
    let agent = AgentParams::Cpt {
        alpha: truth[0],
        beta: truth[1],
        lambda: truth[2],
        phi_plus: truth[3],
        phi_minus: truth[4],
    };
    let ces = gambling_ces(agent, 0.0, 11, 1);
    let data: Vec<(Prospect, f64)> = ces
        .iter()
        .filter(|(_, ce)| ce.censored == Censoring::None)
        .map(|(p, ce)| (p.clone(), ce.value))
        .collect();
    assert!(data.len() >= 50, "unexpected censoring: {} usable", data.len());
    let fitted = fit_cpt(&data, 17).unwrap();
    let got = fitted.as_vec();
    for (i, (g, t)) in got.iter().zip(&truth).enumerate() {
        let rel = (g - t).abs() / t;
        let abs = (g - t).abs();
        assert!(
            rel <= 0.10 || abs <= 0.05,
            "parameter {i}: fitted {g:.4}, true {t}, rel {rel:.4}"
        );
    }
    let r2 = fitted.fit.as_ref().unwrap().r_squared.unwrap();
    assert!(r2 >= 0.98, "R^2 = {r2}");
}

#[test]
fn cpt_round_trip_rational_identity() {
    let ces = gambling_ces(AgentParams::Rational, 0.0, 13, 1);
    let data: Vec<(Prospect, f64)> = ces
        .iter()
        .filter(|(_, ce)| ce.censored == Censoring::None)
        .map(|(p, ce)| (p.clone(), ce.value))
        .collect();
    let fitted = fit_cpt(&data, 19).unwrap();
    for (i, value) in fitted.as_vec().iter().enumerate() {
        assert!(
            (0.97..=1.03).contains(value),
            "parameter {i} = {value:.4} outside [0.97, 1.03]"
        );
    }
    let r2 = fitted.fit.as_ref().unwrap().r_squared.unwrap();
    assert!(r2 >= 0.99, "R^2 = {r2}");
}

#[test]
fn ce_quantization_bound_holds_for_cpt_agents() {
    // pipeline CE differs from the analytic CE by at most half the largest
    // adjacent-option gap
    for (alpha, beta, lambda, phi_plus, phi_minus) in
        [(0.88, 0.88, 2.25, 0.61, 0.69), (1.1, 0.7, 1.5, 1.2, 0.9), (0.6, 1.2, 4.0, 0.8, 0.5)]
    {
        let params = CptParams::new(alpha, beta, lambda, phi_plus, phi_minus);
        let agent = AgentParams::Cpt { alpha, beta, lambda, phi_plus, phi_minus };
        for (prospect, ce) in gambling_ces(agent, 0.0, 3, 1) {
            if ce.censored != Censoring::None {
                continue;
            }
            let analytic = predict_ce(&params, &prospect).unwrap();
            let entry = default_battery()
                .into_iter()
                .find(|e| e.prospect.id == prospect.id)
                .unwrap();
            let setting = entry.to_setting().unwrap();
            let mut sorted = setting.sure_options.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let max_gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            assert!(
                (ce.value - analytic).abs() <= max_gap / 2.0 + 1e-9,
                "{}: pipeline {} vs analytic {} exceeds half max gap {}",
                prospect.id,
                ce.value,
                analytic,
                max_gap / 2.0
            );
        }
    }
}

#[test]
fn hyperbolic_round_trip_on_fine_grid() {
    for k in [0.01, 0.1, 1.0] {
        let grid = GridSpec::Waiting(fine_waiting_grid(vec![1, 6, 12, 60, 120, 300, 600]));
        let outcomes = pipeline_outcomes(AgentParams::Hyperbolic { k_per_month: k }, &grid, 1, 0.0, 5);
        let mut by_delay: std::collections::BTreeMap<u32, Vec<(f64, f64)>> =
            std::collections::BTreeMap::new();
        for (setting, parses) in &outcomes {
            let GameSetting::Waiting(w) = setting else { unreachable!() };
            let summary = summarize(setting, parses).unwrap();
            by_delay
                .entry(w.delay_months)
                .or_default()
                .push((w.immediate_amount as f64, summary.now_rate().unwrap()));
        }
        let ies: Vec<(f64, f64)> = by_delay
            .iter()
            .map(|(delay, points)| {
                let ie = immediate_equivalent(*delay, points).unwrap();
                assert_eq!(ie.censored, Censoring::None, "k={k} d={delay}");
                (*delay as f64, ie.value)
            })
            .collect();
        let fitted = fit_hyperbolic(&ies, 1000.0, 23).unwrap();
        let rel = (fitted.k - k).abs() / k;
        assert!(rel <= 0.05, "k = {k}: fitted {} (rel {rel:.4})", fitted.k);
        assert!(fitted.fit.r_squared.unwrap() >= 0.99);
    }
}

#[test]
fn fehr_schmidt_round_trip_noise_free() {
    let agent = AgentParams::FehrSchmidt { alpha: 0.75, beta: 0.5 };

    let proposer_grid = GridSpec::UltimatumProposer { pools: default_proposer_pools() };
    let proposer_outcomes = pipeline_outcomes(agent.clone(), &proposer_grid, 100, 0.0, 31);
    let summaries: Vec<_> = proposer_outcomes
        .iter()
        .map(|(setting, parses)| summarize(setting, parses).unwrap())
        .collect();
    let run = RunSummary::from_summaries(summaries);
    let omega = run.e_omega.unwrap();

    let (pool, offers) = default_responder_offers();
    let responder_grid = GridSpec::UltimatumResponder { pool, offers };
    let responder_outcomes = pipeline_outcomes(agent, &responder_grid, 100, 0.0, 37);
    let curve: Vec<(f64, f64)> = responder_outcomes
        .iter()
        .map(|(setting, parses)| {
            let GameSetting::UltimatumResponder { offer, .. } = setting else { unreachable!() };
            let summary = summarize(setting, parses).unwrap();
            (*offer as f64, summary.accept_rate().unwrap())
        })
        .collect();
    let sp = switching_point(&curve, 0.5).unwrap();
    assert_eq!(sp.censored, Censoring::None);

    let params = fs_point_estimate(sp.value, pool as f64, omega);
    assert!((params.beta - 0.5).abs() <= 0.06, "beta = {}", params.beta);
    match params.alpha {
        AlphaEstimate::Finite(a) => assert!((a - 0.75).abs() <= 0.20, "alpha = {a}"),
        AlphaEstimate::Infinite => panic!("alpha should be finite"),
    }
}

#[test]
fn reply_decisions_match_agent_boundaries_under_ablation() {
    // parsing an ablated response then mapping to canonical order equals
    // parsing the unablated counterpart
    use econprobe_core::gamespec::ChoiceAblation;
    let battery = default_battery();
    let entry = &battery[30];
    let setting = GameSetting::Gambling(entry.to_setting().unwrap());
    let agent = AgentParams::Cpt { alpha: 0.88, beta: 0.88, lambda: 2.25, phi_plus: 0.61, phi_minus: 0.69 };
    let raw = econprobe_core::subjects::synthetic_respond(&agent, &setting, 0.0, 9).unwrap();

    let canonical = parse_response(&setting, &VariantSpec::canonical(), &raw);
    let mut ablated_variant = VariantSpec::canonical();
    ablated_variant.choice_ablation = Some(ChoiceAblation::new(vec![3, 0, 6, 1, 5, 2, 4]));
    let ablated = parse_response(&setting, &ablated_variant, &raw);

    match (canonical.reply(), ablated.reply()) {
        (Some(Reply::Gambling { decisions: a }), Some(Reply::Gambling { decisions: b })) => {
            assert_eq!(a, b, "decisions must align to canonical order either way");
        }
        other => panic!("unexpected: {other:?}"),
    }
}
