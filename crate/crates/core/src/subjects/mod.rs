//! Subjects: remote chat endpoints and synthetic agents.
//!
//! Both kinds answer the same prompts through [`sample`], which returns one
//! transcript per requested sample. Synthetic agents decide from known
//! utility parameters and emit canonically formatted text, so the whole
//! pipeline can be validated by parameter recovery.

mod remote;

pub use remote::{RateLimit, RemoteSpec, RetryPolicy};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::cpt::{self, CptParams};
use crate::gamespec::{
    sure_option_phrase, waiting_option_phrases, GameSetting, PromptBundle,
};
use crate::parse::ParseOutcome;
use crate::seeds;
use rand::Rng;

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("auth missing: environment variable {0} is not set")]
    AuthMissing(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// Known utility parameters for a synthetic agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum AgentParams {
    /// Inequity aversion: envy (alpha) and guilt (beta).
    FehrSchmidt { alpha: f64, beta: f64 },
    /// Prospect-theory risk and loss aversion.
    Cpt { alpha: f64, beta: f64, lambda: f64, phi_plus: f64, phi_minus: f64 },
    /// Hyperbolic time discounting.
    Hyperbolic { k_per_month: f64 },
    /// The expected-value maximizer: prospect-theory parameters all 1, no
    /// discounting, no inequity aversion.
    Rational,
}

/// A synthetic subject: an agent plus an optional response-noise level (the
/// probability that a response's decision boundary shifts by one grid step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub agent: AgentParams,
    #[serde(default)]
    pub noise_seed: u64,
    #[serde(default)]
    pub response_noise: f64,
}

impl SyntheticSpec {
    pub fn noise_free(agent: AgentParams) -> Self {
        Self { agent, noise_seed: 0, response_noise: 0.0 }
    }

    pub fn validate(&self) -> Result<(), SampleError> {
        if !(0.0..1.0).contains(&self.response_noise) {
            return Err(SampleError::InvalidRequest(format!(
                "response_noise {} outside [0, 1)",
                self.response_noise
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectKind {
    Remote(RemoteSpec),
    Synthetic(SyntheticSpec),
}

/// A subject under study, remote or synthetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: SubjectKind,
}

impl SubjectSpec {
    pub fn synthetic(id: impl Into<String>, spec: SyntheticSpec) -> Self {
        Self { id: id.into(), kind: SubjectKind::Synthetic(spec) }
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self.kind, SubjectKind::Synthetic(_))
    }
}

/// One sampled raw response, keyed by subject, setting, variant, and sample
/// index. Failed remote requests keep their slot with `failed` set rather
/// than disappearing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub schema_version: u32,
    pub subject_id: String,
    pub setting_id: String,
    pub variant_id: String,
    pub sample_index: u32,
    pub raw_text: String,
    /// Digest of the rendered prompt bytes.
    pub request_fingerprint: String,
    /// Unix seconds; zero for synthetic subjects so reruns are byte-identical.
    pub created_at: u64,
    #[serde(default)]
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse: Option<ParseOutcome>,
}

/// Ask a subject the same prompt `n` times, returning transcripts with
/// sample indices `0..n`.
///
/// Synthetic output is deterministic given (agent, setting, seed, index).
/// Remote requests send the bundle's system text and user prompt as chat
/// roles, with retries and rate limiting per the endpoint policy; indices
/// are assigned before dispatch so output order does not depend on request
/// interleaving.
pub fn sample(
    subject: &SubjectSpec,
    prompt: &PromptBundle,
    setting: &GameSetting,
    n: u32,
    seed: u64,
) -> Result<Vec<Transcript>, SampleError> {
    if n == 0 {
        return Err(SampleError::InvalidRequest("n must be at least 1".into()));
    }
    match &subject.kind {
        SubjectKind::Synthetic(spec) => {
            spec.validate()?;
            let fingerprint = prompt.fingerprint();
            let variant_id = prompt.variant_id();
            (0..n)
                .map(|index| {
                    let sample_seed = seeds::derive(
                        seed,
                        &[
                            "synthetic",
                            &spec.noise_seed.to_string(),
                            &prompt.setting_id,
                            &variant_id,
                            &index.to_string(),
                        ],
                    );
                    let raw_text = synthetic_respond(
                        &spec.agent,
                        setting,
                        spec.response_noise,
                        sample_seed,
                    )?;
                    Ok(Transcript {
                        schema_version: TRANSCRIPT_SCHEMA_VERSION,
                        subject_id: subject.id.clone(),
                        setting_id: prompt.setting_id.clone(),
                        variant_id: variant_id.clone(),
                        sample_index: index,
                        raw_text,
                        request_fingerprint: fingerprint.clone(),
                        created_at: 0,
                        failed: false,
                        error: None,
                        retries: 0,
                        parse: None,
                    })
                })
                .collect()
        }
        SubjectKind::Remote(spec) => remote::sample_remote(spec, &subject.id, prompt, n, seed),
    }
}

/// Whether an agent's utility model applies to a game. The rational agent
/// plays everything; the parametric agents play the game their model was
/// built for.
pub fn agent_plays(agent: &AgentParams, game: crate::gamespec::GameKind) -> bool {
    use crate::gamespec::GameKind::*;
    match game {
        UltimatumProposer | UltimatumResponder => {
            matches!(agent, AgentParams::FehrSchmidt { .. } | AgentParams::Rational)
        }
        Gambling => matches!(agent, AgentParams::Cpt { .. } | AgentParams::Rational),
        Waiting => matches!(agent, AgentParams::Hyperbolic { .. } | AgentParams::Rational),
    }
}

/// One-step boundary perturbation: -1, 0, or +1, where the nonzero cases
/// together occur with probability `noise`.
fn noise_shift(response_noise: f64, seed: u64) -> i64 {
    if response_noise <= 0.0 {
        return 0;
    }
    let mut rng = seeds::rng(seed, &["noise-shift"]);
    let draw: f64 = rng.random();
    if draw < response_noise / 2.0 {
        -1
    } else if draw < response_noise {
        1
    } else {
        0
    }
}

fn cpt_params_for(agent: &AgentParams) -> Option<CptParams> {
    match agent {
        AgentParams::Cpt { alpha, beta, lambda, phi_plus, phi_minus } => {
            Some(CptParams::new(*alpha, *beta, *lambda, *phi_plus, *phi_minus))
        }
        AgentParams::Rational => Some(CptParams::rational()),
        _ => None,
    }
}

const PROPOSER_REASON: &str = "I keep the share that matches my preferences.";
const RESPONDER_ACCEPT_REASON: &str = "The offer is worth more to me than nothing.";
const RESPONDER_REJECT_REASON: &str = "The split is too unequal to accept.";
const GAMBLING_REASON: &str = "I compared each sure option against the value of the prospect.";
const WAITING_NOW_REASON: &str = "The immediate amount outweighs the delayed payment for me.";
const WAITING_LATER_REASON: &str = "The delayed payment is worth the wait for me.";

/// Produce a correctly formatted response from a synthetic agent's decision
/// rule. Deterministic given (agent, setting, noise, seed).
///
/// Decision rules: a proposer offers `round((1 - beta) * P)`; a responder
/// accepts when the offer's inequity-adjusted utility is non-negative; a
/// gambler accepts a sure option when its value reaches the prospect's
/// subjective utility; a waiter takes the immediate amount when it reaches
/// the discounted delayed payment. Ties resolve toward accept / the sure
/// option / now. With `response_noise > 0` the decision boundary shifts one
/// grid step with that probability.
pub fn synthetic_respond(
    agent: &AgentParams,
    setting: &GameSetting,
    response_noise: f64,
    seed: u64,
) -> Result<String, SampleError> {
    let shift = noise_shift(response_noise, seed);
    match setting {
        GameSetting::UltimatumProposer { pool } => {
            let (_, beta) = match agent {
                AgentParams::FehrSchmidt { alpha, beta } => (*alpha, *beta),
                AgentParams::Rational => (0.0, 0.0),
                other => {
                    return Err(SampleError::ModelMismatch(format!(
                        "{other:?} cannot play the ultimatum game"
                    )))
                }
            };
            let base = ((1.0 - beta) * *pool as f64).round() as i64;
            let offer = (base + shift).clamp(0, *pool as i64) as u32;
            let keep = pool - offer;
            Ok(format!(
                "Offer: ${offer}\nCalculation: I receive ${keep} and the other player receives ${offer}.\nReason: {PROPOSER_REASON}"
            ))
        }
        GameSetting::UltimatumResponder { pool, offer } => {
            let (alpha, beta) = match agent {
                AgentParams::FehrSchmidt { alpha, beta } => (*alpha, *beta),
                AgentParams::Rational => (0.0, 0.0),
                other => {
                    return Err(SampleError::ModelMismatch(format!(
                        "{other:?} cannot play the ultimatum game"
                    )))
                }
            };
            // shifting the boundary by one step equals judging an offer one
            // step away
            let s = *offer as f64 - shift as f64;
            let p = *pool as f64;
            let utility = s - alpha * (p - 2.0 * s).max(0.0) - beta * (2.0 * s - p).max(0.0);
            let accept = utility >= 0.0;
            let (self_amount, other_amount) =
                if accept { (*offer, pool - offer) } else { (0, 0) };
            let decision = if accept { "accept" } else { "reject" };
            let reason = if accept { RESPONDER_ACCEPT_REASON } else { RESPONDER_REJECT_REASON };
            Ok(format!(
                "Calculation: I receive ${self_amount} and the other player receives ${other_amount}.\nDecision: {decision}\nReason: {reason}"
            ))
        }
        GameSetting::Gambling(g) => {
            let params = cpt_params_for(agent).ok_or_else(|| {
                SampleError::ModelMismatch(format!("{agent:?} cannot play the gambling game"))
            })?;
            let utility = cpt::predict_utility(&params, &g.prospect)
                .map_err(|e| SampleError::InvalidRequest(e.to_string()))?;
            let best_to_worst = g.options_best_to_worst();
            let accept_count = best_to_worst
                .iter()
                .take_while(|&&option| cpt::value(option, &params) >= utility)
                .count() as i64;
            let shifted = (accept_count + shift).clamp(0, best_to_worst.len() as i64) as usize;
            let accepted: Vec<f64> = best_to_worst[..shifted].to_vec();
            let lines: Vec<String> = g
                .sure_options
                .iter()
                .map(|&option| {
                    let accept = accepted.iter().any(|&a| a == option);
                    format!(
                        "{}: {}",
                        sure_option_phrase(option),
                        if accept { "accept" } else { "reject" }
                    )
                })
                .collect();
            Ok(format!("{}\nReason: {GAMBLING_REASON}", lines.join("\n")))
        }
        GameSetting::Waiting(w) => {
            let k = match agent {
                AgentParams::Hyperbolic { k_per_month } => *k_per_month,
                AgentParams::Rational => 0.0,
                other => {
                    return Err(SampleError::ModelMismatch(format!(
                        "{other:?} cannot play the waiting game"
                    )))
                }
            };
            let boundary = w.delayed_amount as f64 / (1.0 + k * w.delay_months as f64)
                + shift as f64 * w.grid_step as f64;
            let now = w.immediate_amount as f64 >= boundary;
            let phrases =
                waiting_option_phrases(w.delayed_amount, w.delay_months, w.immediate_amount);
            // canonical labels: A is the delayed option, B the immediate one
            let (answer, reason) = if now {
                (format!("B. {}", phrases[1]), WAITING_NOW_REASON)
            } else {
                (format!("A. {}", phrases[0]), WAITING_LATER_REASON)
            };
            Ok(format!("Answer: {answer}\nReason: {reason}"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamespec::{build_prompt, WaitingSetting, VariantSpec};
    use crate::parse::{parse_response, ParseStatus, Reply, TimeChoice};

    #[test]
    fn fehr_schmidt_proposer_offers_half_at_beta_half() {
        let agent = AgentParams::FehrSchmidt { alpha: 0.75, beta: 0.5 };
        let setting = GameSetting::UltimatumProposer { pool: 10 };
        let text = synthetic_respond(&agent, &setting, 0.0, 1).unwrap();
        assert!(text.starts_with("Offer: $5\n"), "{text}");
    }

    #[test]
    fn responder_boundary_matches_closed_form() {
        // alpha = 0.75, P = 10: accepts offers of $3 and up
        let agent = AgentParams::FehrSchmidt { alpha: 0.75, beta: 0.5 };
        for (offer, expect_accept) in [(0, false), (2, false), (3, true), (5, true), (10, true)] {
            let setting = GameSetting::UltimatumResponder { pool: 10, offer };
            let text = synthetic_respond(&agent, &setting, 0.0, 1).unwrap();
            assert_eq!(
                text.contains("Decision: accept"),
                expect_accept,
                "offer {offer}: {text}"
            );
        }
    }

    #[test]
    fn hyperbolic_boundary_and_tie_break() {
        let agent = AgentParams::Hyperbolic { k_per_month: 0.1 };
        // 1000 / (1 + 0.1 * 10) = 500
        for (amount, choice) in [(501, "B. $501 now"), (500, "B. $500 now"), (499, "A. $1000 in 10 months")] {
            let setting = GameSetting::Waiting(
                WaitingSetting::new(1000, 10, amount, 1).unwrap(),
            );
            let text = synthetic_respond(&agent, &setting, 0.0, 1).unwrap();
            assert!(text.contains(choice), "amount {amount}: {text}");
        }
    }

    #[test]
    fn rational_gambler_accepts_everything_above_expected_value() {
        use crate::gamespec::{sure_option_ladder, GamblingSetting, Prospect};
        let prospect = Prospect::new("px", vec![(-50.0, 0.1), (-100.0, 0.9)]).unwrap();
        let setting = GameSetting::Gambling(
            GamblingSetting::new(prospect, sure_option_ladder(-50.0, -100.0)).unwrap(),
        );
        let text = synthetic_respond(&AgentParams::Rational, &setting, 0.0, 1).unwrap();
        for accepted in ["-50.00", "-52.60", "-56.41", "-62.01", "-70.23", "-82.29"] {
            assert!(
                text.contains(&format!("{accepted} dollars with 100% probability: accept")),
                "{text}"
            );
        }
        assert!(text.contains("-100.00 dollars with 100% probability: reject"), "{text}");
    }

    #[test]
    fn rational_agent_is_deterministic_and_parseable() {
        let subject = SubjectSpec::synthetic(
            "rational",
            SyntheticSpec::noise_free(AgentParams::Rational),
        );
        let setting = GameSetting::Waiting(WaitingSetting::new(1000, 1, 920, 10).unwrap());
        let prompt = build_prompt(&setting, &VariantSpec::canonical()).unwrap();
        let transcripts = sample(&subject, &prompt, &setting, 3, 42).unwrap();
        assert_eq!(transcripts.len(), 3);
        assert_eq!(transcripts[0].raw_text, transcripts[1].raw_text);
        assert_eq!(transcripts[1].raw_text, transcripts[2].raw_text);
        assert_eq!(
            transcripts.iter().map(|t| t.sample_index).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        // with no discounting, $1000 later beats $920 now
        let outcome =
            parse_response(&setting, &VariantSpec::canonical(), &transcripts[0].raw_text);
        assert_eq!(
            outcome.status,
            ParseStatus::Valid(Reply::Waiting { choice: TimeChoice::Later })
        );
    }

    #[test]
    fn model_mismatch_is_reported() {
        let agent = AgentParams::Hyperbolic { k_per_month: 0.1 };
        let setting = GameSetting::UltimatumProposer { pool: 10 };
        assert!(matches!(
            synthetic_respond(&agent, &setting, 0.0, 1),
            Err(SampleError::ModelMismatch(_))
        ));
    }

    #[test]
    fn noise_shifts_offers_by_one_step() {
        let agent = AgentParams::FehrSchmidt { alpha: 0.75, beta: 0.5 };
        let setting = GameSetting::UltimatumProposer { pool: 10 };
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..200 {
            let text = synthetic_respond(&agent, &setting, 0.2, seed).unwrap();
            let offer: u32 = text
                .lines()
                .next()
                .unwrap()
                .trim_start_matches("Offer: $")
                .parse()
                .unwrap();
            seen.insert(offer);
        }
        assert_eq!(seen, [4, 5, 6].into_iter().collect());
    }
}
