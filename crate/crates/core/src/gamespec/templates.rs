//! Prompt templates and rendering.
//!
//! The canonical premise/instructions/answer-format/user-prompt text for each
//! game is fixed; a golden-fixture test pins the rendered bundles
//! byte-for-byte. Variants perturb the canonical text: the format ablation
//! drops the free-text reason field, the choice ablation permutes option
//! order, and interventions prepend stance sentences, append a reasoning cue,
//! attach worked examples, or swap in persona framing.

use rand::seq::SliceRandom;

use super::{
    AgeGroup, BiasDimension, DirectStance, ExampleKind, FormatAblation, GameKind, GameSetting,
    Intervention, PersonaMode, PromptBundle, Prospect, VariantError, VariantSpec,
};
use crate::seeds;

const PROPOSER_PREMISE: &str = "You are playing a game where you have a certain amount of money. You'll choose to offer some of your money to the other player. The other player can either accept or reject your offer. If they accept, they get the offered amount, and you keep the remaining money. If they reject, both of you get nothing.";

const RESPONDER_PREMISE: &str = "You are playing a game where the other player has a certain amount of money. They will offer you a sum of money. You have two choices: accept or reject the offer. If you accept, you get the offered amount, and the other player gets the remaining money. If you reject, both of you get nothing.";

const PROPOSER_INSTRUCTIONS: &str = "First, decide how much to offer. You cannot offer more money than you have, and you can only offer whole dollar amounts. Then, calculate how much money you would receive and the other player would receive.";

const RESPONDER_INSTRUCTIONS: &str = "First, calculate how much money you would receive and the other player would receive. Then, decide whether or not to accept or reject the offer.";

const PROPOSER_ANSWER_FORMAT: &str = "Please answer in the following format:\nOffer: {offer as an integer, formatted with a dollar sign in front and nothing else before or after the integer}\nCalculation: {calculation}\nReason: {reason you chose that offer}";

const PROPOSER_ANSWER_FORMAT_REDUCED: &str = "Please answer in the following format:\nOffer: {offer as an integer, formatted with a dollar sign in front and nothing else before or after the integer}\nCalculation: {calculation}";

const RESPONDER_ANSWER_FORMAT: &str = "Please answer in the following format:\nCalculation: {calculation}\nDecision: {accept/reject}\nReason: {reason you made that decision}";

const RESPONDER_ANSWER_FORMAT_REDUCED: &str = "Please answer in the following format:\nCalculation: {calculation}\nDecision: {accept/reject}";

const GAMBLING_PREMISE: &str = "You are given a prospect and a set of sure options. You will compare the prospect to each of the sure options one-by-one. If you reject the sure option, you would play the prospect. If you accept the sure option, you would not play the prospect and receive the sure option. If the dollar values are positive, you win that amount. If the dollar values are negative, you lose that amount.";

const GAMBLING_INSTRUCTIONS: &str = "For each sure option, indicate whether you would accept or reject the sure option.";

const GAMBLING_ANSWER_FORMAT: &str = "Please answer in the following format. Do not deviate from the format, and do not add any additional words to your response outside of the format:\n\n{sure option 1}: {accept/reject}\n{sure option 2}: {accept/reject}\n...\n{sure option 7}: {accept/reject}\nReason: {reason for your choices}";

const GAMBLING_ANSWER_FORMAT_REDUCED: &str = "Please answer in the following format. Do not deviate from the format, and do not add any additional words to your response outside of the format:\n\n{sure option 1}: {accept / reject}\n{sure option 2}: {accept / reject}\n...\n{sure option 7}: {accept / reject}";

const WAITING_PREMISE: &str = "You are given two monetary options. You must choose one.";

const WAITING_INSTRUCTIONS: &str = "When answering, copy the exact phrase of the option you choose, including the letters at the beginning if applicable. You cannot ask any follow-up questions.";

const WAITING_ANSWER_FORMAT: &str = "Please answer in the following format. Do not deviate from the format, and do not add any additional words to your response outside of the format:\nAnswer: {exact phrase of option you choose}\nReason: {reason you chose that option}";

const WAITING_ANSWER_FORMAT_REDUCED: &str = "Please answer in the following format. Do not deviate from the format, and do not add any additional words to your response outside of the format:\nAnswer: {exact phrase of option you choose}";

// Persona framings. The middle-aged role-play text opens with "Image" rather
// than "Imagine"; the wording is kept verbatim from the study materials.
const PERSONA_ROLEPLAY_TEEN: &str = "Imagine that you are a teenager. You are given a prospect and a set of sure options. You will compare the prospect to each of the sure options one-by-one. If you reject the sure option, you would play the prospect. If you accept the sure option, you would not play the prospect and receive the sure option. If the dollar values are positive, you win that amount. If the dollar values are negative, you lose that amount. Remember that you are a teenager and should act according to your preferences as a teenager.";

const PERSONA_ROLEPLAY_MIDDLE: &str = "Image that you are middle aged. You are given a prospect and a set of sure options. You will compare the prospect to each of the sure options one-by-one. If you reject the sure option, you would play the prospect. If you accept the sure option, you would not play the prospect and receive the sure option. If the dollar values are positive, you win that amount. If the dollar values are negative, you lose that amount. Remember that you are middle aged and should act according to your preferences as a middle aged person.";

const PERSONA_ROLEPLAY_SENIOR: &str = "Imagine that you are a senior citizen. You are given a prospect and a set of sure options. You will compare the prospect to each of the sure options one-by-one. If you reject the sure option, you would play the prospect. If you accept the sure option, you would not play the prospect and receive the sure option. If the dollar values are positive, you win that amount. If the dollar values are negative, you lose that amount. Remember that you are a senior citizen and should act according to your preferences as a senior citizen.";

const PERSONA_ADVICE_TEEN: &str = "Imagine that you are giving advice to a teenager. They are given a prospect and a set of sure options. They will compare the prospect to each of the sure options one-by-one. If they reject the sure option, they would play the prospect. If they accept the sure option, they would not play the prospect and receive the sure option. If the dollar values are positive, they win that amount. If the dollar values are negative, they lose that amount. Remember that you are giving advice to a teenager and should give advice according to their preferences as a teenager.";

const PERSONA_ADVICE_MIDDLE: &str = "Imagine that you are giving advice to someone middle aged. They are given a prospect and a set of sure options. They will compare the prospect to each of the sure options one-by-one. If they reject the sure option, they would play the prospect. If they accept the sure option, they would not play the prospect and receive the sure option. If the dollar values are positive, they win that amount. If the dollar values are negative, they lose that amount. Remember that you are giving advice to a middle aged person and should give advice according to their preferences as a middle aged person.";

const PERSONA_ADVICE_SENIOR: &str = "Imagine that you are giving advice to a senior citizen. They are given a prospect and a set of sure options. They will compare the prospect to each of the sure options one-by-one. If they reject the sure option, they would play the prospect. If they accept the sure option, they would not play the prospect and receive the sure option. If the dollar values are positive, they win that amount. If the dollar values are negative, they lose that amount. Remember that you are giving advice to a senior citizen and should give advice according to their preferences as a senior citizen.";

/// Reasoning cue appended to the instructions under the zero-shot
/// chain-of-thought intervention.
pub const ZERO_SHOT_COT_CUE: &str = "Let's think step by step.";

/// Two-decimal dollar amount without a currency symbol, e.g. `-52.60`.
pub fn format_dollars_cents(x: f64) -> String {
    // avoid "-0.00"
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.2}")
}

/// Percentage with the shortest exact representation, e.g. `10%` or `12.5%`.
pub fn format_percent(p: f64) -> String {
    let pct = p * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}%", pct.round() as i64)
    } else {
        let s = format!("{pct:.4}");
        format!("{}%", s.trim_end_matches('0').trim_end_matches('.'))
    }
}

/// Render a delay in months the way the prompts show it: months below a
/// year, whole years otherwise.
pub fn format_delay(months: u32) -> String {
    if months >= 12 && months % 12 == 0 {
        let years = months / 12;
        if years == 1 {
            "1 year".to_string()
        } else {
            format!("{years} years")
        }
    } else if months == 1 {
        "1 month".to_string()
    } else {
        format!("{months} months")
    }
}

fn prospect_phrase(prospect: &Prospect) -> String {
    prospect
        .outcomes
        .iter()
        .map(|(x, p)| format!("{} dollars with {} probability", format_dollars_cents(*x), format_percent(*p)))
        .collect::<Vec<_>>()
        .join(" and ")
}

/// The phrase printed for one sure option, echoed back by subjects.
pub fn sure_option_phrase(amount: f64) -> String {
    format!("{} dollars with 100% probability", format_dollars_cents(amount))
}

/// The two waiting option phrases in canonical order: delayed first, then
/// immediate.
pub fn waiting_option_phrases(delayed_amount: u32, delay_months: u32, immediate_amount: u32) -> [String; 2] {
    [
        format!("${} in {}", delayed_amount, format_delay(delay_months)),
        format!("${immediate_amount} now"),
    ]
}

fn positional_labels(n: usize, custom: Option<&Vec<String>>) -> Vec<String> {
    match custom {
        Some(labels) => labels.clone(),
        None => (0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect(),
    }
}

fn check_applicability(setting: &GameSetting, variant: &VariantSpec) -> Result<(), VariantError> {
    let game = setting.game();
    if let Some(ablation) = &variant.choice_ablation {
        let n = match setting {
            GameSetting::Gambling(g) => g.sure_options.len(),
            GameSetting::Waiting(_) => 2,
            _ => {
                return Err(VariantError::NotApplicable(format!(
                    "choice ablation does not apply to {}",
                    game.as_str()
                )))
            }
        };
        if !ablation.is_permutation_of(n) {
            return Err(VariantError::NotApplicable(format!(
                "choice ablation {:?} is not a permutation of {n} options",
                ablation.order
            )));
        }
        if let Some(labels) = &ablation.labels {
            if labels.len() != n {
                return Err(VariantError::NotApplicable(format!(
                    "{} labels for {n} options",
                    labels.len()
                )));
            }
        }
    }
    let gambling_only = matches!(
        variant.intervention,
        Intervention::Direct { .. }
            | Intervention::OneShot { .. }
            | Intervention::TwoShot { .. }
            | Intervention::Persona { .. }
    );
    if gambling_only && game != GameKind::Gambling {
        return Err(VariantError::NotApplicable(format!(
            "intervention applies only to the gambling game, not {}",
            game.as_str()
        )));
    }
    Ok(())
}

fn direct_sentence(stance: DirectStance, dimension: BiasDimension) -> &'static str {
    match (stance, dimension) {
        (DirectStance::Averse, BiasDimension::Risk) => "You are risk averse.",
        (DirectStance::NotAverse, BiasDimension::Risk) => "You are not risk averse.",
        (DirectStance::Seeking, BiasDimension::Risk) => "You are risk seeking.",
        (DirectStance::Averse, BiasDimension::Loss) => "You are loss averse.",
        (DirectStance::NotAverse, BiasDimension::Loss) => "You are not loss averse.",
        (DirectStance::Seeking, BiasDimension::Loss) => "You are loss seeking.",
    }
}

fn persona_premise(mode: PersonaMode, age: AgeGroup) -> &'static str {
    match (mode, age) {
        (PersonaMode::RolePlay, AgeGroup::Teenager) => PERSONA_ROLEPLAY_TEEN,
        (PersonaMode::RolePlay, AgeGroup::MiddleAged) => PERSONA_ROLEPLAY_MIDDLE,
        (PersonaMode::RolePlay, AgeGroup::Senior) => PERSONA_ROLEPLAY_SENIOR,
        (PersonaMode::Advice, AgeGroup::Teenager) => PERSONA_ADVICE_TEEN,
        (PersonaMode::Advice, AgeGroup::MiddleAged) => PERSONA_ADVICE_MIDDLE,
        (PersonaMode::Advice, AgeGroup::Senior) => PERSONA_ADVICE_SENIOR,
    }
}

/// Assemble the full prompt for a setting under a variant.
///
/// Deterministic: the same inputs always yield identical bytes. The
/// canonical variant reproduces the fixture corpus exactly.
pub fn build_prompt(setting: &GameSetting, variant: &VariantSpec) -> Result<PromptBundle, VariantError> {
    check_applicability(setting, variant)?;
    let reduced = variant.format_ablation == FormatAblation::ReducedFields;

    let (mut premise, mut instructions, mut answer_format, user_prompt) = match setting {
        GameSetting::UltimatumProposer { pool } => (
            PROPOSER_PREMISE.to_string(),
            PROPOSER_INSTRUCTIONS.to_string(),
            if reduced { PROPOSER_ANSWER_FORMAT_REDUCED } else { PROPOSER_ANSWER_FORMAT }.to_string(),
            format!("You have {pool} dollars. How much do you offer?"),
        ),
        GameSetting::UltimatumResponder { pool, offer } => (
            RESPONDER_PREMISE.to_string(),
            RESPONDER_INSTRUCTIONS.to_string(),
            if reduced { RESPONDER_ANSWER_FORMAT_REDUCED } else { RESPONDER_ANSWER_FORMAT }.to_string(),
            format!(
                "The other player has {pool} dollars. They offer you {offer} dollars. Do you accept or reject the offer?"
            ),
        ),
        GameSetting::Gambling(g) => {
            let order: Vec<usize> = match &variant.choice_ablation {
                Some(a) => a.order.clone(),
                None => (0..g.sure_options.len()).collect(),
            };
            let lines: Vec<String> =
                order.iter().map(|&i| sure_option_phrase(g.sure_options[i])).collect();
            let user = format!(
                "The prospect is {}. The expected value of the prospect is {} dollars.\nBelow are the alternative sure outcomes.\n{}",
                prospect_phrase(&g.prospect),
                format_dollars_cents(g.expected_value),
                lines.join("\n")
            );
            (
                GAMBLING_PREMISE.to_string(),
                GAMBLING_INSTRUCTIONS.to_string(),
                if reduced { GAMBLING_ANSWER_FORMAT_REDUCED } else { GAMBLING_ANSWER_FORMAT }.to_string(),
                user,
            )
        }
        GameSetting::Waiting(w) => {
            let phrases = waiting_option_phrases(w.delayed_amount, w.delay_months, w.immediate_amount);
            let order: Vec<usize> = match &variant.choice_ablation {
                Some(a) => a.order.clone(),
                None => vec![0, 1],
            };
            let labels = positional_labels(
                2,
                variant.choice_ablation.as_ref().and_then(|a| a.labels.as_ref()),
            );
            let lines: Vec<String> = order
                .iter()
                .enumerate()
                .map(|(pos, &i)| format!("{}. {}", labels[pos], phrases[i]))
                .collect();
            (
                WAITING_PREMISE.to_string(),
                WAITING_INSTRUCTIONS.to_string(),
                if reduced { WAITING_ANSWER_FORMAT_REDUCED } else { WAITING_ANSWER_FORMAT }.to_string(),
                format!("You can either choose:\n{}", lines.join("\n")),
            )
        }
    };

    match &variant.intervention {
        Intervention::None => {}
        Intervention::Direct { stance, dimension } => {
            premise = format!("{} {premise}", direct_sentence(*stance, *dimension));
        }
        Intervention::ZeroShotCot => {
            instructions = format!("{instructions} {ZERO_SHOT_COT_CUE}");
        }
        Intervention::OneShot { example, order_seed } => {
            let blocks = build_intervention_examples(&[*example], *order_seed);
            answer_format = format!("{answer_format}\n\n{}", blocks.join("\n\n"));
        }
        Intervention::TwoShot { order_seed } => {
            let blocks =
                build_intervention_examples(&[ExampleKind::Gain, ExampleKind::Loss], *order_seed);
            answer_format = format!("{answer_format}\n\n{}", blocks.join("\n\n"));
        }
        Intervention::Persona { mode, age } => {
            premise = persona_premise(*mode, *age).to_string();
        }
    }

    Ok(PromptBundle {
        game: setting.game(),
        setting_id: setting.id(),
        variant: variant.clone(),
        premise,
        instructions,
        answer_format,
        user_prompt,
    })
}

// Demonstration prospects for the one-/two-shot interventions. They are
// disjoint from the evaluation battery, and the frozen accept/reject choices
// exhibit the target behavior (risk aversion for the gain, loss aversion for
// the loss): a test cross-checks them against the reference median agent.
const DEMO_GAIN_OPTIONS: [f64; 7] = [0.00, 4.16, 10.26, 19.22, 32.37, 51.68, 80.00];
const DEMO_GAIN_ACCEPTS: [bool; 7] = [false, false, false, false, true, true, true];
const DEMO_LOSS_OPTIONS: [f64; 7] = [0.00, -4.16, -10.26, -19.22, -32.37, -51.68, -80.00];
const DEMO_LOSS_ACCEPTS: [bool; 7] = [true, true, true, true, true, false, false];

const DEMO_GAIN_REASON: &str =
    "A guaranteed amount is worth more to me than a gamble with a similar expected value.";
const DEMO_LOSS_REASON: &str =
    "I would rather lock in a small certain loss than risk a larger one.";

/// Build the worked-example text blocks for the one- and two-shot
/// interventions.
///
/// The seven accept/reject lines in each example are emitted in a permuted
/// order derived from `order_seed`, so a subject cannot copy the pattern
/// positionally. Identical seeds give identical bytes.
pub fn build_intervention_examples(kinds: &[ExampleKind], order_seed: u64) -> Vec<String> {
    kinds
        .iter()
        .enumerate()
        .map(|(idx, kind)| {
            let (amount, options, accepts, reason): (f64, &[f64; 7], &[bool; 7], &str) = match kind
            {
                ExampleKind::Gain => (80.0, &DEMO_GAIN_OPTIONS, &DEMO_GAIN_ACCEPTS, DEMO_GAIN_REASON),
                ExampleKind::Loss => (-80.0, &DEMO_LOSS_OPTIONS, &DEMO_LOSS_ACCEPTS, DEMO_LOSS_REASON),
            };
            let prospect = Prospect::new_unchecked(
                "demo",
                vec![(amount, 0.5), (0.0, 0.5)],
            );
            let mut order: Vec<usize> = (0..7).collect();
            let kind_tag = match kind {
                ExampleKind::Gain => "gain",
                ExampleKind::Loss => "loss",
            };
            let mut rng = seeds::rng(order_seed, &["example-order", kind_tag, &idx.to_string()]);
            order.shuffle(&mut rng);
            let option_lines: Vec<String> =
                order.iter().map(|&i| sure_option_phrase(options[i])).collect();
            let answer_lines: Vec<String> = order
                .iter()
                .map(|&i| {
                    format!(
                        "{}: {}",
                        sure_option_phrase(options[i]),
                        if accepts[i] { "accept" } else { "reject" }
                    )
                })
                .collect();
            format!(
                "Example:\nThe prospect is {}. The expected value of the prospect is {} dollars.\nBelow are the alternative sure outcomes.\n{}\n\n{}\nReason: {}",
                prospect_phrase(&prospect),
                format_dollars_cents(prospect.expected_value()),
                option_lines.join("\n"),
                answer_lines.join("\n"),
                reason
            )
        })
        .collect()
}
