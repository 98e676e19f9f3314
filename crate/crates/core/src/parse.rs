//! Strict parsing of subject responses against each game's answer format.
//!
//! Parsing never throws: every failure surfaces as `Invalid` with a reason
//! code, which feeds the validity accounting behind the competence tests.
//! Field labels match case-insensitively and surrounding whitespace is
//! tolerated; once a `Reason:` field starts, the rest of the response is
//! treated as free text. Anything else outside the format is rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gamespec::{sure_option_phrase, waiting_option_phrases, GameSetting, VariantSpec};

#[derive(Debug, Error)]
pub enum PayoffError {
    #[error("calculation field absent or unusable")]
    MissingCalculation,
}

/// Why a response failed to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    MissingField,
    MalformedNumber,
    UnknownOption,
    ExtraText,
    WrongOptionCount,
}

/// Which answer-format variant the response matched: the canonical field set
/// (with the free-text reason) or the reduced one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchedFormat {
    Canonical,
    Ablated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeChoice {
    Now,
    Later,
}

/// A successfully parsed, typed reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reply {
    Proposer {
        offer: u32,
        stated_self: Option<f64>,
        stated_other: Option<f64>,
    },
    Responder {
        decision: Decision,
        stated_self: Option<f64>,
        stated_other: Option<f64>,
    },
    /// Accept/reject per sure option, aligned to the setting's canonical
    /// print order regardless of any choice-ablation permutation.
    Gambling { decisions: Vec<Decision> },
    Waiting { choice: TimeChoice },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Valid(Reply),
    Invalid(InvalidReason),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub status: ParseStatus,
    pub matched_format: MatchedFormat,
}

impl ParseOutcome {
    fn invalid(reason: InvalidReason) -> Self {
        Self { status: ParseStatus::Invalid(reason), matched_format: MatchedFormat::Canonical }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self.status, ParseStatus::Valid(_))
    }

    pub fn reply(&self) -> Option<&Reply> {
        match &self.status {
            ParseStatus::Valid(reply) => Some(reply),
            ParseStatus::Invalid(_) => None,
        }
    }
}

/// Strip an optional dollar sign and comma grouping, returning the numeric
/// value if the token is a plain number.
fn parse_dollar_number(token: &str) -> Option<f64> {
    let cleaned = token.trim().trim_start_matches('$').replace(',', "");
    if cleaned.is_empty() {
        return None;
    }
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parse a whole-dollar amount; `Some(None)` means a number was found but it
/// is not a whole dollar value.
fn parse_whole_dollars(token: &str) -> Option<Option<i64>> {
    let value = parse_dollar_number(token)?;
    if value.fract() == 0.0 {
        Some(Some(value as i64))
    } else {
        Some(None)
    }
}

/// Pull dollar amounts out of free calculation text. Dollar-prefixed tokens
/// win when present; otherwise every numeric token counts. Returns the
/// amounts in order of appearance.
fn extract_amounts(text: &str) -> Vec<f64> {
    let tokens: Vec<&str> = text
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| ",.;:!?()".contains(c)))
        .filter(|t| !t.is_empty())
        .collect();
    let dollar: Vec<f64> = tokens
        .iter()
        .filter(|t| t.starts_with('$'))
        .filter_map(|t| parse_dollar_number(t))
        .collect();
    if !dollar.is_empty() {
        return dollar;
    }
    tokens
        .iter()
        .filter(|t| t.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '-'))
        .filter_map(|t| parse_dollar_number(t))
        .collect()
}

fn stated_pair(calculation: Option<&str>) -> (Option<f64>, Option<f64>) {
    match calculation {
        Some(text) => {
            let amounts = extract_amounts(text);
            if amounts.len() == 2 {
                (Some(amounts[0]), Some(amounts[1]))
            } else {
                (None, None)
            }
        }
        None => (None, None),
    }
}

/// A response split into labeled fields: `(label lowercased, value)` for each
/// `label: value` line, with everything from the first `Reason:` onward
/// collapsed into one field. Lines without a label are tolerated here and
/// rejected by the per-game parsers, which check for missing required fields
/// first (a response with no recognized fields reads as a missing field, not
/// as extra text).
struct Fields {
    entries: Vec<(String, String)>,
    has_reason: bool,
    has_unlabeled: bool,
}

fn split_fields(raw: &str) -> Fields {
    let mut entries = Vec::new();
    let mut has_reason = false;
    let mut has_unlabeled = false;
    for line in raw.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if has_reason {
            // free text inside the reason field
            continue;
        }
        let Some((label, value)) = line.split_once(':') else {
            has_unlabeled = true;
            continue;
        };
        let label = label.trim().to_lowercase();
        if label == "reason" {
            has_reason = true;
            continue;
        }
        entries.push((label, value.trim().to_string()));
    }
    Fields { entries, has_reason, has_unlabeled }
}

/// The single value of a required-or-optional field; duplicates read as
/// extra text.
fn field<'a>(fields: &'a Fields, name: &str) -> Result<Option<&'a str>, InvalidReason> {
    let mut found = None;
    for (label, value) in &fields.entries {
        if label == name {
            if found.is_some() {
                return Err(InvalidReason::ExtraText);
            }
            found = Some(value.as_str());
        }
    }
    Ok(found)
}

/// Reject unlabeled lines and labels outside the allowed set.
fn check_no_extra(fields: &Fields, allowed: &[&str]) -> Result<(), InvalidReason> {
    if fields.has_unlabeled {
        return Err(InvalidReason::ExtraText);
    }
    for (label, _) in &fields.entries {
        if !allowed.contains(&label.as_str()) {
            return Err(InvalidReason::ExtraText);
        }
    }
    Ok(())
}

fn parse_decision_word(value: &str) -> Option<Decision> {
    match value.trim().trim_end_matches('.').to_lowercase().as_str() {
        "accept" => Some(Decision::Accept),
        "reject" => Some(Decision::Reject),
        _ => None,
    }
}

fn matched(has_reason: bool) -> MatchedFormat {
    if has_reason {
        MatchedFormat::Canonical
    } else {
        MatchedFormat::Ablated
    }
}

/// Parse a raw response against the setting and variant that produced its
/// prompt. Deterministic and pure; identical bytes give identical outcomes.
pub fn parse_response(setting: &GameSetting, variant: &VariantSpec, raw: &str) -> ParseOutcome {
    match setting {
        GameSetting::UltimatumProposer { pool } => parse_proposer(*pool, raw),
        GameSetting::UltimatumResponder { .. } => parse_responder(raw),
        GameSetting::Gambling(g) => parse_gambling(&g.sure_options, raw),
        GameSetting::Waiting(w) => parse_waiting(
            w.delayed_amount,
            w.delay_months,
            w.immediate_amount,
            variant,
            raw,
        ),
    }
}

fn parse_proposer(pool: u32, raw: &str) -> ParseOutcome {
    let fields = split_fields(raw);
    let offer_text = match field(&fields, "offer") {
        Ok(Some(v)) => v,
        Ok(None) => return ParseOutcome::invalid(InvalidReason::MissingField),
        Err(reason) => return ParseOutcome::invalid(reason),
    };
    if let Err(reason) = check_no_extra(&fields, &["offer", "calculation"]) {
        return ParseOutcome::invalid(reason);
    }
    let offer = match parse_whole_dollars(offer_text) {
        Some(Some(v)) if v >= 0 && v as u32 <= pool => v as u32,
        // fractional offers and out-of-range amounts are malformed: the
        // rules allow only whole dollars from the pool
        Some(_) => return ParseOutcome::invalid(InvalidReason::MalformedNumber),
        None => return ParseOutcome::invalid(InvalidReason::MalformedNumber),
    };
    let calculation = field(&fields, "calculation").unwrap_or(None);
    let (stated_self, stated_other) = stated_pair(calculation);
    ParseOutcome {
        status: ParseStatus::Valid(Reply::Proposer { offer, stated_self, stated_other }),
        matched_format: matched(fields.has_reason),
    }
}

fn parse_responder(raw: &str) -> ParseOutcome {
    let fields = split_fields(raw);
    let decision_text = match field(&fields, "decision") {
        Ok(Some(v)) => v,
        Ok(None) => return ParseOutcome::invalid(InvalidReason::MissingField),
        Err(reason) => return ParseOutcome::invalid(reason),
    };
    if let Err(reason) = check_no_extra(&fields, &["decision", "calculation"]) {
        return ParseOutcome::invalid(reason);
    }
    let Some(decision) = parse_decision_word(decision_text) else {
        return ParseOutcome::invalid(InvalidReason::MissingField);
    };
    let calculation = field(&fields, "calculation").unwrap_or(None);
    let (stated_self, stated_other) = stated_pair(calculation);
    ParseOutcome {
        status: ParseStatus::Valid(Reply::Responder { decision, stated_self, stated_other }),
        matched_format: matched(fields.has_reason),
    }
}

fn parse_gambling(sure_options: &[f64], raw: &str) -> ParseOutcome {
    let mut decisions: Vec<Option<Decision>> = vec![None; sure_options.len()];
    let mut n_lines = 0usize;
    let mut has_reason = false;
    for line in raw.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if has_reason {
            continue;
        }
        let Some((left, right)) = line.rsplit_once(':') else {
            return ParseOutcome::invalid(InvalidReason::ExtraText);
        };
        if left.trim().to_lowercase() == "reason" {
            has_reason = true;
            continue;
        }
        n_lines += 1;
        let Some(index) = match_option(sure_options, left.trim()) else {
            return ParseOutcome::invalid(InvalidReason::UnknownOption);
        };
        let Some(decision) = parse_decision_word(right) else {
            return ParseOutcome::invalid(InvalidReason::MissingField);
        };
        if decisions[index].is_some() {
            // the same option decided twice means another got no decision
            return ParseOutcome::invalid(InvalidReason::WrongOptionCount);
        }
        decisions[index] = Some(decision);
    }
    if n_lines != sure_options.len() || decisions.iter().any(Option::is_none) {
        return ParseOutcome::invalid(InvalidReason::WrongOptionCount);
    }
    ParseOutcome {
        status: ParseStatus::Valid(Reply::Gambling {
            decisions: decisions.into_iter().map(Option::unwrap).collect(),
        }),
        matched_format: matched(has_reason),
    }
}

/// Match an echoed option phrase to a canonical option index: exact phrase
/// first, then an unambiguous match on the dollar amount.
fn match_option(sure_options: &[f64], phrase: &str) -> Option<usize> {
    let lowered = phrase.to_lowercase();
    for (i, &amount) in sure_options.iter().enumerate() {
        if lowered == sure_option_phrase(amount).to_lowercase() {
            return Some(i);
        }
    }
    let amounts = extract_amounts(phrase);
    let lead = *amounts.first()?;
    let mut matches = sure_options
        .iter()
        .enumerate()
        .filter(|(_, &o)| (o - lead).abs() < 0.005);
    let first = matches.next()?;
    if matches.next().is_some() {
        return None;
    }
    Some(first.0)
}

fn parse_waiting(
    delayed_amount: u32,
    delay_months: u32,
    immediate_amount: u32,
    variant: &VariantSpec,
    raw: &str,
) -> ParseOutcome {
    let fields = split_fields(raw);
    let answer = match field(&fields, "answer") {
        Ok(Some(v)) => v,
        Ok(None) => return ParseOutcome::invalid(InvalidReason::MissingField),
        Err(reason) => return ParseOutcome::invalid(reason),
    };
    if let Err(reason) = check_no_extra(&fields, &["answer"]) {
        return ParseOutcome::invalid(reason);
    }

    // canonical phrases: index 0 = delayed option, 1 = immediate
    let phrases = waiting_option_phrases(delayed_amount, delay_months, immediate_amount);
    let order: Vec<usize> = match &variant.choice_ablation {
        Some(a) => a.order.clone(),
        None => vec![0, 1],
    };

    let normalized = answer.trim().to_lowercase();
    let stripped = strip_option_label(&normalized);

    let mut canonical_index = None;
    for (i, phrase) in phrases.iter().enumerate() {
        let p = phrase.to_lowercase();
        if normalized == p || stripped == p {
            canonical_index = Some(i);
            break;
        }
    }
    if canonical_index.is_none() {
        // fall back to an unambiguous dollar-amount match; the echoed label
        // alone is not trusted because ablation may have moved it
        let amounts = extract_amounts(stripped);
        if let Some(&lead) = amounts.first() {
            let targets = [delayed_amount as f64, immediate_amount as f64];
            let hits: Vec<usize> = targets
                .iter()
                .enumerate()
                .filter(|(_, &t)| (t - lead).abs() < 0.005)
                .map(|(i, _)| i)
                .collect();
            if hits.len() == 1 {
                canonical_index = Some(hits[0]);
            }
        }
    }
    let Some(canonical_index) = canonical_index else {
        return ParseOutcome::invalid(InvalidReason::UnknownOption);
    };
    if !order.contains(&canonical_index) {
        return ParseOutcome::invalid(InvalidReason::UnknownOption);
    }
    let choice = if canonical_index == 1 { TimeChoice::Now } else { TimeChoice::Later };
    ParseOutcome {
        status: ParseStatus::Valid(Reply::Waiting { choice }),
        matched_format: matched(fields.has_reason),
    }
}

/// Drop a leading positional label like `B. ` from an answer phrase.
fn strip_option_label(answer: &str) -> &str {
    let bytes = answer.as_bytes();
    if bytes.len() > 2 && bytes[0].is_ascii_alphabetic() && bytes[1] == b'.' {
        answer[2..].trim_start()
    } else {
        answer
    }
}

/// Check a proposer or responder reply's stated payoffs against the
/// arithmetic the offer or decision implies.
///
/// Returns `(expected_self, expected_other, consistent)`.
pub fn extract_stated_payoffs(
    reply: &Reply,
    pool: u32,
    offer: Option<u32>,
) -> Result<(f64, f64, bool), PayoffError> {
    match reply {
        Reply::Proposer { offer, stated_self, stated_other } => {
            let expected_self = (pool - offer) as f64;
            let expected_other = *offer as f64;
            match (stated_self, stated_other) {
                (Some(s), Some(o)) => {
                    Ok((expected_self, expected_other, *s == expected_self && *o == expected_other))
                }
                _ => Err(PayoffError::MissingCalculation),
            }
        }
        Reply::Responder { decision, stated_self, stated_other } => {
            let offer = offer.ok_or(PayoffError::MissingCalculation)? as f64;
            let (expected_self, expected_other) = match decision {
                Decision::Accept => (offer, pool as f64 - offer),
                Decision::Reject => (0.0, 0.0),
            };
            match (stated_self, stated_other) {
                (Some(s), Some(o)) => {
                    Ok((expected_self, expected_other, *s == expected_self && *o == expected_other))
                }
                _ => Err(PayoffError::MissingCalculation),
            }
        }
        _ => Err(PayoffError::MissingCalculation),
    }
}
