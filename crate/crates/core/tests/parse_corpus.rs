//! Parser regression corpus: every fixture under `fixtures/parse/valid` must
//! parse, every fixture under `fixtures/parse/malformed` must fail with the
//! exact reason code recorded in the manifest.

use std::fs;
use std::path::PathBuf;

use serde::Deserialize;

use econprobe_core::gamespec::{paper_example_setting, GameSetting, VariantSpec, WaitingSetting};
use econprobe_core::parse::{
    parse_response, Decision, InvalidReason, MatchedFormat, ParseStatus, Reply, TimeChoice,
};

#[derive(Deserialize)]
struct Manifest {
    #[serde(rename = "case")]
    cases: Vec<Case>,
}

#[derive(Deserialize)]
struct Case {
    file: String,
    setting: String,
    expect: String,
    offer: Option<u32>,
    decision: Option<String>,
    choice: Option<String>,
    accepts: Option<Vec<bool>>,
    stated_self: Option<f64>,
    stated_other: Option<f64>,
    format: Option<String>,
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/parse")
}

fn setting_by_name(name: &str) -> GameSetting {
    match name {
        "proposer_p10" => GameSetting::UltimatumProposer { pool: 10 },
        "proposer_p1000" => GameSetting::UltimatumProposer { pool: 1000 },
        "responder_p10_o0" => GameSetting::UltimatumResponder { pool: 10, offer: 0 },
        "responder_p10_o4" => GameSetting::UltimatumResponder { pool: 10, offer: 4 },
        "gambling_worked_example" => GameSetting::Gambling(paper_example_setting()),
        "waiting_d1_x920" => {
            GameSetting::Waiting(WaitingSetting::new(1000, 1, 920, 10).unwrap())
        }
        other => panic!("unknown setting {other}"),
    }
}

fn reason_by_name(name: &str) -> InvalidReason {
    match name {
        "missing_field" => InvalidReason::MissingField,
        "malformed_number" => InvalidReason::MalformedNumber,
        "unknown_option" => InvalidReason::UnknownOption,
        "extra_text" => InvalidReason::ExtraText,
        "wrong_option_count" => InvalidReason::WrongOptionCount,
        other => panic!("unknown reason {other}"),
    }
}

#[test]
fn corpus_parses_exactly_as_recorded() {
    let dir = corpus_dir();
    let manifest: Manifest =
        toml::from_str(&fs::read_to_string(dir.join("manifest.toml")).unwrap()).unwrap();
    assert!(manifest.cases.len() >= 25, "corpus unexpectedly small");

    let mut checked_files = Vec::new();
    for case in &manifest.cases {
        let raw = fs::read_to_string(dir.join(&case.file))
            .unwrap_or_else(|e| panic!("{}: {e}", case.file));
        checked_files.push(case.file.clone());
        let setting = setting_by_name(&case.setting);
        let outcome = parse_response(&setting, &VariantSpec::canonical(), &raw);

        if case.expect == "valid" {
            let ParseStatus::Valid(reply) = &outcome.status else {
                panic!("{}: expected valid, got {:?}", case.file, outcome.status);
            };
            match reply {
                Reply::Proposer { offer, stated_self, stated_other } => {
                    if let Some(expected) = case.offer {
                        assert_eq!(*offer, expected, "{}", case.file);
                    }
                    if case.stated_self.is_some() {
                        assert_eq!(*stated_self, case.stated_self, "{}", case.file);
                        assert_eq!(*stated_other, case.stated_other, "{}", case.file);
                    }
                }
                Reply::Responder { decision, stated_self, stated_other } => {
                    if let Some(expected) = &case.decision {
                        let expected = match expected.as_str() {
                            "accept" => Decision::Accept,
                            _ => Decision::Reject,
                        };
                        assert_eq!(*decision, expected, "{}", case.file);
                    }
                    if case.stated_self.is_some() {
                        assert_eq!(*stated_self, case.stated_self, "{}", case.file);
                        assert_eq!(*stated_other, case.stated_other, "{}", case.file);
                    }
                }
                Reply::Gambling { decisions } => {
                    if let Some(accepts) = &case.accepts {
                        let got: Vec<bool> =
                            decisions.iter().map(|d| *d == Decision::Accept).collect();
                        assert_eq!(&got, accepts, "{}", case.file);
                    }
                }
                Reply::Waiting { choice } => {
                    if let Some(expected) = &case.choice {
                        let expected = match expected.as_str() {
                            "now" => TimeChoice::Now,
                            _ => TimeChoice::Later,
                        };
                        assert_eq!(*choice, expected, "{}", case.file);
                    }
                }
            }
            if let Some(format) = &case.format {
                let expected = match format.as_str() {
                    "canonical" => MatchedFormat::Canonical,
                    _ => MatchedFormat::Ablated,
                };
                assert_eq!(outcome.matched_format, expected, "{}", case.file);
            }
        } else {
            let expected = reason_by_name(&case.expect);
            assert_eq!(
                outcome.status,
                ParseStatus::Invalid(expected),
                "{}: expected {expected:?}",
                case.file
            );
        }
    }

    // every fixture file must be covered by the manifest
    for sub in ["valid", "malformed"] {
        for entry in fs::read_dir(dir.join(sub)).unwrap() {
            let name = format!("{sub}/{}", entry.unwrap().file_name().to_string_lossy());
            assert!(checked_files.contains(&name), "fixture {name} missing from manifest");
        }
    }
}
