//! Report and plot-data emission.
//!
//! The report is a markdown document with one parameter-comparison table per
//! utility model (fitted subjects against the cited human reference values)
//! plus the competence summary. Plot data goes out as tab-separated curve
//! samples: the value function on a signed dollar grid, the weighting
//! function over probabilities for both signs, and the discount curve over
//! the delay range. No images are rendered.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Result;

use econprobe_core::behavior::CompetenceReport;
use econprobe_core::estimation::cpt::{value, weight, CptParams};
use econprobe_core::estimation::AlphaEstimate;

use crate::config::HumanReference;
use crate::run::FitsDocument;
use crate::store;

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

fn fmt_interval(interval: (f64, f64)) -> String {
    format!("[{}, {}]", fmt3(interval.0), fmt3(interval.1))
}

/// Write `report.md` and the plot-data tables; returns the relative paths
/// written.
pub fn emit_report(
    out_dir: &Path,
    fits: &FitsDocument,
    competence: &[CompetenceReport],
    failures: &[String],
    human: &HumanReference,
) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut doc = String::new();

    writeln!(doc, "# Elicitation report\n")?;
    writeln!(doc, "Master seed: {}\n", fits.master_seed)?;

    writeln!(doc, "## Competence\n")?;
    writeln!(doc, "| subject | game | validity | result | checks |")?;
    writeln!(doc, "|---|---|---|---|---|")?;
    for report in competence {
        let checks = report
            .checks
            .iter()
            .map(|c| format!("{} {}", c.name, if c.pass { "ok" } else { "FAIL" }))
            .collect::<Vec<_>>()
            .join("; ");
        writeln!(
            doc,
            "| {} | {} | {:.2} | {} | {} |",
            report.subject_id,
            report.game.as_str(),
            report.validity_fraction,
            if report.pass { "pass" } else { "fail" },
            checks
        )?;
    }
    writeln!(doc)?;

    writeln!(doc, "## Inequity aversion\n")?;
    writeln!(doc, "| subject | envy (alpha) | guilt (beta) | beta 95% CI | mean offer share |")?;
    writeln!(doc, "|---|---|---|---|---|")?;
    if let Some(reference) = &human.fehr_schmidt {
        writeln!(
            doc,
            "| human reference | {} | {} | — | — |",
            fmt3(reference.alpha),
            fmt3(reference.beta)
        )?;
    }
    for (subject, subject_fits) in &fits.subjects {
        if let Some(fs) = &subject_fits.fehr_schmidt {
            let alpha = match fs.params.alpha {
                AlphaEstimate::Finite(a) => fmt3(a),
                AlphaEstimate::Infinite => "censored".to_string(),
            };
            let ci = fs
                .params
                .ci
                .as_ref()
                .map(|ci| fmt_interval(ci.beta_interval))
                .unwrap_or_else(|| "—".into());
            writeln!(
                doc,
                "| {subject} | {alpha} | {} | {ci} | {} |",
                fmt3(fs.params.beta),
                fmt3(fs.mean_offer_share)
            )?;
        }
    }
    writeln!(doc)?;

    writeln!(doc, "## Risk and loss aversion\n")?;
    writeln!(
        doc,
        "| subject | alpha | beta | lambda | phi+ | phi- | R^2 | censored CEs |"
    )?;
    writeln!(doc, "|---|---|---|---|---|---|---|---|")?;
    if let Some(reference) = &human.cpt {
        writeln!(
            doc,
            "| human reference | {} | {} | {} | {} | {} | — | — |",
            fmt3(reference.alpha),
            fmt3(reference.beta),
            fmt3(reference.lambda),
            fmt3(reference.phi_plus),
            fmt3(reference.phi_minus)
        )?;
    }
    for (subject, subject_fits) in &fits.subjects {
        if let Some(cpt) = &subject_fits.cpt {
            let r2 = cpt
                .params
                .fit
                .as_ref()
                .and_then(|f| f.r_squared)
                .map(fmt3)
                .unwrap_or_else(|| "undefined".into());
            writeln!(
                doc,
                "| {subject} | {} | {} | {} | {} | {} | {r2} | {} |",
                fmt3(cpt.params.alpha),
                fmt3(cpt.params.beta),
                fmt3(cpt.params.lambda),
                fmt3(cpt.params.phi_plus),
                fmt3(cpt.params.phi_minus),
                cpt.n_censored
            )?;
        }
    }
    writeln!(doc)?;

    writeln!(doc, "## Time discounting\n")?;
    writeln!(doc, "| subject | k per month | R^2 | censored IEs |")?;
    writeln!(doc, "|---|---|---|---|")?;
    if let Some(reference) = &human.hyperbolic {
        writeln!(doc, "| human reference | {} | — | — |", fmt3(reference.k_per_month))?;
    }
    for (subject, subject_fits) in &fits.subjects {
        if let Some(discount) = &subject_fits.hyperbolic {
            let r2 = discount
                .params
                .fit
                .r_squared
                .map(fmt3)
                .unwrap_or_else(|| "undefined".into());
            writeln!(
                doc,
                "| {subject} | {:.6} | {r2} | {} |",
                discount.params.k, discount.n_censored
            )?;
        }
    }
    writeln!(doc)?;

    let skipped: Vec<(String, String)> = fits
        .subjects
        .iter()
        .flat_map(|(subject, f)| f.skipped.iter().map(move |s| (subject.clone(), s.clone())))
        .collect();
    if !skipped.is_empty() {
        writeln!(doc, "## Skipped fits\n")?;
        for (subject, reason) in skipped {
            writeln!(doc, "- {subject}: {reason}")?;
        }
        writeln!(doc)?;
    }
    if !failures.is_empty() {
        writeln!(doc, "## Subject failures\n")?;
        for failure in failures {
            writeln!(doc, "- {failure}")?;
        }
        writeln!(doc)?;
    }
    if let Some(reference) = &human.cpt {
        writeln!(doc, "## Sources\n")?;
        writeln!(doc, "Human reference values are cited constants, never recomputed:")?;
        writeln!(doc, "- risk/loss aversion: {}", reference.source)?;
        if let Some(fs) = &human.fehr_schmidt {
            writeln!(doc, "- inequity aversion: {}", fs.source)?;
        }
        if let Some(h) = &human.hyperbolic {
            writeln!(doc, "- time discounting: {}", h.source)?;
        }
    }

    std::fs::write(out_dir.join("report.md"), doc)?;
    files.push(PathBuf::from("report.md"));

    files.extend(emit_plot_data(out_dir, fits)?);
    Ok(files)
}


/// Curve samples for each fitted subject.
fn emit_plot_data(out_dir: &Path, fits: &FitsDocument) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for (subject, subject_fits) in &fits.subjects {
        if let Some(cpt) = &subject_fits.cpt {
            let params =
                CptParams::new(cpt.params.alpha, cpt.params.beta, cpt.params.lambda, cpt.params.phi_plus, cpt.params.phi_minus);

            let rel = PathBuf::from("plot_data").join(format!("value_curve_{subject}.tsv"));
            let rows: Vec<Vec<String>> = (-100..=100)
                .map(|i| {
                    let x = i as f64 * 2.0;
                    vec![format!("{x:.2}"), format!("{:.6}", value(x, &params))]
                })
                .collect();
            store::write_tsv(&out_dir.join(&rel), &["x_dollars", "value"], &rows)?;
            files.push(rel);

            let rel = PathBuf::from("plot_data").join(format!("weighting_curve_{subject}.tsv"));
            let rows: Vec<Vec<String>> = (0..=100)
                .map(|i| {
                    let p = i as f64 / 100.0;
                    vec![
                        format!("{p:.2}"),
                        format!("{:.6}", weight(p, params.phi_plus).unwrap()),
                        format!("{:.6}", weight(p, params.phi_minus).unwrap()),
                    ]
                })
                .collect();
            store::write_tsv(&out_dir.join(&rel), &["p", "w_gain", "w_loss"], &rows)?;
            files.push(rel);
        }
        if let Some(discount) = &subject_fits.hyperbolic {
            let rel = PathBuf::from("plot_data").join(format!("discount_curve_{subject}.tsv"));
            let rows: Vec<Vec<String>> = (1..=600)
                .map(|d| {
                    let present = 1000.0 / (1.0 + discount.params.k * d as f64);
                    vec![d.to_string(), format!("{present:.4}")]
                })
                .collect();
            store::write_tsv(&out_dir.join(&rel), &["delay_months", "present_value"], &rows)?;
            files.push(rel);
        }
    }
    Ok(files)
}
