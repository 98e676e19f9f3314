//! Utility-model estimation.
//!
//! Three models are fit from elicited behavior:
//!
//! - inequity aversion via closed-form point estimates from the responder
//!   switching point and the mean offer fraction, with a resampling
//!   bootstrap for intervals;
//! - risk/loss aversion via nonlinear least squares of predicted against
//!   empirical certainty equivalents over five bounded parameters;
//! - hyperbolic time discounting via one-dimensional least squares of
//!   `amount / (1 + k d)` against empirical immediate equivalents.

pub mod cpt;
mod optimize;

pub use optimize::{golden_section, halton_starts, minimize_bounded, MinimizeResult};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{switching_point, Censoring};
use crate::gamespec::Prospect;
use crate::seeds;
use cpt::CptParams;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("unidentifiable model: {0}")]
    Unidentifiable(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("unsupported prospect: {0}")]
    UnsupportedProspect(String),
}

/// Goodness-of-fit and optimizer summary for a regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitQuality {
    /// None when the empirical values have no variance.
    pub r_squared: Option<f64>,
    pub residuals: Vec<f64>,
    pub n_points: usize,
    pub converged: bool,
    pub sse: f64,
    pub starts: usize,
    pub iterations: usize,
    pub evaluations: usize,
}

/// `R^2 = 1 - SS_res / SS_tot` over paired predictions and observations.
pub fn r_squared(predicted: &[f64], empirical: &[f64]) -> Result<f64, EstimationError> {
    if predicted.len() != empirical.len() || empirical.len() < 2 {
        return Err(EstimationError::InsufficientData(
            "need at least two paired points".into(),
        ));
    }
    let mean = empirical.iter().sum::<f64>() / empirical.len() as f64;
    let ss_tot: f64 = empirical.iter().map(|e| (e - mean).powi(2)).sum();
    if ss_tot <= 1e-12 {
        return Err(EstimationError::DegenerateVariance(
            "empirical values have no variance".into(),
        ));
    }
    let ss_res: f64 =
        predicted.iter().zip(empirical).map(|(p, e)| (p - e).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Linear-interpolation percentile of a sorted slice, q in [0, 1].
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let position = q * (n - 1) as f64;
    let lower = position.floor() as usize;
    let upper = position.ceil() as usize;
    let weight = position - lower as f64;
    sorted[lower] * (1.0 - weight) + sorted[upper] * weight
}

fn sorted(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| a.total_cmp(b));
    values
}

/// Percentile interval and median per parameter from replicate fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub medians: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub n_replicates: usize,
    /// Replicates that produced no usable estimate (censored), excluded from
    /// the percentiles.
    pub n_censored: usize,
}

/// Run `refit` once per replicate with a derived seed and report the
/// per-parameter median and 2.5/97.5 percentile interval. A replicate may
/// return `None` (censored); censored replicates are counted, not imputed.
pub fn bootstrap_ci(
    n_reps: usize,
    seed: u64,
    mut refit: impl FnMut(u64) -> Option<Vec<f64>>,
) -> Result<BootstrapCi, EstimationError> {
    if n_reps == 0 {
        return Err(EstimationError::InsufficientData("zero bootstrap replicates".into()));
    }
    let mut replicates: Vec<Vec<f64>> = Vec::with_capacity(n_reps);
    let mut n_censored = 0usize;
    for rep in 0..n_reps {
        let rep_seed = seeds::derive(seed, &["bootstrap-replicate", &rep.to_string()]);
        match refit(rep_seed) {
            Some(params) => replicates.push(params),
            None => n_censored += 1,
        }
    }
    if replicates.is_empty() {
        return Err(EstimationError::InsufficientData(
            "every bootstrap replicate was censored".into(),
        ));
    }
    let dims = replicates[0].len();
    let mut medians = Vec::with_capacity(dims);
    let mut lower = Vec::with_capacity(dims);
    let mut upper = Vec::with_capacity(dims);
    for d in 0..dims {
        let values = sorted(replicates.iter().map(|r| r[d]).collect());
        medians.push(percentile(&values, 0.5));
        lower.push(percentile(&values, 0.025));
        upper.push(percentile(&values, 0.975));
    }
    Ok(BootstrapCi { medians, lower, upper, n_replicates: replicates.len(), n_censored })
}

/// Envy parameter: a ratio of the responder switching point, or flagged
/// infinite when the switching point reaches half the pool (an
/// all-rejecting responder).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaEstimate {
    Finite(f64),
    Infinite,
}

impl AlphaEstimate {
    pub fn finite(&self) -> Option<f64> {
        match self {
            AlphaEstimate::Finite(v) => Some(*v),
            AlphaEstimate::Infinite => None,
        }
    }
}

/// Bootstrap intervals for the inequity-aversion parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsCi {
    pub beta_median: f64,
    pub beta_interval: (f64, f64),
    /// Absent when every replicate's alpha was infinite.
    pub alpha_median: Option<f64>,
    pub alpha_interval: Option<(f64, f64)>,
    /// Fraction of replicates whose alpha was flagged infinite.
    pub infinite_alpha_fraction: f64,
}

/// Fitted inequity-aversion parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsParams {
    pub alpha: AlphaEstimate,
    pub beta: f64,
    pub ci: Option<FsCi>,
    pub n_bootstrap: u32,
}

/// Closed-form point estimates: `alpha = s_r / (P - 2 s_r)` (flagged
/// infinite when `s_r >= P/2`) and `beta = 1 - omega`.
pub fn fs_point_estimate(s_r: f64, pool: f64, omega: f64) -> FsParams {
    let alpha = if s_r < pool / 2.0 {
        AlphaEstimate::Finite(s_r / (pool - 2.0 * s_r))
    } else {
        AlphaEstimate::Infinite
    };
    FsParams { alpha, beta: 1.0 - omega, ci: None, n_bootstrap: 0 }
}

/// Valid per-setting observations feeding the inequity-aversion estimate:
/// raw offers per proposer pool, and accept flags per responder offer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsObservations {
    /// Responder pool (the P in the point estimate).
    pub responder_pool: u32,
    /// (pool, valid offers) per proposer setting.
    pub proposer_offers: Vec<(u32, Vec<u32>)>,
    /// (offer, accept flags over valid replies) per responder setting, in
    /// ascending offer order.
    pub responder_accepts: Vec<(u32, Vec<bool>)>,
}

impl FsObservations {
    fn omega(offers: &[(u32, Vec<f64>)]) -> f64 {
        let per_setting: Vec<f64> = offers
            .iter()
            .map(|(pool, fractions)| {
                fractions.iter().sum::<f64>() / fractions.len() as f64 / *pool as f64
            })
            .collect();
        per_setting.iter().sum::<f64>() / per_setting.len() as f64
    }

    fn point_from(
        &self,
        offers: &[(u32, Vec<f64>)],
        accept_curve: &[(f64, f64)],
    ) -> (AlphaEstimate, f64) {
        let omega = Self::omega(offers);
        let beta = 1.0 - omega;
        let sp = switching_point(accept_curve, 0.5).expect("curve is validated upstream");
        let s_r = match sp.censored {
            Censoring::High => self.responder_pool as f64,
            _ => sp.value,
        };
        let pool = self.responder_pool as f64;
        let alpha = if s_r < pool / 2.0 {
            AlphaEstimate::Finite(s_r / (pool - 2.0 * s_r))
        } else {
            AlphaEstimate::Infinite
        };
        (alpha, beta)
    }

    fn full_offers(&self) -> Vec<(u32, Vec<f64>)> {
        self.proposer_offers
            .iter()
            .map(|(pool, offers)| (*pool, offers.iter().map(|o| *o as f64).collect()))
            .collect()
    }

    fn full_curve(&self) -> Vec<(f64, f64)> {
        self.responder_accepts
            .iter()
            .map(|(offer, accepts)| {
                let rate =
                    accepts.iter().filter(|a| **a).count() as f64 / accepts.len() as f64;
                (*offer as f64, rate)
            })
            .collect()
    }
}

/// Point estimate from the full data plus a resampling bootstrap: each
/// replicate draws `n_points_per_setting` observations per setting (with
/// replacement), recomputes the switching point and mean offer fraction, and
/// re-derives the point estimate; intervals are 2.5/97.5 percentiles over
/// `n_reps` replicates.
pub fn fs_bootstrap(
    observations: &FsObservations,
    n_points_per_setting: usize,
    n_reps: usize,
    seed: u64,
) -> Result<FsParams, EstimationError> {
    if observations.proposer_offers.is_empty() || observations.responder_accepts.is_empty() {
        return Err(EstimationError::InsufficientData(
            "need both proposer and responder observations".into(),
        ));
    }
    for (pool, offers) in &observations.proposer_offers {
        if offers.len() < n_points_per_setting {
            return Err(EstimationError::InsufficientData(format!(
                "proposer pool {pool}: {} valid offers < {n_points_per_setting}",
                offers.len()
            )));
        }
    }
    for (offer, accepts) in &observations.responder_accepts {
        if accepts.len() < n_points_per_setting {
            return Err(EstimationError::InsufficientData(format!(
                "responder offer {offer}: {} valid replies < {n_points_per_setting}",
                accepts.len()
            )));
        }
    }

    let (alpha, beta) =
        observations.point_from(&observations.full_offers(), &observations.full_curve());

    let mut betas = Vec::with_capacity(n_reps);
    let mut alphas = Vec::new();
    let mut n_infinite = 0usize;
    for rep in 0..n_reps {
        let mut rng = seeds::rng(seed, &["fs-bootstrap", &rep.to_string()]);
        let offers: Vec<(u32, Vec<f64>)> = observations
            .proposer_offers
            .iter()
            .map(|(pool, offers)| {
                let resampled: Vec<f64> = (0..n_points_per_setting)
                    .map(|_| offers[rng.random_range(0..offers.len())] as f64)
                    .collect();
                (*pool, resampled)
            })
            .collect();
        let curve: Vec<(f64, f64)> = observations
            .responder_accepts
            .iter()
            .map(|(offer, accepts)| {
                let hits = (0..n_points_per_setting)
                    .filter(|_| accepts[rng.random_range(0..accepts.len())])
                    .count();
                (*offer as f64, hits as f64 / n_points_per_setting as f64)
            })
            .collect();
        let (rep_alpha, rep_beta) = observations.point_from(&offers, &curve);
        betas.push(rep_beta);
        match rep_alpha {
            AlphaEstimate::Finite(a) => alphas.push(a),
            AlphaEstimate::Infinite => n_infinite += 1,
        }
    }

    let betas = sorted(betas);
    let ci = FsCi {
        beta_median: percentile(&betas, 0.5),
        beta_interval: (percentile(&betas, 0.025), percentile(&betas, 0.975)),
        alpha_median: if alphas.is_empty() {
            None
        } else {
            Some(percentile(&sorted(alphas.clone()), 0.5))
        },
        alpha_interval: if alphas.is_empty() {
            None
        } else {
            let a = sorted(alphas);
            Some((percentile(&a, 0.025), percentile(&a, 0.975)))
        },
        infinite_alpha_fraction: n_infinite as f64 / n_reps as f64,
    };
    Ok(FsParams { alpha, beta, ci: Some(ci), n_bootstrap: n_reps as u32 })
}

/// Box constraints for the five prospect-theory parameters. The weighting
/// exponent is kept above 0.3 because the weighting function loses
/// monotonicity below roughly that value.
pub const CPT_BOUNDS: [(f64, f64); 5] =
    [(0.2, 1.5), (0.2, 1.5), (0.1, 10.0), (0.3, 2.0), (0.3, 2.0)];

const CPT_STARTS: usize = 16;

/// Fit the five prospect-theory parameters by minimizing the squared error
/// between predicted and empirical certainty equivalents.
///
/// Requires at least two gain prospects, two loss prospects, and one mixed
/// prospect; otherwise the loss-aversion coefficient is unidentifiable.
/// Deterministic given the seed (quasi-random multistart).
pub fn fit_cpt(ces: &[(Prospect, f64)], seed: u64) -> Result<CptParams, EstimationError> {
    let gains = ces.iter().filter(|(p, _)| p.is_gain()).count();
    let losses = ces.iter().filter(|(p, _)| p.is_loss()).count();
    let mixed = ces.iter().filter(|(p, _)| p.is_mixed()).count();
    if gains < 2 || losses < 2 || mixed < 1 {
        return Err(EstimationError::Unidentifiable(format!(
            "need >=2 gain, >=2 loss, >=1 mixed prospects; got {gains}/{losses}/{mixed}"
        )));
    }
    // surface unsupported prospects before optimization
    for (prospect, _) in ces {
        cpt::predict_ce(&CptParams::rational(), prospect)?;
    }

    let objective = |x: &[f64]| -> f64 {
        let params = CptParams::from_slice(x);
        ces.iter()
            .map(|(prospect, ce)| {
                match cpt::predict_ce(&params, prospect) {
                    Ok(predicted) => (predicted - ce).powi(2),
                    Err(_) => f64::MAX / 1e6,
                }
            })
            .sum()
    };
    let starts = halton_starts(&CPT_BOUNDS, CPT_STARTS, seed);
    let result = minimize_bounded(objective, &CPT_BOUNDS, &starts)?;
    if !result.converged {
        return Err(EstimationError::NoConvergence(format!(
            "no start converged; best objective {:.6e} at {:?}",
            result.fx, result.x
        )));
    }

    let mut params = CptParams::from_slice(&result.x);
    let empirical: Vec<f64> = ces.iter().map(|(_, ce)| *ce).collect();
    let predicted: Vec<f64> = ces
        .iter()
        .map(|(p, _)| cpt::predict_ce(&params, p).expect("validated above"))
        .collect();
    let residuals: Vec<f64> =
        predicted.iter().zip(&empirical).map(|(p, e)| p - e).collect();
    let r2 = match r_squared(&predicted, &empirical) {
        Ok(v) => Some(v),
        Err(EstimationError::DegenerateVariance(_)) => None,
        Err(e) => return Err(e),
    };
    params.fit = Some(FitQuality {
        r_squared: r2,
        residuals,
        n_points: ces.len(),
        converged: result.converged,
        sse: result.fx,
        starts: result.starts,
        iterations: result.iterations,
        evaluations: result.evaluations,
    });
    Ok(params)
}

/// Fitted hyperbolic discount rate (per month).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountParams {
    pub k: f64,
    pub fit: FitQuality,
}

const K_BOUNDS: (f64, f64) = (0.0, 1000.0);

/// Fit the discount rate by least squares of `delayed_amount / (1 + k d)`
/// against empirical immediate equivalents: a golden-section pass over the
/// admissible range refined by the bounded simplex.
pub fn fit_hyperbolic(
    ies: &[(f64, f64)],
    delayed_amount: f64,
    seed: u64,
) -> Result<DiscountParams, EstimationError> {
    let mut delays: Vec<f64> = ies.iter().map(|(d, _)| *d).collect();
    delays.sort_by(|a, b| a.total_cmp(b));
    delays.dedup();
    if delays.len() < 2 {
        return Err(EstimationError::InsufficientData(format!(
            "{} distinct delays; need at least 2",
            delays.len()
        )));
    }
    let objective1 = |k: f64| -> f64 {
        ies.iter().map(|(d, ie)| (delayed_amount / (1.0 + k * d) - ie).powi(2)).sum()
    };
    let coarse = golden_section(objective1, K_BOUNDS.0, K_BOUNDS.1, 200);
    let mut starts = vec![vec![coarse]];
    starts.extend(halton_starts(&[K_BOUNDS], 3, seed));
    let result = minimize_bounded(
        |x| objective1(x[0]),
        &[K_BOUNDS],
        &starts,
    )?;
    let k = result.x[0];

    let empirical: Vec<f64> = ies.iter().map(|(_, ie)| *ie).collect();
    let predicted: Vec<f64> =
        ies.iter().map(|(d, _)| delayed_amount / (1.0 + k * d)).collect();
    let residuals: Vec<f64> =
        predicted.iter().zip(&empirical).map(|(p, e)| p - e).collect();
    let r2 = match r_squared(&predicted, &empirical) {
        Ok(v) => Some(v),
        Err(EstimationError::DegenerateVariance(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(DiscountParams {
        k,
        fit: FitQuality {
            r_squared: r2,
            residuals,
            n_points: ies.len(),
            converged: result.converged,
            sse: result.fx,
            starts: result.starts,
            iterations: result.iterations,
            evaluations: result.evaluations,
        },
    })
}
