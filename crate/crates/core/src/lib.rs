//! Core library for the econprobe elicitation harness.
//!
//! The pipeline runs in five stages, each with its own module:
//!
//! 1. [`gamespec`] — the three games (ultimatum, gambling, waiting), their
//!    setting grids, and exact prompt text including ablation and
//!    intervention variants.
//! 2. [`subjects`] — remote chat-endpoint subjects and synthetic agents with
//!    known utility parameters.
//! 3. [`parse`] — strict parsing of subject responses against each game's
//!    answer format.
//! 4. [`behavior`] — per-setting aggregation, switching points, certainty
//!    and immediate equivalents, and competence tests.
//! 5. [`estimation`] — utility-model fitting (inequity aversion, risk/loss
//!    aversion, time discounting) with bootstrap confidence intervals.

pub mod behavior;
pub mod estimation;
pub mod gamespec;
pub mod parse;
pub mod seeds;
pub mod subjects;
