//! Explainable labeling assistant.
//!
//! * [`ebm`] – additive boosted classifier with per-feature explanations.
//! * [`labeling`] – confidence scores, sampling policies, mismatch detection
//!   and label application for the human-in-the-loop cycle.
//! * [`ncd`] – record schema, per-disease feature extraction, keyword
//!   highlighting, chained prediction, rule-based baseline and a synthetic
//!   record generator.
//! * [`experiments`] – labeling-effort simulation, cross-validation and
//!   label-noise robustness harnesses.

pub mod ebm;
pub mod error;
pub mod experiments;
pub mod labeling;
pub mod ncd;

pub use error::{Result, XlabelError};
