//! Harness for measuring social bias in black-box language models and for
//! testing prompting strategies that try to reduce it.
//!
//! The crate is organised around a pipeline:
//!
//! 1. [`bench`] loads coreference, question-answering, and decision-making
//!    datasets into one instance format with byte-offset demographic markers.
//! 2. [`strategy`] turns an instance into a prompt plan: the original
//!    question, optionally prefixed with debiasing clauses, or a two-stage
//!    plan that first asks a demographically neutral version of the question.
//! 3. [`gateway`] executes plans against a chat-completion endpoint, a
//!    record/replay cache, or a scripted mock, and extracts structured
//!    answers from free-text replies.
//! 4. [`metrics`] aggregates per-instance results into bias metrics.

pub mod bench;
pub mod gateway;
pub mod lexicon;
pub mod metrics;
pub mod strategy;
