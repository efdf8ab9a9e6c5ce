//! Orbit dynamics: subshifts, Markov measures, invariant submeasures and entropy.

pub mod entropy;
pub mod invariant;
pub mod markov;
pub mod sft;
