//! Typicality sets for Markov triples over countable alphabets.
//!
//! The crate scores empirical types against a reference law with the unified
//! typicality criterion (relative entropy plus absolute entropy deviations on
//! every nonempty subset of the variables), samples from Markov-factored
//! triples, and runs the Monte Carlo harnesses that check the Markov lemma
//! and its companion statements.

pub mod alphabet;
pub mod cli;
pub mod empirical;
mod error;
pub mod experiments;
pub mod measures;
pub mod model;
pub mod sampling;
mod sum;
pub mod typicality;

pub use alphabet::{Atom, Symbol, Vars};
pub use error::{Error, Result};
pub use sum::{sum, CompensatedSum};
