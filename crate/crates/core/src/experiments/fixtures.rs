//! Reference models shipped with the crate.
//!
//! The same models are stored as JSON under `fixtures/` in the crate root.

use crate::model::{JointPmf2, Kernel, MarkovTriple, Pmf};
use crate::Result;

/// `X = Y = Z`, a uniform bit.
pub fn deterministic_chain() -> Result<MarkovTriple> {
    let side = JointPmf2::new([(0, 0, 0.5), (1, 1, 0.5)])?;
    MarkovTriple::new(side, Kernel::new([(0, Pmf::point(0)), (1, Pmf::point(1))]))
}

/// `Y ~ Bern(q_y)`, `Z = BSC(flip_z)(Y)`, `X = BSC(flip_x)(Y)`.
pub fn binary_chain(q_y: f64, flip_z: f64, flip_x: f64) -> Result<MarkovTriple> {
    let y = Pmf::bernoulli(q_y)?;
    let side = JointPmf2::chain(&y, |v| bsc_row(v, flip_z))?;
    let kernel = Kernel::new([(0, bsc_row(0, flip_x)), (1, bsc_row(1, flip_x))]);
    MarkovTriple::new(side, kernel)
}

fn bsc_row(input: u64, flip: f64) -> Pmf {
    let p1 = if input == 0 { flip } else { 1.0 - flip };
    Pmf::bernoulli(p1).expect("flip probability in [0, 1]")
}

/// `Y ~ Bern(0.5)`, `Z = BSC(0.1)(Y)`, `X = BSC(0.2)(Y)`.
pub fn bsc_chain() -> Result<MarkovTriple> {
    binary_chain(0.5, 0.1, 0.2)
}

/// `Y ~ Bern(0.3)`, `Z = BSC(0.25)(Y)`, `X = BSC(0.4)(Y)`.
pub fn skewed_chain() -> Result<MarkovTriple> {
    binary_chain(0.3, 0.25, 0.4)
}

/// `Y ~ geometric(0.5)` tabulated to `1e-12` and renormalized, `Z = Y`,
/// `X | Y = y ~ geometric(0.3 + 0.4 / (1 + y))`.
pub fn geometric_chain() -> Result<MarkovTriple> {
    let y = Pmf::geometric(0.5)?;
    let side = JointPmf2::chain(&y, Pmf::point)?;
    let rows = side
        .entries()
        .map(|(y, _, _)| Ok((y, Pmf::geometric(0.3 + 0.4 / (1.0 + y as f64))?)))
        .collect::<Result<Vec<_>>>()?;
    MarkovTriple::new(side, Kernel::new(rows))
}

/// Fixture by file stem: `deterministic`, `bsc`, `skewed` or `geometric`.
pub fn by_name(name: &str) -> Option<Result<MarkovTriple>> {
    Some(match name {
        "deterministic" => deterministic_chain(),
        "bsc" => bsc_chain(),
        "skewed" => skewed_chain(),
        "geometric" => geometric_chain(),
        _ => return None,
    })
}

pub const NAMES: [&str; 4] = ["deterministic", "bsc", "skewed", "geometric"];
