//! Distributions over countable alphabets and Markov-factored triples.

mod io;
mod joint;
mod pmf;
mod triple;
mod zipf;

pub use io::{load_pmf, load_triple, parse_pmf, parse_triple, triple_to_json, PmfFile, TripleFile};
pub use joint::{JointPmf2, JointTable, Marginal2};
pub use pmf::{Estimate, Pmf, PmfKind, Tabulated, DEFAULT_TAIL_EPS, NORMALIZATION_TOL, TABLE_CAP};
pub use triple::{check_log_moment_bound, check_log_moment_bound_with_cap, Kernel, MarkovTriple, DEFAULT_MOMENT_CAP};

use crate::alphabet::Symbol;

/// `p(x)` for any pmf.
pub fn mass(pmf: &Pmf, x: Symbol) -> f64 {
    pmf.mass(x)
}

/// `p(x|y) p(yz)` tabulated; see [`MarkovTriple::induced_joint`].
pub fn induced_joint(triple: &MarkovTriple) -> crate::Result<JointTable> {
    triple.induced_joint()
}
