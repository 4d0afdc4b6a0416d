use std::collections::BTreeMap;

use super::pmf::{Pmf, NORMALIZATION_TOL};
use crate::alphabet::{Atom, Symbol, Vars};
use crate::error::{Error, Result};
use crate::measures::{self, Table};
use crate::sum;

/// A finite joint pmf over two coordinates, `p(a, b)`.
///
/// Used for `p(yz)` (the side law of a [`MarkovTriple`](super::MarkovTriple))
/// and for `p(xy)` in the joint-pair generation model.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf2 {
    table: BTreeMap<(Symbol, Symbol), f64>,
    truncated_mass: f64,
}

impl JointPmf2 {
    /// Build from `(a, b, p)` entries summing to one within `1e-12`.
    pub fn new(entries: impl IntoIterator<Item = (Symbol, Symbol, f64)>) -> Result<Self> {
        Self::build(entries, 0.0)
    }

    /// Build from a table cut from an infinite law, missing `residual` mass.
    ///
    /// Entries must sum to `1 - residual` within `1e-12`; they are
    /// renormalized so the result is a proper finite pmf, and the removed
    /// mass is kept in [`truncated_mass`](Self::truncated_mass).
    pub fn from_truncated(entries: impl IntoIterator<Item = (Symbol, Symbol, f64)>, residual: f64) -> Result<Self> {
        Self::build(entries, residual)
    }

    fn build(entries: impl IntoIterator<Item = (Symbol, Symbol, f64)>, residual: f64) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (a, b, p) in entries {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidPmf(format!("probability {p} at ({a}, {b})")));
            }
            if table.insert((a, b), p).is_some() {
                return Err(Error::InvalidPmf(format!("duplicate entry ({a}, {b})")));
            }
        }
        if table.is_empty() {
            return Err(Error::InvalidPmf("empty joint table".into()));
        }
        let total = sum::sum(table.values().copied());
        if (total + residual - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidPmf(format!(
                "joint entries sum to {total} (expected {})",
                1.0 - residual
            )));
        }
        if residual > 0.0 {
            for p in table.values_mut() {
                *p /= total;
            }
        }
        Ok(JointPmf2 {
            table,
            truncated_mass: residual,
        })
    }

    /// Product law `p(a) q(b)` of two tabulated pmfs.
    pub fn product(first: &Pmf, second: &Pmf) -> Result<Self> {
        let a = first.tabulate()?;
        let b = second.tabulate()?;
        let entries = a
            .atoms
            .iter()
            .flat_map(|&(x, px)| b.atoms.iter().map(move |&(y, py)| (x, y, px * py)));
        let residual = 1.0 - (1.0 - a.residual) * (1.0 - b.residual);
        Self::build(entries, residual)
    }

    /// `p(a) K(b | a)` for a tabulated first law and per-symbol rows.
    pub fn chain(first: &Pmf, rows: impl Fn(Symbol) -> Pmf) -> Result<Self> {
        let a = first.tabulate()?;
        let mut entries = Vec::new();
        let mut kept = 0.0;
        for &(x, px) in &a.atoms {
            let row = rows(x).tabulate()?;
            for &(y, py) in &row.atoms {
                entries.push((x, y, px * py));
            }
            kept += px * (1.0 - row.residual);
        }
        Self::build(entries, 1.0 - kept)
    }

    pub fn mass(&self, a: Symbol, b: Symbol) -> f64 {
        self.table.get(&(a, b)).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (Symbol, Symbol, f64)> + '_ {
        self.table.iter().map(|(&(a, b), &p)| (a, b, p))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Mass removed by truncation before renormalizing (zero for explicit tables).
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    fn marginal_table(&self, first: bool) -> BTreeMap<Symbol, f64> {
        let mut out = BTreeMap::new();
        for (&(a, b), &p) in &self.table {
            *out.entry(if first { a } else { b }).or_insert(0.0) += p;
        }
        out
    }

    pub fn marginal_first(&self) -> Pmf {
        to_pmf(self.marginal_table(true))
    }

    pub fn marginal_second(&self) -> Pmf {
        to_pmf(self.marginal_table(false))
    }

    /// Marginalize onto the requested coordinates (`first`, `second`).
    ///
    /// Keeping both returns the table unchanged.
    pub fn marginalize(&self, first: bool, second: bool) -> Marginal2 {
        match (first, second) {
            (true, true) => Marginal2::Joint(self.clone()),
            (true, false) => Marginal2::Single(self.marginal_first()),
            (false, true) => Marginal2::Single(self.marginal_second()),
            (false, false) => Marginal2::Single(Pmf::point(0)),
        }
    }

    pub fn entropy(&self) -> f64 {
        measures::entropy(self.table.values().copied())
    }

    /// View as an atom table on coordinates `(Y, Z)`.
    pub fn as_yz_table(&self) -> JointTable {
        JointTable {
            vars: Vars::YZ,
            table: self.table.iter().map(|(&(y, z), &p)| ([0, y, z], p)).collect(),
            residual: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Marginal2 {
    Joint(JointPmf2),
    Single(Pmf),
}

fn to_pmf(table: BTreeMap<Symbol, f64>) -> Pmf {
    let (support, probs): (Vec<_>, Vec<_>) = table.into_iter().unzip();
    let total = sum::sum(probs.iter().copied());
    let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
    Pmf::explicit(&support, &probs).expect("marginal of a valid joint is valid")
}

/// A finite table over [`Atom`]s living on the coordinates `vars`.
///
/// Keys have the coordinates outside `vars` zeroed.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub vars: Vars,
    pub table: Table<Atom>,
    /// Mass not represented in `table` (truncated tails).
    pub residual: f64,
}

impl JointTable {
    pub fn new(vars: Vars, table: Table<Atom>) -> Self {
        JointTable {
            vars,
            table,
            residual: 0.0,
        }
    }

    /// Normalize nonnegative weights into a law on `vars`.
    pub fn from_weights(vars: Vars, weights: impl IntoIterator<Item = (Atom, f64)>) -> Result<Self> {
        let mut table: Table<Atom> = Table::new();
        for (a, w) in weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidPmf(format!("weight {w} at {a:?}")));
            }
            *table.entry(vars.project(&a)).or_insert(0.0) += w;
        }
        let total = sum::sum(table.values().copied());
        if total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidPmf("weights sum to zero".into()));
        }
        for p in table.values_mut() {
            *p /= total;
        }
        Ok(JointTable::new(vars, table))
    }

    pub fn total(&self) -> f64 {
        sum::sum(self.table.values().copied())
    }

    pub fn mass(&self, atom: &Atom) -> f64 {
        self.table.get(&self.vars.project(atom)).copied().unwrap_or(0.0)
    }

    /// Sum out the coordinates not in `keep`.
    pub fn marginalize(&self, keep: Vars) -> JointTable {
        let keep = Vars::from_bits(keep.bits() & self.vars.bits()).expect("valid mask");
        let mut table = Table::new();
        for (a, p) in &self.table {
            *table.entry(keep.project(a)).or_insert(0.0) += *p;
        }
        JointTable {
            vars: keep,
            table,
            residual: self.residual,
        }
    }

    pub fn entropy(&self) -> f64 {
        measures::entropy(self.table.values().copied())
    }
}
