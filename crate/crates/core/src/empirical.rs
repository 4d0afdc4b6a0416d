//! Aligned sequences, occurrence counts and empirical types.

use std::path::Path;

use crate::alphabet::{Atom, Symbol, Vars};
use crate::error::{Error, Result};
use crate::measures::{Bits, Table};
use crate::model::MarkovTriple;
use crate::sum::CompensatedSum;

/// Three aligned sequences `(x, y, z)` of a common length `n >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceTriple {
    x: Vec<Symbol>,
    y: Vec<Symbol>,
    z: Vec<Symbol>,
}

impl SequenceTriple {
    pub fn new(x: Vec<Symbol>, y: Vec<Symbol>, z: Vec<Symbol>) -> Result<Self> {
        if x.len() != y.len() || y.len() != z.len() {
            return Err(Error::LengthMismatch(format!(
                "x has {}, y has {}, z has {} symbols",
                x.len(),
                y.len(),
                z.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::LengthMismatch("sequences are empty".into()));
        }
        Ok(SequenceTriple { x, y, z })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[Symbol] {
        &self.x
    }

    pub fn y(&self) -> &[Symbol] {
        &self.y
    }

    pub fn z(&self) -> &[Symbol] {
        &self.z
    }

    pub fn atom(&self, i: usize) -> Atom {
        [self.x[i], self.y[i], self.z[i]]
    }

    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        (0..self.len()).map(|i| self.atom(i))
    }

    /// Parse whitespace-separated `x y z` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let (mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::field(
                    format!("line {}", lineno + 1),
                    format!("expected 3 integers \"x y z\", found {} fields", fields.len()),
                ));
            }
            let parse = |s: &str, name: &str| {
                s.parse::<Symbol>().map_err(|_| {
                    Error::field(format!("line {} {name}", lineno + 1), format!("`{s}` is not a nonnegative integer"))
                })
            };
            x.push(parse(fields[0], "x")?);
            y.push(parse(fields[1], "y")?);
            z.push(parse(fields[2], "z")?);
        }
        SequenceTriple::new(x, y, z)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        self.atoms().map(|[x, y, z]| format!("{x} {y} {z}\n")).collect()
    }
}

/// `N(x, y, z; seqs)`, the number of indices carrying `atom`.
pub fn count_occurrences(seqs: &SequenceTriple, atom: &Atom) -> u64 {
    seqs.atoms().filter(|a| a == atom).count() as u64
}

/// The joint type of aligned sequences with all of its marginals.
///
/// Counts are integers; probabilities are derived on demand. Only observed
/// atoms are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalType {
    n: u64,
    vars: Vars,
    /// Indexed by `Vars::bits`; each sorted by atom.
    counts: [Vec<(Atom, u64)>; 8],
}

impl EmpiricalType {
    /// Type of atoms living on `vars` (other coordinates are ignored).
    pub fn from_atoms(vars: Vars, atoms: impl IntoIterator<Item = Atom>) -> Self {
        let mut all: Vec<Atom> = atoms.into_iter().map(|a| vars.project(&a)).collect();
        assert!(!all.is_empty(), "a type needs at least one observation");
        let n = all.len() as u64;
        all.sort_unstable();
        let joint = run_lengths(all.into_iter().map(|a| (a, 1)));
        let mut counts: [Vec<(Atom, u64)>; 8] = Default::default();
        for sub in vars.subsets() {
            if sub == vars {
                continue;
            }
            let mut projected: Vec<(Atom, u64)> = joint.iter().map(|(a, c)| (sub.project(a), *c)).collect();
            projected.sort_unstable();
            counts[sub.bits() as usize] = run_lengths(projected.into_iter());
        }
        counts[vars.bits() as usize] = joint;
        EmpiricalType { n, vars, counts }
    }

    pub fn from_sequences(seqs: &SequenceTriple) -> Self {
        Self::from_atoms(Vars::XYZ, seqs.atoms())
    }

    pub fn from_pair(y: &[Symbol], z: &[Symbol]) -> Self {
        assert_eq!(y.len(), z.len(), "pair sequences must be aligned");
        Self::from_atoms(Vars::YZ, y.iter().zip(z).map(|(&y, &z)| [0, y, z]))
    }

    pub fn from_single(var: Vars, s: &[Symbol]) -> Self {
        assert_eq!(var.len(), 1, "single-variable type");
        let idx = var.bits().trailing_zeros() as usize;
        Self::from_atoms(var, s.iter().map(|&v| {
            let mut a = [0; 3];
            a[idx] = v;
            a
        }))
    }

    /// Merge two types over the same variables, as when counting is sharded.
    pub fn merge(&self, other: &EmpiricalType) -> EmpiricalType {
        assert_eq!(self.vars, other.vars, "types over different variables");
        let mut counts: [Vec<(Atom, u64)>; 8] = Default::default();
        for sub in self.vars.subsets() {
            let i = sub.bits() as usize;
            let mut all: Vec<(Atom, u64)> = self.counts[i].iter().chain(&other.counts[i]).copied().collect();
            all.sort_unstable();
            counts[i] = run_lengths(all.into_iter());
        }
        EmpiricalType {
            n: self.n + other.n,
            vars: self.vars,
            counts,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn vars(&self) -> Vars {
        self.vars
    }

    /// Observed atoms of the marginal on `sub` with their counts.
    pub fn counts(&self, sub: Vars) -> &[(Atom, u64)] {
        assert!(self.vars.contains(sub) && !sub.is_empty(), "{sub} is not a marginal of {}", self.vars);
        &self.counts[sub.bits() as usize]
    }

    pub fn count(&self, sub: Vars, atom: &Atom) -> u64 {
        let key = sub.project(atom);
        let c = self.counts(sub);
        c.binary_search_by(|(a, _)| a.cmp(&key)).map_or(0, |i| c[i].1)
    }

    pub fn prob(&self, sub: Vars, atom: &Atom) -> f64 {
        self.count(sub, atom) as f64 / self.n as f64
    }

    /// `q` on `sub` as a probability table.
    pub fn probs(&self, sub: Vars) -> Table<Atom> {
        let n = self.n as f64;
        self.counts(sub).iter().map(|(a, c)| (*a, *c as f64 / n)).collect()
    }

    /// `H(Q_sub) = log2 n - n^{-1} sum c log2 c`.
    pub fn entropy(&self, sub: Vars) -> Bits {
        let n = self.n as f64;
        let mut acc = CompensatedSum::new();
        for (_, c) in self.counts(sub) {
            let c = *c as f64;
            acc.add(c * c.log2());
        }
        (n.log2() - acc.value() / n).max(0.0)
    }
}

fn run_lengths(sorted: impl Iterator<Item = (Atom, u64)>) -> Vec<(Atom, u64)> {
    let mut out: Vec<(Atom, u64)> = Vec::new();
    for (a, c) in sorted {
        match out.last_mut() {
            Some((last, n)) if *last == a => *n += c,
            _ => out.push((a, c)),
        }
    }
    out
}

/// `n^{-1} E[sum A_i] - n^{-1} sum A_i` for `A_i = log2 p(X_i | y_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoglikGap {
    pub gap: Bits,
    /// Some observation had `p(x_i | y_i) = 0`; `gap` is then `+inf`.
    pub zero_probability: bool,
}

/// The log-likelihood gap evaluated index by index.
pub fn loglik_gap(seqs: &SequenceTriple, triple: &MarkovTriple) -> LoglikGap {
    let n = seqs.len() as f64;
    let mut expected = CompensatedSum::new();
    let mut observed = CompensatedSum::new();
    for (&x, &y) in seqs.x().iter().zip(seqs.y()) {
        let p = triple.kernel().mass(x, y);
        if p <= 0.0 {
            return LoglikGap {
                gap: f64::INFINITY,
                zero_probability: true,
            };
        }
        expected.add(-triple.row_entropy(y));
        observed.add(p.log2());
    }
    LoglikGap {
        gap: expected.value() / n - observed.value() / n,
        zero_probability: false,
    }
}

/// The same gap through the type:
/// `sum_yz q(yz) [D(Q_{X|yz} || P_{X|yz}) + H(Q_{X|yz}) - H(P_{X|yz})]`.
pub fn loglik_gap_from_type(q: &EmpiricalType, triple: &MarkovTriple) -> LoglikGap {
    let joint = q.probs(Vars::XYZ);
    let divergence = crate::measures::conditional_kl_with(&joint, Vars::YZ, |a| triple.kernel().mass(a[0], a[1]));
    if divergence.is_infinite() {
        return LoglikGap {
            gap: f64::INFINITY,
            zero_probability: true,
        };
    }
    let h_q = crate::measures::conditional_entropy(&joint, Vars::YZ);
    let mut h_p = CompensatedSum::new();
    for (a, c) in q.counts(Vars::YZ) {
        h_p.add(*c as f64 / q.n() as f64 * triple.row_entropy(a[1]));
    }
    LoglikGap {
        gap: divergence + h_q - h_p.value(),
        zero_probability: false,
    }
}
