//! Unified typicality scores, the two-term shortcut and the weak baseline.
//!
//! The unified score of a type `Q` against a law `P` on variables `S` is
//!
//! ```text
//! D(Q_S || P_S) + sum_{T ⊆ S, T ≠ ∅} |H(Q_T) - H(P_T)|
//! ```
//!
//! which for `S = XYZ` has eight terms and for `S = YZ` four. Membership
//! is `score <= threshold`.

use std::fmt;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::alphabet::{Atom, Vars};
use crate::empirical::{EmpiricalType, SequenceTriple};
use crate::measures::{self, Bits};
use crate::model::{JointPmf2, JointTable, MarkovTriple, Pmf};
use crate::sum::CompensatedSum;

/// Something with a joint distribution over some of `{X, Y, Z}`: an
/// empirical type or an explicit table.
pub trait TypeLike {
    fn vars(&self) -> Vars;
    /// Atoms of the marginal on `sub` with positive probability.
    fn atoms(&self, sub: Vars) -> Vec<(Atom, f64)>;
    fn entropy(&self, sub: Vars) -> Bits;
}

impl TypeLike for EmpiricalType {
    fn vars(&self) -> Vars {
        EmpiricalType::vars(self)
    }

    fn atoms(&self, sub: Vars) -> Vec<(Atom, f64)> {
        let n = self.n() as f64;
        self.counts(sub).iter().map(|(a, c)| (*a, *c as f64 / n)).collect()
    }

    fn entropy(&self, sub: Vars) -> Bits {
        EmpiricalType::entropy(self, sub)
    }
}

impl TypeLike for JointTable {
    fn vars(&self) -> Vars {
        self.vars
    }

    fn atoms(&self, sub: Vars) -> Vec<(Atom, f64)> {
        self.marginalize(sub).table.into_iter().filter(|(_, p)| *p > 0.0).collect()
    }

    fn entropy(&self, sub: Vars) -> Bits {
        self.marginalize(sub).entropy()
    }
}

/// A reference law `P` whose marginals can be evaluated pointwise.
pub trait ReferenceLaw {
    fn vars(&self) -> Vars;
    fn mass(&self, sub: Vars, atom: &Atom) -> f64;
    fn entropy(&self, sub: Vars) -> Bits;
}

impl ReferenceLaw for MarkovTriple {
    fn vars(&self) -> Vars {
        Vars::XYZ
    }

    fn mass(&self, sub: Vars, atom: &Atom) -> f64 {
        MarkovTriple::mass(self, sub, atom)
    }

    fn entropy(&self, sub: Vars) -> Bits {
        MarkovTriple::entropy(self, sub)
    }
}

/// A two-coordinate joint law placed on `(Y, Z)`.
impl ReferenceLaw for JointPmf2 {
    fn vars(&self) -> Vars {
        Vars::YZ
    }

    fn mass(&self, sub: Vars, atom: &Atom) -> f64 {
        match sub {
            Vars::YZ => JointPmf2::mass(self, atom[1], atom[2]),
            Vars::Y => self.marginal_first().mass(atom[1]),
            Vars::Z => self.marginal_second().mass(atom[2]),
            _ => panic!("{sub} is not a marginal of a (Y, Z) law"),
        }
    }

    fn entropy(&self, sub: Vars) -> Bits {
        match sub {
            Vars::YZ => JointPmf2::entropy(self),
            Vars::Y => self.marginal_first().entropy().value,
            Vars::Z => self.marginal_second().entropy().value,
            _ => panic!("{sub} is not a marginal of a (Y, Z) law"),
        }
    }
}

impl ReferenceLaw for JointTable {
    fn vars(&self) -> Vars {
        self.vars
    }

    fn mass(&self, sub: Vars, atom: &Atom) -> f64 {
        if sub == self.vars {
            JointTable::mass(self, atom)
        } else {
            self.marginalize(sub).mass(atom)
        }
    }

    fn entropy(&self, sub: Vars) -> Bits {
        self.marginalize(sub).entropy()
    }
}

/// A single pmf placed on one coordinate.
#[derive(Debug, Clone, Copy)]
pub struct OnVar<'a> {
    pub pmf: &'a Pmf,
    pub var: Vars,
}

impl ReferenceLaw for OnVar<'_> {
    fn vars(&self) -> Vars {
        self.var
    }

    fn mass(&self, _sub: Vars, atom: &Atom) -> f64 {
        self.pmf.mass(atom[self.var.bits().trailing_zeros() as usize])
    }

    fn entropy(&self, _sub: Vars) -> Bits {
        self.pmf.entropy().value
    }
}

/// Which membership rule a report was computed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Eight-term score on `(X, Y, Z)`.
    Unified3,
    /// Four-term score on `(Y, Z)`.
    Unified2,
    /// Two-term score on `Z` alone.
    Unified1,
    /// `D(Q_XYZ || P_XYZ) + |H(Q_XYZ) - H(P_XYZ)|`.
    TwoTerm,
    /// Largest of the seven per-subset log-likelihood deviations.
    Weak,
}

impl Variant {
    pub fn vars(self) -> Vars {
        match self {
            Variant::Unified2 => Vars::YZ,
            Variant::Unified1 => Vars::Z,
            _ => Vars::XYZ,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Unified3 => "unified3",
            Variant::Unified2 => "unified2",
            Variant::Unified1 => "unified1",
            Variant::TwoTerm => "two_term",
            Variant::Weak => "weak",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "unified3" => Variant::Unified3,
            "unified2" => Variant::Unified2,
            "unified1" => Variant::Unified1,
            "two_term" | "two-term" => Variant::TwoTerm,
            "weak" => Variant::Weak,
            other => return Err(format!("unknown typicality variant `{other}`")),
        })
    }
}

/// Itemized score. For every variant except [`Variant::Weak`],
/// `total = divergence_term + sum(entropy_terms)`; for `Weak` the divergence
/// term is zero and `total` is the largest entropy term.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalityReport {
    pub variant: Variant,
    pub vars: Vars,
    pub divergence_term: Bits,
    pub entropy_terms: Vec<(Vars, Bits)>,
    pub total: Bits,
    pub threshold: Option<f64>,
    pub member: Option<bool>,
}

impl TypicalityReport {
    /// Apply `threshold` with `total <= threshold` as membership.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self.member = Some(self.total <= threshold);
        self
    }

    pub fn term(&self, vars: Vars) -> Option<Bits> {
        self.entropy_terms.iter().find(|(v, _)| *v == vars).map(|(_, b)| *b)
    }

    /// JSON with itemized terms under the labels `D`, `XYZ`, `XY`, ... .
    /// Infinite values are written as the string `"inf"`.
    pub fn to_json(&self) -> Value {
        let mut terms = Map::new();
        if self.variant != Variant::Weak {
            terms.insert("D".into(), num(self.divergence_term));
        }
        for (v, b) in &self.entropy_terms {
            terms.insert(v.label().into(), num(*b));
        }
        json!({
            "variant": self.variant.name(),
            "vars": self.vars.label(),
            "terms": Value::Object(terms),
            "total": num(self.total),
            "threshold": self.threshold.map_or(Value::Null, num),
            "member": self.member,
        })
    }
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// `D(Q_vars || P_vars)`.
pub fn divergence<Q, P>(q: &Q, p: &P, vars: Vars) -> Bits
where
    Q: TypeLike + ?Sized,
    P: ReferenceLaw + ?Sized,
{
    let atoms = q.atoms(vars);
    measures::kl_divergence_with(atoms.iter().map(|(a, w)| (a, *w)), |a| p.mass(vars, a))
}

/// `V(Q_vars, P_vars)` with `P` normalized.
pub fn distance<Q, P>(q: &Q, p: &P, vars: Vars) -> f64
where
    Q: TypeLike + ?Sized,
    P: ReferenceLaw + ?Sized,
{
    let atoms = q.atoms(vars);
    measures::variational_distance_with(atoms.iter().map(|(a, w)| (a, *w)), |a| p.mass(vars, a))
}

/// The unified score on an arbitrary variable set.
pub fn unified_score<Q, P>(q: &Q, p: &P, vars: Vars) -> TypicalityReport
where
    Q: TypeLike + ?Sized,
    P: ReferenceLaw + ?Sized,
{
    assert!(
        q.vars().contains(vars) && p.vars().contains(vars),
        "score on {vars} needs a type on {} and a law on {}",
        q.vars(),
        p.vars()
    );
    let divergence_term = divergence(q, p, vars);
    let entropy_terms: Vec<(Vars, Bits)> = vars
        .subsets()
        .into_iter()
        .map(|sub| (sub, (q.entropy(sub) - p.entropy(sub)).abs()))
        .collect();
    let mut acc = CompensatedSum::new();
    acc.add(divergence_term);
    for (_, b) in &entropy_terms {
        acc.add(*b);
    }
    let variant = match vars {
        Vars::YZ => Variant::Unified2,
        v if v.len() == 1 => Variant::Unified1,
        _ => Variant::Unified3,
    };
    TypicalityReport {
        variant,
        vars,
        divergence_term,
        entropy_terms,
        total: acc.value(),
        threshold: None,
        member: None,
    }
}

/// All eight terms on `(X, Y, Z)`.
pub fn unified_score3<Q, P>(q: &Q, p: &P) -> TypicalityReport
where
    Q: TypeLike + ?Sized,
    P: ReferenceLaw + ?Sized,
{
    unified_score(q, p, Vars::XYZ)
}

/// The four terms on `(Y, Z)`.
pub fn unified_score2<Q: TypeLike + ?Sized>(q: &Q, p_yz: &JointPmf2) -> TypicalityReport {
    unified_score(q, p_yz, Vars::YZ)
}

/// The two terms on a single variable.
pub fn unified_score1<Q: TypeLike + ?Sized>(q: &Q, pmf: &Pmf, var: Vars) -> TypicalityReport {
    unified_score(q, &OnVar { pmf, var }, var)
}

/// `D(Q_S || P_S) + |H(Q_S) - H(P_S)|` on the full variable set of the law.
pub fn two_term_report<Q, P>(q: &Q, p: &P) -> TypicalityReport
where
    Q: TypeLike + ?Sized,
    P: ReferenceLaw + ?Sized,
{
    let vars = p.vars();
    let divergence_term = divergence(q, p, vars);
    let dh = (q.entropy(vars) - p.entropy(vars)).abs();
    TypicalityReport {
        variant: Variant::TwoTerm,
        vars,
        divergence_term,
        entropy_terms: vec![(vars, dh)],
        total: divergence_term + dh,
        threshold: None,
        member: None,
    }
}

pub fn two_term_score<Q, P>(q: &Q, p: &P) -> Bits
where
    Q: TypeLike + ?Sized,
    P: ReferenceLaw + ?Sized,
{
    two_term_report(q, p).total
}

/// Per-subset deviations `|sum_a -q_T(a) log2 p_T(a) - H(P_T)|` and their maximum.
pub fn weak_report<Q, P>(q: &Q, p: &P) -> TypicalityReport
where
    Q: TypeLike + ?Sized,
    P: ReferenceLaw + ?Sized,
{
    let vars = p.vars();
    let mut terms = Vec::new();
    let mut worst: f64 = 0.0;
    for sub in vars.subsets() {
        let mut acc = CompensatedSum::new();
        let mut infinite = false;
        for (a, w) in q.atoms(sub) {
            let pa = p.mass(sub, &a);
            if pa <= 0.0 {
                infinite = true;
                break;
            }
            acc.add(-w * pa.log2());
        }
        let dev = if infinite { f64::INFINITY } else { (acc.value() - p.entropy(sub)).abs() };
        worst = worst.max(dev);
        terms.push((sub, dev));
    }
    TypicalityReport {
        variant: Variant::Weak,
        vars,
        divergence_term: 0.0,
        entropy_terms: terms,
        total: worst,
        threshold: None,
        member: None,
    }
}

pub fn weak_score<Q, P>(q: &Q, p: &P) -> Bits
where
    Q: TypeLike + ?Sized,
    P: ReferenceLaw + ?Sized,
{
    weak_report(q, p).total
}

/// Score `q` against `p` under `variant` and apply `threshold`.
pub fn is_typical<Q: TypeLike + ?Sized>(q: &Q, p: &MarkovTriple, threshold: f64, variant: Variant) -> TypicalityReport {
    let report = match variant {
        Variant::Unified3 | Variant::Unified2 | Variant::Unified1 => unified_score(q, p, variant.vars()),
        Variant::TwoTerm => two_term_report(q, p),
        Variant::Weak => weak_report(q, p),
    };
    report.with_threshold(threshold)
}

/// Membership in `U_[XYZ]gamma` implies membership in `U_[XZ]`, `U_[XY]`
/// and `U_[YZ]` at the same `gamma`.
pub fn consistency_check(seqs: &SequenceTriple, p: &MarkovTriple, gamma: f64) -> bool {
    projection_holds(&EmpiricalType::from_sequences(seqs), p, gamma)
}

/// [`consistency_check`] on an already computed type.
pub fn projection_holds<Q: TypeLike + ?Sized>(q: &Q, p: &MarkovTriple, gamma: f64) -> bool {
    if unified_score3(q, p).total > gamma {
        return true;
    }
    [Vars::XZ, Vars::XY, Vars::YZ]
        .into_iter()
        .all(|sub| unified_score(q, p, sub).total <= gamma)
}
