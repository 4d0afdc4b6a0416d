use std::collections::BTreeMap;

use super::zipf::ZetaSums;
use crate::alphabet::Symbol;
use crate::error::{Error, Result};
use crate::sum;
#[cfg(test)]
use crate::sum::CompensatedSum;

/// Default tail mass beyond which infinite supports are cut for tabulation.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Tolerance on the total mass of an explicit pmf.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Largest table an infinite family may be expanded into.
pub const TABLE_CAP: usize = 1 << 22;

/// A real value together with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    pub const fn exact(value: f64) -> Self {
        Estimate { value, err: 0.0 }
    }
}

/// A finite table of atoms cut from a possibly infinite pmf.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    pub atoms: Vec<(Symbol, f64)>,
    /// Mass not covered by `atoms`.
    pub residual: f64,
    /// Largest tabulated symbol for infinite families.
    pub cut: Option<Symbol>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PmfKind {
    Explicit(BTreeMap<Symbol, f64>),
    /// `p (1 - p)^k` on `k >= 0`.
    Geometric { p: f64 },
    /// `(k + 1)^{-s} / zeta(s)` on `k >= 0`.
    Zipf { s: f64 },
}

/// A probability mass function over a countable alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    kind: PmfKind,
    tail_eps: f64,
    zeta: Option<ZetaSums>,
}

impl Pmf {
    pub fn explicit(support: &[Symbol], probs: &[f64]) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::InvalidPmf(format!(
                "support has {} symbols but probs has {} entries",
                support.len(),
                probs.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        let mut table = BTreeMap::new();
        for (&x, &p) in support.iter().zip(probs) {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidPmf(format!("probability {p} for symbol {x}")));
            }
            if table.insert(x, p).is_some() {
                return Err(Error::InvalidPmf(format!("duplicate symbol {x}")));
            }
        }
        let total = sum::sum(table.values().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidPmf(format!("probabilities sum to {total}")));
        }
        Ok(Pmf {
            kind: PmfKind::Explicit(table),
            tail_eps: DEFAULT_TAIL_EPS,
            zeta: None,
        })
    }

    pub fn point(x: Symbol) -> Self {
        Pmf::explicit(&[x], &[1.0]).expect("point mass is valid")
    }

    /// Bernoulli law on `{0, 1}` with `P(1) = p1`.
    pub fn bernoulli(p1: f64) -> Result<Self> {
        Pmf::explicit(&[0, 1], &[1.0 - p1, p1])
    }

    pub fn geometric(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                reason: "geometric parameter must lie in (0, 1)",
            });
        }
        Ok(Pmf {
            kind: PmfKind::Geometric { p },
            tail_eps: DEFAULT_TAIL_EPS,
            zeta: None,
        })
    }

    pub fn zipf(s: f64) -> Result<Self> {
        if !(s > 1.0 && s.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "s",
                value: s,
                reason: "zipf exponent must exceed 1",
            });
        }
        Ok(Pmf {
            kind: PmfKind::Zipf { s },
            tail_eps: DEFAULT_TAIL_EPS,
            zeta: Some(ZetaSums::new(s)),
        })
    }

    pub fn with_tail_eps(mut self, tail_eps: f64) -> Result<Self> {
        if !(tail_eps > 0.0 && tail_eps < 1.0) {
            return Err(Error::InvalidParameter {
                name: "tail_eps",
                value: tail_eps,
                reason: "must lie in (0, 1)",
            });
        }
        self.tail_eps = tail_eps;
        Ok(self)
    }

    pub fn kind(&self) -> &PmfKind {
        &self.kind
    }

    pub fn tail_eps(&self) -> f64 {
        self.tail_eps
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, PmfKind::Explicit(_))
    }

    /// `p(x)`; zero outside an explicit support, closed form otherwise.
    pub fn mass(&self, x: Symbol) -> f64 {
        match &self.kind {
            PmfKind::Explicit(t) => t.get(&x).copied().unwrap_or(0.0),
            PmfKind::Geometric { p } => p * (1.0 - p).powf(x as f64),
            PmfKind::Zipf { .. } => self.zeta_sums().mass(x),
        }
    }

    fn zeta_sums(&self) -> &ZetaSums {
        self.zeta.as_ref().expect("zipf pmf carries its zeta sums")
    }

    /// Truncation point `k*` and the exact mass of symbols beyond it.
    ///
    /// Explicit pmfs report their largest symbol and zero residual.
    pub fn truncation(&self) -> (Symbol, f64) {
        match &self.kind {
            PmfKind::Explicit(t) => (*t.keys().next_back().expect("nonempty"), 0.0),
            PmfKind::Geometric { p } => {
                let q = 1.0 - p;
                // q^(k+1) <= tail_eps
                let mut k = ((self.tail_eps.ln() / q.ln()).ceil() as u64).saturating_sub(1);
                while k > 0 && q.powf(k as f64) <= self.tail_eps {
                    k -= 1;
                }
                while q.powf((k + 1) as f64) > self.tail_eps {
                    k += 1;
                }
                (k, q.powf((k + 1) as f64))
            }
            PmfKind::Zipf { .. } => {
                let z = self.zeta_sums();
                let k = z.truncation_point(self.tail_eps);
                (k, self.tail_mass(k))
            }
        }
    }

    /// Mass of the symbols strictly greater than `cut`.
    pub fn tail_mass(&self, cut: Symbol) -> f64 {
        match &self.kind {
            PmfKind::Explicit(t) => sum::sum(t.range(cut.saturating_add(1)..).map(|(_, p)| *p)),
            PmfKind::Geometric { p } => (1.0 - p).powf((cut + 1) as f64),
            PmfKind::Zipf { s } => {
                // Euler-Maclaurin on the shifted index, same scheme as the full sums.
                let a = (cut + 2) as f64;
                let f = a.powf(-s);
                let fp = -s * a.powf(-s - 1.0);
                (super::zipf::tail_integral(0, *s, a) + f / 2.0 - fp / 12.0) / self.zeta_sums().zeta()
            }
        }
    }

    /// Upper bound on `sum_{x > cut} -p(x) log2 p(x)`.
    pub fn tail_entropy(&self, cut: Symbol) -> f64 {
        match &self.kind {
            PmfKind::Explicit(t) => sum::sum(
                t.range(cut.saturating_add(1)..)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(_, p)| -p * p.log2()),
            ),
            PmfKind::Geometric { p } => {
                let q = 1.0 - p;
                let (a, b) = (-p.log2(), -q.log2());
                let r = q.powf((cut + 1) as f64);
                r * (a + b * ((cut + 1) as f64 + q / p))
            }
            PmfKind::Zipf { .. } => self.zeta_sums().tail_entropy_bound(cut.max(2)),
        }
    }

    /// All atoms up to the truncation point, zeros skipped.
    pub fn tabulate(&self) -> Result<Tabulated> {
        match &self.kind {
            PmfKind::Explicit(t) => Ok(Tabulated {
                atoms: t.iter().filter(|(_, p)| **p > 0.0).map(|(x, p)| (*x, *p)).collect(),
                residual: 0.0,
                cut: None,
            }),
            _ => {
                let (cut, residual) = self.truncation();
                if cut as u128 + 1 > TABLE_CAP as u128 {
                    return Err(Error::Truncation {
                        tail: self.tail_mass(TABLE_CAP as u64 - 1),
                        tail_eps: self.tail_eps,
                        cap: TABLE_CAP,
                    });
                }
                Ok(Tabulated {
                    atoms: (0..=cut).map(|x| (x, self.mass(x))).collect(),
                    residual,
                    cut: Some(cut),
                })
            }
        }
    }

    /// Entropy in bits.
    pub fn entropy(&self) -> Estimate {
        match &self.kind {
            PmfKind::Explicit(t) => Estimate::exact(crate::measures::entropy(t.values().copied())),
            PmfKind::Geometric { p } => {
                let q = 1.0 - p;
                Estimate::exact(-p.log2() - q.log2() * q / p)
            }
            PmfKind::Zipf { .. } => {
                let (value, err) = self.zeta_sums().entropy();
                Estimate { value, err }
            }
        }
    }

    /// `sum_x p(x) (log2 p(x))^2` in bits^2.
    pub fn log_moment(&self) -> Estimate {
        match &self.kind {
            PmfKind::Explicit(t) => Estimate::exact(sum::sum(
                t.values().filter(|p| **p > 0.0).map(|p| p * p.log2() * p.log2()),
            )),
            PmfKind::Geometric { p } => {
                let q = 1.0 - p;
                let (a, b) = (-p.log2(), -q.log2());
                let m1 = q / p;
                let m2 = q * (1.0 + q) / (p * p);
                Estimate::exact(a * a + 2.0 * a * b * m1 + b * b * m2)
            }
            PmfKind::Zipf { .. } => {
                let (value, err) = self.zeta_sums().log_moment();
                Estimate { value, err }
            }
        }
    }

    /// `sum_x p(x) log2 p(x)`, i.e. minus the entropy, as used for `E[log p(X)]`.
    pub fn expected_log(&self) -> f64 {
        -self.entropy().value
    }
}
