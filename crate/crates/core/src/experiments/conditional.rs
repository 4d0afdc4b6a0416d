//! Exact sampling of `Y ~ prod p(y_i)` conditioned on `(Y, z)` landing in
//! the `(Y, Z)` unified set.
//!
//! The event depends on `Y` only through the joint type of `(Y, z)`, i.e.
//! through how many positions of each `z`-column carry each `y` value. When
//! every column admits at most two `y` values (those with `p(y, z) > 0`;
//! any other value makes the divergence infinite), the joint types can be
//! enumerated, weighted by their probability under the i.i.d. law, drawn,
//! and then laid out uniformly over the column's positions. Columns with
//! more admissible values fall back to a single unconditioned draw.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::alphabet::Symbol;
use crate::measures::entropy;
use crate::model::MarkovTriple;
use crate::sampling::Sampler;
use crate::sum::CompensatedSum;

/// Enumerations larger than this use the fallback draw.
pub const ENUMERATION_CAP: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conditioned {
    /// A draw from the exact conditional law.
    Exact(Vec<Symbol>),
    /// The conditioning event is empty for this `z`.
    Infeasible,
    /// Enumeration was not possible; one unconditioned draw of `Y` and
    /// whether it satisfied the event.
    Fallback(Vec<Symbol>, bool),
}

/// Per-column view of the side law.
#[derive(Debug, Clone)]
struct Column {
    z: Symbol,
    positions: Vec<usize>,
    /// Admissible `y` values, at most two.
    values: Vec<Symbol>,
}

pub struct ConditionalSampler<'a> {
    triple: &'a MarkovTriple,
    y_prior: &'a Sampler,
    eta: f64,
    ln_p_y: BTreeMap<Symbol, f64>,
    admissible: BTreeMap<Symbol, Vec<Symbol>>,
    h_yz: f64,
    h_y: f64,
    h_z: f64,
}

impl<'a> ConditionalSampler<'a> {
    pub fn new(triple: &'a MarkovTriple, y_prior: &'a Sampler, eta: f64) -> Self {
        let mut admissible: BTreeMap<Symbol, Vec<Symbol>> = BTreeMap::new();
        for (y, z, p) in triple.side().entries() {
            if p > 0.0 {
                admissible.entry(z).or_default().push(y);
            }
        }
        ConditionalSampler {
            triple,
            y_prior,
            eta,
            ln_p_y: triple.y_marginal().iter().map(|(y, p)| (*y, p.ln())).collect(),
            admissible,
            h_yz: triple.entropy(crate::Vars::YZ),
            h_y: triple.entropy(crate::Vars::Y),
            h_z: triple.entropy(crate::Vars::Z),
        }
    }

    /// The four-term `(Y, Z)` score of a joint count table.
    fn score(&self, cells: &[((Symbol, Symbol), u64)], n: f64) -> f64 {
        let mut d = CompensatedSum::new();
        let mut y_counts: BTreeMap<Symbol, u64> = BTreeMap::new();
        let mut z_counts: BTreeMap<Symbol, u64> = BTreeMap::new();
        for &((y, z), c) in cells {
            if c == 0 {
                continue;
            }
            let q = c as f64 / n;
            let p = self.triple.side().mass(y, z);
            if p <= 0.0 {
                return f64::INFINITY;
            }
            d.add(q * (q / p).log2());
            *y_counts.entry(y).or_insert(0) += c;
            *z_counts.entry(z).or_insert(0) += c;
        }
        let h = |it: &mut dyn Iterator<Item = u64>| entropy(it.map(|c| c as f64 / n));
        let h_yz = h(&mut cells.iter().map(|(_, c)| *c));
        let h_y = h(&mut y_counts.values().copied());
        let h_z = h(&mut z_counts.values().copied());
        d.value().max(0.0) + (h_yz - self.h_yz).abs() + (h_y - self.h_y).abs() + (h_z - self.h_z).abs()
    }

    /// Feasible configurations as `(flat index, log-weight)`; flat indices
    /// count with the first column fastest.
    fn scan_general(
        &self,
        columns: &[Column],
        candidates: &[Vec<Candidate>],
        y_index: &BTreeMap<Symbol, usize>,
        n: usize,
        size: usize,
        dz: f64,
    ) -> Vec<(usize, f64)> {
        let nf = n as f64;
        let slots: Vec<(usize, Option<usize>)> = columns
            .iter()
            .map(|c| (y_index[&c.values[0]], c.values.get(1).map(|v| y_index[v])))
            .collect();
        let mut feasible = Vec::new();
        let mut combo = vec![0usize; candidates.len()];
        let mut y_counts = vec![0u64; y_index.len()];
        for flat in 0..size {
            let (mut d, mut h_yz, mut lw) = (0.0, 0.0, 0.0);
            y_counts.iter_mut().for_each(|c| *c = 0);
            for (((&i, list), col), &(first, second)) in combo.iter().zip(candidates).zip(columns).zip(&slots) {
                let c = &list[i];
                d += c.divergence;
                h_yz += c.entropy;
                lw += c.ln_weight;
                y_counts[first] += col.positions.len() as u64 - c.k;
                if let Some(second) = second {
                    y_counts[second] += c.k;
                }
            }
            let h_y = entropy(y_counts.iter().map(|&c| c as f64 / nf));
            if f64::max(d, 0.0) + (h_yz - self.h_yz).abs() + (h_y - self.h_y).abs() + dz <= self.eta {
                feasible.push((flat, lw));
            }
            for (slot, l) in combo.iter_mut().zip(candidates) {
                *slot += 1;
                if *slot < l.len() {
                    break;
                }
                *slot = 0;
            }
        }
        feasible
    }

    /// [`Self::scan_general`] for at most two `y` symbols overall: `H(Q_Y)`
    /// depends only on how many positions carry the second symbol.
    fn scan_binary(
        &self,
        columns: &[Column],
        candidates: &[Vec<Candidate>],
        y_index: &BTreeMap<Symbol, usize>,
        n: usize,
        size: usize,
        dz: f64,
    ) -> Vec<(usize, f64)> {
        let nf = n as f64;
        let h_y: Vec<f64> = (0..=n).map(|k| entropy([k as f64 / nf, (n - k) as f64 / nf])).collect();
        // per candidate: positions holding the symbol with dense index 1
        let ones: Vec<Vec<u64>> = columns
            .iter()
            .zip(candidates)
            .map(|(col, list)| {
                let m = col.positions.len() as u64;
                list.iter()
                    .map(|c| {
                        let first = y_index[&col.values[0]] == 1;
                        let second = col.values.get(1).is_some_and(|v| y_index[v] == 1);
                        u64::from(first) * (m - c.k) + u64::from(second) * c.k
                    })
                    .collect()
            })
            .collect();
        let mut feasible = Vec::new();
        let mut combo = vec![0usize; candidates.len()];
        for flat in 0..size {
            let (mut d, mut h_yz, mut lw, mut k) = (0.0, 0.0, 0.0, 0usize);
            for ((&i, list), o) in combo.iter().zip(candidates).zip(&ones) {
                let c = &list[i];
                d += c.divergence;
                h_yz += c.entropy;
                lw += c.ln_weight;
                k += o[i] as usize;
            }
            if f64::max(d, 0.0) + (h_yz - self.h_yz).abs() + (h_y[k] - self.h_y).abs() + dz <= self.eta {
                feasible.push((flat, lw));
            }
            for (slot, l) in combo.iter_mut().zip(candidates) {
                *slot += 1;
                if *slot < l.len() {
                    break;
                }
                *slot = 0;
            }
        }
        feasible
    }

    fn fallback<R: Rng + ?Sized>(&self, z: &[Symbol], rng: &mut R) -> Conditioned {
        let y = self.y_prior.sample_n(z.len(), rng);
        let mut counts: BTreeMap<(Symbol, Symbol), u64> = BTreeMap::new();
        for (a, b) in y.iter().zip(z) {
            *counts.entry((*a, *b)).or_insert(0) += 1;
        }
        let cells: Vec<_> = counts.into_iter().collect();
        let ok = self.score(&cells, z.len() as f64) <= self.eta;
        Conditioned::Fallback(y, ok)
    }

    pub fn sample<R: Rng + ?Sized>(&self, z: &[Symbol], rng: &mut R) -> Conditioned {
        let n = z.len();
        let mut by_z: BTreeMap<Symbol, Vec<usize>> = BTreeMap::new();
        for (i, &c) in z.iter().enumerate() {
            by_z.entry(c).or_default().push(i);
        }
        let mut columns = Vec::with_capacity(by_z.len());
        for (c, positions) in by_z {
            let values = match self.admissible.get(&c) {
                Some(v) => v.clone(),
                None => return Conditioned::Infeasible,
            };
            if values.len() > 2 {
                return self.fallback(z, rng);
            }
            columns.push(Column { z: c, positions, values });
        }

        let mut ln_fact = Vec::with_capacity(n + 1);
        ln_fact.push(0.0f64);
        for i in 1..=n {
            ln_fact.push(ln_fact[i - 1] + (i as f64).ln());
        }

        // dense indices for the y symbols so H(Q_Y) can be accumulated per configuration
        let mut y_index: BTreeMap<Symbol, usize> = BTreeMap::new();
        for col in &columns {
            for v in &col.values {
                let next = y_index.len();
                y_index.entry(*v).or_insert(next);
            }
        }

        // D(Q_YZ || P_YZ), H(Q_YZ) and the log-weight are sums over columns
        let nf = n as f64;
        let cell = |c: u64, p: f64| -> (f64, f64) {
            if c == 0 {
                return (0.0, 0.0);
            }
            let q = c as f64 / nf;
            (q * (q / p).log2(), -q * q.log2())
        };
        let mut candidates: Vec<Vec<Candidate>> = Vec::with_capacity(columns.len());
        for col in &columns {
            let m = col.positions.len();
            let a = col.values[0];
            let pa = self.triple.side().mass(a, col.z);
            if col.values.len() == 1 {
                let (d, h) = cell(m as u64, pa);
                candidates.push(vec![Candidate {
                    k: 0,
                    ln_weight: m as f64 * self.ln_p_y[&a],
                    divergence: d,
                    entropy: h,
                }]);
                continue;
            }
            let b = col.values[1];
            let pb = self.triple.side().mass(b, col.z);
            let pb_cond = pb / (pa + pb);
            // chain rule: q(z) D(Q_{Y|z} || P_{Y|z}) <= D(Q_YZ || P_YZ) <= eta
            let budget = self.eta * nf / m as f64;
            let mut list = Vec::new();
            for k in 0..=m {
                if binary_kl(k as f64 / m as f64, pb_cond) > budget + 1e-12 {
                    continue;
                }
                let (da, ha) = cell((m - k) as u64, pa);
                let (db, hb) = cell(k as u64, pb);
                list.push(Candidate {
                    k: k as u64,
                    ln_weight: ln_fact[m] - ln_fact[k] - ln_fact[m - k]
                        + k as f64 * self.ln_p_y[&b]
                        + (m - k) as f64 * self.ln_p_y[&a],
                    divergence: da + db,
                    entropy: ha + hb,
                });
            }
            if list.is_empty() {
                return Conditioned::Infeasible;
            }
            candidates.push(list);
        }
        let size = candidates.iter().try_fold(1usize, |acc, l| acc.checked_mul(l.len()));
        let size = match size {
            Some(s) if s <= ENUMERATION_CAP => s,
            _ => return self.fallback(z, rng),
        };

        let h_z = entropy(columns.iter().map(|c| c.positions.len() as f64 / nf));
        let dz = (h_z - self.h_z).abs();
        let feasible = if y_index.len() <= 2 {
            self.scan_binary(&columns, &candidates, &y_index, n, size, dz)
        } else {
            self.scan_general(&columns, &candidates, &y_index, n, size, dz)
        };
        if feasible.is_empty() {
            return Conditioned::Infeasible;
        }

        let best = feasible.iter().map(|(_, w)| *w).fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = feasible.iter().map(|(_, w)| (w - best).exp()).collect();
        let pick = WeightedIndex::new(&weights).expect("best configuration has weight 1").sample(rng);
        let mut flat = feasible[pick].0;

        let mut y = vec![0; n];
        for (col, list) in columns.iter().zip(&candidates) {
            let k = list[flat % list.len()].k as usize;
            flat /= list.len();
            let m = col.positions.len();
            for &i in &col.positions {
                y[i] = col.values[0];
            }
            if k > 0 {
                for j in rand::seq::index::sample(rng, m, k) {
                    y[col.positions[j]] = col.values[1];
                }
            }
        }
        Conditioned::Exact(y)
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    /// Positions carrying the column's second admissible value.
    k: u64,
    ln_weight: f64,
    divergence: f64,
    entropy: f64,
}

/// `D(Bern(f) || Bern(p))` in bits.
fn binary_kl(f: f64, p: f64) -> f64 {
    let term = |a: f64, b: f64| if a > 0.0 { a * (a / b).log2() } else { 0.0 };
    term(f, p) + term(1.0 - f, 1.0 - p)
}
