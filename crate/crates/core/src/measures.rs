//! Entropy, divergence and variational distance in bits.
//!
//! Sums are compensated. `+inf` is an ordinary return value: a divergence
//! with `q(a) > 0 = p(a)` is infinite and flows into any score built on it.
//! Conditional quantities skip conditioning values with zero weight.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use crate::alphabet::{Atom, Vars};
use crate::sum::CompensatedSum;

/// A quantity measured in bits.
pub type Bits = f64;

/// A finite table of probabilities keyed by outcome.
pub type Table<K> = BTreeMap<K, f64>;

/// `-sum p log2 p` with `0 log 0 = 0`.
pub fn entropy<I: IntoIterator<Item = f64>>(probs: I) -> Bits {
    let mut acc = CompensatedSum::new();
    for p in probs {
        if p > 0.0 {
            acc.add(-p * p.ln());
        }
    }
    acc.value() / LN_2
}

pub fn entropy_table<K>(t: &Table<K>) -> Bits {
    entropy(t.values().copied())
}

/// `sum q log2(q / p)` over the support of `q`, with `p` given pointwise.
pub fn kl_divergence_with<'a, K: 'a, I, F>(q: I, p: F) -> Bits
where
    I: IntoIterator<Item = (&'a K, f64)>,
    F: Fn(&K) -> f64,
{
    let mut acc = CompensatedSum::new();
    for (k, qk) in q {
        if qk <= 0.0 {
            continue;
        }
        let pk = p(k);
        if pk <= 0.0 {
            return f64::INFINITY;
        }
        acc.add(qk * (qk / pk).ln());
    }
    // rounding can leave a tiny negative value when q = p
    (acc.value() / LN_2).max(0.0)
}

pub fn kl_divergence<K: Ord>(q: &Table<K>, p: &Table<K>) -> Bits {
    kl_divergence_with(q.iter().map(|(k, v)| (k, *v)), |k| p.get(k).copied().unwrap_or(0.0))
}

/// `D(q || p)` for aligned dense vectors.
pub fn kl_divergence_dense(q: &[f64], p: &[f64]) -> Bits {
    assert_eq!(q.len(), p.len(), "pmfs must share an alphabet");
    let mut acc = CompensatedSum::new();
    for (&qi, &pi) in q.iter().zip(p) {
        if qi <= 0.0 {
            continue;
        }
        if pi <= 0.0 {
            return f64::INFINITY;
        }
        acc.add(qi * (qi / pi).ln());
    }
    (acc.value() / LN_2).max(0.0)
}

/// `sum |q - p|` over the union of supports.
pub fn variational_distance<K: Ord>(q: &Table<K>, p: &Table<K>) -> f64 {
    let mut acc = CompensatedSum::new();
    for (k, qk) in q {
        acc.add((qk - p.get(k).copied().unwrap_or(0.0)).abs());
    }
    for (k, pk) in p {
        if !q.contains_key(k) {
            acc.add(pk.abs());
        }
    }
    acc.value()
}

pub fn variational_distance_dense(q: &[f64], p: &[f64]) -> f64 {
    assert_eq!(q.len(), p.len(), "pmfs must share an alphabet");
    let mut acc = CompensatedSum::new();
    for (a, b) in q.iter().zip(p) {
        acc.add((a - b).abs());
    }
    acc.value()
}

/// `V(q, p)` when `p` is a normalized law known only pointwise.
///
/// Mass of `p` outside the support of `q` is `1 - sum_{supp q} p`.
pub fn variational_distance_with<'a, K: 'a, I, F>(q: I, p: F) -> f64
where
    I: IntoIterator<Item = (&'a K, f64)>,
    F: Fn(&K) -> f64,
{
    let mut acc = CompensatedSum::new();
    let mut covered = CompensatedSum::new();
    for (k, qk) in q {
        let pk = p(k);
        acc.add((qk - pk).abs());
        covered.add(pk);
    }
    acc.add((1.0 - covered.value()).max(0.0));
    acc.value()
}

/// `sqrt(2 ln 2 * D(q || p)) - V(q, p)`; Pinsker's inequality says this is `>= 0`.
pub fn pinsker_gap<K: Ord>(q: &Table<K>, p: &Table<K>) -> f64 {
    pinsker_gap_from(kl_divergence(q, p), variational_distance(q, p))
}

pub fn pinsker_gap_dense(q: &[f64], p: &[f64]) -> f64 {
    pinsker_gap_from(kl_divergence_dense(q, p), variational_distance_dense(q, p))
}

pub fn pinsker_gap_from(divergence: Bits, distance: f64) -> f64 {
    (2.0 * LN_2 * divergence).sqrt() - distance
}

/// Sum out the coordinates not in `keep`.
pub fn marginal(joint: &Table<Atom>, keep: Vars) -> Table<Atom> {
    let mut out = Table::new();
    for (a, p) in joint {
        *out.entry(keep.project(a)).or_insert(0.0) += *p;
    }
    out
}

/// `H(rest | given)` computed row by row from its definition.
pub fn conditional_entropy(joint: &Table<Atom>, given: Vars) -> Bits {
    let weights = marginal(joint, given);
    let mut acc = CompensatedSum::new();
    for (a, p) in joint {
        if *p <= 0.0 {
            continue;
        }
        let w = weights[&given.project(a)];
        acc.add(-p * (p / w).ln());
    }
    (acc.value() / LN_2).max(0.0)
}

/// `sum_c q(c) D(Q_{.|c} || P_{.|c})` with `p_cond(a) = p(a | given-part of a)`.
pub fn conditional_kl_with<F>(q: &Table<Atom>, given: Vars, p_cond: F) -> Bits
where
    F: Fn(&Atom) -> f64,
{
    let weights = marginal(q, given);
    let mut acc = CompensatedSum::new();
    for (a, qa) in q {
        if *qa <= 0.0 {
            continue;
        }
        let w = weights[&given.project(a)];
        let pc = p_cond(a);
        if pc <= 0.0 {
            return f64::INFINITY;
        }
        acc.add(qa * ((qa / w) / pc).ln());
    }
    (acc.value() / LN_2).max(0.0)
}

/// `D(Q_{.|given} || P_{.|given} | Q_given)` for two joint tables.
pub fn conditional_kl(q: &Table<Atom>, p: &Table<Atom>, given: Vars) -> Bits {
    let p_given = marginal(p, given);
    conditional_kl_with(q, given, |a| {
        let pa = p.get(a).copied().unwrap_or(0.0);
        match p_given.get(&given.project(a)) {
            Some(w) if *w > 0.0 => pa / w,
            _ => 0.0,
        }
    })
}
