//! Deterministic families showing that entropy is only lower
//! semicontinuous under variational convergence, and that convergence of
//! both the law and its joint entropy carries over to marginal entropies.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::entropy;
use crate::model::TABLE_CAP;

/// A law made of blocks, each uniform over `2^log2_count` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPmf {
    /// `(log2 of atom count, block mass)`; blocks occupy disjoint atoms.
    pub blocks: Vec<(f64, f64)>,
}

impl BlockPmf {
    pub fn entropy(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|(_, m)| *m > 0.0)
            .map(|(k, m)| m * (k - m.log2()))
            .sum()
    }

    /// `V` against another law on the same blocks.
    pub fn distance(&self, other: &BlockPmf) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|((_, a), (_, b))| (a - b).abs()).sum()
    }
}

/// `(1 - 1/m) delta_0 + (1/m) Unif{1, ..., 2^m}` on the blocks `{0}` and
/// `{1..2^m}`.
pub fn spike_family(m: usize) -> BlockPmf {
    let w = 1.0 / m as f64;
    BlockPmf {
        blocks: vec![(0.0, 1.0 - w), (m as f64, w)],
    }
}

pub fn spike_limit(m: usize) -> BlockPmf {
    BlockPmf {
        blocks: vec![(0.0, 1.0), (m as f64, 0.0)],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpRow {
    pub m: usize,
    /// `V(P_m, delta_0)`.
    pub distance: f64,
    /// `H(P_m)`.
    pub entropy: f64,
    /// `H(delta_0)`.
    pub limit_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRow {
    pub m: usize,
    pub distance: f64,
    pub joint_gap: f64,
    pub first_gap: f64,
    pub second_gap: f64,
    pub conditional_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemicontinuityTable {
    pub jump: Vec<JumpRow>,
    pub family: Vec<FamilyRow>,
}

/// Largest index tabulated for the two-variable family; the geometric tails
/// beyond it are below `1e-24`.
const A_MAX: u64 = 200;

/// `P`: `A ~ geometric(1/2)`, `B = A mod 2`.
/// `R`: `A ~ geometric(1/4)` and `B` a fair bit, independent.
/// `P_m = (1 - 1/m) P + (1/m) R`, indexed as `[a][b]`.
fn mixture(m: usize) -> Vec<[f64; 2]> {
    let w = if m == 0 { 0.0 } else { 1.0 / m as f64 };
    (0..=A_MAX)
        .map(|a| {
            let p = 0.5 * 0.5f64.powi(a as i32);
            let r = 0.25 * 0.75f64.powi(a as i32);
            let mut cell = [0.5 * w * r, 0.5 * w * r];
            cell[(a % 2) as usize] += (1.0 - w) * p;
            cell
        })
        .collect()
}

struct Entropies {
    joint: f64,
    first: f64,
    second: f64,
}

fn entropies(t: &[[f64; 2]]) -> Entropies {
    let joint = entropy(t.iter().flat_map(|c| c.iter().copied()));
    let first = entropy(t.iter().map(|c| c[0] + c[1]));
    let second = entropy([t.iter().map(|c| c[0]).sum::<f64>(), t.iter().map(|c| c[1]).sum::<f64>()]);
    Entropies { joint, first, second }
}

pub fn run_semicontinuity(m_grid: &[usize]) -> Result<SemicontinuityTable> {
    if m_grid.is_empty() {
        return Err(Error::field("m_grid", "must not be empty"));
    }
    if m_grid.windows(2).any(|w| w[1] <= w[0]) || m_grid[0] < 2 {
        return Err(Error::field("m_grid", "must be increasing integers >= 2"));
    }
    if let Some(&m) = m_grid.iter().find(|&&m| m > TABLE_CAP) {
        return Err(Error::field("m_grid", format!("{m} exceeds the table cap {TABLE_CAP}")));
    }
    let limit = mixture(0);
    let h_limit = entropies(&limit);
    let mut jump = Vec::new();
    let mut family = Vec::new();
    for &m in m_grid {
        let p_m = spike_family(m);
        let lim = spike_limit(m);
        jump.push(JumpRow {
            m,
            distance: p_m.distance(&lim),
            entropy: p_m.entropy(),
            limit_entropy: lim.entropy(),
        });

        let t = mixture(m);
        let h = entropies(&t);
        let distance = t
            .iter()
            .zip(&limit)
            .map(|(a, b)| (a[0] - b[0]).abs() + (a[1] - b[1]).abs())
            .sum();
        family.push(FamilyRow {
            m,
            distance,
            joint_gap: (h.joint - h_limit.joint).abs(),
            first_gap: (h.first - h_limit.first).abs(),
            second_gap: (h.second - h_limit.second).abs(),
            conditional_gap: ((h.joint - h.second) - (h_limit.joint - h_limit.second)).abs(),
        });
    }
    Ok(SemicontinuityTable { jump, family })
}

impl SemicontinuityTable {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>8} {:>12} {:>12} {:>12}", "m", "V", "H(P_m)", "H(limit)");
        for r in &self.jump {
            let _ = writeln!(out, "{:>8} {:>12.6} {:>12.6} {:>12.6}", r.m, r.distance, r.entropy, r.limit_entropy);
        }
        let _ = writeln!(
            out,
            "{:>8} {:>12} {:>12} {:>12} {:>12} {:>12}",
            "m", "V(AB)", "dH(AB)", "dH(A)", "dH(B)", "dH(A|B)"
        );
        for r in &self.family {
            let _ = writeln!(
                out,
                "{:>8} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
                r.m, r.distance, r.joint_gap, r.first_gap, r.second_gap, r.conditional_gap
            );
        }
        out
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["m", "distance", "entropy", "limit_entropy", "joint_distance", "joint_gap", "first_gap", "second_gap", "conditional_gap"])?;
        for (j, f) in self.jump.iter().zip(&self.family) {
            w.write_record([
                j.m.to_string(),
                j.distance.to_string(),
                j.entropy.to_string(),
                j.limit_entropy.to_string(),
                f.distance.to_string(),
                f.joint_gap.to_string(),
                f.first_gap.to_string(),
                f.second_gap.to_string(),
                f.conditional_gap.to_string(),
            ])?;
        }
        w.into_inner().map_err(|e| Error::Precondition(format!("csv buffer: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h_b(p: f64) -> f64 {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn spike_closed_forms() {
        let t = run_semicontinuity(&[2, 8, 1024]).unwrap();
        assert!((t.jump[0].entropy - 2.0).abs() < 1e-12);
        for r in &t.jump {
            let m = r.m as f64;
            assert!((r.distance - 2.0 / m).abs() < 1e-15);
            assert!((r.entropy - (h_b(1.0 / m) + 1.0)).abs() < 1e-12);
            assert_eq!(r.limit_entropy, 0.0);
        }
    }

    #[test]
    fn blocks_agree_with_atoms_when_small() {
        // m = 3: 1 + 8 atoms can be listed
        let m = 3;
        let atoms: Vec<f64> = std::iter::once(1.0 - 1.0 / 3.0).chain((0..8).map(|_| 1.0 / 3.0 / 8.0)).collect();
        assert!((spike_family(m).entropy() - entropy(atoms)).abs() < 1e-12);
    }

    #[test]
    fn family_gaps_shrink() {
        let t = run_semicontinuity(&[4, 64, 1024]).unwrap();
        let last = t.family.last().unwrap();
        assert!(last.joint_gap < 0.01 && last.first_gap < 0.01 && last.second_gap < 0.01);
        assert!(t.family.windows(2).all(|w| w[1].distance < w[0].distance));
        let cells = mixture(7);
        let total: f64 = cells.iter().flat_map(|c| c.iter()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(run_semicontinuity(&[]).is_err());
        assert!(run_semicontinuity(&[8, 4]).is_err());
        assert!(run_semicontinuity(&[2, TABLE_CAP + 1]).is_err());
    }
}
