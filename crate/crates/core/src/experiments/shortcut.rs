//! Seeded perturbation paths around a finite law, comparing the two-term
//! score with the full eight-term score.

use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{JointTable, MarkovTriple};
use crate::sampling::RngStream;
use crate::typicality::{two_term_score, unified_score3};
use crate::Vars;

/// Shape of the perturbation family.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortcutConfig {
    pub seed: u64,
    /// Number of random mixing directions.
    pub directions: u64,
    /// Log-spaced mixing weights per direction, from `1e-6` to `1`.
    pub steps: usize,
    pub t_grid: Vec<f64>,
}

impl Default for ShortcutConfig {
    fn default() -> Self {
        ShortcutConfig {
            seed: 7,
            directions: 64,
            steps: 240,
            t_grid: vec![0.1, 0.05, 0.01],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShortcutRow {
    pub t: f64,
    /// Members of the family with two-term score `<= t`.
    pub members: usize,
    pub max_eight_term: f64,
    pub max_two_term: f64,
}

/// For direction `k`, `R_k` is a flat-Dirichlet draw on the support of `P`
/// (stream `k`); the family is `Q = (1 - d) P + d R_k` over the weight grid.
/// Each row reports the largest eight-term score among members whose
/// two-term score is at most `t`.
pub fn run_shortcut(model: &MarkovTriple, cfg: &ShortcutConfig) -> Result<Vec<ShortcutRow>> {
    if cfg.t_grid.is_empty() || cfg.t_grid.iter().any(|t| t.is_nan() || *t <= 0.0) {
        return Err(Error::field("t_grid", "must hold positive thresholds"));
    }
    if cfg.directions == 0 || cfg.steps < 2 {
        return Err(Error::field("directions", "need at least one direction and two steps"));
    }
    let joint = model.induced_joint()?;
    if joint.residual > 0.0 {
        return Err(Error::Precondition("the shortcut family needs a finite reference law".into()));
    }
    let atoms: Vec<_> = joint.table.iter().filter(|(_, p)| **p > 0.0).map(|(a, p)| (*a, *p)).collect();

    let mut points: Vec<(f64, f64)> = Vec::new();
    for k in 0..cfg.directions {
        let mut rng = RngStream::new(cfg.seed, k).rng();
        let raw: Vec<f64> = atoms.iter().map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let total: f64 = raw.iter().sum();
        for s in 0..cfg.steps {
            let d = 10f64.powf(-6.0 + 6.0 * s as f64 / (cfg.steps - 1) as f64);
            let q = JointTable::from_weights(
                Vars::XYZ,
                atoms.iter().zip(&raw).map(|((a, p), r)| (*a, (1.0 - d) * p + d * r / total)),
            )?;
            points.push((two_term_score(&q, model), unified_score3(&q, model).total));
        }
    }

    let mut rows: Vec<ShortcutRow> = cfg
        .t_grid
        .iter()
        .map(|&t| {
            let members: Vec<&(f64, f64)> = points.iter().filter(|(two, _)| *two <= t).collect();
            ShortcutRow {
                t,
                members: members.len(),
                max_eight_term: members.iter().map(|p| p.1).fold(0.0, f64::max),
                max_two_term: members.iter().map(|p| p.0).fold(0.0, f64::max),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.t.total_cmp(&a.t));
    Ok(rows)
}

pub fn shortcut_table(rows: &[ShortcutRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>8} {:>8} {:>14} {:>14}", "t", "members", "max two-term", "max eight-term");
    for r in rows {
        let _ = writeln!(out, "{:>8} {:>8} {:>14.6} {:>14.6}", r.t, r.members, r.max_two_term, r.max_eight_term);
    }
    out
}

pub fn shortcut_csv(rows: &[ShortcutRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "members", "max_two_term", "max_eight_term"])?;
    for r in rows {
        w.write_record([r.t.to_string(), r.members.to_string(), r.max_two_term.to_string(), r.max_eight_term.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::Precondition(format!("csv buffer: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::fixtures;

    #[test]
    fn scores_shrink_with_threshold() {
        let cfg = ShortcutConfig {
            directions: 8,
            steps: 60,
            ..ShortcutConfig::default()
        };
        let rows = run_shortcut(&fixtures::bsc_chain().unwrap(), &cfg).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!(r.members > 0);
            assert!(r.max_two_term <= r.t);
            assert!(r.max_eight_term >= r.max_two_term);
        }
        assert!(rows.windows(2).all(|w| w[1].max_eight_term <= w[0].max_eight_term));
    }

    #[test]
    fn infinite_models_are_rejected() {
        let cfg = ShortcutConfig::default();
        assert!(run_shortcut(&fixtures::geometric_chain().unwrap(), &cfg).is_err());
    }
}
