//! Seeded Monte Carlo harnesses.
//!
//! Trial `t` at the `i`-th grid size draws from stream
//! `i * trials + t` of the configured seed, so results do not depend on
//! how trials are scheduled over workers.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::conditional::{Conditioned, ConditionalSampler};
use super::config::{ExperimentConfig, ExperimentKind};
use super::stats::wilson;
use crate::alphabet::{Symbol, Vars};
use crate::empirical::{loglik_gap, loglik_gap_from_type, EmpiricalType, SequenceTriple};
use crate::error::{Error, Result};
use crate::measures::{conditional_entropy, conditional_kl_with};
use crate::model::{MarkovTriple, Pmf};
use crate::sampling::{RngStream, Sampler, TripleSampler};
use crate::typicality::{distance, projection_holds, unified_score, unified_score1, unified_score2, unified_score3};

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub variant: String,
    pub n: usize,
    pub gamma: f64,
    pub eta: f64,
    pub trial_id: u64,
    pub conditioning_accepted: bool,
    /// Meaningful only when `conditioning_accepted`.
    pub success: bool,
    pub score_total: f64,
    pub seed: u64,
    pub stream_id: u64,
    /// Second event for harnesses that track two (`lemma5`: the entropy event).
    pub secondary_success: Option<bool>,
    /// `(lhs, rhs)` of the deterministic `(Y, Z)` bound for accepted pairs.
    pub lemma4: Option<(f64, f64)>,
    /// Whether the projection property held on this trial's type.
    pub projection_ok: Option<bool>,
    /// `corollary1`: whether the full triple was jointly typical.
    pub joint_success: Option<bool>,
}

/// Aggregate of the trials at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub variant: String,
    pub n: usize,
    pub gamma: f64,
    pub eta: f64,
    pub trials: u64,
    pub accepted: u64,
    pub successes: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    /// No trial passed the conditioning step.
    pub flagged: bool,
}

impl SweepRow {
    fn from_counts(variant: &str, cfg: &ExperimentConfig, n: usize, accepted: u64, successes: u64) -> Self {
        let (ci_low, ci_high) = wilson(successes, accepted);
        SweepRow {
            variant: variant.to_string(),
            n,
            gamma: cfg.gamma,
            eta: cfg.eta,
            trials: cfg.trials,
            accepted,
            successes,
            rate: if accepted == 0 { 0.0 } else { successes as f64 / accepted as f64 },
            ci_low,
            ci_high,
            seed: cfg.seed,
            flagged: accepted == 0,
        }
    }
}

/// Cross-checks accumulated over all trials of a sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub projection_checked: u64,
    pub projection_violations: u64,
    pub lemma4_checked: u64,
    pub lemma4_violations: u64,
    /// Largest `lhs / rhs` seen.
    pub lemma4_max_ratio: f64,
    pub joint_successes: u64,
    pub coupling_violations: u64,
    /// Trials where exact conditioning was unavailable and a single
    /// unconditioned draw was used instead.
    pub fallback_draws: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
    pub diagnostics: Diagnostics,
}

impl SweepResult {
    pub fn flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }

    pub fn rows_for(&self, variant: &str) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.variant == variant).collect()
    }

    /// Rates do not drop significantly along the grid: each row's upper
    /// Wilson bound reaches the previous row's lower bound.
    pub fn nondecreasing(&self, variant: &str) -> bool {
        self.rows_for(variant).windows(2).all(|w| w[1].ci_high >= w[0].ci_low)
    }

    pub fn merge(parts: Vec<SweepResult>) -> SweepResult {
        let mut rows = Vec::new();
        let mut records = Vec::new();
        let mut d = Diagnostics::default();
        for p in parts {
            rows.extend(p.rows);
            records.extend(p.records);
            let q = p.diagnostics;
            d.projection_checked += q.projection_checked;
            d.projection_violations += q.projection_violations;
            d.lemma4_checked += q.lemma4_checked;
            d.lemma4_violations += q.lemma4_violations;
            d.lemma4_max_ratio = d.lemma4_max_ratio.max(q.lemma4_max_ratio);
            d.joint_successes += q.joint_successes;
            d.coupling_violations += q.coupling_violations;
            d.fallback_draws += q.fallback_draws;
        }
        sort_rows(&mut rows);
        SweepResult {
            rows,
            records,
            diagnostics: d,
        }
    }
}

fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| a.variant.cmp(&b.variant).then(a.n.cmp(&b.n)));
}

/// `lhs = |sum_yz (q(yz) - p(yz)) H(P_{X|Y=y})|` and
/// `rhs = (0.5 + C) sqrt(2 eta ln 2)` for a pair in the `(Y, Z)` set.
pub fn check_lemma4(y: &[Symbol], z: &[Symbol], model: &MarkovTriple, eta: f64) -> Result<(f64, f64)> {
    if y.len() != z.len() || y.is_empty() {
        return Err(Error::LengthMismatch(format!("y has {}, z has {} symbols", y.len(), z.len())));
    }
    let q = EmpiricalType::from_pair(y, z);
    let score = unified_score2(&q, model.side()).total;
    if score > eta {
        return Err(Error::Precondition(format!(
            "(y, z) scores {score} against the side law, above eta = {eta}"
        )));
    }
    Ok(lemma4_terms(&q, model, eta))
}

fn lemma4_terms(q: &EmpiricalType, model: &MarkovTriple, eta: f64) -> (f64, f64) {
    let n = q.n() as f64;
    let mut acc = crate::sum::CompensatedSum::new();
    for (a, c) in q.counts(Vars::YZ) {
        acc.add(*c as f64 / n * model.row_entropy(a[1]));
    }
    for (y, _, p) in model.side().entries() {
        acc.add(-p * model.row_entropy(y));
    }
    let lhs = acc.value().abs();
    let rhs = (0.5 + model.log_moment_bound()) * (2.0 * eta * std::f64::consts::LN_2).sqrt();
    (lhs, rhs)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    model: &'a MarkovTriple,
    samplers: TripleSampler,
    z_pmf: Pmf,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        let model = cfg.model()?;
        let (support, probs): (Vec<_>, Vec<_>) = model.z_marginal().iter().map(|(k, v)| (*k, *v)).unzip();
        let total: f64 = crate::sum::sum(probs.iter().copied());
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        Ok(Ctx {
            cfg,
            model,
            samplers: TripleSampler::new(model)?,
            z_pmf: Pmf::explicit(&support, &probs)?,
        })
    }

    fn record(&self, variant: &str, n: usize, trial: u64, stream: u64) -> TrialRecord {
        TrialRecord {
            variant: variant.to_string(),
            n,
            gamma: self.cfg.gamma,
            eta: self.cfg.eta,
            trial_id: trial,
            conditioning_accepted: false,
            success: false,
            score_total: f64::NAN,
            seed: self.cfg.seed,
            stream_id: stream,
            secondary_success: None,
            lemma4: None,
            projection_ok: None,
            joint_success: None,
        }
    }

    /// Draw `(y, z)` from the side law and test it against `eta`; on
    /// acceptance draw `X` given `y`.
    fn conditioned_triple(&self, n: usize, rec: &mut TrialRecord) -> Result<Option<(SequenceTriple, EmpiricalType)>> {
        let mut rng = RngStream::new(self.cfg.seed, rec.stream_id).rng();
        let (y, z) = self.samplers.side.sample_n(n, &mut rng);
        let qyz = EmpiricalType::from_pair(&y, &z);
        if unified_score2(&qyz, self.model.side()).total > self.cfg.eta {
            return Ok(None);
        }
        rec.conditioning_accepted = true;
        rec.lemma4 = Some(lemma4_terms(&qyz, self.model, self.cfg.eta));
        let x = self.samplers.kernel.sample_given(&y, &mut rng)?;
        let seqs = SequenceTriple::new(x, y, z)?;
        let q = EmpiricalType::from_sequences(&seqs);
        Ok(Some((seqs, q)))
    }

    fn theorem1(&self, n: usize, rec: &mut TrialRecord) -> Result<()> {
        if let Some((_, q)) = self.conditioned_triple(n, rec)? {
            let total = unified_score3(&q, self.model).total;
            rec.score_total = total;
            rec.success = total <= self.cfg.gamma;
            rec.projection_ok = Some(projection_holds(&q, self.model, self.cfg.gamma));
        }
        Ok(())
    }

    fn lemma2(&self, n: usize, rec: &mut TrialRecord) -> Result<()> {
        if let Some((_, q)) = self.conditioned_triple(n, rec)? {
            let v = distance(&q, self.model, Vars::XYZ);
            rec.score_total = v;
            rec.success = v <= self.cfg.gamma;
        }
        Ok(())
    }

    fn lemma5(&self, n: usize, rec: &mut TrialRecord) -> Result<()> {
        if let Some((_, q)) = self.conditioned_triple(n, rec)? {
            let joint = q.probs(Vars::XYZ);
            let kernel = self.model.kernel();
            let d = conditional_kl_with(&joint, Vars::YZ, |a| kernel.mass(a[0], a[1]));
            let dh = (conditional_entropy(&joint, Vars::YZ) - self.model.conditional_entropy_x()).abs();
            rec.score_total = d;
            rec.success = d <= self.cfg.gamma;
            rec.secondary_success = Some(dh <= self.cfg.gamma);
        }
        Ok(())
    }

    /// Even trials draw `(y, z)` from the side law; odd trials use constant
    /// sequences at a support point. Success means the two evaluations of the
    /// log-likelihood gap agree within `1e-9`.
    fn lemma3(&self, n: usize, rec: &mut TrialRecord) -> Result<()> {
        let mut rng = RngStream::new(self.cfg.seed, rec.stream_id).rng();
        let (y, z) = if rec.trial_id % 2 == 0 {
            self.samplers.side.sample_n(n, &mut rng)
        } else {
            let (a, b) = self.samplers.side.sample(&mut rng);
            (vec![a; n], vec![b; n])
        };
        let x = self.samplers.kernel.sample_given(&y, &mut rng)?;
        let seqs = SequenceTriple::new(x, y, z)?;
        let direct = loglik_gap(&seqs, self.model);
        let via_type = loglik_gap_from_type(&EmpiricalType::from_sequences(&seqs), self.model);
        rec.conditioning_accepted = true;
        rec.score_total = direct.gap;
        rec.success = (direct.gap - via_type.gap).abs() <= 1e-9;
        Ok(())
    }

    fn corollary1(&self, n: usize, rec: &mut TrialRecord, y_prior: &Sampler, fallbacks: &mut u64) -> Result<()> {
        let mut rng = RngStream::new(self.cfg.seed, rec.stream_id).rng();
        let z = self.samplers.z.sample_n(n, &mut rng);
        let qz = EmpiricalType::from_single(Vars::Z, &z);
        if unified_score1(&qz, &self.z_pmf, Vars::Z).total > self.cfg.eta {
            return Ok(());
        }
        let conditional = ConditionalSampler::new(self.model, y_prior, self.cfg.eta);
        let y = match conditional.sample(&z, &mut rng) {
            Conditioned::Exact(y) => y,
            Conditioned::Infeasible => return Ok(()),
            Conditioned::Fallback(y, ok) => {
                *fallbacks += 1;
                if !ok {
                    return Ok(());
                }
                y
            }
        };
        rec.conditioning_accepted = true;
        let x = self.samplers.kernel.sample_given(&y, &mut rng)?;
        let seqs = SequenceTriple::new(x, y, z)?;
        let q = EmpiricalType::from_sequences(&seqs);
        let total = unified_score(&q, self.model, Vars::XZ).total;
        rec.score_total = total;
        rec.success = total <= self.cfg.gamma;
        rec.joint_success = Some(unified_score3(&q, self.model).total <= self.cfg.gamma);
        Ok(())
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))
}

fn run_trials(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<SweepResult> {
    cfg.validate()?;
    let ctx = Ctx::new(cfg)?;
    let y_prior = Sampler::from_weights(ctx.model.y_marginal())?;
    let jobs: Vec<(usize, usize, u64)> = cfg
        .n_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| (0..cfg.trials).map(move |t| (i, n, t)))
        .collect();
    let outcomes: Vec<Result<(TrialRecord, u64)>> = pool(cfg.workers)?.install(|| {
        jobs.par_iter()
            .map(|&(i, n, t)| {
                let stream = i as u64 * cfg.trials + t;
                let mut rec = ctx.record(kind.name(), n, t, stream);
                let mut fallbacks = 0;
                match kind {
                    ExperimentKind::Theorem1 => ctx.theorem1(n, &mut rec)?,
                    ExperimentKind::Corollary1 => ctx.corollary1(n, &mut rec, &y_prior, &mut fallbacks)?,
                    ExperimentKind::Lemma2 => ctx.lemma2(n, &mut rec)?,
                    ExperimentKind::Lemma3 => ctx.lemma3(n, &mut rec)?,
                    ExperimentKind::Lemma5 => ctx.lemma5(n, &mut rec)?,
                    other => return Err(Error::Precondition(format!("{other} is not a trial harness"))),
                }
                Ok((rec, fallbacks))
            })
            .collect()
    });
    let mut records = Vec::with_capacity(outcomes.len());
    let mut diagnostics = Diagnostics::default();
    for o in outcomes {
        let (rec, fallbacks) = o?;
        diagnostics.fallback_draws += fallbacks;
        records.push(rec);
    }

    for r in &records {
        if let Some(ok) = r.projection_ok {
            diagnostics.projection_checked += 1;
            diagnostics.projection_violations += u64::from(!ok);
        }
        if let Some((lhs, rhs)) = r.lemma4 {
            diagnostics.lemma4_checked += 1;
            diagnostics.lemma4_violations += u64::from(lhs > rhs);
            if rhs > 0.0 {
                diagnostics.lemma4_max_ratio = diagnostics.lemma4_max_ratio.max(lhs / rhs);
            }
        }
        if let Some(joint) = r.joint_success {
            diagnostics.joint_successes += u64::from(joint);
            diagnostics.coupling_violations += u64::from(joint && !r.success);
        }
    }

    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let at_n = records.iter().filter(|r| r.n == n);
        let accepted = at_n.clone().filter(|r| r.conditioning_accepted).count() as u64;
        let successes = at_n.clone().filter(|r| r.conditioning_accepted && r.success).count() as u64;
        if kind == ExperimentKind::Lemma5 {
            let second = at_n.filter(|r| r.conditioning_accepted && r.secondary_success == Some(true)).count() as u64;
            rows.push(SweepRow::from_counts("lemma5_divergence", cfg, n, accepted, successes));
            rows.push(SweepRow::from_counts("lemma5_entropy", cfg, n, accepted, second));
        } else {
            rows.push(SweepRow::from_counts(kind.name(), cfg, n, accepted, successes));
        }
    }
    sort_rows(&mut rows);
    Ok(SweepResult {
        rows,
        records,
        diagnostics,
    })
}

/// Markov lemma: `(y, z)` drawn and filtered on the `(Y, Z)` set at `eta`,
/// `X ~ prod p(x_i | y_i)`, success when the triple is in the `(X, Y, Z)`
/// set at `gamma`.
pub fn run_theorem1(config: &ExperimentConfig) -> Result<SweepResult> {
    run_trials(config, ExperimentKind::Theorem1)
}

/// Conditional form: `z` filtered on the `Z` set, `Y` drawn from its
/// i.i.d. law conditioned on `(Y, z)` being in the `(Y, Z)` set, success
/// when `(X, z)` is in the `(X, Z)` set.
pub fn run_corollary1(config: &ExperimentConfig) -> Result<SweepResult> {
    run_trials(config, ExperimentKind::Corollary1)
}

/// Success when `V(Q_XYZ, P_XYZ) <= epsilon`, with `epsilon = gamma`.
pub fn run_lemma2(config: &ExperimentConfig) -> Result<SweepResult> {
    run_trials(config, ExperimentKind::Lemma2)
}

/// Success when both forms of the log-likelihood gap agree.
pub fn run_lemma3(config: &ExperimentConfig) -> Result<SweepResult> {
    run_trials(config, ExperimentKind::Lemma3)
}

/// Two rows per `n`: the conditional divergence event and the conditional
/// entropy event, both at `epsilon = gamma`.
pub fn run_lemma5(config: &ExperimentConfig) -> Result<SweepResult> {
    run_trials(config, ExperimentKind::Lemma5)
}

/// Run every trial harness named in `kinds` and merge their rows.
pub fn run_many(config: &ExperimentConfig, kinds: &[ExperimentKind]) -> Result<SweepResult> {
    let parts = kinds.iter().map(|&k| run_trials(config, k)).collect::<Result<Vec<_>>>()?;
    Ok(SweepResult::merge(parts))
}

pub const CSV_HEADER: [&str; 11] = [
    "variant", "n", "gamma", "eta", "trials", "accepted", "successes", "rate", "ci_low", "ci_high", "seed",
];

/// Write the sweep rows as CSV, sorted by `(variant, n)`.
///
/// Nothing is created when `results` has no rows.
pub fn write_sweep_csv(results: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if results.rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    let bytes = sweep_csv_bytes(results)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn sweep_csv_bytes(results: &SweepResult) -> Result<Vec<u8>> {
    let mut rows: Vec<&SweepRow> = results.rows.iter().collect();
    rows.sort_by(|a, b| a.variant.cmp(&b.variant).then(a.n.cmp(&b.n)));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.variant.clone(),
            r.n.to_string(),
            r.gamma.to_string(),
            r.eta.to_string(),
            r.trials.to_string(),
            r.accepted.to_string(),
            r.successes.to_string(),
            r.rate.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Precondition(format!("csv buffer: {e}")))
}

/// Aligned human-readable summary.
pub fn summary_table(results: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<18} {:>7} {:>7} {:>9} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "variant", "n", "gamma", "eta", "accepted", "success", "rate", "ci_low", "ci_high"
    );
    for r in &results.rows {
        let _ = writeln!(
            out,
            "{:<18} {:>7} {:>7.4} {:>9.6} {:>8} {:>8} {:>8.4} {:>8.4} {:>8.4}{}",
            r.variant,
            r.n,
            r.gamma,
            r.eta,
            r.accepted,
            r.successes,
            r.rate,
            r.ci_low,
            r.ci_high,
            if r.flagged { "  FLAGGED: nothing accepted" } else { "" }
        );
    }
    let d = &results.diagnostics;
    if d.projection_checked > 0 {
        let _ = writeln!(out, "projection: {} violations in {} trials", d.projection_violations, d.projection_checked);
    }
    if d.lemma4_checked > 0 {
        let _ = writeln!(
            out,
            "(Y,Z) entropy bound: {} violations in {} accepted pairs, max lhs/rhs {:.4}",
            d.lemma4_violations, d.lemma4_checked, d.lemma4_max_ratio
        );
    }
    if d.joint_successes > 0 || d.coupling_violations > 0 {
        let _ = writeln!(
            out,
            "coupling: {} jointly typical triples, {} without marginal success",
            d.joint_successes, d.coupling_violations
        );
    }
    if d.fallback_draws > 0 {
        let _ = writeln!(out, "conditioning fell back to single draws {} times", d.fallback_draws);
    }
    out
}
