//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line to
//! stderr (uncaptured) before asserting.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use typlab::empirical::{loglik_gap, loglik_gap_from_type, EmpiricalType, SequenceTriple};
use typlab::experiments::{
    self, fixtures, run_semicontinuity, run_shortcut, sweep_csv_bytes, EtaSpec, ExperimentConfig, ExperimentKind,
    ShortcutConfig, SweepResult,
};
use typlab::measures::{conditional_entropy, conditional_kl, entropy_table, kl_divergence, marginal, pinsker_gap_dense, Table};
use typlab::model::{JointPmf2, Kernel, MarkovTriple, Pmf};
use typlab::sampling::{KernelSampler, RngStream, TripleSampler};
use typlab::typicality::projection_holds;
use typlab::{Atom, Vars};

const GRID: [usize; 3] = [100, 1000, 10000];

fn report(criterion: u32, pass: bool, detail: String) {
    let line = format!("criterion {criterion}: {} — {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn sweep(model: MarkovTriple, kind: ExperimentKind, gamma: f64, eta: EtaSpec) -> SweepResult {
    let cfg = ExperimentConfig::new(model, kind, GRID.to_vec(), gamma, eta)
        .unwrap()
        .with_trials(1000)
        .unwrap()
        .with_seed(7)
        .with_workers(workers());
    match experiments::run(&cfg).unwrap() {
        experiments::Outcome::Sweep(s) => s,
        other => panic!("unexpected outcome {other:?}"),
    }
}

fn random_pmf(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

#[test]
fn criterion_01_pinsker() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = 0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..100_000 {
        let k = rng.random_range(2..=50);
        let q: Vec<f64> = {
            // some exact zeros in q exercise the 0 log 0 convention
            let mut w: Vec<f64> = (0..k).map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random() }).collect();
            w[0] += 1e-3;
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            w
        };
        let p = random_pmf(&mut rng, k);
        let g = pinsker_gap_dense(&q, &p);
        min_gap = min_gap.min(g);
        if g.is_nan() || g < 0.0 {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        violations == 0 && elapsed < Duration::from_secs(10),
        format!("{violations} violations in 1e5 pairs, min gap {min_gap:.3e}, {elapsed:.2?}"),
    );
}

/// Dense `[x][y][z]` arrays of side 8 or less.
fn dense_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum()
}

#[test]
fn criterion_02_chain_rules() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let (kx, ky, kz) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=8));
        let q = random_pmf(&mut rng, kx * ky * kz);
        // P is Markov: p(x|y) p(yz)
        let side = random_pmf(&mut rng, ky * kz);
        let rows: Vec<Vec<f64>> = (0..ky).map(|_| random_pmf(&mut rng, kx)).collect();
        let mut qt: Table<Atom> = Table::new();
        let mut pt: Table<Atom> = Table::new();
        let mut q_yz = vec![0.0; ky * kz];
        let mut p_dense = Vec::with_capacity(kx * ky * kz);
        for x in 0..kx {
            for y in 0..ky {
                for z in 0..kz {
                    let qv = q[(x * ky + y) * kz + z];
                    let pv = rows[y][x] * side[y * kz + z];
                    qt.insert([x as u64, y as u64, z as u64], qv);
                    pt.insert([x as u64, y as u64, z as u64], pv);
                    q_yz[y * kz + z] += qv;
                    p_dense.push(pv);
                }
            }
        }
        let h_xyz = entropy_table(&qt);
        let h_yz = entropy_table(&marginal(&qt, Vars::YZ));
        let h_x_given_yz = conditional_entropy(&qt, Vars::YZ);
        // independent oracle for H(Q_{X|YZ}) = -sum q(xyz) log2(q(xyz)/q(yz))
        let mut oracle = 0.0;
        for x in 0..kx {
            for yz in 0..ky * kz {
                let v = q[x * ky * kz + yz];
                if v > 0.0 {
                    oracle -= v * (v / q_yz[yz]).log2();
                }
            }
        }
        worst = worst.max((h_xyz - dense_entropy(&q)).abs());
        worst = worst.max((h_x_given_yz - oracle).abs());
        worst = worst.max((h_xyz - (h_yz + h_x_given_yz)).abs());

        let p_h_xyz = entropy_table(&pt);
        let p_h_yz = entropy_table(&marginal(&pt, Vars::YZ));
        let p_h_x_given_yz = conditional_entropy(&pt, Vars::YZ);
        let p_h_x_given_y = conditional_entropy(&marginal(&pt, Vars::XY), Vars::Y);
        worst = worst.max((p_h_xyz - dense_entropy(&p_dense)).abs());
        // difference form of the entropy chain, and Markov: H(X|YZ) = H(X|Y)
        worst = worst.max(((h_xyz - p_h_xyz) - ((h_yz - p_h_yz) + (h_x_given_yz - p_h_x_given_yz))).abs());
        worst = worst.max((p_h_x_given_yz - p_h_x_given_y).abs());

        let d_xyz = kl_divergence(&qt, &pt);
        let d_yz = kl_divergence(&marginal(&qt, Vars::YZ), &marginal(&pt, Vars::YZ));
        let d_cond = conditional_kl(&qt, &pt, Vars::YZ);
        let d_oracle: f64 = q
            .iter()
            .zip(&p_dense)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, b)| a * (a / b).log2())
            .sum();
        worst = worst.max((d_xyz - d_oracle).abs());
        worst = worst.max((d_xyz - (d_yz + d_cond)).abs());
    }
    let elapsed = start.elapsed();
    report(
        2,
        worst <= 1e-9 && elapsed < Duration::from_secs(10),
        format!("max identity residual {worst:.3e} over 1e4 joints, {elapsed:.2?}"),
    );
}

fn random_triple(rng: &mut ChaCha8Rng) -> MarkovTriple {
    let (ky, kz) = (rng.random_range(1..=4u64), rng.random_range(1..=4u64));
    let side = random_pmf(rng, (ky * kz) as usize);
    let side = JointPmf2::new((0..ky).flat_map(|y| (0..kz).map(move |z| (y, z))).zip(side).map(|((y, z), p)| (y, z, p)))
        .unwrap();
    let rows = (0..ky)
        .map(|y| {
            let row = if rng.random_bool(0.25) {
                Pmf::geometric(rng.random_range(0.2..0.9)).unwrap()
            } else {
                let kx = rng.random_range(1..=6usize);
                let support: Vec<u64> = (0..kx as u64).collect();
                Pmf::explicit(&support, &random_pmf(rng, kx)).unwrap()
            };
            (y, row)
        })
        .collect::<Vec<_>>();
    MarkovTriple::new(side, Kernel::new(rows)).unwrap()
}

#[test]
fn criterion_03_loglik_gap_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut mismatched_inf = 0;
    for i in 0..10_000u64 {
        let triple = random_triple(&mut rng);
        let n = 10f64.powf(rng.random_range(0.0..=4.0)).round() as usize;
        let mut draw = RngStream::new(3, i).rng();
        let seqs = if i % 2 == 0 {
            TripleSampler::new(&triple).unwrap().sample(n, &mut draw).unwrap()
        } else {
            // arbitrary (y, z), X drawn from the kernel
            let ys: Vec<u64> = triple.y_marginal().keys().copied().collect();
            let y: Vec<u64> = (0..n).map(|_| ys[draw.random_range(0..ys.len())]).collect();
            let z: Vec<u64> = (0..n).map(|_| draw.random_range(0..6)).collect();
            let x = KernelSampler::new(triple.kernel()).unwrap().sample_given(&y, &mut draw).unwrap();
            SequenceTriple::new(x, y, z).unwrap()
        };
        let a = loglik_gap(&seqs, &triple);
        let b = loglik_gap_from_type(&EmpiricalType::from_sequences(&seqs), &triple);
        if a.gap.is_finite() != b.gap.is_finite() {
            mismatched_inf += 1;
        } else if a.gap.is_finite() {
            worst = worst.max((a.gap - b.gap).abs());
        }
    }
    report(
        3,
        worst <= 1e-9 && mismatched_inf == 0,
        format!("max |index form - type form| {worst:.3e} over 1e4 pairs, {:.2?}", start.elapsed()),
    );
}

#[test]
fn criterion_04_consistency_exhaustive() {
    let start = Instant::now();
    let models = [fixtures::bsc_chain().unwrap(), fixtures::skewed_chain().unwrap()];
    let gammas = [0.1, 0.5, 1.0];
    let mut checked = 0u64;
    let mut violations = 0u64;
    for n in 1..=6u32 {
        for code in 0..8u64.pow(n) {
            let (mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new());
            let mut c = code;
            for _ in 0..n {
                x.push(c & 1);
                y.push((c >> 1) & 1);
                z.push((c >> 2) & 1);
                c >>= 3;
            }
            let q = EmpiricalType::from_sequences(&SequenceTriple::new(x, y, z).unwrap());
            for m in &models {
                for &g in &gammas {
                    checked += 1;
                    if !projection_holds(&q, m, g) {
                        violations += 1;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        4,
        violations == 0 && elapsed < Duration::from_secs(60),
        format!("{violations} violations in {checked} checks, {elapsed:.2?}"),
    );
}

struct TheoremRuns {
    bsc: SweepResult,
    geometric: SweepResult,
    elapsed: Duration,
}

fn theorem_runs() -> &'static TheoremRuns {
    static RUNS: OnceLock<TheoremRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let start = Instant::now();
        let bsc = sweep(fixtures::bsc_chain().unwrap(), ExperimentKind::Theorem1, 0.25, EtaSpec::Value(0.05));
        let geometric = sweep(fixtures::geometric_chain().unwrap(), ExperimentKind::Theorem1, 0.25, EtaSpec::Value(0.05));
        TheoremRuns {
            bsc,
            geometric,
            elapsed: start.elapsed(),
        }
    })
}

#[test]
fn criterion_05_markov_lemma_trend() {
    let runs = theorem_runs();
    let rows = runs.bsc.rows_for("theorem1");
    let geo = runs.geometric.rows_for("theorem1");
    let trend = runs.bsc.nondecreasing("theorem1");
    let low = rows[2].ci_low;
    let geo_up = geo[2].rate > geo[0].rate;
    let rates = |r: &[&typlab::experiments::SweepRow]| r.iter().map(|r| format!("{:.3}", r.rate)).collect::<Vec<_>>().join("/");
    report(
        5,
        trend && low >= 0.75 && geo_up && runs.elapsed < Duration::from_secs(300),
        format!(
            "bsc rates {} (Wilson low at 1e4 {low:.4}, ordered {trend}); geometric rates {} (accepted {}); {:.1?}",
            rates(&rows),
            rates(&geo),
            geo.iter().map(|r| r.accepted.to_string()).collect::<Vec<_>>().join("/"),
            runs.elapsed
        ),
    );
}

#[test]
fn criterion_06_conditional_trend() {
    let r = sweep(fixtures::bsc_chain().unwrap(), ExperimentKind::Corollary1, 0.25, EtaSpec::Value(0.05));
    let rows = r.rows_for("corollary1");
    let low = rows[2].ci_low;
    let coupling = r.diagnostics.coupling_violations;
    report(
        6,
        low >= 0.75 && coupling == 0,
        format!(
            "rates {:.3}/{:.3}/{:.3}, Wilson low at 1e4 {low:.4}, coupling violations {coupling}, fallback draws {}",
            rows[0].rate, rows[1].rate, rows[2].rate, r.diagnostics.fallback_draws
        ),
    );
}

#[test]
fn criterion_07_lemma_rates() {
    let model = fixtures::bsc_chain().unwrap();
    let l2 = sweep(model.clone(), ExperimentKind::Lemma2, 0.25, EtaSpec::Pinsker32);
    let l5 = sweep(model, ExperimentKind::Lemma5, 0.25, EtaSpec::Pinsker32);
    let r = SweepResult::merge(vec![l2, l5]);
    let mut pass = true;
    let mut detail = Vec::new();
    for name in ["lemma2", "lemma5_divergence", "lemma5_entropy"] {
        let last = *r.rows_for(name).last().unwrap();
        pass &= last.ci_low >= 0.75;
        detail.push(format!("{name} {:.4} (low {:.4}, {} accepted)", last.rate, last.ci_low, last.accepted));
    }
    report(7, pass, format!("at n=1e4: {}", detail.join(", ")));
}

#[test]
fn criterion_08_entropy_bound() {
    let runs = theorem_runs();
    let mut checked = 0;
    let mut violations = 0;
    let mut ratio: f64 = 0.0;
    for r in [&runs.bsc, &runs.geometric] {
        checked += r.diagnostics.lemma4_checked;
        violations += r.diagnostics.lemma4_violations;
        ratio = ratio.max(r.diagnostics.lemma4_max_ratio);
    }
    let mut row_violations = Vec::new();
    for name in fixtures::NAMES {
        let t = fixtures::by_name(name).unwrap().unwrap();
        let c = t.log_moment_bound();
        for (y, _) in t.kernel().rows() {
            if t.row_entropy(y) > 0.5 + c {
                row_violations.push(format!("{name}:y={y}"));
            }
        }
    }
    report(
        8,
        checked > 0 && violations == 0 && row_violations.is_empty(),
        format!(
            "{violations} violations in {checked} accepted pairs (max lhs/rhs {ratio:.4}); kernel rows over 0.5 + C: {row_violations:?}"
        ),
    );
}

#[test]
fn criterion_09_two_term_shortcut() {
    let cfg = ShortcutConfig::default();
    let rows = run_shortcut(&fixtures::bsc_chain().unwrap(), &cfg).unwrap();
    let by_t: BTreeMap<String, _> = rows.iter().map(|r| (format!("{}", r.t), r)).collect();
    let (a, b, c) = (by_t["0.1"], by_t["0.05"], by_t["0.01"]);
    let monotone = a.max_eight_term >= b.max_eight_term && b.max_eight_term >= c.max_eight_term;
    let bounded = c.max_eight_term <= 10.0 * c.t;
    let members = rows.iter().all(|r| r.members > 0 && r.max_two_term <= r.t);
    report(
        9,
        monotone && bounded && members,
        format!(
            "max eight-term {:.4}/{:.4}/{:.4} at t=0.1/0.05/0.01 (seed {}, {} directions)",
            a.max_eight_term, b.max_eight_term, c.max_eight_term, cfg.seed, cfg.directions
        ),
    );
}

#[test]
fn criterion_10_semicontinuity() {
    let grid = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];
    let t = run_semicontinuity(&grid).unwrap();
    let first = &t.jump[0];
    let last = t.jump.last().unwrap();
    let fam = t.family.last().unwrap();
    let h2 = (first.entropy - 2.0).abs() <= 1e-9;
    let jump = last.distance <= 0.002 && last.entropy >= 0.99;
    let converge = fam.first_gap < 0.01 && fam.second_gap < 0.01;
    report(
        10,
        h2 && jump && converge,
        format!(
            "H(P_2)={:.12}; m=1024: V={:.5}, H={:.4}; family marginal gaps {:.2e}/{:.2e} (joint {:.3})",
            first.entropy, last.distance, last.entropy, fam.first_gap, fam.second_gap, fam.joint_gap
        ),
    );
}

#[test]
fn criterion_11_worker_invariance() {
    let model = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bsc.json");
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str| {
        let out = dir.path().join(format!("r{workers}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_typlab"))
            .args(["markov-lemma", "--model"])
            .arg(&model)
            .args(["--gamma", "0.25", "--eta", "0.05", "--n", "100,1000,10000", "--trials", "1000", "--seed", "7"])
            .arg("--out")
            .arg(&out)
            .env("TYPLAB_WORKERS", workers)
            .output()
            .unwrap();
        assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(out).unwrap()
    };
    let one = run("1");
    let four = run("4");
    let library = sweep_csv_bytes(&theorem_runs().bsc).unwrap();
    report(
        11,
        one == four && one == library,
        format!("{} CSV bytes; workers 1 vs 4 identical: {}; matches library run: {}", one.len(), one == four, one == library),
    );
}
