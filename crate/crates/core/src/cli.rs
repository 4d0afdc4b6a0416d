//! The `typlab` command line.
//!
//! Machine-readable JSON goes to stdout, an aligned table to stderr. Exit
//! codes: 0 on success, 1 on any error, 2 when a sweep has a grid point
//! where no trial passed the conditioning step.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::alphabet::Vars;
use crate::empirical::{EmpiricalType, SequenceTriple};
use crate::error::{Error, Result};
use crate::experiments::{
    self, run_semicontinuity, run_shortcut, shortcut_csv, shortcut_table, summary_table, sweep_csv_bytes, EtaSpec,
    ExperimentConfig, ExperimentKind, Outcome, ShortcutConfig, SweepResult,
};
use crate::measures::{self, pinsker_gap_from};
use crate::model::{parse_pmf, parse_triple, MarkovTriple, Pmf};
use crate::typicality::{is_typical, Variant};

/// Environment variable capping the worker count.
pub const WORKERS_ENV: &str = "TYPLAB_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "typlab", version, about = "Unified typicality over countable alphabets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropy and log-moment of a pmf or triple; with two pmfs also D, V and the Pinsker gap.
    Measure {
        /// Distribution file; pass twice to compare `q` (first) against `p` (second).
        #[arg(long, required = true, num_args = 1)]
        model: Vec<PathBuf>,
    },
    /// Score sequences against a Markov triple.
    Typical {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        gamma: f64,
        /// unified3, unified2, unified1, two_term or weak.
        #[arg(long, default_value = "unified3")]
        variant: Variant,
    },
    /// Monte Carlo check of the Markov lemma.
    MarkovLemma(SweepArgs),
    /// Monte Carlo check of the conditional form of the Markov lemma.
    Corollary(SweepArgs),
    /// The supporting lemma harnesses and the two-term shortcut.
    Lemmas {
        #[command(flatten)]
        sweep: SweepArgs,
        /// lemma2, lemma3, lemma5, shortcut or all (lemma2, lemma3 and lemma5).
        #[arg(long, default_value = "all")]
        variant: String,
    },
    /// Entropy jump and marginal-entropy convergence families.
    Semicontinuity {
        /// Increasing `m` grid.
        #[arg(long, value_delimiter = ',', default_value = "2,8,64,1024")]
        n: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment described by a JSON configuration.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the configuration's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configuration's trial count.
        #[arg(long)]
        trials: Option<u64>,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    model: PathBuf,
    /// `gamma`, or `epsilon` for the lemma harnesses.
    #[arg(long, default_value_t = 0.25)]
    gamma: f64,
    /// A number or one of half, pinsker32, lemma4; defaults depend on the harness.
    #[arg(long)]
    eta: Option<EtaSpec>,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Worker count from [`WORKERS_ENV`], or the available parallelism.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::field(WORKERS_ENV, format!("must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_triple_named(path: &Path) -> Result<MarkovTriple> {
    parse_triple(&read(path)?).map_err(|e| with_path(path, e))
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Io { .. } => e,
        other => Error::field(path.display().to_string(), other.to_string()),
    }
}

fn emit(stdout: &mut dyn Write, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(stdout, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn note(stderr: &mut dyn Write, text: &str) {
    let _ = write!(stderr, "{text}");
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Measure { model } => {
            if model.len() > 2 {
                return Err(Error::field("--model", "pass one or two distribution files"));
            }
            let value = measure(&model)?;
            emit(stdout, &value)?;
            Ok(0)
        }
        Command::Typical {
            model,
            seq,
            gamma,
            variant,
        } => {
            if gamma.is_nan() || gamma <= 0.0 {
                return Err(Error::field("--gamma", "must be positive"));
            }
            let triple = load_triple_named(&model)?;
            let seqs = SequenceTriple::load(&seq)?;
            let q = EmpiricalType::from_sequences(&seqs);
            let report = is_typical(&q, &triple, gamma, variant);
            emit(stdout, &report.to_json())?;
            note(
                stderr,
                &format!(
                    "{} score {:.6} vs threshold {} -> {}\n",
                    report.variant,
                    report.total,
                    gamma,
                    if report.member == Some(true) { "member" } else { "not a member" }
                ),
            );
            Ok(0)
        }
        Command::MarkovLemma(args) => run_sweep(&args, &[ExperimentKind::Theorem1], stdout, stderr),
        Command::Corollary(args) => run_sweep(&args, &[ExperimentKind::Corollary1], stdout, stderr),
        Command::Lemmas { sweep, variant } => {
            let kinds: Vec<ExperimentKind> = match variant.as_str() {
                "all" => vec![ExperimentKind::Lemma2, ExperimentKind::Lemma3, ExperimentKind::Lemma5],
                "shortcut" => {
                    let triple = load_triple_named(&sweep.model)?;
                    let cfg = ShortcutConfig {
                        seed: sweep.seed,
                        t_grid: vec![sweep.gamma, sweep.gamma / 2.0, sweep.gamma / 10.0],
                        ..ShortcutConfig::default()
                    };
                    let rows = run_shortcut(&triple, &cfg)?;
                    return report_shortcut(&rows, sweep.out.as_deref(), stdout, stderr);
                }
                other => match other.parse::<ExperimentKind>() {
                    Ok(k @ (ExperimentKind::Lemma2 | ExperimentKind::Lemma3 | ExperimentKind::Lemma5)) => vec![k],
                    _ => {
                        return Err(Error::field(
                            "--variant",
                            format!("`{other}` is not one of lemma2, lemma3, lemma5, shortcut, all"),
                        ))
                    }
                },
            };
            run_sweep(&sweep, &kinds, stdout, stderr)
        }
        Command::Semicontinuity { n, out } => {
            let table = run_semicontinuity(&n)?;
            if let Some(path) = out {
                write_out(&path, &table.to_csv()?)?;
            }
            emit(stdout, &serde_json::to_value(&table)?)?;
            note(stderr, &table.to_table());
            Ok(0)
        }
        Command::Sweep {
            config,
            out,
            seed,
            trials,
        } => {
            let mut cfg = ExperimentConfig::load(&config).map_err(|e| with_path(&config, e))?;
            if let Some(s) = seed {
                cfg = cfg.with_seed(s);
            }
            if let Some(t) = trials {
                cfg = cfg.with_trials(t)?;
            }
            let cfg = cfg.with_workers(workers_from_env()?);
            match experiments::run(&cfg)? {
                Outcome::Sweep(result) => report_sweep(&result, out.as_deref(), stdout, stderr),
                Outcome::Shortcut(rows) => report_shortcut(&rows, out.as_deref(), stdout, stderr),
                Outcome::Semicontinuity(table) => {
                    if let Some(path) = out {
                        write_out(&path, &table.to_csv()?)?;
                    }
                    emit(stdout, &serde_json::to_value(&table)?)?;
                    note(stderr, &table.to_table());
                    Ok(0)
                }
            }
        }
    }
}

fn run_sweep(args: &SweepArgs, kinds: &[ExperimentKind], stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let triple = load_triple_named(&args.model)?;
    let workers = workers_from_env()?;
    let mut parts = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let eta = args.eta.unwrap_or_else(|| kind.default_eta());
        let cfg = ExperimentConfig::new(triple.clone(), kind, args.n.clone(), args.gamma, eta)?
            .with_trials(args.trials)?
            .with_seed(args.seed)
            .with_workers(workers);
        parts.push(experiments::run(&cfg).and_then(|o| match o {
            Outcome::Sweep(s) => Ok(s),
            _ => Err(Error::Precondition(format!("{kind} does not produce a sweep"))),
        })?);
    }
    let result = SweepResult::merge(parts);
    report_sweep(&result, args.out.as_deref(), stdout, stderr)
}

fn report_sweep(result: &SweepResult, out: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    if let Some(path) = out {
        experiments::write_sweep_csv(result, path)?;
    } else {
        // validate the rows even when nothing is written
        sweep_csv_bytes(result)?;
    }
    emit(stdout, &serde_json::to_value(result)?)?;
    note(stderr, &summary_table(result));
    Ok(if result.flagged() { 2 } else { 0 })
}

fn report_shortcut(
    rows: &[experiments::ShortcutRow],
    out: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32> {
    if let Some(path) = out {
        write_out(path, &shortcut_csv(rows)?)?;
    }
    emit(stdout, &json!({ "shortcut": rows }))?;
    note(stderr, &shortcut_table(rows));
    Ok(0)
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

fn measure(paths: &[PathBuf]) -> Result<Value> {
    let mut docs = Vec::new();
    for path in paths {
        let text = read(path)?;
        let raw: Value = serde_json::from_str(&text).map_err(|e| with_path(path, e.into()))?;
        docs.push((path, text, raw.get("side").is_some()));
    }
    if docs.len() == 1 && docs[0].2 {
        let (path, text, _) = &docs[0];
        let t = parse_triple(text).map_err(|e| with_path(path, e))?;
        let mut entropies = serde_json::Map::new();
        for v in Vars::XYZ.subsets() {
            let e = t.entropy_estimate(v);
            entropies.insert(v.label().into(), json!({ "value": e.value, "err": e.err }));
        }
        return Ok(json!({
            "file": path.display().to_string(),
            "log_moment_bound": t.log_moment_bound(),
            "conditional_entropy_x": t.conditional_entropy_x(),
            "entropy": Value::Object(entropies),
        }));
    }
    let mut pmfs = Vec::new();
    let mut items = Vec::new();
    for (path, text, is_triple) in &docs {
        if *is_triple {
            return Err(Error::field(path.display().to_string(), "comparison needs two pmf files"));
        }
        let pmf = parse_pmf(text).map_err(|e| with_path(path, e))?;
        items.push(describe(path, &pmf));
        pmfs.push(pmf);
    }
    let mut out = json!({ "pmfs": items });
    if let [q, p] = pmfs.as_slice() {
        let tab = q.tabulate()?;
        let d = measures::kl_divergence_with(tab.atoms.iter().map(|(x, w)| (x, *w)), |x| p.mass(*x));
        let v = measures::variational_distance_with(tab.atoms.iter().map(|(x, w)| (x, *w)), |x| p.mass(*x));
        out["kl"] = num(d);
        out["variational_distance"] = json!(v);
        out["pinsker_gap"] = if d.is_finite() { json!(pinsker_gap_from(d, v)) } else { json!("inf") };
    }
    Ok(out)
}

fn describe(path: &Path, pmf: &Pmf) -> Value {
    let h = pmf.entropy();
    let m = pmf.log_moment();
    let (cut, residual) = pmf.truncation();
    let mut v = json!({
        "file": path.display().to_string(),
        "entropy": h.value,
        "entropy_err": h.err,
        "log_moment": m.value,
        "log_moment_err": m.err,
    });
    if !pmf.is_finite() {
        v["truncation"] = json!({ "cut": cut, "residual": residual });
    }
    v
}
