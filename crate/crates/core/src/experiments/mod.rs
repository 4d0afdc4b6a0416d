//! Monte Carlo and deterministic harnesses for the Markov lemma and its
//! companion statements.

mod conditional;
mod config;
pub mod fixtures;
mod harness;
mod semicontinuity;
mod shortcut;
mod stats;

pub use conditional::{Conditioned, ConditionalSampler, ENUMERATION_CAP};
pub use config::{ConfigFile, EtaSpec, ExperimentConfig, ExperimentKind, Preset};
pub use harness::{
    check_lemma4, run_corollary1, run_lemma2, run_lemma3, run_lemma5, run_many, run_theorem1, summary_table,
    sweep_csv_bytes, write_sweep_csv, Diagnostics, SweepResult, SweepRow, TrialRecord, CSV_HEADER,
};
pub use semicontinuity::{run_semicontinuity, spike_family, BlockPmf, FamilyRow, JumpRow, SemicontinuityTable};
pub use shortcut::{run_shortcut, shortcut_csv, shortcut_table, ShortcutConfig, ShortcutRow};
pub use stats::{wilson, Z95};

/// Result of any experiment.
#[derive(Debug, Clone)]
pub enum Outcome {
    Sweep(SweepResult),
    Shortcut(Vec<ShortcutRow>),
    Semicontinuity(SemicontinuityTable),
}

/// Dispatch on `config.variant`.
pub fn run(config: &ExperimentConfig) -> crate::Result<Outcome> {
    Ok(match config.variant {
        ExperimentKind::Theorem1 => Outcome::Sweep(run_theorem1(config)?),
        ExperimentKind::Corollary1 => Outcome::Sweep(run_corollary1(config)?),
        ExperimentKind::Lemma2 => Outcome::Sweep(run_lemma2(config)?),
        ExperimentKind::Lemma3 => Outcome::Sweep(run_lemma3(config)?),
        ExperimentKind::Lemma5 => Outcome::Sweep(run_lemma5(config)?),
        ExperimentKind::Semicontinuity => Outcome::Semicontinuity(run_semicontinuity(&config.n_grid)?),
        ExperimentKind::Shortcut => {
            let mut t_grid = vec![config.gamma, config.gamma / 2.0, config.gamma / 10.0];
            t_grid.dedup();
            let cfg = ShortcutConfig {
                seed: config.seed,
                t_grid,
                ..ShortcutConfig::default()
            };
            Outcome::Shortcut(run_shortcut(config.model()?, &cfg)?)
        }
    })
}
