//! Repeated seed-expansion trials against a planted cluster.
//!
//! Each trial draws its seeds from the target block with a ChaCha8 stream keyed
//! by the trial index, so every `(p, t)` cell sees the same seeds and results
//! do not depend on scheduling. The source mass is `t·vol(C)` spread over the
//! seeds in proportion to degree.

use std::fmt::Write as _;

use flowdiff_core::{
    evaluate, run_pipeline, sweep_cut, Error as CoreError, Graph, NodeId, NodeSet, PipelineConfig,
    PipelineOutcome, SolverOptions, StepRule,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{MetricsRecord, FIELDS};

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub ps: Vec<f64>,
    /// Mass multipliers `t`: `|Δ| = t·vol(C)`.
    pub mass_mults: Vec<f64>,
    pub trials: usize,
    pub seeds_per_trial: usize,
    pub eps: f64,
    pub mu: Option<f64>,
    pub term_tol: Option<f64>,
    pub step: StepRule,
    pub max_updates: Option<u64>,
    pub rng_seed: u64,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ps: vec![2.0, 4.0, 8.0],
            mass_mults: vec![2.0],
            trials: 20,
            seeds_per_trial: 1,
            eps: 1e-2,
            mu: None,
            term_tol: None,
            step: StepRule::LineSearch,
            max_updates: None,
            rng_seed: 0,
            threads: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub p: f64,
    pub t: f64,
    pub trial: usize,
    pub seeds: Vec<NodeId>,
    /// False when the update budget ran out; metrics then describe the sweep of
    /// the partial heights.
    pub converged: bool,
    #[serde(flatten)]
    pub metrics: MetricsRecord,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single trial.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    pub p: f64,
    pub t: f64,
    pub eps: f64,
    pub trials: usize,
    pub converged: usize,
    pub precision: Stat,
    pub recall: Stat,
    pub f1: Stat,
    pub jaccard: Stat,
    pub conductance: Stat,
    pub delta: Stat,
    pub pushes: Stat,
    pub touched: Stat,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<CellSummary>,
}

/// Seeds for one trial: `k` distinct members of `block`.
pub fn sample_seeds(block: &NodeSet, k: usize, rng_seed: u64, trial: usize) -> Vec<NodeId> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(trial as u64);
    let mut seeds: Vec<NodeId> = block.as_slice().choose_multiple(&mut rng, k).copied().collect();
    seeds.sort_unstable();
    seeds
}

fn pipeline_config(cfg: &ExperimentConfig, p: f64, trial: usize) -> PipelineConfig {
    PipelineConfig {
        p,
        eps: cfg.eps,
        mu: cfg.mu,
        term_tol: cfg.term_tol,
        options: SolverOptions {
            step: cfg.step,
            rng_seed: cfg.rng_seed.wrapping_add(trial as u64),
            max_updates: cfg.max_updates,
        },
    }
}

/// Runs the pipeline, falling back to the partial heights when the budget
/// runs out.
fn run_lenient(
    g: &Graph,
    seeds: &NodeSet,
    delta: f64,
    config: &PipelineConfig,
) -> Result<(PipelineOutcome, bool)> {
    match run_pipeline(g, seeds, delta, config) {
        Ok(o) => Ok((o, true)),
        Err(CoreError::BudgetExceeded { partial }) => {
            let sweep = sweep_cut(g, &partial.x)?;
            Ok((PipelineOutcome { delta, solution: *partial, sweep }, false))
        }
        Err(e) => Err(e.into()),
    }
}

fn run_trial(
    g: &Graph,
    truth: &NodeSet,
    cfg: &ExperimentConfig,
    (p, t, trial): (f64, f64, usize),
) -> Result<TrialRecord> {
    let seeds = sample_seeds(truth, cfg.seeds_per_trial, cfg.rng_seed, trial);
    let seed_set = NodeSet::new(g, seeds.iter().copied())?;
    let delta = t * truth.volume() as f64 / seed_set.volume() as f64;
    let (outcome, converged) = run_lenient(g, &seed_set, delta, &pipeline_config(cfg, p, trial))?;
    let m = evaluate(g, &outcome.sweep.best_cut, truth)?;
    let metrics = MetricsRecord::from_outcome(&outcome, p, cfg.eps).with_truth(&m);
    Ok(TrialRecord { p, t, trial, seeds, converged, metrics })
}

fn summarize(p: f64, t: f64, eps: f64, rows: &[&TrialRecord]) -> CellSummary {
    let col = |f: &dyn Fn(&MetricsRecord) -> Option<f64>| -> Stat {
        Stat::of(&rows.iter().filter_map(|r| f(&r.metrics)).collect::<Vec<_>>())
    };
    CellSummary {
        p,
        t,
        eps,
        trials: rows.len(),
        converged: rows.iter().filter(|r| r.converged).count(),
        precision: col(&|m| m.precision),
        recall: col(&|m| m.recall),
        f1: col(&|m| m.f1),
        jaccard: col(&|m| m.jaccard),
        conductance: col(&|m| m.conductance),
        delta: col(&|m| m.delta),
        pushes: col(&|m| m.pushes.map(|v| v as f64)),
        touched: col(&|m| m.touched.map(|v| v as f64)),
    }
}

fn validate(g: &Graph, truth: &NodeSet, cfg: &ExperimentConfig) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::config("block", "target block is empty"));
    }
    if cfg.trials == 0 {
        return Err(Error::config("trials", "need at least one trial"));
    }
    if cfg.seeds_per_trial == 0 || cfg.seeds_per_trial > truth.len() {
        return Err(Error::config(
            "seeds-per-trial",
            format!("must lie in 1..={} (block size)", truth.len()),
        ));
    }
    if cfg.ps.is_empty() || cfg.mass_mults.is_empty() {
        return Err(Error::config("p", "need at least one p and one t"));
    }
    if let Some(&t) = cfg.mass_mults.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::config("t", format!("mass multiplier must be positive, got {t}")));
    }
    let _ = g;
    Ok(())
}

/// Runs every `(p, t, trial)` combination. Records come back ordered by `p`,
/// then `t`, then trial index.
pub fn run_experiment(g: &Graph, truth: &NodeSet, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    validate(g, truth, cfg)?;
    let jobs: Vec<(f64, f64, usize)> = cfg
        .ps
        .iter()
        .flat_map(|&p| cfg.mass_mults.iter().flat_map(move |&t| (0..cfg.trials).map(move |i| (p, t, i))))
        .collect();
    let work = || jobs.par_iter().map(|&job| run_trial(g, truth, cfg, job)).collect::<Result<Vec<_>>>();
    let trials = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let summary = trials
        .chunks(cfg.trials)
        .map(|cell| summarize(cell[0].p, cell[0].t, cfg.eps, &cell.iter().collect::<Vec<_>>()))
        .collect();
    Ok(ExperimentReport { trials, summary })
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One row per trial, then a `mean` and a `std` row per cell.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("row\tp\tt\ttrial\tseeds\tconverged\t{}\n", FIELDS.join("\t"));
        for r in &self.trials {
            let seeds: Vec<String> = r.seeds.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(
                out,
                "trial\t{}\t{}\t{}\t{}\t{}\t{}",
                r.p,
                r.t,
                r.trial,
                seeds.join(","),
                r.converged as u8,
                r.metrics.tsv_values().join("\t")
            );
        }
        for s in &self.summary {
            for (label, pick) in [("mean", 0), ("std", 1)] {
                let v = |st: Stat| if pick == 0 { st.mean } else { st.std }.to_string();
                let _ = writeln!(
                    out,
                    "{label}\t{}\t{}\tNA\tNA\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    s.p,
                    s.t,
                    s.converged,
                    v(s.precision),
                    v(s.recall),
                    v(s.f1),
                    v(s.jaccard),
                    v(s.conductance),
                    v(s.delta),
                    s.p,
                    s.eps,
                    v(s.pushes),
                    v(s.touched),
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flowdiff_core::synth::gen_planted_partition;

    #[test]
    fn stat_mean_and_sample_std() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stat::of(&[7.0]).std, 0.0);
    }

    #[test]
    fn seeds_depend_only_on_trial() {
        let pp = gen_planted_partition(&[20, 20], 0.5, 0.05, 3).unwrap();
        let b = &pp.blocks[0];
        assert_eq!(sample_seeds(b, 3, 9, 4), sample_seeds(b, 3, 9, 4));
        assert_ne!(sample_seeds(b, 3, 9, 4), sample_seeds(b, 3, 9, 5));
        for s in sample_seeds(b, 5, 1, 0) {
            assert!(b.contains(s));
        }
    }

    #[test]
    fn records_are_ordered_and_complete() {
        let pp = gen_planted_partition(&[20, 20], 0.5, 0.05, 3).unwrap();
        let cfg = ExperimentConfig {
            ps: vec![2.0, 4.0],
            mass_mults: vec![1.5],
            trials: 3,
            eps: 1e-2,
            threads: Some(2),
            ..Default::default()
        };
        let rep = run_experiment(&pp.graph, &pp.blocks[0], &cfg).unwrap();
        let keys: Vec<(f64, usize)> = rep.trials.iter().map(|r| (r.p, r.trial)).collect();
        assert_eq!(keys, [(2.0, 0), (2.0, 1), (2.0, 2), (4.0, 0), (4.0, 1), (4.0, 2)]);
        assert_eq!(rep.summary.len(), 2);
        assert_eq!(rep.trials[0].seeds, rep.trials[3].seeds);
        let tsv = rep.to_tsv();
        let width = tsv.lines().next().unwrap().split('\t').count();
        assert!(tsv.lines().all(|l| l.split('\t').count() == width));
        assert_eq!(tsv.lines().count(), 1 + 6 + 4);
    }

    #[test]
    fn one_trial_matches_a_direct_run() {
        let pp = gen_planted_partition(&[20, 20], 0.5, 0.05, 3).unwrap();
        let truth = &pp.blocks[0];
        let cfg = ExperimentConfig { ps: vec![4.0], trials: 1, eps: 1e-2, ..Default::default() };
        let rep = run_experiment(&pp.graph, truth, &cfg).unwrap();
        let seeds = NodeSet::new(&pp.graph, sample_seeds(truth, 1, 0, 0)).unwrap();
        let delta = 2.0 * truth.volume() as f64 / seeds.volume() as f64;
        let direct = run_pipeline(&pp.graph, &seeds, delta, &pipeline_config(&cfg, 4.0, 0)).unwrap();
        let m = evaluate(&pp.graph, &direct.sweep.best_cut, truth).unwrap();
        assert_eq!(rep.trials[0].metrics, MetricsRecord::from_outcome(&direct, 4.0, 1e-2).with_truth(&m));
    }

    #[test]
    fn bad_configs_rejected() {
        let pp = gen_planted_partition(&[10, 10], 0.6, 0.1, 1).unwrap();
        let b = &pp.blocks[0];
        let zero = ExperimentConfig { trials: 0, ..Default::default() };
        assert!(run_experiment(&pp.graph, b, &zero).is_err());
        let many = ExperimentConfig { seeds_per_trial: 11, ..Default::default() };
        assert!(run_experiment(&pp.graph, b, &many).is_err());
    }
}
