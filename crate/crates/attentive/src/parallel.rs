//! Rayon-backed evaluation. Results are gathered in input order, so they do
//! not depend on the number of worker threads.

use std::collections::HashMap;

use attentive_core::design::{build_reward_structures, ObjectiveRewards};
use attentive_core::sim::{check_estimate_inputs, sample_run, summarize};
use attentive_core::synthesis::{evaluate_with, Evaluator};
use attentive_core::{ControllerGenotype, Ctmc, ObjectiveVector, ProblemSpec, RewardEstimate, RewardStructure, SolverSettings};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::AppError;

/// `workers == 0` lets rayon pick the thread count.
pub fn thread_pool(workers: usize) -> Result<ThreadPool, AppError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| AppError::Internal(format!("cannot start worker pool: {e}")))
}

pub struct ParallelEvaluator<'a> {
    spec: &'a ProblemSpec,
    rewards: ObjectiveRewards,
    settings: SolverSettings,
    pool: &'a ThreadPool,
    cache: HashMap<Vec<u32>, ObjectiveVector>,
}

impl<'a> ParallelEvaluator<'a> {
    pub fn new(spec: &'a ProblemSpec, settings: SolverSettings, pool: &'a ThreadPool) -> Result<Self, AppError> {
        settings.check()?;
        Ok(ParallelEvaluator {
            spec,
            rewards: build_reward_structures(spec)?,
            settings,
            pool,
            cache: HashMap::new(),
        })
    }
}

impl Evaluator for ParallelEvaluator<'_> {
    fn evaluate_all(&mut self, genotypes: &[ControllerGenotype]) -> attentive_core::Result<Vec<ObjectiveVector>> {
        let mut missing: Vec<&ControllerGenotype> = Vec::new();
        for g in genotypes {
            if !self.cache.contains_key(&g.options) && !missing.iter().any(|m| m.options == g.options) {
                missing.push(g);
            }
        }
        let (spec, rewards, settings) = (self.spec, &self.rewards, &self.settings);
        let fresh: Vec<attentive_core::Result<ObjectiveVector>> = self
            .pool
            .install(|| missing.par_iter().map(|g| evaluate_with(spec, rewards, g, settings)).collect());
        for (g, v) in missing.iter().zip(fresh) {
            self.cache.insert(g.options.clone(), v?);
        }
        Ok(genotypes.iter().map(|g| self.cache[&g.options]).collect())
    }

    fn evaluations(&self) -> usize {
        self.cache.len()
    }

    fn solver_settings(&self) -> SolverSettings {
        self.settings
    }
}

/// Parallel counterpart of `attentive_core::sim::estimate_rewards`; returns
/// identical estimates.
pub fn estimate_rewards(
    pool: &ThreadPool,
    ctmc: &Ctmc,
    rewards: &[RewardStructure],
    horizon: f64,
    runs: u64,
    seed: u64,
) -> Result<Vec<RewardEstimate>, AppError> {
    check_estimate_inputs(ctmc, rewards, horizon, runs)?;
    let samples: Vec<Vec<f64>> = pool.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|run| sample_run(ctmc, rewards, horizon, seed, run))
            .collect()
    });
    Ok(summarize(&samples, rewards.len())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use attentive_core::synthesis::CachedEvaluator;

    fn spec() -> ProblemSpec {
        let mut s = ProblemSpec::zeroed(2, 1, 1);
        s.nuisance = vec![0.0, 1.0];
        s.progress = vec![1.0];
        s.risk = vec![vec![0.1], vec![1.0]];
        s.set_driver_rate(0, 1, 0, 0, 0.3);
        s.set_driver_rate(0, 1, 1, 0, 0.1);
        s.set_driver_rate(1, 0, 0, 0, 0.05);
        s.set_driver_rate(1, 0, 1, 0, 0.5);
        s.controller_action_rate = 2.0;
        s.timer_rate = 0.2;
        s.horizon_t = 60.0;
        s
    }

    #[test]
    fn matches_sequential_evaluator_for_any_worker_count() {
        let s = spec();
        let gs: Vec<_> = attentive_core::synthesis::GenotypeEnumerator::new(&s).collect();
        let mut batch = gs.clone();
        batch.extend(gs.iter().rev().cloned());
        let want = CachedEvaluator::new(&s, SolverSettings::default())
            .unwrap()
            .evaluate_all(&batch)
            .unwrap();
        for workers in [1, 3] {
            let pool = thread_pool(workers).unwrap();
            let mut ev = ParallelEvaluator::new(&s, SolverSettings::default(), &pool).unwrap();
            let got = ev.evaluate_all(&batch).unwrap();
            assert_eq!(got.iter().map(|o| o.bits()).collect::<Vec<_>>(), want.iter().map(|o| o.bits()).collect::<Vec<_>>());
            assert_eq!(ev.evaluations(), gs.len());
        }
    }

    #[test]
    fn parallel_estimates_equal_sequential() {
        let s = spec();
        let g = ControllerGenotype::new(vec![1, 0]);
        let ctmc = attentive_core::design::build_ctmc(&s, &g).unwrap();
        let r = build_reward_structures(&s).unwrap();
        let rewards = [r.nuisance, r.progress, r.risk];
        let want = attentive_core::sim::estimate_rewards(&ctmc, &rewards, 60.0, 500, 9).unwrap();
        for workers in [1, 4] {
            let pool = thread_pool(workers).unwrap();
            assert_eq!(estimate_rewards(&pool, &ctmc, &rewards, 60.0, 500, 9).unwrap(), want);
        }
    }
}
