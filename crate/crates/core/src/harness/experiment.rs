//! The method x situation design: `n_per_cell` independent trials per cell,
//! run in parallel and returned in a fixed order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::Method;
use crate::error::{Error, Result};
use crate::harness::trial::{run_trial, TrialConfig, TrialRecord};
use crate::human::ResponseTable;
use crate::rng::derive_seed;
use crate::scenario::{default_scenario, Scenario};
use crate::srm::ViewingSituation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub methods: Vec<Method>,
    pub situations: Vec<ViewingSituation>,
    pub n_per_cell: usize,
    pub base_seed: u64,
    pub table: ResponseTable,
    pub trial: TrialConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: default_scenario(),
            methods: Method::ALL.to_vec(),
            situations: ViewingSituation::ALL.to_vec(),
            n_per_cell: 12,
            base_seed: 42,
            table: ResponseTable::default(),
            trial: TrialConfig::default(),
        }
    }
}

/// Seed of repetition `rep` in a cell; independent of which other cells run.
pub fn trial_seed(base_seed: u64, method: Method, situation: ViewingSituation, rep: usize) -> u64 {
    derive_seed(base_seed, &[method.index() as u64, situation.index() as u64, rep as u64])
}

/// Runs every cell. Records come back ordered by method, situation and
/// repetition, with `trial_id` counting from 0 in that order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    if config.n_per_cell == 0 {
        return Err(Error::EmptyExperiment);
    }
    if config.methods.is_empty() || config.situations.is_empty() {
        return Err(Error::InvalidConfig("methods and situations must be non-empty".into()));
    }
    let jobs: Vec<(Method, ViewingSituation, usize)> = config
        .methods
        .iter()
        .flat_map(|&m| {
            config
                .situations
                .iter()
                .flat_map(move |&s| (0..config.n_per_cell).map(move |r| (m, s, r)))
        })
        .collect();
    let mut records = jobs
        .par_iter()
        .enumerate()
        .map(|(id, &(m, s, rep))| {
            let seed = trial_seed(config.base_seed, m, s, rep);
            run_trial(&config.scenario, m, s, &config.table, seed, &config.trial).map(|mut r| {
                r.trial_id = id as u64;
                r
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| r.trial_id);
    Ok(records)
}
