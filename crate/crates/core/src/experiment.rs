//! Per-trial observables for paired dynamic/static experiments and their
//! summary statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Dynamic,
    Static,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Dynamic => "dynamic",
            Model::Static => "static",
        }
    }
}

/// Observables of one trial, one entry per time step `t = 0..T`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub model: Model,
    pub trial: usize,
    pub count_ones: Vec<u32>,
    pub at_all_ones: Vec<bool>,
    /// Infected fraction, for models that carry an epidemic state.
    pub infected: Option<Vec<f64>>,
}

impl TrialRecord {
    pub fn new(model: Model, trial: usize, horizon: usize, with_infection: bool) -> Self {
        Self {
            model,
            trial,
            count_ones: Vec::with_capacity(horizon),
            at_all_ones: Vec::with_capacity(horizon),
            infected: with_infection.then(|| Vec::with_capacity(horizon)),
        }
    }

    pub fn len(&self) -> usize {
        self.count_ones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count_ones.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// Sample mean and its standard error (sample standard deviation over
    /// `sqrt(k)`).
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let k = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / k;
        let var = if k > 1.0 {
            values.map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / k).sqrt(),
        }
    }
}

/// Records of both models. Dynamic trials come first, each block ordered by
/// trial index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dataset {
    pub n: usize,
    pub horizon: usize,
    pub records: Vec<TrialRecord>,
}

impl Dataset {
    pub fn trials(&self) -> usize {
        self.of(Model::Dynamic).count()
    }

    pub fn of(&self, model: Model) -> impl Iterator<Item = &TrialRecord> + Clone {
        self.records.iter().filter(move |r| r.model == model)
    }

    pub fn mean_count(&self, model: Model) -> Vec<MeanSe> {
        (0..self.horizon)
            .map(|t| MeanSe::of(self.of(model).map(move |r| r.count_ones[t] as f64)))
            .collect()
    }

    /// Fraction of trials at the all-ones profile at each step.
    pub fn all_ones_rate(&self, model: Model) -> Vec<MeanSe> {
        (0..self.horizon)
            .map(|t| MeanSe::of(self.of(model).map(move |r| r.at_all_ones[t] as u8 as f64)))
            .collect()
    }

    pub fn mean_infected(&self, model: Model) -> Option<Vec<MeanSe>> {
        if self.of(model).any(|r| r.infected.is_none()) {
            return None;
        }
        Some(
            (0..self.horizon)
                .map(|t| {
                    MeanSe::of(
                        self.of(model)
                            .map(move |r| r.infected.as_ref().expect("checked")[t]),
                    )
                })
                .collect(),
        )
    }
}

/// Generator for one random stream of the root seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `trials` paired trials in parallel. Trial `k` receives stream `2k`
/// for the learning dynamics (shared by both models, so they see common
/// random numbers) and stream `2k + 1` for any auxiliary randomness. Output
/// order depends only on the trial index.
pub fn run_paired_trials<F>(trials: usize, seed: u64, run: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(usize, &dyn Fn() -> ChaCha8Rng, &mut ChaCha8Rng) -> Result<(TrialRecord, TrialRecord)>
        + Sync,
{
    let pairs = (0..trials)
        .into_par_iter()
        .map(|k| {
            let dynamics = || stream_rng(seed, 2 * k as u64);
            let mut aux = stream_rng(seed, 2 * k as u64 + 1);
            run(k, &dynamics, &mut aux)
        })
        .collect::<Result<Vec<_>>>()?;
    let (dynamic, fixed): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok(dynamic.into_iter().chain(fixed).collect())
}
