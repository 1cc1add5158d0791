//! Seeded instance generation, end-to-end attack trials and aggregate
//! statistics.
//!
//! Instances come from ChaCha8 seeded with the configuration seed, using the
//! trial index as the stream number, so each trial is reproducible on its own
//! and trials can run in any order or in parallel.

use std::io::Write;
use std::time::Instant;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{recover_shared_key, DEFAULT_MAX_STEPS};
use crate::error::{Error, Result};
use crate::matrix::TropicalMatrix;
use crate::protocol_one::run_exchange;
use crate::scalar::{Entry, TropicalScalar};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstanceConfig {
    pub order: usize,
    pub entry_min: i64,
    pub entry_max: i64,
    pub exp_min: u64,
    pub exp_max: u64,
    pub seed: u64,
    pub trials: usize,
    pub max_steps: usize,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            order: 10,
            entry_min: -1000,
            entry_max: 1000,
            exp_min: 1,
            exp_max: 1 << 32,
            seed: 0,
            trials: 100,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

impl InstanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidConfig("order must be positive".into()));
        }
        if self.entry_min > self.entry_max {
            return Err(Error::InvalidConfig(format!(
                "entry range [{}, {}] is empty",
                self.entry_min, self.entry_max
            )));
        }
        if self.exp_min == 0 || self.exp_min > self.exp_max {
            return Err(Error::InvalidConfig(format!(
                "exponent range [{}, {}] must satisfy 1 <= min <= max",
                self.exp_min, self.exp_max
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive".into()));
        }
        Ok(())
    }
}

/// Public matrices and both private exponents of one exchange.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "T: Entry")]
pub struct Instance<T> {
    pub m: TropicalMatrix<T>,
    pub h: TropicalMatrix<T>,
    #[serde(with = "crate::decimal")]
    pub a: BigUint,
    #[serde(with = "crate::decimal")]
    pub b: BigUint,
}

pub fn gen_instance<T: Entry>(config: &InstanceConfig, trial_index: u64) -> Instance<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial_index);
    let range = config.entry_min..=config.entry_max;
    let matrix = |rng: &mut ChaCha8Rng| {
        TropicalMatrix::from_fn(config.order, |_, _| {
            TropicalScalar::from_i64(rng.gen_range(range.clone()))
        })
    };
    let m = matrix(&mut rng);
    let h = matrix(&mut rng);
    let a = rng.gen_range(config.exp_min..=config.exp_max);
    let b = rng.gen_range(config.exp_min..=config.exp_max);
    Instance {
        m,
        h,
        a: a.into(),
        b: b.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub d: usize,
    pub rho: usize,
    pub retries: usize,
    pub attack_time_s: f64,
    pub success: bool,
    pub true_a: String,
    pub recovered_a: String,
    pub error: Option<String>,
}

/// Generates an instance, runs the honest exchange, then attacks it.
/// Only the attack itself is timed.
pub fn run_trial<T: Entry>(config: &InstanceConfig, trial_index: u64) -> Result<TrialResult> {
    let inst = gen_instance::<T>(config, trial_index);
    let transcript = run_exchange(&inst.m, &inst.h, &inst.a, &inst.b)?;

    let started = Instant::now();
    let outcome = recover_shared_key(
        &inst.m,
        &inst.h,
        &transcript.m_a,
        &transcript.m_b,
        config.max_steps,
    );
    let attack_time_s = started.elapsed().as_secs_f64();

    let base = TrialResult {
        trial: trial_index,
        d: 0,
        rho: 0,
        retries: 0,
        attack_time_s,
        success: false,
        true_a: inst.a.to_string(),
        recovered_a: String::new(),
        error: None,
    };
    Ok(match outcome {
        Ok(rec) => TrialResult {
            d: rec.attack.d_used,
            rho: rec.attack.rho_used,
            retries: rec.attack.false_period_retries,
            success: transcript.keys_agree() && rec.key == transcript.key_alice,
            recovered_a: rec.attack.recovered_a.to_string(),
            ..base
        },
        Err(Error::AttackFailed { retries, .. }) => TrialResult {
            retries,
            error: Some("attack failed".into()),
            ..base
        },
        Err(e) => return Err(e),
    })
}

/// Table-style aggregate over a set of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    #[serde(rename = "Trials")]
    pub trials: usize,
    #[serde(rename = "Maximum d")]
    pub max_d: usize,
    #[serde(rename = "Median d")]
    pub median_d: usize,
    #[serde(rename = "Mean d")]
    pub mean_d: f64,
    #[serde(rename = "Maximal rho")]
    pub max_rho: usize,
    #[serde(rename = "Median rho")]
    pub median_rho: usize,
    #[serde(rename = "Mean rho")]
    pub mean_rho: f64,
    #[serde(rename = "Maximum attack time (s)")]
    pub max_time_s: f64,
    #[serde(rename = "Median attack time (s)")]
    pub median_time_s: f64,
    #[serde(rename = "Mean attack time (s)")]
    pub mean_time_s: f64,
    #[serde(rename = "Success Rate")]
    pub success_rate: f64,
}

/// Lower median: the smaller middle element for even counts.
pub fn lower_median<V: Clone + PartialOrd>(values: &[V]) -> Option<V> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("comparable values"));
    Some(sorted[(sorted.len() - 1) / 2].clone())
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len() as f64;
    values.sum::<f64>() / n
}

/// Rounds to whole milliseconds.
fn millis(seconds: f64) -> f64 {
    (seconds * 1000.0).round() / 1000.0
}

impl StatsSummary {
    pub fn from_trials(results: &[TrialResult]) -> Option<Self> {
        if results.is_empty() {
            return None;
        }
        let ds: Vec<usize> = results.iter().map(|r| r.d).collect();
        let rhos: Vec<usize> = results.iter().map(|r| r.rho).collect();
        let times: Vec<f64> = results.iter().map(|r| millis(r.attack_time_s)).collect();
        let successes = results.iter().filter(|r| r.success).count();
        Some(StatsSummary {
            trials: results.len(),
            max_d: *ds.iter().max()?,
            median_d: lower_median(&ds)?,
            mean_d: mean(ds.iter().map(|&v| v as f64)),
            max_rho: *rhos.iter().max()?,
            median_rho: lower_median(&rhos)?,
            mean_rho: mean(rhos.iter().map(|&v| v as f64)),
            max_time_s: times.iter().cloned().fold(f64::MIN, f64::max),
            median_time_s: lower_median(&times)?,
            mean_time_s: millis(mean(times.iter().cloned())),
            success_rate: successes as f64 / results.len() as f64,
        })
    }
}

/// Runs every trial of `config` on `jobs` worker threads; results come back
/// in trial order regardless of scheduling.
pub fn run_bench<T: Entry>(config: &InstanceConfig, jobs: usize) -> Result<(StatsSummary, Vec<TrialResult>)> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let results = pool.install(|| {
        (0..config.trials as u64)
            .into_par_iter()
            .map(|i| run_trial::<T>(config, i))
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = StatsSummary::from_trials(&results).expect("at least one trial");
    Ok((summary, results))
}

#[derive(Serialize)]
struct TrialRow<'a> {
    trial: u64,
    d: usize,
    rho: usize,
    retries: usize,
    success: bool,
    true_a: &'a str,
    recovered_a: &'a str,
}

#[derive(Serialize)]
struct TimingRow {
    trial: u64,
    attack_time_s: String,
}

/// Per-trial outcomes. Contains no timing, so equal seeds give equal bytes.
pub fn write_trials_csv<W: Write>(results: &[TrialResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(TrialRow {
            trial: r.trial,
            d: r.d,
            rho: r.rho,
            retries: r.retries,
            success: r.success,
            true_a: &r.true_a,
            recovered_a: &r.recovered_a,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Per-trial wall-clock attack time at millisecond resolution.
pub fn write_timings_csv<W: Write>(results: &[TrialResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(TimingRow {
            trial: r.trial,
            attack_time_s: format!("{:.3}", r.attack_time_s),
        })?;
    }
    w.flush()?;
    Ok(())
}
