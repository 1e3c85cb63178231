//! Expected fraction of records released unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::markov::MarkovModel;
use crate::mechanisms::RedactionMechanism;

/// Fixed shard count so results do not depend on the thread pool size.
const SHARDS: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    /// Sample standard deviation of per-path utility over `sqrt(trials)`;
    /// NaN for a single trial.
    pub standard_error: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityReport {
    pub exact: f64,
    pub monte_carlo: Option<MonteCarloEstimate>,
    /// `Pr[Y_t = X_t]` for each record.
    pub per_record: Vec<f64>,
}

fn check_shapes(model: &MarkovModel, mech: &RedactionMechanism) -> Result<()> {
    if model.n() != mech.n() {
        return Err(Error::InvalidMechanism(format!(
            "mechanism has {} rows but the model has n = {}",
            mech.n(),
            model.n()
        )));
    }
    Ok(())
}

pub fn exact_utility(model: &MarkovModel, mech: &RedactionMechanism) -> Result<UtilityReport> {
    check_shapes(model, mech)?;
    let (pi0, pi1) = model.stationary_marginal();
    let per_record: Vec<f64> = mech
        .table()
        .iter()
        .map(|r| {
            if r[0] == r[1] {
                1.0 - r[0]
            } else {
                pi0 * (1.0 - r[0]) + pi1 * (1.0 - r[1])
            }
        })
        .collect();
    let exact = per_record.iter().sum::<f64>() / model.n() as f64;
    Ok(UtilityReport {
        exact,
        monte_carlo: None,
        per_record,
    })
}

/// Exact utility plus a seeded Monte-Carlo estimate. Paths and redaction
/// coins come from separate streams of the same seed.
pub fn monte_carlo_utility(
    model: &MarkovModel,
    mech: &RedactionMechanism,
    trials: u64,
    seed: u64,
) -> Result<UtilityReport> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let mut report = exact_utility(model, mech)?;
    let n = model.n();

    // (sum of released counts, sum of squared released counts)
    let shards: Vec<(u128, u128)> = (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let count = trials / SHARDS + u64::from(s < trials % SHARDS);
            let mut paths = ChaCha8Rng::seed_from_u64(seed);
            paths.set_stream(2 * s);
            let mut coins = ChaCha8Rng::seed_from_u64(seed);
            coins.set_stream(2 * s + 1);
            let mut x = vec![0u8; n];
            let (mut sum, mut sq) = (0u128, 0u128);
            for _ in 0..count {
                model.fill_path(&mut paths, &mut x);
                let mut released = 0u128;
                for (t, &v) in x.iter().enumerate() {
                    let r = mech.table()[t][v as usize];
                    let redacted = if r >= 1.0 {
                        true
                    } else if r <= 0.0 {
                        false
                    } else {
                        coins.random::<f64>() < r
                    };
                    if !redacted {
                        released += 1;
                    }
                }
                sum += released;
                sq += released * released;
            }
            (sum, sq)
        })
        .collect();

    let (sum, sq) = shards
        .iter()
        .fold((0u128, 0u128), |a, b| (a.0 + b.0, a.1 + b.1));
    let t = trials as f64;
    let nf = n as f64;
    let mean_count = sum as f64 / t;
    let standard_error = if trials > 1 {
        let var = (sq as f64 - t * mean_count * mean_count) / (t - 1.0);
        var.max(0.0).sqrt() / nf / t.sqrt()
    } else {
        f64::NAN
    };
    report.monte_carlo = Some(MonteCarloEstimate {
        estimate: mean_count / nf,
        standard_error,
        trials,
        seed,
    });
    Ok(report)
}
