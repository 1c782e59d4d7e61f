use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BudgetError;

const TRIALS_PER_STREAM: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossCounting {
    /// A photon is lost with probability `p` once per transmission.
    PerPhoton,
    /// Each of the `d` time-bin modes is lost independently; the photon
    /// survives only if every mode does.
    PerMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeLossStats {
    pub photons: usize,
    pub modes_per_photon: usize,
    pub p_loss: f64,
    pub counting: LossCounting,
    pub trials: u64,
    pub survived: u64,
    /// Fraction of trials in which every photon arrived.
    pub rate: f64,
    /// Binomial standard error of `rate`, from the closed form.
    pub std_error: f64,
    pub expected: f64,
    /// `|rate − expected| / std_error`; zero when both are exact.
    pub sigmas: f64,
}

/// Trials are split into fixed blocks, each with its own ChaCha stream of
/// the master seed, so results do not depend on the thread count.
pub fn monte_carlo_mode_loss(
    photons: usize,
    modes_per_photon: usize,
    p_loss: f64,
    counting: LossCounting,
    trials: u64,
    master_seed: u64,
) -> Result<ModeLossStats, BudgetError> {
    if !(0.0..=1.0).contains(&p_loss) {
        return Err(BudgetError::Probability(p_loss));
    }
    if trials == 0 {
        return Err(BudgetError::NoTrials);
    }
    let draws = match counting {
        LossCounting::PerPhoton => photons,
        LossCounting::PerMode => photons * modes_per_photon,
    };
    let blocks = trials.div_ceil(TRIALS_PER_STREAM);
    let survived: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(b);
            let n = TRIALS_PER_STREAM.min(trials - b * TRIALS_PER_STREAM);
            (0..n).filter(|_| (0..draws).all(|_| rng.random::<f64>() >= p_loss)).count() as u64
        })
        .sum();
    let expected = (1.0 - p_loss).powi(draws as i32);
    let rate = survived as f64 / trials as f64;
    let std_error = (expected * (1.0 - expected) / trials as f64).sqrt();
    let sigmas = match (std_error > 0.0, rate == expected) {
        (true, _) => (rate - expected).abs() / std_error,
        (false, true) => 0.0,
        (false, false) => f64::INFINITY,
    };
    Ok(ModeLossStats {
        photons,
        modes_per_photon,
        p_loss,
        counting,
        trials,
        survived,
        rate,
        std_error,
        expected,
        sigmas,
    })
}
