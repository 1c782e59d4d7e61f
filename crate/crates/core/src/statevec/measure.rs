use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Register, StateError};

/// Outcomes at or below this probability are treated as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub subsystem: usize,
    pub outcome: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub record: MeasurementRecord,
    /// Collapsed and renormalized; the measured subsystem is kept.
    pub register: Register,
}

impl Register {
    /// Born-rule probabilities of each level of `sub`.
    pub fn probabilities(&self, sub: usize) -> Result<Vec<f64>, StateError> {
        let r = self.radix(sub)?;
        let stride = self.stride(sub);
        let mut p = vec![0.0; r];
        for (k, a) in self.amplitudes.iter().enumerate() {
            p[(k / stride) % r] += a.norm_sqr();
        }
        let total: f64 = p.iter().sum();
        if total > 0.0 {
            p.iter_mut().for_each(|x| *x /= total);
        }
        Ok(p)
    }

    /// Projects `sub` onto `level` and renormalizes.
    pub fn collapse(&self, sub: usize, level: usize) -> Result<Register, StateError> {
        let r = self.check_level(sub, level)?;
        let p = self.probabilities(sub)?[level];
        if p <= ZERO_PROBABILITY {
            return Err(StateError::ZeroProbability { subsystem: sub, level });
        }
        Ok(self.project(sub, level, r))
    }

    fn project(&self, sub: usize, level: usize, r: usize) -> Register {
        let stride = self.stride(sub);
        let mut out = self.clone();
        let zero = Complex64::new(0.0, 0.0);
        for (k, a) in out.amplitudes.iter_mut().enumerate() {
            if (k / stride) % r != level {
                *a = zero;
            }
        }
        out.normalize();
        out
    }

    /// Every outcome with non-zero probability, in level order.
    pub fn enumerate_outcomes(&self, sub: usize) -> Result<Vec<Outcome>, StateError> {
        let r = self.radix(sub)?;
        let probs = self.probabilities(sub)?;
        Ok(probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > ZERO_PROBABILITY)
            .map(|(level, &p)| Outcome {
                record: MeasurementRecord { subsystem: sub, outcome: level, probability: p },
                register: self.project(sub, level, r),
            })
            .collect())
    }

    /// Samples one outcome of `sub` from `rng`.
    pub fn measure<R: Rng + ?Sized>(&self, sub: usize, rng: &mut R) -> Result<(MeasurementRecord, Register), StateError> {
        let r = self.radix(sub)?;
        let probs = self.probabilities(sub)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = None;
        for (level, &p) in probs.iter().enumerate() {
            if p <= ZERO_PROBABILITY {
                continue;
            }
            pick = Some(level);
            acc += p;
            if u < acc {
                break;
            }
        }
        let level = pick.ok_or(StateError::ZeroProbability { subsystem: sub, level: 0 })?;
        let record = MeasurementRecord { subsystem: sub, outcome: level, probability: probs[level] };
        Ok((record, self.project(sub, level, r)))
    }
}
