use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LevelSubset, Register, Role, StateError, AMPLITUDE_EPS};

/// Below this many amplitudes the gates run serially.
const PAR_MIN: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliKind {
    X,
    Z,
}

fn omega(d: usize, k: i64) -> Complex64 {
    let m = k.rem_euclid(d as i64) as f64;
    Complex64::from_polar(1.0, 2.0 * PI * m / d as f64)
}

/// `F^p` with `F[j][k] = ω^{jk}/√d`.
pub fn fourier_matrix(d: usize, power: u32) -> DMatrix<Complex64> {
    let s = 1.0 / (d as f64).sqrt();
    let f = DMatrix::from_fn(d, d, |j, k| omega(d, (j * k) as i64) * s);
    let mut out = DMatrix::identity(d, d);
    for _ in 0..power % 4 {
        out = &f * out;
    }
    out
}

impl Register {
    /// Applies `m` to the listed levels of `sub`; all other levels are left
    /// alone.
    pub fn apply_local(&mut self, subset: &LevelSubset, m: &DMatrix<Complex64>) -> Result<(), StateError> {
        let r = self.radix(subset.subsystem)?;
        subset.check(r)?;
        let n = subset.len();
        assert_eq!((m.nrows(), m.ncols()), (n, n), "matrix does not match subset size");
        let inner = self.stride(subset.subsystem);
        let block = r * inner;
        let levels = &subset.levels;
        let run = |chunk: &mut [Complex64]| {
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..inner {
                for (a, &l) in levels.iter().enumerate() {
                    buf[a] = chunk[l * inner + i];
                }
                for (j, &l) in levels.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, b) in buf.iter().enumerate() {
                        acc += m[(j, k)] * b;
                    }
                    chunk[l * inner + i] = acc;
                }
            }
        };
        if self.dim() >= PAR_MIN {
            self.amplitudes.par_chunks_mut(block).for_each(run);
        } else {
            self.amplitudes.chunks_mut(block).for_each(run);
        }
        Ok(())
    }

    pub fn apply_fourier(&mut self, subset: &LevelSubset) -> Result<(), StateError> {
        self.apply_fourier_power(subset, 1)
    }

    /// `F^p` within the subset; `p = 3` is the inverse transform.
    pub fn apply_fourier_power(&mut self, subset: &LevelSubset, power: u32) -> Result<(), StateError> {
        if power.is_multiple_of(4) {
            return subset.check(self.radix(subset.subsystem)?);
        }
        self.apply_local(subset, &fourier_matrix(subset.len(), power))
    }

    /// `X^p|k⟩ = |k+p⟩`, `Z^p|k⟩ = ω^{pk}|k⟩` with `d` the subsystem radix.
    pub fn apply_pauli_power(&mut self, sub: usize, kind: PauliKind, power: i64) -> Result<(), StateError> {
        let d = self.radix(sub)?;
        let p = power.rem_euclid(d as i64) as usize;
        if p == 0 {
            return Ok(());
        }
        let inner = self.stride(sub);
        let block = d * inner;
        match kind {
            PauliKind::Z => {
                let phases: Vec<Complex64> = (0..d).map(|k| omega(d, (p * k) as i64)).collect();
                let run = |chunk: &mut [Complex64]| {
                    for (l, ph) in phases.iter().enumerate() {
                        chunk[l * inner..(l + 1) * inner].iter_mut().for_each(|a| *a *= ph);
                    }
                };
                if self.dim() >= PAR_MIN {
                    self.amplitudes.par_chunks_mut(block).for_each(run);
                } else {
                    self.amplitudes.chunks_mut(block).for_each(run);
                }
            }
            PauliKind::X => {
                // shifting the level digit by p rotates each block by p·inner
                let run = |chunk: &mut [Complex64]| chunk.rotate_right(p * inner);
                if self.dim() >= PAR_MIN {
                    self.amplitudes.par_chunks_mut(block).for_each(run);
                } else {
                    self.amplitudes.chunks_mut(block).for_each(run);
                }
            }
        }
        Ok(())
    }

    /// Swaps levels `a` and `b` of `sub`.
    pub fn apply_permutation(&mut self, sub: usize, a: usize, b: usize) -> Result<(), StateError> {
        let r = self.check_level(sub, a)?;
        self.check_level(sub, b)?;
        if a == b {
            return Ok(());
        }
        let inner = self.stride(sub);
        let (lo, hi) = (a.min(b), a.max(b));
        for chunk in self.amplitudes.chunks_mut(r * inner) {
            let (left, right) = chunk.split_at_mut(hi * inner);
            left[lo * inner..(lo + 1) * inner].swap_with_slice(&mut right[..inner]);
        }
        Ok(())
    }

    /// Flips the electron `target` on branches where `control.0` is in level
    /// `control.1`.
    pub fn apply_conditional_flip(&mut self, control: (usize, usize), target: usize) -> Result<(), StateError> {
        let (csub, clevel) = control;
        if csub == target {
            return Err(StateError::ControlIsTarget(target));
        }
        let cr = self.check_level(csub, clevel)?;
        if self.radix(target)? != 2 || self.roles[target] != Role::Electron {
            return Err(StateError::NotElectron(target));
        }
        let cs = self.stride(csub);
        let ts = self.stride(target);
        for k in 0..self.dim() {
            if (k / cs) % cr == clevel && (k / ts).is_multiple_of(2) {
                self.amplitudes.swap(k, k + ts);
            }
        }
        Ok(())
    }

    fn check_open_photon(&self, photon: usize, bin: usize) -> Result<usize, StateError> {
        let r = self.radix(photon)?;
        if self.roles[photon] != Role::Photon || r < 2 {
            return Err(StateError::NotOpenPhoton(photon));
        }
        let vac = r - 1;
        if bin >= vac {
            return Err(StateError::LevelOutOfRange { subsystem: photon, level: bin, radix: vac });
        }
        Ok(vac)
    }

    /// Cavity exchange: `|↑⟩|vac⟩ → |↓⟩|bin⟩` on the photon, identity on
    /// branches with the electron down. Fails if a branch that would emit has
    /// the photon already populated, or if `bin` is already in use.
    pub fn emit(&mut self, electron: usize, photon: usize, bin: usize) -> Result<(), StateError> {
        if self.radix(electron)? != 2 || self.roles[electron] != Role::Electron {
            return Err(StateError::NotElectron(electron));
        }
        let vac = self.check_open_photon(photon, bin)?;
        let r = vac + 1;
        let es = self.stride(electron);
        let ps = self.stride(photon);
        let eps2 = AMPLITUDE_EPS * AMPLITUDE_EPS;
        for (k, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() <= eps2 {
                continue;
            }
            let e = (k / es) % 2;
            let p = (k / ps) % r;
            if (e == 1 && p != vac) || (e == 0 && p == bin) {
                return Err(StateError::BinOccupied { photon, bin });
            }
        }
        for k in 0..self.dim() {
            if (k / es) % 2 == 1 && (k / ps) % r == vac {
                // partner: electron down, photon in `bin`
                let partner = k - es - (vac - bin) * ps;
                self.amplitudes.swap(k, partner);
            }
        }
        Ok(())
    }

    /// Conditional excitation on `(nucleus, emission_level)` followed by the
    /// cavity exchange into `bin`. Requires the electron down everywhere.
    pub fn emit_photon_cycle(
        &mut self,
        nucleus: usize,
        emission_level: usize,
        electron: usize,
        photon: usize,
        bin: usize,
    ) -> Result<(), StateError> {
        let up = self.level_weight(electron, 1);
        if up > AMPLITUDE_EPS {
            return Err(StateError::ElectronNotReset(up));
        }
        self.apply_conditional_flip((nucleus, emission_level), electron)?;
        if let Err(e) = self.emit(electron, photon, bin) {
            // the flip is an involution; undo it so a refused cycle leaves no trace
            self.apply_conditional_flip((nucleus, emission_level), electron)?;
            return Err(e);
        }
        Ok(())
    }

    /// Multiplies `|k⟩_i|l⟩_j` by `ω^{w·k·l}`.
    pub fn apply_cz_power(&mut self, i: usize, j: usize, weight: i64) -> Result<(), StateError> {
        let di = self.radix(i)?;
        let dj = self.radix(j)?;
        if di != dj || i == j {
            return Err(StateError::DimensionMismatch { i, j, di, dj });
        }
        let d = di;
        let w = weight.rem_euclid(d as i64) as usize;
        if w == 0 {
            return Ok(());
        }
        let table: Vec<Complex64> = (0..d).map(|m| omega(d, m as i64)).collect();
        let si = self.stride(i);
        let sj = self.stride(j);
        let f = |(k, a): (usize, &mut Complex64)| {
            let m = (w * ((k / si) % d) * ((k / sj) % d)) % d;
            if m != 0 {
                *a *= table[m];
            }
        };
        if self.dim() >= PAR_MIN {
            self.amplitudes.par_iter_mut().enumerate().for_each(f);
        } else {
            self.amplitudes.iter_mut().enumerate().for_each(f);
        }
        Ok(())
    }
}
