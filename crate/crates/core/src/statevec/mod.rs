//! Dense mixed-radix state vectors.
//!
//! Subsystems are ordered big-endian: the first subsystem is the most
//! significant digit of the flat amplitude index. Photons are qudits whose
//! level `k` means "photon in time bin k"; while a photon is still being
//! emitted it carries one extra level (the last) standing for the vacuum.

mod encoding;
mod gates;
mod measure;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encoding::{two_bin_qubit_string, bin_string, parse_two_bin_qubit, parse_bin_string};
pub use gates::{fourier_matrix, PauliKind};
pub use measure::{MeasurementRecord, Outcome};

/// Default upper bound on the number of stored amplitudes.
pub const DEFAULT_AMPLITUDE_CAP: usize = 1 << 25;

/// Norm drift tolerated after any operation.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Amplitudes smaller than this are treated as structural zeros by the
/// precondition checks.
pub const AMPLITUDE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("subsystem {0} does not exist")]
    NoSuchSubsystem(usize),
    #[error("level {level} out of range for subsystem {subsystem} of radix {radix}")]
    LevelOutOfRange { subsystem: usize, level: usize, radix: usize },
    #[error("basis index has {got} digits, register has {expected} subsystems")]
    WrongArity { expected: usize, got: usize },
    #[error("radix must be at least 1")]
    ZeroRadix,
    #[error("levels {0:?} are not distinct")]
    RepeatedLevels(Vec<usize>),
    #[error("register would hold {requested} amplitudes, cap is {cap}")]
    CapExceeded { requested: usize, cap: usize },
    #[error("subsystems {i} and {j} have radices {di} and {dj}")]
    DimensionMismatch { i: usize, j: usize, di: usize, dj: usize },
    #[error("control and target are both subsystem {0}")]
    ControlIsTarget(usize),
    #[error("subsystem {0} is not an electron")]
    NotElectron(usize),
    #[error("subsystem {0} is not an open photon")]
    NotOpenPhoton(usize),
    #[error("photon {photon} bin {bin} already populated on an emitting branch")]
    BinOccupied { photon: usize, bin: usize },
    #[error("electron is not in the down state on every branch (weight {0:e} up)")]
    ElectronNotReset(f64),
    #[error("photon {0} still has vacuum weight {1:e}")]
    PhotonStillOpen(usize, f64),
    #[error("outcome {level} on subsystem {subsystem} has zero probability")]
    ZeroProbability { subsystem: usize, level: usize },
    #[error("subsystem {0} is not in a definite level")]
    NotDefinite(usize),
    #[error("malformed bin string {0:?}")]
    MalformedBinString(String),
    #[error("amplitude vector has length {got}, radices imply {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// What a subsystem physically is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    DonorNucleus,
    Electron,
    Photon,
    /// Abstract graph-state vertex.
    Qudit,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::DonorNucleus => "donor-nucleus",
            Role::Electron => "electron",
            Role::Photon => "photon",
            Role::Qudit => "qudit",
        })
    }
}

/// `d` chosen levels of one subsystem, in qudit order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSubset {
    pub subsystem: usize,
    pub levels: Vec<usize>,
}

impl LevelSubset {
    pub fn new(subsystem: usize, levels: Vec<usize>) -> Self {
        Self { subsystem, levels }
    }

    /// Levels `0..d`.
    pub fn first(subsystem: usize, d: usize) -> Self {
        Self { subsystem, levels: (0..d).collect() }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    fn check(&self, radix: usize) -> Result<(), StateError> {
        for &l in &self.levels {
            if l >= radix {
                return Err(StateError::LevelOutOfRange { subsystem: self.subsystem, level: l, radix });
            }
        }
        let mut sorted = self.levels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.levels.len() {
            return Err(StateError::RepeatedLevels(self.levels.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Register {
    radices: Vec<usize>,
    roles: Vec<Role>,
    amplitudes: Vec<Complex64>,
    cap: usize,
}

/// JSON form: `{radices, labels, amplitudes: [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterDump {
    pub radices: Vec<usize>,
    pub labels: Vec<Role>,
    pub amplitudes: Vec<[f64; 2]>,
}

fn checked_product(radices: &[usize], cap: usize) -> Result<usize, StateError> {
    let mut n: usize = 1;
    for &r in radices {
        if r == 0 {
            return Err(StateError::ZeroRadix);
        }
        n = n.checked_mul(r).ok_or(StateError::CapExceeded { requested: usize::MAX, cap })?;
    }
    if n > cap {
        return Err(StateError::CapExceeded { requested: n, cap });
    }
    Ok(n)
}

/// Unit amplitude on the product basis state `index`.
pub fn init_register(radices: &[usize], roles: &[Role], index: &[usize]) -> Result<Register, StateError> {
    Register::basis_state(radices, roles, index, DEFAULT_AMPLITUDE_CAP)
}

impl Register {
    pub fn basis_state(radices: &[usize], roles: &[Role], index: &[usize], cap: usize) -> Result<Self, StateError> {
        if roles.len() != radices.len() {
            return Err(StateError::WrongArity { expected: radices.len(), got: roles.len() });
        }
        let n = checked_product(radices, cap)?;
        let mut r = Register { radices: radices.to_vec(), roles: roles.to_vec(), amplitudes: vec![Complex64::new(0.0, 0.0); n], cap };
        let k = r.flat_index(index)?;
        r.amplitudes[k] = Complex64::new(1.0, 0.0);
        Ok(r)
    }

    /// `n` qudits of dimension `d`, all in `|0⟩`.
    pub fn qudits(n: usize, d: usize) -> Result<Self, StateError> {
        Self::basis_state(&vec![d; n], &vec![Role::Qudit; n], &vec![0; n], DEFAULT_AMPLITUDE_CAP)
    }

    pub fn from_amplitudes(radices: &[usize], roles: &[Role], amplitudes: Vec<Complex64>) -> Result<Self, StateError> {
        if roles.len() != radices.len() {
            return Err(StateError::WrongArity { expected: radices.len(), got: roles.len() });
        }
        let n = checked_product(radices, DEFAULT_AMPLITUDE_CAP.max(amplitudes.len()))?;
        if n != amplitudes.len() {
            return Err(StateError::LengthMismatch { expected: n, got: amplitudes.len() });
        }
        Ok(Register { radices: radices.to_vec(), roles: roles.to_vec(), amplitudes, cap: DEFAULT_AMPLITUDE_CAP })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn num_subsystems(&self) -> usize {
        self.radices.len()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn radix(&self, sub: usize) -> Result<usize, StateError> {
        self.radices.get(sub).copied().ok_or(StateError::NoSuchSubsystem(sub))
    }

    /// Number of flat-index steps per unit of subsystem `sub`.
    pub fn stride(&self, sub: usize) -> usize {
        self.radices[sub + 1..].iter().product()
    }

    pub fn flat_index(&self, digits: &[usize]) -> Result<usize, StateError> {
        if digits.len() != self.radices.len() {
            return Err(StateError::WrongArity { expected: self.radices.len(), got: digits.len() });
        }
        let mut k = 0;
        for (s, (&x, &r)) in digits.iter().zip(&self.radices).enumerate() {
            if x >= r {
                return Err(StateError::LevelOutOfRange { subsystem: s, level: x, radix: r });
            }
            k = k * r + x;
        }
        Ok(k)
    }

    pub fn digits(&self, mut k: usize) -> Vec<usize> {
        let mut out = vec![0; self.radices.len()];
        for (s, &r) in self.radices.iter().enumerate().rev() {
            out[s] = k % r;
            k /= r;
        }
        out
    }

    pub fn amplitude(&self, digits: &[usize]) -> Result<Complex64, StateError> {
        Ok(self.amplitudes[self.flat_index(digits)?])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        }
    }

    /// `⟨self|other⟩`; registers must share radices.
    pub fn inner(&self, other: &Register) -> Result<Complex64, StateError> {
        if self.radices != other.radices {
            return Err(StateError::LengthMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²` for normalized registers.
    pub fn fidelity(&self, other: &Register) -> Result<f64, StateError> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Largest `|a - b|` after removing the best global phase and scale.
    pub fn distance_up_to_phase(&self, other: &Register) -> Result<f64, StateError> {
        let ip = self.inner(other)?;
        let nb = other.norm();
        let na = self.norm();
        if na == 0.0 || nb == 0.0 {
            return Ok(if na == nb { 0.0 } else { 1.0 });
        }
        // phase that rotates other onto self
        let phase = if ip.norm() > 0.0 { ip.conj() / ip.norm() } else { Complex64::new(1.0, 0.0) };
        let s = na / nb;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b * phase * s).norm())
            .fold(0.0, f64::max))
    }

    pub fn dump(&self) -> RegisterDump {
        RegisterDump {
            radices: self.radices.clone(),
            labels: self.roles.clone(),
            amplitudes: self.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
        }
    }

    pub fn from_dump(d: &RegisterDump) -> Result<Self, StateError> {
        let amps = d.amplitudes.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        Self::from_amplitudes(&d.radices, &d.labels, amps)
    }

    /// Appends a subsystem in level `level`.
    pub fn push_subsystem(&mut self, radix: usize, role: Role, level: usize) -> Result<usize, StateError> {
        if level >= radix {
            return Err(StateError::LevelOutOfRange { subsystem: self.radices.len(), level, radix });
        }
        let n = self.dim().checked_mul(radix).ok_or(StateError::CapExceeded { requested: usize::MAX, cap: self.cap })?;
        if n > self.cap {
            return Err(StateError::CapExceeded { requested: n, cap: self.cap });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); n];
        for (k, a) in self.amplitudes.iter().enumerate() {
            amps[k * radix + level] = *a;
        }
        self.amplitudes = amps;
        self.radices.push(radix);
        self.roles.push(role);
        Ok(self.radices.len() - 1)
    }

    /// Opens a photon of dimension `d` in the vacuum (stored as level `d`).
    pub fn open_photon(&mut self, d: usize) -> Result<usize, StateError> {
        self.push_subsystem(d + 1, Role::Photon, d)
    }

    pub fn is_open_photon(&self, sub: usize) -> bool {
        self.roles.get(sub) == Some(&Role::Photon) && self.radices[sub] >= 2 && {
            let vac = self.radices[sub] - 1;
            self.level_weight(sub, vac) > AMPLITUDE_EPS * AMPLITUDE_EPS
        }
    }

    /// Total probability of `level` on `sub`.
    pub fn level_weight(&self, sub: usize, level: usize) -> f64 {
        let r = self.radices[sub];
        let stride = self.stride(sub);
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(k, _)| (k / stride) % r == level)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Drops the vacuum level of a fully emitted photon.
    pub fn close_photon(&mut self, sub: usize) -> Result<(), StateError> {
        let r = self.radix(sub)?;
        if self.roles[sub] != Role::Photon || r < 2 {
            return Err(StateError::NotOpenPhoton(sub));
        }
        let w = self.level_weight(sub, r - 1);
        if w > NORM_TOLERANCE {
            return Err(StateError::PhotonStillOpen(sub, w));
        }
        let keep: Vec<usize> = (0..r - 1).collect();
        self.restrict_levels(sub, &keep);
        Ok(())
    }

    /// Keeps only the listed levels of `sub` (renumbered in order) and drops
    /// the rest of the amplitude without renormalizing.
    fn restrict_levels(&mut self, sub: usize, keep: &[usize]) {
        let r = self.radices[sub];
        let inner = self.stride(sub);
        let outer = self.dim() / (r * inner);
        let nr = keep.len();
        let mut amps = Vec::with_capacity(outer * nr * inner);
        for o in 0..outer {
            for &l in keep {
                let base = (o * r + l) * inner;
                amps.extend_from_slice(&self.amplitudes[base..base + inner]);
            }
        }
        self.amplitudes = amps;
        self.radices[sub] = nr;
    }

    /// Removes a subsystem that sits in a single definite level.
    pub fn remove_definite(&mut self, sub: usize) -> Result<usize, StateError> {
        let r = self.radix(sub)?;
        let total: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        let level = (0..r)
            .find(|&l| (self.level_weight(sub, l) - total).abs() <= NORM_TOLERANCE * total.max(1.0))
            .ok_or(StateError::NotDefinite(sub))?;
        self.restrict_levels(sub, &[level]);
        self.radices.remove(sub);
        self.roles.remove(sub);
        Ok(level)
    }

    /// Moves subsystems into `order` (a permutation of `0..n`), so that the
    /// new subsystem `i` is the old subsystem `order[i]`.
    pub fn permute_subsystems(&self, order: &[usize]) -> Result<Register, StateError> {
        let n = self.radices.len();
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(StateError::WrongArity { expected: n, got: order.len() });
        }
        for &o in order {
            if o >= n || seen[o] {
                return Err(StateError::NoSuchSubsystem(o));
            }
            seen[o] = true;
        }
        let radices: Vec<usize> = order.iter().map(|&o| self.radices[o]).collect();
        let roles: Vec<Role> = order.iter().map(|&o| self.roles[o]).collect();
        let mut out =
            Register { radices, roles, amplitudes: vec![Complex64::new(0.0, 0.0); self.dim()], cap: self.cap };
        let mut new_digits = vec![0; n];
        for (k, a) in self.amplitudes.iter().enumerate() {
            let old = self.digits(k);
            for (i, &o) in order.iter().enumerate() {
                new_digits[i] = old[o];
            }
            let nk = out.flat_index(&new_digits).expect("digits in range");
            out.amplitudes[nk] = *a;
        }
        Ok(out)
    }

    pub(crate) fn check_level(&self, sub: usize, level: usize) -> Result<usize, StateError> {
        let r = self.radix(sub)?;
        if level >= r {
            return Err(StateError::LevelOutOfRange { subsystem: sub, level, radix: r });
        }
        Ok(r)
    }
}
