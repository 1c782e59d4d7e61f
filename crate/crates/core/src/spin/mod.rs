//! Spin Hamiltonians of the neutral antimony donor (electron + one spin-7/2
//! nucleus, 16 levels) and of the Sb₂⁺ molecule (one electron shared by two
//! nuclei, 128 levels).
//!
//! All matrix entries are frequencies in MHz (h = 1). Parameter structs keep
//! the units of the literature values they carry (GHz/T, kHz, ...) and are
//! converted on construction.
//!
//! The quadrupole interaction is reduced to an axial term aligned with the
//! static field, `H_Q = -(f_q / 2) I_z²`. With this normalisation the
//! first-order EDSR frequency of `|m, ↓⟩ ↔ |m-1, ↑⟩` is
//! `B0 (γ_n + γ_e) + (m - 1/2)(A + f_q)`, which is what
//! [`edsr_frequency_closed_form`] evaluates.

mod spectrum;
mod sweep;
mod transitions;

pub use spectrum::{spectrum, spectrum_with_threshold, SpectrumResult, LABEL_DOMINANCE_MIN};
pub use sweep::{default_perturbations, sensitivity_sweep, Delta, Perturbation, SpinParameter, SweepRow, sweep_to_csv};
pub use transitions::{
    edsr_comparison, edsr_frequency_closed_form, enumerate_transitions, EdsrCheck, SpectatorConvention,
    Spectators, Transition, TransitionKind, TransitionList, EDSR_CAVITY_REFERENCE_MHZ,
};

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative hermiticity tolerance used when wrapping a matrix.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpinError {
    #[error("nuclear spin I = {0} is not one of 1/2, 3/2, 5/2, 7/2, 9/2")]
    InvalidNuclearSpin(f64),
    #[error("parameter `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix dimension {matrix} does not match basis size {basis}")]
    BasisMismatch { matrix: usize, basis: usize },
    #[error("eigenstates {first} and {second} both claim label {label}")]
    AmbiguousLabel { label: String, first: usize, second: usize },
    #[error("eigenstate {index} has dominant weight {weight:.4} below {threshold}")]
    WeakDominance { index: usize, weight: f64, threshold: f64 },
    #[error("m_I = {0} has no EDSR partner for this nuclear spin")]
    ProjectionOutOfRange(String),
    #[error("unknown transition kind `{0}`")]
    UnknownKind(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameter `{0}` does not apply to this device")]
    ParameterNotApplicable(String),
    #[error("spectator convention refers to nucleus {0}, but the device has {1}")]
    BadSpectator(usize, usize),
}

/// A spin projection stored as twice its value, so 7/2 is `HalfInt(7)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfInt(pub i32);

impl HalfInt {
    pub fn from_f64(value: f64) -> Option<Self> {
        let twice = 2.0 * value;
        (twice.fract() == 0.0 && twice.is_finite()).then_some(HalfInt(twice as i32))
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { '-' } else { '+' };
        if self.0 % 2 == 0 {
            write!(f, "{sign}{}", self.0.abs() / 2)
        } else {
            write!(f, "{sign}{}/2", self.0.abs())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElectronSpin {
    Down,
    Up,
}

impl ElectronSpin {
    pub fn flipped(self) -> Self {
        match self {
            ElectronSpin::Down => ElectronSpin::Up,
            ElectronSpin::Up => ElectronSpin::Down,
        }
    }
}

/// A product-basis label: nuclear projections (strong nucleus first for the
/// molecule) and the electron orientation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProductLabel {
    pub nuclear: Vec<HalfInt>,
    pub electron: ElectronSpin,
}

impl fmt::Display for ProductLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for m in &self.nuclear {
            write!(f, "{m},")?;
        }
        let arrow = match self.electron {
            ElectronSpin::Down => '↓',
            ElectronSpin::Up => '↑',
        };
        write!(f, "{arrow}⟩")
    }
}

/// Ordered product basis `electron ⊗ nucleus_0 ⊗ nucleus_1 ...`; nuclear
/// projections run from `+I` down to `-I`, the electron from ↓ to ↑.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductBasis {
    two_i: Vec<i32>,
    labels: Vec<ProductLabel>,
}

impl ProductBasis {
    pub fn new(two_i: &[i32]) -> Self {
        let dims: Vec<usize> = two_i.iter().map(|&t| (t + 1) as usize).collect();
        let nuclear_states: usize = dims.iter().product();
        let mut labels = Vec::with_capacity(2 * nuclear_states);
        for electron in [ElectronSpin::Down, ElectronSpin::Up] {
            for flat in 0..nuclear_states {
                let mut rest = flat;
                let mut nuclear = vec![HalfInt(0); dims.len()];
                for k in (0..dims.len()).rev() {
                    nuclear[k] = HalfInt(two_i[k] - 2 * (rest % dims[k]) as i32);
                    rest /= dims[k];
                }
                labels.push(ProductLabel { nuclear, electron });
            }
        }
        Self { two_i: two_i.to_vec(), labels }
    }

    /// Basis where every label is its own entry; handy for wrapping arbitrary matrices.
    pub fn from_labels(labels: Vec<ProductLabel>) -> Self {
        let two_i = labels
            .first()
            .map(|l| l.nuclear.iter().map(|m| m.0.abs()).collect())
            .unwrap_or_default();
        Self { two_i, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[ProductLabel] {
        &self.labels
    }

    pub fn nuclear_spins(&self) -> &[i32] {
        &self.two_i
    }
}

/// Hermitian matrix together with the product basis its rows refer to.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    matrix: DMatrix<Complex64>,
    basis: ProductBasis,
}

impl HermitianMatrix {
    pub fn new(matrix: DMatrix<Complex64>, basis: ProductBasis) -> Result<Self, SpinError> {
        if matrix.nrows() != basis.len() || matrix.ncols() != basis.len() {
            return Err(SpinError::BasisMismatch { matrix: matrix.nrows(), basis: basis.len() });
        }
        let out = Self { matrix, basis };
        let scale = out.max_abs().max(f64::MIN_POSITIVE);
        let dev = out.hermitian_deviation();
        if dev > HERMITIAN_TOLERANCE * scale {
            return Err(SpinError::NotHermitian(dev));
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn basis(&self) -> &ProductBasis {
        &self.basis
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |H - H†|` over all entries.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                dev = dev.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }
}

fn default_nuclear_spin() -> f64 {
    3.5
}

/// Physical constants of a single neutral donor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinParams {
    /// Nuclear gyromagnetic ratio, MHz/T.
    pub gamma_n: f64,
    /// Electron gyromagnetic ratio, GHz/T.
    pub gamma_e: f64,
    /// Contact hyperfine coupling, MHz.
    #[serde(rename = "A")]
    pub a: f64,
    /// Static field, T.
    #[serde(rename = "B0")]
    pub b0: f64,
    /// Axial quadrupole splitting, kHz.
    pub f_q: f64,
    /// Nuclear spin.
    #[serde(rename = "I", default = "default_nuclear_spin")]
    pub nuclear_spin: f64,
}

impl Default for SpinParams {
    /// ¹²³Sb in bulk silicon at 1 T. The single-donor quadrupole splitting is
    /// not quoted; the strong-nucleus value of the molecule (44.3 kHz) stands in.
    fn default() -> Self {
        Self { gamma_n: 5.55, gamma_e: 27.97, a: 101.52, b0: 1.0, f_q: 44.3, nuclear_spin: 3.5 }
    }
}

impl SpinParams {
    /// `2I`, validated to be one of the supported half-integer spins.
    pub fn two_i(&self) -> Result<i32, SpinError> {
        match HalfInt::from_f64(self.nuclear_spin) {
            Some(HalfInt(t)) if matches!(t, 1 | 3 | 5 | 7 | 9) => Ok(t),
            _ => Err(SpinError::InvalidNuclearSpin(self.nuclear_spin)),
        }
    }

    pub fn validate(&self) -> Result<(), SpinError> {
        for (name, v) in [
            ("gamma_n", self.gamma_n),
            ("gamma_e", self.gamma_e),
            ("A", self.a),
            ("B0", self.b0),
            ("f_q", self.f_q),
        ] {
            if !v.is_finite() {
                return Err(SpinError::NonFinite(name));
            }
        }
        self.two_i().map(|_| ())
    }

    /// Electron Zeeman energy in MHz.
    pub fn electron_zeeman_mhz(&self) -> f64 {
        self.gamma_e * 1e3 * self.b0
    }

    /// `γ_e B0 > A > f_q`, the ordering under which eigenstates are near product states.
    pub fn is_secular(&self) -> bool {
        let fq = self.f_q * 1e-3;
        self.electron_zeeman_mhz().abs() > self.a.abs() && self.a.abs() > fq.abs()
    }
}

/// Constants of the Sb₂⁺ molecule. `base` supplies gyromagnetic ratios, field
/// and nuclear spin; its `A` and `f_q` are not used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleSpinParams {
    pub base: SpinParams,
    /// Weak hyperfine coupling, kHz.
    #[serde(rename = "A_w")]
    pub a_w: f64,
    /// Strong hyperfine coupling, MHz.
    #[serde(rename = "A_s")]
    pub a_s: f64,
    /// Weak-nucleus quadrupole splitting, kHz.
    pub f_q_w: f64,
    /// Strong-nucleus quadrupole splitting, kHz.
    pub f_q_s: f64,
}

impl Default for DoubleSpinParams {
    fn default() -> Self {
        Self { base: SpinParams::default(), a_w: 239.0, a_s: 96.0, f_q_w: 35.6, f_q_s: 44.3 }
    }
}

impl DoubleSpinParams {
    pub fn validate(&self) -> Result<(), SpinError> {
        self.base.validate()?;
        for (name, v) in [("A_w", self.a_w), ("A_s", self.a_s), ("f_q_w", self.f_q_w), ("f_q_s", self.f_q_s)] {
            if !v.is_finite() {
                return Err(SpinError::NonFinite(name));
            }
        }
        Ok(())
    }

    /// The strong coupling exceeds the weak one (compared in common units).
    pub fn is_ordered(&self) -> bool {
        self.a_s > self.a_w * 1e-3
    }
}

/// Spin-j operators (Jz, J+) in the basis `m = +j, j-1, ..., -j`.
fn spin_ops(two_j: i32) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = (two_j + 1) as usize;
    let j = f64::from(two_j) / 2.0;
    let mut jz = DMatrix::zeros(n, n);
    let mut jp = DMatrix::zeros(n, n);
    for k in 0..n {
        let m = j - k as f64;
        jz[(k, k)] = Complex64::new(m, 0.0);
        if k > 0 {
            // J+ |m⟩ = sqrt(j(j+1) - m(m+1)) |m+1⟩; |m+1⟩ sits at index k-1
            jp[(k - 1, k)] = Complex64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    (jz, jp)
}

/// Electron operators in the order ↓, ↑.
fn electron_ops() -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let mut sz = DMatrix::zeros(2, 2);
    sz[(0, 0)] = Complex64::new(-0.5, 0.0);
    sz[(1, 1)] = Complex64::new(0.5, 0.0);
    let mut sp = DMatrix::zeros(2, 2);
    sp[(1, 0)] = Complex64::new(1.0, 0.0);
    (sz, sp)
}

fn kron_all(factors: &[&DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let mut out = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for f in factors {
        out = out.kronecker(*f);
    }
    out
}

fn adjoint(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    m.adjoint()
}

/// Embeds an operator on slot `slot` of `electron ⊗ nuclei`.
fn embed(op: &DMatrix<Complex64>, slot: usize, dims: &[usize]) -> DMatrix<Complex64> {
    let ids: Vec<DMatrix<Complex64>> = dims.iter().map(|&d| DMatrix::identity(d, d)).collect();
    let factors: Vec<&DMatrix<Complex64>> =
        (0..dims.len()).map(|k| if k == slot { op } else { &ids[k] }).collect();
    kron_all(&factors)
}

struct NuclearTerm {
    two_i: i32,
    hyperfine_mhz: f64,
    quadrupole_mhz: f64,
}

fn build(b0: f64, gamma_n: f64, gamma_e_mhz: f64, nuclei: &[NuclearTerm]) -> Result<HermitianMatrix, SpinError> {
    let mut dims = vec![2usize];
    dims.extend(nuclei.iter().map(|n| (n.two_i + 1) as usize));
    let total: usize = dims.iter().product();

    let (sz, sp) = electron_ops();
    let sm = adjoint(&sp);
    let szf = embed(&sz, 0, &dims);
    let spf = embed(&sp, 0, &dims);
    let smf = embed(&sm, 0, &dims);

    let mut h = szf.scale(b0 * gamma_e_mhz);
    for (k, nuc) in nuclei.iter().enumerate() {
        let (iz, ip) = spin_ops(nuc.two_i);
        let im = adjoint(&ip);
        let izf = embed(&iz, k + 1, &dims);
        let ipf = embed(&ip, k + 1, &dims);
        let imf = embed(&im, k + 1, &dims);
        h -= izf.scale(b0 * gamma_n);
        // S·I = Sz Iz + (S+ I- + S- I+)/2
        let sdoti = &szf * &izf + (&spf * &imf + &smf * &ipf).scale(0.5);
        h += sdoti.scale(nuc.hyperfine_mhz);
        h -= (&izf * &izf).scale(nuc.quadrupole_mhz / 2.0);
    }
    debug_assert_eq!(h.nrows(), total);
    let two_i: Vec<i32> = nuclei.iter().map(|n| n.two_i).collect();
    HermitianMatrix::new(h, ProductBasis::new(&two_i))
}

/// 16-level Hamiltonian `B0(-γ_n I_z + γ_e S_z) + A S·I - (f_q/2) I_z²` for I = 7/2.
pub fn build_single_donor_hamiltonian(p: &SpinParams) -> Result<HermitianMatrix, SpinError> {
    p.validate()?;
    let two_i = p.two_i()?;
    build(
        p.b0,
        p.gamma_n,
        p.gamma_e * 1e3,
        &[NuclearTerm { two_i, hyperfine_mhz: p.a, quadrupole_mhz: p.f_q * 1e-3 }],
    )
}

/// 128-level Sb₂⁺ Hamiltonian over `electron ⊗ strong ⊗ weak`.
pub fn build_double_donor_hamiltonian(p: &DoubleSpinParams) -> Result<HermitianMatrix, SpinError> {
    p.validate()?;
    let two_i = p.base.two_i()?;
    build(
        p.base.b0,
        p.base.gamma_n,
        p.base.gamma_e * 1e3,
        &[
            NuclearTerm { two_i, hyperfine_mhz: p.a_s, quadrupole_mhz: p.f_q_s * 1e-3 },
            NuclearTerm { two_i, hyperfine_mhz: p.a_w * 1e-3, quadrupole_mhz: p.f_q_w * 1e-3 },
        ],
    )
}

/// Either device, for code paths that treat them uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Device {
    Single(SpinParams),
    Double(DoubleSpinParams),
}

impl Device {
    pub fn hamiltonian(&self) -> Result<HermitianMatrix, SpinError> {
        match self {
            Device::Single(p) => build_single_donor_hamiltonian(p),
            Device::Double(p) => build_double_donor_hamiltonian(p),
        }
    }

    pub fn nuclei(&self) -> usize {
        match self {
            Device::Single(_) => 1,
            Device::Double(_) => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_params() -> SpinParams {
        SpinParams { gamma_n: 0.0, gamma_e: 0.0, a: 0.0, b0: 1.0, f_q: 0.0, nuclear_spin: 3.5 }
    }

    #[test]
    fn single_donor_is_16_dimensional_and_hermitian() {
        let h = build_single_donor_hamiltonian(&SpinParams::default()).unwrap();
        assert_eq!(h.dim(), 16);
        assert!(h.hermitian_deviation() <= 1e-12 * h.max_abs());
    }

    #[test]
    fn double_donor_is_128_dimensional_and_hermitian() {
        let h = build_double_donor_hamiltonian(&DoubleSpinParams::default()).unwrap();
        assert_eq!(h.dim(), 128);
        assert!(h.hermitian_deviation() <= 1e-12 * h.max_abs());
    }

    #[test]
    fn couplings_off_give_zero_matrix() {
        assert!(build_single_donor_hamiltonian(&zero_params()).unwrap().is_zero());
        let p = SpinParams { b0: 0.0, a: 0.0, f_q: 0.0, ..SpinParams::default() };
        assert!(build_single_donor_hamiltonian(&p).unwrap().is_zero());
        let d = DoubleSpinParams {
            base: SpinParams { b0: 0.0, ..zero_params() },
            a_w: 0.0,
            a_s: 0.0,
            f_q_w: 0.0,
            f_q_s: 0.0,
        };
        assert!(build_double_donor_hamiltonian(&d).unwrap().is_zero());
    }

    #[test]
    fn pure_zeeman_gap_is_exact() {
        let p = SpinParams { a: 0.0, f_q: 0.0, ..SpinParams::default() };
        let h = build_single_donor_hamiltonian(&p).unwrap();
        let labels = h.basis().labels().to_vec();
        for (i, li) in labels.iter().enumerate() {
            if li.electron != ElectronSpin::Down {
                continue;
            }
            let j = labels
                .iter()
                .position(|l| l.electron == ElectronSpin::Up && l.nuclear == li.nuclear)
                .unwrap();
            let gap = h.matrix()[(j, j)].re - h.matrix()[(i, i)].re;
            assert_eq!(gap, 27_970.0);
        }
    }

    #[test]
    fn rejects_integer_and_unsupported_spins() {
        for bad in [1.0, 2.0, 0.3, 5.5] {
            let p = SpinParams { nuclear_spin: bad, ..SpinParams::default() };
            assert!(matches!(build_single_donor_hamiltonian(&p), Err(SpinError::InvalidNuclearSpin(_))));
        }
        let p = SpinParams { nuclear_spin: 1.5, ..SpinParams::default() };
        assert_eq!(build_single_donor_hamiltonian(&p).unwrap().dim(), 8);
    }

    #[test]
    fn basis_orders_projections_downward() {
        let b = ProductBasis::new(&[7]);
        assert_eq!(b.len(), 16);
        assert_eq!(b.labels()[0].to_string(), "|+7/2,↓⟩");
        assert_eq!(b.labels()[7].to_string(), "|-7/2,↓⟩");
        assert_eq!(b.labels()[8].to_string(), "|+7/2,↑⟩");
        let b2 = ProductBasis::new(&[7, 7]);
        assert_eq!(b2.len(), 128);
        assert_eq!(b2.labels()[1].to_string(), "|+7/2,+5/2,↓⟩");
    }

    #[test]
    fn params_round_trip_through_json_field_names() {
        let json = r#"{"gamma_n":5.55,"gamma_e":27.97,"A":101.52,"B0":1.0,"f_q":44.3,"I":3.5}"#;
        let p: SpinParams = serde_json::from_str(json).unwrap();
        assert_eq!(p, SpinParams::default());
        let d: DoubleSpinParams = serde_json::from_str(&serde_json::to_string(&DoubleSpinParams::default()).unwrap()).unwrap();
        assert_eq!(d, DoubleSpinParams::default());
        assert!(serde_json::to_string(&d).unwrap().contains("\"A_w\":239.0"));
    }

    #[test]
    fn secular_flag() {
        assert!(SpinParams::default().is_secular());
        assert!(!SpinParams { b0: 0.001, ..SpinParams::default() }.is_secular());
        assert!(DoubleSpinParams::default().is_ordered());
    }
}
