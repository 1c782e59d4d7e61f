use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_graph_state, check_register, GraphError, GraphSpec};
use crate::statevec::{LevelSubset, PauliKind, Register};

/// Largest `‖S_v ψ − ψ‖₂` accepted as a pass.
pub const STABILIZER_TOLERANCE: f64 = 1e-10;

/// Eigenvalues whose modulus falls short of one by more than this are taken
/// to mean the state is not an `S_v` eigenvector.
const EIGEN_MODULUS_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizerReport {
    pub n: usize,
    pub d: u32,
    /// `‖S_v ψ − ψ‖₂` per vertex.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub failing: Vec<usize>,
    pub pass: bool,
}

/// Per-vertex `X^x Z^z F^f` (F applied first), plus the global phase that
/// maps the corrected state onto `|G⟩` when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSet {
    /// `(x_power, z_power)` per vertex.
    pub ops: Vec<(u32, u32)>,
    pub fourier_powers: Vec<u32>,
    pub global_phase: Option<[f64; 2]>,
}

impl CorrectionSet {
    pub fn identity(n: usize) -> Self {
        Self { ops: vec![(0, 0); n], fourier_powers: vec![0; n], global_phase: None }
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&(x, z)| x == 0 && z == 0) && self.fourier_powers.iter().all(|&f| f == 0)
    }

    /// Search depth needed to express this correction.
    pub fn depth(&self) -> u8 {
        if self.fourier_powers.iter().any(|&f| f != 0) {
            2
        } else {
            1
        }
    }
}

fn omega(d: usize, m: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (m % d) as f64 / d as f64)
}

/// `S_v ψ` with `S_v = X_v ∏_w Z_w^{A_vw}`: `(S_v ψ)(x) = ω^{Σ_w A_vw x_w} ψ(x − e_v)`.
fn apply_stabilizer(r: &Register, g: &GraphSpec, v: usize) -> Vec<Complex64> {
    let d = g.d() as usize;
    let n = g.n();
    let strides: Vec<usize> = (0..n).map(|s| r.stride(s)).collect();
    let nbrs: Vec<(usize, usize)> = (0..n).filter(|&w| g.weight(v, w) != 0).map(|w| (w, g.weight(v, w) as usize)).collect();
    let amps = r.amplitudes();
    let sv = strides[v];
    (0..amps.len())
        .into_par_iter()
        .map(|k| {
            let xv = (k / sv) % d;
            let src = if xv == 0 { k + (d - 1) * sv } else { k - sv };
            let m: usize = nbrs.iter().map(|&(w, a)| a * ((k / strides[w]) % d)).sum();
            amps[src] * omega(d, m)
        })
        .collect()
}

/// `⟨ψ|S_v|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn stabilizer_eigenvalue(r: &Register, g: &GraphSpec, v: usize) -> Result<Complex64, GraphError> {
    check_register(r, g)?;
    let s = apply_stabilizer(r, g, v);
    let num: Complex64 = r.amplitudes().par_iter().zip(&s).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = r.amplitudes().iter().map(|a| a.norm_sqr()).sum();
    Ok(num / den)
}

pub fn stabilizer_verify(r: &Register, g: &GraphSpec) -> Result<StabilizerReport, GraphError> {
    check_register(r, g)?;
    let deviations: Vec<f64> = (0..g.n())
        .map(|v| {
            let s = apply_stabilizer(r, g, v);
            s.par_iter().zip(r.amplitudes()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        })
        .collect();
    let failing: Vec<usize> = (0..g.n()).filter(|&v| !(deviations[v] <= STABILIZER_TOLERANCE)).collect();
    Ok(StabilizerReport {
        n: g.n(),
        d: g.d(),
        max_deviation: deviations.iter().copied().fold(0.0, f64::max),
        tolerance: STABILIZER_TOLERANCE,
        pass: failing.is_empty(),
        failing,
        deviations,
    })
}

fn apply_frame(r: &Register, frame: &[u32]) -> Result<Register, GraphError> {
    let mut out = r.clone();
    for (v, &f) in frame.iter().enumerate() {
        if f % 4 != 0 {
            let d = out.radix(v)?;
            out.apply_fourier_power(&LevelSubset::first(v, d), f)?;
        }
    }
    Ok(out)
}

/// `⊗_v X^{x_v} Z^{z_v} F^{f_v} ψ`.
pub fn apply_correction(r: &Register, c: &CorrectionSet) -> Result<Register, GraphError> {
    if c.ops.len() != r.num_subsystems() || c.fourier_powers.len() != r.num_subsystems() {
        return Err(GraphError::RegisterMismatch(format!(
            "correction for {} vertices on {} subsystems",
            c.ops.len(),
            r.num_subsystems()
        )));
    }
    let mut out = apply_frame(r, &c.fourier_powers)?;
    for (v, &(x, z)) in c.ops.iter().enumerate() {
        out.apply_pauli_power(v, PauliKind::Z, z as i64)?;
        out.apply_pauli_power(v, PauliKind::X, x as i64)?;
    }
    Ok(out)
}

/// Pauli part for a fixed frame: with `λ_v = ω^{c_v}` the eigenvalues of
/// `S_v` on the framed state, `C = ⊗ X^{a_v} Z^{b_v}` works iff
/// `b_v ≡ c_v + Σ_w A_vw a_w`. The lexicographically first solution over
/// `(a_0, b_0, a_1, b_1, ...)` has every `a_v = 0`.
fn pauli_for_frame(framed: &Register, g: &GraphSpec) -> Option<Vec<(u32, u32)>> {
    let d = g.d() as usize;
    let mut ops = Vec::with_capacity(g.n());
    for v in 0..g.n() {
        let lam = stabilizer_eigenvalue(framed, g, v).ok()?;
        if (lam.norm() - 1.0).abs() > EIGEN_MODULUS_SLACK {
            return None;
        }
        let c = (lam.arg() * d as f64 / (2.0 * PI)).round().rem_euclid(d as f64) as usize % d;
        if (lam - omega(d, c)).norm() > EIGEN_MODULUS_SLACK.sqrt() {
            return None;
        }
        ops.push((0, c as u32));
    }
    Some(ops)
}

fn try_frame(r: &Register, g: &GraphSpec, frame: &[u32]) -> Option<CorrectionSet> {
    let framed = apply_frame(r, frame).ok()?;
    let ops = pauli_for_frame(&framed, g)?;
    let mut c = CorrectionSet { ops, fourier_powers: frame.to_vec(), global_phase: None };
    let fixed = apply_correction(r, &c).ok()?;
    if !stabilizer_verify(&fixed, g).ok()?.pass {
        return None;
    }
    let target = build_graph_state(g).ok()?;
    let ip = fixed.inner(&target).ok()?;
    if ip.norm() > 0.0 {
        let ph = ip / ip.norm();
        c.global_phase = Some([ph.re, ph.im]);
    }
    Some(c)
}

/// Finds a local correction under which `r` passes stabilizer verification
/// against `g`. Depth 1 searches Pauli products only; depth 2 also tries every
/// per-vertex Fourier power frame, in lexicographic order with vertex 0 most
/// significant. The first success in that order is returned.
pub fn local_correction_search(r: &Register, g: &GraphSpec, depth: u8) -> Result<Option<CorrectionSet>, GraphError> {
    check_register(r, g)?;
    let n = g.n();
    if let Some(c) = try_frame(r, g, &vec![0; n]) {
        return Ok(Some(c));
    }
    if depth < 2 {
        return Ok(None);
    }
    let frames = 4usize.pow(n as u32);
    let decode = |mut k: usize| {
        let mut f = vec![0u32; n];
        for v in (0..n).rev() {
            f[v] = (k % 4) as u32;
            k /= 4;
        }
        f
    };
    Ok((1..frames).into_par_iter().find_map_first(|k| try_frame(r, g, &decode(k))))
}
