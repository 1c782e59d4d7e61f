use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ExecutionTrace, ProtocolError};
use crate::graph::{local_correction_search, stabilizer_verify, apply_correction, CorrectionSet, GraphSpec, StabilizerReport};
use crate::statevec::{MeasurementRecord, PauliKind, Register, Role};

/// Fidelity floor for the single-photon W check.
const W_FIDELITY_FLOOR: f64 = 1.0 - 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeVerification {
    pub records: Vec<MeasurementRecord>,
    pub probability: f64,
    /// `None` when no local correction up to the search depth works.
    pub correction: Option<CorrectionSet>,
    pub report: StabilizerReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub target: GraphSpec,
    pub layout: Vec<usize>,
    pub depth: u8,
    pub outcomes: Vec<OutcomeVerification>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Photonic state of each branch with photons reordered onto target vertices.
fn photons_on_vertices(trace: &ExecutionTrace, layout: &[usize]) -> Result<Vec<Register>, ProtocolError> {
    let mut order = vec![0; layout.len()];
    for (p, &v) in layout.iter().enumerate() {
        order[v] = p;
    }
    trace
        .branches
        .iter()
        .map(|b| Ok(b.photonic_state(trace.program.header.emitters)?.permute_subsystems(&order)?))
        .collect()
}

pub fn verify_against_target(trace: &ExecutionTrace, g: &GraphSpec) -> Result<VerificationReport, ProtocolError> {
    verify_with_depth(trace, g, 2)
}

/// Per donor outcome: search a local correction, apply it, and record the
/// stabilizer report. Without a correction the report is for the raw state.
pub fn verify_with_depth(trace: &ExecutionTrace, g: &GraphSpec, depth: u8) -> Result<VerificationReport, ProtocolError> {
    let h = &trace.program.header;
    if h.photons != g.n() {
        return Err(ProtocolError::PhotonCountMismatch { photons: h.photons, vertices: g.n() });
    }
    let layout = h.layout.clone().unwrap_or_else(|| (0..h.photons).collect());
    let states = photons_on_vertices(trace, &layout)?;
    let mut outcomes = Vec::with_capacity(states.len());
    for (b, r) in trace.branches.iter().zip(&states) {
        let correction = local_correction_search(r, g, depth)?;
        let report = match &correction {
            Some(c) => stabilizer_verify(&apply_correction(r, c)?, g)?,
            None => stabilizer_verify(r, g)?,
        };
        outcomes.push(OutcomeVerification { records: b.records.clone(), probability: b.probability, correction, report });
    }
    let pass = !outcomes.is_empty() && outcomes.iter().all(|o| o.correction.is_some() && o.report.pass);
    let mut notes = h.notes.clone();
    if !pass {
        let failed = outcomes.iter().filter(|o| !(o.correction.is_some() && o.report.pass)).count();
        notes.push(format!("{failed} of {} outcomes have no local correction at depth {depth}", outcomes.len()));
    }
    Ok(VerificationReport { target: g.clone(), layout, depth, outcomes, pass, notes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WStateCheck {
    /// `Z` power that best aligns the photon with the uniform W state.
    pub z_power: u32,
    pub fidelity: f64,
    pub pass: bool,
}

/// Compares a single `d`-bin photon with `Σ_k |k⟩/√d` under every diagonal
/// correction `Z^a`.
pub fn w_state_check(photon: &Register) -> Result<WStateCheck, ProtocolError> {
    if photon.num_subsystems() != 1 {
        return Err(ProtocolError::Malformed(format!("{} subsystems, expected one photon", photon.num_subsystems())));
    }
    let d = photon.radix(0)?;
    let w = Register::from_amplitudes(&[d], &[Role::Photon], vec![Complex64::new(1.0 / (d as f64).sqrt(), 0.0); d])?;
    let mut best = WStateCheck { z_power: 0, fidelity: -1.0, pass: false };
    for a in 0..d {
        let mut r = photon.clone();
        r.apply_pauli_power(0, PauliKind::Z, a as i64)?;
        let f = r.fidelity(&w)?;
        if f > best.fidelity + 1e-12 {
            best = WStateCheck { z_power: a as u32, fidelity: f, pass: f >= W_FIDELITY_FLOOR };
        }
    }
    Ok(best)
}
