//! Pulse-level emission programs and their execution.
//!
//! Register layout during execution: one radix-`d` nucleus per emitter, the
//! shared electron, then photons in the order they are first emitted into.
//! Nuclear level 0 is the emission level (`|7/2⟩`), level `k` the k-th
//! nuclear state below it.

mod compile;
mod execute;
mod verify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphError;
use crate::statevec::StateError;

pub use compile::{
    compile_ladder, compile_ladder_literal, compile_linear, compile_linear_with_cap, compile_single_photon,
    compile_six_ring, emission_block, LADDER_LAYOUT, MAX_DONOR_LEVELS, SIX_RING_LAYOUT,
};
pub use execute::{execute, execute_with, Branch, BranchDump, ExecuteOptions, ExecutionTrace, Mode, TraceDump};
pub use verify::{
    verify_against_target, verify_with_depth, w_state_check, OutcomeVerification, VerificationReport, WStateCheck,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("dimension {0} below 2")]
    DimensionTooSmall(usize),
    #[error("dimension {d} exceeds the {max} usable donor levels")]
    DimensionAboveLevels { d: usize, max: usize },
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("program needs {needed} emitters, configuration has {have}")]
    EmitterCount { needed: usize, have: usize },
    #[error("program has {photons} photons, target has {vertices} vertices")]
    PhotonCountMismatch { photons: usize, vertices: usize },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl ProtocolError {
    /// True when the failure is a resource limit rather than bad input.
    pub fn is_cap(&self) -> bool {
        matches!(
            self,
            ProtocolError::DimensionAboveLevels { .. }
                | ProtocolError::State(StateError::CapExceeded { .. })
                | ProtocolError::Graph(GraphError::State(StateError::CapExceeded { .. }))
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Instruction {
    /// Qudit Fourier across the listed nuclear levels.
    Fourier { emitter: usize, levels: Vec<usize> },
    /// Population swap between nuclear levels `a` and `b`.
    Permute { emitter: usize, a: usize, b: usize },
    /// Electron flip conditional on the nucleus being in `control`, driven
    /// electrically at the cavity transition.
    Edsr { emitter: usize, control: usize },
    /// Same flip driven magnetically.
    Esr { emitter: usize, control: usize },
    /// Cavity exchange into time bin `bin` of photon `photon`.
    Emit { emitter: usize, photon: usize, bin: usize },
    /// `CZ^weight` between two nuclei.
    Cz { a: usize, b: usize, weight: u32 },
    /// Projective readout of the nucleus.
    Measure { emitter: usize },
    /// Explicit wait on an emitter; duration in microseconds.
    Idle { emitter: usize, duration_us: f64 },
}

impl Instruction {
    pub fn tag(&self) -> &'static str {
        match self {
            Instruction::Fourier { .. } => "fourier",
            Instruction::Permute { .. } => "permute",
            Instruction::Edsr { .. } => "edsr",
            Instruction::Esr { .. } => "esr",
            Instruction::Emit { .. } => "emit",
            Instruction::Cz { .. } => "cz",
            Instruction::Measure { .. } => "measure",
            Instruction::Idle { .. } => "idle",
        }
    }

    /// Emitters the instruction touches.
    pub fn emitters(&self) -> Vec<usize> {
        match *self {
            Instruction::Fourier { emitter, .. }
            | Instruction::Permute { emitter, .. }
            | Instruction::Edsr { emitter, .. }
            | Instruction::Esr { emitter, .. }
            | Instruction::Emit { emitter, .. }
            | Instruction::Measure { emitter }
            | Instruction::Idle { emitter, .. } => vec![emitter],
            Instruction::Cz { a, b, .. } => vec![a, b],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramHeader {
    pub d: usize,
    pub emitters: usize,
    pub photons: usize,
    /// Target-graph vertex of each photon, when the program has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub header: ProgramHeader,
    pub instructions: Vec<Instruction>,
}

impl Program {
    pub fn count(&self, tag: &str) -> usize {
        self.instructions.iter().filter(|i| i.tag() == tag).count()
    }

    /// Structural checks required before execution. A program with no
    /// instructions is accepted as the identity.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let h = &self.header;
        let bad = |m: String| Err(ProtocolError::Malformed(m));
        if h.d < 2 {
            return Err(ProtocolError::DimensionTooSmall(h.d));
        }
        if h.emitters == 0 {
            return bad("no emitters".into());
        }
        if let Some(l) = &h.layout {
            let mut s = l.clone();
            s.sort_unstable();
            if s != (0..h.photons).collect::<Vec<_>>() {
                return bad(format!("layout {l:?} is not a permutation of 0..{}", h.photons));
            }
        }
        if self.instructions.is_empty() {
            return Ok(());
        }
        let mut next_bin: Vec<Option<usize>> = vec![None; h.photons];
        let mut opened = 0usize;
        let mut measured = vec![false; h.emitters];
        for (pos, ins) in self.instructions.iter().enumerate() {
            for e in ins.emitters() {
                if e >= h.emitters {
                    return bad(format!("instruction {pos}: emitter {e} of {}", h.emitters));
                }
                if measured[e] {
                    return bad(format!("instruction {pos}: emitter {e} used after its measurement"));
                }
            }
            match ins {
                Instruction::Fourier { levels, .. } => {
                    let mut s = levels.clone();
                    s.sort_unstable();
                    s.dedup();
                    if s.len() != levels.len() || levels.iter().any(|&l| l >= h.d) || levels.len() < 2 {
                        return bad(format!("instruction {pos}: Fourier levels {levels:?}"));
                    }
                }
                Instruction::Permute { a, b, .. } if *a >= h.d || *b >= h.d => {
                    return bad(format!("instruction {pos}: permute levels ({a}, {b})"));
                }
                Instruction::Edsr { control, .. } | Instruction::Esr { control, .. } if *control >= h.d => {
                    return bad(format!("instruction {pos}: control level {control}"));
                }
                Instruction::Emit { photon, bin, .. } => {
                    if *photon >= h.photons || *bin >= h.d {
                        return bad(format!("instruction {pos}: photon {photon} bin {bin}"));
                    }
                    match next_bin[*photon] {
                        None => {
                            if *photon != opened {
                                return bad(format!("instruction {pos}: photon {photon} opened before {opened}"));
                            }
                            opened += 1;
                        }
                        Some(nb) if *bin < nb => {
                            return bad(format!("instruction {pos}: photon {photon} bin {bin} after bin {}", nb - 1));
                        }
                        Some(_) => {}
                    }
                    next_bin[*photon] = Some(bin + 1);
                }
                Instruction::Cz { a, b, .. } if a == b => {
                    return bad(format!("instruction {pos}: CZ on a single emitter"));
                }
                Instruction::Measure { emitter } => {
                    let unfinished = next_bin.iter().enumerate().find(|(_, nb)| **nb != Some(h.d));
                    if let Some((p, _)) = unfinished {
                        return bad(format!("instruction {pos}: measurement before photon {p} is fully emitted"));
                    }
                    measured[*emitter] = true;
                }
                Instruction::Idle { duration_us, .. } if !(*duration_us >= 0.0) => {
                    return bad(format!("instruction {pos}: idle duration {duration_us}"));
                }
                _ => {}
            }
        }
        if let Some(e) = measured.iter().position(|m| !m) {
            return bad(format!("emitter {e} is never measured"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(d: usize, emitters: usize, photons: usize) -> ProgramHeader {
        ProgramHeader { d, emitters, photons, layout: None, notes: vec![] }
    }

    #[test]
    fn json_tags() {
        let p = compile_single_photon(2).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        for tag in ["fourier", "permute", "edsr", "emit", "measure"] {
            assert!(json.contains(&format!("\"op\":\"{tag}\"")), "{tag}");
        }
        let back: Program = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let cz: Instruction = serde_json::from_str(r#"{"op":"cz","a":0,"b":1,"weight":1}"#).unwrap();
        assert_eq!(cz, Instruction::Cz { a: 0, b: 1, weight: 1 });
        let idle: Instruction = serde_json::from_str(r#"{"op":"idle","emitter":1,"duration_us":0.0}"#).unwrap();
        assert_eq!(idle.tag(), "idle");
    }

    #[test]
    fn empty_program_is_valid() {
        let p = Program { header: header(3, 1, 0), instructions: vec![] };
        p.validate().unwrap();
    }

    #[test]
    fn validation_rules() {
        let mut p = compile_single_photon(3).unwrap();
        p.validate().unwrap();

        // measurement before the photon is complete
        let mut q = p.clone();
        let pos = q.instructions.iter().position(|i| i.tag() == "measure").unwrap();
        let m = q.instructions.remove(pos);
        q.instructions.insert(3, m);
        assert!(q.validate().is_err());

        // bins must increase
        let mut q = p.clone();
        let emits: Vec<usize> =
            q.instructions.iter().enumerate().filter(|(_, i)| i.tag() == "emit").map(|(k, _)| k).collect();
        q.instructions.swap(emits[0], emits[1]);
        assert!(q.validate().is_err());

        // no measurement
        let mut q = p.clone();
        q.instructions.pop();
        assert!(q.validate().is_err());

        // instruction after measurement
        p.instructions.push(Instruction::Permute { emitter: 0, a: 0, b: 1 });
        assert!(p.validate().is_err());

        let q = Program {
            header: header(3, 2, 0),
            instructions: vec![
                Instruction::Cz { a: 1, b: 1, weight: 1 },
                Instruction::Measure { emitter: 0 },
                Instruction::Measure { emitter: 1 },
            ],
        };
        assert!(q.validate().is_err());
    }

    #[test]
    fn cap_classification() {
        assert!(ProtocolError::DimensionAboveLevels { d: 9, max: 8 }.is_cap());
        assert!(!ProtocolError::DimensionTooSmall(1).is_cap());
    }
}
