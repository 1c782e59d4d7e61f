use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Instruction, Program, ProtocolError};
use crate::statevec::{LevelSubset, MeasurementRecord, Register, RegisterDump, Role, DEFAULT_AMPLITUDE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum Mode {
    /// Each readout draws one outcome from a ChaCha8 stream seeded here.
    Sample { seed: u64 },
    /// Each readout splits every branch into all possible outcomes.
    Enumerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecuteOptions {
    pub mode: Mode,
    pub cap: usize,
}

impl ExecuteOptions {
    pub fn enumerate() -> Self {
        Self { mode: Mode::Enumerate, cap: DEFAULT_AMPLITUDE_CAP }
    }

    pub fn sample(seed: u64) -> Self {
        Self { mode: Mode::Sample { seed }, cap: DEFAULT_AMPLITUDE_CAP }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub records: Vec<MeasurementRecord>,
    /// Probability of this record sequence.
    pub probability: f64,
    pub register: Register,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    pub program: Program,
    pub mode: Mode,
    /// SHA-256 of the full branch set after each instruction.
    pub checksums: Vec<String>,
    /// State just before the first readout.
    pub pre_measurement: Option<Register>,
    pub branches: Vec<Branch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDump {
    pub records: Vec<MeasurementRecord>,
    pub probability: f64,
    /// Photons only, once nuclei and electron are in definite levels.
    pub photonic: Option<RegisterDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDump {
    pub program: Program,
    pub mode: Mode,
    pub checksums: Vec<String>,
    pub branches: Vec<BranchDump>,
}

fn checksum(branches: &[Branch]) -> String {
    let mut h = Sha256::new();
    let mut buf = Vec::new();
    for b in branches {
        buf.clear();
        buf.extend_from_slice(&b.probability.to_le_bytes());
        for r in &b.records {
            buf.extend_from_slice(&(r.subsystem as u64).to_le_bytes());
            buf.extend_from_slice(&(r.outcome as u64).to_le_bytes());
        }
        for &x in b.register.radices() {
            buf.extend_from_slice(&(x as u64).to_le_bytes());
        }
        buf.reserve(16 * b.register.dim());
        for a in b.register.amplitudes() {
            buf.extend_from_slice(&a.re.to_le_bytes());
            buf.extend_from_slice(&a.im.to_le_bytes());
        }
        h.update(&buf);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn execute(p: &Program, seed: u64) -> Result<ExecutionTrace, ProtocolError> {
    execute_with(p, ExecuteOptions::sample(seed))
}

pub fn execute_with(p: &Program, opts: ExecuteOptions) -> Result<ExecutionTrace, ProtocolError> {
    p.validate()?;
    let h = &p.header;
    let (d, ne) = (h.d, h.emitters);
    let electron = ne;
    let mut radices = vec![d; ne];
    radices.push(2);
    let mut roles = vec![Role::DonorNucleus; ne];
    roles.push(Role::Electron);
    let start = Register::basis_state(&radices, &roles, &vec![0; ne + 1], opts.cap)?;

    let mut rng = match opts.mode {
        Mode::Sample { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        Mode::Enumerate => None,
    };
    let mut branches = vec![Branch { records: vec![], probability: 1.0, register: start }];
    let mut photon_sub: Vec<Option<usize>> = vec![None; h.photons];
    let mut pre_measurement = None;
    let mut checksums = Vec::with_capacity(p.instructions.len());

    for ins in &p.instructions {
        match ins {
            Instruction::Measure { emitter } => {
                if pre_measurement.is_none() {
                    pre_measurement = Some(branches[0].register.clone());
                }
                let mut next = Vec::new();
                for b in branches {
                    match rng.as_mut() {
                        Some(rng) => {
                            let (rec, reg) = b.register.measure(*emitter, rng)?;
                            let mut records = b.records;
                            records.push(rec);
                            next.push(Branch { records, probability: b.probability * rec.probability, register: reg });
                        }
                        None => {
                            for o in b.register.enumerate_outcomes(*emitter)? {
                                let mut records = b.records.clone();
                                records.push(o.record);
                                next.push(Branch {
                                    records,
                                    probability: b.probability * o.record.probability,
                                    register: o.register,
                                });
                            }
                        }
                    }
                }
                branches = next;
            }
            Instruction::Emit { photon, bin, .. } => {
                for b in &mut branches {
                    let sub = match photon_sub[*photon] {
                        Some(s) => s,
                        None => b.register.open_photon(d)?,
                    };
                    b.register.emit(electron, sub, *bin)?;
                    if *bin == d - 1 {
                        b.register.close_photon(sub)?;
                    }
                }
                if photon_sub[*photon].is_none() {
                    photon_sub[*photon] = Some(ne + 1 + photon);
                }
            }
            other => {
                for b in &mut branches {
                    apply_unitary(&mut b.register, other, electron)?;
                }
            }
        }
        checksums.push(checksum(&branches));
    }
    Ok(ExecutionTrace { program: p.clone(), mode: opts.mode, checksums, pre_measurement, branches })
}

fn apply_unitary(r: &mut Register, ins: &Instruction, electron: usize) -> Result<(), ProtocolError> {
    match ins {
        Instruction::Fourier { emitter, levels } => r.apply_fourier(&LevelSubset::new(*emitter, levels.clone()))?,
        Instruction::Permute { emitter, a, b } => r.apply_permutation(*emitter, *a, *b)?,
        Instruction::Edsr { emitter, control } | Instruction::Esr { emitter, control } => {
            r.apply_conditional_flip((*emitter, *control), electron)?
        }
        Instruction::Cz { a, b, weight } => r.apply_cz_power(*a, *b, *weight as i64)?,
        Instruction::Idle { .. } => {}
        Instruction::Emit { .. } | Instruction::Measure { .. } => unreachable!("handled by the caller"),
    }
    Ok(())
}

impl Branch {
    /// Drops nuclei and electron, which must all be in definite levels, and
    /// returns the photons alone.
    pub fn photonic_state(&self, emitters: usize) -> Result<Register, ProtocolError> {
        let mut r = self.register.clone();
        for sub in (0..=emitters).rev() {
            r.remove_definite(sub)?;
        }
        Ok(r)
    }
}

impl ExecutionTrace {
    pub fn dump(&self) -> TraceDump {
        let e = self.program.header.emitters;
        TraceDump {
            program: self.program.clone(),
            mode: self.mode,
            checksums: self.checksums.clone(),
            branches: self
                .branches
                .iter()
                .map(|b| BranchDump {
                    records: b.records.clone(),
                    probability: b.probability,
                    photonic: b.photonic_state(e).ok().map(|r| r.dump()),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{compile_linear, compile_single_photon, ProgramHeader};
    use crate::statevec::StateError;
    use num_complex::Complex64;

    #[test]
    fn empty_program_leaves_the_initial_state() {
        let p = Program {
            header: ProgramHeader { d: 3, emitters: 1, photons: 0, layout: None, notes: vec![] },
            instructions: vec![],
        };
        let t = execute(&p, 1).unwrap();
        assert!(t.checksums.is_empty());
        assert_eq!(t.branches.len(), 1);
        assert_eq!(t.branches[0].register.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert_eq!(t.branches[0].register.dim(), 6);
    }

    #[test]
    fn one_checksum_per_instruction_and_seed_determinism() {
        let p = compile_linear(3, 2).unwrap();
        let a = execute(&p, 99).unwrap();
        let b = execute(&p, 99).unwrap();
        assert_eq!(a.checksums.len(), p.instructions.len());
        assert_eq!(a, b);
        let e1 = execute_with(&p, ExecuteOptions::enumerate()).unwrap();
        let e2 = execute_with(&p, ExecuteOptions::enumerate()).unwrap();
        assert_eq!(e1.checksums, e2.checksums);
        assert_eq!(e1.branches.len(), 3);
        let total: f64 = e1.branches.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn the_three_bin_photon_before_readout() {
        // ψ_f before the last Fourier: bin k correlated with one nuclear level
        let mut p = compile_single_photon(3).unwrap();
        p.instructions.truncate(p.instructions.len() - 2);
        p.instructions.push(Instruction::Measure { emitter: 0 });
        let t = execute_with(&p, ExecuteOptions::enumerate()).unwrap();
        let pre = t.pre_measurement.unwrap();
        assert_eq!(pre.radices(), &[3, 2, 3]);
        let s = 1.0 / 3f64.sqrt();
        // the swap chain leaves bin k on nuclear level k+1 mod 3
        for k in 0..3 {
            let a = pre.amplitude(&[(k + 1) % 3, 0, k]).unwrap();
            assert!((a - Complex64::new(s, 0.0)).norm() < 1e-12, "bin {k}");
        }
        assert!((pre.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cap_is_reported() {
        let p = compile_linear(4, 3).unwrap();
        let err = execute_with(&p, ExecuteOptions { mode: Mode::Enumerate, cap: 100 }).unwrap_err();
        assert!(matches!(err, ProtocolError::State(StateError::CapExceeded { .. })));
        assert!(err.is_cap());
    }

    #[test]
    fn trace_dump_contains_photonic_states() {
        let t = execute_with(&compile_single_photon(2).unwrap(), ExecuteOptions::enumerate()).unwrap();
        let dump = t.dump();
        assert_eq!(dump.branches.len(), 2);
        for b in &dump.branches {
            assert_eq!(b.photonic.as_ref().unwrap().radices, vec![2]);
        }
        let json = serde_json::to_string(&dump).unwrap();
        assert!(json.contains("\"mode\":\"enumerate\""));
    }
}
