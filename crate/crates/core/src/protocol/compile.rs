use super::{Instruction, Program, ProgramHeader, ProtocolError};
use crate::statevec::{StateError, DEFAULT_AMPLITUDE_CAP};

/// Nuclear levels available on one donor.
pub const MAX_DONOR_LEVELS: usize = 8;

/// Ring position of each photon for [`compile_six_ring`]. The emitters each
/// feed one arc, so emission order `P1..P6` sits on the ring as
/// `P5-P3-P1-P2-P4-P6`.
pub const SIX_RING_LAYOUT: [usize; 6] = [2, 3, 1, 4, 0, 5];

/// Grid vertex (`row·3 + col`) of each photon for [`compile_ladder`]: the
/// first emitter's photons form row 0, the second's row 1.
pub const LADDER_LAYOUT: [usize; 6] = [0, 3, 1, 4, 2, 5];

fn check_d(d: usize) -> Result<(), ProtocolError> {
    if d < 2 {
        return Err(ProtocolError::DimensionTooSmall(d));
    }
    if d > MAX_DONOR_LEVELS {
        return Err(ProtocolError::DimensionAboveLevels { d, max: MAX_DONOR_LEVELS });
    }
    Ok(())
}

fn fourier(emitter: usize, d: usize) -> Instruction {
    Instruction::Fourier { emitter, levels: (0..d).collect() }
}

/// One photon into `d` bins from `emitter`: excite and emit from level 0,
/// then swap level 0 with the next unused level and repeat.
pub fn emission_block(emitter: usize, photon: usize, d: usize) -> Vec<Instruction> {
    let mut out = Vec::with_capacity(3 * d - 1);
    for bin in 0..d {
        if bin > 0 {
            out.push(Instruction::Permute { emitter, a: 0, b: bin });
        }
        out.push(Instruction::Edsr { emitter, control: 0 });
        out.push(Instruction::Emit { emitter, photon, bin });
    }
    out
}

/// Fourier, one emission block, Fourier, measure.
pub fn compile_single_photon(d: usize) -> Result<Program, ProtocolError> {
    check_d(d)?;
    let mut ins = vec![fourier(0, d)];
    ins.extend(emission_block(0, 0, d));
    ins.push(fourier(0, d));
    ins.push(Instruction::Measure { emitter: 0 });
    Ok(Program { header: ProgramHeader { d, emitters: 1, photons: 1, layout: None, notes: vec![] }, instructions: ins })
}

pub fn compile_linear(d: usize, n: usize) -> Result<Program, ProtocolError> {
    compile_linear_with_cap(d, n, DEFAULT_AMPLITUDE_CAP)
}

/// `n` photons: Fourier, then `n` rounds of (emission block, Fourier), then
/// one measurement.
pub fn compile_linear_with_cap(d: usize, n: usize, cap: usize) -> Result<Program, ProtocolError> {
    check_d(d)?;
    if n == 0 {
        return Err(ProtocolError::Malformed("linear chain needs at least one photon".into()));
    }
    // peak size: nucleus, electron, n-1 closed photons and one open one
    let peak = (d as u128) * 2 * (d as u128).pow(n as u32 - 1) * (d as u128 + 1);
    if peak > cap as u128 {
        return Err(StateError::CapExceeded { requested: peak.min(usize::MAX as u128) as usize, cap }.into());
    }
    let mut ins = vec![fourier(0, d)];
    for p in 0..n {
        ins.extend(emission_block(0, p, d));
        ins.push(fourier(0, d));
    }
    ins.push(Instruction::Measure { emitter: 0 });
    Ok(Program {
        header: ProgramHeader { d, emitters: 1, photons: n, layout: Some((0..n).collect()), notes: vec![] },
        instructions: ins,
    })
}

/// One photon from each emitter in turn, the other idling.
fn alternating_blocks(d: usize, first_photon: usize) -> Vec<Instruction> {
    let mut out = vec![Instruction::Idle { emitter: 1, duration_us: 0.0 }];
    out.extend(emission_block(0, first_photon, d));
    out.push(Instruction::Idle { emitter: 0, duration_us: 0.0 });
    out.extend(emission_block(1, first_photon + 1, d));
    out
}

fn both_fourier(d: usize) -> Vec<Instruction> {
    vec![fourier(0, d), fourier(1, d)]
}

fn cz() -> Instruction {
    Instruction::Cz { a: 0, b: 1, weight: 1 }
}

fn two_emitter_header(d: usize, layout: &[usize], notes: Vec<String>) -> ProgramHeader {
    ProgramHeader { d, emitters: 2, photons: 6, layout: Some(layout.to_vec()), notes }
}

/// Two coupled emitters, six photons on a ring.
pub fn compile_six_ring(d: usize) -> Result<Program, ProtocolError> {
    check_d(d)?;
    let mut ins = both_fourier(d);
    ins.push(cz());
    ins.extend(alternating_blocks(d, 0));
    ins.extend(both_fourier(d));
    ins.extend(alternating_blocks(d, 2));
    ins.extend(both_fourier(d));
    ins.push(cz());
    ins.extend(alternating_blocks(d, 4));
    ins.extend(both_fourier(d));
    ins.push(Instruction::Measure { emitter: 0 });
    ins.push(Instruction::Measure { emitter: 1 });
    Ok(Program { header: two_emitter_header(d, &SIX_RING_LAYOUT, vec![]), instructions: ins })
}

fn ladder(d: usize, final_fourier: bool) -> Result<Program, ProtocolError> {
    check_d(d)?;
    let mut ins = both_fourier(d);
    ins.push(cz());
    ins.extend(alternating_blocks(d, 0));
    ins.extend(both_fourier(d));
    ins.extend(alternating_blocks(d, 2));
    ins.push(cz());
    ins.extend(both_fourier(d));
    ins.push(cz());
    ins.extend(alternating_blocks(d, 4));
    let mut notes = vec![];
    if final_fourier {
        // without it the last two photons stay locked to the nuclei and the
        // readout projects them onto a single bin
        ins.extend(both_fourier(d));
        notes.push("Fourier on both nuclei inserted after the last emission block".to_string());
    }
    ins.push(Instruction::Measure { emitter: 0 });
    ins.push(Instruction::Measure { emitter: 1 });
    Ok(Program { header: two_emitter_header(d, &LADDER_LAYOUT, notes), instructions: ins })
}

/// Two coupled emitters, 2×3 grid, with a Fourier before the readout.
pub fn compile_ladder(d: usize) -> Result<Program, ProtocolError> {
    ladder(d, true)
}

/// The ladder step list without the closing Fourier. Its output does not
/// verify; kept for comparison.
pub fn compile_ladder_literal(d: usize) -> Result<Program, ProtocolError> {
    ladder(d, false)
}
