//! Packing qubits into one photonic qudit of dimension `2^m`.

use super::GraphError;

/// An 8-level photon carries three qubits.
pub const QUBITS_PER_PHOTON_D8: usize = 3;

fn bits_per_qudit(d: u32) -> Result<usize, GraphError> {
    if d < 2 || !d.is_power_of_two() {
        return Err(GraphError::NotPowerOfTwo(d));
    }
    Ok(d.trailing_zeros() as usize)
}

/// Big-endian binary expansion of `index`; `m = log2 d` characters.
pub fn block_encoding_map(index: u32, d: u32) -> Result<String, GraphError> {
    let m = bits_per_qudit(d)?;
    if index >= d {
        return Err(GraphError::EntryOutOfRange { i: index as usize, j: 0, value: index, d });
    }
    Ok(format!("{:0width$b}", index, width = m))
}

pub fn block_decoding_map(bits: &str, d: u32) -> Result<u32, GraphError> {
    let m = bits_per_qudit(d)?;
    if bits.len() != m || !bits.chars().all(|c| c == '0' || c == '1') {
        return Err(GraphError::InvalidTopology(format!("{bits:?} is not a {m}-bit string")));
    }
    Ok(u32::from_str_radix(bits, 2).expect("validated binary"))
}

/// Photons of dimension `d` needed to carry `qubits` qubits.
pub fn qudits_needed(qubits: usize, d: u32) -> Result<usize, GraphError> {
    let m = bits_per_qudit(d)?;
    Ok(qubits.div_ceil(m))
}
