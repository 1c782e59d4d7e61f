//! Conversions between a photon's bin index and Fock-mode strings.
//!
//! Bin-occupation strings have one character per time bin, `1` where the
//! photon is: bin 0 of three is `"100"`. The two-bin qubit labelling used for
//! linear qubit chains instead reads `"10"` as logical 1 and `"01"` as
//! logical 0.

use super::StateError;

/// One-hot occupation string for bin `k` of `d`.
pub fn bin_string(k: usize, d: usize) -> Result<String, StateError> {
    if k >= d {
        return Err(StateError::LevelOutOfRange { subsystem: 0, level: k, radix: d });
    }
    Ok((0..d).map(|i| if i == k { '1' } else { '0' }).collect())
}

/// Bin index of a one-hot occupation string.
pub fn parse_bin_string(s: &str) -> Result<usize, StateError> {
    let bad = || StateError::MalformedBinString(s.to_string());
    let mut hit = None;
    for (i, ch) in s.chars().enumerate() {
        match ch {
            '0' => {}
            '1' if hit.is_none() => hit = Some(i),
            _ => return Err(bad()),
        }
    }
    hit.ok_or_else(bad)
}

/// Qubit value carried by a two-bin photon: bin 0 (`"10"`) is 1, bin 1
/// (`"01"`) is 0.
pub fn two_bin_qubit_string(value: u8) -> Result<&'static str, StateError> {
    match value {
        1 => Ok("10"),
        0 => Ok("01"),
        v => Err(StateError::LevelOutOfRange { subsystem: 0, level: v as usize, radix: 2 }),
    }
}

pub fn parse_two_bin_qubit(s: &str) -> Result<u8, StateError> {
    match s {
        "10" => Ok(1),
        "01" => Ok(0),
        _ => Err(StateError::MalformedBinString(s.to_string())),
    }
}
