use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{enumerate_transitions, spectrum, Device, SpectatorConvention, SpinError, TransitionKind};

/// Parameters a device-variation sweep may touch. Absolute deltas are in the
/// parameter's own unit (T, MHz or kHz as in the parameter structs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinParameter {
    B0,
    A,
    #[serde(rename = "f_q")]
    Fq,
    #[serde(rename = "A_w")]
    Aw,
    #[serde(rename = "A_s")]
    As,
    #[serde(rename = "f_q_w")]
    FqW,
    #[serde(rename = "f_q_s")]
    FqS,
}

impl FromStr for SpinParameter {
    type Err = SpinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "B0" => SpinParameter::B0,
            "A" => SpinParameter::A,
            "f_q" => SpinParameter::Fq,
            "A_w" => SpinParameter::Aw,
            "A_s" => SpinParameter::As,
            "f_q_w" => SpinParameter::FqW,
            "f_q_s" => SpinParameter::FqS,
            other => return Err(SpinError::UnknownParameter(other.to_string())),
        })
    }
}

impl fmt::Display for SpinParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpinParameter::B0 => "B0",
            SpinParameter::A => "A",
            SpinParameter::Fq => "f_q",
            SpinParameter::Aw => "A_w",
            SpinParameter::As => "A_s",
            SpinParameter::FqW => "f_q_w",
            SpinParameter::FqS => "f_q_s",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delta {
    Relative(f64),
    Absolute(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub parameter: SpinParameter,
    pub delta: Delta,
}

impl Perturbation {
    pub fn absolute(parameter: SpinParameter, delta: f64) -> Self {
        Self { parameter, delta: Delta::Absolute(delta) }
    }

    fn apply_to(value: &mut f64, delta: Delta) {
        match delta {
            Delta::Relative(r) => *value *= 1.0 + r,
            Delta::Absolute(a) => *value += a,
        }
    }

    pub fn apply(&self, device: &Device) -> Result<Device, SpinError> {
        let mut out = *device;
        let slot = match (&mut out, self.parameter) {
            (Device::Single(p), SpinParameter::B0) => &mut p.b0,
            (Device::Single(p), SpinParameter::A) => &mut p.a,
            (Device::Single(p), SpinParameter::Fq) => &mut p.f_q,
            (Device::Double(p), SpinParameter::B0) => &mut p.base.b0,
            (Device::Double(p), SpinParameter::Aw) => &mut p.a_w,
            (Device::Double(p), SpinParameter::As) => &mut p.a_s,
            (Device::Double(p), SpinParameter::FqW) => &mut p.f_q_w,
            (Device::Double(p), SpinParameter::FqS) => &mut p.f_q_s,
            (_, other) => return Err(SpinError::ParameterNotApplicable(other.to_string())),
        };
        Self::apply_to(slot, self.delta);
        Ok(out)
    }

    pub fn describe(&self) -> String {
        match self.delta {
            Delta::Relative(r) => format!("{}*(1{:+})", self.parameter, r),
            Delta::Absolute(a) => format!("{}{:+}", self.parameter, a),
        }
    }
}

/// Deltas spanning the quoted device-to-device ranges: +1 mT on the field,
/// +5 MHz on hyperfine couplings, and the 4 kHz and 50 kHz ends of the
/// quadrupole range.
pub fn default_perturbations(device: &Device) -> Vec<Perturbation> {
    use SpinParameter::*;
    let mut out = vec![Perturbation::absolute(B0, 1e-3)];
    match device {
        Device::Single(_) => {
            out.push(Perturbation::absolute(A, 5.0));
            out.push(Perturbation::absolute(Fq, 4.0));
            out.push(Perturbation::absolute(Fq, 50.0));
        }
        Device::Double(_) => {
            out.push(Perturbation::absolute(As, 5.0));
            out.push(Perturbation::absolute(Aw, 5.0e3));
            for q in [FqS, FqW] {
                out.push(Perturbation::absolute(q, 4.0));
                out.push(Perturbation::absolute(q, 50.0));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub perturbation: String,
    pub kind: TransitionKind,
    pub from_label: String,
    pub to_label: String,
    pub base_mhz: f64,
    pub perturbed_mhz: f64,
    pub shift_mhz: f64,
}

/// Re-diagonalises the device once per perturbation and reports the shift of
/// every ESR, NMR and EDSR line (unrestricted spectators).
pub fn sensitivity_sweep(device: &Device, perturbations: &[Perturbation]) -> Result<Vec<SweepRow>, SpinError> {
    let kinds = [TransitionKind::Esr, TransitionKind::Nmr, TransitionKind::Edsr];
    let lines = |d: &Device| -> Result<Vec<_>, SpinError> {
        let s = spectrum(&d.hamiltonian()?)?;
        kinds
            .iter()
            .map(|&k| enumerate_transitions(&s, k, SpectatorConvention::Unrestricted))
            .collect()
    };
    let base = lines(device)?;

    let per: Vec<Result<Vec<SweepRow>, SpinError>> = perturbations
        .par_iter()
        .map(|pert| {
            let shifted = lines(&pert.apply(device)?)?;
            let mut rows = Vec::new();
            for (b, s) in base.iter().zip(&shifted) {
                for t in &b.entries {
                    let f = s.find(&t.from, &t.to).map_or(f64::NAN, |x| x.frequency_mhz);
                    rows.push(SweepRow {
                        perturbation: pert.describe(),
                        kind: b.kind,
                        from_label: t.from.to_string(),
                        to_label: t.to.to_string(),
                        base_mhz: t.frequency_mhz,
                        perturbed_mhz: f,
                        shift_mhz: f - t.frequency_mhz,
                    });
                }
            }
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for rows in per {
        out.extend(rows?);
    }
    Ok(out)
}

/// CSV with one row per (perturbation, transition).
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["perturbation", "kind", "from_label", "to_label", "base_MHz", "perturbed_MHz", "shift_MHz"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.perturbation.clone(),
            r.kind.to_string(),
            r.from_label.clone(),
            r.to_label.clone(),
            format!("{:.9}", r.base_mhz),
            format!("{:.9}", r.perturbed_mhz),
            format!("{:.9}", r.shift_mhz),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{DoubleSpinParams, SpinParams};

    #[test]
    fn zero_perturbation_leaves_every_line_in_place() {
        let d = Device::Single(SpinParams::default());
        let rows = sensitivity_sweep(&d, &[Perturbation::absolute(SpinParameter::A, 0.0)]).unwrap();
        assert_eq!(rows.len(), 8 + 14 + 7);
        assert!(rows.iter().all(|r| r.shift_mhz == 0.0));
    }

    #[test]
    fn one_millitesla_moves_esr_by_electron_zeeman() {
        let d = Device::Single(SpinParams::default());
        let rows = sensitivity_sweep(&d, &[Perturbation::absolute(SpinParameter::B0, 1e-3)]).unwrap();
        for r in rows.iter().filter(|r| r.kind == TransitionKind::Esr) {
            // first order: γ_e · 1 mT = 27.97 MHz, plus a small hyperfine correction
            assert!((r.shift_mhz - 27.97).abs() < 0.05, "{r:?}");
        }
    }

    #[test]
    fn quadrupole_range_moves_nmr_by_tens_of_khz() {
        let d = Device::Single(SpinParams::default());
        let rows = sensitivity_sweep(
            &d,
            &[Perturbation::absolute(SpinParameter::Fq, 4.0), Perturbation::absolute(SpinParameter::Fq, 50.0)],
        )
        .unwrap();
        let nmr: Vec<_> = rows.iter().filter(|r| r.kind == TransitionKind::Nmr).collect();
        let max_small = nmr[..14].iter().map(|r| r.shift_mhz.abs()).fold(0.0, f64::max);
        let max_large = nmr[14..].iter().map(|r| r.shift_mhz.abs()).fold(0.0, f64::max);
        // |Δf| = δf_q |m - 1/2| peaks at 3 δf_q for the outermost line
        assert!((max_small - 0.012).abs() < 1e-4, "{max_small}");
        assert!((max_large - 0.150).abs() < 1e-3, "{max_large}");
    }

    #[test]
    fn quadrupole_does_not_touch_the_bare_zeeman_gap() {
        let p = SpinParams { a: 0.0, f_q: 0.0, ..SpinParams::default() };
        let rows = sensitivity_sweep(&Device::Single(p), &[Perturbation::absolute(SpinParameter::Fq, 50.0)]).unwrap();
        for r in rows.iter().filter(|r| r.kind == TransitionKind::Esr) {
            assert!((r.perturbed_mhz - 27_970.0).abs() < 1e-9);
        }
    }

    #[test]
    fn parameter_names_are_checked() {
        assert!(matches!("Q".parse::<SpinParameter>(), Err(SpinError::UnknownParameter(_))));
        let d = Device::Double(DoubleSpinParams::default());
        let p = Perturbation::absolute(SpinParameter::A, 1.0);
        assert!(matches!(p.apply(&d), Err(SpinError::ParameterNotApplicable(_))));
        assert_eq!(default_perturbations(&d).len(), 7);
    }
}
