use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    build_single_donor_hamiltonian, spectrum, ElectronSpin, HalfInt, ProductLabel, SpectrumResult, SpinError,
    SpinParams,
};

/// Cavity frequency quoted for the `|7/2,↓⟩ ↔ |5/2,↑⟩` EDSR transition, MHz.
pub const EDSR_CAVITY_REFERENCE_MHZ: f64 = 28_410.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    /// Electron flips, every nuclear projection fixed.
    Esr,
    /// One nuclear projection steps by one, electron fixed.
    Nmr,
    /// Electron ↓→↑ while one nucleus steps m → m-1 (flip-flop).
    Edsr,
}

impl FromStr for TransitionKind {
    type Err = SpinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "esr" => Ok(TransitionKind::Esr),
            "nmr" => Ok(TransitionKind::Nmr),
            "edsr" => Ok(TransitionKind::Edsr),
            other => Err(SpinError::UnknownKind(other.to_string())),
        }
    }
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransitionKind::Esr => "esr",
            TransitionKind::Nmr => "nmr",
            TransitionKind::Edsr => "edsr",
        })
    }
}

/// How non-driven nuclei are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spectators {
    /// Every other nucleus sits at this projection.
    Pinned(HalfInt),
    /// Every other nucleus is held constant, one entry per spectator state.
    Resolved,
}

/// Which nuclei may change during a transition and what the others do.
///
/// For ESR no nucleus changes, so only the spectator restriction applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectatorConvention {
    /// Every nucleus may be the driven one; no restriction on the others.
    Unrestricted,
    Active { nucleus: usize, spectators: Spectators },
}

impl SpectatorConvention {
    /// Strong nucleus driven, weak nucleus pinned at +7/2 (Sb₂⁺ ordering: strong = 0).
    pub fn weak_fixed() -> Self {
        SpectatorConvention::Active { nucleus: 0, spectators: Spectators::Pinned(HalfInt(7)) }
    }

    /// Weak nucleus driven, strong nucleus held constant and resolved over its states.
    pub fn strong_fixed() -> Self {
        SpectatorConvention::Active { nucleus: 1, spectators: Spectators::Resolved }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: ProductLabel,
    pub to: ProductLabel,
    pub frequency_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionList {
    pub kind: TransitionKind,
    pub entries: Vec<Transition>,
}

impl TransitionList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV with columns `from_label,to_label,frequency_MHz`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["from_label", "to_label", "frequency_MHz"]).expect("in-memory write");
        for t in &self.entries {
            w.write_record([t.from.to_string(), t.to.to_string(), format!("{:.9}", t.frequency_mhz)])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn find(&self, from: &ProductLabel, to: &ProductLabel) -> Option<&Transition> {
        self.entries.iter().find(|t| &t.from == from && &t.to == to)
    }
}

fn spectators_ok(label: &ProductLabel, active: Option<usize>, spectators: Spectators) -> bool {
    match spectators {
        Spectators::Resolved => true,
        Spectators::Pinned(m) => label
            .nuclear
            .iter()
            .enumerate()
            .all(|(k, &mk)| Some(k) == active || mk == m),
    }
}

/// Lists transitions between labelled eigenstates under the selection rule of
/// `kind`. Each entry runs from the ↓ (ESR, EDSR) or higher-m (NMR) state.
pub fn enumerate_transitions(
    s: &SpectrumResult,
    kind: TransitionKind,
    convention: SpectatorConvention,
) -> Result<TransitionList, SpinError> {
    let nuclei = s.labels.first().map_or(0, |l| l.nuclear.len());
    let (active, spectators) = match convention {
        SpectatorConvention::Unrestricted => (None, Spectators::Resolved),
        SpectatorConvention::Active { nucleus, spectators } => {
            if nucleus >= nuclei {
                return Err(SpinError::BadSpectator(nucleus, nuclei));
            }
            (Some(nucleus), spectators)
        }
    };
    let index: HashMap<&ProductLabel, usize> = s.labels.iter().enumerate().map(|(k, l)| (l, k)).collect();

    // walk "from" states in product-basis order so the output does not depend on energies
    let mut froms: Vec<usize> = (0..s.len()).collect();
    froms.sort_by_key(|&k| basis_order_key(&s.labels[k]));

    let mut entries = Vec::new();
    let mut push = |from: usize, to_label: ProductLabel| {
        if let Some(&to) = index.get(&to_label) {
            entries.push(Transition {
                from: s.labels[from].clone(),
                to: to_label,
                frequency_mhz: (s.eigenvalues[to] - s.eigenvalues[from]).abs(),
            });
        }
    };

    for from in froms {
        let label = &s.labels[from];
        match kind {
            TransitionKind::Esr => {
                if label.electron == ElectronSpin::Down && spectators_ok(label, None, spectators) {
                    push(from, ProductLabel { nuclear: label.nuclear.clone(), electron: ElectronSpin::Up });
                }
            }
            TransitionKind::Nmr | TransitionKind::Edsr => {
                if kind == TransitionKind::Edsr && label.electron != ElectronSpin::Down {
                    continue;
                }
                for k in 0..nuclei {
                    if active.is_some_and(|a| a != k) || !spectators_ok(label, Some(k), spectators) {
                        continue;
                    }
                    let mut nuclear = label.nuclear.clone();
                    nuclear[k] = HalfInt(nuclear[k].0 - 2);
                    let electron = match kind {
                        TransitionKind::Edsr => label.electron.flipped(),
                        _ => label.electron,
                    };
                    push(from, ProductLabel { nuclear, electron });
                }
            }
        }
    }
    Ok(TransitionList { kind, entries })
}

/// Position key of a label in the product basis (electron ↓ first, projections from +I down).
fn basis_order_key(label: &ProductLabel) -> (ElectronSpin, Vec<i32>) {
    (label.electron, label.nuclear.iter().map(|m| -m.0).collect())
}

/// First-order EDSR frequency of `|m, ↓⟩ ↔ |m-1, ↑⟩` in MHz:
/// `B0 (γ_n + γ_e) + (m - 1/2)(f_q + A)`.
pub fn edsr_frequency_closed_form(m: HalfInt, p: &SpinParams) -> Result<f64, SpinError> {
    let two_i = p.two_i()?;
    if m.0 > two_i || m.0 <= -two_i || (m.0 - two_i) % 2 != 0 {
        return Err(SpinError::ProjectionOutOfRange(m.to_string()));
    }
    let gamma_plus = p.gamma_n + p.gamma_e * 1e3;
    Ok(p.b0 * gamma_plus + (m.value() - 0.5) * (p.f_q * 1e-3 + p.a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdsrCheck {
    pub m_i: HalfInt,
    pub closed_form_mhz: f64,
    pub diagonalized_mhz: f64,
    pub relative_difference: f64,
}

/// Closed-form vs diagonalised EDSR frequencies for every `m_I` with a partner.
pub fn edsr_comparison(p: &SpinParams) -> Result<Vec<EdsrCheck>, SpinError> {
    let two_i = p.two_i()?;
    let s = spectrum(&build_single_donor_hamiltonian(p)?)?;
    let list = enumerate_transitions(&s, TransitionKind::Edsr, SpectatorConvention::Unrestricted)?;
    let mut out = Vec::new();
    let mut m = two_i;
    while m > -two_i {
        let from = ProductLabel { nuclear: vec![HalfInt(m)], electron: ElectronSpin::Down };
        let to = ProductLabel { nuclear: vec![HalfInt(m - 2)], electron: ElectronSpin::Up };
        let diag = list.find(&from, &to).map(|t| t.frequency_mhz).expect("every m above -I has a partner");
        let closed = edsr_frequency_closed_form(HalfInt(m), p)?;
        out.push(EdsrCheck {
            m_i: HalfInt(m),
            closed_form_mhz: closed,
            diagonalized_mhz: diag,
            relative_difference: (closed - diag).abs() / diag.abs(),
        });
        m -= 2;
    }
    Ok(out)
}
