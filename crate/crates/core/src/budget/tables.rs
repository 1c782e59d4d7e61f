use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{emission_time, BudgetError};
use crate::protocol::{Instruction, Program};

pub const SINGLE_DONOR_TABLE_JSON: &str = include_str!("../../data/table1.json");
pub const COUPLED_DONOR_TABLE_JSON: &str = include_str!("../../data/table3.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { min: 0.0, max: 0.0 };

    pub fn point(x: f64) -> Self {
        Self { min: x, max: x }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    fn add(self, o: Interval) -> Interval {
        Interval { min: self.min + o.min, max: self.max + o.max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationRow {
    pub name: String,
    /// Instruction kind the row prices: an instruction tag, `permute-adjacent`
    /// or `init`.
    pub kind: String,
    /// `None` when the operation has not been benchmarked.
    pub fidelity: Option<f64>,
    pub duration_us: Interval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceEntry {
    pub species: String,
    pub quantity: String,
    pub value_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationTable {
    pub name: String,
    pub operations: Vec<OperationRow>,
    pub coherence: Vec<CoherenceEntry>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl OperationTable {
    pub fn from_json(s: &str) -> Result<Self, BudgetError> {
        let t: OperationTable = serde_json::from_str(s).map_err(|e| BudgetError::Table(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn single_donor() -> Self {
        Self::from_json(SINGLE_DONOR_TABLE_JSON).expect("bundled table is valid")
    }

    pub fn coupled_donors() -> Self {
        Self::from_json(COUPLED_DONOR_TABLE_JSON).expect("bundled table is valid")
    }

    pub fn validate(&self) -> Result<(), BudgetError> {
        for r in &self.operations {
            if let Some(f) = r.fidelity {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(BudgetError::Table(format!("{}: fidelity {f}", r.name)));
                }
            }
            let d = r.duration_us;
            if !(d.min > 0.0 && d.max >= d.min && d.max.is_finite()) {
                return Err(BudgetError::Table(format!("{}: duration {:?}", r.name, d)));
            }
        }
        for c in &self.coherence {
            if !(c.value_us > 0.0) {
                return Err(BudgetError::Table(format!("{} {}: {}", c.species, c.quantity, c.value_us)));
            }
        }
        Ok(())
    }

    pub fn row(&self, kind: &str) -> Option<&OperationRow> {
        self.operations.iter().find(|r| r.kind == kind)
    }

    pub fn coherence(&self, species: &str, quantity: &str) -> Option<f64> {
        self.coherence.iter().find(|c| c.species == species && c.quantity == quantity).map(|c| c.value_us)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetOptions {
    /// Emission takes `1/g_s`.
    pub g_s_mhz: f64,
    /// Compare against echo coherence times instead of free-induction ones.
    pub hahn_echo: bool,
}

impl Default for BudgetOptions {
    fn default() -> Self {
        Self { g_s_mhz: 3.0, hahn_echo: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceRatio {
    pub species: String,
    pub quantity: String,
    pub t2_us: f64,
    /// Longest total duration over `t2_us`.
    pub ratio: f64,
    pub exceeds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub table: String,
    pub duration_us: Interval,
    pub midpoint_us: f64,
    pub fidelity: f64,
    pub counts: BTreeMap<String, usize>,
    pub coherence: Vec<CoherenceRatio>,
    pub notes: Vec<String>,
}

fn price<'t>(
    ins: &Instruction,
    t: &'t OperationTable,
    emit_us: f64,
) -> Result<(Interval, f64, Option<&'t OperationRow>), BudgetError> {
    let kind = match ins {
        Instruction::Emit { .. } => return Ok((Interval::point(emit_us), 1.0, None)),
        Instruction::Idle { duration_us, .. } => return Ok((Interval::point(*duration_us), 1.0, None)),
        Instruction::Permute { a, b, .. } if a == b => return Ok((Interval::ZERO, 1.0, None)),
        Instruction::Permute { a, b, .. } if a.abs_diff(*b) == 1 => "permute-adjacent",
        other => other.tag(),
    };
    let row = t.row(kind).ok_or_else(|| BudgetError::Unmapped(kind.to_string()))?;
    Ok((row.duration_us, row.fidelity.unwrap_or(1.0), Some(row)))
}

fn coherence_time(t: &OperationTable, species: &str, prefer: &[&str]) -> Option<(String, f64)> {
    prefer.iter().find_map(|q| t.coherence(species, q).map(|v| (q.to_string(), v)))
}

/// Sums durations and multiplies fidelities over the instruction list.
/// Programs are priced as written; no validation is applied.
pub fn timing_fidelity_budget(p: &Program, t: &OperationTable, opts: &BudgetOptions) -> Result<TimingReport, BudgetError> {
    let emit_us = emission_time(opts.g_s_mhz)?.raw_us;
    let mut duration = Interval::ZERO;
    let mut fidelity = 1.0;
    let mut counts = BTreeMap::new();
    let mut unbenchmarked = BTreeMap::new();
    for ins in &p.instructions {
        let (d, f, row) = price(ins, t, emit_us)?;
        duration = duration.add(d);
        fidelity *= f;
        *counts.entry(ins.tag().to_string()).or_insert(0) += 1;
        if let Some(r) = row.filter(|r| r.fidelity.is_none()) {
            *unbenchmarked.entry(r.name.clone()).or_insert(0usize) += 1;
        }
    }
    let mut notes = t.notes.clone();
    for (name, n) in unbenchmarked {
        notes.push(format!("{name}: no fidelity figure, {n} uses charged at 1"));
    }
    let electron = if opts.hahn_echo { &["T2H", "T2", "T2*"][..] } else { &["T2*", "T2", "T2H"][..] };
    let mut coherence = Vec::new();
    for (species, prefer) in [("electron", electron), ("nucleus", &["T2H", "T2", "T2*"][..])] {
        if let Some((quantity, t2)) = coherence_time(t, species, prefer) {
            let ratio = duration.max / t2;
            coherence.push(CoherenceRatio { species: species.into(), quantity, t2_us: t2, ratio, exceeds: ratio > 1.0 });
        }
    }
    Ok(TimingReport {
        table: t.name.clone(),
        duration_us: duration,
        midpoint_us: duration.midpoint(),
        fidelity,
        counts,
        coherence,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{compile_linear, compile_six_ring, ProgramHeader};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn program(instructions: Vec<Instruction>) -> Program {
        Program { header: ProgramHeader { d: 8, emitters: 2, photons: 8, layout: None, notes: vec![] }, instructions }
    }

    #[test]
    fn bundled_tables_load() {
        let a = OperationTable::single_donor();
        assert_eq!(a.row("esr").unwrap().fidelity, Some(0.995));
        assert_eq!(a.coherence("electron", "T2*"), Some(11.06));
        let b = OperationTable::coupled_donors();
        assert_eq!(b.row("measure").unwrap().fidelity, Some(0.90));
        assert_eq!(b.coherence("nucleus", "T2"), Some(2.0));
        assert!(b.row("cz").unwrap().fidelity.is_none());
    }

    #[test]
    fn single_esr_pulse() {
        let r = timing_fidelity_budget(
            &program(vec![Instruction::Esr { emitter: 0, control: 0 }]),
            &OperationTable::single_donor(),
            &BudgetOptions::default(),
        )
        .unwrap();
        assert_eq!(r.duration_us, Interval::point(1.0));
        assert_eq!(r.fidelity, 0.995);
    }

    #[test]
    fn empty_program() {
        let r = timing_fidelity_budget(&program(vec![]), &OperationTable::single_donor(), &BudgetOptions::default())
            .unwrap();
        assert_eq!(r.duration_us, Interval::ZERO);
        assert_eq!(r.fidelity, 1.0);
    }

    #[test]
    fn linear_chain_regression() {
        // d=3, n=2: 3 fourier, 6 edsr, 6 emit, 2 adjacent + 2 distance-2 permutes, 1 measure
        let p = compile_linear(3, 2).unwrap();
        let r = timing_fidelity_budget(&p, &OperationTable::single_donor(), &BudgetOptions::default()).unwrap();
        let fixed = 3.0 * 100.0 + 6.0 * 8.5 + 6.0 / 3.0 + 2.0 * 50.0 + 2.0 * 500.0;
        assert_abs_diff_eq!(r.duration_us.min, fixed + 10_000.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.duration_us.max, fixed + 100_000.0, epsilon = 1e-9);
        let f = 0.998f64.powi(3) * 0.995f64.powi(6) * 0.998f64.powi(2) * 0.915f64.powi(2) * 0.99;
        assert_abs_diff_eq!(r.fidelity, f, epsilon = 1e-12);
        assert!(r.coherence.iter().all(|c| c.exceeds));
    }

    #[test]
    fn coupled_device_uses_its_own_rows() {
        let p = compile_six_ring(2).unwrap();
        let r = timing_fidelity_budget(&p, &OperationTable::coupled_donors(), &BudgetOptions::default()).unwrap();
        assert_eq!(r.counts["cz"], 2);
        assert!(r.notes.iter().any(|n| n.contains("2 uses charged at 1")));
        assert_eq!(r.coherence[0].quantity, "T2");
        // CZ is not in the single-donor table
        let err = timing_fidelity_budget(&p, &OperationTable::single_donor(), &BudgetOptions::default()).unwrap_err();
        assert_eq!(err, BudgetError::Unmapped("cz".into()));
    }

    #[test]
    fn echo_switch_selects_t2h() {
        let p = compile_linear(2, 1).unwrap();
        let t = OperationTable::single_donor();
        let free = timing_fidelity_budget(&p, &t, &BudgetOptions::default()).unwrap();
        let echo = timing_fidelity_budget(&p, &t, &BudgetOptions { hahn_echo: true, ..Default::default() }).unwrap();
        assert_eq!(free.coherence[0].quantity, "T2*");
        assert_eq!(echo.coherence[0].t2_us, 510.0);
    }

    #[test]
    fn bad_tables_rejected() {
        let mut t = OperationTable::single_donor();
        t.operations[0].fidelity = Some(1.5);
        assert!(t.validate().is_err());
        assert!(OperationTable::from_json("{}").is_err());
    }

    fn arb_instruction() -> impl Strategy<Value = Instruction> {
        prop_oneof![
            (0usize..8).prop_map(|e| Instruction::Fourier { emitter: e % 2, levels: vec![0, 1] }),
            (0usize..8, 0usize..8).prop_map(|(a, b)| Instruction::Permute { emitter: 0, a, b }),
            (0usize..8).prop_map(|c| Instruction::Edsr { emitter: 0, control: c }),
            (0usize..8).prop_map(|c| Instruction::Esr { emitter: 1, control: c }),
            (0usize..8).prop_map(|b| Instruction::Emit { emitter: 0, photon: 0, bin: b }),
            Just(Instruction::Cz { a: 0, b: 1, weight: 1 }),
            Just(Instruction::Measure { emitter: 0 }),
            (0.0f64..10.0).prop_map(|t| Instruction::Idle { emitter: 1, duration_us: t }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn budgets_compose_under_concatenation(
            a in prop::collection::vec(arb_instruction(), 0..20),
            b in prop::collection::vec(arb_instruction(), 0..20),
        ) {
            let t = OperationTable::coupled_donors();
            let o = BudgetOptions::default();
            let ra = timing_fidelity_budget(&program(a.clone()), &t, &o).unwrap();
            let rb = timing_fidelity_budget(&program(b.clone()), &t, &o).unwrap();
            let rab = timing_fidelity_budget(&program([a, b].concat()), &t, &o).unwrap();
            prop_assert!((rab.duration_us.min - ra.duration_us.min - rb.duration_us.min).abs() <= 1e-9 * rab.duration_us.min.max(1.0));
            prop_assert!((rab.duration_us.max - ra.duration_us.max - rb.duration_us.max).abs() <= 1e-9 * rab.duration_us.max.max(1.0));
            prop_assert!((rab.fidelity - ra.fidelity * rb.fidelity).abs() <= 1e-12);
            prop_assert!(rab.fidelity > 0.0 && rab.fidelity <= 1.0);
        }
    }
}
