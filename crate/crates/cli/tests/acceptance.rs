//! One PASS/FAIL line per acceptance criterion.
//!
//! Run with `cargo test -p donorgraph-cli --test acceptance -- --nocapture`.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use donorgraph_core::budget::{
    loss_success, monte_carlo_mode_loss, timing_fidelity_budget, BudgetOptions, CavityParams, LossCounting,
    OperationTable,
};
use donorgraph_core::fusion::{fuse_chain_ends, success_probability, BellConvention, INCONSISTENT_D4_FIGURE};
use donorgraph_core::graph::{build_graph_state, make_ladder, make_linear, make_ring};
use donorgraph_core::protocol::{
    compile_ladder, compile_linear, compile_single_photon, compile_six_ring, execute_with, verify_against_target,
    w_state_check, ExecuteOptions, Instruction, Program, ProgramHeader,
};
use donorgraph_core::spin::{
    edsr_comparison, enumerate_transitions, spectrum, Device, DoubleSpinParams, SpectatorConvention, SpinParams,
    TransitionKind, EDSR_CAVITY_REFERENCE_MHZ,
};

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: &'static str, pass: bool, detail: impl Into<String>) -> Line {
    Line { id, pass, detail: detail.into() }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn graph_algebra() -> Line {
    let ((dev, signs_ok), dt) = timed(|| {
        let r = build_graph_state(&make_linear(3, 2, 1).unwrap()).unwrap();
        let s = 1.0 / 8f64.sqrt();
        let mut dev = 0.0f64;
        let mut signs_ok = true;
        for k in 0..8usize {
            let bits = [k >> 2, (k >> 1) & 1, k & 1];
            let minus = matches!(k, 0b011 | 0b110);
            let want = if minus { -s } else { s };
            let a = r.amplitude(&bits).unwrap();
            dev = dev.max((a - Complex64::new(want, 0.0)).norm());
            signs_ok &= (a.re < 0.0) == minus;
        }
        (dev, signs_ok)
    });
    line("1", dev <= 1e-10 && signs_ok && dt < Duration::from_secs(1), format!("max deviation {dev:.1e}, minus signs on 011 and 110 only, {dt:?}"))
}

fn single_photon_w() -> Line {
    let ((n, worst), dt) = timed(|| {
        let t = execute_with(&compile_single_photon(3).unwrap(), ExecuteOptions::enumerate()).unwrap();
        let worst = t
            .branches
            .iter()
            .map(|b| w_state_check(&b.photonic_state(1).unwrap()).unwrap().fidelity)
            .fold(1.0, f64::min);
        (t.branches.len(), worst)
    });
    line("2", n == 3 && worst >= 1.0 - 1e-10 && dt < Duration::from_secs(1), format!("{n} outcomes, worst W fidelity {worst:.12}, {dt:?}"))
}

/// Pre-measurement amplitudes of the two-level chain protocol, indexed
/// `[nuclear branch][photon bits, first photon most significant]`.
fn chain_amplitudes(n: usize) -> Vec<Vec<Complex64>> {
    let t = execute_with(&compile_linear(2, n).unwrap(), ExecuteOptions::enumerate()).unwrap();
    let pre = t.pre_measurement.expect("chain protocol ends in a readout");
    (0..2)
        .map(|nuc| {
            (0..1usize << n)
                .map(|k| {
                    let mut digits = vec![nuc, 0];
                    digits.extend((0..n).map(|p| (k >> (n - 1 - p)) & 1));
                    pre.amplitude(&digits).unwrap()
                })
                .collect()
        })
        .collect()
}

/// Signed expansion as printed: one `(sign, bit string)` list per nuclear level, 7/2 first.
fn expansion(terms: [&[&str]; 2]) -> Vec<Vec<f64>> {
    terms
        .iter()
        .map(|branch| {
            let n = branch[0].len() - 1;
            let mut v = vec![0.0; 1 << n];
            for t in branch.iter() {
                let sign = if t.starts_with('-') { -1.0 } else { 1.0 };
                v[usize::from_str_radix(&t[1..], 2).unwrap()] += sign;
            }
            v
        })
        .collect()
}

/// Largest deviation after fitting one global complex factor.
fn fit_deviation(ours: &[Vec<Complex64>], theirs: &[Vec<f64>]) -> f64 {
    let a: Vec<Complex64> = ours.iter().flatten().copied().collect();
    let b: Vec<f64> = theirs.iter().flatten().copied().collect();
    let num: Complex64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    let c = num / den;
    a.iter().zip(&b).map(|(x, y)| (x - c * y).norm()).fold(0.0, f64::max) / c.norm()
}

/// `|⟨a|b⟩|² / (‖a‖²‖b‖²)`.
fn overlap(a: &[Complex64], b: &[f64]) -> f64 {
    let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|y| y * y).sum();
    ip.norm_sqr() / (na * nb)
}

/// Degree of the algebraic normal form of `f: {0,1}^n -> {0,1}`.
fn anf_degree(f: &[u8]) -> u32 {
    let mut a = f.to_vec();
    let n = a.len().trailing_zeros();
    for i in 0..n {
        for k in 0..a.len() {
            if k >> i & 1 == 1 {
                a[k] ^= a[k ^ (1 << i)];
            }
        }
    }
    (0..a.len()).filter(|&k| a[k] == 1).map(|k| k.count_ones()).max().unwrap_or(0)
}

fn chain_expansions() -> (Line, Line, u32) {
    let (res, dt) = timed(|| {
        let two = expansion([&["+10", "+00", "+11", "-01"], &["+11", "-01", "-10", "-00"]]);
        let three = expansion([
            &["+101", "+001", "+111", "-011", "+110", "-010", "-100", "-000"],
            &["+000", "+010", "+100", "-110", "-101", "-001", "-111", "-011"],
        ]);
        let d2 = fit_deviation(&chain_amplitudes(2), &two);
        let ours3 = chain_amplitudes(3);
        let d3 = fit_deviation(&ours3, &three);
        let per_branch: Vec<f64> = (0..2).map(|b| overlap(&ours3[b], &three[b])).collect();
        let worst_branch_degree = three
            .iter()
            .map(|b| anf_degree(&b.iter().map(|&s| u8::from(s < 0.0)).collect::<Vec<_>>()))
            .max()
            .unwrap();
        (d2, d3, per_branch, worst_branch_degree)
    });
    let (d2, d3, per_branch, degree) = res;
    let fast = dt < Duration::from_secs(1);
    let two = line("3a", d2 <= 1e-10 && fast, format!("n=2 two-photon expansion, max deviation {d2:.1e}, {dt:?}"));
    let three = line(
        "3b",
        d3 <= 1e-10 && fast,
        format!(
            "n=3 three-photon expansion, max deviation {d3:.2} (branch overlaps {:.3}/{:.3}); the printed sign pattern on one nuclear branch has \
             degree-{degree} sign polynomial, so it is no graph state and no protocol output up to local phases \
             can equal it (engine output still verifies as the 3-line)",
            per_branch[0], per_branch[1]
        ),
    );
    (two, three, degree)
}

fn stabilizer_suite() -> Line {
    let (res, dt) = timed(|| {
        let mut failures = vec![];
        let mut checked = 0;
        for d in 2..=4usize {
            let dg = d as u32;
            let cases: Vec<(&str, Program, _)> = vec![
                ("line-2", compile_linear(d, 2).unwrap(), make_linear(2, dg, 1).unwrap()),
                ("line-3", compile_linear(d, 3).unwrap(), make_linear(3, dg, 1).unwrap()),
                ("ring-6", compile_six_ring(d).unwrap(), make_ring(6, dg, 1).unwrap()),
                ("ladder-2x3", compile_ladder(d).unwrap(), make_ladder(2, 3, dg, 1).unwrap()),
            ];
            for (name, p, g) in cases {
                let t = execute_with(&p, ExecuteOptions::enumerate()).unwrap();
                let rep = verify_against_target(&t, &g).unwrap();
                checked += rep.outcomes.len();
                if !rep.pass {
                    failures.push(format!("{name} d={d}"));
                }
            }
        }
        (failures, checked)
    });
    let (failures, checked) = res;
    line(
        "4",
        failures.is_empty() && dt < Duration::from_secs(300),
        format!("{checked} outcomes over line/ring-6/ladder at d=2..4, failures {failures:?}, {dt:?}"),
    )
}

fn fusion_probabilities() -> Line {
    // quoted figures are the exact values cut off after their printed digits
    let quoted = [(3, 0.16, 2), (4, 0.125, 3), (5, 0.066, 3), (6, 0.055, 3), (7, 0.0357, 4)];
    let exact = [0.1667, 0.125, 0.0667, 0.0556, 0.0357];
    let mut ok = true;
    let mut parts = vec![];
    for (&(d, q, digits), e) in quoted.iter().zip(exact) {
        let p = success_probability(d).unwrap();
        let scale = 10f64.powi(digits);
        let truncated = (p * scale).floor() / scale;
        ok &= (p - e).abs() <= 1e-3 && (truncated - q).abs() < 1e-12;
        parts.push(format!("d={d} {p:.4} (quoted {q})"));
    }
    let p4 = success_probability(4).unwrap();
    ok &= (p4 - INCONSISTENT_D4_FIGURE).abs() > 1e-3;
    line("5", ok, format!("{}; other d=4 figure {INCONSISTENT_D4_FIGURE} flagged inconsistent", parts.join(", ")))
}

fn chain_fusion() -> Line {
    let mut parts = vec![];
    let mut ok = true;
    for d in [2u32, 3] {
        let (out, dt) = timed(|| {
            let chain = make_linear(8, d, 1).unwrap();
            let ring = make_ring(6, d, 1).unwrap();
            let r = build_graph_state(&chain).unwrap();
            fuse_chain_ends(&r, &chain, 0, 7, &ring, BellConvention::DEFAULT).unwrap()
        });
        ok &= out.success && (d != 3 || dt < Duration::from_secs(120));
        parts.push(format!("d={d} {} ({dt:?})", if out.success { "ring-6" } else { "no ring" }));
    }
    line("6", ok, parts.join(", "))
}

fn loss_rows() -> Line {
    let at = |q_i| loss_success(&CavityParams { q_i, ..CavityParams::default() }).unwrap();
    let a = at(1e6);
    let b = at(1e5);
    let ok = (a.loss - 0.0189).abs() <= 0.0005
        && (a.success - 0.981).abs() <= 0.001
        && (a.success_db_magnitude - 0.08).abs() <= 0.02
        && (b.loss - 0.15).abs() <= 0.005
        && (b.success - 0.845).abs() <= 0.006
        && (b.success_db_magnitude - 0.7).abs() <= 0.03;
    line(
        "7",
        ok,
        format!(
            "Q_i=1e6: loss {:.4} success {:.4} {:.3} dB; Q_i=1e5: loss {:.4} success {:.4} {:.3} dB",
            a.loss, a.success, a.success_db_magnitude, b.loss, b.success, b.success_db_magnitude
        ),
    )
}

fn spectrum_counts() -> Line {
    let (res, dt) = timed(|| {
        let single = Device::Single(SpinParams::default()).hamiltonian().unwrap();
        let double = Device::Double(DoubleSpinParams::default()).hamiltonian().unwrap();
        let s = spectrum(&double).unwrap();
        let esr = enumerate_transitions(&s, TransitionKind::Esr, SpectatorConvention::Unrestricted).unwrap().len();
        let strong = enumerate_transitions(&s, TransitionKind::Edsr, SpectatorConvention::weak_fixed()).unwrap().len();
        let weak = enumerate_transitions(&s, TransitionKind::Edsr, SpectatorConvention::strong_fixed()).unwrap().len();
        (single.dim(), double.dim(), esr, strong, weak)
    });
    let (n1, n2, esr, strong, weak) = res;
    line(
        "8",
        (n1, n2, esr, strong, weak) == (16, 128, 64, 7, 56) && dt < Duration::from_secs(10),
        format!("dims {n1}/{n2}, ESR {esr}, strong EDSR {strong}, weak EDSR {weak}, {dt:?}"),
    )
}

fn edsr_closed_form() -> Line {
    let checks = edsr_comparison(&SpinParams::default()).unwrap();
    let worst = checks.iter().map(|c| c.relative_difference).fold(0.0, f64::max);
    line(
        "9",
        checks.len() == 7 && worst < 0.005,
        format!("{} lines, worst relative difference {worst:.2e}, cavity reference {EDSR_CAVITY_REFERENCE_MHZ} MHz", checks.len()),
    )
}

fn program(instructions: Vec<Instruction>) -> Program {
    Program { header: ProgramHeader { d: 8, emitters: 2, photons: 2, layout: None, notes: vec![] }, instructions }
}

fn arb_instruction() -> impl Strategy<Value = Instruction> {
    let e = 0usize..2;
    prop_oneof![
        (e.clone(), 2usize..=8).prop_map(|(emitter, k)| Instruction::Fourier { emitter, levels: (0..k).collect() }),
        (e.clone(), 0usize..8, 0usize..8).prop_map(|(emitter, a, b)| Instruction::Permute { emitter, a, b }),
        (e.clone(), 0usize..8).prop_map(|(emitter, control)| Instruction::Edsr { emitter, control }),
        (e.clone(), 0usize..8).prop_map(|(emitter, control)| Instruction::Esr { emitter, control }),
        (e.clone(), 0usize..2, 0usize..8).prop_map(|(emitter, photon, bin)| Instruction::Emit { emitter, photon, bin }),
        (1u32..8).prop_map(|weight| Instruction::Cz { a: 0, b: 1, weight }),
        e.clone().prop_map(|emitter| Instruction::Measure { emitter }),
        (e, 0.0f64..100.0).prop_map(|(emitter, duration_us)| Instruction::Idle { emitter, duration_us }),
    ]
}

fn budget_arithmetic() -> Line {
    let single = OperationTable::single_donor();
    let coupled = OperationTable::coupled_donors();
    let o = BudgetOptions::default();
    let esr = timing_fidelity_budget(&program(vec![Instruction::Esr { emitter: 0, control: 0 }]), &single, &o).unwrap();
    let esr_ok = (esr.duration_us.min - 1.0).abs() < 1e-12
        && (esr.duration_us.max - 1.0).abs() < 1e-12
        && (esr.fidelity - 0.995).abs() < 1e-12;

    let mut runner = TestRunner::new_with_rng(Config::with_cases(100), proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha));
    let strat = (prop::collection::vec(arb_instruction(), 0..20), prop::collection::vec(arb_instruction(), 0..20));
    let prop = runner.run(&strat, |(a, b)| {
        let ra = timing_fidelity_budget(&program(a.clone()), &coupled, &o).unwrap();
        let rb = timing_fidelity_budget(&program(b.clone()), &coupled, &o).unwrap();
        let rab = timing_fidelity_budget(&program([a, b].concat()), &coupled, &o).unwrap();
        let tol = 1e-9 * rab.duration_us.max.max(1.0);
        prop_assert!((rab.duration_us.min - ra.duration_us.min - rb.duration_us.min).abs() <= tol);
        prop_assert!((rab.duration_us.max - ra.duration_us.max - rb.duration_us.max).abs() <= tol);
        prop_assert!((rab.fidelity - ra.fidelity * rb.fidelity).abs() <= 1e-12);
        Ok(())
    });
    line(
        "10",
        esr_ok && prop.is_ok(),
        format!(
            "single ESR {} us / {}; concatenation property over 100 programs: {}",
            esr.duration_us.max,
            esr.fidelity,
            match &prop {
                Ok(()) => "holds".to_string(),
                Err(e) => e.to_string(),
            }
        ),
    )
}

fn monte_carlo() -> Line {
    let (res, dt) = timed(|| {
        [0.01, 0.05, 0.10]
            .map(|p| monte_carlo_mode_loss(6, 1, p, LossCounting::PerPhoton, 100_000, 7).unwrap())
    });
    let ok = res.iter().all(|s| s.sigmas <= 3.0) && dt < Duration::from_secs(30);
    let parts: Vec<String> =
        res.iter().map(|s| format!("p={} {:.4} vs {:.4} ({:.2} sigma)", s.p_loss, s.rate, s.expected, s.sigmas)).collect();
    line("11", ok, format!("{}, {dt:?}", parts.join("; ")))
}

fn run_cli(out: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_donorgraph"))
        .arg("--out")
        .arg(out)
        .args(["--seed", "11"])
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn determinism() -> Line {
    let runs: [&[&str]; 6] = [
        &["spectrum", "--kind", "edsr"],
        &["protocol", "run", "--protocol", "six-ring", "--d", "2"],
        &["fusion", "--d", "2", "--chain-n", "6", "--trials", "20000"],
        &["compare", "--d", "3", "--target", "ladder"],
        &["budget", "--sweep", "Qi=1e5:1e6:log10:5"],
        &["sweep"],
    ];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut ok = true;
    for args in runs {
        ok &= run_cli(a.path(), args) && run_cli(b.path(), args);
    }
    let fa = read_dir_sorted(a.path());
    let fb = read_dir_sorted(b.path());
    let identical = ok && !fa.is_empty() && fa == fb;
    line("12", identical, format!("{} output files compared byte for byte", fa.len()))
}

#[test]
fn acceptance() {
    let (c3a, c3b, degree) = chain_expansions();
    let lines = vec![
        graph_algebra(),
        single_photon_w(),
        c3a,
        c3b,
        stabilizer_suite(),
        fusion_probabilities(),
        chain_fusion(),
        loss_rows(),
        spectrum_counts(),
        edsr_closed_form(),
        budget_arithmetic(),
        monte_carlo(),
        determinism(),
    ];
    for l in &lines {
        println!("criterion {:<3} {}  {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail);
    }
    // The printed three-photon expansion is not a stabilizer state; that
    // line is expected to fail for exactly this reason and no other.
    let unattainable = |l: &Line| l.id == "3b" && degree == 3;
    let unexpected: Vec<&str> = lines.iter().filter(|l| !l.pass && !unattainable(l)).map(|l| l.id).collect();
    assert!(unexpected.is_empty(), "failing criteria: {unexpected:?}");
}
