//! Type-II fusion at the level of success probabilities and an ideal
//! projective measurement on the success branch.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{timing_fidelity_budget, BudgetError, BudgetOptions, OperationTable};
use crate::graph::{
    apply_correction, local_correction_search, make_ladder, make_ring, stabilizer_verify, CorrectionSet, GraphError,
    GraphSpec, StabilizerReport,
};
use crate::protocol::{compile_ladder, compile_linear_with_cap, compile_six_ring, ProtocolError};
use crate::statevec::{LevelSubset, Register, StateError};

/// Figure quoted once for `d = 4` that matches neither closed form
/// (`2/d² = 0.125`); kept only so tests can assert the mismatch.
pub const INCONSISTENT_D4_FIGURE: f64 = 0.055;

const TRIALS_PER_STREAM: u64 = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("dimension {0} below 2")]
    DimensionTooSmall(usize),
    #[error("probability {0} outside (0, 1]")]
    Probability(f64),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("Bell outcome {0:?} has zero probability")]
    ZeroProbability(BellConvention),
    #[error("target not producible by both schemes: {0}")]
    UnsupportedTarget(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionSpec {
    pub d: usize,
    pub ports: usize,
    /// Extra modes per attempt; reported, not simulated.
    pub ancilla_modes: usize,
}

impl FusionSpec {
    pub fn new(d: usize) -> Result<Self, FusionError> {
        if d < 2 {
            return Err(FusionError::DimensionTooSmall(d));
        }
        Ok(Self { d, ports: 2, ancilla_modes: d * (d - 2) })
    }
}

/// `2/(d(d+1))` for odd `d`, `2/d²` for even `d`. The even case is quoted as
/// approximate; it is used as exact here.
pub fn success_probability(d: usize) -> Result<f64, FusionError> {
    if d < 2 {
        return Err(FusionError::DimensionTooSmall(d));
    }
    let d = d as f64;
    Ok(if d as usize % 2 == 1 { 2.0 / (d * (d + 1.0)) } else { 2.0 / (d * d) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptStats {
    pub p: f64,
    pub mean: f64,
    pub variance: f64,
    /// `P(attempts > k)` for `k = 0, 1, ...` until it drops below 1e-6.
    pub tail: Vec<f64>,
}

pub fn expected_attempts(p: f64) -> Result<AttemptStats, FusionError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(FusionError::Probability(p));
    }
    let mut tail = vec![1.0];
    while *tail.last().expect("non-empty") >= 1e-6 && tail.len() < 10_000 {
        tail.push((1.0 - p).powi(tail.len() as i32));
    }
    Ok(AttemptStats { p, mean: 1.0 / p, variance: (1.0 - p) / (p * p), tail })
}

/// `P(attempts > k) = (1 − p)^k`.
pub fn attempt_tail(p: f64, k: u32) -> f64 {
    (1.0 - p).powi(k as i32)
}

pub fn sample_attempts<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    let mut n = 1;
    while rng.random::<f64>() >= p {
        n += 1;
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttemptSimulation {
    pub p: f64,
    pub trials: u64,
    pub mean: f64,
    /// Standard error from the closed-form variance.
    pub std_error: f64,
    pub sigmas: f64,
}

pub fn simulate_attempts(p: f64, trials: u64, master_seed: u64) -> Result<AttemptSimulation, FusionError> {
    let stats = expected_attempts(p)?;
    if trials == 0 {
        return Err(FusionError::Precondition("at least one trial required".into()));
    }
    let blocks = trials.div_ceil(TRIALS_PER_STREAM);
    let total: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(b);
            let n = TRIALS_PER_STREAM.min(trials - b * TRIALS_PER_STREAM);
            (0..n).map(|_| sample_attempts(p, &mut rng)).sum::<u64>()
        })
        .sum();
    let mean = total as f64 / trials as f64;
    let std_error = (stats.variance / trials as f64).sqrt();
    let sigmas = if std_error > 0.0 { (mean - stats.mean).abs() / std_error } else { (mean - stats.mean).abs() };
    Ok(AttemptSimulation { p, trials, mean, std_error, sigmas })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BellFrame {
    /// `F` on the first fused qudit before the pair projection.
    Fourier,
    /// `F†` on the first fused qudit before the pair projection.
    InverseFourier,
}

/// Pair projector onto `Σ_k ω^{phase·k} |k⟩|k+shift⟩ / √d` after the frame
/// operation on the first qudit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BellConvention {
    pub frame: BellFrame,
    pub shift: u32,
    pub phase: u32,
}

impl BellConvention {
    /// Frozen after the survey over all `2d²` projectors; every outcome in
    /// this frame yields a ring-verifiable state for `d` in 2..=4.
    pub const DEFAULT: BellConvention = BellConvention { frame: BellFrame::InverseFourier, shift: 0, phase: 0 };

    pub fn all(d: u32) -> Vec<BellConvention> {
        let mut out = Vec::with_capacity(2 * (d * d) as usize);
        for frame in [BellFrame::Fourier, BellFrame::InverseFourier] {
            for shift in 0..d {
                for phase in 0..d {
                    out.push(BellConvention { frame, shift, phase });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionOutcome {
    pub convention: BellConvention,
    /// Probability of this Bell outcome on the input state.
    pub probability: f64,
    pub success: bool,
    #[serde(skip)]
    pub register: Option<Register>,
    pub correction: Option<CorrectionSet>,
    pub report: Option<StabilizerReport>,
    /// Attempts drawn from the success probability, when sampled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempts: Option<u64>,
}

/// Projects qudits `i < j` onto the pair state and renormalizes. The result
/// keeps the remaining qudits in their original order.
pub fn bell_project(r: &Register, i: usize, j: usize, c: BellConvention) -> Result<(f64, Register), FusionError> {
    let n = r.num_subsystems();
    if i >= j || j >= n {
        return Err(FusionError::Precondition(format!("fused qudits ({i}, {j}) of {n}")));
    }
    let d = r.radix(i)?;
    if r.radix(j)? != d {
        return Err(StateError::DimensionMismatch { i, j, di: d, dj: r.radix(j)? }.into());
    }
    let mut framed = r.clone();
    let power = match c.frame {
        BellFrame::Fourier => 1,
        BellFrame::InverseFourier => 3,
    };
    framed.apply_fourier_power(&LevelSubset::first(i, d), power)?;

    let radices: Vec<usize> = (0..n).filter(|&s| s != i && s != j).map(|s| r.radix(s).expect("in range")).collect();
    let roles: Vec<_> = (0..n).filter(|&s| s != i && s != j).map(|s| r.roles()[s]).collect();
    let dim: usize = radices.iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    let norm = 1.0 / (d as f64).sqrt();
    for (k, a) in framed.amplitudes().iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let x = framed.digits(k);
        if x[j] != (x[i] + c.shift as usize) % d {
            continue;
        }
        let rest = x.iter().zip(framed.radices()).enumerate().filter(|&(s, _)| s != i && s != j);
        let idx = rest.fold(0, |acc, (_, (&xs, &rs))| acc * rs + xs);
        let ph = Complex64::from_polar(norm, -2.0 * PI * ((c.phase as usize * x[i]) % d) as f64 / d as f64);
        out[idx] += ph * a;
    }
    let mut reg = Register::from_amplitudes(&radices, &roles, out)?.with_cap(r.cap());
    let p = reg.norm().powi(2);
    if p < 1e-14 {
        return Err(FusionError::ZeroProbability(c));
    }
    reg.normalize();
    Ok((p, reg))
}

fn check_chain_ends(r: &Register, chain: &GraphSpec, i: usize, j: usize) -> Result<(), FusionError> {
    if i >= chain.n() || j >= chain.n() || chain.degree(i) != 1 || chain.degree(j) != 1 || i == j {
        return Err(FusionError::Precondition(format!("({i}, {j}) are not the two ends of the chain")));
    }
    if chain.edges().len() + 1 != chain.n() {
        return Err(FusionError::Precondition("input graph is not a chain".into()));
    }
    let rep = stabilizer_verify(r, chain)?;
    if !rep.pass {
        return Err(FusionError::Precondition(format!(
            "input state fails the chain stabilizers at vertices {:?}",
            rep.failing
        )));
    }
    Ok(())
}

/// Fuses the two ends of a chain state with one pair projector and checks
/// the result against `target` after a local correction search of depth 2.
pub fn fuse_chain_ends(
    r: &Register,
    chain: &GraphSpec,
    i: usize,
    j: usize,
    target: &GraphSpec,
    c: BellConvention,
) -> Result<FusionOutcome, FusionError> {
    check_chain_ends(r, chain, i, j)?;
    let (lo, hi) = (i.min(j), i.max(j));
    let (probability, reg) = bell_project(r, lo, hi, c)?;
    let correction = local_correction_search(&reg, target, 2)?;
    let report = match &correction {
        Some(k) => stabilizer_verify(&apply_correction(&reg, k)?, target)?,
        None => stabilizer_verify(&reg, target)?,
    };
    Ok(FusionOutcome {
        convention: c,
        probability,
        success: correction.is_some() && report.pass,
        register: Some(reg),
        correction,
        report: Some(report),
        attempts: None,
    })
}

/// [`fuse_chain_ends`] with the number of attempts drawn from the success
/// probability of the chain's dimension.
pub fn fuse_chain_ends_sampled<R: Rng + ?Sized>(
    r: &Register,
    chain: &GraphSpec,
    target: &GraphSpec,
    rng: &mut R,
) -> Result<FusionOutcome, FusionError> {
    let p = success_probability(chain.d() as usize)?;
    let attempts = sample_attempts(p, rng);
    let mut o = fuse_chain_ends(r, chain, 0, chain.n() - 1, target, BellConvention::DEFAULT)?;
    o.attempts = Some(attempts);
    Ok(o)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionSurvey {
    pub convention: BellConvention,
    pub probability: f64,
    pub success: bool,
}

/// Tries every pair projector on the chain ends.
pub fn survey_conventions(r: &Register, chain: &GraphSpec, target: &GraphSpec) -> Result<Vec<ConventionSurvey>, FusionError> {
    let n = chain.n();
    BellConvention::all(chain.d())
        .into_iter()
        .map(|c| match fuse_chain_ends(r, chain, 0, n - 1, target, c) {
            Ok(o) => Ok(ConventionSurvey { convention: c, probability: o.probability, success: o.success }),
            Err(FusionError::ZeroProbability(_)) => Ok(ConventionSurvey { convention: c, probability: 0.0, success: false }),
            Err(e) => Err(e),
        })
        .collect()
}

/// Of the candidates, the first graph the state verifies against after local
/// correction.
pub fn identify_graph<'g>(r: &Register, candidates: &'g [GraphSpec]) -> Result<Option<&'g GraphSpec>, FusionError> {
    for g in candidates {
        if local_correction_search(r, g, 2)?.is_some() {
            return Ok(Some(g));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Ring6,
    Ladder,
}

impl TargetKind {
    pub fn graph(self, d: u32) -> Result<GraphSpec, FusionError> {
        Ok(match self {
            TargetKind::Ring6 => make_ring(6, d, 1)?,
            TargetKind::Ladder => make_ladder(2, 3, d, 1)?,
        })
    }

    fn of(g: &GraphSpec) -> Result<Self, FusionError> {
        for k in [TargetKind::Ring6, TargetKind::Ladder] {
            if &k.graph(g.d())? == g {
                return Ok(k);
            }
        }
        Err(FusionError::UnsupportedTarget(format!("{} vertices, {} edges", g.n(), g.edges().len())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeReport {
    pub p_success: f64,
    pub expected_attempts: f64,
    pub photons_emitted_mean: f64,
    pub photons_destroyed_mean: f64,
    pub ancilla_modes_per_attempt: usize,
    pub fusions_per_attempt: usize,
    pub cz_gates: usize,
    pub time_mean_us: f64,
    pub deterministic: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeComparison {
    pub d: usize,
    pub target: TargetKind,
    #[serde(rename = "schemeA")]
    pub scheme_a: SchemeReport,
    #[serde(rename = "schemeB")]
    pub scheme_b: SchemeReport,
}

pub fn compare_schemes(
    d: usize,
    target: &GraphSpec,
    single: &OperationTable,
    coupled: &OperationTable,
) -> Result<SchemeComparison, FusionError> {
    compare_schemes_at(success_probability(d)?, d, target, single, coupled)
}

/// Scheme A builds a chain from one donor and closes each independent cycle
/// of the target with one fusion; an attempt is one fresh chain and all its
/// fusions. Scheme B runs the two-donor program once.
pub fn compare_schemes_at(
    p: f64,
    d: usize,
    target: &GraphSpec,
    single: &OperationTable,
    coupled: &OperationTable,
) -> Result<SchemeComparison, FusionError> {
    expected_attempts(p)?;
    let spec = FusionSpec::new(d)?;
    if target.d() as usize != d {
        return Err(FusionError::UnsupportedTarget(format!("target dimension {} for d = {d}", target.d())));
    }
    let kind = TargetKind::of(target)?;
    let n = target.n();
    let cycles = target.edges().len() + 1 - n;
    let chain_len = n + 2 * cycles;
    let opts = BudgetOptions::default();

    let chain = compile_linear_with_cap(d, chain_len, usize::MAX)?;
    let chain_time = timing_fidelity_budget(&chain, single, &opts)?.midpoint_us;
    let p_attempt = p.powi(cycles as i32);
    let attempts = 1.0 / p_attempt;
    let scheme_a = SchemeReport {
        p_success: p_attempt,
        expected_attempts: attempts,
        photons_emitted_mean: chain_len as f64 * attempts,
        photons_destroyed_mean: (2 * cycles) as f64 * attempts,
        ancilla_modes_per_attempt: spec.ancilla_modes * cycles,
        fusions_per_attempt: cycles,
        cz_gates: 0,
        time_mean_us: chain_time * attempts,
        deterministic: p_attempt >= 1.0,
        notes: if d.is_multiple_of(2) { vec!["even-d success probability is approximate".into()] } else { vec![] },
    };

    let prog = match kind {
        TargetKind::Ring6 => compile_six_ring(d)?,
        TargetKind::Ladder => compile_ladder(d)?,
    };
    let b = timing_fidelity_budget(&prog, coupled, &opts)?;
    let scheme_b = SchemeReport {
        p_success: 1.0,
        expected_attempts: 1.0,
        photons_emitted_mean: n as f64,
        photons_destroyed_mean: 0.0,
        ancilla_modes_per_attempt: 0,
        fusions_per_attempt: 0,
        cz_gates: prog.count("cz"),
        time_mean_us: b.midpoint_us,
        deterministic: true,
        notes: b.notes,
    };
    Ok(SchemeComparison { d, target: kind, scheme_a, scheme_b })
}
