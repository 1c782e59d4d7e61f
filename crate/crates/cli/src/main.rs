//! `donorgraph`: spin spectra, emission protocols, fusion statistics and
//! loss/timing budgets from the command line.
//!
//! Exit codes: 0 ok, 2 bad input, 3 ambiguous eigenstate labels,
//! 4 verification failed, 5 resource cap exceeded.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use donorgraph_core::budget::{
    emission_time, loss_success, loss_sweep, loss_sweep_to_csv, timing_fidelity_budget, BudgetError, BudgetOptions,
    CavityParams, OperationTable, SweepAxis,
};
use donorgraph_core::fusion::{
    compare_schemes, expected_attempts, fuse_chain_ends, simulate_attempts, success_probability, survey_conventions,
    BellConvention, FusionError, FusionSpec, TargetKind, INCONSISTENT_D4_FIGURE,
};
use donorgraph_core::graph::{build_graph_state_with_cap, make_ladder, make_linear, make_ring, GraphError, GraphSpec};
use donorgraph_core::protocol::{
    compile_ladder, compile_ladder_literal, compile_linear_with_cap, compile_single_photon, compile_six_ring,
    execute_with, verify_against_target, w_state_check, ExecuteOptions, Mode, Program, ProgramHeader, ProtocolError,
    TraceDump,
};
use donorgraph_core::spin::{
    default_perturbations, edsr_comparison, enumerate_transitions, sensitivity_sweep, spectrum, sweep_to_csv, Device,
    DoubleSpinParams, SpectatorConvention, SpinError, SpinParams, TransitionKind, EDSR_CAVITY_REFERENCE_MHZ,
};
use donorgraph_core::statevec::{MeasurementRecord, StateError, DEFAULT_AMPLITUDE_CAP};

use output::Output;

/// Seed used when `--seed` is not given.
const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Ambiguity(String),
    #[error("{0}")]
    Verification(String),
    #[error("{0}")]
    Cap(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Ambiguity(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Cap(_) => 5,
        }
    }
}

impl From<SpinError> for CliError {
    fn from(e: SpinError) -> Self {
        match e {
            SpinError::AmbiguousLabel { .. } | SpinError::WeakDominance { .. } => CliError::Ambiguity(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        match e {
            StateError::CapExceeded { .. } => CliError::Cap(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::State(s) => s.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        if e.is_cap() {
            CliError::Cap(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<BudgetError> for CliError {
    fn from(e: BudgetError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::Graph(g) => g.into(),
            FusionError::State(s) => s.into(),
            FusionError::Protocol(p) => p.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "donorgraph", version, about = "Donor-emitter qudit graph-state toolkit")]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Amplitude cap for state vectors.
    #[arg(long, global = true)]
    cap: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues and allowed transitions of a donor spin Hamiltonian.
    Spectrum(SpectrumArgs),
    /// Transition shifts under the quoted device-to-device parameter spread.
    Sweep(SweepArgs),
    /// Compile and run an emission protocol, then verify the photonic state.
    Protocol(ProtocolArgs),
    /// Fusion success statistics and end-to-end fusion of a chain into a ring.
    Fusion(FusionArgs),
    /// Fusion-based versus coupled-donor construction of a target graph.
    Compare(CompareArgs),
    /// Timing and fidelity budget of a program, plus cavity loss.
    Budget(BudgetArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DeviceArg {
    Single,
    Double,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Esr,
    Nmr,
    Edsr,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectatorArg {
    Unrestricted,
    WeakFixed,
    StrongFixed,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Parameter JSON; device defaults when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "single")]
    device: DeviceArg,
    #[arg(long, value_enum, default_value = "esr")]
    kind: KindArg,
    #[arg(long, value_enum, default_value = "unrestricted")]
    spectator: SpectatorArg,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "single")]
    device: DeviceArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Action {
    Run,
    Verify,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolKind {
    SinglePhoton,
    Linear,
    SixRing,
    Ladder,
    /// Ladder step list without the Fourier before readout.
    LadderLiteral,
}

#[derive(Args)]
struct ProtocolArgs {
    #[arg(value_enum)]
    action: Action,
    #[arg(long, value_enum)]
    protocol: ProtocolKind,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Photon count for the linear protocol.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Enumerate every readout outcome instead of sampling one.
    #[arg(long)]
    enumerate: bool,
}

#[derive(Args)]
struct FusionArgs {
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Length of the chain whose ends are fused.
    #[arg(long, default_value_t = 8)]
    chain_n: usize,
    /// Monte Carlo trials for the attempt count.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Also try every pair projector.
    #[arg(long)]
    survey: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Ring6,
    Ladder,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long, value_enum, default_value = "ring6")]
    target: TargetArg,
    /// Single-donor table (file, `table1` or `single-donor`).
    #[arg(long, default_value = "table1")]
    single_table: String,
    /// Coupled-donor table (file, `table3` or `coupled-donors`).
    #[arg(long, default_value = "table3")]
    coupled_table: String,
}

#[derive(Args)]
struct BudgetArgs {
    /// Program JSON, a bare instruction list, or a trace; empty program when omitted.
    #[arg(long)]
    program: Option<PathBuf>,
    /// Table file, or `table1` / `table3` for the bundled ones.
    #[arg(long, default_value = "table1")]
    table: String,
    /// Loss sweep such as `Qi=1e5:1e6:log10`.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, default_value_t = 1e6)]
    q_i: f64,
    #[arg(long, default_value_t = 1e4)]
    q_c: f64,
    #[arg(long, default_value_t = 3.0)]
    g_s: f64,
    #[arg(long, default_value_t = 28.41)]
    omega_c: f64,
    /// Compare against echo coherence times.
    #[arg(long)]
    hahn_echo: bool,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_device(device: DeviceArg, params: Option<&Path>) -> Result<Device, CliError> {
    Ok(match (device, params) {
        (DeviceArg::Single, None) => Device::Single(SpinParams::default()),
        (DeviceArg::Double, None) => Device::Double(DoubleSpinParams::default()),
        (DeviceArg::Single, Some(p)) => Device::Single(parse_json(p)?),
        (DeviceArg::Double, Some(p)) => Device::Double(parse_json(p)?),
    })
}

fn spectrum_cmd(out: &Output, a: &SpectrumArgs) -> Result<(), CliError> {
    let device = load_device(a.device, a.params.as_deref())?;
    let s = spectrum(&device.hamiltonian()?)?;
    let kind = match a.kind {
        KindArg::Esr => TransitionKind::Esr,
        KindArg::Nmr => TransitionKind::Nmr,
        KindArg::Edsr => TransitionKind::Edsr,
    };
    let convention = match a.spectator {
        SpectatorArg::Unrestricted => SpectatorConvention::Unrestricted,
        SpectatorArg::WeakFixed => SpectatorConvention::weak_fixed(),
        SpectatorArg::StrongFixed => SpectatorConvention::strong_fixed(),
    };
    let list = enumerate_transitions(&s, kind, convention)?;
    out.csv("spectrum.csv", &s.to_csv())?;
    out.csv("transitions.csv", &list.to_csv())?;
    println!("{} levels, {} {} transitions", s.len(), list.len(), kind);
    if let (Device::Single(p), TransitionKind::Edsr) = (device, kind) {
        let checks = edsr_comparison(&p)?;
        #[derive(Serialize)]
        struct EdsrReport<T> {
            reference_mhz: f64,
            checks: T,
        }
        out.json("edsr_check.json", &EdsrReport { reference_mhz: EDSR_CAVITY_REFERENCE_MHZ, checks: &checks })?;
        println!("m_I    closed form MHz   diagonalized MHz   rel. diff   (cavity reference {EDSR_CAVITY_REFERENCE_MHZ} MHz)");
        for c in &checks {
            println!("{:>5}  {:>15.3}  {:>17.3}  {:>10.2e}", c.m_i.to_string(), c.closed_form_mhz, c.diagonalized_mhz, c.relative_difference);
        }
    }
    Ok(())
}

fn sweep_cmd(out: &Output, a: &SweepArgs) -> Result<(), CliError> {
    let device = load_device(a.device, a.params.as_deref())?;
    let rows = sensitivity_sweep(&device, &default_perturbations(&device))?;
    out.csv("sweep.csv", &sweep_to_csv(&rows))?;
    let worst = rows.iter().map(|r| r.shift_mhz.abs()).fold(0.0, f64::max);
    println!("{} rows, largest shift {worst:.6} MHz", rows.len());
    Ok(())
}

#[derive(Serialize)]
struct WOutcome {
    records: Vec<MeasurementRecord>,
    probability: f64,
    z_power: u32,
    fidelity: f64,
    pass: bool,
}

#[derive(Serialize)]
struct WReport {
    target: &'static str,
    outcomes: Vec<WOutcome>,
    pass: bool,
}

fn protocol_cmd(out: &Output, a: &ProtocolArgs, seed: u64, cap: usize) -> Result<(), CliError> {
    let d = a.d;
    let program = match a.protocol {
        ProtocolKind::SinglePhoton => compile_single_photon(d)?,
        ProtocolKind::Linear => compile_linear_with_cap(d, a.n, cap)?,
        ProtocolKind::SixRing => compile_six_ring(d)?,
        ProtocolKind::Ladder => compile_ladder(d)?,
        ProtocolKind::LadderLiteral => compile_ladder_literal(d)?,
    };
    let mode = if a.action == Action::Verify || a.enumerate { Mode::Enumerate } else { Mode::Sample { seed } };
    let trace = execute_with(&program, ExecuteOptions { mode, cap })?;
    out.json("program.json", &program)?;
    out.json("trace.json", &trace.dump())?;

    let dg = d as u32;
    let (pass, summary) = if a.protocol == ProtocolKind::SinglePhoton {
        let mut outcomes = Vec::new();
        for b in &trace.branches {
            let w = w_state_check(&b.photonic_state(1)?)?;
            outcomes.push(WOutcome {
                records: b.records.clone(),
                probability: b.probability,
                z_power: w.z_power,
                fidelity: w.fidelity,
                pass: w.pass,
            });
        }
        let pass = outcomes.iter().all(|o| o.pass);
        let n = outcomes.len();
        out.json("verification.json", &WReport { target: "w-state", outcomes, pass })?;
        (pass, format!("{n} outcomes against the {d}-bin W state"))
    } else {
        let target: GraphSpec = match a.protocol {
            ProtocolKind::Linear if a.n == 1 => GraphSpec::empty(1, dg)?,
            ProtocolKind::Linear => make_linear(a.n, dg, 1)?,
            ProtocolKind::SixRing => make_ring(6, dg, 1)?,
            _ => make_ladder(2, 3, dg, 1)?,
        };
        let rep = verify_against_target(&trace, &target)?;
        out.json("verification.json", &rep)?;
        for n in &rep.notes {
            println!("note: {n}");
        }
        (rep.pass, format!("{} outcomes against a {}-vertex target", rep.outcomes.len(), target.n()))
    };
    println!("{} instructions, {}: {}", program.instructions.len(), summary, if pass { "pass" } else { "FAIL" });
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification("photonic state does not verify against the target".into()))
    }
}

fn fusion_cmd(out: &Output, a: &FusionArgs, seed: u64, cap: usize) -> Result<(), CliError> {
    let spec = FusionSpec::new(a.d)?;
    let p = success_probability(a.d)?;
    let table: Vec<(usize, f64)> = (2..=8).map(|d| (d, success_probability(d).expect("d >= 2"))).collect();
    let mut stats = expected_attempts(p)?;
    stats.tail.truncate(32);
    let simulation = simulate_attempts(p, a.trials, seed)?;
    if a.chain_n < 4 {
        return Err(CliError::Input(format!("chain of {} photons has no ring to close", a.chain_n)));
    }
    let dg = a.d as u32;
    let chain = make_linear(a.chain_n, dg, 1)?;
    let target = make_ring(a.chain_n - 2, dg, 1)?;
    let state = build_graph_state_with_cap(&chain, cap)?;
    let fused = fuse_chain_ends(&state, &chain, 0, a.chain_n - 1, &target, BellConvention::DEFAULT)?;
    let survey = if a.survey { Some(survey_conventions(&state, &chain, &target)?) } else { None };

    let mut notes = vec![];
    if a.d.is_multiple_of(2) {
        notes.push("even-d success probability is approximate".to_string());
    }
    if a.d == 4 {
        notes.push(format!("a figure of {INCONSISTENT_D4_FIGURE} is also quoted for d = 4; it matches neither formula"));
    }
    let report = serde_json::json!({
        "d": a.d,
        "spec": spec,
        "p_success": p,
        "table": table.iter().map(|&(d, p)| serde_json::json!({"d": d, "p": p})).collect::<Vec<_>>(),
        "attempts": stats,
        "simulation": simulation,
        "chain": {
            "n": a.chain_n,
            "target_vertices": target.n(),
            "outcome": fused,
        },
        "survey": survey,
        "notes": notes,
    });
    out.json("fusion.json", &report)?;
    println!(
        "d={} p={:.4} mean attempts {:.3} (simulated {:.3}); {}-chain -> {}-ring: {}",
        a.d,
        p,
        1.0 / p,
        simulation.mean,
        a.chain_n,
        target.n(),
        if fused.success { "pass" } else { "FAIL" }
    );
    if fused.success {
        Ok(())
    } else {
        Err(CliError::Verification("fused state does not verify against the ring".into()))
    }
}

fn load_table(name: &str) -> Result<OperationTable, CliError> {
    Ok(match name {
        "table1" | "single-donor" => OperationTable::single_donor(),
        "table3" | "coupled-donors" => OperationTable::coupled_donors(),
        path => OperationTable::from_json(&read(Path::new(path))?)?,
    })
}

fn compare_cmd(out: &Output, a: &CompareArgs) -> Result<(), CliError> {
    let single = load_table(&a.single_table)?;
    let coupled = load_table(&a.coupled_table)?;
    let dg = u32::try_from(a.d).map_err(|_| CliError::Input(format!("d = {}", a.d)))?;
    if a.d < 2 {
        return Err(CliError::Input(format!("dimension {} below 2", a.d)));
    }
    let target = match a.target {
        TargetArg::Ring6 => TargetKind::Ring6,
        TargetArg::Ladder => TargetKind::Ladder,
    }
    .graph(dg)?;
    let c = compare_schemes(a.d, &target, &single, &coupled)?;
    out.json("compare.json", &c)?;
    println!(
        "scheme A: {:.3} attempts, {:.1} photons destroyed, {:.0} us; scheme B: deterministic, {} CZ, {:.0} us",
        c.scheme_a.expected_attempts,
        c.scheme_a.photons_destroyed_mean,
        c.scheme_a.time_mean_us,
        c.scheme_b.cz_gates,
        c.scheme_b.time_mean_us
    );
    Ok(())
}

fn load_program(path: &Path) -> Result<Program, CliError> {
    let v: Value = parse_json(path)?;
    let bad = |e: serde_json::Error| CliError::Input(format!("{}: {e}", path.display()));
    match v {
        Value::Array(_) => Ok(Program {
            header: ProgramHeader { d: 2, emitters: 1, photons: 0, layout: None, notes: vec![] },
            instructions: serde_json::from_value(v).map_err(bad)?,
        }),
        Value::Object(ref m) if m.contains_key("checksums") => {
            Ok(serde_json::from_value::<TraceDump>(v).map_err(bad)?.program)
        }
        _ => serde_json::from_value(v).map_err(bad),
    }
}

fn budget_cmd(out: &Output, a: &BudgetArgs) -> Result<(), CliError> {
    let table = load_table(&a.table)?;
    let program = match &a.program {
        Some(p) => load_program(p)?,
        None => Program {
            header: ProgramHeader { d: 2, emitters: 1, photons: 0, layout: None, notes: vec![] },
            instructions: vec![],
        },
    };
    let opts = BudgetOptions { g_s_mhz: a.g_s, hahn_echo: a.hahn_echo };
    let timing = timing_fidelity_budget(&program, &table, &opts)?;
    let cavity = CavityParams { omega_c_ghz: a.omega_c, g_s_mhz: a.g_s, q_i: a.q_i, q_c: a.q_c };
    let loss = loss_success(&cavity)?;
    let emission = emission_time(a.g_s)?;
    out.json("budget.json", &serde_json::json!({ "timing": timing, "loss": loss, "emission": emission }))?;
    println!(
        "{} instructions: {:.3}-{:.3} us, fidelity {:.6}; loss {:.4}, success {:.4} ({:.3} dB)",
        program.instructions.len(),
        timing.duration_us.min,
        timing.duration_us.max,
        timing.fidelity,
        loss.loss,
        loss.success,
        loss.success_db
    );
    for c in &timing.coherence {
        println!("  {} {}: {:.3e} of {} us{}", c.species, c.quantity, c.ratio, c.t2_us, if c.exceeds { " (exceeded)" } else { "" });
    }
    if let Some(s) = &a.sweep {
        let axis = SweepAxis::parse(s)?;
        let rows = loss_sweep(&cavity, &axis)?;
        out.csv("sweep.csv", &loss_sweep_to_csv(&rows))?;
        println!("sweep: {} rows", rows.len());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = Output::new(&cli.out)?;
    let cap = cli.cap.unwrap_or(DEFAULT_AMPLITUDE_CAP);
    match &cli.command {
        Command::Spectrum(a) => spectrum_cmd(&out, a),
        Command::Sweep(a) => sweep_cmd(&out, a),
        Command::Protocol(a) => protocol_cmd(&out, a, cli.seed, cap),
        Command::Fusion(a) => fusion_cmd(&out, a, cli.seed, cap),
        Command::Compare(a) => compare_cmd(&out, a),
        Command::Budget(a) => budget_cmd(&out, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
