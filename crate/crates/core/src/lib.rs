//! Simulation toolkit for donor-spin photonic graph-state generation: spin
//! Hamiltonians, qudit registers, graph states, emission protocols, fusion
//! statistics and timing/loss budgets.

pub mod spin;
pub mod statevec;
pub mod graph;
pub mod protocol;
pub mod budget;
pub mod fusion;
