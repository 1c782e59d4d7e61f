//! Cavity loss arithmetic, emission timing, operation budgets and Monte
//! Carlo photon loss.
//!
//! Rates are in MHz, cavity frequency in GHz, durations in microseconds.

mod montecarlo;
mod tables;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use montecarlo::{monte_carlo_mode_loss, LossCounting, ModeLossStats};
pub use tables::{
    timing_fidelity_budget, BudgetOptions, CoherenceEntry, CoherenceRatio, Interval, OperationRow, OperationTable,
    TimingReport, SINGLE_DONOR_TABLE_JSON, COUPLED_DONOR_TABLE_JSON,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BudgetError {
    #[error("invalid cavity parameter {name} = {value}")]
    InvalidCavity { name: &'static str, value: f64 },
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("at least one trial required")]
    NoTrials,
    #[error("no table row for instruction kind {0:?}")]
    Unmapped(String),
    #[error("bad operation table: {0}")]
    Table(String),
    #[error("bad sweep {0:?}: expected name=start:stop:log10[:points] or name=start:stop:lin:points")]
    Sweep(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub omega_c_ghz: f64,
    pub g_s_mhz: f64,
    /// May be infinite, for a lossless cavity.
    pub q_i: f64,
    pub q_c: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        Self { omega_c_ghz: 28.41, g_s_mhz: 3.0, q_i: 1e6, q_c: 1e4 }
    }
}

impl CavityParams {
    pub fn validate(&self) -> Result<(), BudgetError> {
        let checks = [
            ("omega_c", self.omega_c_ghz, self.omega_c_ghz.is_finite()),
            ("g_s", self.g_s_mhz, self.g_s_mhz.is_finite()),
            ("Q_i", self.q_i, true),
            ("Q_c", self.q_c, self.q_c.is_finite()),
        ];
        for (name, value, finite) in checks {
            if !finite || value.is_nan() || value <= 0.0 {
                return Err(BudgetError::InvalidCavity { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub params: CavityParams,
    pub kappa_i: f64,
    pub kappa_c: f64,
    pub gamma_bath: f64,
    pub gamma_port: f64,
    pub loss: f64,
    pub success: f64,
    /// `10 log10(success)`, negative for any loss.
    pub success_db: f64,
    /// `|success_db|`, the figure usually quoted.
    pub success_db_magnitude: f64,
}

fn series(g: f64, k: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        g * k / (g + k)
    }
}

pub fn loss_success(c: &CavityParams) -> Result<LossReport, BudgetError> {
    c.validate()?;
    let omega = c.omega_c_ghz * 1e3;
    let kappa_i = omega / c.q_i;
    let kappa_c = omega / c.q_c;
    let gamma_bath = series(c.g_s_mhz, kappa_i);
    let gamma_port = series(c.g_s_mhz, kappa_c);
    let loss = gamma_bath / (gamma_bath + gamma_port);
    let success = 1.0 - loss;
    let success_db = 10.0 * success.log10();
    Ok(LossReport {
        params: *c,
        kappa_i,
        kappa_c,
        gamma_bath,
        gamma_port,
        loss,
        success,
        success_db,
        success_db_magnitude: success_db.abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionTime {
    /// `1/g_s`.
    pub raw_us: f64,
    /// `1/(2π g_s)`, i.e. `g_s` read as an angular frequency.
    pub angular_us: f64,
}

pub fn emission_time(g_s_mhz: f64) -> Result<EmissionTime, BudgetError> {
    if !(g_s_mhz > 0.0) || !g_s_mhz.is_finite() {
        return Err(BudgetError::InvalidCavity { name: "g_s", value: g_s_mhz });
    }
    Ok(EmissionTime { raw_us: 1.0 / g_s_mhz, angular_us: 1.0 / (2.0 * PI * g_s_mhz) })
}

/// Emission rate over dephasing rate `1/T2`.
pub fn emission_to_dephasing_ratio(g_s_mhz: f64, t2_us: f64) -> f64 {
    g_s_mhz * t2_us
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "Q_i")]
    Qi,
    #[serde(rename = "Q_c")]
    Qc,
    #[serde(rename = "g_s")]
    Gs,
    #[serde(rename = "omega_c")]
    OmegaC,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl SweepAxis {
    /// `Qi=1e5:1e6:log10` steps by decades; `:log10:n` and `:lin:n` give `n`
    /// points including both ends.
    pub fn parse(s: &str) -> Result<Self, BudgetError> {
        let err = || BudgetError::Sweep(s.to_string());
        let (name, range) = s.split_once('=').ok_or_else(err)?;
        let parameter = match name.trim() {
            "Qi" | "Q_i" => SweepParameter::Qi,
            "Qc" | "Q_c" => SweepParameter::Qc,
            "gs" | "g_s" => SweepParameter::Gs,
            "omega_c" | "wc" => SweepParameter::OmegaC,
            _ => return Err(err()),
        };
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() < 3 || parts.len() > 4 {
            return Err(err());
        }
        let start: f64 = parts[0].parse().map_err(|_| err())?;
        let stop: f64 = parts[1].parse().map_err(|_| err())?;
        let points: Option<usize> = match parts.get(3) {
            Some(p) => Some(p.parse().map_err(|_| err())?),
            None => None,
        };
        if !(start > 0.0 && stop > 0.0) || points.is_some_and(|p| p < 2) {
            return Err(err());
        }
        let values = match parts[2] {
            "log10" => {
                let (a, b) = (start.log10(), stop.log10());
                let n = points.unwrap_or(((b - a).abs().round() as usize).max(1) + 1);
                (0..n).map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64)).collect()
            }
            "lin" => {
                let n = points.ok_or_else(err)?;
                (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect()
            }
            _ => return Err(err()),
        };
        Ok(Self { parameter, values })
    }
}

pub fn loss_sweep(base: &CavityParams, axis: &SweepAxis) -> Result<Vec<LossReport>, BudgetError> {
    axis.values
        .iter()
        .map(|&v| {
            let mut c = *base;
            match axis.parameter {
                SweepParameter::Qi => c.q_i = v,
                SweepParameter::Qc => c.q_c = v,
                SweepParameter::Gs => c.g_s_mhz = v,
                SweepParameter::OmegaC => c.omega_c_ghz = v,
            }
            loss_success(&c)
        })
        .collect()
}

pub fn loss_sweep_to_csv(rows: &[LossReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["Q_i", "Q_c", "g_s", "omega_c", "loss", "success", "success_dB"]).expect("in-memory write");
    for r in rows {
        let p = &r.params;
        w.write_record(
            [p.q_i, p.q_c, p.g_s_mhz, p.omega_c_ghz, r.loss, r.success, r.success_db].map(|x| format!("{x}")),
        )
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}
