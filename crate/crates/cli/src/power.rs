//! Total-power accounting for comparing active and passive surfaces.

use risnoma::channel::SystemConfig;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// How the SNR axis maps to transmit power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    /// Both surfaces see the same `P_s/N0`.
    #[default]
    EqualSnr,
    /// The axis is `P_T/N0`; each surface gets what is left after its
    /// own overhead.
    EqualTotalPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub mode: PowerMode,
    /// Switching/control power per element, both surfaces.
    pub p_sw_mw: f64,
    /// DC bias power per element, active surface only.
    pub p_dc_mw: f64,
}

impl PowerModel {
    pub fn new(mode: PowerMode, p_sw_mw: f64, p_dc_mw: f64) -> Result<Self> {
        for (name, v) in [("p_sw_mw", p_sw_mw), ("p_dc_mw", p_dc_mw)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(config(format!("power_model.{name} must be >= 0, got {v}")));
            }
        }
        Ok(Self { mode, p_sw_mw, p_dc_mw })
    }
}

impl Default for PowerModel {
    fn default() -> Self {
        Self { mode: PowerMode::EqualSnr, p_sw_mw: 0.1, p_dc_mw: 0.316 }
    }
}

/// Transmit powers that exhaust the same budget `P_T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    pub p_s_act_mw: f64,
    pub p_s_pas_mw: f64,
}

/// Active overhead `P_RIS + M(P_SW + P_DC)` for a given transmit power,
/// with `P_RIS = (β²-1) M (d_sr^{-α} P_s + N_r)`.
pub fn active_overhead_mw(model: &PowerModel, cfg: &SystemConfig, p_s_mw: f64) -> f64 {
    let m = cfg.elements() as f64;
    let amp = (cfg.ris.beta * cfg.ris.beta - 1.0) * m;
    amp * (p_s_mw / cfg.topology.sr_loss() + cfg.ris.n_r) + m * (model.p_sw_mw + model.p_dc_mw)
}

/// Solves `P_T = P_s^act + P_RIS^act + M(P_SW + P_DC)` and
/// `P_T = P_s^pas + M P_SW`. `beta` and `n_r` are read from `cfg`.
pub fn solve_power_fairness(model: &PowerModel, p_total_mw: f64, cfg: &SystemConfig) -> Result<PowerSplit> {
    if !(p_total_mw > 0.0) || !p_total_mw.is_finite() {
        return Err(config(format!("total power must be > 0 mW, got {p_total_mw}")));
    }
    let m = cfg.elements() as f64;
    let p_s_pas_mw = p_total_mw - m * model.p_sw_mw;
    if !(p_s_pas_mw > 0.0) {
        return Err(config(format!(
            "PRIS budget: P_T = {p_total_mw} mW does not cover M*P_SW = {} mW",
            m * model.p_sw_mw
        )));
    }
    let amp = (cfg.ris.beta * cfg.ris.beta - 1.0) * m;
    let fixed = amp * cfg.ris.n_r + m * (model.p_sw_mw + model.p_dc_mw);
    if !(p_total_mw > fixed) {
        return Err(config(format!(
            "ARIS budget: P_T = {p_total_mw} mW does not cover M*(P_SW + P_DC) + (beta^2 - 1)*M*N_r = {fixed} mW"
        )));
    }
    let p_s_act_mw = (p_total_mw - fixed) / (1.0 + amp / cfg.topology.sr_loss());
    Ok(PowerSplit { p_s_act_mw, p_s_pas_mw })
}
