//! Simulation-versus-closed-form cross-check.

use risnoma::analysis::op_analytic;
use risnoma::channel::SystemConfig;
use risnoma::numerics::QuadratureRule;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::output::{format_float, format_opt, round_sig, Table};
use crate::power::PowerModel;
use crate::sweep::{scenario_config, simulate, Scenario};

/// Relative tolerance inside the band, and the band itself.
pub const REL_TOLERANCE: f64 = 0.15;
pub const BAND: (f64, f64) = (1e-3, 0.5);
/// Width of the absolute acceptance window outside the band, in standard errors.
pub const SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    Relative,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub tolerance: Tolerance,
    pub rel_error: Option<f64>,
    pub pass: bool,
}

/// Relative error within 15% where the closed form lies in `[1e-3, 0.5]`;
/// elsewhere `|diff| <= 3 sigma` with `sigma` the larger of the observed and
/// the closed-form binomial standard errors.
pub fn judge(op_analytic: f64, op_mc: f64, std_err: f64, trials: u64) -> Verdict {
    let diff = (op_mc - op_analytic).abs();
    let rel_error = (op_analytic > 0.0).then(|| diff / op_analytic);
    if (BAND.0..=BAND.1).contains(&op_analytic) {
        let pass = rel_error.is_some_and(|e| e <= REL_TOLERANCE);
        Verdict { tolerance: Tolerance::Relative, rel_error, pass }
    } else {
        let model = (op_analytic * (1.0 - op_analytic) / trials as f64).sqrt();
        let sigma = std_err.max(model);
        Verdict { tolerance: Tolerance::Absolute, rel_error, pass: diff <= SIGMAS * sigma }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub user: usize,
    pub regime: String,
    pub op_analytic: f64,
    pub op_mc: f64,
    pub mc_std_err: f64,
    pub rel_error: Option<f64>,
    pub tolerance: Tolerance,
    pub pass: bool,
}

impl Table for ValidationRow {
    const HEADER: &'static [&'static str] =
        &["user", "regime", "op_analytic", "op_mc", "mc_std_err", "rel_error", "tolerance", "pass"];

    fn record(&self) -> Vec<String> {
        let tolerance = match self.tolerance {
            Tolerance::Relative => "relative",
            Tolerance::Absolute => "absolute",
        };
        vec![
            self.user.to_string(),
            self.regime.clone(),
            format_float(self.op_analytic),
            format_float(self.op_mc),
            format_float(self.mc_std_err),
            format_opt(self.rel_error),
            tolerance.into(),
            self.pass.to_string(),
        ]
    }
}

/// Every user in every regime at the base SNR. The verdict is taken on the
/// unrounded values.
pub fn validate(
    base: &SystemConfig,
    power: &PowerModel,
    regimes: &[Scenario],
    trials: u64,
    seed: u64,
    workers: usize,
    rule: &QuadratureRule,
) -> Result<Vec<ValidationRow>> {
    let snr_db = 10.0 * base.link.rho_s.log10();
    let cfgs = regimes
        .iter()
        .map(|&r| scenario_config(base, power, r, snr_db).map_err(|e| e.at(format!("regime {r}"))))
        .collect::<Result<Vec<_>>>()?;
    let mc = simulate(&cfgs, trials, seed, workers)?;
    let mut rows = Vec::new();
    for k in 1..=base.num_users() {
        for (i, r) in regimes.iter().enumerate() {
            let analytic = op_analytic(&cfgs[i], k, rule)?.op;
            let (op_mc, se) = mc[i][k - 1];
            let v = judge(analytic, op_mc, se, trials);
            rows.push(ValidationRow {
                user: k,
                regime: r.to_string(),
                op_analytic: round_sig(analytic),
                op_mc: round_sig(op_mc),
                mc_std_err: round_sig(se),
                rel_error: v.rel_error.map(round_sig),
                tolerance: v.tolerance,
                pass: v.pass,
            });
        }
    }
    Ok(rows)
}
