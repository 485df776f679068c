//! One-dimensional parameter sweeps over analytic, asymptotic and simulated OP.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use risnoma::analysis::{op_analytic, op_asymptotic, Sic};
use risnoma::channel::{db_to_linear, Adc, RisMode, SicModel, SystemConfig};
use risnoma::montecarlo::McEngine;
use risnoma::numerics::{gauss_laguerre, QuadratureRule};
use serde::{Deserialize, Serialize};

use crate::error::{config, CliError, Result};
use crate::output::{format_float, format_opt, round_sig, Table};
use crate::power::{solve_power_fairness, PowerMode, PowerModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    SnrDb,
    Elements,
    Bits,
    Beta,
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "snr_db" => Ok(Axis::SnrDb),
            "m" | "elements" => Ok(Axis::Elements),
            "bits" | "adc_bits" => Ok(Axis::Bits),
            "beta" => Ok(Axis::Beta),
            _ => Err(config(format!("unknown sweep axis {s:?}; expected snr_db, m, bits or beta"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::SnrDb => "snr_db",
            Axis::Elements => "m",
            Axis::Bits => "bits",
            Axis::Beta => "beta",
        })
    }
}

/// Surface type and SIC quality of one output regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub system: RisMode,
    pub sic: Sic,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario { system: RisMode::Active, sic: Sic::Perfect },
        Scenario { system: RisMode::Active, sic: Sic::Imperfect },
        Scenario { system: RisMode::Passive, sic: Sic::Perfect },
        Scenario { system: RisMode::Passive, sic: Sic::Imperfect },
    ];
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let system = match self.system {
            RisMode::Active => "ARIS",
            RisMode::Passive => "PRIS",
        };
        let sic = match self.sic {
            Sic::Perfect => "pSIC",
            Sic::Imperfect => "ipSIC",
        };
        write!(f, "{system}-{sic}")
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL.into_iter().find(|r| r.to_string().eq_ignore_ascii_case(s)).ok_or_else(|| {
            config(format!("unknown regime {s:?}; expected one of ARIS-pSIC, ARIS-ipSIC, PRIS-pSIC, PRIS-ipSIC"))
        })
    }
}

/// Derives the config evaluated for `scenario` at axis SNR `snr_db` from the
/// active-surface base.
pub fn scenario_config(
    base: &SystemConfig,
    power: &PowerModel,
    scenario: Scenario,
    snr_db: f64,
) -> Result<SystemConfig> {
    let mut cfg = match scenario.system {
        RisMode::Active => base.clone(),
        RisMode::Passive => base.to_passive(),
    };
    cfg.sic = match scenario.sic {
        Sic::Perfect => SicModel::PERFECT,
        Sic::Imperfect if base.sic.is_perfect() => {
            return Err(config("imperfect-SIC regimes need sic.epsilon > 0"));
        }
        Sic::Imperfect => base.sic,
    };
    cfg.link.rho_s = match power.mode {
        PowerMode::EqualSnr => db_to_linear(snr_db),
        PowerMode::EqualTotalPower => {
            let split = solve_power_fairness(power, db_to_linear(snr_db) * base.link.n0, base)?;
            match scenario.system {
                RisMode::Active => split.p_s_act_mw / base.link.n0,
                RisMode::Passive => split.p_s_pas_mw / base.link.n0,
            }
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub base: SystemConfig,
    pub power: PowerModel,
    pub regimes: Vec<Scenario>,
    pub mc_trials: Option<u64>,
    pub quadrature_order: usize,
}

fn whole(axis: Axis, v: f64) -> Result<usize> {
    if v.fract() != 0.0 || !(v >= 1.0) || v > u32::MAX as f64 {
        return Err(config(format!("{axis} values must be integers >= 1, got {v}")));
    }
    Ok(v as usize)
}

impl SweepSpec {
    pub fn new(
        axis: Axis,
        values: Vec<f64>,
        base: SystemConfig,
        power: PowerModel,
        regimes: Vec<Scenario>,
        mc_trials: Option<u64>,
        quadrature_order: usize,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(config("sweep.values is empty"));
        }
        if regimes.is_empty() {
            return Err(config("sweep.regimes is empty"));
        }
        for (i, r) in regimes.iter().enumerate() {
            if regimes[..i].contains(r) {
                return Err(config(format!("regime {r} listed twice")));
            }
        }
        if mc_trials == Some(0) {
            return Err(config("mc_trials must be >= 1 when set"));
        }
        let spec = Self { axis, values, base, power, regimes, mc_trials, quadrature_order };
        for &v in &spec.values {
            if !v.is_finite() {
                return Err(config(format!("{axis} value {v} is not finite")));
            }
            spec.point(v)?;
        }
        gauss_laguerre(quadrature_order)?;
        Ok(spec)
    }

    pub fn with_mc_trials(mut self, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(config("mc_trials must be >= 1 when set"));
        }
        self.mc_trials = Some(trials);
        Ok(self)
    }

    /// Base config with the axis applied, and the SNR in effect.
    pub fn point(&self, value: f64) -> Result<(SystemConfig, f64)> {
        let mut cfg = self.base.clone();
        let mut snr_db = cfg_snr_db(&cfg);
        match self.axis {
            Axis::SnrDb => snr_db = value,
            Axis::Elements => cfg.ris.elements = whole(self.axis, value)?,
            Axis::Bits => cfg.hardware.adc = Adc::Bits(whole(self.axis, value)? as u32),
            Axis::Beta => {
                if !(value > 1.0) {
                    return Err(config(format!("beta values must be > 1, got {value}")));
                }
                cfg.ris.beta = value;
            }
        }
        Ok((cfg, snr_db))
    }
}

fn cfg_snr_db(cfg: &SystemConfig) -> f64 {
    10.0 * cfg.link.rho_s.log10()
}

/// One output line: OP of one user in one regime at one axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub user: usize,
    pub regime: String,
    pub op_analytic: f64,
    pub op_asymptotic: f64,
    pub op_mc: Option<f64>,
    pub mc_std_err: Option<f64>,
    pub throughput: f64,
}

impl Table for SweepRow {
    const HEADER: &'static [&'static str] =
        &["axis_value", "user", "regime", "op_analytic", "op_asymptotic", "op_mc", "mc_std_err", "throughput"];

    fn record(&self) -> Vec<String> {
        vec![
            format_float(self.axis_value),
            self.user.to_string(),
            self.regime.clone(),
            format_float(self.op_analytic),
            format_float(self.op_asymptotic),
            format_opt(self.op_mc),
            format_opt(self.mc_std_err),
            format_float(self.throughput),
        ]
    }
}

/// Evaluates every (axis value, user, regime). Rows are ordered by axis
/// value, then user, then regime in configured order. Simulation shares one set of
/// draws per element count.
pub fn run_sweep(spec: &SweepSpec, seed: u64, workers: usize) -> Result<Vec<SweepRow>> {
    let rule = gauss_laguerre(spec.quadrature_order)?;
    let mut cfgs = Vec::with_capacity(spec.values.len() * spec.regimes.len());
    for &v in &spec.values {
        let (point, snr_db) = spec.point(v)?;
        for &r in &spec.regimes {
            let cfg = scenario_config(&point, &spec.power, r, snr_db)
                .map_err(|e| e.at(format!("{}={v}, regime {r}", spec.axis)))?;
            cfgs.push(cfg);
        }
    }
    let mc = match spec.mc_trials {
        Some(trials) => Some(simulate(&cfgs, trials, seed, workers)?),
        None => None,
    };
    let mut rows = Vec::new();
    for (vi, &v) in spec.values.iter().enumerate() {
        let users = cfgs[vi * spec.regimes.len()].num_users();
        for k in 1..=users {
            for (ri, &r) in spec.regimes.iter().enumerate() {
                let idx = vi * spec.regimes.len() + ri;
                let row = evaluate_row(&cfgs[idx], k, v, r, &rule, mc.as_ref().map(|m| m[idx][k - 1]))
                    .map_err(|e| e.at(format!("{}={v}, user {k}, regime {r}", spec.axis)))?;
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

fn evaluate_row(
    cfg: &SystemConfig,
    k: usize,
    axis_value: f64,
    regime: Scenario,
    rule: &QuadratureRule,
    mc: Option<(f64, f64)>,
) -> Result<SweepRow> {
    let analytic = op_analytic(cfg, k, rule)?;
    let asymptotic = op_asymptotic(cfg, k, rule)?;
    Ok(SweepRow {
        axis_value: round_sig(axis_value),
        user: k,
        regime: regime.to_string(),
        op_analytic: round_sig(analytic.op),
        op_asymptotic: round_sig(asymptotic.op),
        op_mc: mc.map(|m| round_sig(m.0)),
        mc_std_err: mc.map(|m| round_sig(m.1)),
        throughput: round_sig(analytic.success * cfg.link.rates[k - 1]),
    })
}

/// `(op_hat, std_err)` per config and user, batching configs that share an
/// element count.
pub(crate) fn simulate(cfgs: &[SystemConfig], trials: u64, seed: u64, workers: usize) -> Result<Vec<Vec<(f64, f64)>>> {
    let engine = McEngine::new(trials, seed).with_workers(workers);
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, c) in cfgs.iter().enumerate() {
        groups.entry((c.num_users(), c.elements())).or_default().push(i);
    }
    let mut out = vec![Vec::new(); cfgs.len()];
    for idx in groups.values() {
        let batch: Vec<SystemConfig> = idx.iter().map(|&i| cfgs[i].clone()).collect();
        for (&i, est) in idx.iter().zip(engine.estimate_batch(&batch)?) {
            out[i] = est.op_hat.iter().copied().zip(est.std_err.iter().copied()).collect();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(axis: Axis, values: Vec<f64>) -> SweepSpec {
        SweepSpec::new(axis, values, SystemConfig::baseline(), PowerModel::default(), Scenario::ALL.to_vec(), None, 64)
            .unwrap()
    }

    #[test]
    fn names_round_trip() {
        for r in Scenario::ALL {
            assert_eq!(r.to_string().parse::<Scenario>().unwrap(), r);
        }
        assert_eq!("pris-ipsic".parse::<Scenario>().unwrap().system, RisMode::Passive);
        assert!("XRIS-pSIC".parse::<Scenario>().is_err());
        for a in [Axis::SnrDb, Axis::Elements, Axis::Bits, Axis::Beta] {
            assert_eq!(a.to_string().parse::<Axis>().unwrap(), a);
        }
        assert_eq!("SNR_DB".parse::<Axis>().unwrap(), Axis::SnrDb);
        assert_eq!("M".parse::<Axis>().unwrap(), Axis::Elements);
    }

    #[test]
    fn row_order_and_count() {
        let rows = run_sweep(&spec(Axis::SnrDb, vec![10.0, 20.0]), 1, 1).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 4);
        assert_eq!(rows[0].axis_value, 10.0);
        assert_eq!(rows[0].user, 1);
        assert_eq!(rows[0].regime, "ARIS-pSIC");
        assert_eq!(rows[3].regime, "PRIS-ipSIC");
        assert_eq!(rows[4].user, 2);
        assert_eq!(rows[12].axis_value, 20.0);
        assert!(rows.iter().all(|r| r.op_mc.is_none()));
    }

    #[test]
    fn axis_values_checked() {
        let base = || SystemConfig::baseline();
        let mk = |axis, v: f64| {
            SweepSpec::new(axis, vec![v], base(), PowerModel::default(), Scenario::ALL.to_vec(), None, 64)
        };
        assert!(mk(Axis::Bits, 2.5).is_err());
        assert!(mk(Axis::Bits, 0.0).is_err());
        assert!(mk(Axis::Elements, 0.0).is_err());
        assert!(mk(Axis::Beta, 1.0).is_err());
        assert!(mk(Axis::SnrDb, f64::NAN).is_err());
        assert!(mk(Axis::Beta, 3.0).is_ok());
        assert!(SweepSpec::new(Axis::SnrDb, vec![], base(), PowerModel::default(), Scenario::ALL.to_vec(), None, 64)
            .is_err());
        assert!(SweepSpec::new(Axis::SnrDb, vec![1.0], base(), PowerModel::default(), vec![], None, 64).is_err());
        assert!(SweepSpec::new(Axis::SnrDb, vec![1.0], base(), PowerModel::default(), Scenario::ALL.to_vec(), None, 0)
            .is_err());
    }

    #[test]
    fn perfect_sic_full_precision_decreases_in_snr() {
        let mut s = spec(Axis::SnrDb, (0..=10).map(|i| 5.0 * i as f64).collect());
        s.base = s.base.with_adc(Adc::FullPrecision);
        s.regimes = vec!["ARIS-pSIC".parse().unwrap(), "PRIS-pSIC".parse().unwrap()];
        let rows = run_sweep(&s, 1, 1).unwrap();
        for regime in ["ARIS-pSIC", "PRIS-pSIC"] {
            for k in 1..=3 {
                let ops: Vec<f64> =
                    rows.iter().filter(|r| r.user == k && r.regime == regime).map(|r| r.op_analytic).collect();
                // Strict once the curve leaves the saturated region.
                let start = ops.iter().position(|&p| p < 1.0).unwrap();
                assert!(ops[start..].windows(2).all(|w| w[1] < w[0]), "{regime} user {k}: {ops:?}");
            }
        }
    }

    #[test]
    fn equal_total_power_reduces_active_snr() {
        let base = SystemConfig::baseline();
        let power = PowerModel { mode: PowerMode::EqualTotalPower, ..PowerModel::default() };
        let r_act = Scenario { system: RisMode::Active, sic: Sic::Perfect };
        let r_pas = Scenario { system: RisMode::Passive, sic: Sic::Perfect };
        let act = scenario_config(&base, &power, r_act, 30.0).unwrap();
        let pas = scenario_config(&base, &power, r_pas, 30.0).unwrap();
        assert!(act.link.rho_s < pas.link.rho_s);
        assert!((pas.link.rho_s - 999.0).abs() < 1e-9);
        assert!(scenario_config(&base, &power, r_act, 20.0).is_err());
    }

    #[test]
    fn imperfect_regime_needs_residual() {
        let base = SystemConfig::baseline().with_sic(SicModel::PERFECT);
        let r = Scenario { system: RisMode::Active, sic: Sic::Imperfect };
        assert!(scenario_config(&base, &PowerModel::default(), r, 30.0).is_err());
    }
}
