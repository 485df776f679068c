//! TOML scenario files.
//!
//! Every section and key is optional; missing values fall back to the
//! reference scenario of [`SystemConfig::baseline`] with full-width defaults
//! for the sweep. Unknown keys are rejected.

use std::path::Path;

use risnoma::channel::{
    Adc, HardwareProfile, LinkBudget, Point, PowerAllocation, RisConfig, SicModel, SystemConfig, Topology,
};
use risnoma::numerics::DEFAULT_QUADRATURE_ORDER;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::power::{PowerMode, PowerModel};
use crate::sweep::{Axis, Scenario, SweepSpec};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub topology: TopologySection,
    pub power_alloc: PowerAllocSection,
    pub hardware: HardwareSection,
    pub sic: SicSection,
    pub ris: RisSection,
    pub link: LinkSection,
    pub power_model: PowerModelSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySection {
    pub bs_pos_m: [f64; 2],
    pub ris_pos_m: [f64; 2],
    pub user_pos_m: Vec<[f64; 2]>,
    pub path_loss_exponent: f64,
}

impl Default for TopologySection {
    fn default() -> Self {
        Self {
            bs_pos_m: [0.0, 0.0],
            ris_pos_m: [10.0, 5.0],
            user_pos_m: vec![[25.0, 10.0], [32.0, 0.0], [40.0, -15.0]],
            path_loss_exponent: 2.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerAllocSection {
    pub coefficients: Vec<f64>,
}

impl Default for PowerAllocSection {
    fn default() -> Self {
        Self { coefficients: vec![0.45, 0.30, 0.25] }
    }
}

/// `adc_bits = 3` or `adc_bits = "full"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AdcSetting {
    Bits(u32),
    Named(String),
}

impl AdcSetting {
    pub fn to_adc(&self) -> Result<Adc> {
        match self {
            AdcSetting::Bits(b) => Ok(Adc::Bits(*b)),
            AdcSetting::Named(s) if s.eq_ignore_ascii_case("full") => Ok(Adc::FullPrecision),
            AdcSetting::Named(s) => Err(config(format!("hardware.adc_bits must be an integer or \"full\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareSection {
    pub kappa_t_bs: f64,
    pub kappa_r: Vec<f64>,
    pub adc_bits: AdcSetting,
}

impl Default for HardwareSection {
    fn default() -> Self {
        Self { kappa_t_bs: 0.8, kappa_r: vec![0.8; 3], adc_bits: AdcSetting::Bits(1) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SicSection {
    /// Residual fraction used by the imperfect-SIC regimes.
    pub epsilon: f64,
    pub omega_i: f64,
}

impl Default for SicSection {
    fn default() -> Self {
        Self { epsilon: 0.05, omega_i: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RisSection {
    pub elements: usize,
    /// Amplification of the active surface; the passive one always uses 1.
    pub beta: f64,
    /// Thermal noise power of each active element.
    pub n_r_mw: f64,
}

impl Default for RisSection {
    fn default() -> Self {
        Self { elements: 10, beta: 7.0, n_r_mw: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    /// Transmit SNR `P_s/N0`, or `P_T/N0` in equal-total-power mode.
    pub snr_db: f64,
    pub rates_bpcu: Vec<f64>,
    pub n0_mw: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self { snr_db: 30.0, rates_bpcu: vec![0.15; 3], n0_mw: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModelSection {
    pub mode: PowerMode,
    pub p_sw_mw: f64,
    pub p_dc_mw: f64,
}

impl Default for PowerModelSection {
    fn default() -> Self {
        Self { mode: PowerMode::EqualSnr, p_sw_mw: 0.1, p_dc_mw: 0.316 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: String,
    pub values: Vec<f64>,
    pub regimes: Vec<String>,
    /// 0 disables the Monte Carlo columns.
    pub mc_trials: u64,
    pub quadrature_order: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axis: "snr_db".into(),
            values: (0..=10).map(|i| 5.0 * i as f64).collect(),
            regimes: Scenario::ALL.iter().map(|s| s.to_string()).collect(),
            mc_trials: 0,
            quadrature_order: DEFAULT_QUADRATURE_ORDER,
        }
    }
}

fn point(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The scenario as an active-surface config at `link.snr_db`, with the
    /// configured imperfect-SIC parameters. Only link-level invariants are
    /// checked here; regimes derive and validate their own variants.
    pub fn system(&self) -> Result<SystemConfig> {
        if !(self.link.n0_mw > 0.0) || !self.link.n0_mw.is_finite() {
            return Err(config(format!("link.n0_mw must be > 0, got {}", self.link.n0_mw)));
        }
        if !(self.ris.n_r_mw >= 0.0) || !self.ris.n_r_mw.is_finite() {
            return Err(config(format!("ris.n_r_mw must be >= 0, got {}", self.ris.n_r_mw)));
        }
        let cfg = SystemConfig {
            topology: Topology {
                bs: point(self.topology.bs_pos_m),
                ris: point(self.topology.ris_pos_m),
                users: self.topology.user_pos_m.iter().copied().map(point).collect(),
                alpha: self.topology.path_loss_exponent,
            },
            power_alloc: PowerAllocation::new(self.power_alloc.coefficients.clone())?,
            hardware: HardwareProfile {
                kappa_t_bs: self.hardware.kappa_t_bs,
                kappa_r: self.hardware.kappa_r.clone(),
                adc: self.hardware.adc_bits.to_adc()?,
            },
            sic: SicModel { epsilon: self.sic.epsilon, omega_i: self.sic.omega_i },
            ris: RisConfig::active(self.ris.elements, self.ris.beta, self.ris.n_r_mw),
            link: LinkBudget {
                n0: self.link.n0_mw,
                ..LinkBudget::from_snr_db(self.link.snr_db, self.link.rates_bpcu.clone())
            },
        };
        cfg.validate_link()?;
        Ok(cfg)
    }

    pub fn power_model(&self) -> Result<PowerModel> {
        PowerModel::new(self.power_model.mode, self.power_model.p_sw_mw, self.power_model.p_dc_mw)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let regimes = self.sweep.regimes.iter().map(|s| s.parse()).collect::<Result<Vec<Scenario>>>()?;
        SweepSpec::new(
            self.sweep.axis.parse::<Axis>()?,
            self.sweep.values.clone(),
            self.system()?,
            self.power_model()?,
            regimes,
            (self.sweep.mc_trials > 0).then_some(self.sweep.mc_trials),
            self.sweep.quadrature_order,
        )
    }
}
