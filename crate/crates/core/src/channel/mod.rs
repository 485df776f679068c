//! Scenario description and single-link physics: geometry, power split,
//! hardware impairments, SIC residual and the per-stage SINR.
//!
//! Noise is normalized so that `N0 = 1` unless [`LinkBudget::n0`] says
//! otherwise; `rho_s` is then the transmit SNR and the RIS thermal noise
//! `n_r` is expressed in units of `N0`. Users are indexed from 1, user 1
//! being the one with the largest power share.

mod quantizer;

pub use quantizer::{lambda_q_of_bits, lloyd_max_gain, Adc, LLOYD_MAX_BITS};

use crate::error::{config, domain, Result};

/// 2-D position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Large-scale fading `d^{-alpha}`.
pub fn path_gain(d: f64, alpha: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(domain(format!("distance must be positive, got {d}")));
    }
    Ok(d.powf(-alpha))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub bs: Point,
    pub ris: Point,
    pub users: Vec<Point>,
    /// Path-loss exponent.
    pub alpha: f64,
}

impl Topology {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn d_sr(&self) -> f64 {
        self.bs.distance(&self.ris)
    }

    /// RIS to user `k` distance.
    pub fn d_user(&self, k: usize) -> Result<f64> {
        check_user(k, self.users.len())?;
        Ok(self.ris.distance(&self.users[k - 1]))
    }

    /// `d_sr^alpha`, the inverse BS-RIS path gain.
    pub fn sr_loss(&self) -> f64 {
        self.d_sr().powf(self.alpha)
    }

    /// `d_k^alpha`.
    pub fn user_loss(&self, k: usize) -> Result<f64> {
        Ok(self.d_user(k)?.powf(self.alpha))
    }

    pub fn validate(&self) -> Result<()> {
        if self.users.len() < 2 {
            return Err(config(format!("need at least 2 users, got {}", self.users.len())));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(config(format!("path-loss exponent must be positive, got {}", self.alpha)));
        }
        if !(self.d_sr() > 0.0) {
            return Err(config("BS and RIS positions coincide"));
        }
        for k in 1..=self.users.len() {
            if !(self.d_user(k)? > 0.0) {
                return Err(config(format!("user {k} sits on the RIS")));
            }
        }
        Ok(())
    }
}

/// NOMA power split `a_1 >= a_2 >= ... >= a_K > 0`, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation(Vec<f64>);

impl PowerAllocation {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(config("power allocation is empty"));
        }
        if coefficients.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(config(format!("power coefficients must be positive: {coefficients:?}")));
        }
        if coefficients.windows(2).any(|w| w[0] < w[1]) {
            return Err(config(format!("power coefficients must be non-increasing: {coefficients:?}")));
        }
        let total: f64 = coefficients.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(config(format!("power coefficients sum to {total}, not 1")));
        }
        Ok(Self(coefficients))
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `a_j`, 1-based.
    pub fn share(&self, j: usize) -> f64 {
        self.0[j - 1]
    }

    /// `sum_{i > j} a_i`; empty for `j = K`.
    pub fn tail_sum(&self, j: usize) -> f64 {
        self.0[j..].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardwareProfile {
    /// Transmit-side RHI severity at the BS.
    pub kappa_t_bs: f64,
    /// Receive-side RHI severity per user.
    pub kappa_r: Vec<f64>,
    pub adc: Adc,
}

impl HardwareProfile {
    pub fn lambda_q(&self) -> Result<f64> {
        lambda_q_of_bits(self.adc)
    }
}

/// Residual interference after SIC: `epsilon = 0` is perfect SIC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SicModel {
    pub epsilon: f64,
    /// Variance of the residual coefficient `h_I`.
    pub omega_i: f64,
}

impl SicModel {
    pub const PERFECT: SicModel = SicModel { epsilon: 0.0, omega_i: 1.0 };

    pub fn is_perfect(&self) -> bool {
        self.epsilon == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RisMode {
    Active,
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisConfig {
    pub mode: RisMode,
    /// Number of reflecting elements `M`.
    pub elements: usize,
    /// Amplification factor, 1 for a passive surface.
    pub beta: f64,
    /// Thermal noise power of the active elements, in units of `N0`.
    pub n_r: f64,
}

impl RisConfig {
    pub fn active(elements: usize, beta: f64, n_r: f64) -> Self {
        Self { mode: RisMode::Active, elements, beta, n_r }
    }

    pub fn passive(elements: usize) -> Self {
        Self { mode: RisMode::Passive, elements, beta: 1.0, n_r: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements == 0 {
            return Err(config("RIS needs at least one element"));
        }
        match self.mode {
            RisMode::Passive if self.beta != 1.0 || self.n_r != 0.0 => Err(config(format!(
                "passive RIS requires beta = 1 and n_r = 0, got beta = {}, n_r = {}",
                self.beta, self.n_r
            ))),
            RisMode::Active if !(self.beta > 1.0) || !self.beta.is_finite() => {
                Err(config(format!("active RIS requires beta > 1, got {}", self.beta)))
            }
            RisMode::Active if !(self.n_r >= 0.0) || !self.n_r.is_finite() => {
                Err(config(format!("RIS noise power must be >= 0, got {}", self.n_r)))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    /// Transmit SNR `P_s / N0`, linear.
    pub rho_s: f64,
    /// Target rates in bits per channel use.
    pub rates: Vec<f64>,
    /// Receiver noise power; only enters the ARIS quantization term `Δ1 = λ_q / N0`.
    pub n0: f64,
}

impl LinkBudget {
    pub fn from_snr_db(snr_db: f64, rates: Vec<f64>) -> Self {
        Self { rho_s: db_to_linear(snr_db), rates, n0: 1.0 }
    }

    /// Decoding threshold `2^{R_j} - 1`, 1-based.
    pub fn threshold(&self, j: usize) -> f64 {
        self.rates[j - 1].exp2() - 1.0
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r.exp2() - 1.0).collect()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Complete scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub topology: Topology,
    pub power_alloc: PowerAllocation,
    pub hardware: HardwareProfile,
    pub sic: SicModel,
    pub ris: RisConfig,
    pub link: LinkBudget,
}

impl SystemConfig {
    /// Three-user reference scenario: BS at the origin, RIS at (10, 5) m,
    /// users at (25, 10), (32, 0) and (40, -15) m, `alpha = 2.2`,
    /// `a = (0.45, 0.30, 0.25)`, `R = 0.15` BPCU each, `kappa = 0.8`,
    /// `epsilon = 0.05`, `Omega_I = 1`, a 10-element active RIS with
    /// `beta = 7`, `N_r = N0`, 1-bit ADCs and 30 dB transmit SNR.
    pub fn baseline() -> Self {
        Self {
            topology: Topology {
                bs: Point::new(0.0, 0.0),
                ris: Point::new(10.0, 5.0),
                users: vec![Point::new(25.0, 10.0), Point::new(32.0, 0.0), Point::new(40.0, -15.0)],
                alpha: 2.2,
            },
            power_alloc: PowerAllocation(vec![0.45, 0.30, 0.25]),
            hardware: HardwareProfile { kappa_t_bs: 0.8, kappa_r: vec![0.8; 3], adc: Adc::Bits(1) },
            sic: SicModel { epsilon: 0.05, omega_i: 1.0 },
            ris: RisConfig::active(10, 7.0, 1.0),
            link: LinkBudget::from_snr_db(30.0, vec![0.15; 3]),
        }
    }

    pub fn num_users(&self) -> usize {
        self.topology.num_users()
    }

    pub fn elements(&self) -> usize {
        self.ris.elements
    }

    /// Same scenario seen through a passive surface of equal size.
    pub fn to_passive(&self) -> Self {
        let mut cfg = self.clone();
        cfg.ris = RisConfig::passive(self.ris.elements);
        cfg
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.link.rho_s = db_to_linear(snr_db);
        self
    }

    pub fn with_sic(mut self, sic: SicModel) -> Self {
        self.sic = sic;
        self
    }

    pub fn with_adc(mut self, adc: Adc) -> Self {
        self.hardware.adc = adc;
        self
    }

    pub fn with_elements(mut self, elements: usize) -> Self {
        self.ris.elements = elements;
        self
    }

    /// Full validation including the active/passive pairing of `beta` and `n_r`.
    pub fn validate(&self) -> Result<()> {
        self.validate_link()?;
        self.ris.validate()
    }

    /// Everything except the RIS mode pairing. The closed-form evaluators
    /// use this so that an active formula can be probed at `beta = 1`.
    pub fn validate_link(&self) -> Result<()> {
        self.topology.validate()?;
        let k = self.num_users();
        let lengths = [
            ("power allocation", self.power_alloc.len()),
            ("receive RHI list", self.hardware.kappa_r.len()),
            ("rate list", self.link.rates.len()),
        ];
        for (what, len) in lengths {
            if len != k {
                return Err(config(format!("{what} has {len} entries for {k} users")));
            }
        }
        let kappas = std::iter::once(self.hardware.kappa_t_bs).chain(self.hardware.kappa_r.iter().copied());
        for kappa in kappas {
            if !(kappa >= 0.0) || !kappa.is_finite() {
                return Err(config(format!("RHI severity must be >= 0, got {kappa}")));
            }
        }
        self.hardware.lambda_q().map_err(|e| config(e.to_string()))?;
        if !(self.sic.epsilon >= 0.0 && self.sic.epsilon <= 1.0) {
            return Err(config(format!("epsilon must lie in [0, 1], got {}", self.sic.epsilon)));
        }
        if self.sic.epsilon > 0.0 && !(self.sic.omega_i > 0.0 && self.sic.omega_i.is_finite()) {
            return Err(config(format!("Omega_I must be positive under ipSIC, got {}", self.sic.omega_i)));
        }
        if !(self.link.rho_s > 0.0) || !self.link.rho_s.is_finite() {
            return Err(config(format!("transmit SNR must be positive, got {}", self.link.rho_s)));
        }
        if !(self.link.n0 > 0.0) {
            return Err(config(format!("N0 must be positive, got {}", self.link.n0)));
        }
        if self.link.rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(config(format!("target rates must be positive: {:?}", self.link.rates)));
        }
        if self.ris.elements == 0 {
            return Err(config("RIS needs at least one element"));
        }
        if !(self.ris.beta >= 1.0) || !(self.ris.n_r >= 0.0) {
            return Err(config(format!(
                "need beta >= 1 and n_r >= 0, got beta = {}, n_r = {}",
                self.ris.beta, self.ris.n_r
            )));
        }
        Ok(())
    }
}

fn check_user(k: usize, users: usize) -> Result<()> {
    if k == 0 || k > users {
        return Err(domain(format!("user index {k} outside 1..={users}")));
    }
    Ok(())
}

fn check_stage(k: usize, j: usize, users: usize) -> Result<()> {
    check_user(k, users)?;
    if j == 0 || j > k {
        return Err(domain(format!("decode stage {j} outside 1..={k}")));
    }
    Ok(())
}

/// Effective distortion weight `ϑ_j` seen by user `k` when decoding `s_j`:
/// `λ_q²(Σ_{i>j} a_i − 1) + λ_q(1 + κ_t² + κ_{r,k}²)`.
pub fn theta(cfg: &SystemConfig, k: usize, j: usize) -> Result<f64> {
    check_stage(k, j, cfg.num_users())?;
    let lambda = cfg.hardware.lambda_q()?;
    Ok(theta_with(cfg, lambda, k, j))
}

fn theta_with(cfg: &SystemConfig, lambda: f64, k: usize, j: usize) -> f64 {
    let kt = cfg.hardware.kappa_t_bs;
    let kr = cfg.hardware.kappa_r[k - 1];
    lambda * lambda * (cfg.power_alloc.tail_sum(j) - 1.0) + lambda * (1.0 + kt * kt + kr * kr)
}

/// `γ_thj / (β² ρ_s (λ_q² a_j − γ_thj ϑ_j))` with the configured `beta`;
/// `None` when `λ_q² a_j <= γ_thj ϑ_j` and stage `j` can never succeed.
pub fn phi_active(cfg: &SystemConfig, k: usize, j: usize) -> Result<Option<f64>> {
    let beta = cfg.ris.beta;
    phi_scaled(cfg, k, j, beta * beta)
}

/// Passive counterpart of [`phi_active`], without the `β²` factor.
pub fn phi_passive(cfg: &SystemConfig, k: usize, j: usize) -> Result<Option<f64>> {
    phi_scaled(cfg, k, j, 1.0)
}

/// Dispatches on the configured RIS mode.
pub fn phi(cfg: &SystemConfig, k: usize, j: usize) -> Result<Option<f64>> {
    match cfg.ris.mode {
        RisMode::Active => phi_active(cfg, k, j),
        RisMode::Passive => phi_passive(cfg, k, j),
    }
}

fn phi_scaled(cfg: &SystemConfig, k: usize, j: usize, gain: f64) -> Result<Option<f64>> {
    check_stage(k, j, cfg.num_users())?;
    let lambda = cfg.hardware.lambda_q()?;
    let gth = cfg.link.threshold(j);
    let margin = lambda * lambda * cfg.power_alloc.share(j) - gth * theta_with(cfg, lambda, k, j);
    if margin <= 0.0 {
        return Ok(None);
    }
    Ok(Some(gth / (gain * cfg.link.rho_s * margin)))
}

/// Receiver model of one user with every scenario constant folded in.
///
/// The SINR of stage `j` has the form
/// `num_j ξ² / (xi_j ξ² + thermal ‖g‖² + floor + residual |h_I|²)`.
#[derive(Debug, Clone)]
pub struct UserLink {
    user: usize,
    stages: Vec<Stage>,
    thermal: f64,
    floor: f64,
    residual: f64,
}

#[derive(Debug, Clone, Copy)]
struct Stage {
    num: f64,
    xi: f64,
    threshold: f64,
}

impl UserLink {
    pub fn new(cfg: &SystemConfig, k: usize) -> Result<Self> {
        check_user(k, cfg.num_users())?;
        let lambda = cfg.hardware.lambda_q()?;
        let beta_sq = cfg.ris.beta * cfg.ris.beta;
        let rho = cfg.link.rho_s;
        let sr = cfg.topology.sr_loss();
        let uk = cfg.topology.user_loss(k)?;
        let stages = (1..=k)
            .map(|j| Stage {
                num: lambda * lambda * beta_sq * rho * cfg.power_alloc.share(j),
                xi: beta_sq * rho * theta_with(cfg, lambda, k, j),
                threshold: cfg.link.threshold(j),
            })
            .collect();
        let delta1 = lambda / cfg.link.n0;
        Ok(Self {
            user: k,
            stages,
            thermal: sr * beta_sq * cfg.ris.n_r * delta1,
            floor: sr * uk * lambda * lambda,
            residual: sr * uk * cfg.sic.epsilon * rho,
        })
    }

    pub fn user(&self) -> usize {
        self.user
    }

    /// `γ_{k→j}`; no range checks on the magnitudes.
    #[inline]
    pub fn sinr(&self, j: usize, xi_sq: f64, g_norm_sq: f64, h_i_sq: f64) -> f64 {
        let st = &self.stages[j - 1];
        let noise = self.thermal * g_norm_sq + self.floor + self.residual * h_i_sq;
        st.num * xi_sq / (st.xi * xi_sq + noise)
    }

    /// True when every stage `1..=k` clears its threshold, i.e. no outage.
    #[inline]
    pub fn decodes(&self, xi_sq: f64, g_norm_sq: f64, h_i_sq: f64) -> bool {
        let noise = self.thermal * g_norm_sq + self.floor + self.residual * h_i_sq;
        self.stages.iter().all(|st| st.num * xi_sq / (st.xi * xi_sq + noise) > st.threshold)
    }
}

/// SINR of user `k` decoding the message of user `j <= k`.
///
/// `xi_sq` is the coherently combined cascade gain `|g_k^H Φ h_sr|²`,
/// `g_norm_sq` is `‖g_k^H Φ‖²` and `h_i_sq` the residual SIC coefficient
/// `|h_I|²`, which enters every stage scaled by `epsilon`.
pub fn sinr(cfg: &SystemConfig, k: usize, j: usize, xi_sq: f64, g_norm_sq: f64, h_i_sq: f64) -> Result<f64> {
    check_stage(k, j, cfg.num_users())?;
    for (name, v) in [("xi_sq", xi_sq), ("g_norm_sq", g_norm_sq), ("h_i_sq", h_i_sq)] {
        if !(v >= 0.0) {
            return Err(domain(format!("{name} must be >= 0, got {v}")));
        }
    }
    Ok(UserLink::new(cfg, k)?.sinr(j, xi_sq, g_norm_sq, h_i_sq))
}
