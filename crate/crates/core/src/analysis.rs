//! Closed-form outage engine.
//!
//! The cascade gain `ξ_M = Σ_m |g_{k,m}||h_{sr,m}|` is approximated by a
//! moment-matched gamma law ([`GammaApprox`]). Conditioning on the residual
//! SIC power `|h_I|² = Ω_I z`, user `k` is in outage when
//! `ξ_M < sqrt(φ* d_sr^α (β² M N_r Δ1 + d_k^α (λ_q² + ρ_s ε Ω_I z)))`,
//! where `φ*` is the worst decode stage and `‖g_k^H Φ‖²` has been replaced by
//! its mean `M`. The expectation over `z ~ Exp(1)` is a Gauss-Laguerre sum;
//! under perfect SIC it collapses to a single incomplete-gamma term.

use std::f64::consts::PI;
use std::fmt;

use crate::channel::{db_to_linear, phi_active, phi_passive, RisMode, SystemConfig};
use crate::error::{domain, Result};
use crate::numerics::{ln_gamma, reg_inc_gamma_pair, QuadratureRule};

/// Shape/scale pair of the gamma approximation to the CDF of `ξ_M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaApprox {
    pub mu0: f64,
    pub phi0: f64,
}

impl GammaApprox {
    pub fn new(elements: usize) -> Result<Self> {
        if elements == 0 {
            return Err(domain("element count must be at least 1"));
        }
        let pi2 = PI * PI;
        Ok(Self { mu0: ((elements as f64 + 1.0) * pi2 - 16.0) / (16.0 - pi2), phi0: (16.0 - pi2) / (4.0 * PI) })
    }

    /// `mu0 + 1`, the gamma shape.
    pub fn shape(&self) -> f64 {
        self.mu0 + 1.0
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(self.cdf_pair(x)?.0)
    }

    /// `(F(x), 1 - F(x))`, each accurate in its own tail.
    pub fn cdf_pair(&self, x: f64) -> Result<(f64, f64)> {
        if x.is_nan() || x < 0.0 {
            return Err(domain(format!("cascade gain must be >= 0, got {x}")));
        }
        reg_inc_gamma_pair(self.shape(), x / self.phi0)
    }
}

pub fn gamma_approx(elements: usize) -> Result<GammaApprox> {
    GammaApprox::new(elements)
}

/// Approximate CDF of `ξ_M` for an `elements`-element surface.
pub fn cdf_xi(x: f64, elements: usize) -> Result<f64> {
    GammaApprox::new(elements)?.cdf(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sic {
    Perfect,
    Imperfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Evaluation {
    Analytic,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Regime {
    pub system: RisMode,
    pub sic: Sic,
    pub evaluation: Evaluation,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let system = match self.system {
            RisMode::Active => "ARIS",
            RisMode::Passive => "PRIS",
        };
        let sic = match self.sic {
            Sic::Perfect => "pSIC",
            Sic::Imperfect => "ipSIC",
        };
        let eval = match self.evaluation {
            Evaluation::Analytic => "analytic",
            Evaluation::Asymptotic => "asymptotic",
        };
        write!(f, "{system}-{sic}-{eval}")
    }
}

/// Outage probability of one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageResult {
    pub user: usize,
    pub op: f64,
    /// `1 - op`, evaluated directly so that it keeps its precision when `op`
    /// rounds to one.
    pub success: f64,
    /// False when some decode stage can never clear its threshold; `op` is 1.
    pub feasible: bool,
    pub regime: Regime,
}

impl OutageResult {
    fn infeasible(user: usize, regime: Regime) -> Self {
        Self { user, op: 1.0, success: 0.0, feasible: false, regime }
    }
}

/// `ξ_M`-threshold squared as `(c0 + c1 z)`, plus the worst-stage `φ*`.
#[derive(Debug, Clone, Copy)]
struct OutageTerms {
    constant: f64,
    residual: f64,
}

fn worst_stage<F>(cfg: &SystemConfig, k: usize, phi: F) -> Result<Option<f64>>
where
    F: Fn(&SystemConfig, usize, usize) -> Result<Option<f64>>,
{
    let mut worst: f64 = 0.0;
    for j in 1..=k {
        match phi(cfg, k, j)? {
            Some(v) => worst = worst.max(v),
            None => return Ok(None),
        }
    }
    Ok(Some(worst))
}

fn active_terms(cfg: &SystemConfig, k: usize) -> Result<Option<OutageTerms>> {
    let Some(phi_star) = worst_stage(cfg, k, phi_active)? else {
        return Ok(None);
    };
    let lq = cfg.hardware.lambda_q()?;
    let sr = cfg.topology.sr_loss();
    let uk = cfg.topology.user_loss(k)?;
    let beta_sq = cfg.ris.beta * cfg.ris.beta;
    let thermal = beta_sq * cfg.elements() as f64 * cfg.ris.n_r * (lq / cfg.link.n0);
    Ok(Some(OutageTerms {
        constant: phi_star * sr * (thermal + uk * lq * lq),
        residual: phi_star * sr * uk * cfg.link.rho_s * cfg.sic.epsilon * cfg.sic.omega_i,
    }))
}

fn passive_terms(cfg: &SystemConfig, k: usize) -> Result<Option<OutageTerms>> {
    let Some(phi_star) = worst_stage(cfg, k, phi_passive)? else {
        return Ok(None);
    };
    let lq = cfg.hardware.lambda_q()?;
    let path = cfg.topology.sr_loss() * cfg.topology.user_loss(k)?;
    Ok(Some(OutageTerms {
        constant: phi_star * path * lq * lq,
        residual: phi_star * path * cfg.link.rho_s * cfg.sic.epsilon * cfg.sic.omega_i,
    }))
}

fn sic_of(cfg: &SystemConfig) -> Sic {
    if cfg.sic.is_perfect() {
        Sic::Perfect
    } else {
        Sic::Imperfect
    }
}

/// `E_z[F_ξ(sqrt(c0 + c1 z))]` by Gauss-Laguerre, or the single term when
/// `c1 = 0`. Returns `(op, success)`.
fn average_cdf(g: &GammaApprox, constant: f64, residual: f64, sic: Sic, rule: &QuadratureRule) -> Result<(f64, f64)> {
    match sic {
        Sic::Perfect => g.cdf_pair(constant.sqrt()),
        Sic::Imperfect => {
            let mut op = 0.0;
            let mut success = 0.0;
            for (z, w) in rule.iter() {
                let (p, q) = g.cdf_pair((constant + residual * z).sqrt())?;
                op += w * p;
                success += w * q;
            }
            Ok((op.min(1.0), success.min(1.0)))
        }
    }
}

fn evaluate(
    cfg: &SystemConfig,
    k: usize,
    system: RisMode,
    evaluation: Evaluation,
    rule: &QuadratureRule,
) -> Result<OutageResult> {
    cfg.validate_link()?;
    let sic = sic_of(cfg);
    let regime = Regime { system, sic, evaluation };
    let terms = match system {
        RisMode::Active => active_terms(cfg, k)?,
        RisMode::Passive => passive_terms(cfg, k)?,
    };
    let Some(terms) = terms else {
        return Ok(OutageResult::infeasible(k, regime));
    };
    let g = GammaApprox::new(cfg.elements())?;
    let (op, success) = match (evaluation, sic) {
        (Evaluation::Analytic, _) => average_cdf(&g, terms.constant, terms.residual, sic, rule)?,
        // High-SNR floor: only the residual-interference term survives.
        (Evaluation::Asymptotic, Sic::Imperfect) => average_cdf(&g, 0.0, terms.residual, sic, rule)?,
        // Leading power-law term of the lower incomplete gamma at small argument.
        (Evaluation::Asymptotic, Sic::Perfect) => {
            let s = g.shape();
            let ln_op = 0.5 * s * terms.constant.ln() - ln_gamma(s + 1.0)? - s * g.phi0.ln();
            let op = ln_op.exp().min(1.0);
            (op, 1.0 - op)
        }
    };
    Ok(OutageResult { user: k, op, success, feasible: true, regime })
}

/// Analytic OP of user `k` through an active surface, reading `beta` and
/// `n_r` from the scenario whatever its declared mode.
pub fn op_active(cfg: &SystemConfig, k: usize, rule: &QuadratureRule) -> Result<OutageResult> {
    evaluate(cfg, k, RisMode::Active, Evaluation::Analytic, rule)
}

/// Analytic OP of user `k` through a passive surface; `beta` and `n_r` are
/// ignored.
pub fn op_passive(cfg: &SystemConfig, k: usize, rule: &QuadratureRule) -> Result<OutageResult> {
    evaluate(cfg, k, RisMode::Passive, Evaluation::Analytic, rule)
}

/// Analytic OP of user `k` for the configured surface and SIC quality.
pub fn op_analytic(cfg: &SystemConfig, k: usize, rule: &QuadratureRule) -> Result<OutageResult> {
    cfg.validate()?;
    evaluate(cfg, k, cfg.ris.mode, Evaluation::Analytic, rule)
}

/// High-SNR OP of user `k`: the error floor under imperfect SIC, the
/// power-law tail `∝ ρ_s^{-(μ0+1)/2}` under perfect SIC (capped at one).
pub fn op_asymptotic(cfg: &SystemConfig, k: usize, rule: &QuadratureRule) -> Result<OutageResult> {
    cfg.validate()?;
    evaluate(cfg, k, cfg.ris.mode, Evaluation::Asymptotic, rule)
}

/// Analytic OP of every user.
pub fn op_analytic_all(cfg: &SystemConfig, rule: &QuadratureRule) -> Result<Vec<OutageResult>> {
    (1..=cfg.num_users()).map(|k| op_analytic(cfg, k, rule)).collect()
}

/// Log-log slope `-Δ log OP / Δ log ρ_s` between two SNRs given in dB.
pub fn diversity_order<F>(op_at_snr_db: F, snr_lo_db: f64, snr_hi_db: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(snr_hi_db > snr_lo_db) {
        return Err(domain(format!("need snr_hi > snr_lo, got {snr_lo_db} and {snr_hi_db}")));
    }
    let lo = op_at_snr_db(snr_lo_db)?;
    let hi = op_at_snr_db(snr_hi_db)?;
    if !(lo > 0.0) || !(hi > 0.0) {
        return Err(domain(format!("OP must be positive for a log slope, got {lo} and {hi}")));
    }
    Ok(-(hi.ln() - lo.ln()) / (db_to_linear(snr_hi_db).ln() - db_to_linear(snr_lo_db).ln()))
}

/// Delay-limited throughput `(1 - OP) R`.
pub fn throughput(op: f64, rate: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&op) {
        return Err(domain(format!("outage probability must lie in [0, 1], got {op}")));
    }
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(domain(format!("rate must be >= 0, got {rate}")));
    }
    Ok((1.0 - op) * rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Adc, RisConfig, SicModel};
    use crate::numerics::gauss_laguerre;

    fn rule() -> QuadratureRule {
        gauss_laguerre(64).unwrap()
    }

    fn full_precision() -> SystemConfig {
        SystemConfig::baseline().with_adc(Adc::FullPrecision)
    }

    #[test]
    fn gamma_constants() {
        let g1 = gamma_approx(1).unwrap();
        let pi2 = PI * PI;
        assert!((g1.mu0 - (2.0 * pi2 - 16.0) / (16.0 - pi2)).abs() < 1e-15);
        assert!((g1.mu0 - 0.609_946).abs() < 1e-5);
        let g10 = gamma_approx(10).unwrap();
        assert!((g10.mu0 - 15.0995).abs() < 1e-4);
        assert!((g10.phi0 - 0.487_84).abs() < 1e-5);
        assert_eq!(g1.phi0, gamma_approx(100).unwrap().phi0);
        assert!(gamma_approx(0).is_err());
    }

    #[test]
    fn gamma_moments_match_rayleigh_products() {
        // Shape * scale = M π/4, shape * scale² = M (1 - π²/16).
        for m in [1usize, 4, 10, 64] {
            let g = gamma_approx(m).unwrap();
            let mean = g.shape() * g.phi0;
            let var = g.shape() * g.phi0 * g.phi0;
            assert!((mean - m as f64 * PI / 4.0).abs() < 1e-12);
            assert!((var - m as f64 * (1.0 - PI * PI / 16.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_limits() {
        assert_eq!(cdf_xi(0.0, 10).unwrap(), 0.0);
        assert!((cdf_xi(1000.0, 10).unwrap() - 1.0).abs() < 1e-12);
        assert!(cdf_xi(-1.0, 10).is_err());
        let mut last = 0.0;
        for i in 0..200 {
            let v = cdf_xi(i as f64 * 0.1, 10).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn psic_vanishes_at_huge_snr() {
        let cfg = full_precision().with_sic(SicModel::PERFECT).with_snr_db(120.0);
        for k in 1..=3 {
            let r = op_analytic(&cfg, k, &rule()).unwrap();
            assert!(r.feasible);
            assert!(r.op < 1e-6, "user {k}: {}", r.op);
            assert_eq!(r.regime.sic, Sic::Perfect);
        }
    }

    #[test]
    fn passive_path_equals_active_path_at_unit_beta() {
        for sic in [SicModel::PERFECT, SicModel { epsilon: 0.05, omega_i: 1.0 }] {
            let pas = full_precision().with_sic(sic).to_passive();
            let mut act = pas.clone();
            act.ris = RisConfig { mode: RisMode::Active, beta: 1.0, n_r: 0.0, ..pas.ris };
            for k in 1..=3 {
                let a = op_active(&act, k, &rule()).unwrap();
                let p = op_analytic(&pas, k, &rule()).unwrap();
                assert!((a.op - p.op).abs() <= 1e-12 * p.op, "user {k}: {} vs {}", a.op, p.op);
            }
        }
    }

    #[test]
    fn infeasible_user_has_unit_outage() {
        let cfg = SystemConfig::baseline();
        let r = op_analytic(&cfg, 3, &rule()).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.op, 1.0);
        assert_eq!(r.success, 0.0);
        let r = op_asymptotic(&cfg, 2, &rule()).unwrap();
        assert!(!r.feasible);
        assert!(op_analytic(&cfg, 1, &rule()).unwrap().feasible);
    }

    #[test]
    fn op_and_success_are_complements() {
        for snr in [0.0, 20.0, 40.0] {
            for sic in [SicModel::PERFECT, SicModel { epsilon: 0.05, omega_i: 1.0 }] {
                let cfg = full_precision().with_snr_db(snr).with_sic(sic);
                for k in 1..=3 {
                    let r = op_analytic(&cfg, k, &rule()).unwrap();
                    assert!((0.0..=1.0).contains(&r.op));
                    assert!((r.op + r.success - 1.0).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn ipsic_floor_independent_of_snr() {
        let cfg = full_precision();
        for k in 1..=3 {
            let a = op_asymptotic(&cfg.clone().with_snr_db(60.0), k, &rule()).unwrap().op;
            let b = op_asymptotic(&cfg.clone().with_snr_db(80.0), k, &rule()).unwrap().op;
            assert!((a - b).abs() <= 1e-10 * a, "user {k}: {a} vs {b}");
        }
    }

    #[test]
    fn psic_asymptote_is_power_law() {
        let cfg = full_precision().with_sic(SicModel::PERFECT);
        let s = gamma_approx(10).unwrap().shape();
        for k in 1..=3 {
            let lo = op_asymptotic(&cfg.clone().with_snr_db(40.0), k, &rule()).unwrap().op;
            let hi = op_asymptotic(&cfg.clone().with_snr_db(60.0), k, &rule()).unwrap().op;
            let want = 100f64.powf(-s / 2.0);
            assert!((hi / lo / want - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn analytic_meets_floor_at_high_snr() {
        let cfg = full_precision().with_snr_db(80.0);
        for k in 1..=3 {
            let a = op_analytic(&cfg, k, &rule()).unwrap().op;
            let f = op_asymptotic(&cfg, k, &rule()).unwrap().op;
            assert!((a - f).abs() <= 0.02 * f, "user {k}: {a} vs {f}");
        }
    }

    #[test]
    fn epsilon_to_zero_recovers_perfect_sic() {
        for cfg in [full_precision(), full_precision().to_passive()] {
            for k in 1..=3 {
                let tiny = op_analytic(&cfg.clone().with_sic(SicModel { epsilon: 1e-12, omega_i: 1.0 }), k, &rule())
                    .unwrap()
                    .op;
                let exact = op_analytic(&cfg.clone().with_sic(SicModel::PERFECT), k, &rule()).unwrap().op;
                assert!((tiny - exact).abs() <= 1e-6 * exact, "user {k}: {tiny} vs {exact}");
            }
        }
    }

    #[test]
    fn boundary_users() {
        // User 1 has a single decode stage, user K pays the residual term too.
        let cfg = full_precision();
        let r1 = op_analytic(&cfg, 1, &rule()).unwrap();
        let phi11 = phi_active(&cfg, 1, 1).unwrap().unwrap();
        let t = active_terms(&cfg, 1).unwrap().unwrap();
        let lq = 1.0;
        let thermal = 49.0 * 10.0 * lq;
        let want = phi11 * cfg.topology.sr_loss() * (thermal + cfg.topology.user_loss(1).unwrap());
        assert!((t.constant - want).abs() < 1e-12 * want);
        assert!(r1.feasible);
        let perfect = op_analytic(&cfg.clone().with_sic(SicModel::PERFECT), 3, &rule()).unwrap().op;
        let imperfect = op_analytic(&cfg, 3, &rule()).unwrap().op;
        assert!(imperfect > perfect);
    }

    #[test]
    fn diversity_order_cases() {
        let flat = diversity_order(|_| Ok(0.5), 60.0, 80.0).unwrap();
        assert_eq!(flat, 0.0);
        let slope = diversity_order(|db| Ok(db_to_linear(db).powf(-2.5)), 10.0, 30.0).unwrap();
        assert!((slope - 2.5).abs() < 1e-12);
        assert!(diversity_order(|_| Ok(0.0), 60.0, 80.0).is_err());
        assert!(diversity_order(|_| Ok(0.1), 80.0, 60.0).is_err());
    }

    #[test]
    fn throughput_cases() {
        assert_eq!(throughput(0.0, 0.15).unwrap(), 0.15);
        assert_eq!(throughput(1.0, 0.15).unwrap(), 0.0);
        assert!((throughput(0.25, 0.15).unwrap() - 0.1125).abs() < 1e-15);
        assert!(throughput(1.2, 0.15).is_err());
        assert!(throughput(0.5, -1.0).is_err());
    }

    #[test]
    fn regime_labels() {
        let r = Regime { system: RisMode::Passive, sic: Sic::Imperfect, evaluation: Evaluation::Asymptotic };
        assert_eq!(r.to_string(), "PRIS-ipSIC-asymptotic");
    }
}
