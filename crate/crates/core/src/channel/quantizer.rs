//! AQNM distortion factor of a b-bit scalar quantizer with Gaussian input.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{domain, Error, Result};
use crate::numerics::reg_inc_gamma_pair;

/// Resolution of the receive ADC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adc {
    Bits(u32),
    /// Ideal, unquantized receiver (`λ_q = 1`).
    FullPrecision,
}

/// Largest resolution whose factor comes from an explicit Lloyd-Max design.
/// Above it the high-resolution closed form is used.
pub const LLOYD_MAX_BITS: u32 = 5;

static LLOYD_MAX_TABLE: OnceLock<Vec<f64>> = OnceLock::new();

/// `λ_q = 1 - D_b`, where `D_b` is the normalized mean-square distortion of
/// the optimal 2^b-level quantizer for a unit-variance Gaussian.
pub fn lambda_q_of_bits(adc: Adc) -> Result<f64> {
    match adc {
        Adc::FullPrecision => Ok(1.0),
        Adc::Bits(0) => Err(domain("ADC resolution must be at least 1 bit")),
        Adc::Bits(b) if b <= LLOYD_MAX_BITS => {
            let table = LLOYD_MAX_TABLE.get_or_init(|| {
                (1..=LLOYD_MAX_BITS)
                    .map(|b| lloyd_max_gain(1 << b).expect("Lloyd-Max design converges for b <= 5"))
                    .collect()
            });
            Ok(table[(b - 1) as usize])
        }
        Adc::Bits(b) => Ok(1.0 - PI * 3f64.sqrt() / 2.0 * 2f64.powi(-2 * b as i32)),
    }
}

/// Runs Lloyd's algorithm for a unit Gaussian with `levels` output levels and
/// returns `1 - distortion`, i.e. the energy of the quantized signal.
pub fn lloyd_max_gain(levels: usize) -> Result<f64> {
    if levels < 2 {
        return Err(domain(format!("quantizer needs at least 2 levels, got {levels}")));
    }
    let half = (levels - 1) as f64 / 2.0;
    let spread = 4.0 / levels as f64;
    let mut points: Vec<f64> = (0..levels).map(|i| (i as f64 - half) * spread).collect();
    let mut edges = vec![0.0; levels + 1];
    for _ in 0..200_000 {
        edges[0] = f64::NEG_INFINITY;
        edges[levels] = f64::INFINITY;
        for i in 1..levels {
            edges[i] = 0.5 * (points[i - 1] + points[i]);
        }
        let mut shift: f64 = 0.0;
        for i in 0..levels {
            let (mass, first) = cell_moments(edges[i], edges[i + 1])?;
            let c = first / mass;
            shift = shift.max((c - points[i]).abs());
            points[i] = c;
        }
        if shift < 1e-13 {
            let mut energy = 0.0;
            for i in 0..levels {
                let (mass, first) = cell_moments(edges[i], edges[i + 1])?;
                energy += first * first / mass;
            }
            return Ok(energy);
        }
    }
    Err(Error::Numeric(format!("Lloyd iteration for {levels} levels did not converge")))
}

/// Probability mass and first moment of N(0,1) on `[a, b]`.
fn cell_moments(a: f64, b: f64) -> Result<(f64, f64)> {
    let mass = normal_cdf(b)? - normal_cdf(a)?;
    Ok((mass, normal_pdf(a) - normal_pdf(b)))
}

fn normal_pdf(t: f64) -> f64 {
    if t.is_infinite() {
        0.0
    } else {
        (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
    }
}

/// Φ(t) through `erf(x) = P(1/2, x²)`.
fn normal_cdf(t: f64) -> Result<f64> {
    if t == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if t == f64::INFINITY {
        return Ok(1.0);
    }
    let (p, q) = reg_inc_gamma_pair(0.5, 0.5 * t * t)?;
    Ok(if t < 0.0 { 0.5 * q } else { 0.5 + 0.5 * p })
}
