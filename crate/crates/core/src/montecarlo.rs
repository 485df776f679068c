//! Monte Carlo estimation of outage probabilities from the full signal model.
//!
//! Every trial draws unit-variance Rayleigh magnitudes for the BS-RIS and
//! RIS-user links, aligns phases to the evaluated user, draws one residual
//! SIC coefficient per user and checks each decode stage with
//! [`UserLink`]. Trials are split into fixed-size chunks; chunk `c` uses a
//! ChaCha8 stream seeded by `(seed, c)`, so the result does not depend on how
//! many worker threads run the chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;

use crate::channel::{SystemConfig, UserLink};
use crate::error::{domain, Error, Result};

/// Trials per RNG substream.
pub const DEFAULT_CHUNK_SIZE: u64 = 1 << 14;

/// One realization of every small-scale coefficient in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    /// `|h_{sr,m}|`
    pub h_mag: Vec<f64>,
    /// `|g_{k,m}|`, indexed `[k - 1][m]`.
    pub g_mag: Vec<Vec<f64>>,
    /// `Σ_m |g_{k,m}|²` per user.
    pub g_norm_sq: Vec<f64>,
    /// `|h_I|²` per user, exponential with mean `Ω_I`.
    pub h_i_sq: Vec<f64>,
}

impl ChannelDraw {
    fn zeros(users: usize, elements: usize) -> Self {
        Self {
            h_mag: vec![0.0; elements],
            g_mag: vec![vec![0.0; elements]; users],
            g_norm_sq: vec![0.0; users],
            h_i_sq: vec![0.0; users],
        }
    }

    fn fill<R: Rng + ?Sized>(&mut self, omega_i: f64, rng: &mut R) {
        for h in self.h_mag.iter_mut() {
            *h = rayleigh(rng);
        }
        for (g_row, norm) in self.g_mag.iter_mut().zip(self.g_norm_sq.iter_mut()) {
            let mut acc = 0.0;
            for g in g_row.iter_mut() {
                *g = rayleigh(rng);
                acc += *g * *g;
            }
            *norm = acc;
        }
        for hi in self.h_i_sq.iter_mut() {
            let e: f64 = Exp1.sample(rng);
            *hi = omega_i * e;
        }
    }

    /// Cascade amplitude `ξ_M = Σ_m |g_{k,m}||h_{sr,m}|` with phases matched
    /// to user `k`.
    pub fn xi(&self, k: usize) -> f64 {
        self.g_mag[k - 1].iter().zip(&self.h_mag).map(|(g, h)| g * h).sum()
    }

    pub fn xi_sq(&self, k: usize) -> f64 {
        let x = self.xi(k);
        x * x
    }
}

/// `|CN(0, 1)|`.
#[inline]
fn rayleigh<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    (0.5 * (re * re + im * im)).sqrt()
}

/// Draws one network realization for `cfg`.
pub fn draw<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> ChannelDraw {
    let mut d = ChannelDraw::zeros(cfg.num_users(), cfg.elements());
    d.fill(cfg.sic.omega_i, rng);
    d
}

/// RNG for chunk `chunk` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// How the ARIS thermal-noise term sees `‖g_k^H Φ‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GNorm {
    /// The realized `Σ_m |g_{k,m}|²` of the trial.
    #[default]
    Exact,
    /// Its mean `M`, as in the closed-form derivation. Diagnostic only.
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub op_hat: Vec<f64>,
    /// Binomial standard error `sqrt(p(1-p)/N)` per user.
    pub std_err: Vec<f64>,
    pub outages: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
}

impl McEstimate {
    fn from_counts(outages: Vec<u64>, trials: u64, seed: u64) -> Self {
        let n = trials as f64;
        let op_hat: Vec<f64> = outages.iter().map(|&c| c as f64 / n).collect();
        let std_err = op_hat.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
        Self { op_hat, std_err, outages, trials, seed }
    }
}

/// Chunked, seed-deterministic simulation driver.
#[derive(Debug, Clone, PartialEq)]
pub struct McEngine {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
    pub chunk_size: u64,
    pub g_norm: GNorm,
}

impl McEngine {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self { trials, seed, workers: 0, chunk_size: DEFAULT_CHUNK_SIZE, g_norm: GNorm::Exact }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_g_norm(mut self, g_norm: GNorm) -> Self {
        self.g_norm = g_norm;
        self
    }

    pub fn estimate(&self, cfg: &SystemConfig) -> Result<McEstimate> {
        let mut out = self.estimate_batch(std::slice::from_ref(cfg))?;
        Ok(out.pop().expect("one estimate per config"))
    }

    /// Estimates every config from one shared set of channel draws. All
    /// configs must have the same number of users and elements; `Ω_I` may
    /// differ (the exponential draw is rescaled).
    pub fn estimate_batch(&self, cfgs: &[SystemConfig]) -> Result<Vec<McEstimate>> {
        self.check()?;
        let Some(first) = cfgs.first() else {
            return Ok(Vec::new());
        };
        let users = first.num_users();
        let elements = first.elements();
        let mut links = Vec::with_capacity(cfgs.len());
        let mut omegas = Vec::with_capacity(cfgs.len());
        for cfg in cfgs {
            cfg.validate()?;
            if cfg.num_users() != users || cfg.elements() != elements {
                return Err(domain("batched configs must share user and element counts"));
            }
            links.push((1..=users).map(|k| UserLink::new(cfg, k)).collect::<Result<Vec<_>>>()?);
            omegas.push(cfg.sic.omega_i);
        }
        let g_norm = self.g_norm;
        let width = cfgs.len() * users;
        let counts = self.run_chunks(width, |rng, len, counts| {
            let mut d = ChannelDraw::zeros(users, elements);
            let mut xi_sq = vec![0.0; users];
            for _ in 0..len {
                d.fill(1.0, rng);
                for (k, x) in xi_sq.iter_mut().enumerate() {
                    *x = d.xi_sq(k + 1);
                }
                for (c, (user_links, omega)) in links.iter().zip(&omegas).enumerate() {
                    for (k, link) in user_links.iter().enumerate() {
                        let g = match g_norm {
                            GNorm::Exact => d.g_norm_sq[k],
                            GNorm::Mean => elements as f64,
                        };
                        if !link.decodes(xi_sq[k], g, omega * d.h_i_sq[k]) {
                            counts[c * users + k] += 1;
                        }
                    }
                }
            }
        })?;
        Ok(counts.chunks(users).map(|c| McEstimate::from_counts(c.to_vec(), self.trials, self.seed)).collect())
    }

    /// Fraction of draws with `ξ_M <= x` for each point of an ascending grid.
    pub fn empirical_cdf_xi(&self, elements: usize, grid: &[f64]) -> Result<Vec<f64>> {
        self.check()?;
        if elements == 0 {
            return Err(domain("element count must be at least 1"));
        }
        if grid.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(domain("CDF grid must be sorted ascending"));
        }
        // bins[i] counts draws with grid[i-1] < ξ <= grid[i]; bins[len] the rest.
        let bins = self.run_chunks(grid.len() + 1, |rng, len, bins| {
            for _ in 0..len {
                let xi: f64 = (0..elements).map(|_| rayleigh(rng) * rayleigh(rng)).sum();
                bins[grid.partition_point(|&x| x < xi)] += 1;
            }
        })?;
        let n = self.trials as f64;
        let mut acc = 0u64;
        Ok(bins[..grid.len()]
            .iter()
            .map(|b| {
                acc += b;
                acc as f64 / n
            })
            .collect())
    }

    fn check(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(domain("trial count must be at least 1"));
        }
        if self.chunk_size == 0 {
            return Err(domain("chunk size must be at least 1"));
        }
        Ok(())
    }

    /// Runs `body(rng, trials_in_chunk, counters)` on every chunk and sums the
    /// counters.
    fn run_chunks<F>(&self, width: usize, body: F) -> Result<Vec<u64>>
    where
        F: Fn(&mut ChaCha8Rng, u64, &mut [u64]) + Sync,
    {
        let chunks = self.trials.div_ceil(self.chunk_size);
        let job = || {
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let start = c * self.chunk_size;
                    let len = self.chunk_size.min(self.trials - start);
                    let mut counts = vec![0u64; width];
                    body(&mut chunk_rng(self.seed, c), len, &mut counts);
                    counts
                })
                .reduce(
                    || vec![0u64; width],
                    |mut a, b| {
                        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        a
                    },
                )
        };
        if self.workers == 0 {
            return Ok(job());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(job))
    }
}

/// Estimates the OP of every user of `cfg`.
pub fn estimate_op(cfg: &SystemConfig, trials: u64, seed: u64) -> Result<McEstimate> {
    McEngine::new(trials, seed).estimate(cfg)
}

/// Empirical CDF of the cascade amplitude for an `elements`-element surface.
pub fn empirical_cdf_xi(elements: usize, trials: u64, seed: u64, grid: &[f64]) -> Result<Vec<f64>> {
    McEngine::new(trials, seed).empirical_cdf_xi(elements, grid)
}
