//! Brownian increments for the transport noise.
//!
//! Convergence studies draw the finest path once and obtain every coarser
//! resolution by summing consecutive increments, so all levels see the same
//! underlying Brownian motion.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// `delta[k][n] = beta_k(t_{n+1}) - beta_k(t_n)` for `K` components and `N` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianIncrements {
    components: usize,
    steps: usize,
    tau: f64,
    seed: u64,
    /// component-major: `data[k * steps + n]`
    data: Vec<f64>,
}

impl BrownianIncrements {
    /// Draw i.i.d. `N(0, tau)` increments; a deterministic function of the arguments.
    pub fn sample(components: usize, steps: usize, tau: f64, seed: u64) -> Result<Self> {
        if components == 0 || steps == 0 || !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "increments need K >= 1, N >= 1, tau > 0 (got K={components}, N={steps}, tau={tau})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = tau.sqrt();
        let data = (0..components * steps)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
            .collect();
        Ok(Self { components, steps, tau, seed, data })
    }

    /// Build from explicit values, component-major.
    pub fn from_values(components: usize, tau: f64, seed: u64, data: Vec<f64>) -> Result<Self> {
        if components == 0 || data.is_empty() || !data.len().is_multiple_of(components) {
            return Err(Error::InvalidParameter(format!(
                "{} increments cannot be split into {components} components",
                data.len()
            )));
        }
        let steps = data.len() / components;
        Ok(Self { components, steps, tau, seed, data })
    }

    /// Path with no noise at all (used when `K = 0` noise fields are configured).
    pub fn zeros(components: usize, steps: usize, tau: f64) -> Self {
        Self { components, steps, tau, seed: 0, data: vec![0.0; components * steps] }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn component(&self, k: usize) -> &[f64] {
        &self.data[k * self.steps..(k + 1) * self.steps]
    }

    pub fn get(&self, k: usize, n: usize) -> f64 {
        self.data[k * self.steps + n]
    }

    /// The `K` increments of step `n` (0-based, covering `[t_n, t_{n+1}]`).
    pub fn at_step(&self, n: usize) -> Vec<f64> {
        (0..self.components).map(|k| self.get(k, n)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Sum blocks of `factor` consecutive increments.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.steps.is_multiple_of(factor) {
            return Err(Error::InvalidParameter(format!(
                "coarsening factor {factor} does not divide N = {}",
                self.steps
            )));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let data = self.data.chunks_exact(factor).map(|c| c.iter().sum()).collect();
        Ok(Self {
            components: self.components,
            steps: self.steps / factor,
            tau: self.tau * factor as f64,
            seed: self.seed,
            data,
        })
    }

    /// Clamp every increment into `[-bound, bound]`.
    pub fn truncated(&self, bound: f64) -> Self {
        Self {
            data: self.data.iter().map(|d| d.clamp(-bound, bound)).collect(),
            ..self.clone()
        }
    }

    /// SHA-256 over the raw increment bits, used to confirm path coupling.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.components as u64).to_le_bytes());
        h.update((self.steps as u64).to_le_bytes());
        for d in &self.data {
            h.update(d.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}
