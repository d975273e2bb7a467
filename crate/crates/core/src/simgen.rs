// SPDX-License-Identifier: MIT OR Apache-2.0

//! Staircase mean sequences, seeded Gaussian noise, and the four simulation
//! study configurations (A1, A2, B1, B2).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use libm::{cos, log, sqrt};
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// A piecewise-constant mean sequence with Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignalSpec {
    pub n: usize,
    /// True change points, 1-based, increasing, within `2..=n`.
    pub tau: Vec<usize>,
    /// Standardized jump size; each change point raises the mean by `delta * sigma`.
    pub delta: f64,
    pub sigma: f64,
    /// Mean of the first segment.
    #[cfg_attr(feature = "serde", serde(default))]
    pub mu0: f64,
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n == 0 {
            return bad("n must be positive".to_string());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad(format!(
                "delta must be finite and nonnegative, got {}",
                self.delta
            ));
        }
        if !self.mu0.is_finite() {
            return bad("mu0 must be finite".to_string());
        }
        let mut prev = 1;
        for &t in &self.tau {
            if t > self.n {
                return bad(format!("change point {t} exceeds n = {}", self.n));
            }
            if t < prev + 2 {
                return bad(format!(
                    "change points must be increasing with gaps of at least 2 (including tau_0 = 1); got {t} after {prev}"
                ));
            }
            prev = t;
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.tau.len()
    }

    /// `L`: smallest gap between consecutive change points, counting τ₀ = 1.
    /// Without change points this is `n`.
    pub fn min_gap(&self) -> usize {
        let mut prev = 1;
        let mut gap = usize::MAX;
        for &t in &self.tau {
            gap = gap.min(t - prev);
            prev = t;
        }
        if gap == usize::MAX {
            self.n
        } else {
            gap
        }
    }

    /// `S = δ² L`.
    pub fn signal_strength(&self) -> f64 {
        self.delta * self.delta * self.min_gap() as f64
    }
}

/// `μ_i = mu0 + δσ · #{k : τ_k <= i}`.
pub fn staircase_mu(spec: &SignalSpec) -> Vec<f64> {
    let jump = spec.delta * spec.sigma;
    let mut level = spec.mu0;
    let mut next = spec.tau.iter().peekable();
    (1..=spec.n)
        .map(|i| {
            while next.next_if(|&&t| t <= i).is_some() {
                level += jump;
            }
            level
        })
        .collect()
}

/// `y = μ + ε` with `ε_i ~ N(0, σ²)` iid, drawn from a ChaCha20 stream keyed
/// by `seed`.
pub fn simulate(spec: &SignalSpec, seed: u64) -> Vec<f64> {
    simulate_scaled(spec, seed, 1.0)
}

/// Like [`simulate`], with the noise multiplied by `noise_scale` (0 gives the
/// noiseless mean).
pub fn simulate_scaled(spec: &SignalSpec, seed: u64, noise_scale: f64) -> Vec<f64> {
    let mu = staircase_mu(spec);
    let noise = gaussian_noise(spec.n, spec.sigma * noise_scale, seed);
    mu.iter().zip(&noise).map(|(m, e)| m + e).collect()
}

/// `n` iid `N(0, σ²)` draws (Box–Muller over a ChaCha20 stream).
pub fn gaussian_noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        // u1 in (0, 1], u2 in [0, 1)
        let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let radius = sqrt(-2.0 * log(u1));
        let angle = core::f64::consts::TAU * u2;
        out.push(sigma * radius * cos(angle));
        out.push(sigma * radius * libm::sin(angle));
    }
    out.truncate(n);
    out
}

/// Seed for one replication: SplitMix64 finalizer applied to
/// `base_seed + (replication + 1) · 0x9E3779B97F4A7C15`.
pub fn derive_seed(base_seed: u64, replication: u64) -> u64 {
    let mut z = base_seed.wrapping_add(
        replication
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which quantity an experiment varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScaleAxis {
    /// Jump size δ at fixed positions.
    Delta,
    /// Spacing `L`: `τ = (L+1, 2L+1, …)`, `n = (K+1) L`.
    MinGap,
}

/// How λ is chosen in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SelectionMode {
    KnownK,
    Dp,
    Cb,
    DpAndCb,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentConfig {
    pub name: String,
    pub scale_axis: ScaleAxis,
    pub scale_values: Vec<f64>,
    /// Template; the scaled quantity is overwritten per grid value.
    pub base_spec: SignalSpec,
    pub replications: usize,
    pub mode: SelectionMode,
    pub base_seed: u64,
    /// Optional post-treatment: merge estimates closer than this gap.
    pub merge_gap: Option<usize>,
    /// Multiplies the simulated noise; 1 for real experiments.
    pub noise_scale: f64,
}

pub const FULL_REPLICATIONS: usize = 100;
pub const DESK_REPLICATIONS: usize = 20;

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = libm::round((stop - start) / step) as usize;
    (0..=count).map(|i| start + i as f64 * step).collect()
}

/// The four simulation studies, at 100 replications and base seed 0.
pub fn experiment_config(name: &str) -> Result<ExperimentConfig> {
    let (scale_axis, scale_values, base_spec, mode) = match name {
        "A1" => (
            ScaleAxis::Delta,
            grid(0.25, 4.0, 0.25),
            SignalSpec {
                n: 150,
                tau: alloc::vec![31, 61, 91, 121],
                delta: 0.25,
                sigma: 1.0,
                mu0: 0.0,
            },
            SelectionMode::KnownK,
        ),
        "A2" => (
            ScaleAxis::MinGap,
            grid(15.0, 65.0, 5.0),
            SignalSpec {
                n: 75,
                tau: alloc::vec![16, 31, 46, 61],
                delta: 2.0,
                sigma: 1.0,
                mu0: 0.0,
            },
            SelectionMode::KnownK,
        ),
        "B1" => (
            ScaleAxis::Delta,
            grid(1.0, 4.0, 0.5),
            SignalSpec {
                n: 100,
                tau: alloc::vec![26, 51, 76],
                delta: 1.0,
                sigma: 1.0,
                mu0: 0.0,
            },
            SelectionMode::DpAndCb,
        ),
        "B2" => (
            ScaleAxis::MinGap,
            grid(10.0, 50.0, 5.0),
            SignalSpec {
                n: 40,
                tau: alloc::vec![11, 21, 31],
                delta: 2.0,
                sigma: 1.0,
                mu0: 0.0,
            },
            SelectionMode::DpAndCb,
        ),
        other => return Err(Error::UnknownExperiment(other.to_string())),
    };
    Ok(ExperimentConfig {
        name: name.to_string(),
        scale_axis,
        scale_values,
        base_spec,
        replications: FULL_REPLICATIONS,
        mode,
        base_seed: 0,
        merge_gap: None,
        noise_scale: 1.0,
    })
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale_values.is_empty() {
            return Err(Error::InvalidInput("scale grid is empty".into()));
        }
        if !self.scale_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "scale grid must be strictly increasing".into(),
            ));
        }
        if self.replications == 0 {
            return Err(Error::InvalidInput("replications must be positive".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidInput(
                "noise scale must be finite and nonnegative".into(),
            ));
        }
        if self.merge_gap == Some(0) {
            return Err(Error::InvalidInput("merge gap must be positive".into()));
        }
        for &v in &self.scale_values {
            self.spec_at(v)?;
        }
        Ok(())
    }

    /// Signal for one grid value.
    pub fn spec_at(&self, scale: f64) -> Result<SignalSpec> {
        let mut spec = self.base_spec.clone();
        match self.scale_axis {
            ScaleAxis::Delta => spec.delta = scale,
            ScaleAxis::MinGap => {
                if !(scale >= 2.0 && libm::trunc(scale) == scale) {
                    return Err(Error::InvalidInput(format!(
                        "spacing must be an integer >= 2, got {scale}"
                    )));
                }
                let gap = scale as usize;
                let k = spec.tau.len();
                spec.n = (k + 1) * gap;
                spec.tau = (1..=k).map(|j| j * gap + 1).collect();
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Matching tolerance for F1, `L / 20`.
    pub fn tolerance(spec: &SignalSpec) -> f64 {
        spec.min_gap() as f64 / 20.0
    }
}
