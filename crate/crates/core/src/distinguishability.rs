//! Distinguishability matrices from physical noise models: constant overlap,
//! polarization, and emitter wavepackets with pure dephasing.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{check_unit_interval, Error, Result};
use crate::permanent::DistinguishabilityMatrix;
use crate::CMatrix;

/// `n` photons with unit diagonal and every off-diagonal overlap equal to `c`.
///
/// This is the Gram matrix of `sqrt(c)|0> + sqrt(1-c)|k>` with mutually
/// orthogonal `|k>`, so it is positive semidefinite for every `c` in `[0, 1]`.
pub fn constant_overlap(n: usize, c: f64) -> Result<DistinguishabilityMatrix> {
    check_unit_interval("overlap", c)?;
    let s = CMatrix::from_fn(n, n, |j, k| {
        Complex64::new(if j == k { 1.0 } else { c }, 0.0)
    });
    DistinguishabilityMatrix::new(s)
}

/// Jones vector of a photon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizationState {
    pub h: Complex64,
    pub v: Complex64,
}

impl PolarizationState {
    pub fn new(h: Complex64, v: Complex64) -> Result<Self> {
        let norm = h.norm_sqr() + v.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "polarization norm",
                value: norm,
                reason: "Jones vector must be normalized",
            });
        }
        Ok(PolarizationState { h, v })
    }

    /// Horizontal polarization rotated by `angle` radians along the
    /// linear-polarization great circle, as a half-wave plate does.
    pub fn linear(angle: f64) -> Self {
        PolarizationState {
            h: Complex64::new(angle.cos(), 0.0),
            v: Complex64::new(angle.sin(), 0.0),
        }
    }

    pub fn inner(&self, other: &PolarizationState) -> Complex64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }
}

/// Gram matrix of polarization states, `S[j, k] = <p_j|p_k>`.
pub fn polarization(states: &[PolarizationState]) -> Result<DistinguishabilityMatrix> {
    let n = states.len();
    DistinguishabilityMatrix::new(CMatrix::from_fn(n, n, |j, k| states[j].inner(&states[k])))
}

/// Emitter parameters for the dephased-wavepacket model.
///
/// Photon `i` has the wavepacket
/// `f_i(t) = sqrt(gamma) exp(-gamma t / 2) exp(-i (delta_i t + phi_i(t)))`
/// for `t >= 0`, where `phi_i` is a Wiener process with variance
/// `2 gamma_d t`. Rates and detunings share one (arbitrary) time unit.
#[derive(Clone, Debug, PartialEq)]
pub struct DephasingParams {
    pub gamma: f64,
    pub gamma_d: f64,
    /// Slow detuning of each photon; empty means all zero.
    pub deltas: Vec<f64>,
}

impl DephasingParams {
    pub fn new(gamma: f64, gamma_d: f64) -> Result<Self> {
        Self::with_detunings(gamma, gamma_d, Vec::new())
    }

    pub fn with_detunings(gamma: f64, gamma_d: f64, deltas: Vec<f64>) -> Result<Self> {
        if gamma.is_nan() || gamma <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "decay rate must be positive",
            });
        }
        if gamma_d.is_nan() || gamma_d < 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma_d",
                value: gamma_d,
                reason: "dephasing rate must be non-negative",
            });
        }
        Ok(DephasingParams {
            gamma,
            gamma_d,
            deltas,
        })
    }

    /// Dephasing strength `x = 2 gamma_d / gamma`.
    pub fn x(&self) -> f64 {
        2.0 * self.gamma_d / self.gamma
    }

    fn delta(&self, photon: usize) -> f64 {
        self.deltas.get(photon).copied().unwrap_or(0.0)
    }
}

/// Mean squared overlap of two photons from the same emitter,
/// `gamma / (gamma + 2 gamma_d) = 1 / (1 + x)`.
pub fn dephasing_overlap(p: &DephasingParams) -> f64 {
    p.gamma / (p.gamma + 2.0 * p.gamma_d)
}

/// Time grid for wavepacket sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingGrid {
    pub dt: f64,
    pub horizon: f64,
}

impl SamplingGrid {
    /// `dt = 0.01 / gamma`, `horizon = 15 / gamma`.
    pub fn for_decay_rate(gamma: f64) -> Self {
        SamplingGrid {
            dt: 0.01 / gamma,
            horizon: 15.0 / gamma,
        }
    }

    fn n_points(&self) -> usize {
        (self.horizon / self.dt).round() as usize + 1
    }
}

/// Draws `n_samples` sets of `n_photons` dephased wavepackets and returns
/// their Gram matrices, `S[i, j] = int f_i^* f_j dt` (trapezoidal rule,
/// wavepackets renormalized on the grid).
///
/// Sample `k` uses its own generator seeded from `(seed, k)`, so the result
/// does not depend on how samples are scheduled across threads.
pub fn sample_dephased_overlaps(
    p: &DephasingParams,
    n_photons: usize,
    n_samples: usize,
    grid: SamplingGrid,
    seed: u64,
) -> Result<Vec<DistinguishabilityMatrix>> {
    if grid.dt.is_nan() || grid.horizon.is_nan() || grid.dt <= 0.0 || grid.dt > grid.horizon {
        return Err(Error::InvalidParameter {
            name: "dt/horizon",
            value: grid.dt,
            reason: "need 0 < dt <= horizon",
        });
    }
    let n_points = grid.n_points();
    let times: Vec<f64> = (0..n_points).map(|k| k as f64 * grid.dt).collect();
    // trapezoid weight times the envelope |f|^2 = gamma exp(-gamma t)
    let weights: Vec<f64> = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let edge = if k == 0 || k + 1 == n_points {
                0.5
            } else {
                1.0
            };
            edge * grid.dt * p.gamma * (-p.gamma * t).exp()
        })
        .collect();
    let step = Normal::new(0.0, (2.0 * p.gamma_d * grid.dt).sqrt()).map_err(|_| {
        Error::InvalidParameter {
            name: "gamma_d",
            value: p.gamma_d,
            reason: "invalid phase diffusion step",
        }
    })?;

    (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let phasors: Vec<Vec<Complex64>> = (0..n_photons)
                .map(|i| {
                    let delta = p.delta(i);
                    let mut phi = 0.0;
                    times
                        .iter()
                        .enumerate()
                        .map(|(n, &t)| {
                            if n > 0 {
                                phi += step.sample(&mut rng);
                            }
                            Complex64::from_polar(1.0, -(delta * t + phi))
                        })
                        .collect()
                })
                .collect();
            gram_from_phasors(&phasors, &weights)
        })
        .collect()
}

fn gram_from_phasors(
    phasors: &[Vec<Complex64>],
    weights: &[f64],
) -> Result<DistinguishabilityMatrix> {
    let n = phasors.len();
    let norm: f64 = weights.iter().sum();
    let mut s = CMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let overlap: Complex64 = phasors[i]
                .iter()
                .zip(&phasors[j])
                .zip(weights)
                .map(|((a, b), &w)| a.conj() * b * w)
                .sum::<Complex64>()
                / norm;
            s[(i, j)] = overlap;
            s[(j, i)] = overlap.conj();
        }
    }
    DistinguishabilityMatrix::new(s)
}
