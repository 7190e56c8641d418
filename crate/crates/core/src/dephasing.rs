//! Pure-dephasing model of the two-photon purifier.
//!
//! The purified coincidence probability depends on the pairwise, triple and
//! quadruple wavepacket overlap moments
//! `<|a_ij|^2>`, `<a_ij a_jk a_ki>` and `<a_ij a_jk a_kl a_li>`:
//!
//! ```text
//! P = (1 + p + p^2 - 2 triple - quad) / (2 (1 + p)^2)
//! ```
//!
//! and the purified indistinguishability is `1 - 2P`. In terms of the
//! dephasing strength `x = 2 gamma_d / gamma` (raw indistinguishability
//! `1 / (1 + x)`) the closed form used for the purification curve is
//!
//! ```text
//! sqrt((x^3 + 5x^2 + 8x + 3) / ((2x + 3)(x + 1)^3))
//! ```
//!
//! For Wiener phase noise the triple and quadruple moments are
//! `2 / ((1+x)(2+x))` and `4 / ((1+x)(2+x)(3+x)) + 1 / ((1+x)^2 (3+x))`
//! ([`wiener_moments`]). Inserting those into `1 - 2P` agrees with the
//! closed form to first order in `x` but not beyond.

use crate::error::{Error, Result};
use crate::permanent::DistinguishabilityMatrix;

/// Ensemble overlap moments of i.i.d. photons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapMoments {
    pub pair: f64,
    pub triple: f64,
    pub quad: f64,
}

impl OverlapMoments {
    pub fn new(pair: f64, triple: f64, quad: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pair) {
            return Err(Error::InvalidParameter {
                name: "pair moment",
                value: pair,
                reason: "must lie in [0, 1]",
            });
        }
        for (name, v) in [("triple moment", triple), ("quad moment", quad)] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must lie in [-1, 1]",
                });
            }
        }
        Ok(OverlapMoments { pair, triple, quad })
    }

    /// Moments of photons with a fixed common overlap `c` between every
    /// pair: `c^2`, `c^3`, `c^4`.
    pub fn constant(c: f64) -> Result<Self> {
        Self::new(c * c, c * c * c, c * c * c * c)
    }

    /// Expected product of overlaps around a cycle of `len` photons.
    pub fn cycle(&self, len: usize) -> Result<f64> {
        match len {
            1 => Ok(1.0),
            2 => Ok(self.pair),
            3 => Ok(self.triple),
            4 => Ok(self.quad),
            _ => Err(Error::Unsupported(format!(
                "no overlap moment for cycles of length {len}"
            ))),
        }
    }
}

/// Coincidence probability of two purified photons on the final coupler.
pub fn pd_coincidence(m: &OverlapMoments) -> Result<f64> {
    let p = m.pair;
    let value = (1.0 + p + p * p - 2.0 * m.triple - m.quad) / (2.0 * (1.0 + p).powi(2));
    if !(-1e-12..=0.5 + 1e-12).contains(&value) {
        return Err(Error::Inconsistent(format!(
            "coincidence probability {value} outside [0, 0.5]; moments are inconsistent"
        )));
    }
    Ok(value)
}

/// Purified indistinguishability `1 - 2 P` from overlap moments.
pub fn purified_from_moments(m: &OverlapMoments) -> Result<f64> {
    Ok(1.0 - 2.0 * pd_coincidence(m)?)
}

/// Closed-form purified indistinguishability at dephasing strength `x`.
pub fn pd_purified(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "dephasing strength must be non-negative",
        });
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let num = ((x + 5.0) * x + 8.0) * x + 3.0;
    let den = (2.0 * x + 3.0) * (x + 1.0).powi(3);
    Ok((num / den).sqrt())
}

/// Raw pairwise indistinguishability `1 / (1 + x)`.
pub fn raw_indistinguishability(x: f64) -> f64 {
    1.0 / (1.0 + x)
}

/// Dephasing strength giving raw indistinguishability `v`.
pub fn strength_for_raw(v: f64) -> Result<f64> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "raw indistinguishability",
            value: v,
            reason: "must lie in (0, 1]",
        });
    }
    Ok(1.0 / v - 1.0)
}

/// Exact overlap moments for Wiener phase diffusion at strength `x`.
pub fn wiener_moments(x: f64) -> Result<OverlapMoments> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "dephasing strength must be non-negative",
        });
    }
    let pair = 1.0 / (1.0 + x);
    let triple = 2.0 / ((1.0 + x) * (2.0 + x));
    let quad = 4.0 / ((1.0 + x) * (2.0 + x) * (3.0 + x)) + 1.0 / ((1.0 + x).powi(2) * (3.0 + x));
    OverlapMoments::new(pair, triple, quad)
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

/// Monte Carlo estimates of the overlap moments, including the imaginary
/// parts of the loop products (zero in expectation).
#[derive(Clone, Debug)]
pub struct MomentEstimates {
    pub n_samples: usize,
    pub pair: Estimate,
    pub triple: Estimate,
    pub quad: Estimate,
    pub triple_imag: Estimate,
    pub quad_imag: Estimate,
    /// Covariance of the sample means of (pair, triple, quad).
    pub covariance: [[f64; 3]; 3],
}

impl MomentEstimates {
    pub fn moments(&self) -> Result<OverlapMoments> {
        OverlapMoments::new(self.pair.mean, self.triple.mean, self.quad.mean)
    }

    /// `1 - 2P` at the estimated moments, with a delta-method standard error.
    pub fn purified(&self) -> Result<Estimate> {
        let m = self.moments()?;
        let mean = purified_from_moments(&m)?;
        let (p, t, q) = (m.pair, m.triple, m.quad);
        // 1 - 2P = 1 - N / D, N = 1 + p + p^2 - 2t - q, D = (1 + p)^2
        let n = 1.0 + p + p * p - 2.0 * t - q;
        let d = (1.0 + p).powi(2);
        let grad = [
            -((1.0 + 2.0 * p) * d - n * 2.0 * (1.0 + p)) / (d * d),
            2.0 / d,
            1.0 / d,
        ];
        let mut var = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                var += grad[i] * grad[j] * self.covariance[i][j];
            }
        }
        Ok(Estimate {
            mean,
            se: var.max(0.0).sqrt(),
        })
    }
}

/// Estimates the overlap moments from sampled Gram matrices.
///
/// Within each sample the loop products are averaged over every ordered
/// tuple of distinct photons; the standard errors come from the spread of
/// these per-sample averages. Needs at least four photons and two samples.
pub fn estimate_moments(samples: &[DistinguishabilityMatrix]) -> Result<MomentEstimates> {
    let n_samples = samples.len();
    if n_samples < 2 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: n_samples as f64,
            reason: "need at least two samples",
        });
    }
    let n = samples[0].dim();
    if n < 4 || samples.iter().any(|s| s.dim() != n) {
        return Err(Error::Dimension(
            "moment estimation needs samples of at least four photons of equal size".into(),
        ));
    }
    // per-sample values: pair, triple re, quad re, triple im, quad im
    let rows: Vec<[f64; 5]> = samples.iter().map(|s| sample_loops(s, n)).collect();
    let mean = |k: usize| rows.iter().map(|r| r[k]).sum::<f64>() / n_samples as f64;
    let means: Vec<f64> = (0..5).map(mean).collect();
    let cov = |a: usize, b: usize| {
        rows.iter()
            .map(|r| (r[a] - means[a]) * (r[b] - means[b]))
            .sum::<f64>()
            / ((n_samples - 1) as f64 * n_samples as f64)
    };
    let est = |k: usize| Estimate {
        mean: means[k],
        se: cov(k, k).sqrt(),
    };
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cov(i, j);
        }
    }
    Ok(MomentEstimates {
        n_samples,
        pair: est(0),
        triple: est(1),
        quad: est(2),
        triple_imag: est(3),
        quad_imag: est(4),
        covariance,
    })
}

fn sample_loops(s: &DistinguishabilityMatrix, n: usize) -> [f64; 5] {
    let a = s.matrix();
    let (mut pair, mut n_pair) = (0.0, 0usize);
    let (mut tri_re, mut tri_im, mut n_tri) = (0.0, 0.0, 0usize);
    let (mut quad_re, mut quad_im, mut n_quad) = (0.0, 0.0, 0usize);
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            pair += a[(i, j)].norm_sqr();
            n_pair += 1;
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let t = a[(i, j)] * a[(j, k)] * a[(k, i)];
                tri_re += t.re;
                tri_im += t.im;
                n_tri += 1;
                for l in 0..n {
                    if l == i || l == j || l == k {
                        continue;
                    }
                    let q = a[(i, j)] * a[(j, k)] * a[(k, l)] * a[(l, i)];
                    quad_re += q.re;
                    quad_im += q.im;
                    n_quad += 1;
                }
            }
        }
    }
    [
        pair / n_pair as f64,
        tri_re / n_tri as f64,
        quad_re / n_quad as f64,
        tri_im / n_tri as f64,
        quad_im / n_quad as f64,
    ]
}
