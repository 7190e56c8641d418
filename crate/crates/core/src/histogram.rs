//! Correlation-peak count models for the raw and purified HOM setups, and
//! their inversion to system efficiency and visibility.
//!
//! A measurement yields the area of the central peak and the mean area of
//! the side peaks of the start-stop histogram. Side peaks come from one
//! click in each output detector in consecutive time bins, so they scale as
//! the square of the single-detector click probability `P_1D`.
//!
//! Raw setup (two photons, demultiplexer split `d`, second coupler
//! reflectivity `s`, balanced final coupler, `q = d s`):
//!
//! ```text
//! P_c  = t^2 q^2 (1 - V) / 2
//! P_1D = 2 t (1 - t) q / 2 + t^2 (q^2 (3 - V) / 4 + 2 q (1 - q) / 2)
//! ```
//!
//! Purified setup: see [`PureSubProbabilities`].

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit_interval, Error, Result};

const GRID_POINTS: usize = 11;
const LM_STARTS: usize = 4;
const LM_MAX_ITER: usize = 200;
const FD_STEP: f64 = 1e-7;
const MIN_RESAMPLES: usize = 100;
const MAX_FAILED_FRACTION: f64 = 0.01;

/// Central and mean side-peak areas of one measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakCounts {
    pub central: f64,
    pub side: f64,
    /// Pulse pairs per second.
    pub repetition_rate: f64,
    /// Seconds.
    pub integration_time: f64,
}

impl PeakCounts {
    pub fn new(
        central: f64,
        side: f64,
        repetition_rate: f64,
        integration_time: f64,
    ) -> Result<Self> {
        let pc = PeakCounts {
            central,
            side,
            repetition_rate,
            integration_time,
        };
        pc.validate()?;
        Ok(pc)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("central counts", self.central), ("side counts", self.side)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "counts must be non-negative",
                });
            }
        }
        for (name, v) in [
            ("repetition rate", self.repetition_rate),
            ("integration time", self.integration_time),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be positive",
                });
            }
        }
        Ok(())
    }

    /// Number of time bins in the measurement.
    pub fn trials(&self) -> f64 {
        self.repetition_rate * self.integration_time
    }

    fn with_counts(&self, central: f64, side: f64) -> Self {
        PeakCounts {
            central,
            side,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Raw,
    Pure,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetupGeometry {
    /// Probability of the demultiplexer (raw) or first coupler (purified)
    /// routing a photon towards the final coupler.
    pub demux_split: f64,
    /// Reflectivity of the second couplers.
    pub split_bs_reflectivity: f64,
}

impl Default for SetupGeometry {
    fn default() -> Self {
        SetupGeometry {
            demux_split: 0.5,
            split_bs_reflectivity: 0.55,
        }
    }
}

impl SetupGeometry {
    pub fn validate(&self) -> Result<()> {
        check_unit_interval("demux split", self.demux_split)?;
        check_unit_interval("split coupler reflectivity", self.split_bs_reflectivity)
    }
}

/// Central-peak probability of the raw setup.
pub fn raw_central_probability(t: f64, v_raw: f64, g: &SetupGeometry) -> Result<f64> {
    check_unit_interval("t", t)?;
    check_unit_interval("V_raw", v_raw)?;
    let q = g.demux_split * g.split_bs_reflectivity;
    Ok(t * t * q * q * 0.5 * (1.0 - v_raw))
}

/// Probability that a given output detector of the raw setup clicks.
pub fn raw_one_detector_probability(t: f64, v_raw: f64, g: &SetupGeometry) -> Result<f64> {
    check_unit_interval("t", t)?;
    check_unit_interval("V_raw", v_raw)?;
    let q = g.demux_split * g.split_bs_reflectivity;
    Ok(2.0 * t * (1.0 - t) * q * 0.5
        + t * t * (q * q * 0.25 * (3.0 - v_raw) + 2.0 * q * (1.0 - q) * 0.5))
}

/// Expected (central, side) counts of the raw setup.
pub fn raw_count_model(
    t: f64,
    v_raw: f64,
    g: &SetupGeometry,
    pc: &PeakCounts,
) -> Result<(f64, f64)> {
    g.validate()?;
    let n = pc.trials();
    let p1 = raw_one_detector_probability(t, v_raw, g)?;
    Ok((n * raw_central_probability(t, v_raw, g)?, n * p1 * p1))
}

/// Building blocks of the purified-setup count model.
///
/// For one copy, `h` and `t` count photons reaching the herald and the final
/// coupler (`h1t1`: one each, and so on); `b0..b2` give the number reaching
/// the final coupler from the other copy. The `*_input` terms are the
/// probabilities that a given output detector clicks for each photon
/// configuration at the final coupler.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureSubProbabilities {
    pub bunch: f64,
    pub split: f64,
    pub h1t1: f64,
    pub h1t0: f64,
    pub h2t0: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub single_input: f64,
    pub split_input: f64,
    pub bunched_input: f64,
    pub three_photon_input: f64,
    pub two_purified: f64,
}

impl PureSubProbabilities {
    pub fn new(t: f64, v_raw: f64, v_pure: f64, g: &SetupGeometry) -> Result<Self> {
        check_unit_interval("t", t)?;
        check_unit_interval("V_raw", v_raw)?;
        check_unit_interval("V_pure", v_pure)?;
        g.validate()?;
        let d = g.demux_split;
        let s = g.split_bs_reflectivity;
        let bunch = 0.25 * (1.0 + v_raw);
        let split = 2.0 * s * (1.0 - s);
        let h1t1 = t * t * bunch * split;
        let h1t0 = t * (2.0 * (1.0 - t) * d * (1.0 - s) + t * (1.0 - 2.0 * bunch) * (1.0 - s));
        let h2t0 = t * t * bunch * (1.0 - s) * (1.0 - s);
        let b1 = t * (2.0 * (1.0 - t) * d * s + t * (bunch * split + (1.0 - 2.0 * bunch) * s));
        let b2 = t * t * bunch * s * s;
        Ok(PureSubProbabilities {
            bunch,
            split,
            h1t1,
            h1t0,
            h2t0,
            b0: 1.0 - b1 - b2,
            b1,
            b2,
            single_input: 0.5,
            split_input: 0.25 * (3.0 - (v_raw + v_pure) / 2.0),
            bunched_input: 0.75,
            three_photon_input: 1.0 - 0.125 * (1.0 + 2.0 * v_pure),
            two_purified: t.powi(4) * bunch * bunch * split * split,
        })
    }

    /// Probability that a given output detector clicks together with its
    /// herald.
    pub fn one_detector(&self, v_pure: f64) -> f64 {
        (self.h1t0 + self.h2t0) * (self.b1 * self.single_input + self.b2 * self.bunched_input)
            + self.h1t1
                * (self.b0 * self.single_input
                    + self.b1 * self.split_input
                    + self.b2 * self.three_photon_input)
            - self.two_purified * self.split_input
            + self.two_purified * 0.25 * (3.0 - v_pure)
    }

    /// Central-peak probability, all four photons at the right detectors.
    pub fn central(&self, v_pure: f64) -> f64 {
        self.two_purified * 0.5 * (1.0 - v_pure)
    }
}

/// Expected (central, side) counts of the purified setup.
pub fn pure_count_model(
    t: f64,
    v_raw: f64,
    v_pure: f64,
    g: &SetupGeometry,
    pc: &PeakCounts,
) -> Result<(f64, f64)> {
    let sub = PureSubProbabilities::new(t, v_raw, v_pure, g)?;
    let n = pc.trials();
    let p1 = sub.one_detector(v_pure);
    Ok((n * sub.central(v_pure), n * p1 * p1))
}

/// Fitted efficiency and visibility.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub t: f64,
    pub v: f64,
    /// Sum of squared count residuals at the optimum.
    pub residual: f64,
    pub sigma_t: Option<f64>,
    pub sigma_v: Option<f64>,
}

impl FitResult {
    /// `key = value` lines.
    pub fn to_key_value(&self) -> String {
        let mut s = format!(
            "t = {:.10}\nV = {:.10}\nresidual = {:.6e}\n",
            self.t, self.v, self.residual
        );
        if let (Some(st), Some(sv)) = (self.sigma_t, self.sigma_v) {
            s.push_str(&format!("sigma_t = {st:.6e}\nsigma_V = {sv:.6e}\n"));
        }
        s
    }
}

/// Which model a fit inverts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitTarget {
    Raw,
    /// Purified setup with a known raw visibility.
    Pure {
        v_raw: f64,
    },
}

impl FitTarget {
    pub fn from_mode(mode: Mode, v_raw: Option<f64>) -> Result<Self> {
        match (mode, v_raw) {
            (Mode::Raw, _) => Ok(FitTarget::Raw),
            (Mode::Pure, Some(v)) => {
                check_unit_interval("V_raw", v)?;
                Ok(FitTarget::Pure { v_raw: v })
            }
            (Mode::Pure, None) => Err(Error::Unsupported(
                "a purified-mode fit needs the raw visibility".into(),
            )),
        }
    }

    fn model(&self, t: f64, v: f64, g: &SetupGeometry, pc: &PeakCounts) -> Result<(f64, f64)> {
        match *self {
            FitTarget::Raw => raw_count_model(t, v, g, pc),
            FitTarget::Pure { v_raw } => pure_count_model(t, v_raw, v, g, pc),
        }
    }
}

/// Least-squares inversion of the count model for `(t, V)`.
///
/// Every point of an 11 x 11 grid over `[0, 1]^2` is scored, and projected
/// Levenberg-Marquardt runs from the best few.
pub fn fit(counts: &PeakCounts, g: &SetupGeometry, target: FitTarget) -> Result<FitResult> {
    counts.validate()?;
    g.validate()?;
    if counts.central == 0.0 && counts.side == 0.0 {
        return Err(Error::FitFailed {
            reason: "no counts to fit".into(),
            best_t: f64::NAN,
            best_v: f64::NAN,
            residual: f64::NAN,
        });
    }
    let obs = [counts.central, counts.side];
    let residuals = |x: [f64; 2]| -> Result<Vec<f64>> {
        let (c, s) = target.model(x[0], x[1], g, counts)?;
        Ok(vec![c - obs[0], s - obs[1]])
    };
    let scale = obs[0].max(obs[1]).max(1.0);
    let (x, cost) = minimize(&residuals, 2, scale)?;
    Ok(FitResult {
        t: x[0],
        v: x[1],
        residual: cost,
        sigma_t: None,
        sigma_v: None,
    })
}

/// Joint fit of a raw and a purified measurement sharing `V_raw`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointFit {
    pub t_raw: f64,
    pub v_raw: f64,
    pub t_pure: f64,
    pub v_pure: f64,
    pub residual: f64,
}

/// Fits `(t_raw, V_raw, t_pure, V_pure)` to both measurements at once,
/// starting from the two-stage estimates.
pub fn fit_joint(raw: &PeakCounts, pure: &PeakCounts, g: &SetupGeometry) -> Result<JointFit> {
    let first = fit(raw, g, FitTarget::Raw)?;
    let second = fit(pure, g, FitTarget::Pure { v_raw: first.v })?;
    let obs = [raw.central, raw.side, pure.central, pure.side];
    let residuals = |x: &[f64]| -> Result<Vec<f64>> {
        let (rc, rs) = raw_count_model(x[0], x[1], g, raw)?;
        let (pc, ps) = pure_count_model(x[2], x[1], x[3], g, pure)?;
        Ok(vec![rc - obs[0], rs - obs[1], pc - obs[2], ps - obs[3]])
    };
    let scale = obs.iter().cloned().fold(1.0, f64::max);
    let start = vec![first.t, first.v, second.t, second.v];
    let (x, cost) = levenberg_marquardt(&residuals, start, scale)?;
    Ok(JointFit {
        t_raw: x[0],
        v_raw: x[1],
        t_pure: x[2],
        v_pure: x[3],
        residual: cost,
    })
}

/// Standard deviations of the fitted `(t, V)` over Poisson resamples of the
/// observed counts. Resample `k` draws from its own generator seeded from
/// `(seed, k)`.
pub fn mc_uncertainty(
    counts: &PeakCounts,
    g: &SetupGeometry,
    target: FitTarget,
    n_resamples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_resamples < MIN_RESAMPLES {
        return Err(Error::InvalidParameter {
            name: "n_resamples",
            value: n_resamples as f64,
            reason: "need at least 100 resamples",
        });
    }
    let draw = |mean: f64, rng: &mut ChaCha8Rng| -> f64 {
        if mean > 0.0 {
            Poisson::new(mean).map(|p| p.sample(rng)).unwrap_or(mean)
        } else {
            0.0
        }
    };
    let fits: Vec<Option<(f64, f64)>> = (0..n_resamples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let central = draw(counts.central, &mut rng);
            let side = draw(counts.side, &mut rng);
            fit(&counts.with_counts(central, side), g, target)
                .ok()
                .map(|f| (f.t, f.v))
        })
        .collect();
    let ok: Vec<(f64, f64)> = fits.iter().flatten().copied().collect();
    let failed = n_resamples - ok.len();
    if failed as f64 > MAX_FAILED_FRACTION * n_resamples as f64 {
        return Err(Error::FitFailed {
            reason: format!("{failed} of {n_resamples} resamples failed to fit"),
            best_t: f64::NAN,
            best_v: f64::NAN,
            residual: f64::NAN,
        });
    }
    let sd = |vals: Vec<f64>| {
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok((
        sd(ok.iter().map(|p| p.0).collect()),
        sd(ok.iter().map(|p| p.1).collect()),
    ))
}

/// [`fit`] followed by [`mc_uncertainty`].
pub fn fit_with_uncertainty(
    counts: &PeakCounts,
    g: &SetupGeometry,
    target: FitTarget,
    n_resamples: usize,
    seed: u64,
) -> Result<FitResult> {
    let mut result = fit(counts, g, target)?;
    let (st, sv) = mc_uncertainty(counts, g, target, n_resamples, seed)?;
    result.sigma_t = Some(st);
    result.sigma_v = Some(sv);
    Ok(result)
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn minimize(
    residuals: &impl Fn([f64; 2]) -> Result<Vec<f64>>,
    dim: usize,
    scale: f64,
) -> Result<([f64; 2], f64)> {
    debug_assert_eq!(dim, 2);
    let mut starts: Vec<(f64, [f64; 2])> = Vec::with_capacity(GRID_POINTS * GRID_POINTS);
    for i in 0..GRID_POINTS {
        for j in 0..GRID_POINTS {
            let x = [
                i as f64 / (GRID_POINTS - 1) as f64,
                j as f64 / (GRID_POINTS - 1) as f64,
            ];
            starts.push((cost_of(&residuals(x)?), x));
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let f = |x: &[f64]| residuals([x[0], x[1]]);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for &(_, x0) in starts.iter().take(LM_STARTS) {
        let (x, cost) = levenberg_marquardt(&f, x0.to_vec(), scale)?;
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((x, cost));
        }
    }
    let (x, cost) = best.expect("at least one start");
    Ok(([x[0], x[1]], cost))
}

/// Projected Levenberg-Marquardt on the unit box with forward-difference
/// Jacobians. Stops when the step or the cost stalls.
fn levenberg_marquardt(
    residuals: &impl Fn(&[f64]) -> Result<Vec<f64>>,
    mut x: Vec<f64>,
    scale: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = x.len();
    let mut r = residuals(&x)?;
    let mut cost = cost_of(&r);
    let mut lambda = 1e-3;
    for _ in 0..LM_MAX_ITER {
        if cost <= (1e-14 * scale).powi(2) {
            break;
        }
        let m = r.len();
        let mut jac = vec![vec![0.0; n]; m];
        for k in 0..n {
            let h = if x[k] + FD_STEP <= 1.0 {
                FD_STEP
            } else {
                -FD_STEP
            };
            let mut xp = x.clone();
            xp[k] += h;
            let rp = residuals(&xp)?;
            for i in 0..m {
                jac[i][k] = (rp[i] - r[i]) / h;
            }
        }
        let mut jtj = nalgebra::DMatrix::<f64>::zeros(n, n);
        let mut jtr = nalgebra::DVector::<f64>::zeros(n);
        for i in 0..m {
            for a in 0..n {
                jtr[a] += jac[i][a] * r[i];
                for b in 0..n {
                    jtj[(a, b)] += jac[i][a] * jac[i][b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut lhs = jtj.clone();
            for a in 0..n {
                lhs[(a, a)] += lambda * jtj[(a, a)].max(1e-12);
            }
            let Some(step) = lhs.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x
                .iter()
                .zip(step.iter())
                .map(|(xi, si)| (xi + si).clamp(0.0, 1.0))
                .collect();
            let rt = residuals(&trial)?;
            let ct = cost_of(&rt);
            if ct < cost {
                let moved = x
                    .iter()
                    .zip(&trial)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                x = trial;
                r = rt;
                let rel = (cost - ct) / cost;
                cost = ct;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if moved < 1e-15 || rel < 1e-15 {
                    return Ok((x, cost));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok((x, cost))
}

/// Peak areas of a histogram: central area and mean side-peak area.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakAreas {
    pub central: f64,
    pub side: f64,
    pub n_side: usize,
}

fn parse_two_columns(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse::<f64>().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => rows.push((v[0], v[1])),
            // a non-numeric first data line is a header
            None if rows.is_empty() => continue,
            _ => {
                return Err(Error::Dimension(format!(
                    "line {}: expected two numeric columns, got `{line}`",
                    lineno + 1
                )))
            }
        }
    }
    Ok(rows)
}

fn areas_from_peaks(peaks: &std::collections::BTreeMap<i64, f64>) -> Result<PeakAreas> {
    let central = *peaks
        .get(&0)
        .ok_or_else(|| Error::Dimension("no central peak (index 0)".into()))?;
    let sides: Vec<f64> = peaks
        .iter()
        .filter(|(k, _)| **k != 0)
        .map(|(_, v)| *v)
        .collect();
    if sides.is_empty() {
        return Err(Error::Dimension("no side peaks".into()));
    }
    Ok(PeakAreas {
        central,
        side: sides.iter().sum::<f64>() / sides.len() as f64,
        n_side: sides.len(),
    })
}

/// Parses `peak_index, counts` rows; index 0 is the central peak.
pub fn parse_peak_counts(text: &str) -> Result<PeakAreas> {
    let mut peaks = std::collections::BTreeMap::new();
    for (idx, counts) in parse_two_columns(text)? {
        if idx.fract() != 0.0 {
            return Err(Error::Dimension(format!(
                "peak index {idx} is not an integer"
            )));
        }
        *peaks.entry(idx as i64).or_insert(0.0) += counts;
    }
    areas_from_peaks(&peaks)
}

/// Parses `time_bin_ns, counts` rows and integrates each peak over a window
/// of +-half the pulse period around `k * period_ns`. Bins are assigned to
/// the nearest peak; a bin exactly halfway goes to the peak further from
/// zero delay.
pub fn parse_histogram(text: &str, period_ns: f64) -> Result<PeakAreas> {
    if period_ns.is_nan() || period_ns <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "period_ns",
            value: period_ns,
            reason: "must be positive",
        });
    }
    let mut peaks = std::collections::BTreeMap::new();
    for (time, counts) in parse_two_columns(text)? {
        let k = (time / period_ns).round() as i64;
        *peaks.entry(k).or_insert(0.0) += counts;
    }
    areas_from_peaks(&peaks)
}

pub fn read_peak_counts(path: &Path) -> Result<PeakAreas> {
    parse_peak_counts(&read(path)?)
}

pub fn read_histogram(path: &Path, period_ns: f64) -> Result<PeakAreas> {
    parse_histogram(&read(path)?, period_ns)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Unsupported(format!("cannot read {}: {e}", path.display())))
}
