//! End-to-end simulation of the two-copy purifier: raw and purified HOM
//! visibilities, multiphoton contamination, coupler imperfections and loss.
//!
//! Four sources feed modes `0, 1, 4, 5` (source `k` feeds
//! [`SOURCE_MODES`]`[k]`); sources 0 and 1 form copy A, sources 2 and 3
//! copy B. The purified visibility conditions on heralds in modes 1 and 4,
//! silence in modes 0 and 5 and a coincidence across the final coupler
//! (modes 2 and 3). The raw visibility sends only sources 0 and 3 through the
//! same circuit and asks for the same coincidence.
//!
//! A visibility is `1 - P_out / P_ref`. With [`Reference::DistinguishableCopies`]
//! (the default) `P_ref` is the probability of the same event when every
//! photon of copy A is orthogonal to every photon of copy B, so the raw
//! visibility of photons with overlap `c` is `c^2` for any final coupler.
//! [`Reference::FinalCouplerRemoved`] takes `P_ref` from the circuit without
//! the final coupler instead.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    loss_layer, purifier_pair_circuit, reference_circuit, PurifierLayers, TransferMatrix,
};
use crate::circuit::{with_loss, PURIFIER_MODES};
use crate::dephasing::OverlapMoments;
use crate::distinguishability::{constant_overlap, polarization, PolarizationState};
use crate::error::{check_unit_interval, Error, Result};
use crate::fock::{patterns_for_clicks, submatrix, AssignmentList, ClickPattern, FockState};
use crate::permanent::{
    normalize_probability, output_probability, weighted_cycle_sum, DistinguishabilityMatrix,
};
use crate::CMatrix;

/// Input mode of each source.
pub const SOURCE_MODES: [usize; 4] = [0, 1, 4, 5];
/// Sources used for the raw two-photon measurement.
pub const RAW_SOURCES: [usize; 2] = [0, 3];

const G2_SERIES_BELOW: f64 = 1e-6;

fn copy_of_source(source: usize) -> usize {
    source / 2
}

/// Internal states of the four source photons.
#[derive(Clone, Debug, PartialEq)]
pub enum PhotonModel {
    /// Every pair of sources has overlap `c`.
    Constant { c: f64 },
    /// Explicit Gram matrix over the four sources.
    Gram(DistinguishabilityMatrix),
    /// Ensemble of i.i.d. photons described by cycle moments.
    Ensemble(OverlapMoments),
}

impl PhotonModel {
    /// Constant overlap giving raw visibility `v_raw`.
    pub fn from_raw_visibility(v_raw: f64) -> Result<Self> {
        check_unit_interval("raw visibility", v_raw)?;
        Ok(PhotonModel::Constant { c: v_raw.sqrt() })
    }

    /// Linearly polarized sources at the given angles (radians).
    pub fn polarized(angles: [f64; 4]) -> Result<Self> {
        let states: Vec<PolarizationState> = angles
            .iter()
            .map(|&a| PolarizationState::linear(a))
            .collect();
        Ok(PhotonModel::Gram(polarization(&states)?))
    }

    fn validate(&self) -> Result<()> {
        match self {
            PhotonModel::Constant { c } => check_unit_interval("overlap", *c),
            PhotonModel::Gram(s) if s.dim() != SOURCE_MODES.len() => {
                Err(Error::Dimension(format!(
                    "Gram matrix over {} photons, need {}",
                    s.dim(),
                    SOURCE_MODES.len()
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Internal state of the second photon of a doubled emission.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sibling {
    /// Same state as the first photon of the pulse.
    #[default]
    Identical,
    /// A fresh photon drawn from the same model as the sources.
    Independent,
}

/// Where the transmission losses act.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossStage {
    /// Before the input couplers.
    #[default]
    Input,
    /// Between the input and splitting couplers.
    AfterInput,
    /// After the final coupler, in front of the detectors.
    Output,
}

/// Normalization of the visibility.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    #[default]
    DistinguishableCopies,
    FinalCouplerRemoved,
}

/// Source and circuit imperfections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub g2: f64,
    pub r1: f64,
    pub r2: f64,
    pub r_final: f64,
    /// One transmission per purifier mode.
    pub transmissions: [f64; PURIFIER_MODES],
    pub loss_stage: LossStage,
    pub sibling: Sibling,
    pub reference: Reference,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            g2: 0.0,
            r1: 0.5,
            r2: 0.5,
            r_final: 0.5,
            transmissions: [1.0; PURIFIER_MODES],
            loss_stage: LossStage::Input,
            sibling: Sibling::Identical,
            reference: Reference::DistinguishableCopies,
        }
    }
}

impl NoiseConfig {
    pub fn with_g2(g2: f64) -> Self {
        NoiseConfig {
            g2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.g2) {
            return Err(Error::InvalidParameter {
                name: "g2",
                value: self.g2,
                reason: "must lie in [0, 0.5)",
            });
        }
        check_unit_interval("r1", self.r1)?;
        check_unit_interval("r2", self.r2)?;
        check_unit_interval("r_final", self.r_final)?;
        for &t in &self.transmissions {
            check_unit_interval("transmission", t)?;
        }
        Ok(())
    }

    fn circuits(&self) -> Result<(TransferMatrix, TransferMatrix)> {
        let layers = PurifierLayers::new(self.r1, self.r2, self.r_final)?;
        let loss = |t: &TransferMatrix| with_loss(t, &self.transmissions);
        let (full, without_final) = match self.loss_stage {
            LossStage::Input => {
                let pre = loss_layer(&self.transmissions)?;
                let body = pre.then(&layers.input).then(&layers.split);
                (body.then(&layers.last), body)
            }
            LossStage::AfterInput => {
                let body = loss(&layers.input)?.then(&layers.split);
                (body.then(&layers.last), body)
            }
            LossStage::Output => (
                loss(&layers.compose())?,
                loss(&layers.input.then(&layers.split))?,
            ),
        };
        Ok((full, without_final))
    }
}

/// Raw and purified visibilities of one scenario.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Visibilities {
    pub raw: f64,
    pub pure: f64,
}

impl Visibilities {
    /// Absolute gain `pure - raw`.
    pub fn improvement(&self) -> f64 {
        self.pure - self.raw
    }
}

/// A photon model together with its imperfections.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub model: PhotonModel,
    pub noise: NoiseConfig,
}

impl Scenario {
    pub fn new(model: PhotonModel, noise: NoiseConfig) -> Result<Self> {
        model.validate()?;
        noise.validate()?;
        Ok(Scenario { model, noise })
    }

    pub fn ideal(model: PhotonModel) -> Result<Self> {
        Self::new(model, NoiseConfig::default())
    }

    pub fn visibilities(&self) -> Result<Visibilities> {
        let (full, without_final) = self.noise.circuits()?;
        let reference = match self.noise.reference {
            Reference::DistinguishableCopies => None,
            Reference::FinalCouplerRemoved => Some(&without_final),
        };
        let raw = self.visibility(&full, reference, &RAW_SOURCES, &raw_pattern()?)?;
        let pure = self.visibility(&full, reference, &[0, 1, 2, 3], &purifier_pattern()?)?;
        Ok(Visibilities { raw, pure })
    }

    fn visibility(
        &self,
        circuit: &TransferMatrix,
        reference_circuit: Option<&TransferMatrix>,
        sources: &[usize],
        pattern: &ClickPattern,
    ) -> Result<f64> {
        let p_out = self.total_probability(circuit, sources, pattern, false)?;
        let p_ref = match reference_circuit {
            Some(r) => self.total_probability(r, sources, pattern, false)?,
            None => self.total_probability(circuit, sources, pattern, true)?,
        };
        visibility_from(p_out, p_ref)
    }

    /// Probability of the click pattern, averaged over doubled emissions:
    /// `sum_eta (1 - P2)^(k - eta) P2^eta P_eta` for `k` active sources.
    fn total_probability(
        &self,
        circuit: &TransferMatrix,
        sources: &[usize],
        pattern: &ClickPattern,
        split_copies: bool,
    ) -> Result<f64> {
        let p2 = p2_from_g2(self.noise.g2)?;
        let k = sources.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << k) {
            let eta = mask.count_ones() as i32;
            let weight = (1.0 - p2).powi(k as i32 - eta) * p2.powi(eta);
            if weight == 0.0 {
                continue;
            }
            let photons: Vec<Photon> = sources
                .iter()
                .enumerate()
                .flat_map(|(i, &s)| {
                    let first = Photon {
                        source: s,
                        sibling: false,
                    };
                    let second = (mask >> i & 1 == 1).then_some(Photon {
                        source: s,
                        sibling: true,
                    });
                    std::iter::once(first).chain(second)
                })
                .collect();
            total += weight * self.pattern_probability(circuit, &photons, pattern, split_copies)?;
        }
        Ok(total)
    }

    fn pattern_probability(
        &self,
        circuit: &TransferMatrix,
        photons: &[Photon],
        pattern: &ClickPattern,
        split_copies: bool,
    ) -> Result<f64> {
        let n_modes = circuit.n_modes();
        let mut occupations = vec![0; n_modes];
        for p in photons {
            occupations[SOURCE_MODES[p.source]] += 1;
        }
        let input = FockState::new(occupations);
        // photons sorted by input mode, matching the submatrix column order
        let mut ordered = photons.to_vec();
        ordered.sort_by_key(|p| (SOURCE_MODES[p.source], p.sibling));
        let outputs = patterns_for_clicks(pattern, input.total(), n_modes)?;
        let u = circuit.entries();

        match &self.model {
            PhotonModel::Ensemble(moments) => {
                if ordered.iter().any(|p| p.sibling) {
                    return Err(Error::Unsupported(
                        "ensemble photon models need g2 = 0".into(),
                    ));
                }
                let copies: Vec<usize> = ordered.iter().map(|p| copy_of_source(p.source)).collect();
                let weight = |tau: &[usize]| cycle_weight(tau, moments, &copies, split_copies);
                let mut total = 0.0;
                for out in &outputs {
                    let b = submatrix(u, &input, out)?;
                    let perm_w = weighted_cycle_sum(&b, weight)?;
                    // one photon per input mode, so the input norm is 1
                    total += normalize_probability(perm_w.re, 1.0, out)?;
                }
                Ok(total)
            }
            _ => {
                let (states, labels) = self.label_states(&ordered, split_copies)?;
                let assignment = AssignmentList::new(labels, states.dim())?;
                let mut total = 0.0;
                for out in &outputs {
                    total += output_probability(u, &input, out, &states, &assignment)?;
                }
                Ok(total)
            }
        }
    }

    /// Gram matrix over internal-state labels and the label of each photon.
    fn label_states(
        &self,
        photons: &[Photon],
        split_copies: bool,
    ) -> Result<(DistinguishabilityMatrix, Vec<usize>)> {
        let independent = self.noise.sibling == Sibling::Independent;
        // label k < 4 is source k; label 4 + k is an independent sibling of source k
        let base: CMatrix = match (&self.model, independent) {
            (PhotonModel::Constant { c }, false) => constant_overlap(4, *c)?.matrix().clone(),
            (PhotonModel::Constant { c }, true) => constant_overlap(8, *c)?.matrix().clone(),
            (PhotonModel::Gram(s), false) => s.matrix().clone(),
            (PhotonModel::Gram(_), true) => {
                return Err(Error::Unsupported(
                    "independent siblings need a constant-overlap model".into(),
                ))
            }
            (PhotonModel::Ensemble(_), _) => unreachable!("handled by the caller"),
        };
        let copy_of_label = |l: usize| copy_of_source(l % 4);
        let mut s = base;
        if split_copies {
            let n = s.nrows();
            for j in 0..n {
                for k in 0..n {
                    if copy_of_label(j) != copy_of_label(k) {
                        s[(j, k)] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
        let labels = photons
            .iter()
            .map(|p| {
                if p.sibling && independent {
                    4 + p.source
                } else {
                    p.source
                }
            })
            .collect();
        Ok((DistinguishabilityMatrix::new(s)?, labels))
    }
}

#[derive(Clone, Copy, Debug)]
struct Photon {
    source: usize,
    sibling: bool,
}

fn cycle_weight(
    tau: &[usize],
    moments: &OverlapMoments,
    copies: &[usize],
    split: bool,
) -> Complex64 {
    let n = tau.len();
    let mut seen = vec![false; n];
    let mut w = 1.0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut crosses = false;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            crosses |= copies[k] != copies[start];
            k = tau[k];
            len += 1;
        }
        if split && crosses {
            return Complex64::new(0.0, 0.0);
        }
        match moments.cycle(len) {
            Ok(m) => w *= m,
            Err(_) => return Complex64::new(f64::NAN, 0.0),
        }
    }
    Complex64::new(w, 0.0)
}

fn visibility_from(p_out: f64, p_ref: f64) -> Result<f64> {
    if p_ref.is_nan() || p_ref <= 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok(1.0 - p_out / p_ref)
}

/// Heralds in modes 1 and 4, darkness in modes 0 and 5.
pub fn herald_pattern() -> Result<ClickPattern> {
    ClickPattern::from_modes(&[1, 4], &[0, 5])
}

/// Coincidence across the final coupler.
pub fn coincidence_pattern() -> Result<ClickPattern> {
    ClickPattern::from_modes(&[2, 3], &[])
}

fn raw_pattern() -> Result<ClickPattern> {
    coincidence_pattern()
}

fn purifier_pattern() -> Result<ClickPattern> {
    coincidence_pattern()?.merge(&herald_pattern()?)
}

/// Probability that `input` fires `pattern`, summed over every compatible
/// output (ancilla modes unconstrained).
pub fn click_probability(
    u: &TransferMatrix,
    input: &FockState,
    pattern: &ClickPattern,
    states: &DistinguishabilityMatrix,
    assignment: &AssignmentList,
) -> Result<f64> {
    let input = input.padded(u.n_modes());
    patterns_for_clicks(pattern, input.total(), u.n_modes())?
        .iter()
        .map(|out| output_probability(u.entries(), &input, out, states, assignment))
        .sum()
}

/// `1 - P_out / P_ref` for the heralded coincidence, with `P_out` taken on
/// `interfering` and `P_ref` on `reference`.
pub fn hom_visibility(
    interfering: &TransferMatrix,
    reference: &TransferMatrix,
    input: &FockState,
    coincidence: &ClickPattern,
    heralds: &ClickPattern,
    s: &DistinguishabilityMatrix,
) -> Result<f64> {
    let pattern = coincidence.merge(heralds)?;
    let assignment = AssignmentList::identity(input.total());
    let p_out = click_probability(interfering, input, &pattern, s, &assignment)?;
    let p_ref = click_probability(reference, input, &pattern, s, &assignment)?;
    visibility_from(p_out, p_ref)
}

/// Raw and purified visibility of photons with common overlap `c`.
pub fn purified_visibility(c: f64, config: &NoiseConfig) -> Result<Visibilities> {
    Scenario::new(PhotonModel::Constant { c }, config.clone())?.visibilities()
}

/// Raw and purified visibility for an arbitrary photon model.
pub fn purified_visibility_for(model: PhotonModel, config: &NoiseConfig) -> Result<Visibilities> {
    Scenario::new(model, config.clone())?.visibilities()
}

/// Same as [`purified_visibility`] with the given `g2`.
pub fn multiphoton_visibility(c: f64, g2: f64, config: &NoiseConfig) -> Result<Visibilities> {
    purified_visibility(
        c,
        &NoiseConfig {
            g2,
            ..config.clone()
        },
    )
}

/// Probability of a doubled emission, `(1 - g2 - sqrt(1 - 2 g2)) / g2`.
pub fn p2_from_g2(g2: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&g2) {
        return Err(Error::InvalidParameter {
            name: "g2",
            value: g2,
            reason: "must lie in [0, 0.5)",
        });
    }
    if g2 < G2_SERIES_BELOW {
        return Ok(g2 / 2.0 + g2 * g2 / 2.0 + 5.0 * g2 * g2 * g2 / 8.0);
    }
    Ok((1.0 - g2 - (1.0 - 2.0 * g2).sqrt()) / g2)
}

/// Heralded success probability of the `n`-photon purifier,
/// `(n-1)! / 2^(2 + 3 + ... + n) * n^2 / 2^n`.
pub fn success_probability(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "need at least two photons",
        });
    }
    let mut p = (n * n) as f64 * 0.5f64.powi(n as i32);
    for i in 2..=n {
        p *= (i - 1) as f64 * 0.5f64.powi(i as i32);
    }
    Ok(p)
}

/// Coupler swept by [`bs_sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupler {
    First,
    Second,
    Final,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub v_raw: f64,
    pub v_pure: f64,
}

/// Visibilities over a grid of reflectivities of one coupler, the others
/// held at 0.5.
pub fn bs_sweep(which: Coupler, grid: &[f64], c: f64) -> Result<Vec<SweepRow>> {
    grid.par_iter()
        .map(|&r| {
            let mut config = NoiseConfig::default();
            match which {
                Coupler::First => config.r1 = r,
                Coupler::Second => config.r2 = r,
                Coupler::Final => config.r_final = r,
            }
            let v = purified_visibility(c, &config)?;
            Ok(SweepRow {
                r,
                v_raw: v.raw,
                v_pure: v.pure,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationRow {
    pub theta: f64,
    pub v_raw: f64,
    pub v_pure_same: f64,
    pub v_pure_opposite: f64,
}

/// Purified visibility when the sources on modes 0 and 4 are rotated by
/// `theta` (radians) in the same or in opposite directions.
pub fn polarization_bounds(thetas: &[f64]) -> Result<Vec<PolarizationRow>> {
    thetas
        .par_iter()
        .map(|&theta| {
            let same = purified_visibility_for(
                PhotonModel::polarized([theta, 0.0, theta, 0.0])?,
                &NoiseConfig::default(),
            )?;
            let opposite = purified_visibility_for(
                PhotonModel::polarized([theta, 0.0, -theta, 0.0])?,
                &NoiseConfig::default(),
            )?;
            Ok(PolarizationRow {
                theta,
                v_raw: same.raw,
                v_pure_same: same.pure,
                v_pure_opposite: opposite.pure,
            })
        })
        .collect()
}

/// Circuits of the ideal purifier with the final coupler present and removed.
pub fn ideal_circuits() -> Result<(TransferMatrix, TransferMatrix)> {
    Ok((
        purifier_pair_circuit(0.5, 0.5, 0.5)?,
        reference_circuit(0.5, 0.5)?,
    ))
}
