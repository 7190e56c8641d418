//! Fock-state bookkeeping: occupation vectors, photon-to-state assignments,
//! detector click signatures and the submatrix construction used by the
//! permanent formulas.
//!
//! Modes are indexed from zero throughout the crate.

use std::fmt;

use crate::error::{Error, Result};
use crate::CMatrix;

/// Occupation numbers of a set of optical modes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState(Vec<usize>);

impl FockState {
    pub fn new(occupations: Vec<usize>) -> Self {
        FockState(occupations)
    }

    pub fn vacuum(n_modes: usize) -> Self {
        FockState(vec![0; n_modes])
    }

    /// One photon in each of the listed modes.
    pub fn single_photons(n_modes: usize, modes: &[usize]) -> Result<Self> {
        let mut occ = vec![0; n_modes];
        for &m in modes {
            if m >= n_modes {
                return Err(Error::Dimension(format!(
                    "mode {m} out of range for {n_modes} modes"
                )));
            }
            occ[m] += 1;
        }
        Ok(FockState(occ))
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    pub fn n_modes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Product of the occupation factorials, `prod_i n_i!`.
    pub fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&n| factorial(n)).product()
    }

    /// Mode of every photon, ascending, with repeated modes contiguous.
    pub fn photon_modes(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(mode, &n)| std::iter::repeat_n(mode, n))
            .collect()
    }

    /// The same state padded with vacuum modes up to `n_modes`.
    pub fn padded(&self, n_modes: usize) -> Self {
        let mut occ = self.0.clone();
        if occ.len() < n_modes {
            occ.resize(n_modes, 0);
        }
        FockState(occ)
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ">")
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Internal-state label of every photon of an input state, in the order of
/// [`FockState::photon_modes`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentList(Vec<usize>);

impl AssignmentList {
    /// Validates that every label indexes one of `n_states` internal states.
    pub fn new(labels: Vec<usize>, n_states: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_states) {
            return Err(Error::Dimension(format!(
                "label {bad} does not index one of {n_states} internal states"
            )));
        }
        Ok(AssignmentList(labels))
    }

    /// Photon `j` carries internal state `j`.
    pub fn identity(n: usize) -> Self {
        AssignmentList((0..n).collect())
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A detector reading. Each detector watches one mode and either clicked
/// (at least one photon) or stayed silent (no photon). Modes without a
/// detector are unconstrained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClickPattern {
    clicks: Vec<bool>,
    mapping: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ModeRule {
    Free,
    Silent,
    Clicked,
}

impl ClickPattern {
    pub fn new(clicks: Vec<bool>, mapping: Vec<usize>) -> Result<Self> {
        if clicks.len() != mapping.len() {
            return Err(Error::InvalidClickPattern(format!(
                "{} click flags for {} detectors",
                clicks.len(),
                mapping.len()
            )));
        }
        let mut seen = mapping.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidClickPattern(
                "two detectors watch the same mode".into(),
            ));
        }
        Ok(ClickPattern { clicks, mapping })
    }

    /// Detectors on `clicked` modes that fired and on `silent` modes that
    /// stayed dark.
    pub fn from_modes(clicked: &[usize], silent: &[usize]) -> Result<Self> {
        let clicks = clicked
            .iter()
            .map(|_| true)
            .chain(silent.iter().map(|_| false))
            .collect();
        let mapping = clicked.iter().chain(silent).copied().collect();
        Self::new(clicks, mapping)
    }

    /// Joins two readings taken on disjoint sets of detectors.
    pub fn merge(&self, other: &ClickPattern) -> Result<Self> {
        let mut clicks = self.clicks.clone();
        clicks.extend_from_slice(&other.clicks);
        let mut mapping = self.mapping.clone();
        mapping.extend_from_slice(&other.mapping);
        Self::new(clicks, mapping)
    }

    pub fn clicks(&self) -> &[bool] {
        &self.clicks
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn n_clicked(&self) -> usize {
        self.clicks.iter().filter(|&&c| c).count()
    }

    /// Whether `n_photons` are enough to fire every clicked detector.
    pub fn is_feasible(&self, n_photons: usize) -> bool {
        self.n_clicked() <= n_photons
    }

    /// Whether `state` produces exactly this reading.
    pub fn matches(&self, state: &FockState) -> bool {
        self.clicks
            .iter()
            .zip(&self.mapping)
            .all(|(&c, &m)| match state.occupations().get(m) {
                Some(&n) => (n > 0) == c,
                None => false,
            })
    }

    fn rules(&self, n_modes: usize) -> Result<Vec<ModeRule>> {
        let mut rules = vec![ModeRule::Free; n_modes];
        for (&c, &m) in self.clicks.iter().zip(&self.mapping) {
            if m >= n_modes {
                return Err(Error::InvalidClickPattern(format!(
                    "detector on mode {m} but only {n_modes} modes"
                )));
            }
            rules[m] = if c {
                ModeRule::Clicked
            } else {
                ModeRule::Silent
            };
        }
        Ok(rules)
    }
}

/// Builds the `n x n` matrix whose permanent gives the transition amplitude
/// between `input` and `output`.
///
/// Column `c` is column `photon_modes(input)[c]` of `m` and row `r` is row
/// `photon_modes(output)[r]`, so a mode holding `k` photons contributes `k`
/// contiguous copies. `m` is indexed `[(output_mode, input_mode)]`.
pub fn submatrix(m: &CMatrix, input: &FockState, output: &FockState) -> Result<CMatrix> {
    let (n_in, n_out) = (input.total(), output.total());
    if n_in != n_out {
        return Err(Error::PhotonNumberMismatch {
            input: n_in,
            output: n_out,
        });
    }
    if input.n_modes() != m.ncols() || output.n_modes() != m.nrows() {
        return Err(Error::Dimension(format!(
            "states over {} -> {} modes do not fit a {}x{} transfer matrix",
            input.n_modes(),
            output.n_modes(),
            m.nrows(),
            m.ncols()
        )));
    }
    let cols = input.photon_modes();
    let rows = output.photon_modes();
    Ok(CMatrix::from_fn(n_in, n_in, |r, c| m[(rows[r], cols[c])]))
}

/// All ways of distributing `n_photons` over `n_modes`, in descending
/// lexicographic order: `(2,0), (1,1), (0,2)`.
pub fn enumerate_outputs(n_photons: usize, n_modes: usize) -> Vec<FockState> {
    let rules = vec![ModeRule::Free; n_modes];
    let mut out = Vec::new();
    compositions(
        &rules,
        n_photons,
        &mut Vec::with_capacity(n_modes),
        &mut out,
    );
    out
}

/// Output states of `n_photons` over `n_modes` consistent with a detector
/// reading, in the same order as [`enumerate_outputs`].
///
/// An infeasible reading (more clicks than photons) yields an empty list;
/// a reading that refers to nonexistent modes is an error.
pub fn patterns_for_clicks(
    pattern: &ClickPattern,
    n_photons: usize,
    n_modes: usize,
) -> Result<Vec<FockState>> {
    let rules = pattern.rules(n_modes)?;
    let mut out = Vec::new();
    if pattern.is_feasible(n_photons) {
        compositions(
            &rules,
            n_photons,
            &mut Vec::with_capacity(n_modes),
            &mut out,
        );
    }
    Ok(out)
}

fn compositions(
    rules: &[ModeRule],
    remaining: usize,
    prefix: &mut Vec<usize>,
    out: &mut Vec<FockState>,
) {
    let mode = prefix.len();
    if mode == rules.len() {
        if remaining == 0 {
            out.push(FockState(prefix.clone()));
        }
        return;
    }
    // photons the later modes are obliged to absorb
    let reserved = rules[mode + 1..]
        .iter()
        .filter(|&&r| r == ModeRule::Clicked)
        .count();
    let can_take_rest = rules[mode + 1..].iter().any(|&r| r != ModeRule::Silent);
    let (lo, hi) = match rules[mode] {
        ModeRule::Silent => (0, 0),
        ModeRule::Clicked => (1, remaining.saturating_sub(reserved)),
        ModeRule::Free => (0, remaining.saturating_sub(reserved)),
    };
    if lo > hi || reserved > remaining {
        return;
    }
    for k in (lo..=hi).rev() {
        let rest = remaining - k;
        if rest > 0 && !can_take_rest {
            continue;
        }
        prefix.push(k);
        compositions(rules, rest, prefix, out);
        prefix.pop();
    }
}
