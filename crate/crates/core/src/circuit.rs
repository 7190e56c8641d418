//! Transfer matrices of passive linear-optical networks.
//!
//! Entries are indexed `[(output_mode, input_mode)]`: a photon entering mode
//! `i` leaves in superposition `sum_o U[o, i] |o>`. Networks are chained in
//! propagation order with [`TransferMatrix::then`].
//!
//! Loss is modelled by unitary dilation: every lossy mode is coupled to a
//! fresh vacuum ancilla appended after the existing modes. Ancillas are
//! listed in [`TransferMatrix::loss_modes`] and never carry detectors.
//!
//! The two-copy purifier uses six modes:
//!
//! | mode | role                                              |
//! |------|---------------------------------------------------|
//! | 0, 1 | copy A inputs; 0 must stay dark, 1 is the herald  |
//! | 2, 3 | purified outputs of copies A and B, final coupler |
//! | 4, 5 | copy B inputs; 4 is the herald, 5 must stay dark  |

use num_complex::Complex64;

use crate::error::{check_unit_interval, Error, Result};
use crate::CMatrix;

const UNITARY_TOL: f64 = 1e-10;

/// Number of modes of the two-copy purifier.
pub const PURIFIER_MODES: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    entries: CMatrix,
    loss_modes: Vec<usize>,
}

impl TransferMatrix {
    /// Wraps a square matrix without ancilla modes.
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Dimension(format!(
                "transfer matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(TransferMatrix {
            entries,
            loss_modes: Vec::new(),
        })
    }

    pub fn identity(n_modes: usize) -> Self {
        TransferMatrix {
            entries: CMatrix::identity(n_modes, n_modes),
            loss_modes: Vec::new(),
        }
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn n_modes(&self) -> usize {
        self.entries.nrows()
    }

    /// Modes that are not loss ancillas.
    pub fn n_physical_modes(&self) -> usize {
        self.n_modes() - self.loss_modes.len()
    }

    pub fn loss_modes(&self) -> &[usize] {
        &self.loss_modes
    }

    /// `U U^dagger = 1` within `1e-10`.
    pub fn is_unitary(&self) -> bool {
        let n = self.n_modes();
        let prod = &self.entries * self.entries.adjoint();
        (prod - CMatrix::identity(n, n))
            .iter()
            .all(|z| z.norm() <= UNITARY_TOL)
    }

    /// The network `self` followed by `next`. The smaller of the two is
    /// padded with identity on the extra (ancilla) modes.
    pub fn then(&self, next: &TransferMatrix) -> TransferMatrix {
        let n = self.n_modes().max(next.n_modes());
        let first = self.padded(n);
        let second = next.padded(n);
        let mut loss_modes = self.loss_modes.clone();
        for &m in &next.loss_modes {
            if !loss_modes.contains(&m) {
                loss_modes.push(m);
            }
        }
        loss_modes.sort_unstable();
        TransferMatrix {
            entries: second * first,
            loss_modes,
        }
    }

    fn padded(&self, n: usize) -> CMatrix {
        let mut m = CMatrix::identity(n, n);
        let k = self.n_modes();
        m.view_mut((0, 0), (k, k)).copy_from(&self.entries);
        m
    }
}

/// Two-mode coupler of reflectivity `r` on modes `(i, j)`: identity except
/// the block `[[sqrt(1-r), i sqrt(r)], [i sqrt(r), sqrt(1-r)]]`.
pub fn beamsplitter(r: f64, modes: (usize, usize), total_modes: usize) -> Result<TransferMatrix> {
    check_unit_interval("reflectivity", r)?;
    let (i, j) = modes;
    if i == j || i >= total_modes || j >= total_modes {
        return Err(Error::Dimension(format!(
            "beamsplitter modes ({i}, {j}) invalid for {total_modes} modes"
        )));
    }
    let t = Complex64::new((1.0 - r).sqrt(), 0.0);
    let x = Complex64::new(0.0, r.sqrt());
    let mut m = CMatrix::identity(total_modes, total_modes);
    m[(i, i)] = t;
    m[(j, j)] = t;
    m[(i, j)] = x;
    m[(j, i)] = x;
    Ok(TransferMatrix {
        entries: m,
        loss_modes: Vec::new(),
    })
}

/// The three layers of the two-copy purifier, in propagation order:
/// the input couplers `(0,1)` and `(4,5)`, the splitting couplers `(1,2)`
/// and `(3,4)`, and the final coupler `(2,3)` where the purified photons meet.
#[derive(Clone, Debug)]
pub struct PurifierLayers {
    pub input: TransferMatrix,
    pub split: TransferMatrix,
    pub last: TransferMatrix,
}

impl PurifierLayers {
    pub fn new(r1: f64, r2: f64, r_final: f64) -> Result<Self> {
        let n = PURIFIER_MODES;
        Ok(PurifierLayers {
            input: beamsplitter(r1, (0, 1), n)?.then(&beamsplitter(r1, (4, 5), n)?),
            split: beamsplitter(r2, (1, 2), n)?.then(&beamsplitter(r2, (3, 4), n)?),
            last: beamsplitter(r_final, (2, 3), n)?,
        })
    }

    pub fn compose(&self) -> TransferMatrix {
        self.input.then(&self.split).then(&self.last)
    }
}

/// Two purifier copies whose outputs meet on a final coupler of reflectivity
/// `r_final`.
pub fn purifier_pair_circuit(r1: f64, r2: f64, r_final: f64) -> Result<TransferMatrix> {
    Ok(PurifierLayers::new(r1, r2, r_final)?.compose())
}

/// The purifier pair with the final coupler removed; modes 0-2 never couple
/// to modes 3-5.
pub fn reference_circuit(r1: f64, r2: f64) -> Result<TransferMatrix> {
    let layers = PurifierLayers::new(r1, r2, 0.0)?;
    Ok(layers.input.then(&layers.split))
}

/// Appends a loss stage after `t`: physical mode `i` keeps amplitude
/// `sqrt(transmissions[i])` and leaks the rest into a new ancilla. Modes with
/// unit transmission get no ancilla.
pub fn with_loss(t: &TransferMatrix, transmissions: &[f64]) -> Result<TransferMatrix> {
    let physical: Vec<usize> = (0..t.n_modes())
        .filter(|m| !t.loss_modes.contains(m))
        .collect();
    if transmissions.len() != physical.len() {
        return Err(Error::Dimension(format!(
            "{} transmissions for {} physical modes",
            transmissions.len(),
            physical.len()
        )));
    }
    for &eta in transmissions {
        check_unit_interval("transmission", eta)?;
    }
    let lossy: Vec<(usize, f64)> = physical
        .iter()
        .zip(transmissions)
        .filter(|(_, &eta)| eta < 1.0)
        .map(|(&m, &eta)| (m, eta))
        .collect();
    if lossy.is_empty() {
        return Ok(t.clone());
    }
    let base = t.n_modes();
    let n = base + lossy.len();
    let mut stage = TransferMatrix::identity(n);
    for (k, &(mode, eta)) in lossy.iter().enumerate() {
        stage = stage.then(&beamsplitter(1.0 - eta, (mode, base + k), n)?);
    }
    let mut out = t.then(&stage);
    out.loss_modes.extend(base..n);
    out.loss_modes.sort_unstable();
    Ok(out)
}

/// A pure loss stage on `transmissions.len()` modes.
pub fn loss_layer(transmissions: &[f64]) -> Result<TransferMatrix> {
    with_loss(
        &TransferMatrix::identity(transmissions.len()),
        transmissions,
    )
}
