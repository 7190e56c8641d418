//! Permanents and multipermanents.
//!
//! The multipermanent of an `n x n` submatrix `B` (rows: output slots,
//! columns: photons) against a Gram matrix `S` of photon internal states is
//!
//! ```text
//! Perm(W) = sum_{sigma, rho} prod_j B[j, sigma_j] conj(B[j, rho_j]) S[rho_j, sigma_j]
//! ```
//!
//! which reduces to `|Perm(B)|^2` for identical photons and to the permanent
//! of `|B|^2` for fully distinguishable ones. Three kernels evaluate it:
//!
//! * [`Kernel::Naive`] walks the double permutation sum, `O(n * n!^2)`.
//! * [`Kernel::CycleSum`] rewrites it as `sum_tau prod_k S[tau(k), k] Perm(C_tau)`
//!   with `C_tau[j, k] = B[j, k] conj(B[j, tau(k)])` and evaluates each
//!   permanent with Ryser's formula, `O(n! * 2^n * n)`. Photons that share
//!   both a column of `B` and a row of `S` (two photons emitted into the same
//!   mode in the same internal state) are grouped, and the sum runs over
//!   double cosets of the grouping, one term per contingency table.
//! * [`Kernel::Auto`] picks the naive sum up to four photons and the cycle
//!   sum beyond.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{factorial, submatrix, AssignmentList, FockState};
use crate::CMatrix;

const HERMITIAN_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;
const REAL_TOL: f64 = 1e-10;
const PROBABILITY_TOL: f64 = 1e-9;

/// Gram matrix of photon internal states, `S[j, k] = <psi_j|psi_k>`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistinguishabilityMatrix(CMatrix);

impl DistinguishabilityMatrix {
    /// Checks Hermiticity, unit diagonal, `|S[j,k]| <= 1` and positive
    /// semidefiniteness (smallest eigenvalue `>= -1e-9`).
    pub fn new(s: CMatrix) -> Result<Self> {
        let n = s.nrows();
        if s.ncols() != n {
            return Err(Error::InvalidDistinguishability(format!(
                "not square: {}x{}",
                n,
                s.ncols()
            )));
        }
        for j in 0..n {
            if (s[(j, j)] - Complex64::new(1.0, 0.0)).norm() > HERMITIAN_TOL {
                return Err(Error::InvalidDistinguishability(format!(
                    "diagonal entry {j} is {} instead of 1",
                    s[(j, j)]
                )));
            }
            for k in 0..n {
                if (s[(j, k)] - s[(k, j)].conj()).norm() > HERMITIAN_TOL {
                    return Err(Error::InvalidDistinguishability(format!(
                        "not Hermitian at ({j}, {k})"
                    )));
                }
                if s[(j, k)].norm() > 1.0 + HERMITIAN_TOL {
                    return Err(Error::InvalidDistinguishability(format!(
                        "overlap ({j}, {k}) has modulus {} > 1",
                        s[(j, k)].norm()
                    )));
                }
            }
        }
        if n > 1 {
            let min_eig = SymmetricEigen::new(s.clone())
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if min_eig < -PSD_TOL {
                return Err(Error::InvalidDistinguishability(format!(
                    "not positive semidefinite (smallest eigenvalue {min_eig:.3e})"
                )));
            }
        }
        Ok(DistinguishabilityMatrix(s))
    }

    /// Every photon in the same internal state.
    pub fn indistinguishable(n: usize) -> Self {
        DistinguishabilityMatrix(CMatrix::from_element(n, n, Complex64::new(1.0, 0.0)))
    }

    /// Every photon in its own orthogonal internal state.
    pub fn distinguishable(n: usize) -> Self {
        DistinguishabilityMatrix(CMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Per-photon Gram matrix `S[d_j, d_k]` for an assignment of photons to
    /// internal states.
    pub fn restrict(&self, assignment: &AssignmentList) -> Result<CMatrix> {
        let labels = assignment.labels();
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.dim()) {
            return Err(Error::Dimension(format!(
                "label {bad} exceeds the {} defined internal states",
                self.dim()
            )));
        }
        let n = labels.len();
        Ok(CMatrix::from_fn(n, n, |j, k| {
            self.0[(labels[j], labels[k])]
        }))
    }
}

/// Multipermanent evaluation strategy; see the module documentation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Kernel {
    #[default]
    Auto,
    Naive,
    CycleSum,
}

const AUTO_NAIVE_MAX: usize = 4;

fn check_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "permanent of a non-square {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// Matrix permanent via Ryser's inclusion-exclusion formula with Gray-code
/// subset updates, `O(2^n n)`. The empty matrix has permanent 1.
pub fn permanent(a: &CMatrix) -> Result<Complex64> {
    check_square(a)?;
    Ok(ryser(a))
}

/// Matrix permanent as the literal sum over all `n!` permutations.
pub fn permanent_naive(a: &CMatrix) -> Result<Complex64> {
    let n = check_square(a)?;
    let mut total = Complex64::new(0.0, 0.0);
    for_each_permutation(n, |p| {
        let mut prod = Complex64::new(1.0, 0.0);
        for (i, &pi) in p.iter().enumerate() {
            prod *= a[(i, pi)];
        }
        total += prod;
    });
    Ok(total)
}

pub(crate) fn ryser(a: &CMatrix) -> Complex64 {
    let n = a.nrows();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    // row sums over the current column subset
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let next = k ^ (k >> 1);
        let flipped = (gray ^ next).trailing_zeros() as usize;
        let adding = next & (1 << flipped) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if adding {
                *s += a[(i, flipped)];
            } else {
                *s -= a[(i, flipped)];
            }
        }
        gray = next;
        let prod: Complex64 = row_sums.iter().product();
        if gray.count_ones() % 2 == (n as u32) % 2 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// Calls `f` on every permutation of `0..n` (Heap's algorithm).
pub(crate) fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&p);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            f(&p);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn check_multiperm_dims(b: &CMatrix, s: &CMatrix) -> Result<usize> {
    let n = check_square(b)?;
    if s.nrows() != n || s.ncols() != n {
        return Err(Error::Dimension(format!(
            "{n}x{n} submatrix paired with a {}x{} distinguishability matrix",
            s.nrows(),
            s.ncols()
        )));
    }
    Ok(n)
}

fn into_real(value: Complex64, scale: f64) -> Result<f64> {
    if value.im.abs() > REAL_TOL * scale.max(1.0) {
        return Err(Error::Inconsistent(format!(
            "multipermanent has imaginary part {:.3e}; the distinguishability matrix is not a valid Gram matrix",
            value.im
        )));
    }
    Ok(value.re)
}

/// Multipermanent with the default kernel.
///
/// `b` is the submatrix returned by [`submatrix`] (rows: output slots,
/// columns: photons) and `s` the per-photon Gram matrix.
pub fn multipermanent(b: &CMatrix, s: &CMatrix) -> Result<f64> {
    multipermanent_with(b, s, Kernel::Auto)
}

pub fn multipermanent_with(b: &CMatrix, s: &CMatrix, kernel: Kernel) -> Result<f64> {
    let n = check_multiperm_dims(b, s)?;
    let kernel = match kernel {
        Kernel::Auto if n <= AUTO_NAIVE_MAX => Kernel::Naive,
        Kernel::Auto => Kernel::CycleSum,
        k => k,
    };
    let (value, scale) = match kernel {
        Kernel::Naive => naive_multipermanent(b, s),
        _ => grouped_cycle_sum(b, s),
    };
    into_real(value, scale)
}

fn naive_multipermanent(b: &CMatrix, s: &CMatrix) -> (Complex64, f64) {
    let n = b.nrows();
    let mut perms = Vec::new();
    for_each_permutation(n, |p| perms.push(p.to_vec()));
    let mut total = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for sigma in &perms {
        for rho in &perms {
            let mut prod = Complex64::new(1.0, 0.0);
            for j in 0..n {
                prod *= b[(j, sigma[j])] * b[(j, rho[j])].conj() * s[(rho[j], sigma[j])];
            }
            scale += prod.norm();
            total += prod;
        }
    }
    (total, scale)
}

/// `sum_tau weight(tau) * Perm(C_tau)` with `C_tau[j, k] = B[j, k] conj(B[j, tau(k)])`.
///
/// With `weight(tau) = prod_k S[tau(k), k]` this is the multipermanent; other
/// weights give ensemble averages over random Gram matrices whose moments
/// depend only on the cycle structure of `tau`.
pub fn weighted_cycle_sum(
    b: &CMatrix,
    weight: impl Fn(&[usize]) -> Complex64,
) -> Result<Complex64> {
    let n = check_square(b)?;
    let mut c = CMatrix::zeros(n, n);
    let mut total = Complex64::new(0.0, 0.0);
    for_each_permutation(n, |tau| {
        let w = weight(tau);
        if w == Complex64::new(0.0, 0.0) {
            return;
        }
        fill_cycle_matrix(b, tau, &mut c);
        total += w * ryser(&c);
    });
    Ok(total)
}

fn fill_cycle_matrix(b: &CMatrix, tau: &[usize], c: &mut CMatrix) {
    let n = b.nrows();
    for k in 0..n {
        for j in 0..n {
            c[(j, k)] = b[(j, k)] * b[(j, tau[k])].conj();
        }
    }
}

/// Partition photons into groups sharing a column of `b` and a row of `s`.
fn photon_groups(b: &CMatrix, s: &CMatrix) -> Vec<Vec<usize>> {
    let n = b.nrows();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    'photon: for k in 0..n {
        for g in groups.iter_mut() {
            let r = g[0];
            if b.column(k) == b.column(r) && s.row(k) == s.row(r) && s.column(k) == s.column(r) {
                g.push(k);
                continue 'photon;
            }
        }
        groups.push(vec![k]);
    }
    groups
}

fn grouped_cycle_sum(b: &CMatrix, s: &CMatrix) -> (Complex64, f64) {
    let n = b.nrows();
    let groups = photon_groups(b, s);
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let group_fact: f64 = sizes.iter().map(|&k| factorial(k)).product();
    let r = groups.len();

    let mut c = CMatrix::zeros(n, n);
    let mut tau = vec![0usize; n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    let mut table = vec![0usize; r * r];
    let mut row_left = sizes.clone();
    let mut col_left = sizes.clone();

    let mut visit = |table: &[usize]| {
        // representative tau: photons of source group b are sent, in order,
        // to unused members of target group a, table[a*r + b] of them
        let mut next_free = vec![0usize; r];
        let mut denom = 1.0;
        for src in 0..r {
            let mut member = 0;
            for dst in 0..r {
                let count = table[dst * r + src];
                denom *= factorial(count);
                for _ in 0..count {
                    tau[groups[src][member]] = groups[dst][next_free[dst]];
                    member += 1;
                    next_free[dst] += 1;
                }
            }
        }
        let mut w = Complex64::new(1.0, 0.0);
        for k in 0..n {
            w *= s[(tau[k], k)];
        }
        if w == Complex64::new(0.0, 0.0) {
            return;
        }
        fill_cycle_matrix(b, &tau, &mut c);
        let term = w * ryser(&c) * (group_fact * group_fact / denom);
        scale += term.norm();
        total += term;
    };
    contingency_tables(&mut table, r, 0, &mut row_left, &mut col_left, &mut visit);
    (total, scale)
}

/// Enumerates `r x r` tables of non-negative integers with the prescribed
/// row and column sums, filling cells in row-major order.
fn contingency_tables(
    table: &mut [usize],
    r: usize,
    cell: usize,
    row_left: &mut [usize],
    col_left: &mut [usize],
    visit: &mut impl FnMut(&[usize]),
) {
    if cell == r * r {
        visit(table);
        return;
    }
    let (i, j) = (cell / r, cell % r);
    let (lo, hi) = if j == r - 1 {
        // last column of a row takes whatever is left
        (row_left[i], row_left[i])
    } else {
        (0, row_left[i].min(col_left[j]))
    };
    if lo > col_left[j] {
        return;
    }
    for v in lo..=hi {
        if i == r - 1 && v != col_left[j] {
            continue;
        }
        table[cell] = v;
        row_left[i] -= v;
        col_left[j] -= v;
        contingency_tables(table, r, cell + 1, row_left, col_left, visit);
        row_left[i] += v;
        col_left[j] += v;
    }
    table[cell] = 0;
}

/// Probability of detecting `output` when `input` enters the linear network
/// `u` (indexed `[(output_mode, input_mode)]`), with photon internal states
/// given by `states` and `assignment`:
///
/// `P = Perm(W) / (N_in prod_j m_j!)`.
///
/// `N_in` is the squared norm of the input state, the product over input
/// modes of the permanent of the Gram block of the photons in that mode. It
/// equals `prod_i n_i!` when photons sharing a mode are identical.
pub fn output_probability(
    u: &CMatrix,
    input: &FockState,
    output: &FockState,
    states: &DistinguishabilityMatrix,
    assignment: &AssignmentList,
) -> Result<f64> {
    output_probability_with(u, input, output, states, assignment, Kernel::Auto)
}

pub fn output_probability_with(
    u: &CMatrix,
    input: &FockState,
    output: &FockState,
    states: &DistinguishabilityMatrix,
    assignment: &AssignmentList,
    kernel: Kernel,
) -> Result<f64> {
    if assignment.len() != input.total() {
        return Err(Error::Dimension(format!(
            "{} labels for {} photons",
            assignment.len(),
            input.total()
        )));
    }
    let b = submatrix(u, input, output)?;
    let s = states.restrict(assignment)?;
    let perm_w = multipermanent_with(&b, &s, kernel)?;
    normalize_probability(perm_w, input_norm(input, &s), output)
}

/// Squared norm of the input state for photons with Gram matrix `s`, listed
/// in the order of [`FockState::photon_modes`].
pub(crate) fn input_norm(input: &FockState, s: &CMatrix) -> f64 {
    let mut norm = 1.0;
    let mut start = 0;
    for &k in input.occupations() {
        if k > 1 {
            let block = s.view((start, start), (k, k)).into_owned();
            norm *= ryser(&block).re;
        }
        start += k;
    }
    norm
}

pub(crate) fn normalize_probability(
    perm_w: f64,
    input_norm: f64,
    output: &FockState,
) -> Result<f64> {
    let p = perm_w / (input_norm * output.factorial_product());
    if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&p) {
        return Err(Error::Inconsistent(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    /// Gram matrix of random normalized vectors in `C^dim`.
    fn random_gram(n: usize, dim: usize, rng: &mut impl Rng) -> CMatrix {
        let vecs: Vec<Vec<Complex64>> = (0..n)
            .map(|_| {
                let v: Vec<Complex64> = (0..dim)
                    .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                v.into_iter().map(|z| z / norm).collect()
            })
            .collect();
        CMatrix::from_fn(n, n, |j, k| {
            vecs[j]
                .iter()
                .zip(&vecs[k])
                .map(|(a, b)| a.conj() * b)
                .sum()
        })
    }

    #[test]
    fn permanent_basics() {
        let a = CMatrix::from_element(1, 1, c(0.3, -2.0));
        assert_eq!(permanent(&a).unwrap(), c(0.3, -2.0));
        let ones = CMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!((permanent(&ones).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
        for n in 1..=6 {
            let id = CMatrix::identity(n, n);
            assert!((permanent(&id).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        }
        assert!(permanent(&CMatrix::zeros(2, 3)).is_err());
        assert!(permanent_naive(&CMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn ryser_matches_permutation_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=7 {
            let a = random_matrix(n, &mut rng);
            let fast = permanent(&a).unwrap();
            let slow = permanent_naive(&a).unwrap();
            assert!(
                (fast - slow).norm() <= 1e-12 * slow.norm().max(1.0),
                "n = {n}"
            );
        }
    }

    #[test]
    fn heap_visits_every_permutation_once() {
        let mut seen = std::collections::HashSet::new();
        for_each_permutation(5, |p| {
            assert!(seen.insert(p.to_vec()));
        });
        assert_eq!(seen.len(), 120);
    }

    #[test]
    fn multipermanent_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=4 {
            let b = random_matrix(n, &mut rng);
            let ones = DistinguishabilityMatrix::indistinguishable(n);
            let id = DistinguishabilityMatrix::distinguishable(n);
            let mp = multipermanent(&b, ones.matrix()).unwrap();
            assert!((mp - permanent(&b).unwrap().norm_sqr()).abs() < 1e-10);
            let abs2 = b.map(|z| c(z.norm_sqr(), 0.0));
            let mp = multipermanent(&b, id.matrix()).unwrap();
            assert!((mp - permanent(&abs2).unwrap().re).abs() < 1e-10);
        }
    }

    #[test]
    fn kernels_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in 1..=5 {
            let b = random_matrix(n, &mut rng);
            let s = random_gram(n, 3, &mut rng);
            let naive = multipermanent_with(&b, &s, Kernel::Naive).unwrap();
            let cycle = multipermanent_with(&b, &s, Kernel::CycleSum).unwrap();
            assert!(
                (naive - cycle).abs() < 1e-10 * naive.abs().max(1.0),
                "n = {n}"
            );
        }
    }

    #[test]
    fn grouped_kernel_with_repeated_photons() {
        // photons 0,1 share a column and a label, as do 2,3; photon 4 is alone
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let base = random_matrix(5, &mut rng);
        let cols = [0, 0, 1, 1, 2];
        let b = CMatrix::from_fn(5, 5, |j, k| base[(j, cols[k])]);
        let g = random_gram(3, 2, &mut rng);
        let s = CMatrix::from_fn(5, 5, |j, k| g[(cols[j], cols[k])]);
        assert_eq!(photon_groups(&b, &s), vec![vec![0, 1], vec![2, 3], vec![4]]);
        let naive = multipermanent_with(&b, &s, Kernel::Naive).unwrap();
        let grouped = multipermanent_with(&b, &s, Kernel::CycleSum).unwrap();
        assert!((naive - grouped).abs() < 1e-10 * naive.abs().max(1.0));
    }

    #[test]
    fn contingency_table_count() {
        // 4x4 tables with all margins 2
        let mut table = vec![0; 16];
        let mut count = 0;
        contingency_tables(&mut table, 4, 0, &mut [2; 4], &mut [2; 4], &mut |_| {
            count += 1
        });
        assert_eq!(count, 282);
    }

    #[test]
    fn balanced_beamsplitter_coincidence() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b = CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(0.0, h), c(0.0, h), c(h, 0.0)]);
        for &ov in &[0.0, 0.3, 0.8, 1.0] {
            let s =
                CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(ov, 0.0), c(ov, 0.0), c(1.0, 0.0)]);
            let p = multipermanent(&b, &s).unwrap();
            assert!((p - (1.0 - ov * ov) / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_gram_matrices() {
        let bad_diag =
            CMatrix::from_row_slice(2, 2, &[c(0.9, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(DistinguishabilityMatrix::new(bad_diag).is_err());
        let not_herm =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.5), c(0.0, 0.5), c(1.0, 0.0)]);
        assert!(DistinguishabilityMatrix::new(not_herm).is_err());
        // unit-modulus overlaps that cannot come from three states
        let not_psd = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(-1.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(-1.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
            ],
        );
        assert!(DistinguishabilityMatrix::new(not_psd).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(DistinguishabilityMatrix::new(random_gram(4, 2, &mut rng)).is_ok());
    }

    #[test]
    fn multipermanent_dimension_errors() {
        let b = CMatrix::identity(2, 2);
        let s = CMatrix::identity(3, 3);
        assert!(matches!(multipermanent(&b, &s), Err(Error::Dimension(_))));
    }

    #[test]
    fn non_hermitian_overlaps_flagged() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b = CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]);
        let s =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.5), c(0.5, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            multipermanent(&b, &s),
            Err(Error::Inconsistent(_))
        ));
    }
}
