#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use purification::permanent::DistinguishabilityMatrix;
use purification::CMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Haar-ish random unitary from the QR decomposition of a Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix the phases so the distribution does not depend on the QR convention
    let phases = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            r[(i, i)] / r[(i, i)].norm()
        } else {
            c(0.0, 0.0)
        }
    });
    q * phases
}

pub fn random_matrix(n: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Normalized random internal-state vectors of dimension `dim`.
pub fn random_states(n: usize, dim: usize, rng: &mut impl Rng) -> Vec<Vec<Complex64>> {
    (0..n)
        .map(|_| {
            let v: Vec<Complex64> = (0..dim)
                .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|z| z / norm).collect()
        })
        .collect()
}

/// `S[j, k] = <psi_j|psi_k>`.
pub fn gram(states: &[Vec<Complex64>]) -> DistinguishabilityMatrix {
    let n = states.len();
    let s = CMatrix::from_fn(n, n, |j, k| {
        states[j]
            .iter()
            .zip(&states[k])
            .map(|(a, b)| a.conj() * b)
            .sum()
    });
    DistinguishabilityMatrix::new(s).unwrap()
}

/// Internal-state vectors reproducing the constant-overlap Gram matrix:
/// `sqrt(c)|0> + sqrt(1-c)|k>`.
pub fn constant_overlap_states(n: usize, overlap: f64) -> Vec<Vec<Complex64>> {
    (0..n)
        .map(|k| {
            let mut v = vec![c(0.0, 0.0); n + 1];
            v[0] = c(overlap.sqrt(), 0.0);
            v[k + 1] = c((1.0 - overlap).sqrt(), 0.0);
            v
        })
        .collect()
}

/// Output distribution over mode occupations, computed by expanding the
/// product of creation operators `prod_p sum_{o,a} U[o, in_p] psi_p[a] a^dag_{o,a}`
/// in the joint (mode, internal state) basis.
pub fn fock_distribution(
    u: &CMatrix,
    input_modes: &[usize],
    states: &[Vec<Complex64>],
) -> HashMap<Vec<usize>, f64> {
    let dim = states[0].len();
    let m = u.nrows();
    let expand = |u: &CMatrix| -> HashMap<Vec<u32>, Complex64> {
        let mut poly: HashMap<Vec<u32>, Complex64> = HashMap::new();
        poly.insert(Vec::new(), c(1.0, 0.0));
        for (p, &mode) in input_modes.iter().enumerate() {
            let mut next: HashMap<Vec<u32>, Complex64> = HashMap::new();
            for (key, coef) in &poly {
                for o in 0..u.nrows() {
                    let amp = u[(o, mode)];
                    if amp.norm() == 0.0 {
                        continue;
                    }
                    for (a, &psi) in states[p].iter().enumerate() {
                        let z = amp * psi;
                        if z.norm() == 0.0 {
                            continue;
                        }
                        let k = (o * dim + a) as u32;
                        let mut nk = key.clone();
                        let pos = nk.partition_point(|&x| x <= k);
                        nk.insert(pos, k);
                        *next.entry(nk).or_insert(c(0.0, 0.0)) += coef * z;
                    }
                }
            }
            poly = next;
        }
        poly
    };
    let weight = |key: &[u32]| -> f64 {
        let mut w = 1.0;
        let mut run = 1;
        for i in 1..=key.len() {
            if i < key.len() && key[i] == key[i - 1] {
                run += 1;
            } else {
                for r in 2..=run {
                    w *= r as f64;
                }
                run = 1;
            }
        }
        w
    };
    let n_in = u.ncols();
    let input_norm: f64 = expand(&CMatrix::identity(n_in, n_in))
        .iter()
        .map(|(k, z)| z.norm_sqr() * weight(k))
        .sum();
    let mut dist = HashMap::new();
    for (key, z) in expand(u) {
        let mut occ = vec![0usize; m];
        for &k in &key {
            occ[k as usize / dim] += 1;
        }
        *dist.entry(occ).or_insert(0.0) += z.norm_sqr() * weight(&key) / input_norm;
    }
    dist
}

/// Transfer matrix of the two-copy purifier written out entry by entry, rows
/// labelled by input modes.
pub fn literal_purifier_matrix() -> CMatrix {
    let s = 2f64.sqrt();
    let rows: [[Complex64; 6]; 6] = [
        [
            c(2.0, 0.0),
            c(0.0, s),
            c(-1.0, 0.0),
            c(0.0, -1.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ],
        [
            c(0.0, 2.0),
            c(s, 0.0),
            c(0.0, 1.0),
            c(-1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ],
        [
            c(0.0, 0.0),
            c(0.0, 2.0),
            c(s, 0.0),
            c(0.0, s),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ],
        [
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, s),
            c(s, 0.0),
            c(0.0, 2.0),
            c(0.0, 0.0),
        ],
        [
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(-1.0, 0.0),
            c(0.0, 1.0),
            c(s, 0.0),
            c(0.0, 2.0),
        ],
        [
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, -1.0),
            c(-1.0, 0.0),
            c(0.0, s),
            c(2.0, 0.0),
        ],
    ];
    let k = 1.0 / (2.0 * s);
    DMatrix::from_fn(6, 6, |i, j| rows[i][j] * k)
}

/// Classical outcome probabilities for one purifier copy in the purified
/// histogram setup, by enumerating photon survival, the HOM outcome on the
/// balanced first coupler, and each photon's exit from the second coupler.
///
/// Returns `P[(h, f)]`: `h` photons at the herald and `f` at the final
/// coupler.
pub fn enumerate_copy(t: f64, v_raw: f64, d: f64, s: f64) -> HashMap<(usize, usize), f64> {
    let mut out: HashMap<(usize, usize), f64> = HashMap::new();
    let mut add = |h: usize, f: usize, p: f64| *out.entry((h, f)).or_insert(0.0) += p;
    // second coupler: each photon goes to the herald with 1 - s, on with s
    let second = |n: usize| -> Vec<(usize, usize, f64)> {
        let mut v = Vec::new();
        for to_final in 0..=n {
            let ways = if n == 2 && to_final == 1 { 2.0 } else { 1.0 };
            let p = ways * s.powi(to_final as i32) * (1.0 - s).powi((n - to_final) as i32);
            v.push((n - to_final, to_final, p));
        }
        v
    };
    for survivors in 0..=2usize {
        let p_surv = match survivors {
            0 => (1.0 - t) * (1.0 - t),
            1 => 2.0 * t * (1.0 - t),
            _ => t * t,
        };
        // photons entering the second coupler after the first one
        let first: Vec<(usize, f64)> = match survivors {
            0 => vec![(0, 1.0)],
            1 => vec![(1, d), (0, 1.0 - d)],
            _ => {
                // balanced coupler with partial HOM interference
                let both = 0.25 * (1.0 + v_raw);
                vec![(2, both), (0, both), (1, 1.0 - 2.0 * both)]
            }
        };
        for (n_second, p_first) in first {
            for (h, f, p) in second(n_second) {
                add(h, f, p_surv * p_first * p);
            }
        }
    }
    out
}

/// Raw-setup click probability of one output detector by enumeration: each
/// photon survives with `t`, reaches the final coupler with `d s`, and the
/// final coupler sends lone photons either way and lets a pair reach a given
/// detector with probability `(3 - V) / 4`.
pub fn enumerate_raw_one_detector(t: f64, v: f64, d: f64, s: f64) -> f64 {
    let q = d * s;
    let mut total = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            // 0: lost, 1: reaches the final coupler, 2: survives elsewhere
            let pr = |k: usize| match k {
                0 => 1.0 - t,
                1 => t * q,
                _ => t * (1.0 - q),
            };
            let arriving = (a == 1) as usize + (b == 1) as usize;
            let click = match arriving {
                0 => 0.0,
                1 => 0.5,
                _ => 0.25 * (3.0 - v),
            };
            total += pr(a) * pr(b) * click;
        }
    }
    total
}
