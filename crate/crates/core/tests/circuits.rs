mod common;

use common::*;
use purification::circuit::{
    beamsplitter, loss_layer, purifier_pair_circuit, reference_circuit, with_loss, TransferMatrix,
};
use purification::fock::{enumerate_outputs, submatrix, AssignmentList, FockState};
use purification::permanent::{output_probability, permanent, DistinguishabilityMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn purifier_matches_literal_matrix_entrywise() {
    let literal = literal_purifier_matrix();
    let ours = purifier_pair_circuit(0.5, 0.5, 0.5).unwrap();
    // literal rows are input modes, ours are output modes
    let diff = (ours.entries() - literal.transpose())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    assert!(diff < 1e-12, "max entry difference {diff}");
}

#[test]
fn purifier_matches_literal_matrix_on_all_four_photon_events() {
    let literal = literal_purifier_matrix().transpose();
    let ours = purifier_pair_circuit(0.5, 0.5, 0.5).unwrap();
    let states = enumerate_outputs(4, 6);
    for input in &states {
        for output in &states {
            let a = permanent(&submatrix(ours.entries(), input, output).unwrap())
                .unwrap()
                .norm_sqr();
            let b = permanent(&submatrix(&literal, input, output).unwrap())
                .unwrap()
                .norm_sqr();
            assert!((a - b).abs() < 1e-10, "{input} -> {output}");
        }
    }
    let input = FockState::new(vec![1, 1, 0, 0, 1, 1]);
    let output = FockState::new(vec![0, 1, 1, 1, 1, 0]);
    let s = DistinguishabilityMatrix::indistinguishable(4);
    let p_out = output_probability(
        ours.entries(),
        &input,
        &output,
        &s,
        &AssignmentList::identity(4),
    )
    .unwrap();
    let p_literal =
        output_probability(&literal, &input, &output, &s, &AssignmentList::identity(4)).unwrap();
    assert!((p_out - p_literal).abs() < 1e-12);
    // perfect photons never give the purified coincidence
    assert!(p_out < 1e-15);
    let d = DistinguishabilityMatrix::distinguishable(4);
    let p_d = output_probability(
        ours.entries(),
        &input,
        &output,
        &d,
        &AssignmentList::identity(4),
    )
    .unwrap();
    let p_d_literal =
        output_probability(&literal, &input, &output, &d, &AssignmentList::identity(4)).unwrap();
    assert!(p_d > 0.0 && (p_d - p_d_literal).abs() < 1e-12);
}

#[test]
fn constructed_matrices_are_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let r: [f64; 3] = std::array::from_fn(|_| rand::Rng::random_range(&mut rng, 0.0..=1.0));
        assert!(purifier_pair_circuit(r[0], r[1], r[2])
            .unwrap()
            .is_unitary());
        assert!(reference_circuit(r[0], r[1]).unwrap().is_unitary());
        let t: Vec<f64> = (0..6)
            .map(|_| rand::Rng::random_range(&mut rng, 0.0..=1.0))
            .collect();
        let lossy = with_loss(&purifier_pair_circuit(r[0], r[1], r[2]).unwrap(), &t).unwrap();
        assert!(lossy.is_unitary());
    }
}

#[test]
fn removing_the_final_coupler() {
    let a = purifier_pair_circuit(0.3, 0.6, 0.0).unwrap();
    let b = reference_circuit(0.3, 0.6).unwrap();
    assert_eq!(a.entries(), b.entries());
    for i in 0..3 {
        for j in 3..6 {
            assert_eq!(b.entries()[(i, j)].norm(), 0.0);
            assert_eq!(b.entries()[(j, i)].norm(), 0.0);
        }
    }
}

#[test]
fn single_photon_paths_follow_propagation_order() {
    let (r1, r2, rf) = (0.3, 0.8, 0.6);
    let u = purifier_pair_circuit(r1, r2, rf).unwrap();
    let p = |out: usize, inp: usize| u.entries()[(out, inp)].norm_sqr();
    // mode 0 crosses to 1 at the first coupler, to 2 at the second, then
    // stays (1 - rf) or crosses (rf) at the final one
    assert!((p(2, 0) - r1 * r2 * (1.0 - rf)).abs() < 1e-14);
    assert!((p(3, 0) - r1 * r2 * rf).abs() < 1e-14);
    assert!((p(1, 0) - r1 * (1.0 - r2)).abs() < 1e-14);
    assert!((p(0, 0) - (1.0 - r1)).abs() < 1e-14);
    assert!((p(4, 5) - r1 * (1.0 - r2)).abs() < 1e-14);
}

#[test]
fn loss_dilation() {
    let id = TransferMatrix::identity(3);
    assert_eq!(with_loss(&id, &[1.0, 1.0, 1.0]).unwrap(), id);
    let lossy = loss_layer(&[0.7]).unwrap();
    assert_eq!(lossy.n_modes(), 2);
    assert_eq!(lossy.loss_modes(), &[1]);
    assert!((lossy.entries()[(0, 0)].norm_sqr() - 0.7).abs() < 1e-15);
    assert!(with_loss(&id, &[1.0, 1.2, 1.0]).is_err());
    assert!(with_loss(&id, &[1.0, 1.0]).is_err());
    assert!(beamsplitter(0.5, (0, 0), 2).is_err());
    assert!(beamsplitter(-0.1, (0, 1), 2).is_err());
}
