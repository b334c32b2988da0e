mod common;

use anderson_gp::disorder::{
    partition_into_boxes, restrict_hamiltonian, sample_potential, Boundary, DisorderRealization, DisorderSpec,
    Distribution, Region,
};
use anderson_gp::spectral::{dense_eigenvalues, dense_oracle, lowest_eigenpairs, HamiltonianOperator, SymmetricOperator};
use anderson_gp::Lattice;
use proptest::prelude::*;

use common::{rng, shared};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn partition_covers_with_bounded_sides(d in 1usize..=3, l in 1usize..=12, pick in 0usize..1000) {
        let lat = Lattice::new(d, l).unwrap();
        let target = 1 + pick % lat.side();
        let boxes = partition_into_boxes(&lat, target).unwrap();
        let mut seen = vec![0u8; lat.n_sites()];
        for b in &boxes {
            prop_assert_eq!(b.boundary, Boundary::Neumann);
            for j in 0..d {
                let s = b.extent[j] as f64;
                prop_assert!(s >= target as f64 / 2.0 && s <= 2.0 * target as f64, "side {s} for target {target}");
            }
            for x in b.sites(&lat) {
                seen[x] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        // the count bound needs ℓ ≤ 2L; at ℓ = 2L+1 the single region exceeds it
        if target <= 2 * l {
            let ratio = (l as f64 / target as f64).powi(d as i32);
            let j = boxes.len() as f64;
            prop_assert!(j >= ratio / 2f64.powi(d as i32) && j <= ratio * 2f64.powi(d as i32));
        } else {
            prop_assert_eq!(boxes.len(), 1);
        }
    }

    #[test]
    fn provenance_fixes_the_potential(seed in any::<u64>(), li in 0u64..8, si in 0u64..1000) {
        let lat = shared(2, 3);
        let spec = DisorderSpec::uniform(2.5, seed);
        let a = sample_potential::<f64>(&spec, lat.clone(), li, si);
        let b = sample_potential::<f64>(&spec, lat, li, si);
        prop_assert_eq!(&a.potential, &b.potential);
        prop_assert!(a.potential.iter().all(|&v| (0.0..=2.5).contains(&v)));
    }
}

#[test]
fn partition_examples() {
    let lat = Lattice::new(1, 8).unwrap();
    let mut sides: Vec<usize> = partition_into_boxes(&lat, 4).unwrap().iter().map(|b| b.extent[0]).collect();
    sides.sort_unstable_by(|a, b| b.cmp(a));
    assert_eq!(sides, vec![5, 4, 4, 4]);
    assert_eq!(partition_into_boxes(&lat, 17).unwrap().len(), 1);
    assert!(partition_into_boxes(&lat, 0).is_err() && partition_into_boxes(&lat, 18).is_err());
    let lat2 = Lattice::new(2, 8).unwrap();
    let boxes = partition_into_boxes(&lat2, 4).unwrap();
    assert_eq!(boxes.len(), 16);
    assert!(boxes.iter().all(|b| (2..=8).contains(&b.extent[0]) && (2..=8).contains(&b.extent[1])));
}

#[test]
fn neumann_kernel_and_dirichlet_pair() {
    let lat = shared(2, 4);
    let free = DisorderRealization::<f64>::free(lat.clone());
    let region = Region::new(&[-3, -1], &[4, 5], Boundary::Neumann);
    let h = restrict_hamiltonian(&free, &region).unwrap();
    let eig = lowest_eigenpairs(&h, 1, 1e-10, 3).unwrap();
    assert!(eig.values[0].abs() < 1e-10);
    let c = (20f64).sqrt().recip();
    assert!(eig.vectors[0].iter().all(|&x| (x - c).abs() < 1e-9));

    let chain = shared(1, 4);
    let free1 = DisorderRealization::<f64>::free(chain);
    let pair = restrict_hamiltonian(&free1, &Region::new(&[0], &[2], Boundary::Dirichlet)).unwrap();
    let ev = dense_eigenvalues(&pair).unwrap();
    assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
}

#[test]
fn restriction_rejects_empty_regions() {
    let r = common::realization(1, 4, 1, 0);
    assert!(restrict_hamiltonian(&r, &Region::new(&[0], &[0], Boundary::Neumann)).is_err());
}

#[test]
fn restricted_operators_are_symmetric_and_nonnegative() {
    let r = common::realization(2, 5, 9, 2);
    for b in [Boundary::Neumann, Boundary::Dirichlet] {
        let h = restrict_hamiltonian(&r, &Region::new(&[-5, -2], &[6, 7], b)).unwrap();
        let n = h.dim();
        let m = h.to_dense();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(m[i * n + j], m[j * n + i]);
            }
        }
        assert!(dense_eigenvalues(&h).unwrap()[0] >= -1e-12);
    }
}

/// `min_j E₀^N ≤ E₀^P ≤ min_j E₀^D` over every partition scale.
#[test]
fn dirichlet_neumann_bracketing() {
    for (d, l, seeds) in [(1usize, 16usize, 10u64), (2, 5, 5)] {
        let lat = Lattice::new(d, l).unwrap();
        for seed in 0..seeds {
            let r = common::realization(d, l, 100 + seed, seed);
            let e_p = dense_eigenvalues(&HamiltonianOperator::periodic(&r)).unwrap()[0];
            for target in [2, 3, 4, 6] {
                let boxes = partition_into_boxes(&lat, target).unwrap();
                let mut n_min = f64::INFINITY;
                let mut d_min = f64::INFINITY;
                for b in &boxes {
                    n_min = n_min.min(dense_eigenvalues(&restrict_hamiltonian(&r, b).unwrap()).unwrap()[0]);
                    let hd = restrict_hamiltonian(&r, &b.with_boundary(Boundary::Dirichlet)).unwrap();
                    d_min = d_min.min(dense_eigenvalues(&hd).unwrap()[0]);
                }
                assert!(n_min <= e_p + 1e-8 && e_p <= d_min + 1e-8, "{n_min} {e_p} {d_min}");
            }
        }
    }
}

/// Adding a nonnegative potential never lowers the ground energy.
#[test]
fn ground_energy_is_monotone_in_the_potential() {
    use rand::Rng;
    let mut g = rng(5);
    let lat = shared(1, 20);
    for pair in 0..20 {
        let r = common::realization(1, 20, 7, pair);
        let bump: Vec<f64> = r.potential.iter().map(|&v| v + g.random_range(0.0..0.5)).collect();
        let r2 = DisorderRealization::from_potential(lat.clone(), bump).unwrap();
        let e = lowest_eigenpairs(&HamiltonianOperator::periodic(&r), 1, 1e-10, 1).unwrap().values[0];
        let e2 = lowest_eigenpairs(&HamiltonianOperator::periodic(&r2), 1, 1e-10, 1).unwrap().values[0];
        assert!(e <= e2 + 1e-10);
    }
}

#[test]
fn distributions_respect_their_support() {
    let lat = shared(1, 200);
    let bern = DisorderSpec {
        distribution: Distribution::Bernoulli { p: 0.3 },
        v_max: 2.0,
        seed: 4,
    };
    let r = sample_potential::<f64>(&bern, lat.clone(), 0, 0);
    assert!(r.potential.iter().all(|&v| v == 0.0 || v == 2.0));
    let frac = r.potential.iter().filter(|&&v| v > 0.0).count() as f64 / 401.0;
    assert!((frac - 0.3).abs() < 0.08);
    let oracle = dense_oracle(&HamiltonianOperator::periodic(&r)).unwrap();
    assert!(oracle.values[0] >= 0.0);
}
