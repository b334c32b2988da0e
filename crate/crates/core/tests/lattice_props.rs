mod common;

use anderson_gp::Lattice;
use num_complex::Complex64;
use proptest::prelude::*;

use common::{coords, dot, naive_dft};

fn lattice_strategy() -> impl Strategy<Value = Lattice> {
    prop_oneof![
        (1usize..=12).prop_map(|l| Lattice::new(1, l).unwrap()),
        (1usize..=5).prop_map(|l| Lattice::new(2, l).unwrap()),
        (1usize..=2).prop_map(|l| Lattice::new(3, l).unwrap()),
    ]
}

fn lattice_and_fields() -> impl Strategy<Value = (Lattice, Vec<f64>, Vec<f64>)> {
    lattice_strategy().prop_flat_map(|lat| {
        let n = lat.n_sites();
        (
            Just(lat),
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
    })
}

fn complex(u: &[f64]) -> Vec<Complex64> {
    u.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_symmetric_and_positive((lat, u, v) in lattice_and_fields()) {
        let lu = lat.apply_neg_laplacian(&u).unwrap();
        let lv = lat.apply_neg_laplacian(&v).unwrap();
        let a = dot(&lu, &v);
        let b = dot(&u, &lv);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        prop_assert!(dot(&lu, &u) >= -1e-12);
    }

    #[test]
    fn every_site_has_2d_symmetric_neighbors(lat in lattice_strategy()) {
        let l = lat.half_side() as i64;
        for x in 0..lat.n_sites() {
            let nb = lat.neighbors(x);
            prop_assert_eq!(nb.len(), 2 * lat.dim());
            for &y in nb {
                prop_assert!(lat.neighbors(y).contains(&x));
            }
            prop_assert!(coords(&lat, x).iter().all(|&c| -l <= c && c <= l));
        }
    }

    #[test]
    fn symbol_stays_in_range(lat in lattice_strategy()) {
        for g in 0..lat.n_sites() {
            let h: f64 = lat.symbol(g);
            prop_assert!(h >= -1e-15 && h <= 4.0 * lat.dim() as f64 + 1e-15);
        }
    }

    #[test]
    fn dft_roundtrip_and_parseval((lat, u, v) in lattice_and_fields()) {
        let z: Vec<Complex64> = u.iter().zip(&v).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let hat = lat.dft(&z).unwrap();
        let back = lat.idft(&hat).unwrap();
        let err = back.iter().zip(&z).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12);
        let n0: f64 = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let n1: f64 = hat.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((n0 - n1).abs() <= 1e-12 * n0.max(1.0));
    }

    #[test]
    fn fast_transform_matches_direct_sum((lat, u, _v) in lattice_and_fields()) {
        let fast = lat.dft(&complex(&u)).unwrap();
        let slow = naive_dft(&lat, &complex(&u), -1.0);
        let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12);
        let inv_fast = lat.idft(&complex(&u)).unwrap();
        let inv_slow = naive_dft(&lat, &complex(&u), 1.0);
        let err = inv_fast.iter().zip(&inv_slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12);
    }

    #[test]
    fn transform_diagonalizes_the_laplacian((lat, u, _v) in lattice_and_fields()) {
        let lhs = lat.dft(&complex(&lat.apply_neg_laplacian(&u).unwrap())).unwrap();
        let rhs = lat.dft(&complex(&u)).unwrap();
        for g in 0..lat.n_sites() {
            let h: f64 = lat.symbol(g);
            prop_assert!((lhs[g] - rhs[g] * h).norm() <= 1e-12);
        }
        let direct = lat.dirichlet_energy(&u).unwrap();
        let fourier = lat.dirichlet_energy_fourier(&u).unwrap();
        prop_assert!((direct - fourier).abs() <= 1e-10);
        prop_assert!((direct - dot(&lat.apply_neg_laplacian(&u).unwrap(), &u)).abs() <= 1e-10);
    }

    #[test]
    fn plane_waves_are_eigenvectors(lat in lattice_strategy(), pick in 0usize..10_000) {
        let g = pick % lat.n_sites();
        let w = lat.plane_wave::<f64>(g);
        let lw = lat.apply_neg_laplacian(&w).unwrap();
        let h: f64 = lat.symbol(g);
        for (a, b) in lw.iter().zip(&w) {
            prop_assert!((a - b * h).norm() <= 1e-12);
        }
        // normalized plane wave has unit mass and kinetic energy h(γ)
        let norm: f64 = w.iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
        let re: Vec<f64> = w.iter().map(|c| c.re).collect();
        let im: Vec<f64> = w.iter().map(|c| c.im).collect();
        let e = lat.dirichlet_energy(&re).unwrap() + lat.dirichlet_energy(&im).unwrap();
        prop_assert!((e - h).abs() <= 1e-12);
    }
}

#[test]
fn normalized_constant_maps_to_zero_frequency_delta() {
    for (d, l) in [(1, 7), (2, 3), (3, 2)] {
        let lat = Lattice::new(d, l).unwrap();
        let n = lat.n_sites();
        let u = vec![Complex64::new((n as f64).sqrt().recip(), 0.0); n];
        let hat = lat.dft(&u).unwrap();
        let zero = lat.site(&[0, 0, 0][..d]);
        for (g, c) in hat.iter().enumerate() {
            let want = if g == zero { 1.0 } else { 0.0 };
            assert!((c - Complex64::new(want, 0.0)).norm() < 1e-13);
        }
    }
}

#[test]
fn one_dimensional_wrap_example() {
    let lat = Lattice::new(1, 2).unwrap();
    assert_eq!(lat.n_sites(), 5);
    let s = lat.site(&[2]);
    let mut nb: Vec<i64> = lat.neighbors(s).iter().map(|&y| lat.coords(y)[0]).collect();
    nb.sort();
    assert_eq!(nb, vec![-2, 1]);
    let mut delta = vec![0.0; 5];
    delta[0] = 1.0;
    assert_eq!(lat.dirichlet_energy(&delta).unwrap(), 2.0);
}
