use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use netwave_core::fixtures::{random_grid_state, random_state, random_state_with};
use netwave_core::linalg::max_abs;
use netwave_core::oracle::GridSolution;
use netwave_core::{
    compare, rescale_state, semigroup_property_check, spectral_decompose, subdivide,
    traverse_times, find_reference_time, unrescale_state, upwind_solve, PiecewisePoly,
    PortHamiltonian, Semigroup, Velocity,
};

fn matrix(n: usize, entries: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, &entries[..n * n])
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn semigroup_law_holds(
        mp in 1usize..3,
        mm in 0usize..3,
        entries in prop::collection::vec(-1.0f64..1.0, 25),
        seed in any::<u64>(),
        t in 0.0f64..3.0,
        s in 0.0f64..3.0,
    ) {
        let n = mp + mm;
        let ph = PortHamiltonian::unit(mp, mm, matrix(n, &entries)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_state_with(&mut rng, mp, mm, 3, 2);
        let scale = 1.0 + f.l1_norm() * (1.0 + max_abs(ph.b())).powf(t + s + 2.0);
        prop_assert!(semigroup_property_check(&ph, &f, t, s).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn upwind_is_exact_on_grid_data(
        entries in prop::collection::vec(-1.0f64..1.0, 9),
        seed in any::<u64>(),
        steps in 0usize..200,
    ) {
        let ph = PortHamiltonian::unit(2, 1, matrix(3, &entries)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_grid_state(&mut rng, 2, 1, 16);
        let t = steps as f64 / 32.0;
        let grid = upwind_solve(&ph, &f, t, 32).unwrap();
        let mut sg = Semigroup::new(&ph).unwrap();
        let exact = sg.sample(&f, t, &grid.midpoints()).unwrap();
        let m = compare(&grid.samples(), &exact, 1.0).unwrap();
        let scale = 1.0 + (1.0 + max_abs(ph.b())).powf(t + 1.0);
        prop_assert!(m.max <= 1e-13 * scale, "{:?}", m);
    }

    #[test]
    fn grid_round_trip(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_grid_state(&mut rng, 1, 2, n);
        let g = GridSolution::from_averages(&f, n).to_state();
        prop_assert!(g.sub(&f).max_abs() <= 1e-14);
    }

    #[test]
    fn rescaling_round_trip(
        speeds in prop::collection::vec(1usize..4, 3),
        seed in any::<u64>(),
    ) {
        // speeds 1/k give integer traverse times
        let vs = speeds.iter().map(|&k| Velocity::constant(1.0 / k as f64)).collect();
        let ph = PortHamiltonian::from_boundary_matrix(
            2, 1, vs, DMatrix::from_element(3, 3, 0.3),
        ).unwrap();
        let tt = find_reference_time(&traverse_times(&ph).unwrap(), None, 1000).unwrap();
        // the smallest c divides out any common factor
        let g = speeds.iter().fold(0, |a, &b| gcd(a, b));
        let multiples: Vec<usize> = speeds.iter().map(|k| k / g).collect();
        prop_assert_eq!(&tt.multiples, &multiples);
        let sub = subdivide(&ph, &tt).unwrap();
        prop_assert_eq!(sub.dim(), multiples.iter().sum::<usize>());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_state(&mut rng, 2, 1);
        let q = rescale_state(&ph, &tt, &f).unwrap();
        let back = unrescale_state(&ph, &tt, &q).unwrap();
        prop_assert!(back.sub(&f).max_abs() <= 1e-12);
    }

    #[test]
    fn power_expansion_matches_powers(
        n in 2usize..7,
        entries in prop::collection::vec(-1.0f64..1.0, 36),
    ) {
        let b = matrix(n, &entries);
        if let Ok(sd) = spectral_decompose(&b) {
            let mut p = DMatrix::identity(n, n);
            for k in 1..=16u64 {
                p = &p * &b;
                let err = max_abs(&(sd.power_expansion(k) - &p));
                prop_assert!(err <= 1e-8 * sd.residuals().scale * p.norm().max(1.0));
            }
        }
    }

    #[test]
    fn translate_and_reflect_preserve_integrals(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_state_with(&mut rng, 1, 0, 5, 3);
        let p: &PiecewisePoly = f.component(0);
        let r = p.reflect(1.0);
        prop_assert!((r.integral() - p.integral()).abs() <= 1e-14);
        prop_assert!((r.reflect(1.0).sub(p)).max_abs() <= 1e-13);
        let shifted = p.translate_to(2.0, 3.0);
        prop_assert!((shifted.integral() - p.integral()).abs() <= 1e-13);
    }
}
