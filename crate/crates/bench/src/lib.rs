//! Shared fixtures for benchmarks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netwave_core::fixtures::{example1_b, random_state_with};
use netwave_core::{PortHamiltonian, StateFunction, Velocity};

/// Example-1 coupling with forward components at half speed.
pub fn doubled_example() -> PortHamiltonian {
    let vs = vec![
        Velocity::constant(0.5),
        Velocity::constant(0.5),
        Velocity::unit(),
        Velocity::unit(),
    ];
    PortHamiltonian::from_boundary_matrix(2, 2, vs, example1_b()).expect("valid fixture")
}

/// Unit-speed system with a random coupling of spectral radius below one.
pub fn random_unit(m_plus: usize, m_minus: usize, seed: u64) -> PortHamiltonian {
    let n = m_plus + m_minus;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)) / n as f64;
    PortHamiltonian::unit(m_plus, m_minus, b).expect("valid coupling")
}

/// Piecewise-cubic initial data with eight pieces per component.
pub fn state(m_plus: usize, m_minus: usize, seed: u64) -> StateFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_state_with(&mut rng, m_plus, m_minus, 8, 3)
}
