//! Reference systems and random initial data used by tests, benchmarks and
//! the command line `verify` suite.

use nalgebra::DMatrix;
use rand::Rng;

use crate::graph_model::{
    build_port_hamiltonian, Edge, EdgeSystem, MatrixFunction, MetricGraph, PortHamiltonian,
    VertexCondition,
};
use crate::poly::{PiecewisePoly, Poly};
use crate::state::StateFunction;

/// Boundary matrix of the four-component network with eigenvalues `±1, ±1/2`.
pub fn example1_b() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 1.0, 0.0, //
            0.25, 0.0, 0.0, 0.5, //
            0.75, 0.0, 0.0, 0.5, //
            0.0, 1.0, 0.0, 0.0,
        ],
    )
}

/// Unit-speed system with two forward and two backward components.
pub fn example1() -> PortHamiltonian {
    PortHamiltonian::unit(2, 2, example1_b()).expect("valid fixture")
}

/// Spectral projections of [`example1_b`] for the eigenvalues `1` and `-1`.
pub fn example1_projections() -> (DMatrix<f64>, DMatrix<f64>) {
    let p1 = DMatrix::from_row_slice(
        4,
        4,
        &[
            2.0, 2.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0,
        ],
    ) / 6.0;
    let p2 = DMatrix::from_row_slice(
        4,
        4,
        &[
            2.0, -2.0, -2.0, 2.0, -1.0, 1.0, 1.0, -1.0, -2.0, 2.0, 2.0, -2.0, 1.0, -1.0, -1.0,
            1.0,
        ],
    ) / 6.0;
    (p1, p2)
}

/// Two identical Timoshenko beams joined end to end: vertices 1-2-3,
/// edge 1 from vertex 1 to 2, edge 2 from vertex 2 to 3.
pub fn beam_graph() -> MetricGraph {
    MetricGraph::new(
        vec![1, 2, 3],
        vec![
            Edge { id: 1, tail: 1, head: 2 },
            Edge { id: 2, tail: 2, head: 3 },
        ],
    )
    .expect("valid fixture")
}

/// Coefficient matrix of `∂_t p + M ∂_x p = 0` for a beam with all material
/// constants equal to one (shear, momentum, angle, angular momentum).
pub fn beam_matrix() -> DMatrix<f64> {
    -DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 1.0, 0.0, 0.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0,
        ],
    )
}

pub fn beam_systems() -> Vec<EdgeSystem> {
    let m = MatrixFunction::constant(&beam_matrix());
    vec![EdgeSystem::new(1, m.clone()), EdgeSystem::new(2, m)]
}

/// Clamped-type conditions at the free ends and a rigid joint in the middle.
pub fn beam_conditions() -> Vec<VertexCondition> {
    vec![
        VertexCondition {
            vertex: 1,
            phi: DMatrix::from_row_slice(2, 4, &[1.0, -3.0, 0.0, 0.0, 0.0, 0.0, 1.0, -3.0]),
        },
        VertexCondition {
            vertex: 2,
            phi: DMatrix::from_row_slice(
                4,
                8,
                &[
                    1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, //
                    0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, //
                    0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
                    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0,
                ],
            ),
        },
        VertexCondition {
            vertex: 3,
            phi: DMatrix::from_row_slice(2, 4, &[-3.0, -5.0, 0.0, 0.0, 0.0, 0.0, -3.0, -5.0]),
        },
    ]
}

pub fn beam() -> PortHamiltonian {
    build_port_hamiltonian(&beam_graph(), &beam_systems(), &beam_conditions(), 4)
        .expect("valid fixture")
}

/// The boundary matrix the beam chain must assemble to.
pub fn beam_b() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        8,
        8,
        &[
            0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, //
            1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, //
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, //
            0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0,
        ],
    )
}

/// Random piecewise polynomial on `[0, 1)` with `pieces` pieces of the given
/// degree, breakpoints drawn uniformly, coefficients in `[-1, 1]`.
pub fn random_piecewise<R: Rng>(rng: &mut R, pieces: usize, degree: usize) -> PiecewisePoly {
    let mut inner: Vec<f64> = (1..pieces).map(|_| rng.random_range(0.02..0.98)).collect();
    inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
    inner.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let mut breaks = vec![0.0];
    breaks.extend(inner);
    breaks.push(1.0);
    let polys = (0..breaks.len() - 1)
        .map(|_| Poly::new((0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    PiecewisePoly::new(breaks, polys).expect("sorted breakpoints")
}

/// Random state with piecewise-linear components.
pub fn random_state<R: Rng>(rng: &mut R, m_plus: usize, m_minus: usize) -> StateFunction {
    random_state_with(rng, m_plus, m_minus, 4, 1)
}

pub fn random_state_with<R: Rng>(
    rng: &mut R,
    m_plus: usize,
    m_minus: usize,
    pieces: usize,
    degree: usize,
) -> StateFunction {
    let comps = (0..m_plus + m_minus)
        .map(|_| random_piecewise(rng, pieces, degree))
        .collect();
    StateFunction::new(m_plus, comps).expect("unit-interval components")
}

/// Random state that is constant on each cell of the uniform `n`-grid.
pub fn random_grid_state<R: Rng>(
    rng: &mut R,
    m_plus: usize,
    m_minus: usize,
    n: usize,
) -> StateFunction {
    let comps = (0..m_plus + m_minus)
        .map(|_| {
            let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            PiecewisePoly::step_unit(&vals)
        })
        .collect();
    StateFunction::new(m_plus, comps).expect("unit-interval components")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn beam_assembles_to_reference_matrix() {
        let ph = beam();
        assert_eq!((ph.m_plus(), ph.m_minus()), (4, 4));
        assert!(max_abs(&(ph.b() - beam_b())) < 1e-12);
        assert!(ph.is_unit_speed());
    }

    #[test]
    fn example_projections_are_projections() {
        let (p1, p2) = example1_projections();
        assert!(max_abs(&(&p1 * &p1 - &p1)) < 1e-15);
        assert!(max_abs(&(&p1 * &p2)) < 1e-15);
        let b = example1_b();
        assert!(max_abs(&(&b * &p2 + &p2)) < 1e-15);
    }
}
