//! Linear transport on finite metric graphs: assembly of the boundary
//! coupling, explicit evaluation of the solution semigroup, spectral
//! splitting of its asymptotics, and numerical cross-checks.

pub mod error;
pub mod fixtures;
pub mod graph_model;
pub mod linalg;
pub mod normalization;
pub mod oracle;
pub mod poly;
pub mod semigroup;
pub mod spectral;
pub mod state;

pub use error::{Error, Result};
pub use graph_model::{
    assemble_boundary, build_port_hamiltonian, diagonalize_edge, relabel_riemann,
    validate_system, BranchRef, Edge, EdgeDiagonalization, EdgeSystem, Endpoint, MatrixFunction,
    MetricGraph, PortHamiltonian, Relabeling, SignClass, SystemReport, Velocity, VertexCondition,
};
pub use normalization::{
    find_reference_time, rescale_state, subdivide, traverse_times, unrescale_state,
    NormalizedSolver, SubdividedSystem, TraverseTimeTable,
};
pub use oracle::{
    compare, resolvent_apply, upwind_solve, CharacteristicsTracer, ErrorMetrics, GridSolution,
    ResolventSolution,
};
pub use poly::{PiecewisePoly, Poly};
pub use semigroup::{
    evaluate_semigroup, evaluate_transport, semigroup_property_check, PowerSource, Semigroup,
};
pub use state::{Samples, StateFunction};
pub use spectral::{
    classify, evaluate_limit, evaluate_stable, spectral_decompose, stable_bound,
    AsymptoticsReport, Classification, SpectralDecomposition, SplitSemigroup, StableBound,
};
