//! Metric graphs carrying hyperbolic systems, their diagonalization into
//! Riemann invariants, and assembly of vertex conditions into the global
//! boundary matrix `B = Ξ_out⁻¹ Ξ_in`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{canonical_basis, max_abs, rcond1, real_null_space};
use crate::poly::{merge_grids, PiecewisePoly};

/// Reciprocal condition number below which `Ξ_out` counts as singular.
pub const RCOND_THRESHOLD: f64 = 1e-10;
/// Diagonalization residual relative to `‖M(x)‖_max`.
pub const DIAG_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: usize,
    pub tail: usize,
    pub head: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Endpoint {
    Tail,
    Head,
}

impl Endpoint {
    pub fn x(self) -> f64 {
        match self {
            Endpoint::Tail => 0.0,
            Endpoint::Head => 1.0,
        }
    }
}

/// Finite, connected, simple graph; edge `j` is parametrized so that its tail
/// sits at `x = 0` and its head at `x = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricGraph {
    vertices: Vec<usize>,
    edges: Vec<Edge>,
}

impl MetricGraph {
    pub fn new(vertices: Vec<usize>, edges: Vec<Edge>) -> Result<Self> {
        let vset: BTreeSet<usize> = vertices.iter().copied().collect();
        if vset.len() != vertices.len() {
            return Err(Error::InvalidGraph("duplicate vertex id".into()));
        }
        if vertices.is_empty() {
            return Err(Error::InvalidGraph("no vertices".into()));
        }
        let mut ids = BTreeSet::new();
        let mut pairs = BTreeSet::new();
        for e in &edges {
            if !ids.insert(e.id) {
                return Err(Error::InvalidGraph(format!("edge id {} repeated", e.id)));
            }
            if e.tail == e.head {
                return Err(Error::InvalidGraph(format!("edge {} is a loop", e.id)));
            }
            if !vset.contains(&e.tail) || !vset.contains(&e.head) {
                return Err(Error::InvalidGraph(format!(
                    "edge {} references an unknown vertex",
                    e.id
                )));
            }
            if !pairs.insert((e.tail.min(e.head), e.tail.max(e.head))) {
                return Err(Error::InvalidGraph(format!(
                    "multiple edges between vertices {} and {}",
                    e.tail, e.head
                )));
            }
        }
        let mut sorted_vertices = vertices;
        sorted_vertices.sort_unstable();
        let mut edges = edges;
        edges.sort_by_key(|e| e.id);
        let g = MetricGraph {
            vertices: sorted_vertices,
            edges,
        };
        if !g.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    /// Edges incident to `v` with the endpoint at which they meet it, by edge id.
    pub fn incident(&self, v: usize) -> Vec<(Edge, Endpoint)> {
        self.edges
            .iter()
            .filter_map(|e| {
                if e.tail == v {
                    Some((*e, Endpoint::Tail))
                } else if e.head == v {
                    Some((*e, Endpoint::Head))
                } else {
                    None
                }
            })
            .collect()
    }

    fn is_connected(&self) -> bool {
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for e in &self.edges {
            adj.entry(e.tail).or_default().push(e.head);
            adj.entry(e.head).or_default().push(e.tail);
        }
        let mut seen = BTreeSet::from([self.vertices[0]]);
        let mut stack = vec![self.vertices[0]];
        while let Some(v) = stack.pop() {
            for &w in adj.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == self.vertices.len()
    }
}

/// Square matrix whose entries are piecewise polynomials on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFunction {
    dim: usize,
    entries: Vec<PiecewisePoly>,
}

impl MatrixFunction {
    pub fn new(dim: usize, entries: Vec<PiecewisePoly>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|e| e.start() != 0.0 || e.end() != 1.0) {
            return Err(Error::InvalidFunction(
                "matrix entries must be defined on [0, 1]".into(),
            ));
        }
        Ok(MatrixFunction { dim, entries })
    }

    pub fn constant(m: &DMatrix<f64>) -> Self {
        assert!(m.is_square());
        let dim = m.nrows();
        let entries = (0..dim * dim)
            .map(|k| PiecewisePoly::constant(0.0, 1.0, m[(k / dim, k % dim)]))
            .collect();
        MatrixFunction { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, r: usize, c: usize) -> &PiecewisePoly {
        &self.entries[r * self.dim + c]
    }

    pub fn eval(&self, x: f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |r, c| self.entry(r, c).eval(x))
    }

    pub fn breaks(&self) -> Vec<f64> {
        merge_grids(self.entries.iter().map(PiecewisePoly::breaks))
    }

    pub fn is_constant(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.simplify(0.0).num_pieces() == 1 && e.max_degree() == 0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.max_abs() == 0.0)
    }
}

/// `∂_t p + M(x) ∂_x p + N(x) p = 0` on one edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSystem {
    pub edge: usize,
    pub m: MatrixFunction,
    pub n: Option<MatrixFunction>,
}

impl EdgeSystem {
    pub fn new(edge: usize, m: MatrixFunction) -> Self {
        EdgeSystem { edge, m, n: None }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SignClass {
    /// Transported from `x = 0` to `x = 1`.
    Plus,
    /// Transported from `x = 1` to `x = 0`.
    Minus,
}

/// Eigenbranches and diagonalizers of one edge system.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeDiagonalization {
    pub edge: usize,
    pub dim: usize,
    /// Eigenvalue of each branch as a function of `x`, ascending at `x = 0`.
    pub eigenvalues: Vec<PiecewisePoly>,
    pub signs: Vec<SignClass>,
    /// Sample points at which the decomposition was validated.
    pub nodes: Vec<f64>,
    /// Diagonalizer `F(x)` at every node (columns are the eigenvectors).
    pub diagonalizers: Vec<DMatrix<f64>>,
    pub max_residual: f64,
    m: MatrixFunction,
}

impl EdgeDiagonalization {
    /// Eigenvalues and diagonalizer at `x`, in branch order.
    pub fn decompose_at(&self, x: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let (vals, f, _) = decompose_point(&self.m.eval(x), self.edge, x)?;
        Ok((vals, f))
    }

    pub fn diagonalizer_at(&self, x: f64) -> Result<DMatrix<f64>> {
        self.decompose_at(x).map(|(_, f)| f)
    }

    /// Riemann invariants `u = F(x)⁻¹ p`.
    pub fn to_riemann(&self, x: f64, p: &DVector<f64>) -> Result<DVector<f64>> {
        let f = self.diagonalizer_at(x)?;
        f.lu()
            .solve(p)
            .ok_or(Error::NonDiagonalizable { edge: self.edge, x })
    }

    /// Physical variables `p = F(x) u`.
    pub fn from_riemann(&self, x: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.diagonalizer_at(x)? * u)
    }

    pub fn speed(&self, branch: usize) -> PiecewisePoly {
        let s = match self.signs[branch] {
            SignClass::Plus => 1.0,
            SignClass::Minus => -1.0,
        };
        self.eigenvalues[branch].scale(s)
    }
}

/// Eigen-decomposition of a single real matrix with real eigenvalues.
/// Returns eigenvalues (ascending, repeated per multiplicity), the
/// diagonalizer and the diagonalization residual.
fn decompose_point(m: &DMatrix<f64>, edge: usize, x: f64) -> Result<(Vec<f64>, DMatrix<f64>, f64)> {
    let k = m.nrows();
    let scale = max_abs(m);
    if scale == 0.0 {
        return Err(Error::ZeroEigenvalue { edge, x });
    }
    let eig = m.complex_eigenvalues();
    if eig.iter().any(|z| z.im.abs() > 1e-8 * scale) {
        return Err(Error::NonDiagonalizable { edge, x });
    }
    let mut vals: Vec<f64> = eig.iter().map(|z| z.re).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // clusters of numerically equal eigenvalues
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for v in vals {
        match clusters.last_mut() {
            Some(c) if (v - c[c.len() - 1]).abs() <= 1e-8 * scale => c.push(v),
            _ => clusters.push(vec![v]),
        }
    }
    let mut eigenvalues = Vec::with_capacity(k);
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(k);
    for c in &clusters {
        let lambda = c.iter().sum::<f64>() / c.len() as f64;
        if lambda.abs() <= DIAG_TOL * scale {
            return Err(Error::ZeroEigenvalue { edge, x });
        }
        let shifted = m - DMatrix::identity(k, k) * lambda;
        let (null, _) = real_null_space(&shifted, 1e-7 * scale);
        if null.len() < c.len() {
            return Err(Error::NonDiagonalizable { edge, x });
        }
        let basis = canonical_basis(&null[..c.len()], 1e-12);
        if basis.len() != c.len() {
            return Err(Error::NonDiagonalizable { edge, x });
        }
        for v in basis {
            eigenvalues.push(lambda);
            columns.push(v);
        }
    }
    let f = DMatrix::from_columns(&columns);
    let f_inv = f
        .clone()
        .try_inverse()
        .ok_or(Error::NonDiagonalizable { edge, x })?;
    let lambda = DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone()));
    let residual = max_abs(&(&f_inv * m * &f - lambda));
    if residual > DIAG_TOL * scale {
        return Err(Error::NonDiagonalizable { edge, x });
    }
    Ok((eigenvalues, f, residual / scale))
}

fn chebyshev_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let u = (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64).cos();
            0.5 * (a + b) - 0.5 * (b - a) * u
        })
        .collect()
}

/// Diagonalize an edge system on `[0, 1]`, validating the decomposition at
/// `samples` Chebyshev nodes per breakpoint interval and at both endpoints.
pub fn diagonalize_edge(es: &EdgeSystem, samples: usize) -> Result<EdgeDiagonalization> {
    let samples = samples.max(1);
    let edge = es.edge;
    let breaks = es.m.breaks();
    let mut nodes = vec![0.0];
    for w in breaks.windows(2) {
        nodes.extend(chebyshev_nodes(w[0], w[1], samples));
    }
    nodes.push(1.0);

    let mut diagonalizers = Vec::with_capacity(nodes.len());
    let mut branch_values: Vec<Vec<f64>> = Vec::with_capacity(nodes.len());
    let mut max_residual: f64 = 0.0;
    for &x in &nodes {
        let (vals, f, res) = decompose_point(&es.m.eval(x), edge, x)?;
        max_residual = max_residual.max(res);
        branch_values.push(vals);
        diagonalizers.push(f);
    }
    let k = es.dim();
    let signs: Vec<SignClass> = branch_values[0]
        .iter()
        .map(|&v| if v > 0.0 { SignClass::Plus } else { SignClass::Minus })
        .collect();
    for vals in &branch_values {
        for (b, &v) in vals.iter().enumerate() {
            if (v > 0.0) != (signs[b] == SignClass::Plus) {
                return Err(Error::SignChange { edge, branch: b });
            }
        }
    }

    let eigenvalues = if es.m.is_constant() {
        branch_values[0]
            .iter()
            .map(|&v| PiecewisePoly::constant(0.0, 1.0, v))
            .collect()
    } else {
        let degree = samples.clamp(2, 12) - 1;
        let m = es.m.clone();
        (0..k)
            .map(|b| {
                let m = m.clone();
                PiecewisePoly::fit(
                    move |x| {
                        decompose_point(&m.eval(x), edge, x)
                            .map(|(v, _, _)| v[b])
                            .unwrap_or(f64::NAN)
                    },
                    &breaks,
                    degree,
                    1e-12,
                    64,
                )
            })
            .collect()
    };

    Ok(EdgeDiagonalization {
        edge,
        dim: k,
        eigenvalues,
        signs,
        nodes,
        diagonalizers,
        max_residual,
        m: es.m.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchRef {
    pub edge: usize,
    pub branch: usize,
}

/// Bijection between `(edge, branch)` pairs and the forward/backward blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relabeling {
    pub plus: Vec<BranchRef>,
    pub minus: Vec<BranchRef>,
}

impl Relabeling {
    pub fn m_plus(&self) -> usize {
        self.plus.len()
    }

    pub fn m_minus(&self) -> usize {
        self.minus.len()
    }

    pub fn lookup(&self, r: BranchRef) -> Option<(SignClass, usize)> {
        if let Some(i) = self.plus.iter().position(|&p| p == r) {
            return Some((SignClass::Plus, i));
        }
        self.minus
            .iter()
            .position(|&p| p == r)
            .map(|i| (SignClass::Minus, i))
    }

    /// Position in the global ordering `(υ, ϖ)`.
    pub fn global_index(&self, r: BranchRef) -> Option<usize> {
        self.lookup(r).map(|(s, i)| match s {
            SignClass::Plus => i,
            SignClass::Minus => self.plus.len() + i,
        })
    }

    pub fn branch_at(&self, global: usize) -> Option<BranchRef> {
        if global < self.plus.len() {
            Some(self.plus[global])
        } else {
            self.minus.get(global - self.plus.len()).copied()
        }
    }
}

/// Group Riemann invariants by transport direction, ordered by `(edge, branch)`.
pub fn relabel_riemann(g: &MetricGraph, diags: &[EdgeDiagonalization]) -> Result<Relabeling> {
    let by_edge: BTreeMap<usize, &EdgeDiagonalization> = diags.iter().map(|d| (d.edge, d)).collect();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for e in g.edges() {
        let d = by_edge.get(&e.id).ok_or_else(|| {
            Error::InvalidGraph(format!("edge {} has no diagonalization", e.id))
        })?;
        for (b, s) in d.signs.iter().enumerate() {
            let r = BranchRef { edge: e.id, branch: b };
            match s {
                SignClass::Plus => plus.push(r),
                SignClass::Minus => minus.push(r),
            }
        }
    }
    Ok(Relabeling { plus, minus })
}

/// Transport velocity of one component: either `c(x)` or its reciprocal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Velocity {
    Speed(PiecewisePoly),
    Slowness(PiecewisePoly),
}

impl Velocity {
    pub fn constant(c: f64) -> Self {
        Velocity::Speed(PiecewisePoly::constant(0.0, 1.0, c))
    }

    pub fn unit() -> Self {
        Velocity::constant(1.0)
    }

    pub fn speed_at(&self, x: f64) -> f64 {
        match self {
            Velocity::Speed(c) => c.eval(x),
            Velocity::Slowness(s) => 1.0 / s.eval(x),
        }
    }

    pub fn slowness_at(&self, x: f64) -> f64 {
        1.0 / self.speed_at(x)
    }

    fn profile(&self) -> &PiecewisePoly {
        match self {
            Velocity::Speed(p) | Velocity::Slowness(p) => p,
        }
    }

    /// Breakpoints of the profile.
    pub fn breaks(&self) -> &[f64] {
        self.profile().breaks()
    }

    /// Constant value of the speed if the profile is constant.
    pub fn constant_speed(&self) -> Option<f64> {
        let p = self.profile().simplify(0.0);
        if p.num_pieces() == 1 && p.max_degree() == 0 {
            Some(self.speed_at(0.0))
        } else {
            None
        }
    }

    pub fn is_unit(&self) -> bool {
        self.constant_speed()
            .is_some_and(|c| (c - 1.0).abs() <= 1e-12)
    }

    /// Smallest value of the profile (speed or slowness) on `[0, 1]`.
    fn profile_min(&self) -> f64 {
        let p = self.profile();
        let mut m = f64::INFINITY;
        for (i, poly) in p.pieces().iter().enumerate() {
            let h = p.breaks()[i + 1] - p.breaks()[i];
            let mut pts = vec![0.0, h];
            pts.extend(poly.derivative().roots_in(0.0, h));
            for s in pts {
                m = m.min(poly.eval(s));
            }
        }
        m
    }

    fn profile_max(&self) -> f64 {
        let p = self.profile();
        let neg = p.scale(-1.0);
        -Velocity::Speed(neg).profile_min()
    }

    pub fn min_speed(&self) -> f64 {
        match self {
            Velocity::Speed(_) => self.profile_min(),
            Velocity::Slowness(_) => 1.0 / self.profile_max(),
        }
    }

    pub fn validate(&self, component: usize) -> Result<()> {
        let min = self.profile_min();
        if min > 0.0 && min.is_finite() {
            Ok(())
        } else {
            Err(Error::NonPositiveVelocity { component, min })
        }
    }

    /// `1 / c` as a piecewise polynomial; exact unless the speed profile is
    /// non-constant, in which case it is fitted to relative accuracy `1e-14`.
    pub fn slowness_poly(&self) -> PiecewisePoly {
        match self {
            Velocity::Slowness(s) => s.clone(),
            Velocity::Speed(c) => {
                let constant = c.pieces().iter().all(|p| p.degree() == 0);
                if constant {
                    let pieces = c
                        .pieces()
                        .iter()
                        .map(|p| crate::poly::Poly::constant(1.0 / p.eval(0.0)))
                        .collect();
                    PiecewisePoly::from_parts_unchecked(c.breaks().to_vec(), pieces)
                } else {
                    let scale = 1.0 / self.profile_min();
                    let grid = c.breaks().to_vec();
                    let c = c.clone();
                    PiecewisePoly::fit(move |x| 1.0 / c.eval(x), &grid, 8, 1e-14 * scale, 64)
                }
            }
        }
    }
}

/// Canonical diagonal system with its boundary coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct PortHamiltonian {
    m_plus: usize,
    m_minus: usize,
    velocities: Vec<Velocity>,
    xi_out: DMatrix<f64>,
    xi_in: DMatrix<f64>,
    b: DMatrix<f64>,
    relabeling: Option<Relabeling>,
}

impl PortHamiltonian {
    /// System with `Ξ_out = I`, `Ξ_in = B`.
    pub fn from_boundary_matrix(
        m_plus: usize,
        m_minus: usize,
        velocities: Vec<Velocity>,
        b: DMatrix<f64>,
    ) -> Result<Self> {
        let n = m_plus + m_minus;
        PortHamiltonian::from_xi(m_plus, m_minus, velocities, DMatrix::identity(n, n), b)
    }

    pub fn from_xi(
        m_plus: usize,
        m_minus: usize,
        velocities: Vec<Velocity>,
        xi_out: DMatrix<f64>,
        xi_in: DMatrix<f64>,
    ) -> Result<Self> {
        let n = m_plus + m_minus;
        if n == 0 {
            return Err(Error::DimensionMismatch("empty system".into()));
        }
        if velocities.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} velocity profiles for {n} components",
                velocities.len()
            )));
        }
        for (name, m) in [("Xi_out", &xi_out), ("Xi_in", &xi_in)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::DimensionMismatch(format!("{name} has non-finite entries")));
            }
        }
        for (j, v) in velocities.iter().enumerate() {
            v.validate(j)?;
        }
        let rcond = rcond1(&xi_out);
        if rcond < RCOND_THRESHOLD {
            return Err(Error::SingularOutgoingMatrix { rcond });
        }
        let b = xi_out
            .clone()
            .lu()
            .solve(&xi_in)
            .ok_or(Error::SingularOutgoingMatrix { rcond })?;
        Ok(PortHamiltonian {
            m_plus,
            m_minus,
            velocities,
            xi_out,
            xi_in,
            b,
            relabeling: None,
        })
    }

    /// Unit-speed system with the given boundary matrix.
    pub fn unit(m_plus: usize, m_minus: usize, b: DMatrix<f64>) -> Result<Self> {
        let n = m_plus + m_minus;
        PortHamiltonian::from_boundary_matrix(m_plus, m_minus, vec![Velocity::unit(); n], b)
    }

    pub fn with_relabeling(mut self, r: Relabeling) -> Self {
        self.relabeling = Some(r);
        self
    }

    pub fn m_plus(&self) -> usize {
        self.m_plus
    }

    pub fn m_minus(&self) -> usize {
        self.m_minus
    }

    pub fn dim(&self) -> usize {
        self.m_plus + self.m_minus
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn xi_out(&self) -> &DMatrix<f64> {
        &self.xi_out
    }

    pub fn xi_in(&self) -> &DMatrix<f64> {
        &self.xi_in
    }

    pub fn velocities(&self) -> &[Velocity] {
        &self.velocities
    }

    pub fn relabeling(&self) -> Option<&Relabeling> {
        self.relabeling.as_ref()
    }

    pub fn sign_of(&self, j: usize) -> SignClass {
        if j < self.m_plus {
            SignClass::Plus
        } else {
            SignClass::Minus
        }
    }

    pub fn is_unit_speed(&self) -> bool {
        self.velocities.iter().all(Velocity::is_unit)
    }

    /// Same boundary coupling with every velocity replaced by 1.
    pub fn with_unit_speed(&self) -> PortHamiltonian {
        let mut out = self.clone();
        out.velocities = vec![Velocity::unit(); self.dim()];
        out
    }

    /// Human-readable component labels `u<j>+` / `u<j>-`.
    pub fn labels(&self) -> Vec<String> {
        (0..self.m_plus)
            .map(|j| format!("u{}+", j + 1))
            .chain((0..self.m_minus).map(|j| format!("u{}-", j + 1)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VertexCondition {
    pub vertex: usize,
    /// Rows act on `(p^j(v))_{j ∈ J_v}`, incident edges by ascending id.
    pub phi: DMatrix<f64>,
}

/// Build `Ξ_out`, `Ξ_in` from the vertex conditions and form `B = Ξ_out⁻¹ Ξ_in`.
///
/// Rows follow ascending vertex id, then the row order of each `Φ_v`. Columns
/// of `Ξ_out` are `(υ(0), ϖ(1))`, those of `Ξ_in` are `(υ(1), ϖ(0))`, so that
/// `Ξ_out (υ(0), ϖ(1))ᵀ = Ξ_in (υ(1), ϖ(0))ᵀ`.
pub fn assemble_boundary(
    g: &MetricGraph,
    conds: &[VertexCondition],
    diags: &[EdgeDiagonalization],
    relabeling: &Relabeling,
) -> Result<PortHamiltonian> {
    let by_edge: BTreeMap<usize, &EdgeDiagonalization> = diags.iter().map(|d| (d.edge, d)).collect();
    let mut by_vertex: BTreeMap<usize, &VertexCondition> = BTreeMap::new();
    for c in conds {
        if !g.vertices().contains(&c.vertex) {
            return Err(Error::InvalidGraph(format!(
                "condition for unknown vertex {}",
                c.vertex
            )));
        }
        if by_vertex.insert(c.vertex, c).is_some() {
            return Err(Error::InvalidGraph(format!(
                "vertex {} has more than one condition",
                c.vertex
            )));
        }
    }
    let n = relabeling.m_plus() + relabeling.m_minus();
    let mut xi_out = DMatrix::zeros(n, n);
    let mut xi_in = DMatrix::zeros(n, n);
    let mut row = 0;
    for &v in g.vertices() {
        let incident = g.incident(v);
        // (global index, outgoing?) per column of Ψ_v
        let mut cols: Vec<(usize, bool)> = Vec::new();
        let mut blocks: Vec<DMatrix<f64>> = Vec::new();
        for (e, end) in &incident {
            let d = by_edge.get(&e.id).ok_or_else(|| {
                Error::InvalidGraph(format!("edge {} has no diagonalization", e.id))
            })?;
            blocks.push(d.diagonalizer_at(end.x())?);
            for b in 0..d.dim {
                let r = BranchRef { edge: e.id, branch: b };
                let (sign, _) = relabeling.lookup(r).ok_or_else(|| {
                    Error::InvalidGraph(format!("edge {} branch {b} is not relabeled", e.id))
                })?;
                let outgoing = matches!(
                    (sign, end),
                    (SignClass::Plus, Endpoint::Tail) | (SignClass::Minus, Endpoint::Head)
                );
                cols.push((relabeling.global_index(r).unwrap(), outgoing));
            }
        }
        let n_out = cols.iter().filter(|c| c.1).count();
        if n_out == 0 {
            if by_vertex.contains_key(&v) || !cols.is_empty() {
                return Err(Error::SinkDetected { vertex: v });
            }
            continue;
        }
        let cond = by_vertex.get(&v).ok_or(Error::WrongConditionCount {
            vertex: v,
            expected: n_out,
            found: 0,
        })?;
        if cond.phi.ncols() != cols.len() {
            return Err(Error::ConditionShape {
                vertex: v,
                expected: cols.len(),
                found: cond.phi.ncols(),
            });
        }
        if cond.phi.nrows() != n_out {
            return Err(Error::WrongConditionCount {
                vertex: v,
                expected: n_out,
                found: cond.phi.nrows(),
            });
        }
        let mut f = DMatrix::zeros(cols.len(), cols.len());
        let mut off = 0;
        for blk in &blocks {
            let k = blk.nrows();
            f.view_mut((off, off), (k, k)).copy_from(blk);
            off += k;
        }
        let psi = &cond.phi * f;
        for r in 0..n_out {
            for (c, &(global, outgoing)) in cols.iter().enumerate() {
                if outgoing {
                    xi_out[(row + r, global)] = psi[(r, c)];
                } else {
                    xi_in[(row + r, global)] = -psi[(r, c)];
                }
            }
        }
        row += n_out;
    }

    let velocities: Vec<Velocity> = relabeling
        .plus
        .iter()
        .chain(&relabeling.minus)
        .map(|r| Velocity::Speed(by_edge[&r.edge].speed(r.branch)))
        .collect();
    Ok(PortHamiltonian::from_xi(
        relabeling.m_plus(),
        relabeling.m_minus(),
        velocities,
        xi_out,
        xi_in,
    )?
    .with_relabeling(relabeling.clone()))
}

/// Full pipeline from edge systems and vertex conditions to the canonical system.
pub fn build_port_hamiltonian(
    g: &MetricGraph,
    systems: &[EdgeSystem],
    conds: &[VertexCondition],
    samples: usize,
) -> Result<PortHamiltonian> {
    let mut seen = BTreeSet::new();
    for s in systems {
        if g.edge(s.edge).is_none() {
            return Err(Error::InvalidGraph(format!("system for unknown edge {}", s.edge)));
        }
        if !seen.insert(s.edge) {
            return Err(Error::InvalidGraph(format!("edge {} has two systems", s.edge)));
        }
        if s.n.as_ref().is_some_and(|n| !n.is_zero()) {
            return Err(Error::NonzeroLowerOrder { edge: s.edge });
        }
    }
    let diags = systems
        .iter()
        .map(|s| diagonalize_edge(s, samples))
        .collect::<Result<Vec<_>>>()?;
    let relabeling = relabel_riemann(g, &diags)?;
    assemble_boundary(g, conds, &diags, &relabeling)
}

/// Diagnostics of a canonical system (never fails).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub m_plus: usize,
    pub m_minus: usize,
    pub dims_consistent: bool,
    pub xi_out_rcond: f64,
    pub xi_consistency: f64,
    pub min_velocity: f64,
    pub column_sums: Vec<f64>,
    pub nonnegative: bool,
    pub stochastic: bool,
}

pub fn validate_system(ph: &PortHamiltonian) -> SystemReport {
    let n = ph.dim();
    let b = ph.b();
    let dims_consistent = b.nrows() == n
        && b.ncols() == n
        && ph.xi_out().shape() == (n, n)
        && ph.xi_in().shape() == (n, n)
        && ph.velocities().len() == n;
    let column_sums: Vec<f64> = b.column_iter().map(|c| c.sum()).collect();
    let nonnegative = b.iter().all(|&v| v >= 0.0);
    let stochastic = nonnegative && column_sums.iter().all(|s| (s - 1.0).abs() <= 1e-12);
    let xi_scale = max_abs(ph.xi_in()).max(f64::MIN_POSITIVE);
    SystemReport {
        m_plus: ph.m_plus(),
        m_minus: ph.m_minus(),
        dims_consistent,
        xi_out_rcond: rcond1(ph.xi_out()),
        xi_consistency: max_abs(&(ph.xi_out() * b - ph.xi_in())) / xi_scale,
        min_velocity: ph
            .velocities()
            .iter()
            .map(Velocity::min_speed)
            .fold(f64::INFINITY, f64::min),
        column_sums,
        nonnegative,
        stochastic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_edge_graph() -> MetricGraph {
        MetricGraph::new(
            vec![1, 2, 3],
            vec![
                Edge { id: 1, tail: 1, head: 2 },
                Edge { id: 2, tail: 2, head: 3 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn graph_validation() {
        assert!(MetricGraph::new(vec![1, 2], vec![Edge { id: 1, tail: 1, head: 1 }]).is_err());
        assert!(MetricGraph::new(
            vec![1, 2],
            vec![Edge { id: 1, tail: 1, head: 2 }, Edge { id: 2, tail: 2, head: 1 }]
        )
        .is_err());
        assert!(MetricGraph::new(vec![1, 2, 3], vec![Edge { id: 1, tail: 1, head: 2 }]).is_err());
        assert!(two_edge_graph().incident(2).len() == 2);
    }

    #[test]
    fn diagonal_matrix_diagonalizes_trivially() {
        let es = EdgeSystem::new(1, MatrixFunction::constant(&DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0])));
        let d = diagonalize_edge(&es, 4).unwrap();
        assert_eq!(d.signs, vec![SignClass::Minus, SignClass::Plus]);
        let f = d.diagonalizer_at(0.3).unwrap();
        assert!(max_abs(&(f - DMatrix::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn symmetric_swap_matrix() {
        // [[0,1],[1,0]] has eigenpairs -1 ↦ (1,-1)/√2 and 1 ↦ (1,1)/√2
        let es = EdgeSystem::new(1, MatrixFunction::constant(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])));
        let d = diagonalize_edge(&es, 3).unwrap();
        let (vals, f) = d.decompose_at(0.0).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let s = 0.5f64.sqrt();
        let expected = DMatrix::from_row_slice(2, 2, &[s, s, -s, s]);
        assert!(max_abs(&(f - expected)) < 1e-14);
        // reconstruction p = F u
        let p = DVector::from_vec(vec![0.3, -1.2]);
        let u = d.to_riemann(0.5, &p).unwrap();
        assert!((d.from_riemann(0.5, &u).unwrap() - p).amax() < 1e-14);
    }

    #[test]
    fn diagonalization_errors() {
        let jordan = EdgeSystem::new(1, MatrixFunction::constant(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])));
        assert!(matches!(diagonalize_edge(&jordan, 3), Err(Error::NonDiagonalizable { .. })));
        let singular = EdgeSystem::new(1, MatrixFunction::constant(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])));
        assert!(matches!(diagonalize_edge(&singular, 3), Err(Error::ZeroEigenvalue { .. })));
        // diag(x - 1/2, 1) changes sign at x = 1/2
        let a = PiecewisePoly::from_global(0.0, 1.0, vec![-0.5, 1.0]);
        let z = PiecewisePoly::constant(0.0, 1.0, 0.0);
        let one = PiecewisePoly::constant(0.0, 1.0, 1.0);
        let m = MatrixFunction::new(2, vec![a, z.clone(), z, one]).unwrap();
        assert!(matches!(
            diagonalize_edge(&EdgeSystem::new(1, m), 4),
            Err(Error::SignChange { .. }) | Err(Error::ZeroEigenvalue { .. })
        ));
    }

    #[test]
    fn variable_coefficients_give_fitted_branches() {
        // diag(1 + x, -2)
        let a = PiecewisePoly::from_global(0.0, 1.0, vec![1.0, 1.0]);
        let z = PiecewisePoly::constant(0.0, 1.0, 0.0);
        let b = PiecewisePoly::constant(0.0, 1.0, -2.0);
        let m = MatrixFunction::new(2, vec![a, z.clone(), z, b]).unwrap();
        let d = diagonalize_edge(&EdgeSystem::new(1, m), 5).unwrap();
        assert_eq!(d.signs, vec![SignClass::Minus, SignClass::Plus]);
        assert!((d.eigenvalues[1].eval(0.37) - 1.37).abs() < 1e-10);
        assert!((d.speed(0).eval(0.2) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_edge_identity_coupling() {
        let g = MetricGraph::new(vec![1, 2], vec![Edge { id: 1, tail: 1, head: 2 }]).unwrap();
        let es = EdgeSystem::new(1, MatrixFunction::constant(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])));
        let d = diagonalize_edge(&es, 3).unwrap();
        let relabel = relabel_riemann(&g, std::slice::from_ref(&d)).unwrap();
        assert_eq!(relabel.m_plus(), 2);
        assert_eq!(relabel.m_minus(), 0);
        // at the tail both components are outgoing: p(0) = p(1)
        let conds = [VertexCondition {
            vertex: 1,
            phi: DMatrix::identity(2, 2),
        }];
        // the head of the edge is a sink for a pure forward system
        assert!(matches!(
            assemble_boundary(&g, &conds, &[d], &relabel),
            Err(Error::SinkDetected { vertex: 2 })
        ));
    }

    #[test]
    fn relabeling_is_a_bijection() {
        let g = two_edge_graph();
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let diags: Vec<_> = [1, 2]
            .iter()
            .map(|&e| diagonalize_edge(&EdgeSystem::new(e, MatrixFunction::constant(&m)), 2).unwrap())
            .collect();
        let r = relabel_riemann(&g, &diags).unwrap();
        assert_eq!((r.m_plus(), r.m_minus()), (2, 2));
        for gi in 0..4 {
            let br = r.branch_at(gi).unwrap();
            assert_eq!(r.global_index(br), Some(gi));
        }
    }

    #[test]
    fn report_on_identity() {
        let ph = PortHamiltonian::unit(2, 0, DMatrix::identity(2, 2)).unwrap();
        let rep = validate_system(&ph);
        assert!(rep.stochastic && rep.dims_consistent);
        assert_eq!(rep.column_sums, vec![1.0, 1.0]);
        assert_eq!(rep.min_velocity, 1.0);
    }

    #[test]
    fn singular_outgoing_matrix_rejected() {
        let n = 2;
        let r = PortHamiltonian::from_xi(
            1,
            1,
            vec![Velocity::unit(); n],
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            DMatrix::identity(2, 2),
        );
        assert!(matches!(r, Err(Error::SingularOutgoingMatrix { .. })));
    }

    #[test]
    fn nonpositive_velocity_rejected() {
        let r = PortHamiltonian::from_boundary_matrix(
            1,
            0,
            vec![Velocity::constant(-1.0)],
            DMatrix::identity(1, 1),
        );
        assert!(matches!(r, Err(Error::NonPositiveVelocity { .. })));
    }
}
