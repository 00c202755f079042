//! Independent solution paths used to cross-check the explicit formula:
//! a CFL-1 upwind stepper, the closed-form resolvent, a Laplace-transform
//! quadrature, a characteristics tracer for variable speeds, and sample
//! comparison.
//!
//! The stepper and the tracer do not touch the power cache or the shifted
//! state construction of [`crate::semigroup`].

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_model::{PortHamiltonian, Velocity};
use crate::linalg::{norm1, norm_inf, C64};
use crate::poly::{gauss_legendre, merge_grids, PiecewisePoly, Poly};
use crate::semigroup::Semigroup;
use crate::state::{Samples, StateFunction};

/// Cell values of a unit-speed solution on a uniform grid with `Δt = Δx = 1/N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSolution {
    pub n: usize,
    pub m_plus: usize,
    /// `values[component][cell]`.
    pub values: Vec<Vec<f64>>,
    pub steps: u64,
}

impl GridSolution {
    /// Cell averages of `f`.
    pub fn from_averages(f: &StateFunction, n: usize) -> Self {
        let values = f
            .components()
            .iter()
            .map(|c| {
                (0..n)
                    .map(|k| {
                        let a = k as f64 / n as f64;
                        let b = (k + 1) as f64 / n as f64;
                        c.restrict(a, b).integral() * n as f64
                    })
                    .collect()
            })
            .collect();
        GridSolution {
            n,
            m_plus: f.n_plus(),
            values,
            steps: 0,
        }
    }

    /// Point values of `f` at the left end of each cell.
    pub fn from_left_points(f: &StateFunction, n: usize) -> Self {
        let values = f
            .components()
            .iter()
            .map(|c| (0..n).map(|k| c.eval(k as f64 / n as f64)).collect())
            .collect();
        GridSolution {
            n,
            m_plus: f.n_plus(),
            values,
            steps: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 / self.n as f64
    }

    /// Advance one step: read all outflow cells, apply `B`, shift, then write
    /// the inflow cells.
    pub fn step(&mut self, b: &DMatrix<f64>) {
        let n = self.n;
        let mp = self.m_plus;
        let outflow = DVector::from_iterator(
            self.dim(),
            self.values
                .iter()
                .enumerate()
                .map(|(j, v)| if j < mp { v[n - 1] } else { v[0] }),
        );
        let inflow = b * outflow;
        self.values.par_iter_mut().enumerate().for_each(|(j, v)| {
            if j < mp {
                v.rotate_right(1);
                v[0] = inflow[j];
            } else {
                v.rotate_left(1);
                v[n - 1] = inflow[j];
            }
        });
        self.steps += 1;
    }

    pub fn midpoints(&self) -> Vec<f64> {
        Samples::midpoints(self.n)
    }

    pub fn samples(&self) -> Samples {
        Samples {
            xs: self.midpoints(),
            values: self.values.clone(),
        }
    }

    /// The piecewise-constant function with these cell values.
    pub fn to_state(&self) -> StateFunction {
        let comps = self
            .values
            .iter()
            .map(|v| PiecewisePoly::step_unit(v))
            .collect();
        StateFunction::new(self.m_plus, comps).expect("unit-interval components")
    }
}

/// Number of `1/n` steps in `t`, if `t` is a multiple of the step.
pub fn aligned_steps(t: f64, n: usize) -> Result<u64> {
    let k = t * n as f64;
    let r = k.round();
    if t.is_nan() || t < 0.0 || (k - r).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::TimeNotAligned {
            t,
            dt: 1.0 / n as f64,
        });
    }
    Ok(r as u64)
}

/// CFL-1 upwind solution from cell averages of `f0` up to `t_final`.
pub fn upwind_solve(
    ph: &PortHamiltonian,
    f0: &StateFunction,
    t_final: f64,
    n: usize,
) -> Result<GridSolution> {
    let grid = GridSolution::from_averages(f0, n);
    upwind_advance(ph, grid, t_final)
}

/// Continue a grid solution until `t_final`.
pub fn upwind_advance(
    ph: &PortHamiltonian,
    mut grid: GridSolution,
    t_final: f64,
) -> Result<GridSolution> {
    if !ph.is_unit_speed() {
        return Err(Error::NotUnitSpeed);
    }
    if grid.dim() != ph.dim() || grid.m_plus != ph.m_plus() {
        return Err(Error::DimensionMismatch(format!(
            "grid has {} components, system has {}",
            grid.dim(),
            ph.dim()
        )));
    }
    let target = aligned_steps(t_final, grid.n)?;
    if target < grid.steps {
        return Err(Error::NegativeTime(t_final - grid.time()));
    }
    while grid.steps < target {
        grid.step(ph.b());
    }
    Ok(grid)
}

/// One polynomial piece of a resolvent component on `[a, b)`:
/// `P(s) + k·e^{-λs}` for forward components and `P(s) + k·e^{λ(s-h)}` for
/// backward ones, `s = x - a`, `h = b - a`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpPolyPiece {
    pub a: f64,
    pub b: f64,
    pub poly: Vec<C64>,
    pub k: C64,
}

fn ceval(p: &[C64], s: f64) -> C64 {
    p.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

fn cderivative(p: &[C64]) -> Vec<C64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

impl ExpPolyPiece {
    fn eval(&self, x: f64, lambda: C64, forward: bool) -> C64 {
        let s = x - self.a;
        let e = if forward {
            (-lambda * s).exp()
        } else {
            (lambda * (s - (self.b - self.a))).exp()
        };
        ceval(&self.poly, s) + self.k * e
    }
}

/// `R(λ, A) f` for a unit-speed system in closed form.
#[derive(Clone, Debug)]
pub struct ResolventSolution {
    pub lambda: C64,
    pub m_plus: usize,
    pub components: Vec<Vec<ExpPolyPiece>>,
    pub terms: usize,
}

impl ResolventSolution {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, j: usize, x: f64) -> C64 {
        let pieces = &self.components[j];
        let i = pieces
            .iter()
            .rposition(|p| p.a <= x)
            .unwrap_or(0)
            .min(pieces.len() - 1);
        pieces[i].eval(x, self.lambda, j < self.m_plus)
    }

    fn left_limit(&self, j: usize, i: usize) -> C64 {
        let p = &self.components[j][i];
        p.eval(p.b, self.lambda, j < self.m_plus)
    }

    fn right_value(&self, j: usize, i: usize) -> C64 {
        let p = &self.components[j][i];
        p.eval(p.a, self.lambda, j < self.m_plus)
    }

    /// Boundary traces `(u⁺(0), u⁻(1))` and `(u⁺(1), u⁻(0))`.
    fn traces(&self) -> (DVector<C64>, DVector<C64>) {
        let n = self.dim();
        let mut inflow = DVector::zeros(n);
        let mut outflow = DVector::zeros(n);
        for j in 0..n {
            let last = self.components[j].len() - 1;
            let (at0, at1) = (self.right_value(j, 0), self.left_limit(j, last));
            if j < self.m_plus {
                inflow[j] = at0;
                outflow[j] = at1;
            } else {
                inflow[j] = at1;
                outflow[j] = at0;
            }
        }
        (inflow, outflow)
    }

    /// `‖(λ - A)u - f‖₁` plus interior jumps and the boundary defect, where
    /// `A` acts as `-∂x` on forward and `∂x` on backward components.
    pub fn residual(&self, f: &StateFunction, b: &DMatrix<f64>) -> f64 {
        let (gx, gw) = gauss_legendre(8);
        let mut total = 0.0;
        for j in 0..self.dim() {
            let sigma = if j < self.m_plus { 1.0 } else { -1.0 };
            for (i, piece) in self.components[j].iter().enumerate() {
                let d = cderivative(&piece.poly);
                let h = piece.b - piece.a;
                let mut acc = 0.0;
                for (&u, &w) in gx.iter().zip(&gw) {
                    let s = 0.5 * h * (u + 1.0);
                    let r = self.lambda * ceval(&piece.poly, s) + ceval(&d, s) * sigma
                        - f.component(j).eval(piece.a + s);
                    acc += w * r.norm();
                }
                total += 0.5 * h * acc;
                if i > 0 {
                    total += (self.left_limit(j, i - 1) - self.right_value(j, i)).norm();
                }
            }
        }
        let (inflow, outflow) = self.traces();
        let bc = b.map(|v| C64::new(v, 0.0));
        total + (inflow - bc * outflow).iter().map(|v| v.norm()).sum::<f64>()
    }
}

/// `P` with `λP + σP' = p` for a real polynomial `p`.
fn particular(p: &Poly, lambda: C64, sigma: f64) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); p.coeffs().len().max(1)];
    let mut d = p.clone();
    let mut factor = C64::new(1.0, 0.0) / lambda;
    loop {
        for (o, &c) in out.iter_mut().zip(d.coeffs()) {
            *o += factor * c;
        }
        if d.is_zero() || d.degree() == 0 {
            break;
        }
        d = d.derivative();
        factor *= -sigma / lambda;
    }
    out
}

fn spectral_norm(b: &DMatrix<f64>) -> f64 {
    b.clone().svd(false, false).singular_values.max()
}

/// `R(λ, A) f = (λ - A)⁻¹ f` by local integration and the Neumann series
/// `Σ (e^{-λ} B)ⁿ B w` for the inflow values.
pub fn resolvent_apply(
    ph: &PortHamiltonian,
    lambda: C64,
    f: &StateFunction,
) -> Result<ResolventSolution> {
    if !ph.is_unit_speed() {
        return Err(Error::NotUnitSpeed);
    }
    if f.dim() != ph.dim() || f.n_plus() != ph.m_plus() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} components, system has {}",
            f.dim(),
            ph.dim()
        )));
    }
    let b = ph.b();
    let norm = norm1(b).min(norm_inf(b)).min(spectral_norm(b));
    let ratio = norm * (-lambda.re).exp();
    if ratio.is_nan() || ratio >= 1.0 {
        return Err(Error::SeriesDiverges { ratio });
    }
    let mp = ph.m_plus();
    let zero = C64::new(0.0, 0.0);
    let mut components = Vec::with_capacity(f.dim());
    let mut w = DVector::zeros(f.dim());
    for (j, comp) in f.components().iter().enumerate() {
        let forward = j < mp;
        let sigma = if forward { 1.0 } else { -1.0 };
        let mut pieces: Vec<ExpPolyPiece> = comp
            .pieces()
            .iter()
            .enumerate()
            .map(|(i, p)| ExpPolyPiece {
                a: comp.breaks()[i],
                b: comp.breaks()[i + 1],
                poly: particular(p, lambda, sigma),
                k: zero,
            })
            .collect();
        // local solution with zero inflow, matched continuously across pieces
        let mut edge = zero;
        if forward {
            for p in pieces.iter_mut() {
                let h = p.b - p.a;
                p.k = edge - ceval(&p.poly, 0.0);
                edge = ceval(&p.poly, h) + p.k * (-lambda * h).exp();
            }
        } else {
            for p in pieces.iter_mut().rev() {
                let h = p.b - p.a;
                p.k = edge - ceval(&p.poly, h);
                edge = ceval(&p.poly, 0.0) + p.k * (-lambda * h).exp();
            }
        }
        w[j] = edge;
        components.push(pieces);
    }
    let bc = b.map(|v| C64::new(v, 0.0));
    let decay = (-lambda).exp();
    let mut term = &bc * &w;
    let mut z = DVector::zeros(f.dim());
    let mut terms = 0;
    loop {
        z += &term;
        terms += 1;
        let size = term.iter().map(|v| v.norm()).sum::<f64>();
        let scale = z.iter().map(|v| v.norm()).sum::<f64>().max(1.0);
        if size <= 1e-14 * scale || terms > 100_000 {
            break;
        }
        term = (&bc * term) * decay;
    }
    for (j, pieces) in components.iter_mut().enumerate() {
        for p in pieces.iter_mut() {
            p.k += if j < mp {
                z[j] * (-lambda * p.a).exp()
            } else {
                z[j] * (lambda * (p.b - 1.0)).exp()
            };
        }
    }
    Ok(ResolventSolution {
        lambda,
        m_plus: mp,
        components,
        terms,
    })
}

/// Breakpoints of `f` seen from both orientations, reduced modulo one.
fn kink_phases(f: &StateFunction) -> Vec<f64> {
    let mut out = vec![0.0];
    for (k, c) in f.components().iter().enumerate() {
        for &b in c.breaks() {
            let b = if k < f.n_plus() { b } else { 1.0 - b };
            out.push(b.rem_euclid(1.0));
        }
    }
    out
}

/// Time horizon `T` with `e^{-Re λ T} sup|G(t)f| / Re λ ≤ tol`.
pub fn laplace_horizon(sg: &mut Semigroup, f: &StateFunction, lambda: C64, tol: f64) -> f64 {
    let fmax = f.max_abs().max(f64::MIN_POSITIVE);
    let mut sup = fmax;
    let mut t = 1u64;
    loop {
        sup = sup.max(fmax * norm_inf(sg.power(t)));
        if (-lambda.re * t as f64).exp() * sup / lambda.re <= tol || t > 10_000 {
            return t as f64;
        }
        t += 1;
    }
}

/// `∫₀ᵀ e^{-λt} (G(t)f)(x) dt` by Gauss-Legendre quadrature between the
/// kinks of the integrand.
pub fn laplace_transform(
    sg: &mut Semigroup,
    f: &StateFunction,
    lambda: C64,
    x: f64,
    horizon: f64,
) -> Result<Vec<C64>> {
    let (gx, gw) = gauss_legendre(12);
    let mut phases = vec![0.0];
    for xr in [x, 1.0 - x] {
        for beta in kink_phases(f) {
            phases.push((xr - beta).rem_euclid(1.0));
        }
    }
    phases.push(1.0);
    let phases = merge_grids([phases.as_slice()]);
    let mut acc = vec![C64::new(0.0, 0.0); f.dim()];
    let periods = horizon.ceil() as u64;
    for k in 0..periods {
        for w in phases.windows(2) {
            let (a, b) = (k as f64 + w[0], k as f64 + w[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (&u, &wt) in gx.iter().zip(&gw) {
                let t = mid + half * u;
                let e = (-lambda * t).exp() * (wt * half);
                for (o, v) in acc.iter_mut().zip(sg.eval_point(f, t, x)?) {
                    *o += e * v;
                }
            }
        }
    }
    Ok(acc)
}

/// `∫₀¹ Σ_j |Lf_j(x) - R(λ)f_j(x)| dx` with the Laplace transform integrated
/// up to the horizon for `tol`.
pub fn laplace_resolvent_l1(
    sg: &mut Semigroup,
    f: &StateFunction,
    res: &ResolventSolution,
    tol: f64,
) -> Result<f64> {
    let horizon = laplace_horizon(sg, f, res.lambda, tol);
    let mut grid: Vec<f64> = vec![0.0, 1.0];
    for c in f.components() {
        for &b in c.breaks() {
            grid.push(b);
            grid.push(1.0 - b);
        }
    }
    let grid = merge_grids([grid.as_slice()]);
    let (gx, gw) = gauss_legendre(8);
    let mut total = 0.0;
    for w in grid.windows(2) {
        let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (&u, &wt) in gx.iter().zip(&gw) {
            let x = mid + half * u;
            let lt = laplace_transform(sg, f, res.lambda, x, horizon)?;
            let diff: f64 = lt
                .iter()
                .enumerate()
                .map(|(j, v)| (v - res.eval(j, x)).norm())
                .sum();
            total += wt * half * diff;
        }
    }
    Ok(total)
}

/// Pointwise solution of a variable-speed system by following characteristics
/// backwards to the initial line or to a vertex.
#[derive(Clone, Debug)]
pub struct CharacteristicsTracer {
    m_plus: usize,
    b: DMatrix<f64>,
    velocities: Vec<Velocity>,
    /// Traverse time from `0` to each velocity breakpoint.
    cumulative: Vec<Vec<f64>>,
    nodes: (Vec<f64>, Vec<f64>),
}

impl CharacteristicsTracer {
    pub fn new(ph: &PortHamiltonian) -> Result<Self> {
        for (j, v) in ph.velocities().iter().enumerate() {
            v.validate(j)?;
        }
        let nodes = gauss_legendre(16);
        let mut tracer = CharacteristicsTracer {
            m_plus: ph.m_plus(),
            b: ph.b().clone(),
            velocities: ph.velocities().to_vec(),
            cumulative: Vec::new(),
            nodes,
        };
        tracer.cumulative = (0..tracer.velocities.len())
            .map(|j| {
                let br = tracer.velocities[j].breaks();
                let mut acc = vec![0.0];
                for w in br.windows(2) {
                    let last = *acc.last().unwrap();
                    acc.push(last + tracer.slowness_integral(j, w[0], w[1]));
                }
                acc
            })
            .collect();
        Ok(tracer)
    }

    fn slowness_integral(&self, j: usize, a: f64, b: f64) -> f64 {
        let (x, w) = &self.nodes;
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        x.iter()
            .zip(w)
            .map(|(&u, &wt)| wt / self.velocities[j].speed_at(mid + half * u))
            .sum::<f64>()
            * half
    }

    /// Time to travel from `0` to `x` along component `j`.
    pub fn travel(&self, j: usize, x: f64) -> f64 {
        let br = self.velocities[j].breaks();
        let i = br.partition_point(|&b| b <= x).clamp(1, br.len() - 1) - 1;
        self.cumulative[j][i] + self.slowness_integral(j, br[i], x)
    }

    /// Position reached from `0` after travel time `s`, by bisection.
    pub fn position(&self, j: usize, s: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        if s <= 0.0 {
            return 0.0;
        }
        if s >= self.travel(j, 1.0) {
            return 1.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.travel(j, mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Value of component `j` at `(t, x)`, continuous from the right in `x`.
    pub fn value(&self, f: &StateFunction, j: usize, t: f64, x: f64) -> f64 {
        let xi = if j < self.m_plus {
            self.travel(j, x) - t
        } else {
            self.travel(j, x) + t
        };
        self.value_on(f, j, xi, 1.0)
    }

    /// Value on the characteristic `ξ = L_j(x) ∓ t` of component `j`, taken as
    /// the one-sided limit from the `side` direction in `ξ`. Along `x = 0` or
    /// `x = 1`, `ξ` runs backwards in time for forward components.
    fn value_on(&self, f: &StateFunction, j: usize, xi: f64, side: f64) -> f64 {
        const SNAP: f64 = 1e-11;
        let total = self.travel(j, 1.0);
        let (initial, entry_time, time_side) = if j < self.m_plus {
            (xi > SNAP || (xi >= -SNAP && side > 0.0), -xi, -side)
        } else {
            let d = xi - total;
            (d < -SNAP || (d <= SNAP && side < 0.0), d, side)
        };
        if initial {
            let x = self.position(j, xi.clamp(0.0, total));
            return f.component(j).eval_side(x, side, SNAP);
        }
        let s = if entry_time.abs() <= SNAP { 0.0 } else { entry_time };
        let mut v = 0.0;
        for k in 0..self.b.ncols() {
            let bjk = self.b[(j, k)];
            if bjk != 0.0 {
                // outflow of `k` at time `s`
                v += if k < self.m_plus {
                    bjk * self.value_on(f, k, self.travel(k, 1.0) - s, -time_side)
                } else {
                    bjk * self.value_on(f, k, s, time_side)
                };
            }
        }
        v
    }

    pub fn sample(&self, f: &StateFunction, t: f64, xs: &[f64]) -> Samples {
        let values = (0..f.dim())
            .map(|j| xs.iter().map(|&x| self.value(f, j, t, x)).collect())
            .collect();
        Samples {
            xs: xs.to_vec(),
            values,
        }
    }

    /// `‖g - G(t)f‖₁`, integrated between the breakpoints of `g`.
    pub fn l1_distance(&self, f: &StateFunction, t: f64, g: &StateFunction) -> f64 {
        let (gx, gw) = gauss_legendre(8);
        let mut total = 0.0;
        for (j, c) in g.components().iter().enumerate() {
            for w in c.breaks().windows(2) {
                let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                for (&u, &wt) in gx.iter().zip(&gw) {
                    let x = mid + half * u;
                    total += wt * half * (c.eval(x) - self.value(f, j, t, x)).abs();
                }
            }
        }
        total
    }
}

/// Difference metrics between two sampled solutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub p: f64,
    pub lp: f64,
    pub max: f64,
    pub per_component: Vec<f64>,
}

/// Quadrature weights of the cells around each sample of `[0, 1]`.
fn cell_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { 0.5 * (xs[i - 1] + xs[i]) };
            let right = if i + 1 == n { 1.0 } else { 0.5 * (xs[i] + xs[i + 1]) };
            right - left
        })
        .collect()
}

pub fn compare(a: &Samples, b: &Samples, p: f64) -> Result<ErrorMetrics> {
    if a.xs.len() != b.xs.len()
        || a.dim() != b.dim()
        || a.xs.iter().zip(&b.xs).any(|(x, y)| (x - y).abs() > 1e-15)
    {
        return Err(Error::GridMismatch);
    }
    let w = cell_weights(&a.xs);
    let mut max: f64 = 0.0;
    let mut per_component = Vec::with_capacity(a.dim());
    let mut sum = 0.0;
    for (u, v) in a.values.iter().zip(&b.values) {
        let mut s = 0.0;
        let mut m: f64 = 0.0;
        for ((x, y), wi) in u.iter().zip(v).zip(&w) {
            let d = (x - y).abs();
            m = m.max(d);
            s += wi * d.powf(p);
        }
        max = max.max(m);
        sum += s;
        per_component.push(if p.is_infinite() { m } else { s.powf(1.0 / p) });
    }
    let lp = if p.is_infinite() { max } else { sum.powf(1.0 / p) };
    Ok(ErrorMetrics {
        p,
        lp,
        max,
        per_component,
    })
}
