//! Reduction of variable transport velocities to unit speed.
//!
//! Each component is re-parametrized by its traverse time
//! `L_j(x) = ∫₀ˣ ds / c_j(s)`. When all `c·L_j(1) = l_j` are integers, edge
//! `j` is cut into `l_j` unit pieces and the solution satisfies
//! `G(t) = Q⁻¹ 𝒢(ct) Q` with `𝒢` the unit-speed semigroup of the subdivided
//! system.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_model::{PortHamiltonian, SignClass};
use crate::poly::{merge_grids, PiecewisePoly, Poly, BREAK_EPS};
use crate::semigroup::Semigroup;
use crate::state::StateFunction;

/// Integrality tolerance for `c·L_j(1)`.
pub const INTEGRALITY_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_DENOMINATOR: u64 = 1_000_000;
/// Accuracy of compositions that cannot be formed exactly.
pub const REFIT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraverseTimeTable {
    /// `L_j` as a continuous increasing piecewise polynomial on `[0, 1]`.
    pub maps: Vec<PiecewisePoly>,
    pub totals: Vec<f64>,
    pub c: Option<f64>,
    /// `l_j = c·L_j(1)`, once `c` is known.
    pub multiples: Vec<usize>,
}

impl TraverseTimeTable {
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// `ℓ = Σ l_j`.
    pub fn total_multiple(&self) -> usize {
        self.multiples.iter().sum()
    }

    pub fn eval(&self, j: usize, x: f64) -> f64 {
        self.maps[j].eval(x)
    }

    /// `L_j⁻¹(s)` for `s ∈ [0, L_j(1)]` by safeguarded Newton iteration.
    pub fn inverse(&self, j: usize, s: f64) -> f64 {
        invert_monotone(&self.maps[j], s)
    }

    fn reference(&self) -> Result<(f64, &[usize])> {
        match self.c {
            Some(c) if self.multiples.len() == self.maps.len() => Ok((c, &self.multiples)),
            _ => Err(Error::RationalDependenceViolated(
                "reference time has not been determined".into(),
            )),
        }
    }

    /// Whether `L_j` is affine on each piece, so that compositions are exact.
    fn is_piecewise_linear(&self, j: usize) -> bool {
        self.maps[j].max_degree() <= 1
    }
}

fn invert_monotone(f: &PiecewisePoly, s: f64) -> f64 {
    let (mut lo, mut hi) = (f.start(), f.end());
    if s <= f.eval(lo) {
        return lo;
    }
    if s >= f.eval(hi) {
        return hi;
    }
    let mut x = lo + (hi - lo) * (s - f.eval(lo)) / (f.eval(hi) - f.eval(lo));
    for _ in 0..200 {
        let v = f.eval(x) - s;
        if v == 0.0 {
            return x;
        }
        if v > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = f.eval_derivative(x);
        let newton = x - v / d;
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * hi.abs().max(1.0) || v.abs() <= 1e-16 {
            break;
        }
    }
    x
}

/// Traverse-time maps of every component of `ph`.
pub fn traverse_times(ph: &PortHamiltonian) -> Result<TraverseTimeTable> {
    let mut maps = Vec::with_capacity(ph.dim());
    let mut totals = Vec::with_capacity(ph.dim());
    for (j, v) in ph.velocities().iter().enumerate() {
        v.validate(j)?;
        let l = v.slowness_poly().antiderivative();
        // monotonicity: the slowness is positive on every piece
        if l.breaks().windows(2).any(|w| l.eval(w[1]) <= l.eval(w[0])) {
            return Err(Error::NonPositiveVelocity {
                component: j,
                min: v.min_speed(),
            });
        }
        totals.push(l.eval(1.0));
        maps.push(l);
    }
    Ok(TraverseTimeTable {
        maps,
        totals,
        c: None,
        multiples: Vec::new(),
    })
}

/// Best rational approximation `p/q` of `x > 0` with `q ≤ max_den`.
fn rationalize(x: f64, max_den: u64) -> (u64, u64) {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a > u64::MAX as f64 / 4.0 {
            break;
        }
        let a = a as u64;
        let q2 = a.saturating_mul(q1).saturating_add(q0);
        if q2 > max_den {
            break;
        }
        let p2 = a.saturating_mul(p1).saturating_add(p0);
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a as f64;
        if frac.abs() < 1e-15 || (p1 as f64 / q1 as f64 - x).abs() <= 1e-15 * x {
            break;
        }
        r = 1.0 / frac;
    }
    (p1, q1)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Find `c` with `c·L_j(1) ∈ ℕ` for all `j`; the smallest such `c` unless a
/// hint is given, which is then only verified.
pub fn find_reference_time(
    tt: &TraverseTimeTable,
    c_hint: Option<f64>,
    max_denominator: u64,
) -> Result<TraverseTimeTable> {
    let check = |c: f64| -> Result<Vec<usize>> {
        tt.totals
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let v = c * t;
                let r = v.round();
                if r < 1.0 || (v - r).abs() > INTEGRALITY_TOL {
                    Err(Error::RationalDependenceViolated(format!(
                        "c = {c} gives c·L_{}(1) = {v}, not a positive integer",
                        j + 1
                    )))
                } else {
                    Ok(r as usize)
                }
            })
            .collect()
    };
    let c = match c_hint {
        Some(c) => c,
        None => {
            // T_j / T_1 = p_j / q_j in lowest terms; l_1 = c T_1 must be a
            // multiple of every q_j
            let t1 = tt.totals[0];
            let mut lcm: u64 = 1;
            for &t in &tt.totals {
                let (p, q) = rationalize(t / t1, max_denominator);
                if q == 0 || p == 0 {
                    return Err(Error::RationalDependenceViolated(format!(
                        "traverse time ratio {} has no rational approximation",
                        t / t1
                    )));
                }
                lcm = lcm / gcd(lcm, q) * q;
                if lcm > max_denominator {
                    return Err(Error::RationalDependenceViolated(format!(
                        "common denominator exceeds {max_denominator}"
                    )));
                }
            }
            lcm as f64 / t1
        }
    };
    let multiples = check(c)?;
    Ok(TraverseTimeTable {
        c: Some(c),
        multiples,
        ..tt.clone()
    })
}

/// One sub-edge `(sign, j, i)`: component `j` within its sign block, `i ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubEdge {
    pub sign: SignClass,
    pub component: usize,
    pub piece: usize,
}

#[derive(Clone, Debug)]
pub struct SubdividedSystem {
    /// Unit-speed system with `ℓ` components and boundary matrix `B̃`.
    pub unit: PortHamiltonian,
    pub index: Vec<SubEdge>,
    pub c: f64,
    pub multiples: Vec<usize>,
    m_plus: usize,
}

impl SubdividedSystem {
    pub fn b_tilde(&self) -> &DMatrix<f64> {
        self.unit.b()
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    /// Flat position of `(sign, j, i)`; `j` is 0-based within the sign block,
    /// `i` is 1-based.
    pub fn flat(&self, sign: SignClass, j: usize, i: usize) -> usize {
        self.index
            .iter()
            .position(|e| e.sign == sign && e.component == j && e.piece == i)
            .expect("sub-edge exists")
    }

    /// Source component (global index) of sub-edge `k`.
    pub fn source_component(&self, k: usize) -> usize {
        let e = self.index[k];
        match e.sign {
            SignClass::Plus => e.component,
            SignClass::Minus => self.m_plus + e.component,
        }
    }
}

/// Cut every component into `l_j` unit pieces and build `B̃`.
pub fn subdivide(ph: &PortHamiltonian, tt: &TraverseTimeTable) -> Result<SubdividedSystem> {
    let (c, ls) = tt.reference()?;
    let (mp, mm) = (ph.m_plus(), ph.m_minus());
    let mut index = Vec::new();
    for (sign, range) in [(SignClass::Plus, 0..mp), (SignClass::Minus, mp..mp + mm)] {
        for g in range {
            let j = if sign == SignClass::Plus { g } else { g - mp };
            for i in 1..=ls[g] {
                index.push(SubEdge {
                    sign,
                    component: j,
                    piece: i,
                });
            }
        }
    }
    let ell = index.len();
    let pos = |sign: SignClass, j: usize, i: usize| {
        index
            .iter()
            .position(|e| e.sign == sign && e.component == j && e.piece == i)
            .unwrap()
    };
    let global = |g: usize| -> (SignClass, usize) {
        if g < mp {
            (SignClass::Plus, g)
        } else {
            (SignClass::Minus, g - mp)
        }
    };
    let b = ph.b();
    let mut bt = DMatrix::zeros(ell, ell);
    for g in 0..mp + mm {
        let (sign, j) = global(g);
        let first = pos(sign, j, 1);
        for h in 0..mp + mm {
            let (sk, k) = global(h);
            bt[(first, pos(sk, k, ls[h]))] = b[(g, h)];
        }
        for i in 2..=ls[g] {
            bt[(pos(sign, j, i), pos(sign, j, i - 1))] = 1.0;
        }
    }
    let n_plus = index.iter().filter(|e| e.sign == SignClass::Plus).count();
    let unit = PortHamiltonian::unit(n_plus, ell - n_plus, bt)?;
    Ok(SubdividedSystem {
        unit,
        index,
        c,
        multiples: ls.to_vec(),
        m_plus: mp,
    })
}

/// `f ∘ φ` on `[a, b)` where `φ` is affine with `φ(a) = x0`, slope `k > 0`.
fn compose_affine(f: &PiecewisePoly, a: f64, b: f64, x0: f64, k: f64) -> PiecewisePoly {
    let lo = x0.clamp(f.start(), f.end());
    let hi = (x0 + k * (b - a)).clamp(f.start(), f.end());
    if hi - lo <= 1e-15 {
        return PiecewisePoly::constant(a, b, f.eval(lo));
    }
    let g = f.restrict(lo, hi);
    let mut breaks = vec![a];
    let mut pieces: Vec<Poly> = Vec::new();
    for (i, p) in g.pieces().iter().enumerate() {
        let end = if i + 1 == g.num_pieces() {
            b
        } else {
            a + (g.breaks()[i + 1] - x0) / k
        };
        if end - breaks.last().unwrap() <= BREAK_EPS && i + 1 < g.num_pieces() {
            continue;
        }
        pieces.push(p.scale_arg(k));
        breaks.push(end);
    }
    PiecewisePoly::from_parts_unchecked(breaks, pieces)
}

/// `y ↦ f(L⁻¹(α + β y))` on `[0, 1)`.
fn compose_with_inverse(
    tt: &TraverseTimeTable,
    j: usize,
    f: &PiecewisePoly,
    alpha: f64,
    beta: f64,
) -> PiecewisePoly {
    let l = &tt.maps[j];
    let y_of_s = |s: f64| ((s - alpha) / beta).clamp(0.0, 1.0);
    // breakpoints of f and of L pulled back to y
    let mut grid: Vec<f64> = vec![0.0, 1.0];
    for &x in f.breaks().iter().chain(l.breaks()) {
        let y = y_of_s(l.eval(x));
        if y > 0.0 && y < 1.0 {
            grid.push(y);
        }
    }
    let grid = merge_grids([grid.as_slice()]);
    if tt.is_piecewise_linear(j) {
        let mut out: Option<PiecewisePoly> = None;
        for w in grid.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let x0 = tt.inverse(j, alpha + beta * w[0]);
            let slope = beta / l.eval_derivative(tt.inverse(j, alpha + beta * mid));
            let piece = compose_affine(f, w[0], w[1], x0, slope);
            out = Some(match out {
                None => piece,
                Some(acc) => acc.concat(&piece),
            });
        }
        out.expect("nonempty grid")
    } else {
        let f = f.clone();
        PiecewisePoly::fit(
            |y| f.eval(tt.inverse(j, alpha + beta * y)),
            &grid,
            3,
            REFIT_TOL,
            64,
        )
    }
}

/// `x ↦ g(c L(x) - shift)` on `[x_a, x_b)`, the piece of `[0, 1)` on which
/// `c L(x) - shift ∈ [0, 1)`.
fn compose_with_map(
    tt: &TraverseTimeTable,
    j: usize,
    g: &PiecewisePoly,
    c: f64,
    shift: f64,
    xa: f64,
    xb: f64,
) -> PiecewisePoly {
    let l = &tt.maps[j];
    let mut grid = vec![xa, xb];
    for &y in g.breaks() {
        let x = tt.inverse(j, (y + shift) / c);
        if x > xa && x < xb {
            grid.push(x);
        }
    }
    grid.extend(l.breaks().iter().copied().filter(|&x| x > xa && x < xb));
    let grid = merge_grids([grid.as_slice()]);
    if tt.is_piecewise_linear(j) {
        let mut out: Option<PiecewisePoly> = None;
        for w in grid.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let y0 = (c * l.eval(w[0]) - shift).clamp(0.0, 1.0);
            let slope = c * l.eval_derivative(mid);
            let piece = compose_affine(g, w[0], w[1], y0, slope);
            out = Some(match out {
                None => piece,
                Some(acc) => acc.concat(&piece),
            });
        }
        out.expect("nonempty grid")
    } else {
        let g = g.clone();
        PiecewisePoly::fit(|x| g.eval(c * l.eval(x) - shift), &grid, 3, REFIT_TOL, 64)
    }
}

/// `Q f`: the state of the subdivided unit-speed system.
pub fn rescale_state(
    ph: &PortHamiltonian,
    tt: &TraverseTimeTable,
    f: &StateFunction,
) -> Result<StateFunction> {
    let (c, ls) = tt.reference()?;
    if f.dim() != ph.dim() || f.n_plus() != ph.m_plus() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} components, system has {}",
            f.dim(),
            ph.dim()
        )));
    }
    let mp = ph.m_plus();
    let mut comps = Vec::with_capacity(tt.total_multiple());
    for (g, &lg) in ls.iter().enumerate().take(ph.dim()) {
        let l = lg as f64;
        for i in 1..=lg {
            let piece = if g < mp {
                // ν_{j,i}(y) = υ_j(L⁻¹((y + i - 1)/c))
                compose_with_inverse(tt, g, f.component(g), (i as f64 - 1.0) / c, 1.0 / c)
            } else {
                // ω_{j,i}(y) = ϖ_j(L⁻¹((l_j + y - i)/c))
                compose_with_inverse(tt, g, f.component(g), (l - i as f64) / c, 1.0 / c)
            };
            comps.push(piece);
        }
    }
    let n_plus = ls[..mp].iter().sum();
    StateFunction::new(n_plus, comps)
}

/// `Q⁻¹ g`: back from the subdivided system to the source system.
pub fn unrescale_state(
    ph: &PortHamiltonian,
    tt: &TraverseTimeTable,
    g: &StateFunction,
) -> Result<StateFunction> {
    let (c, ls) = tt.reference()?;
    let ell: usize = ls.iter().sum();
    if g.dim() != ell {
        return Err(Error::DimensionMismatch(format!(
            "state has {} components, subdivided system has {ell}",
            g.dim()
        )));
    }
    let mp = ph.m_plus();
    let mut offset = 0;
    let mut comps = Vec::with_capacity(ph.dim());
    for (h, &lh) in ls.iter().enumerate() {
        let mut acc: Option<PiecewisePoly> = None;
        for k in 0..lh {
            // x-range on which c L(x) ∈ [k, k + 1)
            let xa = if k == 0 { 0.0 } else { tt.inverse(h, k as f64 / c) };
            let xb = if k + 1 == lh {
                1.0
            } else {
                tt.inverse(h, (k + 1) as f64 / c)
            };
            if xb - xa <= 1e-15 {
                continue;
            }
            // + : ν_{j,k+1}(cL - k);  - : ω_{j,i}(cL - l + i) with i = l - k
            let i = if h < mp { k + 1 } else { lh - k };
            let shift = if h < mp { k as f64 } else { lh as f64 - i as f64 };
            let piece = compose_with_map(tt, h, g.component(offset + i - 1), c, shift, xa, xb);
            acc = Some(match acc {
                None => piece,
                Some(a) => a.concat(&piece),
            });
        }
        offset += lh;
        comps.push(acc.expect("at least one piece"));
    }
    StateFunction::new(mp, comps)
}

/// Solver for variable-velocity systems through the unit-speed reduction.
#[derive(Clone, Debug)]
pub struct NormalizedSolver {
    ph: PortHamiltonian,
    tt: TraverseTimeTable,
    sub: SubdividedSystem,
    semigroup: Semigroup,
}

impl NormalizedSolver {
    pub fn new(ph: &PortHamiltonian, c_hint: Option<f64>, max_denominator: u64) -> Result<Self> {
        let tt = find_reference_time(&traverse_times(ph)?, c_hint, max_denominator)?;
        let sub = subdivide(ph, &tt)?;
        let semigroup = Semigroup::new(&sub.unit)?;
        Ok(NormalizedSolver {
            ph: ph.clone(),
            tt,
            sub,
            semigroup,
        })
    }

    pub fn table(&self) -> &TraverseTimeTable {
        &self.tt
    }

    pub fn subdivided(&self) -> &SubdividedSystem {
        &self.sub
    }

    /// `G(t)f = Q⁻¹ 𝒢(ct) Q f`.
    pub fn apply(&mut self, f: &StateFunction, t: f64) -> Result<StateFunction> {
        if self.sub.multiples.iter().all(|&l| l == 1) && self.sub.c == 1.0 && self.ph.is_unit_speed()
        {
            return self.semigroup.apply(f, t);
        }
        let q = rescale_state(&self.ph, &self.tt, f)?;
        let evolved = self.semigroup.apply(&q, self.sub.c * t)?;
        unrescale_state(&self.ph, &self.tt, &evolved)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_model::Velocity;

    fn system(m_plus: usize, m_minus: usize, vs: Vec<Velocity>, b: DMatrix<f64>) -> PortHamiltonian {
        PortHamiltonian::from_boundary_matrix(m_plus, m_minus, vs, b).unwrap()
    }

    #[test]
    fn traverse_times_of_simple_profiles() {
        let ph = system(
            2,
            1,
            vec![
                Velocity::unit(),
                Velocity::constant(2.0),
                Velocity::Slowness(PiecewisePoly::from_global(0.0, 1.0, vec![1.0, 1.0])),
            ],
            DMatrix::identity(3, 3),
        );
        let tt = traverse_times(&ph).unwrap();
        assert!((tt.totals[0] - 1.0).abs() < 1e-15);
        assert!((tt.totals[1] - 0.5).abs() < 1e-15);
        assert!((tt.totals[2] - 1.5).abs() < 1e-15);
        assert!((tt.inverse(2, tt.eval(2, 0.37)) - 0.37).abs() < 1e-14);
    }

    #[test]
    fn linear_speed_profile_is_integrated_accurately() {
        // c(x) = 1 + x, L(1) = ln 2
        let ph = system(
            1,
            0,
            vec![Velocity::Speed(PiecewisePoly::from_global(0.0, 1.0, vec![1.0, 1.0]))],
            DMatrix::identity(1, 1),
        );
        let tt = traverse_times(&ph).unwrap();
        assert!((tt.totals[0] - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn reference_time_search() {
        let mk = |totals: Vec<f64>| TraverseTimeTable {
            maps: totals
                .iter()
                .map(|&t| PiecewisePoly::from_global(0.0, 1.0, vec![0.0, t]))
                .collect(),
            totals,
            c: None,
            multiples: vec![],
        };
        let r = find_reference_time(&mk(vec![1.0, 1.0]), None, 1_000_000).unwrap();
        assert_eq!((r.c, r.multiples.clone()), (Some(1.0), vec![1, 1]));
        let r = find_reference_time(&mk(vec![0.5, 1.0]), None, 1_000_000).unwrap();
        assert_eq!((r.c, r.multiples.clone()), (Some(2.0), vec![1, 2]));
        let r = find_reference_time(&mk(vec![2.0 / 3.0, 0.5]), None, 1_000_000).unwrap();
        assert_eq!(r.multiples, vec![4, 3]);
        assert!(matches!(
            find_reference_time(&mk(vec![1.0, 2f64.sqrt()]), None, 1_000_000),
            Err(Error::RationalDependenceViolated(_))
        ));
        assert!(find_reference_time(&mk(vec![1.0, 0.5]), Some(4.0), 10).is_ok());
        assert!(find_reference_time(&mk(vec![1.0, 0.5]), Some(3.0), 10).is_err());
    }

    #[test]
    fn subdivision_of_single_component() {
        let ph = system(1, 0, vec![Velocity::constant(0.5)], DMatrix::from_element(1, 1, 0.7));
        let tt = find_reference_time(&traverse_times(&ph).unwrap(), Some(1.0), 100).unwrap();
        assert_eq!(tt.multiples, vec![2]);
        let sub = subdivide(&ph, &tt).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 0.7, 1.0, 0.0]);
        assert_eq!(sub.b_tilde(), &expected);
    }

    #[test]
    fn unit_system_is_unchanged() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let ph = system(1, 1, vec![Velocity::unit(); 2], b.clone());
        let tt = find_reference_time(&traverse_times(&ph).unwrap(), None, 100).unwrap();
        let sub = subdivide(&ph, &tt).unwrap();
        assert_eq!(sub.b_tilde(), &b);
        let f = StateFunction::new(
            1,
            vec![
                PiecewisePoly::from_global(0.0, 1.0, vec![1.0, 2.0]),
                PiecewisePoly::from_global(0.0, 1.0, vec![0.0, 0.0, 1.0]),
            ],
        )
        .unwrap();
        let q = rescale_state(&ph, &tt, &f).unwrap();
        assert!(q.sub(&f).max_abs() < 1e-15);
    }

    #[test]
    fn rescaling_round_trip() {
        let b = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.5, 1.0, 0.0, 0.0, 0.0, 0.5, 0.5]);
        let ph = system(
            2,
            1,
            vec![Velocity::constant(2.0), Velocity::constant(1.0), Velocity::constant(2.0 / 3.0)],
            b,
        );
        let tt = find_reference_time(&traverse_times(&ph).unwrap(), None, 100).unwrap();
        assert_eq!(tt.multiples, vec![1, 2, 3]);
        let f = StateFunction::new(
            2,
            vec![
                PiecewisePoly::from_global(0.0, 1.0, vec![1.0, -1.0]),
                PiecewisePoly::step_unit(&[1.0, 0.0, 2.0]),
                PiecewisePoly::from_global(0.0, 1.0, vec![0.0, 3.0, -1.0]),
            ],
        )
        .unwrap();
        let q = rescale_state(&ph, &tt, &f).unwrap();
        assert_eq!(q.dim(), 6);
        let back = unrescale_state(&ph, &tt, &q).unwrap();
        assert!(back.sub(&f).max_abs() < 1e-12);
        let again = rescale_state(&ph, &tt, &back).unwrap();
        assert!(again.sub(&q).max_abs() < 1e-12);
    }

    #[test]
    fn round_trip_with_fitted_composition() {
        let ph = system(
            1,
            0,
            vec![Velocity::Speed(PiecewisePoly::from_global(0.0, 1.0, vec![1.0, 0.5]))],
            DMatrix::identity(1, 1),
        );
        let tt = traverse_times(&ph).unwrap();
        let c = 1.0 / tt.totals[0];
        let tt = find_reference_time(&tt, Some(c), 10).unwrap();
        let f = StateFunction::new(1, vec![PiecewisePoly::from_global(0.0, 1.0, vec![0.5, 1.0, -2.0])])
            .unwrap();
        let q = rescale_state(&ph, &tt, &f).unwrap();
        let back = unrescale_state(&ph, &tt, &q).unwrap();
        assert!(back.sub(&f).max_abs() < 1e-9);
    }

    #[test]
    fn doubled_speed_example_matches_tracer() {
        use crate::fixtures::{example1_b, random_state};
        use crate::oracle::CharacteristicsTracer;
        use rand::SeedableRng;

        let vs = vec![
            Velocity::constant(2.0),
            Velocity::unit(),
            Velocity::constant(2.0),
            Velocity::unit(),
        ];
        let ph = system(2, 2, vs, example1_b());
        let mut solver = NormalizedSolver::new(&ph, None, DEFAULT_MAX_DENOMINATOR).unwrap();
        assert_eq!(solver.table().c, Some(2.0));
        assert_eq!(solver.table().multiples, vec![1, 2, 1, 2]);
        assert_eq!(solver.subdivided().dim(), 6);
        let tracer = CharacteristicsTracer::new(&ph).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let f = random_state(&mut rng, 2, 2);
        for t in [0.0, 0.3, 1.0, 1.45, 2.8] {
            let g = solver.apply(&f, t).unwrap();
            let err = tracer.l1_distance(&f, t, &g);
            assert!(err <= 1e-8, "t = {t}: {err}");
        }
    }
}
