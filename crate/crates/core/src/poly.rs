//! Polynomials and piecewise polynomials on a breakpoint grid.
//!
//! Every piece stores its coefficients in the *local* variable `s = x - x_left`
//! (ascending powers), so translating a function leaves its pieces untouched
//! and only restriction or reflection needs a Taylor shift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Breakpoints closer than this are considered identical when merging grids.
pub const BREAK_EPS: f64 = 1e-14;

/// Dense polynomial with ascending coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn constant(value: f64) -> Self {
        Poly { coeffs: vec![value] }
    }

    pub fn zero() -> Self {
        Poly::constant(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Antiderivative vanishing at `s = 0`.
    pub fn antiderivative(&self) -> Poly {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k as f64 + 1.0)),
        );
        Poly::new(out)
    }

    /// `q(s) = p(s + h)`.
    pub fn shift(&self, h: f64) -> Poly {
        if h == 0.0 {
            return self.clone();
        }
        // repeated synthetic division (Horner's scheme for the Taylor shift)
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for k in (i..n - 1).rev() {
                c[k] += h * c[k + 1];
            }
        }
        Poly::new(c)
    }

    /// `q(s) = p(h - s)`.
    pub fn reflect(&self, h: f64) -> Poly {
        let mut q = self.shift(h);
        for (k, c) in q.coeffs.iter_mut().enumerate() {
            if k % 2 == 1 {
                *c = -*c;
            }
        }
        Poly::new(q.coeffs)
    }

    /// `q(s) = p(a * s)`.
    pub fn scale_arg(&self, a: f64) -> Poly {
        let mut f = 1.0;
        Poly::new(
            self.coeffs
                .iter()
                .map(|&c| {
                    let v = c * f;
                    f *= a;
                    v
                })
                .collect(),
        )
    }

    pub fn scale(&self, a: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * a).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(0.0)
                        + other.coeffs.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Poly) {
        if self.coeffs.len() < other.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), 0.0);
        }
        for (dst, &src) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *dst += a * src;
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// `∫_a^b p(s) ds`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    /// Real roots strictly inside `(a, b)`, ascending.
    pub fn roots_in(&self, a: f64, b: f64) -> Vec<f64> {
        let p = Poly::new(self.coeffs.clone());
        match p.degree() {
            0 => Vec::new(),
            1 => {
                let r = -p.coeffs[0] / p.coeffs[1];
                if r > a && r < b {
                    vec![r]
                } else {
                    Vec::new()
                }
            }
            _ => {
                let mut pts = vec![a];
                pts.extend(p.derivative().roots_in(a, b));
                pts.push(b);
                let mut roots = Vec::new();
                for w in pts.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    let (flo, fhi) = (p.eval(lo), p.eval(hi));
                    if flo == 0.0 && lo > a {
                        push_unique(&mut roots, lo);
                    }
                    if flo * fhi < 0.0 {
                        push_unique(&mut roots, bisect(&p, lo, hi, flo));
                    }
                }
                roots
            }
        }
    }
}

fn push_unique(v: &mut Vec<f64>, x: f64) {
    if v.last().is_none_or(|&l| (x - l).abs() > BREAK_EPS) {
        v.push(x);
    }
}

fn bisect(p: &Poly, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = p.eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// A function on `[x_0, x_K)` given by one polynomial per piece.
///
/// Pieces are right-continuous; evaluating at the right end of the domain
/// returns the left limit of the last piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    breaks: Vec<f64>,
    pieces: Vec<Poly>,
}

impl PiecewisePoly {
    pub fn new(breaks: Vec<f64>, pieces: Vec<Poly>) -> Result<Self> {
        if breaks.len() != pieces.len() + 1 || pieces.is_empty() {
            return Err(Error::InvalidFunction(format!(
                "{} breakpoints for {} pieces",
                breaks.len(),
                pieces.len()
            )));
        }
        if breaks.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidFunction("non-finite breakpoint".into()));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidFunction(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if pieces.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidFunction("non-finite coefficient".into()));
        }
        Ok(PiecewisePoly { breaks, pieces })
    }

    pub(crate) fn from_parts_unchecked(breaks: Vec<f64>, pieces: Vec<Poly>) -> Self {
        debug_assert_eq!(breaks.len(), pieces.len() + 1);
        PiecewisePoly { breaks, pieces }
    }

    pub fn constant(a: f64, b: f64, value: f64) -> Self {
        PiecewisePoly {
            breaks: vec![a, b],
            pieces: vec![Poly::constant(value)],
        }
    }

    /// Single polynomial on `[a, b)` given in global monomials `Σ c_k x^k`.
    pub fn from_global(a: f64, b: f64, coeffs: Vec<f64>) -> Self {
        PiecewisePoly {
            breaks: vec![a, b],
            pieces: vec![Poly::new(coeffs).shift(a)],
        }
    }

    /// Piecewise constant on a uniform grid of `[0, 1)`.
    pub fn step_unit(values: &[f64]) -> Self {
        let n = values.len();
        let breaks = (0..=n).map(|k| k as f64 / n as f64).collect();
        let pieces = values.iter().map(|&v| Poly::constant(v)).collect();
        PiecewisePoly { breaks, pieces }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Poly] {
        &self.pieces
    }

    pub fn start(&self) -> f64 {
        self.breaks[0]
    }

    pub fn end(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn piece_index(&self, x: f64) -> usize {
        // last i with breaks[i] <= x, clamped to the valid piece range
        let i = self.breaks.partition_point(|&b| b <= x);
        i.saturating_sub(1).min(self.pieces.len() - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.piece_index(x);
        self.pieces[i].eval(x - self.breaks[i])
    }

    /// One-sided value at `x`: the limit from the right when `side > 0`, from
    /// the left otherwise. Points within `tol` of a breakpoint snap to it.
    pub fn eval_side(&self, x: f64, side: f64, tol: f64) -> f64 {
        let k = self.breaks.partition_point(|&b| b < x - tol);
        let x = match self.breaks.get(k) {
            Some(&b) if (b - x).abs() <= tol => b,
            _ => x,
        };
        let i = if side > 0.0 {
            self.piece_index(x)
        } else {
            self.breaks.partition_point(|&b| b < x).clamp(1, self.pieces.len()) - 1
        };
        self.pieces[i].eval(x - self.breaks[i])
    }

    /// Derivative of the piece containing `x`.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let i = self.piece_index(x);
        self.pieces[i].derivative().eval(x - self.breaks[i])
    }

    pub fn derivative(&self) -> PiecewisePoly {
        PiecewisePoly {
            breaks: self.breaks.clone(),
            pieces: self.pieces.iter().map(Poly::derivative).collect(),
        }
    }

    /// Continuous antiderivative vanishing at the left end of the domain.
    pub fn antiderivative(&self) -> PiecewisePoly {
        let mut acc = 0.0;
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for (i, p) in self.pieces.iter().enumerate() {
            let mut q = p.antiderivative();
            q.coeffs[0] += acc;
            acc = q.eval(self.breaks[i + 1] - self.breaks[i]);
            pieces.push(q);
        }
        PiecewisePoly {
            breaks: self.breaks.clone(),
            pieces,
        }
    }

    pub fn integral(&self) -> f64 {
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, p)| p.integral(0.0, self.breaks[i + 1] - self.breaks[i]))
            .sum()
    }

    /// `∫ |f|^p` over the domain, exact for `p ∈ {1, 2}`.
    pub fn abs_pow_integral(&self, p: f64) -> f64 {
        let mut total = 0.0;
        for (i, poly) in self.pieces.iter().enumerate() {
            let h = self.breaks[i + 1] - self.breaks[i];
            if p == 2.0 {
                total += poly.mul(poly).integral(0.0, h);
                continue;
            }
            let mut pts = vec![0.0];
            pts.extend(poly.roots_in(0.0, h));
            pts.push(h);
            for w in pts.windows(2) {
                if p == 1.0 {
                    total += poly.integral(w[0], w[1]).abs();
                } else {
                    total += gauss_integral(|s| poly.eval(s).abs().powf(p), w[0], w[1], 20);
                }
            }
        }
        total
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.abs_pow_integral(p).powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (i, poly) in self.pieces.iter().enumerate() {
            let h = self.breaks[i + 1] - self.breaks[i];
            let mut pts = vec![0.0, h];
            pts.extend(poly.derivative().roots_in(0.0, h));
            for s in pts {
                m = m.max(poly.eval(s).abs());
            }
        }
        m
    }

    /// Restriction to `[a, b)`, a sub-interval of the domain.
    pub fn restrict(&self, a: f64, b: f64) -> PiecewisePoly {
        debug_assert!(a < b);
        let i0 = self.piece_index(a);
        let mut i1 = self.piece_index(b);
        if i1 > i0 && self.breaks[i1] >= b - BREAK_EPS {
            i1 -= 1;
        }
        let mut breaks = vec![a];
        let mut pieces = Vec::with_capacity(i1 - i0 + 1);
        for i in i0..=i1 {
            let left = if i == i0 { a } else { self.breaks[i] };
            if i > i0 {
                breaks.push(left);
            }
            pieces.push(self.pieces[i].shift(left - self.breaks[i]));
        }
        breaks.push(b);
        dedupe(breaks, pieces)
    }

    /// Affine re-placement of the domain onto `[new_start, new_end)` by a pure
    /// translation; the endpoints are snapped exactly.
    pub fn translate_to(&self, new_start: f64, new_end: f64) -> PiecewisePoly {
        let delta = new_start - self.start();
        let k = self.breaks.len();
        let mut breaks: Vec<f64> = self.breaks.iter().map(|b| b + delta).collect();
        breaks[0] = new_start;
        breaks[k - 1] = new_end;
        for b in &mut breaks[1..k - 1] {
            *b = b.clamp(new_start, new_end);
        }
        dedupe(breaks, self.pieces.clone())
    }

    /// `g(x) = f(c - x)` on `[c - end, c - start)`.
    pub fn reflect(&self, c: f64) -> PiecewisePoly {
        let n = self.pieces.len();
        let mut breaks = Vec::with_capacity(n + 1);
        let mut pieces = Vec::with_capacity(n);
        breaks.push(c - self.end());
        for i in (0..n).rev() {
            let h = self.breaks[i + 1] - self.breaks[i];
            pieces.push(self.pieces[i].reflect(h));
            breaks.push(c - self.breaks[i]);
        }
        // exact endpoints for the common unit-interval case
        if self.start() == 0.0 && self.end() == 1.0 && c == 1.0 {
            breaks[0] = 0.0;
            breaks[n] = 1.0;
        }
        dedupe(breaks, pieces)
    }

    /// Join `self` on `[a, b)` with `other` on `[b, c)`.
    pub fn concat(&self, other: &PiecewisePoly) -> PiecewisePoly {
        let mut breaks = self.breaks.clone();
        breaks.pop();
        breaks.extend_from_slice(&other.breaks);
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        dedupe(breaks, pieces)
    }

    /// Refine onto the given grid (which must contain this function's breakpoints
    /// up to `BREAK_EPS`).
    fn on_grid(&self, grid: &[f64]) -> Vec<Poly> {
        grid.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let i = self.piece_index(mid);
                self.pieces[i].shift(w[0] - self.breaks[i])
            })
            .collect()
    }

    /// `Σ a_k f_k` over functions sharing the same domain.
    pub fn linear_combination(terms: &[(f64, &PiecewisePoly)]) -> PiecewisePoly {
        assert!(!terms.is_empty());
        let grid = merge_grids(terms.iter().map(|(_, f)| f.breaks.as_slice()));
        let mut acc: Vec<Poly> = vec![Poly::zero(); grid.len() - 1];
        for (a, f) in terms {
            if *a == 0.0 {
                continue;
            }
            for (dst, src) in acc.iter_mut().zip(f.on_grid(&grid)) {
                dst.axpy(*a, &src);
            }
        }
        let acc = acc.into_iter().map(|p| Poly::new(p.coeffs)).collect();
        PiecewisePoly::from_parts_unchecked(grid, acc)
    }

    pub fn sub(&self, other: &PiecewisePoly) -> PiecewisePoly {
        PiecewisePoly::linear_combination(&[(1.0, self), (-1.0, other)])
    }

    pub fn scale(&self, a: f64) -> PiecewisePoly {
        PiecewisePoly {
            breaks: self.breaks.clone(),
            pieces: self.pieces.iter().map(|p| p.scale(a)).collect(),
        }
    }

    /// Pointwise product on a common grid.
    pub fn mul(&self, other: &PiecewisePoly) -> PiecewisePoly {
        let grid = merge_grids([self.breaks.as_slice(), other.breaks.as_slice()]);
        let a = self.on_grid(&grid);
        let b = other.on_grid(&grid);
        let pieces = a.iter().zip(&b).map(|(p, q)| p.mul(q)).collect();
        PiecewisePoly::from_parts_unchecked(grid, pieces)
    }

    /// Merge adjacent pieces that are the same polynomial.
    pub fn simplify(&self, tol: f64) -> PiecewisePoly {
        let mut breaks = vec![self.breaks[0]];
        let mut pieces: Vec<Poly> = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            if let Some(last) = pieces.last() {
                let h = self.breaks[i] - breaks[breaks.len() - 2];
                let continued = last.shift(h);
                let diff = continued.add(&p.scale(-1.0));
                if diff.coeffs().iter().all(|c| c.abs() <= tol) {
                    *breaks.last_mut().unwrap() = self.breaks[i + 1];
                    continue;
                }
            }
            pieces.push(p.clone());
            breaks.push(self.breaks[i + 1]);
        }
        PiecewisePoly { breaks, pieces }
    }

    /// Adaptive piecewise-polynomial interpolation of `f` on the given initial
    /// grid. Each piece is interpolated at Chebyshev points with the requested
    /// degree and bisected until the error on a `probe`-point grid is below `tol`.
    pub fn fit<F: Fn(f64) -> f64>(
        f: F,
        initial: &[f64],
        degree: usize,
        tol: f64,
        probe: usize,
    ) -> PiecewisePoly {
        let mut breaks = vec![initial[0]];
        let mut pieces = Vec::new();
        for w in initial.windows(2) {
            fit_piece(&f, w[0], w[1], degree, tol, probe, 0, &mut breaks, &mut pieces);
        }
        PiecewisePoly { breaks, pieces }
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_piece<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    degree: usize,
    tol: f64,
    probe: usize,
    depth: usize,
    breaks: &mut Vec<f64>,
    pieces: &mut Vec<Poly>,
) {
    let poly = chebyshev_interpolant(f, a, b, degree);
    let h = b - a;
    let err = (0..probe)
        .map(|k| {
            let s = h * (k as f64 + 0.5) / probe as f64;
            (poly.eval(s) - f(a + s)).abs()
        })
        .fold(0.0, f64::max);
    if err <= tol || depth >= 40 || h < 1e-12 {
        pieces.push(poly);
        breaks.push(b);
    } else {
        let mid = 0.5 * (a + b);
        fit_piece(f, a, mid, degree, tol, probe, depth + 1, breaks, pieces);
        fit_piece(f, mid, b, degree, tol, probe, depth + 1, breaks, pieces);
    }
}

/// Interpolant of `f` on `[a, b]` at `degree + 1` Chebyshev points, returned
/// in the local variable `s = x - a`.
fn chebyshev_interpolant<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, degree: usize) -> Poly {
    let n = degree + 1;
    let nodes: Vec<f64> = (0..n)
        .map(|k| (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64).cos())
        .collect();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let values: Vec<f64> = nodes.iter().map(|&u| f(mid + half * u)).collect();
    // Chebyshev coefficients by the discrete cosine sum
    let mut cheb = vec![0.0; n];
    for (j, c) in cheb.iter_mut().enumerate() {
        let s: f64 = values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                v * (std::f64::consts::PI * j as f64 * (2 * k + 1) as f64 / (2 * n) as f64).cos()
            })
            .sum();
        *c = s * 2.0 / n as f64;
    }
    cheb[0] *= 0.5;
    // convert to monomials in u via T_{j+1} = 2u T_j - T_{j-1}
    let mut mono = Poly::zero();
    let mut t_prev = Poly::constant(1.0);
    let mut t_cur = Poly::new(vec![0.0, 1.0]);
    for (j, &c) in cheb.iter().enumerate() {
        let tj = if j == 0 { t_prev.clone() } else { t_cur.clone() };
        mono.axpy(c, &tj);
        if j >= 1 {
            let next = Poly::new(vec![0.0, 2.0]).mul(&t_cur).add(&t_prev.scale(-1.0));
            t_prev = std::mem::replace(&mut t_cur, next);
        }
    }
    // u = s / half - 1
    mono.scale_arg(1.0 / half).shift(-half)
}

fn gauss_integral<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    x.iter()
        .zip(&w)
        .map(|(&u, &wt)| wt * f(mid + half * u))
        .sum::<f64>()
        * half
}

/// Union of breakpoint grids with near-duplicates collapsed.
pub fn merge_grids<'a, I: IntoIterator<Item = &'a [f64]>>(grids: I) -> Vec<f64> {
    let mut all: Vec<f64> = grids.into_iter().flatten().copied().collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let first = all[0];
    let last = *all.last().unwrap();
    let mut out = vec![first];
    for &b in &all {
        if b - out.last().unwrap() > BREAK_EPS {
            out.push(b);
        }
    }
    *out.last_mut().unwrap() = last;
    if out.len() == 1 {
        out.push(last);
    }
    out
}

fn dedupe(breaks: Vec<f64>, pieces: Vec<Poly>) -> PiecewisePoly {
    // drop pieces of (numerically) zero width; the neighbour absorbs them
    let n = pieces.len();
    let (first, last) = (breaks[0], breaks[n]);
    let mut nb = vec![first];
    let mut np = Vec::with_capacity(n);
    let mut fallback = None;
    for (i, p) in pieces.into_iter().enumerate() {
        if breaks[i + 1] - breaks[i] > BREAK_EPS {
            np.push(p);
            nb.push(breaks[i + 1]);
        } else if fallback.is_none() {
            fallback = Some(p);
        }
    }
    if np.is_empty() {
        np.push(fallback.unwrap());
        nb.push(last);
    }
    *nb.last_mut().unwrap() = last;
    PiecewisePoly::from_parts_unchecked(nb, np)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sided_values_snap_to_breakpoints() {
        let p = PiecewisePoly::step_unit(&[1.0, 2.0]);
        assert_eq!(p.eval_side(0.5 - 1e-14, 1.0, 1e-12), 2.0);
        assert_eq!(p.eval_side(0.5 + 1e-14, -1.0, 1e-12), 1.0);
        assert_eq!(p.eval_side(0.25, -1.0, 1e-12), 1.0);
        assert_eq!(p.eval_side(0.0, -1.0, 1e-12), 1.0);
        assert_eq!(p.eval_side(1.0, 1.0, 1e-12), 2.0);
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn shift_and_reflect() {
        let p = Poly::new(vec![1.0, -2.0, 3.0]);
        let q = p.shift(0.5);
        for s in [0.0, 0.3, 1.7] {
            assert!(close(q.eval(s), p.eval(s + 0.5), 1e-14));
        }
        let r = p.reflect(2.0);
        for s in [0.0, 0.3, 1.7] {
            assert!(close(r.eval(s), p.eval(2.0 - s), 1e-13));
        }
    }

    #[test]
    fn roots_of_cubic() {
        // (s - 0.2)(s - 0.5)(s - 0.9)
        let p = Poly::new(vec![-0.09, 0.73, -1.6, 1.0]);
        let r = p.roots_in(0.0, 1.0);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([0.2, 0.5, 0.9]) {
            assert!(close(*a, b, 1e-12));
        }
    }

    #[test]
    fn l1_norm_splits_at_sign_changes() {
        // x - 1/2 on [0,1): ∫|x - 1/2| = 1/4
        let f = PiecewisePoly::from_global(0.0, 1.0, vec![-0.5, 1.0]);
        assert!(close(f.lp_norm(1.0), 0.25, 1e-15));
        assert!(close(f.abs_pow_integral(2.0), 1.0 / 12.0, 1e-15));
        let p3 = f.abs_pow_integral(3.0);
        assert!(close(p3, 2.0 * 0.5f64.powi(4) / 4.0, 1e-13));
    }

    #[test]
    fn restrict_translate_concat_roundtrip() {
        let f = PiecewisePoly::new(
            vec![0.0, 0.3, 1.0],
            vec![Poly::new(vec![1.0, 2.0]), Poly::new(vec![0.0, 0.0, 1.0])],
        )
        .unwrap();
        let left = f.restrict(0.0, 0.6);
        let right = f.restrict(0.6, 1.0);
        let g = left.concat(&right);
        for x in [0.0, 0.1, 0.29, 0.3, 0.5, 0.6, 0.95] {
            assert!(close(g.eval(x), f.eval(x), 1e-14));
        }
        let moved = right.translate_to(0.0, 0.4);
        assert!(close(moved.eval(0.1), f.eval(0.7), 1e-14));
    }

    #[test]
    fn reflect_unit_interval() {
        let f = PiecewisePoly::from_global(0.0, 1.0, vec![0.0, 1.0]);
        let g = f.reflect(1.0);
        assert_eq!(g.start(), 0.0);
        assert_eq!(g.end(), 1.0);
        assert!(close(g.eval(0.25), 0.75, 1e-15));
    }

    #[test]
    fn linear_combination_merges_grids() {
        let a = PiecewisePoly::step_unit(&[1.0, 2.0]);
        let b = PiecewisePoly::step_unit(&[1.0, 2.0, 3.0]);
        let c = PiecewisePoly::linear_combination(&[(2.0, &a), (-1.0, &b)]);
        assert_eq!(c.num_pieces(), 4);
        assert!(close(c.eval(0.1), 1.0, 1e-15));
        assert!(close(c.eval(0.4), 0.0, 1e-15));
        assert!(close(c.eval(0.6), 2.0, 1e-15));
        assert!(close(c.eval(0.9), 1.0, 1e-15));
    }

    #[test]
    fn fit_reproduces_cubic_exactly_and_smooth_functions_adaptively() {
        let cubic = |x: f64| 1.0 - x + 2.0 * x * x * x;
        let f = PiecewisePoly::fit(cubic, &[0.0, 1.0], 3, 1e-12, 64);
        assert_eq!(f.num_pieces(), 1);
        let g = PiecewisePoly::fit(f64::exp, &[0.0, 1.0], 3, 1e-10, 64);
        for k in 0..100 {
            let x = k as f64 / 100.0;
            assert!(close(g.eval(x), x.exp(), 1e-10));
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!(close(s, 2.0 / 9.0, 1e-14));
    }
}
