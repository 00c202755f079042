//! Closed-form evaluation of the unit-speed solution semigroup.
//!
//! With `h = V f` (backward components reversed in `x`) the transport
//! semigroup acts by `S(t)h(x) = Bⁿ h(n - t + x)` where `n` is the unique
//! integer with `0 ≤ n - t + x < 1`, and `G(t) = V S(t) V`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph_model::PortHamiltonian;
use crate::linalg::PowerCache;
use crate::poly::PiecewisePoly;
use crate::state::{mix, Samples, StateFunction};

/// Times closer than this to an integer are snapped onto it.
const TIME_SNAP: f64 = 1e-13;

/// Source of the matrices `K(n)` that replace `Bⁿ` in the transport formula.
pub trait PowerSource {
    fn dim(&self) -> usize;
    fn power(&mut self, n: u64) -> DMatrix<f64>;
}

impl PowerSource for PowerCache {
    fn dim(&self) -> usize {
        PowerCache::dim(self)
    }

    fn power(&mut self, n: u64) -> DMatrix<f64> {
        PowerCache::power(self, n).clone()
    }
}

/// Split `t ≥ 0` into `(floor t, frac t)` with snapping near integers.
pub(crate) fn split_time(t: f64) -> Result<(u64, f64)> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let r = t.round();
    if (t - r).abs() <= TIME_SNAP * t.max(1.0) {
        return Ok((r as u64, 0.0));
    }
    let n0 = t.floor();
    Ok((n0 as u64, t - n0))
}

/// `S(t)h` on the transport side, for any source of `K(n)`.
pub fn transport_with<P: PowerSource>(
    source: &mut P,
    h: &StateFunction,
    t: f64,
) -> Result<StateFunction> {
    if source.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix of size {} applied to a state with {} components",
            source.dim(),
            h.dim()
        )));
    }
    let (n0, phi) = split_time(t)?;
    if phi == 0.0 {
        return Ok(h.apply_matrix(&source.power(n0)));
    }
    // [phi, 1) carries h on [0, 1 - phi) after n0 boundary passes,
    // [0, phi) carries h on [1 - phi, 1) after n0 + 1 passes
    let right: Vec<PiecewisePoly> = h
        .components()
        .iter()
        .map(|c| c.restrict(0.0, 1.0 - phi).translate_to(phi, 1.0))
        .collect();
    let left: Vec<PiecewisePoly> = h
        .components()
        .iter()
        .map(|c| c.restrict(1.0 - phi, 1.0).translate_to(0.0, phi))
        .collect();
    let right = mix(&source.power(n0), &right);
    let left = mix(&source.power(n0 + 1), &left);
    let components = left
        .iter()
        .zip(&right)
        .map(|(l, r)| l.concat(r))
        .collect();
    StateFunction::new(h.n_plus(), components)
}

/// `G(t)f = V S(t) V f` for any source of `K(n)`.
pub fn propagate_with<P: PowerSource>(
    source: &mut P,
    f: &StateFunction,
    t: f64,
) -> Result<StateFunction> {
    Ok(transport_with(source, &f.flip(), t)?.flip())
}

/// Unit-speed semigroup with a cache of boundary-matrix powers.
#[derive(Clone, Debug)]
pub struct Semigroup {
    m_plus: usize,
    m_minus: usize,
    cache: PowerCache,
}

impl Semigroup {
    pub fn new(ph: &PortHamiltonian) -> Result<Self> {
        if !ph.is_unit_speed() {
            return Err(Error::NotUnitSpeed);
        }
        Ok(Semigroup::from_matrix(ph.m_plus(), ph.m_minus(), ph.b()))
    }

    pub fn from_matrix(m_plus: usize, m_minus: usize, b: &DMatrix<f64>) -> Self {
        assert_eq!(b.nrows(), m_plus + m_minus);
        Semigroup {
            m_plus,
            m_minus,
            cache: PowerCache::new(b),
        }
    }

    pub fn dim(&self) -> usize {
        self.m_plus + self.m_minus
    }

    pub fn m_plus(&self) -> usize {
        self.m_plus
    }

    pub fn b(&self) -> &DMatrix<f64> {
        self.cache.base()
    }

    pub fn power(&mut self, n: u64) -> &DMatrix<f64> {
        self.cache.power(n)
    }

    fn check(&self, f: &StateFunction) -> Result<()> {
        if f.dim() != self.dim() || f.n_plus() != self.m_plus {
            return Err(Error::DimensionMismatch(format!(
                "state has ({}, {}) components, system has ({}, {})",
                f.n_plus(),
                f.n_minus(),
                self.m_plus,
                self.m_minus
            )));
        }
        Ok(())
    }

    /// `G(t)f` as an exact piecewise polynomial.
    pub fn apply(&mut self, f: &StateFunction, t: f64) -> Result<StateFunction> {
        self.check(f)?;
        propagate_with(&mut self.cache, f, t)
    }

    /// `S(t)f` treating every component as forward-moving.
    pub fn transport(&mut self, f: &StateFunction, t: f64) -> Result<StateFunction> {
        transport_with(&mut self.cache, f, t)
    }

    /// `(G(t)f)(x)` straight from the characteristic formula, without
    /// building the shifted state.
    pub fn eval_point(&mut self, f: &StateFunction, t: f64, x: f64) -> Result<Vec<f64>> {
        self.check(f)?;
        if t.is_nan() || t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let dim = self.dim();
        let mut out = vec![0.0; dim];
        for (i, o) in out.iter_mut().enumerate() {
            // backward components are read in the reversed coordinate
            let xr = if i < self.m_plus { x } else { 1.0 - x };
            let (n, arg) = shift_index(t, xr);
            let bn = self.cache.power(n);
            let mut acc = 0.0;
            for k in 0..dim {
                let bik = bn[(i, k)];
                if bik != 0.0 {
                    let v = if k < self.m_plus {
                        f.component(k).eval(arg)
                    } else {
                        f.component(k).eval(1.0 - arg)
                    };
                    acc += bik * v;
                }
            }
            *o = acc;
        }
        Ok(out)
    }

    pub fn sample(&mut self, f: &StateFunction, t: f64, xs: &[f64]) -> Result<Samples> {
        Ok(Samples::of(&self.apply(f, t)?, xs))
    }
}

/// The integer `n` with `0 ≤ n - t + x < 1` and the argument `n - t + x`.
pub(crate) fn shift_index(t: f64, x: f64) -> (u64, f64) {
    let n = (t - x).ceil().max(0.0);
    let mut arg = n - t + x;
    let mut n = n as u64;
    if arg >= 1.0 {
        arg -= 1.0;
        n = n.saturating_sub(1);
    }
    (n, arg.max(0.0))
}

/// Sampled `G(t)f0` for a unit-speed system.
pub fn evaluate_semigroup(
    ph: &PortHamiltonian,
    f0: &StateFunction,
    t: f64,
    xs: &[f64],
) -> Result<Samples> {
    Semigroup::new(ph)?.sample(f0, t, xs)
}

/// Sampled `S(t)f0 = Bⁿ f0(n - t + x)` with every component moving forward.
pub fn evaluate_transport(
    b: &DMatrix<f64>,
    f0: &StateFunction,
    t: f64,
    xs: &[f64],
) -> Result<Samples> {
    let mut cache = PowerCache::new(b);
    Ok(Samples::of(&transport_with(&mut cache, f0, t)?, xs))
}

/// `‖G(t+s)f0 - G(t)G(s)f0‖₁`, computed exactly on piecewise polynomials.
pub fn semigroup_property_check(
    ph: &PortHamiltonian,
    f0: &StateFunction,
    t: f64,
    s: f64,
) -> Result<f64> {
    let mut sg = Semigroup::new(ph)?;
    let joint = sg.apply(f0, t + s)?;
    let mid = sg.apply(f0, s)?;
    let stepped = sg.apply(&mid, t)?;
    Ok(joint.sub(&stepped).l1_norm())
}
