//! Vector-valued piecewise polynomial states on the unit interval.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::PiecewisePoly;

pub const DEFAULT_MAX_DEGREE: usize = 3;

/// One piecewise polynomial per component on `[0, 1)`; the first `n_plus`
/// components travel from 0 to 1, the rest from 1 to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFunction {
    n_plus: usize,
    components: Vec<PiecewisePoly>,
}

impl StateFunction {
    pub fn new(n_plus: usize, components: Vec<PiecewisePoly>) -> Result<Self> {
        if n_plus > components.len() {
            return Err(Error::DimensionMismatch(format!(
                "{n_plus} forward components but only {} in total",
                components.len()
            )));
        }
        for (i, c) in components.iter().enumerate() {
            if c.start() != 0.0 || c.end() != 1.0 {
                return Err(Error::InvalidFunction(format!(
                    "component {i} is defined on [{}, {}) instead of [0, 1)",
                    c.start(),
                    c.end()
                )));
            }
        }
        Ok(StateFunction { n_plus, components })
    }

    pub fn zeros(n_plus: usize, n_minus: usize) -> Self {
        StateFunction {
            n_plus,
            components: vec![PiecewisePoly::constant(0.0, 1.0, 0.0); n_plus + n_minus],
        }
    }

    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    pub fn n_minus(&self) -> usize {
        self.components.len() - self.n_plus
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[PiecewisePoly] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &PiecewisePoly {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<PiecewisePoly> {
        self.components
    }

    pub fn max_degree(&self) -> usize {
        self.components
            .iter()
            .map(PiecewisePoly::max_degree)
            .max()
            .unwrap_or(0)
    }

    pub fn check_degree(&self, max: usize) -> Result<()> {
        match self.max_degree() {
            d if d > max => Err(Error::InvalidFunction(format!(
                "piece degree {d} exceeds the configured maximum {max}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// Reverse the backward-travelling components, `ϖ(x) ↦ ϖ(1 - x)`.
    pub fn flip(&self) -> StateFunction {
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| if i < self.n_plus { c.clone() } else { c.reflect(1.0) })
            .collect();
        StateFunction {
            n_plus: self.n_plus,
            components,
        }
    }

    /// Pointwise multiplication by a constant matrix.
    pub fn apply_matrix(&self, m: &DMatrix<f64>) -> StateFunction {
        StateFunction {
            n_plus: self.n_plus,
            components: mix(m, &self.components),
        }
    }

    pub fn map_components<F: FnMut(usize, &PiecewisePoly) -> PiecewisePoly>(
        &self,
        mut f: F,
    ) -> StateFunction {
        StateFunction {
            n_plus: self.n_plus,
            components: self
                .components
                .iter()
                .enumerate()
                .map(|(i, c)| f(i, c))
                .collect(),
        }
    }

    pub fn sub(&self, other: &StateFunction) -> StateFunction {
        self.map_components(|i, c| c.sub(&other.components[i]))
    }

    pub fn add(&self, other: &StateFunction) -> StateFunction {
        self.map_components(|i, c| {
            PiecewisePoly::linear_combination(&[(1.0, c), (1.0, &other.components[i])])
        })
    }

    pub fn scale(&self, a: f64) -> StateFunction {
        self.map_components(|_, c| c.scale(a))
    }

    /// `(∫_0^1 Σ_i |f_i|^p)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.abs_pow_integral(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    pub fn l1_norm(&self) -> f64 {
        self.lp_norm(1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .map(PiecewisePoly::max_abs)
            .fold(0.0, f64::max)
    }

    /// Total integral over all components.
    pub fn mass(&self) -> f64 {
        self.components.iter().map(PiecewisePoly::integral).sum()
    }
}

/// `m · (f_1, ..., f_k)` for functions sharing a common domain.
pub(crate) fn mix(m: &DMatrix<f64>, fs: &[PiecewisePoly]) -> Vec<PiecewisePoly> {
    assert_eq!(m.ncols(), fs.len());
    (0..m.nrows())
        .map(|i| {
            let terms: Vec<(f64, &PiecewisePoly)> = (0..m.ncols())
                .filter(|&k| m[(i, k)] != 0.0)
                .map(|k| (m[(i, k)], &fs[k]))
                .collect();
            if terms.is_empty() {
                PiecewisePoly::constant(fs[0].start(), fs[0].end(), 0.0)
            } else {
                PiecewisePoly::linear_combination(&terms)
            }
        })
        .collect()
}

/// Values of every component on a common grid of sample points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Samples {
    pub xs: Vec<f64>,
    /// `values[component][sample]`.
    pub values: Vec<Vec<f64>>,
}

impl Samples {
    pub fn of(f: &StateFunction, xs: &[f64]) -> Samples {
        Samples {
            xs: xs.to_vec(),
            values: f
                .components()
                .iter()
                .map(|c| xs.iter().map(|&x| c.eval(x)).collect())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Uniform midpoint grid with `n` points on `[0, 1)`.
    pub fn midpoints(n: usize) -> Vec<f64> {
        (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect()
    }

    /// Uniform grid `k / n`, `k = 0..n`.
    pub fn uniform(n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64 / n as f64).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |a: f64, v| a.max(v.abs()))
    }
}
