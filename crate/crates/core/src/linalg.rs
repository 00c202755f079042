//! Small dense linear-algebra helpers on top of nalgebra.

use std::collections::HashMap;

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

pub fn cmax_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, b| a.max(b.norm()))
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Induced ∞-norm (maximum absolute row sum).
pub fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Operator norm of a complex matrix induced by the vector p-norm.
///
/// Exact for `p ∈ {1, 2, ∞}`; for other exponents the Riesz-Thorin bound
/// `|A|_1^{1/p} |A|_∞^{1-1/p}` is returned.
pub fn cnorm_induced(m: &CMatrix, p: f64) -> f64 {
    let n1 = m
        .column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let ninf = m
        .row_iter()
        .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    if p == 1.0 {
        n1
    } else if p.is_infinite() {
        ninf
    } else if p == 2.0 {
        m.clone()
            .svd(false, false)
            .singular_values
            .iter()
            .fold(0.0, |a: f64, &b| a.max(b))
    } else {
        n1.powf(1.0 / p) * ninf.powf(1.0 - 1.0 / p)
    }
}

/// Reciprocal condition number in the 1-norm; zero for singular matrices.
pub fn rcond1(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    match m.clone().try_inverse() {
        Some(inv) => {
            let r = 1.0 / (norm1(m) * norm1(&inv));
            if r.is_finite() {
                r
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| C64::new(v, 0.0))
}

/// Real part of a complex matrix together with the largest imaginary residue.
pub fn real_part(m: &CMatrix) -> (DMatrix<f64>, f64) {
    let imag = m.iter().fold(0.0, |a: f64, v| a.max(v.im.abs()));
    (m.map(|v| v.re), imag)
}

/// Right singular vectors belonging to the `dim` smallest singular values.
pub fn smallest_singular_subspace(m: &CMatrix, dim: usize) -> CMatrix {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[a]
            .partial_cmp(&svd.singular_values[b])
            .unwrap()
    });
    // a square input always yields n singular values
    let mut out = CMatrix::zeros(n, dim);
    for (c, &i) in order.iter().take(dim).enumerate() {
        for r in 0..n {
            out[(r, c)] = v_t[(i, r)].conj();
        }
    }
    out
}

/// Orthonormal basis of the numerical null space of a real square matrix,
/// together with the singular values (ascending).
pub fn real_null_space(m: &DMatrix<f64>, tol: f64) -> (Vec<DVector<f64>>, Vec<f64>) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[a]
            .partial_cmp(&svd.singular_values[b])
            .unwrap()
    });
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let basis = order
        .iter()
        .filter(|&&i| svd.singular_values[i] <= tol)
        .map(|&i| DVector::from_iterator(n, (0..n).map(|r| v_t[(i, r)])))
        .collect();
    (basis, sv)
}

/// Canonical basis of the span of `vectors`: the rows of the reduced row
/// echelon form, each scaled to unit Euclidean norm with its first nonzero
/// entry positive. Independent of the input basis up to rounding.
pub fn canonical_basis(vectors: &[DVector<f64>], tol: f64) -> Vec<DVector<f64>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let n = vectors[0].len();
    let k = vectors.len();
    let mut a = DMatrix::from_fn(k, n, |r, c| vectors[r][c]);
    let mut row = 0;
    for col in 0..n {
        if row == k {
            break;
        }
        let (piv, val) = (row..k)
            .map(|r| (r, a[(r, col)].abs()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol {
            continue;
        }
        a.swap_rows(row, piv);
        let p = a[(row, col)];
        for c in 0..n {
            a[(row, c)] /= p;
        }
        for r in 0..k {
            if r != row {
                let f = a[(r, col)];
                if f != 0.0 {
                    for c in 0..n {
                        a[(r, c)] -= f * a[(row, c)];
                    }
                }
            }
        }
        row += 1;
    }
    (0..row)
        .map(|r| {
            let mut v = DVector::from_iterator(n, (0..n).map(|c| a[(r, c)]));
            for x in v.iter_mut() {
                if x.abs() <= tol {
                    *x = 0.0;
                }
            }
            normalize_sign(v)
        })
        .collect()
}

/// Unit Euclidean norm, first nonzero entry positive.
pub fn normalize_sign(mut v: DVector<f64>) -> DVector<f64> {
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    }
    if let Some(first) = v.iter().find(|x| **x != 0.0) {
        if *first < 0.0 {
            v = -v;
        }
    }
    v
}

/// Cached integer powers of a fixed square matrix by repeated squaring.
#[derive(Clone, Debug)]
pub struct PowerCache {
    squares: Vec<DMatrix<f64>>,
    powers: HashMap<u64, DMatrix<f64>>,
}

impl PowerCache {
    pub fn new(base: &DMatrix<f64>) -> Self {
        assert!(base.is_square());
        PowerCache {
            squares: vec![base.clone()],
            powers: HashMap::new(),
        }
    }

    pub fn base(&self) -> &DMatrix<f64> {
        &self.squares[0]
    }

    pub fn dim(&self) -> usize {
        self.squares[0].nrows()
    }

    pub fn power(&mut self, n: u64) -> &DMatrix<f64> {
        if !self.powers.contains_key(&n) {
            let p = self.compute(n);
            self.powers.insert(n, p);
        }
        &self.powers[&n]
    }

    fn compute(&mut self, n: u64) -> DMatrix<f64> {
        let dim = self.dim();
        let mut result = DMatrix::identity(dim, dim);
        let mut bit = 0;
        let mut rest = n;
        while rest > 0 {
            while self.squares.len() <= bit {
                let last = self.squares.last().unwrap();
                let sq = last * last;
                self.squares.push(sq);
            }
            if rest & 1 == 1 {
                result = &result * &self.squares[bit];
            }
            rest >>= 1;
            bit += 1;
        }
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_cache_matches_naive_product() {
        let b = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, -0.25, 0.3]);
        let mut cache = PowerCache::new(&b);
        let mut naive = DMatrix::identity(2, 2);
        for n in 0..20u64 {
            assert!(max_abs(&(cache.power(n) - &naive)) < 1e-14);
            naive = &naive * &b;
        }
    }

    #[test]
    fn canonical_basis_is_basis_independent() {
        let a = DVector::from_vec(vec![1.0, -1.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![0.0, 0.0, 1.0, -1.0]);
        let mixed = vec![&a * 0.6 + &b * 0.8, &a * -0.8 + &b * 0.6];
        let basis = canonical_basis(&mixed, 1e-12);
        let s = 0.5f64.sqrt();
        assert_eq!(basis.len(), 2);
        assert!((basis[0].clone() - &a * s).amax() < 1e-14);
        assert!((basis[1].clone() - &b * s).amax() < 1e-14);
    }

    #[test]
    fn rcond_detects_singularity() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(rcond1(&s) < 1e-10);
        assert!((rcond1(&DMatrix::identity(3, 3)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn induced_norms_of_rank_one() {
        // E F^T with ‖E‖_1 = 3, ‖F‖_∞ = 2
        let e = DVector::from_vec(vec![1.0, -2.0]);
        let f = DVector::from_vec(vec![2.0, 1.0]);
        let m = to_complex(&(&e * f.transpose()));
        assert!((cnorm_induced(&m, 1.0) - 6.0).abs() < 1e-14);
        assert!((cnorm_induced(&m, 2.0) - 5.0f64.sqrt() * 5.0f64.sqrt()).abs() < 1e-12);
    }
}
