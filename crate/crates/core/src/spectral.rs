//! Spectral projections of the boundary matrix and the splitting of the
//! semigroup into a peripheral (limit) part and a decaying remainder.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cmax_abs, cnorm_induced, real_part, smallest_singular_subspace, to_complex, CMatrix, C64,
};
use crate::semigroup::{propagate_with, PowerSource};
use crate::state::{Samples, StateFunction};

/// `||λ| - 1|` below which an eigenvalue counts as peripheral.
pub const PERIPHERAL_TOL: f64 = 1e-9;
/// Tolerance for `λ^d = 1` when detecting roots of unity.
pub const ROOT_TOL: f64 = 1e-8;
/// Relative tolerance for the algebraic identities checked after decomposition.
pub const VERIFY_TOL: f64 = 1e-8;

/// One eigenvalue cluster with its spectral data.
#[derive(Clone, Debug)]
pub struct EigenCluster {
    pub lambda: C64,
    pub multiplicity: usize,
    /// Smallest `r` with `N^r = 0` (1 for semisimple eigenvalues).
    pub index: usize,
    pub projection: CMatrix,
    pub nilpotent: CMatrix,
    /// `N^r Π` for `r < multiplicity`.
    nil_powers: Vec<CMatrix>,
}

impl EigenCluster {
    pub fn is_semisimple(&self) -> bool {
        self.index <= 1
    }

    pub fn modulus(&self) -> f64 {
        self.lambda.norm()
    }

    /// `λⁿ p(n) Π = Σ_{r<α} C(n, r) λ^{n-r} N^r Π`.
    pub fn power_term(&self, n: u64) -> CMatrix {
        let dim = self.projection.nrows();
        let mut out = CMatrix::zeros(dim, dim);
        let mut binom = 1.0;
        for (r, nr) in self.nil_powers.iter().enumerate().take(self.index.max(1)) {
            let r64 = r as u64;
            if r64 > n {
                break;
            }
            if r > 0 {
                binom *= (n - r64 + 1) as f64 / r as f64;
            }
            let lam = pow_c(self.lambda, n - r64);
            out += nr * (lam * binom);
        }
        out
    }
}

fn pow_c(z: C64, n: u64) -> C64 {
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    if z.norm() == 0.0 {
        return C64::new(0.0, 0.0);
    }
    match u32::try_from(n) {
        Ok(k) => z.powu(k),
        Err(_) => z.powf(n as f64),
    }
}

/// Residuals of the identities satisfied by a spectral resolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralResiduals {
    pub resolution: f64,
    pub idempotence: f64,
    pub orthogonality: f64,
    pub commutation: f64,
    pub nilpotency: f64,
    /// `max(1, ‖B‖) · max(1, max ‖Π_i‖)`, the scale the residuals are judged against.
    pub scale: f64,
}

impl SpectralResiduals {
    pub fn max(&self) -> f64 {
        self.resolution
            .max(self.idempotence)
            .max(self.orthogonality)
            .max(self.commutation)
            .max(self.nilpotency)
    }
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    b: DMatrix<f64>,
    clusters: Vec<EigenCluster>,
    residuals: SpectralResiduals,
}

fn cluster_threshold(k: usize, scale: f64) -> f64 {
    // a defective k-fold eigenvalue splits by roughly ε^{1/k} under rounding
    scale * (1e4 * f64::EPSILON).powf(1.0 / k as f64).max(1e-9)
}

/// Relative size of the `k`-th singular value of `(B - μI)^k` below which a
/// group is one eigenvalue, and above which it is several.
const MERGE_ACCEPT: f64 = 1e-12;
const MERGE_REJECT: f64 = 1e-8;

/// Group eigenvalues into clusters of numerically equal values.
fn cluster_eigenvalues(bc: &CMatrix, eigs: &[C64], scale: f64) -> Result<Vec<(C64, usize)>> {
    let n = eigs.len();
    let mut assigned = vec![false; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for k in (1..=n).rev() {
        let tau = cluster_threshold(k, scale);
        let free: Vec<usize> = (0..n).filter(|&i| !assigned[i]).collect();
        // connected components of the free eigenvalues at link distance tau
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for &i in &free {
            if comp[i] != usize::MAX {
                continue;
            }
            comp[i] = next;
            let mut stack = vec![i];
            while let Some(a) = stack.pop() {
                for &b in &free {
                    if comp[b] == usize::MAX && (eigs[a] - eigs[b]).norm() <= tau {
                        comp[b] = next;
                        stack.push(b);
                    }
                }
            }
            next += 1;
        }
        for c in 0..next {
            let members: Vec<usize> = free.iter().copied().filter(|&i| comp[i] == c).collect();
            let m = members.len();
            if m < k {
                continue;
            }
            if m > 1 {
                let mu = mean(eigs, &members);
                if members.iter().any(|&i| (eigs[i] - mu).norm() > cluster_threshold(m, scale)) {
                    continue;
                }
                let r = merge_defect(bc, mu, m);
                if r > MERGE_REJECT {
                    continue;
                }
                if r > MERGE_ACCEPT {
                    let (a, b) = extreme_pair(eigs, &members);
                    return Err(Error::ClusterAmbiguity {
                        a: format_c(a),
                        b: format_c(b),
                    });
                }
            }
            for &i in &members {
                assigned[i] = true;
            }
            clusters.push(members);
        }
    }
    let mut out: Vec<(C64, usize)> = clusters
        .iter()
        .map(|m| {
            let mut mu = mean(eigs, m);
            if mu.im.abs() <= cluster_threshold(m.len(), scale) {
                mu.im = 0.0;
            }
            (mu, m.len())
        })
        .collect();
    for i in 0..out.len() {
        for j in i + 1..out.len() {
            let tol = cluster_threshold(out[i].1.max(out[j].1), scale);
            if (out[i].0 - out[j].0).norm() <= 10.0 * tol {
                return Err(Error::ClusterAmbiguity {
                    a: format_c(out[i].0),
                    b: format_c(out[j].0),
                });
            }
        }
    }
    // deterministic order: descending modulus, then argument
    out.sort_by(|a, b| {
        let ka = (-(a.0.norm() * 1e9).round(), arg_key(a.0));
        let kb = (-(b.0.norm() * 1e9).round(), arg_key(b.0));
        ka.partial_cmp(&kb).unwrap()
    });
    Ok(out)
}

fn mean(eigs: &[C64], members: &[usize]) -> C64 {
    members.iter().map(|&i| eigs[i]).sum::<C64>() / members.len() as f64
}

fn extreme_pair(eigs: &[C64], members: &[usize]) -> (C64, C64) {
    let mut best = (eigs[members[0]], eigs[members[0]], -1.0);
    for &i in members {
        for &j in members {
            let d = (eigs[i] - eigs[j]).norm();
            if d > best.2 {
                best = (eigs[i], eigs[j], d);
            }
        }
    }
    (best.0, best.1)
}

/// `σ_k((B - μI)^k) / max(1, ‖B - μI‖₂)^k`: zero exactly when `μ` is an
/// eigenvalue of algebraic multiplicity at least `k`.
fn merge_defect(bc: &CMatrix, mu: C64, k: usize) -> f64 {
    let n = bc.nrows();
    let shifted = bc - CMatrix::identity(n, n) * mu;
    let norm = cnorm_induced(&shifted, 2.0).max(1.0);
    let mut sv: Vec<f64> = cpow_matrix(&shifted, k)
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sv[k - 1] / norm.powi(k as i32)
}

/// Argument in `[0, 2π)`, with values within rounding of `2π` mapped to 0.
fn arg_key(z: C64) -> f64 {
    let mut a = z.im.atan2(z.re);
    if a < 0.0 {
        a += 2.0 * PI;
    }
    if a > 2.0 * PI - 1e-9 {
        a = 0.0;
    }
    a
}

pub fn format_c(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im > 0.0 {
        format!("{}+{}i", z.re, z.im)
    } else {
        format!("{}-{}i", z.re, -z.im)
    }
}

fn cpow_matrix(m: &CMatrix, k: usize) -> CMatrix {
    let n = m.nrows();
    let mut out = CMatrix::identity(n, n);
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Eigenvalues, spectral projections and nilpotent parts of `b`.
pub fn spectral_decompose(b: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    assert!(b.is_square(), "boundary matrix must be square");
    let n = b.nrows();
    let bnorm = b.norm();
    let scale = bnorm.max(f64::MIN_POSITIVE);
    let eigs: Vec<C64> = b.complex_eigenvalues().iter().copied().collect();
    let groups = if bnorm == 0.0 {
        vec![(C64::new(0.0, 0.0), n)]
    } else {
        cluster_eigenvalues(&to_complex(b), &eigs, scale)?
    };
    let bc = to_complex(b);
    let id = CMatrix::identity(n, n);
    let mut clusters = Vec::with_capacity(groups.len());
    for (lambda, alpha) in groups {
        let shifted = &bc - &id * lambda;
        let power = cpow_matrix(&shifted, alpha);
        let e = smallest_singular_subspace(&power, alpha);
        let f = smallest_singular_subspace(&power.transpose(), alpha);
        let gram = f.transpose() * &e;
        let gram_inv = gram.try_inverse().ok_or(Error::InaccurateDecomposition {
            residual: f64::INFINITY,
        })?;
        let projection = &e * gram_inv * f.transpose();
        let nilpotent = &shifted * &projection;
        let mut nil_powers = vec![projection.clone()];
        for r in 1..alpha {
            let next = &nilpotent * &nil_powers[r - 1];
            nil_powers.push(next);
        }
        clusters.push(EigenCluster {
            lambda,
            multiplicity: alpha,
            index: 0,
            projection,
            nilpotent,
            nil_powers,
        });
    }
    // nilpotency index relative to the size of the projected block
    let pscale = clusters
        .iter()
        .map(|c| cnorm_induced(&c.projection, 1.0))
        .fold(1.0, f64::max);
    let vscale = bnorm.max(1.0) * pscale;
    let mut nilpotency: f64 = 0.0;
    for c in &mut clusters {
        let tol = VERIFY_TOL * vscale;
        c.index = (0..=c.multiplicity)
            .find(|&r| {
                if r == 0 {
                    cmax_abs(&c.projection) <= tol
                } else {
                    cmax_abs(&(cpow_matrix(&c.nilpotent, r))) <= 1e-6 * vscale.powi(r as i32)
                }
            })
            .unwrap_or(c.multiplicity)
            .max(1);
        nilpotency = nilpotency.max(cmax_abs(&cpow_matrix(&c.nilpotent, c.multiplicity)));
    }
    let sum: CMatrix = clusters.iter().fold(CMatrix::zeros(n, n), |acc, c| acc + &c.projection);
    let mut idempotence: f64 = 0.0;
    let mut orthogonality: f64 = 0.0;
    let mut commutation: f64 = 0.0;
    for (i, a) in clusters.iter().enumerate() {
        idempotence = idempotence.max(cmax_abs(&(&a.projection * &a.projection - &a.projection)));
        commutation = commutation.max(cmax_abs(&(&bc * &a.projection - &a.projection * &bc)));
        for (j, bcl) in clusters.iter().enumerate() {
            if i != j {
                orthogonality = orthogonality.max(cmax_abs(&(&a.projection * &bcl.projection)));
            }
        }
    }
    let residuals = SpectralResiduals {
        resolution: cmax_abs(&(sum - &id)),
        idempotence,
        orthogonality,
        commutation,
        nilpotency,
        scale: vscale,
    };
    if residuals.max() > VERIFY_TOL * vscale || !residuals.max().is_finite() {
        return Err(Error::InaccurateDecomposition {
            residual: residuals.max(),
        });
    }
    Ok(SpectralDecomposition {
        b: b.clone(),
        clusters,
        residuals,
    })
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn clusters(&self) -> &[EigenCluster] {
        &self.clusters
    }

    pub fn residuals(&self) -> SpectralResiduals {
        self.residuals
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.clusters.iter().map(|c| c.lambda).collect()
    }

    /// Index of the cluster closest to `z`.
    pub fn find(&self, z: C64) -> Option<usize> {
        (0..self.clusters.len()).min_by(|&a, &b| {
            let da = (self.clusters[a].lambda - z).norm();
            let db = (self.clusters[b].lambda - z).norm();
            da.partial_cmp(&db).unwrap()
        })
    }

    /// Clusters on or outside the unit circle.
    pub fn peripheral_indices(&self) -> Vec<usize> {
        (0..self.clusters.len())
            .filter(|&i| self.clusters[i].modulus() >= 1.0 - PERIPHERAL_TOL)
            .collect()
    }

    /// Clusters strictly inside the unit circle.
    pub fn stable_indices(&self) -> Vec<usize> {
        (0..self.clusters.len())
            .filter(|&i| self.clusters[i].modulus() < 1.0 - PERIPHERAL_TOL)
            .collect()
    }

    /// `Σ_{i ∈ subset} λ_iⁿ p_i(n) Π_i` as a complex matrix.
    pub fn power_expansion_subset(&self, n: u64, subset: &[usize]) -> CMatrix {
        let dim = self.dim();
        subset
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, &i| acc + self.clusters[i].power_term(n))
    }

    /// `Bⁿ` rebuilt from the spectral data.
    pub fn power_expansion(&self, n: u64) -> DMatrix<f64> {
        let all: Vec<usize> = (0..self.clusters.len()).collect();
        real_part(&self.power_expansion_subset(n, &all)).0
    }

    /// Sum of the projections in `subset`, real part.
    pub fn projection_sum(&self, subset: &[usize]) -> DMatrix<f64> {
        real_part(&self.power_expansion_subset(0, subset)).0
    }
}

/// `B = Σ Π_i B` split into the powers of a subset of clusters, usable in
/// place of `Bⁿ` by the transport formula.
#[derive(Clone, Debug)]
pub struct SpectralPowers<'a> {
    sd: &'a SpectralDecomposition,
    subset: Vec<usize>,
    /// Exact roots of unity `(cluster, k, d)` used for a periodic peripheral set.
    roots: Option<(Vec<usize>, usize)>,
}

impl<'a> SpectralPowers<'a> {
    pub fn new(sd: &'a SpectralDecomposition, subset: Vec<usize>) -> Self {
        SpectralPowers {
            sd,
            subset,
            roots: None,
        }
    }

    /// Peripheral part with eigenvalues replaced by exact `d`-th roots of unity.
    fn periodic(sd: &'a SpectralDecomposition, subset: Vec<usize>, d: usize) -> Self {
        let ks = subset
            .iter()
            .map(|&i| {
                let a = arg_key(sd.clusters[i].lambda);
                ((a * d as f64 / (2.0 * PI)).round() as usize) % d
            })
            .collect();
        SpectralPowers {
            sd,
            subset,
            roots: Some((ks, d)),
        }
    }
}

impl PowerSource for SpectralPowers<'_> {
    fn dim(&self) -> usize {
        self.sd.dim()
    }

    fn power(&mut self, n: u64) -> DMatrix<f64> {
        let dim = self.sd.dim();
        match &self.roots {
            Some((ks, d)) => {
                let mut acc = CMatrix::zeros(dim, dim);
                for (&i, &k) in self.subset.iter().zip(ks) {
                    let phase = 2.0 * PI * ((k as u64 * (n % *d as u64)) % *d as u64) as f64
                        / *d as f64;
                    acc += &self.sd.clusters[i].projection * C64::from_polar(1.0, phase);
                }
                real_part(&acc).0
            }
            None => real_part(&self.sd.power_expansion_subset(n, &self.subset)).0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    UniformlyStable,
    PeriodicLimit,
    MixedNonperiodic,
    Unstable,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::UniformlyStable => "uniformly_stable",
            Classification::PeriodicLimit => "periodic_limit",
            Classification::MixedNonperiodic => "mixed_nonperiodic",
            Classification::Unstable => "unstable",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSummary {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub multiplicity: usize,
    pub semisimple: bool,
    pub peripheral: bool,
    /// Induced norm of the spectral projection in the report's exponent.
    pub projector_norm: f64,
}

/// `‖G²(t)‖ ≤ sum_c · λ̄^{⌊t⌋}` with `sum_c = Σ_j sup_n |λ̄⁻ⁿ λ_jⁿ p_j(n) Π_j|_p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableBound {
    pub p: f64,
    pub lambda_bar: f64,
    /// `ln λ̄`, the exponential rate of the stable part.
    pub decay_rate: f64,
    /// Per-cluster constants `C_j`, in the order of `clusters`.
    pub constants: Vec<f64>,
    pub clusters: Vec<usize>,
    pub sum_c: f64,
    /// `λ̄ · Σ C_j`, the constant in the form `M λ̄ᵗ` as customarily reported.
    pub m: f64,
    /// `Σ C_j / λ̄`, for which `‖G²(t)‖ ≤ M λ̄ᵗ` holds for all real `t ≥ 0`.
    pub m_continuous: f64,
}

impl StableBound {
    /// Guaranteed bound on `‖G²(t)‖` in the operator norm of `X_p`.
    pub fn bound_at(&self, t: f64) -> f64 {
        self.sum_c * self.lambda_bar.powf(t.max(0.0).floor())
    }
}

/// Constants `C_j` and `λ̄` for the clusters strictly inside the unit circle.
pub fn stable_bound(
    sd: &SpectralDecomposition,
    p: f64,
    lambda_bar: Option<f64>,
) -> Result<StableBound> {
    let stable = sd.stable_indices();
    if stable.is_empty() {
        return Err(Error::EmptySpectralSet);
    }
    let rho = stable
        .iter()
        .map(|&i| sd.clusters[i].modulus())
        .fold(0.0, f64::max);
    let defective_at_max = stable.iter().any(|&i| {
        let c = &sd.clusters[i];
        !c.is_semisimple() && (c.modulus() - rho).abs() <= PERIPHERAL_TOL
    });
    let lambda_bar = match lambda_bar {
        Some(l) => l,
        None if rho > 0.0 && !defective_at_max => rho,
        None => 0.5 * (1.0 + rho),
    };
    let constants: Vec<f64> = stable
        .iter()
        .map(|&i| sup_scaled_norm(&sd.clusters[i], lambda_bar, p))
        .collect();
    let sum_c: f64 = constants.iter().sum();
    Ok(StableBound {
        p,
        lambda_bar,
        decay_rate: lambda_bar.ln(),
        constants,
        clusters: stable,
        sum_c,
        m: lambda_bar * sum_c,
        m_continuous: sum_c / lambda_bar,
    })
}

/// `sup_n |λ̄⁻ⁿ λⁿ p(n) Π|_p`, scanning `n` until the summand is provably decreasing.
fn sup_scaled_norm(c: &EigenCluster, lambda_bar: f64, p: f64) -> f64 {
    if c.is_semisimple() {
        return cnorm_induced(&c.projection, p) * if c.modulus() <= lambda_bar { 1.0 } else { f64::INFINITY };
    }
    let ratio = c.modulus() / lambda_bar;
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    let norms: Vec<f64> = c.nil_powers.iter().map(|m| cnorm_induced(m, p)).collect();
    let alpha = c.index;
    // past this point each binomial term C(n, r) ρⁿ decreases in n
    let monotone_from = ((alpha as f64 - 1.0) / (1.0 - ratio)).ceil() as u64 + 1;
    let mut best: f64 = 0.0;
    let mut n: u64 = 0;
    loop {
        let scaled = cnorm_induced(&c.power_term(n), p) / lambda_bar.powf(n as f64);
        best = best.max(scaled);
        if n >= monotone_from {
            // envelope Σ_r C(n, r) |λ|^{n-r} ‖N^r Π‖ / λ̄ⁿ bounds all later terms
            let mut env = 0.0;
            let mut binom = 1.0;
            for (r, &nr) in norms.iter().enumerate().take(alpha) {
                if r > 0 {
                    binom *= (n - r as u64 + 1) as f64 / r as f64;
                }
                let lam = if c.modulus() == 0.0 {
                    if n == r as u64 { 1.0 } else { 0.0 }
                } else {
                    c.modulus().powf((n - r as u64) as f64)
                };
                env += binom * lam * nr;
            }
            env /= lambda_bar.powf(n as f64);
            if env <= best || n > 1_000_000 {
                break;
            }
        }
        n += 1;
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub classification: Classification,
    pub period: Option<usize>,
    /// Set when a defective eigenvalue on the unit circle makes `‖Bⁿ‖` grow.
    pub polynomial_growth: bool,
    pub eigenvalues: Vec<EigenSummary>,
    pub bound: Option<StableBound>,
    pub warnings: Vec<String>,
}

/// Smallest `d` for which the peripheral set is exactly the semisimple `d`-th roots of unity.
fn detect_period(sd: &SpectralDecomposition, peripheral: &[usize]) -> Option<usize> {
    if peripheral.iter().any(|&i| !sd.clusters[i].is_semisimple()) {
        return None;
    }
    let d = peripheral.len();
    if d == 0 {
        return None;
    }
    let all_roots = peripheral.iter().all(|&i| {
        let l = sd.clusters[i].lambda;
        (pow_c(l, d as u64) - C64::new(1.0, 0.0)).norm() <= ROOT_TOL
    });
    all_roots.then_some(d)
}

/// Long-term behaviour of the semigroup generated by `B`.
pub fn classify(sd: &SpectralDecomposition, p: f64) -> AsymptoticsReport {
    let peripheral = sd.peripheral_indices();
    let unstable = sd
        .clusters
        .iter()
        .any(|c| c.modulus() > 1.0 + PERIPHERAL_TOL);
    let growth = peripheral
        .iter()
        .any(|&i| !sd.clusters[i].is_semisimple());
    let mut warnings = Vec::new();
    let (classification, period) = if unstable {
        (Classification::Unstable, None)
    } else if peripheral.is_empty() {
        (Classification::UniformlyStable, None)
    } else if growth {
        warnings.push(
            "defective eigenvalue on the unit circle: powers of B grow polynomially".to_string(),
        );
        (Classification::MixedNonperiodic, None)
    } else if let Some(d) = detect_period(sd, &peripheral) {
        (Classification::PeriodicLimit, Some(d))
    } else {
        warnings.push(
            "peripheral eigenvalues are not a full set of roots of unity: the limit is not periodic"
                .to_string(),
        );
        (Classification::MixedNonperiodic, None)
    };
    let eigenvalues = sd
        .clusters
        .iter()
        .map(|c| EigenSummary {
            re: c.lambda.re,
            im: c.lambda.im,
            modulus: c.modulus(),
            multiplicity: c.multiplicity,
            semisimple: c.is_semisimple(),
            peripheral: c.modulus() >= 1.0 - PERIPHERAL_TOL,
            projector_norm: cnorm_induced(&c.projection, p),
        })
        .collect();
    AsymptoticsReport {
        classification,
        period,
        polynomial_growth: growth,
        eigenvalues,
        bound: stable_bound(sd, p, None).ok(),
        warnings,
    }
}

/// The limit semigroup `G¹` and the remainder `G²` of a unit-speed system.
#[derive(Clone, Debug)]
pub struct SplitSemigroup<'a> {
    sd: &'a SpectralDecomposition,
    peripheral: Vec<usize>,
    stable: Vec<usize>,
    period: Option<usize>,
}

impl<'a> SplitSemigroup<'a> {
    pub fn new(sd: &'a SpectralDecomposition) -> Self {
        let peripheral = sd.peripheral_indices();
        let period = detect_period(sd, &peripheral);
        SplitSemigroup {
            sd,
            stable: sd.stable_indices(),
            peripheral,
            period,
        }
    }

    pub fn period(&self) -> Option<usize> {
        self.period
    }

    fn limit_source(&self) -> SpectralPowers<'a> {
        match self.period {
            Some(d) => SpectralPowers::periodic(self.sd, self.peripheral.clone(), d),
            None => SpectralPowers::new(self.sd, self.peripheral.clone()),
        }
    }

    /// `G¹(t)f`; zero when the peripheral set is empty.
    pub fn limit(&self, f: &StateFunction, t: f64) -> Result<StateFunction> {
        propagate_with(&mut self.limit_source(), f, t)
    }

    /// `G²(t)f`.
    pub fn stable(&self, f: &StateFunction, t: f64) -> Result<StateFunction> {
        propagate_with(&mut SpectralPowers::new(self.sd, self.stable.clone()), f, t)
    }
}

/// Sampled `G¹(t)f0`.
pub fn evaluate_limit(
    sd: &SpectralDecomposition,
    f0: &StateFunction,
    t: f64,
    xs: &[f64],
) -> Result<Samples> {
    let split = SplitSemigroup::new(sd);
    if split.peripheral.is_empty() {
        return Err(Error::EmptySpectralSet);
    }
    Ok(Samples::of(&split.limit(f0, t)?, xs))
}

/// Sampled `G²(t)f0`.
pub fn evaluate_stable(
    sd: &SpectralDecomposition,
    f0: &StateFunction,
    t: f64,
    xs: &[f64],
) -> Result<Samples> {
    Ok(Samples::of(&SplitSemigroup::new(sd).stable(f0, t)?, xs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn example_b() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, 0.25, 0.0, 0.0, 0.5, 0.75, 0.0, 0.0, 0.5, 0.0, 1.0, 0.0, 0.0,
            ],
        )
    }

    #[test]
    fn identity_has_one_cluster() {
        let sd = spectral_decompose(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(sd.clusters().len(), 1);
        let c = &sd.clusters()[0];
        assert_eq!(c.multiplicity, 3);
        assert!(c.is_semisimple());
        assert!(cmax_abs(&(&c.projection - CMatrix::identity(3, 3))) < 1e-12);
        let rep = classify(&sd, 1.0);
        assert_eq!(rep.classification, Classification::PeriodicLimit);
        assert_eq!(rep.period, Some(1));
    }

    #[test]
    fn jordan_block_powers() {
        let l = 0.5;
        let j = DMatrix::from_row_slice(2, 2, &[l, 1.0, 0.0, l]);
        let sd = spectral_decompose(&j).unwrap();
        assert_eq!(sd.clusters().len(), 1);
        assert_eq!(sd.clusters()[0].index, 2);
        let p5 = sd.power_expansion(5);
        let expected = DMatrix::from_row_slice(2, 2, &[l.powi(5), 5.0 * l.powi(4), 0.0, l.powi(5)]);
        assert!(max_abs(&(p5 - expected)) < 1e-10);
        assert!(max_abs(&(sd.power_expansion(0) - DMatrix::identity(2, 2))) < 1e-10);
    }

    #[test]
    fn example_matrix_spectrum_and_powers() {
        let b = example_b();
        let sd = spectral_decompose(&b).unwrap();
        let mut re: Vec<f64> = sd.eigenvalues().iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, e) in re.iter().zip([-1.0, -0.5, 0.5, 1.0]) {
            assert!((a - e).abs() < 1e-10);
        }
        assert!(max_abs(&(sd.power_expansion(7) - b.pow(7))) < 1e-10);
        let rep = classify(&sd, 1.0);
        assert_eq!(rep.classification, Classification::PeriodicLimit);
        assert_eq!(rep.period, Some(2));
        let bound = rep.bound.unwrap();
        assert!((bound.lambda_bar - 0.5).abs() < 1e-10);
    }

    #[test]
    fn diagonal_half_is_constant_limit() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]);
        let rep = classify(&spectral_decompose(&b).unwrap(), 1.0);
        assert_eq!(rep.classification, Classification::PeriodicLimit);
        assert_eq!(rep.period, Some(1));
    }

    #[test]
    fn scalar_half_bound() {
        let sd = spectral_decompose(&DMatrix::from_element(1, 1, 0.5)).unwrap();
        let bound = stable_bound(&sd, 1.0, None).unwrap();
        assert!((bound.lambda_bar - 0.5).abs() < 1e-14);
        assert!((bound.m - 0.5).abs() < 1e-12);
        assert_eq!(classify(&sd, 1.0).classification, Classification::UniformlyStable);
    }

    #[test]
    fn unstable_and_defective_peripheral() {
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        assert_eq!(
            classify(&spectral_decompose(&b).unwrap(), 1.0).classification,
            Classification::Unstable
        );
        let j = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let rep = classify(&spectral_decompose(&j).unwrap(), 1.0);
        assert_eq!(rep.classification, Classification::MixedNonperiodic);
        assert!(rep.polynomial_growth);
    }

    #[test]
    fn partial_roots_are_not_periodic() {
        // eigenvalues 1 and i, -i but not -1
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        let rep = classify(&spectral_decompose(&b).unwrap(), 1.0);
        assert_eq!(rep.classification, Classification::MixedNonperiodic);
        assert!(!rep.polynomial_growth);
        // rotation by a quarter turn together with its square roots: d = 4
        let r4 = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0,
        ]);
        let rep = classify(&spectral_decompose(&r4).unwrap(), 1.0);
        assert_eq!(rep.period, Some(4));
    }

    #[test]
    fn close_clusters_are_ambiguous() {
        // a Jordan block next to a simple eigenvalue, neither clearly one
        // triple eigenvalue nor clearly two clusters
        let near = |d: f64| {
            DMatrix::from_row_slice(3, 3, &[0.5, 1.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.5 + d])
        };
        assert!(matches!(spectral_decompose(&near(1e-5)), Err(Error::ClusterAmbiguity { .. })));
        let sd = spectral_decompose(&near(1e-3)).unwrap();
        let mult: Vec<usize> = sd.clusters().iter().map(|c| c.multiplicity).collect();
        assert_eq!(mult, vec![1, 2]);
        let sd = spectral_decompose(&near(1e-9)).unwrap();
        assert_eq!(sd.clusters()[0].multiplicity, 3);
    }

    #[test]
    fn defective_stable_bound_dominates_powers() {
        let j = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]);
        let sd = spectral_decompose(&j).unwrap();
        let bound = stable_bound(&sd, 1.0, None).unwrap();
        assert!((bound.lambda_bar - 0.75).abs() < 1e-12);
        for n in 0..60u64 {
            let norm = crate::linalg::norm1(&j.pow(n as u32));
            assert!(norm <= bound.sum_c * bound.lambda_bar.powi(n as i32) * (1.0 + 1e-9));
        }
    }
}
