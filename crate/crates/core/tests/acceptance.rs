//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netwave_core::fixtures::{
    beam, example1, example1_b, example1_projections, random_grid_state, random_state,
};
use netwave_core::linalg::{max_abs, C64};
use netwave_core::oracle::{laplace_resolvent_l1, upwind_advance, GridSolution};
use netwave_core::{
    compare, resolvent_apply, semigroup_property_check, spectral_decompose, stable_bound,
    CharacteristicsTracer, NormalizedSolver, PortHamiltonian, Semigroup,
    SplitSemigroup, Velocity,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

type Check = fn() -> Result<Outcome, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Match computed eigenvalues to expected ones; largest pairing distance.
fn match_eigenvalues(computed: &[C64], expected: &[C64]) -> f64 {
    let mut left: Vec<C64> = expected.to_vec();
    let mut worst: f64 = 0.0;
    for z in computed {
        let (i, d) = left
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        worst = worst.max(d);
        left.remove(i);
    }
    worst
}

fn with_multiplicity(sd: &netwave_core::SpectralDecomposition) -> Vec<C64> {
    sd.clusters()
        .iter()
        .flat_map(|c| std::iter::repeat_n(c.lambda, c.multiplicity))
        .collect()
}

fn example1_spectrum() -> Result<Outcome, String> {
    let sd = spectral_decompose(&example1_b()).map_err(err)?;
    let expected: Vec<C64> = [1.0, -1.0, 0.5, -0.5].iter().map(|&r| C64::new(r, 0.0)).collect();
    let eig_err = match_eigenvalues(&with_multiplicity(&sd), &expected);
    let (p1, p2) = example1_projections();
    let proj_err = |z: f64, p: &DMatrix<f64>| -> f64 {
        sd.find(C64::new(z, 0.0))
            .map(|i| max_abs(&(sd.projection_sum(&[i]) - p)))
            .unwrap_or(f64::INFINITY)
    };
    let e1 = proj_err(1.0, &p1);
    let e2 = proj_err(-1.0, &p2);
    Ok(outcome(
        eig_err <= 1e-10 && e1 <= 1e-10 && e2 <= 1e-10,
        format!("eigenvalue error {eig_err:.1e}, projection errors {e1:.1e}, {e2:.1e}"),
    ))
}

fn example1_limit() -> Result<Outcome, String> {
    let ph = example1();
    let sd = spectral_decompose(ph.b()).map_err(err)?;
    let bound = stable_bound(&sd, 1.0, None).map_err(err)?;
    let split = SplitSemigroup::new(&sd);
    let mut sg = Semigroup::new(&ph).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_period: f64 = 0.0;
    for _ in 0..10 {
        let f = random_state(&mut rng, 2, 2);
        let norm = f.l1_norm();
        for t in 1..=20 {
            let t = t as f64;
            let diff = sg.apply(&f, t).map_err(err)?.sub(&split.limit(&f, t).map_err(err)?);
            worst_ratio = worst_ratio.max(diff.l1_norm() / (bound.sum_c * 0.5f64.powf(t) * norm));
        }
        for k in 0..10 {
            let t = 0.37 * k as f64 + 0.05;
            let a = split.limit(&f, t).map_err(err)?;
            let b = split.limit(&f, t + 2.0).map_err(err)?;
            worst_period = worst_period.max(a.sub(&b).l1_norm());
        }
    }
    Ok(outcome(
        (bound.lambda_bar - 0.5).abs() < 1e-12
            && split.period() == Some(2)
            && worst_ratio <= 1.0
            && worst_period <= 1e-10,
        format!(
            "C = {:.4}, max ratio to bound {worst_ratio:.3}, period defect {worst_period:.1e}",
            bound.sum_c
        ),
    ))
}

fn beam_example() -> Result<Outcome, String> {
    let ph = beam();
    let sd = spectral_decompose(ph.b()).map_err(err)?;
    let q = 0.125f64.powf(0.25);
    let i = C64::new(0.0, 1.0);
    let expected = vec![
        C64::new(q, 0.0),
        C64::new(-q, 0.0),
        i * q,
        -i * q,
        i / 2f64.sqrt(),
        -i / 2f64.sqrt(),
        i * 0.5,
        -i * 0.5,
    ];
    let root_err = match_eigenvalues(&with_multiplicity(&sd), &expected);
    let bound = stable_bound(&sd, 1.0, None).map_err(err)?;
    let lambda_ok = (bound.lambda_bar - 0.5f64.sqrt()).abs() <= 1e-12;
    let rate = -(2f64.ln()) / 2.0;
    let rate_ok = (bound.decay_rate - rate).abs() <= 1e-12;
    let m_ok = (bound.m - 8.41).abs() <= 0.02 * 8.41;
    let mut sg = Semigroup::new(&ph).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let f = random_state(&mut rng, 4, 4);
        for t in 1..=20 {
            let t = t as f64;
            let g = sg.apply(&f, t).map_err(err)?;
            worst = worst.max(g.l1_norm() / (bound.m * (rate * t).exp() * f.l1_norm()));
        }
    }
    Ok(outcome(
        root_err <= 1e-9 && lambda_ok && rate_ok && m_ok && worst <= 1.0,
        format!(
            "root error {root_err:.1e}, λ̄ = {:.12}, rate = {:.12}, M = {:.4}, max ratio to bound {worst:.3}",
            bound.lambda_bar, bound.decay_rate, bound.m
        ),
    ))
}

fn oracle_equivalence() -> Result<Outcome, String> {
    const N: usize = 256;
    let times = [
        0.25, 0.75, 1.0, 1.5, 2.0, 2.125, 3.0, 3.375, 4.0, 4.5, 5.0, 5.0625, 6.0, 6.875, 7.0,
        7.9375, 8.0, 9.0, 9.5, 10.0,
    ];
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (ph, mp, mm) in [(example1(), 2, 2), (beam(), 4, 4)] {
        let f = random_grid_state(&mut rng, mp, mm, 64);
        let mut sg = Semigroup::new(&ph).map_err(err)?;
        let mut grid = GridSolution::from_averages(&f, N);
        for &t in &times {
            grid = upwind_advance(&ph, grid, t).map_err(err)?;
            let exact = sg.sample(&f, t, &grid.midpoints()).map_err(err)?;
            let m = compare(&grid.samples(), &exact, 1.0).map_err(err)?;
            worst = worst.max(m.max);
        }
    }
    Ok(outcome(worst <= 1e-12, format!("max deviation {worst:.1e} over 20 times on 2 systems")))
}

fn semigroup_law() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for (ph, mp, mm) in [(example1(), 2, 2), (beam(), 4, 4)] {
        for _ in 0..20 {
            let f = random_state(&mut rng, mp, mm);
            let t = rng.random_range(0.0..4.0);
            let s = rng.random_range(0.0..4.0);
            worst = worst.max(semigroup_property_check(&ph, &f, t, s).map_err(err)?);
        }
    }
    Ok(outcome(worst <= 1e-9, format!("max defect {worst:.1e}")))
}

fn similarity() -> Result<Outcome, String> {
    let vs = vec![
        Velocity::constant(2.0),
        Velocity::unit(),
        Velocity::unit(),
        Velocity::unit(),
    ];
    let ph = PortHamiltonian::from_boundary_matrix(2, 2, vs, example1_b()).map_err(err)?;
    let mut solver = NormalizedSolver::new(&ph, None, 1_000_000).map_err(err)?;
    let tracer = CharacteristicsTracer::new(&ph).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f = random_state(&mut rng, 2, 2);
    let mut worst: f64 = 0.0;
    for t in [0.4, 1.0, 1.75, 2.6, 4.3] {
        let g = solver.apply(&f, t).map_err(err)?;
        worst = worst.max(tracer.l1_distance(&f, t, &g));
    }
    Ok(outcome(
        worst <= 1e-8,
        format!(
            "c = {}, l = {:?}, max L1 distance {worst:.1e}",
            solver.table().c.unwrap_or(f64::NAN),
            solver.table().multiples
        ),
    ))
}

fn resolvent_identity() -> Result<Outcome, String> {
    let ph = example1();
    let mut sg = Semigroup::new(&ph).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = random_state(&mut rng, 2, 2);
    let mut worst: f64 = 0.0;
    for lambda in [C64::new(2.0, 0.0), C64::new(3.0, 1.0)] {
        let r = resolvent_apply(&ph, lambda, &f).map_err(err)?;
        worst = worst.max(laplace_resolvent_l1(&mut sg, &f, &r, 1e-8).map_err(err)?);
    }
    Ok(outcome(worst <= 1e-6, format!("max L1 distance {worst:.1e}")))
}

/// Random matrix scaled to spectral radius one; every third one is built
/// from a Jordan form with a well-conditioned change of basis.
fn random_matrix(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let n = rng.random_range(2..=12);
    let m = if k % 3 == 2 {
        let mut j = DMatrix::zeros(n, n);
        let mut i = 0;
        while i < n {
            let size = rng.random_range(1..=3).min(n - i);
            let lambda = rng.random_range(-1.0..1.0);
            for r in 0..size {
                j[(i + r, i + r)] = lambda;
                if r + 1 < size {
                    j[(i + r, i + r + 1)] = 1.0;
                }
            }
            i += size;
        }
        let s = DMatrix::identity(n, n)
            + DMatrix::from_fn(n, n, |_, _| 0.3 * rng.random_range(-1.0..1.0) / n as f64);
        let s_inv = s.clone().try_inverse().expect("diagonally dominant");
        &s * j * s_inv
    } else {
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    };
    let rho = m
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if rho > 0.0 {
        m / rho
    } else {
        m
    }
}

fn spectral_algebra() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut defective = 0;
    for k in 0..50 {
        let b = random_matrix(&mut rng, k);
        let sd = match spectral_decompose(&b) {
            Ok(sd) => sd,
            Err(e) => {
                failures.push(format!("matrix {k}: {e}"));
                continue;
            }
        };
        defective += sd.clusters().iter().filter(|c| c.index > 1).count();
        let r = sd.residuals();
        let mut rel = r.max() / r.scale;
        let mut power = DMatrix::identity(b.nrows(), b.nrows());
        for n in 1..=64u64 {
            power = &power * &b;
            let scale = r.scale * power.norm().max(1.0);
            rel = rel.max(max_abs(&(sd.power_expansion(n) - &power)) / scale);
        }
        if rel > 1e-8 {
            failures.push(format!("matrix {k}: relative residual {rel:.1e}"));
        }
        worst = worst.max(rel);
    }
    Ok(outcome(
        failures.is_empty() && defective > 0,
        if failures.is_empty() {
            format!("50 matrices, {defective} defective clusters, max relative residual {worst:.1e}")
        } else {
            failures.join("; ")
        },
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check, Option<Duration>); 8] = [
        ("1 example-1 spectrum and projections", example1_spectrum, Some(Duration::from_secs(1))),
        ("2 example-1 limit semigroup", example1_limit, Some(Duration::from_secs(10))),
        ("3 beam spectrum, rate and bound", beam_example, Some(Duration::from_secs(10))),
        ("4 explicit formula vs upwind", oracle_equivalence, Some(Duration::from_secs(30))),
        ("5 semigroup law", semigroup_law, None),
        ("6 similarity under rescaling", similarity, None),
        ("7 resolvent identity", resolvent_identity, None),
        ("8 spectral algebra properties", spectral_algebra, None),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (passed, detail) = match result {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let ok = passed && in_time;
        if !ok {
            failed += 1;
        }
        let budget = match limit {
            Some(l) if !in_time => format!(" over budget {:.0} s", l.as_secs_f64()),
            _ => String::new(),
        };
        println!(
            "criterion {name}: {} ({:.2} s{budget}) {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} of 8 criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all 8 criteria passed");
        ExitCode::SUCCESS
    }
}
