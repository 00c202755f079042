use serde::Serialize;

use netwave_core::spectral::SpectralResiduals;
use netwave_core::{classify, spectral_decompose, AsymptoticsReport, Classification, NormalizedSolver};

use crate::error::CliError;
use crate::scenario::Scenario;

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeReport {
    pub scenario: Option<String>,
    pub labels: Vec<String>,
    pub unit_speed: bool,
    /// Reference-time factor; 1 for unit-speed systems.
    pub c: f64,
    pub multiples: Vec<usize>,
    /// Dimension of the matrix that was analysed.
    pub ell: usize,
    pub residuals: SpectralResiduals,
    pub asymptotics: AsymptoticsReport,
    pub summary: String,
}

/// Four significant decimals without trailing zeros.
fn short(x: f64) -> String {
    let s = format!("{:.4}", x);
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" { "0".into() } else { s }
}

fn short_c(re: f64, im: f64) -> String {
    if im.abs() < 5e-5 {
        short(re)
    } else if im > 0.0 {
        format!("{}+{}i", short(re), short(im))
    } else {
        format!("{}-{}i", short(re), short(-im))
    }
}

pub fn summary_line(r: &AsymptoticsReport) -> String {
    let stable: Vec<String> = r
        .eigenvalues
        .iter()
        .filter(|e| !e.peripheral)
        .map(|e| short_c(e.re, e.im))
        .collect();
    match r.classification {
        Classification::PeriodicLimit => format!(
            "periodic_limit, d={}; stable eigenvalues {{{}}}",
            r.period.unwrap_or(0),
            stable.join(", ")
        ),
        Classification::UniformlyStable => match &r.bound {
            Some(b) => format!(
                "uniformly_stable, rate {:.4}, M = {:.4}",
                b.decay_rate, b.m
            ),
            None => "uniformly_stable".into(),
        },
        c => c.as_str().to_string(),
    }
}

pub fn analyze(scenario: &Scenario) -> Result<AnalyzeReport, CliError> {
    let ph = scenario.system()?;
    let (b, c, multiples) = if ph.is_unit_speed() {
        (ph.b().clone(), 1.0, vec![1; ph.dim()])
    } else {
        let solver = NormalizedSolver::new(&ph, scenario.run.c, scenario.run.max_denominator)
            .map_err(|e| CliError::from_core("port_hamiltonian", e))?;
        let sub = solver.subdivided();
        (sub.b_tilde().clone(), sub.c, sub.multiples.clone())
    };
    let sd = spectral_decompose(&b).map_err(|e| CliError::from_core("spectrum", e))?;
    let asymptotics = classify(&sd, scenario.run.norm_p);
    Ok(AnalyzeReport {
        scenario: scenario.name.clone(),
        labels: ph.labels(),
        unit_speed: ph.is_unit_speed(),
        c,
        multiples,
        ell: b.nrows(),
        residuals: sd.residuals(),
        summary: summary_line(&asymptotics),
        asymptotics,
    })
}

pub fn render(r: &AnalyzeReport) -> String {
    let mut out = String::new();
    if let Some(name) = &r.scenario {
        out += &format!("scenario: {name}\n");
    }
    out += &format!("components: {}\n", r.labels.join(" "));
    if !r.unit_speed {
        out += &format!(
            "reduced to unit speed: c = {}, l = {:?}, dimension {}\n",
            r.c, r.multiples, r.ell
        );
        out += "rates below are per unit of reduced time c*t\n";
    }
    out += "eigenvalues:\n";
    for e in &r.asymptotics.eigenvalues {
        out += &format!(
            "  {:<20} |λ| = {:.6}  mult {}  {}{}  |Π| = {:.4}\n",
            short_c(e.re, e.im),
            e.modulus,
            e.multiplicity,
            if e.semisimple { "semisimple" } else { "defective" },
            if e.peripheral { ", peripheral" } else { "" },
            e.projector_norm
        );
    }
    if let Some(p) = r.asymptotics.period {
        out += &format!("period d = {p}\n");
    }
    if let Some(b) = &r.asymptotics.bound {
        out += &format!(
            "stable part: λ̄ = {:.6}, rate = {:.6}, sum C = {:.6}, M = {:.6} (p = {})\n",
            b.lambda_bar, b.decay_rate, b.sum_c, b.m, b.p
        );
    }
    out += &format!("spectral residual: {:.3e}\n", r.residuals.max());
    for w in &r.asymptotics.warnings {
        out += &format!("warning: {w}\n");
    }
    out += &r.summary;
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_numbers() {
        assert_eq!(short(0.5), "0.5");
        assert_eq!(short(-0.5), "-0.5");
        assert_eq!(short(1.0), "1");
        assert_eq!(short(-1e-9), "0");
        assert_eq!(short_c(0.0, -0.25), "0-0.25i");
    }
}
