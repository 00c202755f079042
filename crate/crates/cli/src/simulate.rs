use std::path::Path;

use rayon::prelude::*;

use netwave_core::oracle::{upwind_advance, GridSolution};
use netwave_core::{CharacteristicsTracer, NormalizedSolver, Samples};

use crate::error::CliError;
use crate::output::{matrix_sha256, snapshot_name, write_run, Manifest, Snapshot};
use crate::scenario::Scenario;

pub struct SimulateOptions {
    pub times: Option<Vec<f64>>,
    pub oracle_only: bool,
    pub grid: Option<usize>,
}

/// Evaluate the scenario at the requested times and write the run to `out`.
pub fn simulate(scenario: &Scenario, opts: &SimulateOptions, out: &Path) -> Result<Manifest, CliError> {
    let ph = scenario.system()?;
    let f0 = scenario.initial_state(&ph)?;
    let times = opts.times.clone().unwrap_or_else(|| scenario.run.times.clone());
    if let Some(t) = times.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(CliError::Parse(format!("--times: {t} is not a valid time")));
    }
    let snapshots_meta: Vec<Snapshot> = times
        .iter()
        .enumerate()
        .map(|(k, &t)| Snapshot {
            t,
            file: snapshot_name(k),
        })
        .collect();
    let (manifest, snapshots) = if opts.oracle_only {
        let n = opts.grid.unwrap_or(scenario.run.oracle_grid);
        let xs = Samples::midpoints(n);
        let snaps: Vec<Samples> = if ph.is_unit_speed() {
            times
                .par_iter()
                .map(|&t| {
                    upwind_advance(&ph, GridSolution::from_averages(&f0, n), t)
                        .map(|g| g.samples())
                        .map_err(|e| CliError::Parse(format!("--times: {e}")))
                })
                .collect::<Result<_, _>>()?
        } else {
            let tracer =
                CharacteristicsTracer::new(&ph).map_err(|e| CliError::from_core("velocities", e))?;
            times.par_iter().map(|&t| tracer.sample(&f0, t, &xs)).collect()
        };
        let manifest = Manifest {
            scenario: scenario.name.clone(),
            mode: "oracle".into(),
            labels: ph.labels(),
            c: None,
            l: None,
            ell: None,
            b_tilde_sha256: None,
            grid: Some(n),
            snapshots: snapshots_meta,
        };
        (manifest, snaps)
    } else {
        let solver = NormalizedSolver::new(&ph, scenario.run.c, scenario.run.max_denominator)
            .map_err(|e| match e {
                netwave_core::Error::RationalDependenceViolated(m) => CliError::RationalDependence(
                    format!("{m}; the explicit formula is unavailable, rerun with --oracle-only"),
                ),
                e => CliError::from_core("port_hamiltonian", e),
            })?;
        let xs = Samples::uniform(scenario.run.samples);
        let snaps: Vec<Samples> = times
            .par_iter()
            .map(|&t| {
                let mut s = solver.clone();
                s.apply(&f0, t)
                    .map(|g| Samples::of(&g, &xs))
                    .map_err(|e| CliError::from_core("run.times", e))
            })
            .collect::<Result<_, _>>()?;
        let table = solver.table();
        let manifest = Manifest {
            scenario: scenario.name.clone(),
            mode: "explicit".into(),
            labels: ph.labels(),
            c: table.c,
            l: Some(table.multiples.clone()),
            ell: Some(table.total_multiple()),
            b_tilde_sha256: Some(matrix_sha256(solver.subdivided().b_tilde())),
            grid: None,
            snapshots: snapshots_meta,
        };
        (manifest, snaps)
    };
    write_run(out, &manifest, &snapshots)?;
    Ok(manifest)
}
