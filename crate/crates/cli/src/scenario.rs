//! Scenario files: TOML documents describing a system, initial data and run
//! parameters. The schema is documented in `SCENARIO.md`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use netwave_core::{
    build_port_hamiltonian, Edge, EdgeSystem, MatrixFunction, MetricGraph, PiecewisePoly, Poly,
    PortHamiltonian, StateFunction, Velocity, VertexCondition,
};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port_hamiltonian: Option<PortHamiltonianSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edge_system: Vec<EdgeSystemSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertex_condition: Vec<VertexConditionSpec>,
    pub initial: InitialSpec,
    #[serde(default)]
    pub run: RunSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortHamiltonianSpec {
    pub m_plus: usize,
    pub m_minus: usize,
    /// One entry per component; omitted means unit speed everywhere.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub velocities: Vec<VelocitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_out: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_in: Option<Vec<Vec<f64>>>,
}

/// A constant speed, or a piecewise-polynomial speed or slowness profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VelocitySpec {
    Constant(f64),
    Profile(ProfileSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    #[serde(flatten)]
    pub function: PiecewiseSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Speed,
    Slowness,
}

/// Piecewise polynomial on `[0, 1]`: `coeffs[i]` are the monomial
/// coefficients of piece `i` in the local variable `x - breaks[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseSpec {
    pub breaks: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<usize>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub id: usize,
    pub tail: usize,
    pub head: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSystemSpec {
    pub edge: usize,
    pub m: MatrixSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<MatrixSpec>,
}

/// Constant matrix (rows), or row-major entries that are each a constant or
/// a piecewise polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Constant(Vec<Vec<f64>>),
    Entries { dim: usize, entries: Vec<FunctionSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Constant(f64),
    Piecewise(PiecewiseSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexConditionSpec {
    pub vertex: usize,
    pub phi: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub component: Vec<ComponentSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breaks: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSpec {
    pub times: Vec<f64>,
    /// Number of points `k / samples` written per snapshot.
    pub samples: usize,
    pub norm_p: f64,
    pub max_denominator: u64,
    /// Reference constant `c`; found automatically when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub oracle_grid: usize,
    /// Sample points per edge when diagonalizing edge systems.
    pub diag_samples: usize,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            times: vec![0.0],
            samples: 100,
            norm_p: 1.0,
            max_denominator: 1_000_000,
            c: None,
            oracle_grid: 256,
            diag_samples: 8,
        }
    }
}

fn parse_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Parse(format!("{field}: {msg}"))
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(parse_error(field, "rows must be non-empty and of equal length"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn piecewise(field: &str, spec: &PiecewiseSpec) -> Result<PiecewisePoly, CliError> {
    let pieces = spec.coeffs.iter().map(|c| Poly::new(c.clone())).collect();
    let p = PiecewisePoly::new(spec.breaks.clone(), pieces).map_err(|e| parse_error(field, e))?;
    if p.start() != 0.0 || p.end() != 1.0 {
        return Err(parse_error(field, "breakpoints must run from 0 to 1"));
    }
    Ok(p)
}

fn function(field: &str, spec: &FunctionSpec) -> Result<PiecewisePoly, CliError> {
    match spec {
        FunctionSpec::Constant(v) => Ok(PiecewisePoly::constant(0.0, 1.0, *v)),
        FunctionSpec::Piecewise(p) => piecewise(field, p),
    }
}

fn matrix_function(field: &str, spec: &MatrixSpec) -> Result<MatrixFunction, CliError> {
    match spec {
        MatrixSpec::Constant(rows) => {
            let m = matrix(field, rows)?;
            if !m.is_square() {
                return Err(parse_error(field, "matrix must be square"));
            }
            Ok(MatrixFunction::constant(&m))
        }
        MatrixSpec::Entries { dim, entries } => {
            let fs = entries
                .iter()
                .enumerate()
                .map(|(k, e)| function(&format!("{field}.entries[{k}]"), e))
                .collect::<Result<Vec<_>, _>>()?;
            MatrixFunction::new(*dim, fs).map_err(|e| parse_error(field, e))
        }
    }
}

fn velocity(field: &str, spec: &VelocitySpec) -> Result<Velocity, CliError> {
    match spec {
        VelocitySpec::Constant(c) => Ok(Velocity::constant(*c)),
        VelocitySpec::Profile(p) => {
            let f = piecewise(field, &p.function)?;
            Ok(match p.kind {
                ProfileKind::Speed => Velocity::Speed(f),
                ProfileKind::Slowness => Velocity::Slowness(f),
            })
        }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        Scenario::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Scenario, CliError> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    fn check(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(parse_error(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let direct = self.port_hamiltonian.is_some();
        let network =
            self.graph.is_some() || !self.edge_system.is_empty() || !self.vertex_condition.is_empty();
        if direct == network {
            return Err(parse_error(
                "port_hamiltonian",
                "give exactly one of [port_hamiltonian] or [graph] with edge systems and vertex conditions",
            ));
        }
        if network && self.graph.is_none() {
            return Err(parse_error("graph", "missing"));
        }
        if let Some(ph) = &self.port_hamiltonian {
            if ph.b.is_some() == (ph.xi_out.is_some() || ph.xi_in.is_some()) {
                return Err(parse_error(
                    "port_hamiltonian",
                    "give either b or both xi_out and xi_in",
                ));
            }
            if ph.b.is_none() && (ph.xi_out.is_none() || ph.xi_in.is_none()) {
                return Err(parse_error("port_hamiltonian", "xi_out and xi_in go together"));
            }
        }
        let run = &self.run;
        if let Some((k, t)) = run.times.iter().enumerate().find(|(_, t)| !t.is_finite() || **t < 0.0) {
            return Err(parse_error(&format!("run.times[{k}]"), format!("{t} is not a valid time")));
        }
        if run.samples == 0 {
            return Err(parse_error("run.samples", "must be positive"));
        }
        if run.norm_p.is_nan() || run.norm_p < 1.0 {
            return Err(parse_error("run.norm_p", "must be at least 1"));
        }
        if run.oracle_grid == 0 {
            return Err(parse_error("run.oracle_grid", "must be positive"));
        }
        Ok(())
    }

    /// The canonical diagonal system.
    pub fn system(&self) -> Result<PortHamiltonian, CliError> {
        if let Some(spec) = &self.port_hamiltonian {
            let n = spec.m_plus + spec.m_minus;
            let velocities = if spec.velocities.is_empty() {
                vec![Velocity::unit(); n]
            } else {
                spec.velocities
                    .iter()
                    .enumerate()
                    .map(|(k, v)| velocity(&format!("port_hamiltonian.velocities[{k}]"), v))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let result = match (&spec.b, &spec.xi_out, &spec.xi_in) {
                (Some(b), _, _) => PortHamiltonian::from_boundary_matrix(
                    spec.m_plus,
                    spec.m_minus,
                    velocities,
                    matrix("port_hamiltonian.b", b)?,
                ),
                (None, Some(o), Some(i)) => PortHamiltonian::from_xi(
                    spec.m_plus,
                    spec.m_minus,
                    velocities,
                    matrix("port_hamiltonian.xi_out", o)?,
                    matrix("port_hamiltonian.xi_in", i)?,
                ),
                _ => unreachable!("checked on parse"),
            };
            return result.map_err(|e| CliError::from_core("port_hamiltonian", e));
        }
        let g = self.graph.as_ref().expect("checked on parse");
        let graph = MetricGraph::new(
            g.vertices.clone(),
            g.edges
                .iter()
                .map(|e| Edge {
                    id: e.id,
                    tail: e.tail,
                    head: e.head,
                })
                .collect(),
        )
        .map_err(|e| CliError::from_core("graph", e))?;
        let systems = self
            .edge_system
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let field = format!("edge_system[{k}]");
                let m = matrix_function(&format!("{field}.m"), &s.m)?;
                let n = s
                    .n
                    .as_ref()
                    .map(|n| matrix_function(&format!("{field}.n"), n))
                    .transpose()?;
                Ok(EdgeSystem { edge: s.edge, m, n })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let conds = self
            .vertex_condition
            .iter()
            .enumerate()
            .map(|(k, c)| {
                Ok(VertexCondition {
                    vertex: c.vertex,
                    phi: matrix(&format!("vertex_condition[{k}].phi"), &c.phi)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        build_port_hamiltonian(&graph, &systems, &conds, self.run.diag_samples)
            .map_err(|e| CliError::from_core("edge_system", e))
    }

    /// Initial data in the component order of `ph`.
    pub fn initial_state(&self, ph: &PortHamiltonian) -> Result<StateFunction, CliError> {
        let comps = &self.initial.component;
        if comps.len() != ph.dim() {
            return Err(parse_error(
                "initial.component",
                format!("{} components given, the system has {}", comps.len(), ph.dim()),
            ));
        }
        let labels = ph.labels();
        let fs = comps
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let field = format!("initial.component[{k}]");
                if let Some(l) = &c.label {
                    if *l != labels[k] {
                        return Err(parse_error(
                            &format!("{field}.label"),
                            format!("expected {}, found {l}", labels[k]),
                        ));
                    }
                }
                match (c.value, &c.breaks, &c.coeffs) {
                    (Some(v), None, None) => Ok(PiecewisePoly::constant(0.0, 1.0, v)),
                    (None, Some(b), Some(cs)) => piecewise(
                        &field,
                        &PiecewiseSpec {
                            breaks: b.clone(),
                            coeffs: cs.clone(),
                        },
                    ),
                    _ => Err(parse_error(&field, "give either value or breaks and coeffs")),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        StateFunction::new(ph.m_plus(), fs).map_err(|e| parse_error("initial.component", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1

[port_hamiltonian]
m_plus = 1
m_minus = 1
b = [[0.0, 1.0], [1.0, 0.0]]

[[initial.component]]
value = 1.0

[[initial.component]]
breaks = [0.0, 0.5, 1.0]
coeffs = [[0.0, 1.0], [2.0]]
"#;

    #[test]
    fn minimal_scenario_parses() {
        let s = Scenario::parse(MINIMAL).unwrap();
        let ph = s.system().unwrap();
        assert_eq!(ph.dim(), 2);
        let f = s.initial_state(&ph).unwrap();
        assert_eq!(f.eval(0.25), vec![1.0, 0.25]);
        assert_eq!(s.run, RunSpec::default());
    }

    #[test]
    fn serialization_is_idempotent() {
        let s = Scenario::parse(MINIMAL).unwrap();
        let once = s.to_toml();
        let twice = Scenario::parse(&once).unwrap().to_toml();
        assert_eq!(once, twice);
        assert_eq!(Scenario::parse(&once).unwrap(), s);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("schema_version = 1", "schema_version = 7");
        assert!(matches!(Scenario::parse(&bad), Err(CliError::Parse(m)) if m.contains("schema_version")));
        let bad = MINIMAL.replace("[[0.0, 1.0], [2.0]]", "[[0.0, 1.0]]");
        let s = Scenario::parse(&bad).unwrap();
        let err = s.initial_state(&s.system().unwrap()).unwrap_err();
        assert!(matches!(err, CliError::Parse(m) if m.contains("initial.component[1]")));
    }

    #[test]
    fn exactly_one_system_description() {
        let both = format!("{MINIMAL}\n[graph]\nvertices = [1, 2]\nedges = []\n");
        assert!(matches!(Scenario::parse(&both), Err(CliError::Parse(_))));
    }

    #[test]
    fn integers_are_accepted_for_reals() {
        let text = MINIMAL
            .replace("b = [[0.0, 1.0], [1.0, 0.0]]", "velocities = [1, 2]\nb = [[0, 1], [1, 0]]")
            .replace("value = 1.0", "value = 1");
        let s = Scenario::parse(&text).unwrap();
        let ph = s.system().unwrap();
        assert_eq!(ph.velocities()[1].constant_speed(), Some(2.0));
        assert_eq!(s.initial_state(&ph).unwrap().eval(0.1)[0], 1.0);
    }
}
