//! MAP inference by linear programming over the local polytope, optionally
//! tightened with cycle inequalities in an in-out cutting-plane loop.

mod lp;
mod separation;
mod simplex;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::lift::{lift_vector, LiftError, LiftedModel, StabilizedGraph};
use crate::model::{Model, OvercompleteIndex};

pub use lp::{
    build_ground_lp, build_lifted_lp, build_local_lp, uniform_point, LinearProgram, Row, Sense,
};
pub use separation::{
    mirror_shortest_path, separate_cycles_ground, separate_cycles_lifted, CycleConstraint,
    MirrorWalk, WeightedEdge,
};
pub use simplex::{simplex_solve, LpError, Simplex, SimplexSolution, SimplexStatus};

use separation::{ground_edges, separate, SepGraph};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error("local LP is {0:?}")]
    NotOptimal(SimplexStatus),
    #[error("lifted cycle separation needs stabilized graphs")]
    MissingStabilized,
    #[error("alpha must lie in (0, 1], got {0}")]
    BadAlpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Polytope {
    Local,
    Cycle,
}

impl FromStr for Polytope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "local" => Ok(Polytope::Local),
            "cycle" => Ok(Polytope::Cycle),
            _ => Err(format!("unknown polytope '{s}' (expected local or cycle)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Ground,
    Lifted,
}

impl FromStr for Space {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ground" => Ok(Space::Ground),
            "lifted" => Ok(Space::Lifted),
            _ => Err(format!("unknown space '{s}' (expected ground or lifted)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapOptions {
    pub polytope: Polytope,
    /// Weight of the outer point in the separation point.
    pub alpha: f64,
    /// Minimum violation of an added cut.
    pub tol: f64,
    pub max_cuts: usize,
    pub max_rounds: usize,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self {
            polytope: Polytope::Local,
            alpha: 0.99,
            tol: 1e-6,
            max_cuts: 1000,
            max_rounds: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapStatus {
    /// Local LP solved.
    Optimal,
    /// No violated cycle inequality remains.
    Converged,
    /// Cut or round limit reached; the last bound is still valid.
    Cap,
    /// Separation returned a cut already in the LP.
    Stalled,
}

impl MapStatus {
    pub fn is_success(self) -> bool {
        matches!(self, MapStatus::Optimal | MapStatus::Converged)
    }
}

impl fmt::Display for MapStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MapStatus::Optimal => "optimal",
            MapStatus::Converged => "converged",
            MapStatus::Cap => "cap",
            MapStatus::Stalled => "stalled",
        };
        f.write_str(s)
    }
}

/// Rounded solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decode {
    /// `x_v = 1` iff the value-1 node marginal exceeds 0.5.
    pub assignment: Vec<bool>,
    /// Score of `assignment` under the model.
    pub score: f64,
    /// Per node orbit rounding (lifted only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit_values: Option<Vec<bool>>,
    /// Per node orbit value-1 marginal, the fraction of the orbit set to 1
    /// (lifted only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centroid: Option<Vec<f64>>,
    /// Some coordinate of the solution is not integral.
    pub fractional: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub lp: f64,
    pub separation: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapResult {
    pub status: MapStatus,
    pub space: Space,
    pub polytope: Polytope,
    pub objective: f64,
    /// LP optimum after each solve; non-increasing.
    pub bounds: Vec<f64>,
    pub cuts: usize,
    /// Cutting-plane rounds performed.
    pub iterations: usize,
    pub lp_vars: usize,
    pub lp_rows: usize,
    pub decode: Decode,
    /// Optimal pseudomarginal in the solve space.
    pub tau: Vec<f64>,
    #[serde(skip)]
    pub cut_list: Vec<CycleConstraint>,
    pub timings_ms: Timings,
}

impl MapResult {
    /// Bound curve as CSV: `iteration,bound`.
    pub fn bounds_csv(&self) -> String {
        let mut s = String::from("iteration,bound\n");
        for (i, b) in self.bounds.iter().enumerate() {
            s.push_str(&format!("{i},{b}\n"));
        }
        s
    }
}

const INTEGRAL_TOL: f64 = 1e-6;

/// Rounds a ground pseudomarginal.
pub fn decode_ground(model: &Model, index: &OvercompleteIndex, tau: &[f64]) -> Decode {
    let assignment: Vec<bool> = (0..model.num_vars())
        .map(|v| tau[index.node(v, 1)] > 0.5)
        .collect();
    Decode {
        score: model.score(&assignment).expect("assignment length matches"),
        assignment,
        orbit_values: None,
        centroid: None,
        fractional: is_fractional(tau),
    }
}

/// Rounds a lifted pseudomarginal per node orbit and broadcasts to variables.
pub fn decode_lifted(model: &Model, lifted: &LiftedModel, tau_bar: &[f64]) -> Decode {
    let centroid: Vec<f64> = lifted
        .node_orbits
        .cells
        .iter()
        .map(|cell| tau_bar[lifted.cells.rho[lifted.index.node(cell[0], 1)]])
        .collect();
    let orbit_values: Vec<bool> = centroid.iter().map(|&c| c > 0.5).collect();
    let assignment: Vec<bool> = (0..model.num_vars())
        .map(|v| orbit_values[lifted.node_orbits.cell_of[v]])
        .collect();
    Decode {
        score: model.score(&assignment).expect("assignment length matches"),
        assignment,
        orbit_values: Some(orbit_values),
        centroid: Some(centroid),
        fractional: is_fractional(tau_bar),
    }
}

fn is_fractional(tau: &[f64]) -> bool {
    tau.iter()
        .any(|&t| t > INTEGRAL_TOL && t < 1.0 - INTEGRAL_TOL)
}

fn solve_optimal(simplex: &mut Simplex) -> Result<SimplexSolution, SolveError> {
    let sol = simplex.solve()?;
    if sol.status != SimplexStatus::Optimal {
        return Err(SolveError::NotOptimal(sol.status));
    }
    Ok(sol)
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// MAP by LP relaxation in the ground space, or in the lifted space when
/// `lifted` is given. Lifted cycle separation uses `stabilized`.
pub fn cutting_plane_map(
    model: &Model,
    lifted: Option<&LiftedModel>,
    stabilized: Option<&[StabilizedGraph]>,
    opts: &MapOptions,
) -> Result<MapResult, SolveError> {
    if !(opts.alpha > 0.0 && opts.alpha <= 1.0) {
        return Err(SolveError::BadAlpha(opts.alpha));
    }
    let start = Instant::now();
    let mut timings = Timings::default();
    let ground_index;
    let index = match lifted {
        Some(l) => &l.index,
        None => {
            ground_index = OvercompleteIndex::new(model);
            &ground_index
        }
    };

    let mut simplex = Simplex::new(build_local_lp(model, lifted))?;
    let t = Instant::now();
    let mut sol = solve_optimal(&mut simplex)?;
    timings.lp += ms(t);
    let mut bounds = vec![sol.value];
    let mut cut_list = Vec::new();
    let mut iterations = 0;

    let status = match opts.polytope {
        Polytope::Local => MapStatus::Optimal,
        Polytope::Cycle => {
            let ground_edge_list;
            let graphs: Vec<SepGraph> = match lifted {
                None => {
                    ground_edge_list = ground_edges(index);
                    vec![SepGraph {
                        num_nodes: model.num_vars(),
                        edges: &ground_edge_list,
                        roots: (0..model.num_vars()).map(|v| (v, v)).collect(),
                    }]
                }
                Some(_) => stabilized
                    .ok_or(SolveError::MissingStabilized)?
                    .iter()
                    .map(|s| SepGraph {
                        num_nodes: s.node_orbits.num_cells(),
                        edges: &s.edges,
                        roots: vec![(s.root, s.root_var)],
                    })
                    .collect(),
            };
            let uniform = uniform_point(model, index);
            let mut tau_in = match lifted {
                Some(l) => lift_vector(&uniform, &l.cells)?,
                None => uniform,
            };
            let mut seen = HashSet::new();
            loop {
                if cut_list.len() >= opts.max_cuts || iterations >= opts.max_rounds {
                    break MapStatus::Cap;
                }
                let t = Instant::now();
                let sigma: Vec<f64> = sol
                    .x
                    .iter()
                    .zip(&tau_in)
                    .map(|(o, i)| opts.alpha * o + (1.0 - opts.alpha) * i)
                    .collect();
                let mut cut = separate(&graphs, &sigma, opts.tol);
                if cut.is_none() {
                    tau_in = sigma;
                    cut = separate(&graphs, &sol.x, opts.tol);
                }
                timings.separation += ms(t);
                let Some(cut) = cut else {
                    break MapStatus::Converged;
                };
                if !seen.insert(cut.row.key()) {
                    break MapStatus::Stalled;
                }
                simplex.add_row(cut.row.clone())?;
                cut_list.push(cut);
                iterations += 1;
                let t = Instant::now();
                sol = solve_optimal(&mut simplex)?;
                timings.lp += ms(t);
                bounds.push(sol.value);
            }
        }
    };

    let decode = match lifted {
        Some(l) => decode_lifted(model, l, &sol.x),
        None => decode_ground(model, index, &sol.x),
    };
    timings.total = ms(start);
    Ok(MapResult {
        status,
        space: if lifted.is_some() {
            Space::Lifted
        } else {
            Space::Ground
        },
        polytope: opts.polytope,
        objective: sol.value,
        bounds,
        cuts: cut_list.len(),
        iterations,
        lp_vars: simplex.lp().num_vars,
        lp_rows: simplex.lp().rows.len(),
        decode,
        tau: sol.x,
        cut_list,
        timings_ms: timings,
    })
}
