//! End-to-end runs shared by the command line and the C interface: load a
//! model or MLN, detect symmetry, lift and solve, and build JSON reports.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::lift::{build_lifted_model, LiftError, LiftedModel};
use crate::mln::{
    ground_mln, parse_evidence, parse_mln, Evidence, GroundingMap, Mln, MlnError, RenamingGroup,
};
use crate::model::{parse_model, Model, ModelError};
use crate::oracle::{exact_enumerate, ExactResult, OracleError};
use crate::solve::{cutting_plane_map, MapOptions, MapResult, SolveError, Space};
use crate::symmetry::{
    orbits_of, verify_generator, Domain, OrbitPartition, SearchSymmetry, SymmetryError,
    SymmetrySource, TrivialSymmetry,
};

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mln(#[from] MlnError),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl Error {
    /// Process exit code: 2 for input errors, 3 for solver failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Model(_) | Error::Mln(_) | Error::Config(_) => 2,
            Error::Solve(_) => 3,
            Error::Symmetry(_) | Error::Lift(_) | Error::Oracle(_) => 1,
        }
    }
}

/// Where lifting generators come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Search,
    Renaming,
    None,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "search" => Ok(Method::Search),
            "renaming" => Ok(Method::Renaming),
            "none" => Ok(Method::None),
            _ => Err(format!(
                "unknown method '{s}' (expected search, renaming or none)"
            )),
        }
    }
}

/// A ground model, with its grounding when it came from an MLN.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: Model,
    pub mln: Option<(Mln, GroundingMap)>,
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

impl Problem {
    pub fn from_fgm(text: &str) -> Result<Self, Error> {
        Ok(Self {
            model: parse_model(text)?,
            mln: None,
        })
    }

    pub fn from_mln(text: &str, evidence: Option<&str>, domain_size: usize) -> Result<Self, Error> {
        let mln = parse_mln(text)?;
        let ev = match evidence {
            Some(t) => parse_evidence(t, &mln)?,
            None => Evidence::default(),
        };
        let (model, gmap) = ground_mln(&mln, domain_size, &ev)?;
        Ok(Self {
            model,
            mln: Some((mln, gmap)),
        })
    }

    /// Loads `path` as an MLN when it ends in `.mln`, else as FGM text.
    pub fn load(
        path: &Path,
        domain_size: Option<usize>,
        evidence: Option<&Path>,
    ) -> Result<Self, Error> {
        let text = read(path)?;
        if path.extension().is_some_and(|e| e == "mln") {
            let d = domain_size
                .ok_or_else(|| Error::Config("an MLN input needs --domain-size".into()))?;
            let ev = evidence.map(read).transpose()?;
            Self::from_mln(&text, ev.as_deref(), d)
        } else {
            if evidence.is_some() || domain_size.is_some() {
                return Err(Error::Config(
                    "--evidence and --domain-size apply to MLN inputs only".into(),
                ));
            }
            Self::from_fgm(&text)
        }
    }

    pub fn symmetry(&self, method: Method) -> Result<Box<dyn SymmetrySource>, Error> {
        Ok(match method {
            Method::Search => Box::new(SearchSymmetry::new(&self.model)),
            Method::Renaming => {
                let (_, gmap) = self.mln.as_ref().ok_or_else(|| {
                    Error::Config("the renaming method needs an MLN input".into())
                })?;
                Box::new(RenamingGroup::new(&self.model, gmap))
            }
            Method::None => Box::new(TrivialSymmetry::new()),
        })
    }

    /// FGM text of the ground model; MLN inputs get one comment per atom.
    pub fn ground_fgm(&self) -> String {
        let mut out = String::new();
        if let Some((mln, gmap)) = &self.mln {
            for (v, atom) in gmap.atoms.iter().enumerate() {
                let _ = writeln!(out, "# var {v} {}", gmap.atom_name(atom, mln));
            }
        }
        out.push_str(&self.model.to_fgm());
        out
    }
}

/// Members listed per cell in orbit reports.
pub const MEMBERS_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub rep: usize,
    pub size: usize,
    /// At most [`MEMBERS_CAP`] members.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionReport {
    pub domain: Domain,
    pub num_cells: usize,
    pub cells: Vec<CellReport>,
}

impl PartitionReport {
    pub fn new(p: &OrbitPartition) -> Self {
        Self {
            domain: p.domain,
            num_cells: p.num_cells(),
            cells: p
                .cells
                .iter()
                .map(|c| CellReport {
                    rep: c[0],
                    size: c.len(),
                    members: c.iter().take(MEMBERS_CAP).copied().collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrbitCounts {
    pub node_orbits: usize,
    pub edge_orbits: usize,
    pub arc_orbits: usize,
    pub factor_orbits: usize,
    pub feature_orbits: usize,
}

impl OrbitCounts {
    pub fn of(lifted: &LiftedModel) -> Self {
        Self {
            node_orbits: lifted.node_orbits.num_cells(),
            edge_orbits: lifted.edge_orbits.num_cells(),
            arc_orbits: lifted.arc_orbits.num_cells(),
            factor_orbits: lifted.factor_orbits.num_cells(),
            feature_orbits: lifted.feature_orbits.num_cells(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitReport {
    pub method: Method,
    pub num_vars: usize,
    pub num_features: usize,
    pub num_generators: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_order: Option<u128>,
    /// Every generator passed the sampled automorphism check.
    pub generators_verified: bool,
    #[serde(flatten)]
    pub counts: OrbitCounts,
    pub lifted_cells: usize,
    pub partitions: Vec<PartitionReport>,
}

/// Sample count and seed for generator checks in reports.
const VERIFY_SAMPLES: usize = 100;

pub fn orbit_report(problem: &Problem, method: Method, seed: u64) -> Result<OrbitReport, Error> {
    Ok(orbit_analysis(problem, method, seed)?.0)
}

/// The orbit report together with the lifted model it describes.
pub fn orbit_analysis(
    problem: &Problem,
    method: Method,
    seed: u64,
) -> Result<(OrbitReport, LiftedModel), Error> {
    let model = &problem.model;
    let sym = problem.symmetry(method)?;
    let gens = sym.generators();
    let lifted = build_lifted_model(model, gens)?;
    let verified = gens
        .generators
        .iter()
        .all(|g| verify_generator(model, g, VERIFY_SAMPLES, seed).passed());
    let partitions = [
        &lifted.node_orbits,
        &lifted.edge_orbits,
        &lifted.arc_orbits,
        &lifted.factor_orbits,
        &lifted.feature_orbits,
    ]
    .into_iter()
    .map(PartitionReport::new)
    .collect();
    let report = OrbitReport {
        method,
        num_vars: model.num_vars(),
        num_features: model.num_features(),
        num_generators: gens.generators.len(),
        group_order: gens.group_order,
        generators_verified: verified,
        counts: OrbitCounts::of(&lifted),
        lifted_cells: lifted.num_cells(),
        partitions,
    };
    Ok((report, lifted))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitComparison {
    pub search: OrbitReport,
    pub renaming: OrbitReport,
    /// Every renaming cell (variables and features) lies inside a search cell.
    pub renaming_refines_search: bool,
}

/// Orbit reports for both methods on an MLN input.
pub fn compare_orbits(problem: &Problem, seed: u64) -> Result<OrbitComparison, Error> {
    let model = &problem.model;
    let search = problem.symmetry(Method::Search)?;
    let renaming = problem.symmetry(Method::Renaming)?;
    let mut refines = true;
    for domain in [Domain::Vars, Domain::Features] {
        let s = orbits_of(search.generators(), domain, model)?;
        let r = orbits_of(renaming.generators(), domain, model)?;
        refines &= r.is_finer_than(&s);
    }
    Ok(OrbitComparison {
        search: orbit_report(problem, Method::Search, seed)?,
        renaming: orbit_report(problem, Method::Renaming, seed)?,
        renaming_refines_search: refines,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapReport {
    pub method: Method,
    #[serde(flatten)]
    pub counts: OrbitCounts,
    #[serde(flatten)]
    pub result: MapResult,
    pub symmetry_ms: f64,
}

/// Detects symmetry with `method`, lifts when `space` is lifted and solves.
pub fn run_map(
    problem: &Problem,
    method: Method,
    space: Space,
    opts: &MapOptions,
) -> Result<MapReport, Error> {
    let model = &problem.model;
    let t = Instant::now();
    let sym = problem.symmetry(method)?;
    let lifted = build_lifted_model(model, sym.generators())?;
    let stabilized = match (space, opts.polytope) {
        (Space::Lifted, crate::solve::Polytope::Cycle) => {
            Some(lifted.stabilized_graphs(model, sym.as_ref())?)
        }
        _ => None,
    };
    let symmetry_ms = t.elapsed().as_secs_f64() * 1e3;
    let result = match space {
        Space::Ground => cutting_plane_map(model, None, None, opts)?,
        Space::Lifted => cutting_plane_map(model, Some(&lifted), stabilized.as_deref(), opts)?,
    };
    Ok(MapReport {
        method,
        counts: OrbitCounts::of(&lifted),
        result,
        symmetry_ms,
    })
}

/// Default variable limit for exact enumeration.
pub const EXACT_LIMIT: usize = 20;

pub fn run_exact(problem: &Problem, limit: usize) -> Result<ExactResult, Error> {
    Ok(exact_enumerate(&problem.model, limit)?)
}
