//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::{BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use liftmap::fixtures;
use liftmap::lift::{build_lifted_model, lift_vector, unlift_vector};
use liftmap::mln::{atom_signature, orbit_sizes_analytic, renaming_orbits};
use liftmap::model::{Model, OvercompleteIndex};
use liftmap::oracle::{
    configuration_orbits, enumerate_cycle_constraints, exact_enumerate, exhaustive_automorphisms,
};
use liftmap::pipeline::{self, Method, Problem};
use liftmap::solve::{
    separate_cycles_ground, separate_cycles_lifted, MapOptions, MapResult, MapStatus, Polytope,
    Space,
};
use liftmap::symmetry::{
    build_colored_factor_graph, refine_colors, verify_generator, PermutationPair, SearchSymmetry,
    SymmetrySource,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)*));
        }
    };
}

const SEP_TOL: f64 = 1e-6;

fn named(name: &str, model: Model) -> (String, Model) {
    (name.to_string(), model)
}

fn mln_model(text: &str, evidence: Option<&str>, d: usize) -> Model {
    Problem::from_mln(text, evidence, d).unwrap().model
}

fn random_models() -> Vec<(String, Model)> {
    (0..20)
        .map(|s| {
            named(
                &format!("random{s}"),
                fixtures::random_symmetric_pairwise(s),
            )
        })
        .collect()
}

/// Every fixture model with at most 12 variables.
fn fixture_models() -> Vec<(String, Model)> {
    let mut out = vec![
        named("ex1", fixtures::ex1()),
        named("triangle", fixtures::triangle()),
        named("unary", fixtures::unary(0.7)),
        named("complete3", fixtures::complete_symmetric(3)),
        named("three_way", fixtures::three_way()),
        named("frucht", fixtures::frucht()),
        named("q2_d2", mln_model(fixtures::Q2_MLN, None, 2)),
        named("q2_d3", mln_model(fixtures::Q2_MLN, None, 3)),
        named(
            "lovers_d2",
            mln_model(fixtures::LOVERS_SMOKERS_MLN, None, 2),
        ),
        named(
            "friends_d3",
            mln_model(
                fixtures::FRIENDS_SMOKERS_MLN,
                Some(fixtures::FRIENDS_SMOKERS_EVIDENCE),
                3,
            ),
        ),
    ];
    out.extend(random_models());
    out.retain(|(_, m)| m.num_vars() <= 12);
    out
}

fn small(max_vars: usize) -> Vec<(String, Model)> {
    let mut v = fixture_models();
    v.retain(|(_, m)| m.num_vars() <= max_vars);
    v
}

fn opts(polytope: Polytope, max_cuts: usize) -> MapOptions {
    MapOptions {
        polytope,
        max_cuts,
        ..MapOptions::default()
    }
}

fn solve(model: &Model, space: Space, o: &MapOptions) -> Result<MapResult, String> {
    let problem = Problem {
        model: model.clone(),
        mln: None,
    };
    pipeline::run_map(&problem, Method::Search, space, o)
        .map(|r| r.result)
        .map_err(|e| e.to_string())
}

/// All variable permutations in the group generated by `gens`.
fn pi_closure(gens: &[PermutationPair], n: usize) -> BTreeSet<Vec<usize>> {
    let id: Vec<usize> = (0..n).collect();
    let mut seen = BTreeSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(p) = queue.pop_front() {
        for g in gens {
            let q: Vec<usize> = p.iter().map(|&i| g.pi[i]).collect();
            if seen.insert(q.clone()) {
                queue.push_back(q);
            }
        }
    }
    seen
}

fn sorted_sizes(cells: &[Vec<usize>]) -> Vec<usize> {
    let mut s: Vec<usize> = cells.iter().map(Vec::len).collect();
    s.sort_unstable();
    s
}

/// A random point satisfying node normalization and node-edge consistency.
/// Node values are often 1/2 so that frustrated cycles are common.
fn random_local_point(model: &Model, index: &OvercompleteIndex, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut tau = vec![0.0; index.len()];
    let mu: Vec<f64> = (0..model.num_vars())
        .map(|_| if rng.gen_bool(0.5) { 0.5 } else { rng.gen() })
        .collect();
    for (v, &m) in mu.iter().enumerate() {
        tau[index.node(v, 0)] = 1.0 - m;
        tau[index.node(v, 1)] = m;
    }
    for (e, &(u, v)) in index.edges().iter().enumerate() {
        let lo = (mu[u] + mu[v] - 1.0).max(0.0);
        let hi = mu[u].min(mu[v]);
        let p11 = if rng.gen_bool(0.3) {
            lo
        } else {
            lo + (hi - lo) * rng.gen::<f64>()
        };
        tau[index.edge(e, 1, 1)] = p11;
        tau[index.edge(e, 1, 0)] = mu[u] - p11;
        tau[index.edge(e, 0, 1)] = mu[v] - p11;
        tau[index.edge(e, 0, 0)] = 1.0 - mu[u] - mu[v] + p11;
    }
    tau
}

fn c1_ex1_end_to_end() -> Outcome {
    let t = Instant::now();
    let model = fixtures::ex1();
    let problem = Problem::from_fgm(fixtures::EX1_FGM).map_err(|e| e.to_string())?;
    let (report, lifted) =
        pipeline::orbit_analysis(&problem, Method::Search, 1).map_err(|e| e.to_string())?;
    ensure!(
        report.group_order == Some(4),
        "group order {:?}",
        report.group_order
    );
    ensure!(report.generators_verified, "generator verification failed");
    ensure!(
        lifted.node_orbits.cells == vec![vec![0, 3], vec![1, 2]],
        "node orbits {:?}",
        lifted.node_orbits.cells
    );
    let edges = sorted_sizes(&lifted.edge_orbits.cells);
    ensure!(edges == [1, 4], "edge orbit sizes {edges:?}");
    let arcs = sorted_sizes(&lifted.arc_orbits.cells);
    ensure!(arcs == [2, 4, 4], "arc orbit sizes {arcs:?}");
    ensure!(
        lifted.num_cells() == 11 && lifted.cells.ground_len() == 28,
        "lp sizes {} vs {}",
        lifted.num_cells(),
        lifted.cells.ground_len()
    );
    let exact = exact_enumerate(&model, 20).map_err(|e| e.to_string())?;
    let local = opts(Polytope::Local, 1000);
    let ground = solve(&model, Space::Ground, &local)?;
    let lift = solve(&model, Space::Lifted, &local)?;
    ensure!(
        lift.lp_vars == 11 && ground.lp_vars == 28,
        "lp vars {} / {}",
        lift.lp_vars,
        ground.lp_vars
    );
    for (name, r) in [("ground", &ground), ("lifted", &lift)] {
        ensure!(
            (r.objective - 4.0).abs() <= 1e-6 && (r.objective - exact.map_value).abs() <= 1e-6,
            "{name} objective {} vs exact {}",
            r.objective,
            exact.map_value
        );
    }
    ensure!(
        exact.argmax.contains(&ground.decode.assignment),
        "ground decode {:?} not a maximizer",
        ground.decode.assignment
    );
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 1.0, "took {secs:.3}s");
    Ok(format!(
        "order 4, 11 vs 28 LP vars, objectives 4.0, {secs:.3}s"
    ))
}

fn c2_generator_validity() -> Outcome {
    let mut checked = vec![
        named("ex1", fixtures::ex1()),
        named("triangle", fixtures::triangle()),
        named("frucht", fixtures::frucht()),
    ];
    checked.extend(random_models());
    let mut num_gens = 0;
    for (name, model) in &checked {
        ensure!(model.num_vars() <= 12, "{name} too large");
        let sym = SearchSymmetry::new(model);
        for (k, g) in sym.generators().generators.iter().enumerate() {
            let v = verify_generator(model, g, 100, 1000 + k as u64);
            ensure!(v.passed(), "{name} generator {k}: {v:?}");
            num_gens += 1;
        }
    }
    let mut compared = 0;
    for (name, model) in fixture_models() {
        let n = model.num_vars();
        if n > 6 {
            continue;
        }
        let sym = SearchSymmetry::new(&model);
        let found = pi_closure(&sym.generators().generators, n);
        let exhaustive: BTreeSet<Vec<usize>> = exhaustive_automorphisms(&model, 6)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|p| p.pi)
            .collect();
        ensure!(
            found == exhaustive,
            "{name}: search group {} vs exhaustive {}",
            found.len(),
            exhaustive.len()
        );
        if let Some(order) = sym.generators().group_order {
            ensure!(
                order == found.len() as u128,
                "{name}: reported order {order} vs {}",
                found.len()
            );
        }
        compared += 1;
    }
    Ok(format!(
        "{num_gens} generators verified on {} models; {compared} groups equal the exhaustive oracle",
        checked.len()
    ))
}

fn c3_lifted_equals_ground() -> Outcome {
    let t = Instant::now();
    let models = fixture_models();
    let mut max_cuts_used = 0;
    for (name, model) in &models {
        let local = opts(Polytope::Local, 1000);
        let g = solve(model, Space::Ground, &local)?;
        let l = solve(model, Space::Lifted, &local)?;
        ensure!(
            (g.objective - l.objective).abs() <= 1e-6,
            "{name} LOCAL ground {} lifted {}",
            g.objective,
            l.objective
        );
        let cycle = opts(Polytope::Cycle, 50);
        let g = solve(model, Space::Ground, &cycle)?;
        let l = solve(model, Space::Lifted, &cycle)?;
        for (space, r) in [("ground", &g), ("lifted", &l)] {
            ensure!(
                r.status.is_success(),
                "{name} CYCLE {space} status {} after {} cuts",
                r.status,
                r.cuts
            );
        }
        ensure!(
            (g.objective - l.objective).abs() <= 1e-6,
            "{name} CYCLE ground {} lifted {}",
            g.objective,
            l.objective
        );
        max_cuts_used = max_cuts_used.max(g.cuts).max(l.cuts);
    }
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.1}s");
    Ok(format!(
        "{} models at LOCAL and CYCLE, at most {max_cuts_used} cuts, {secs:.2}s",
        models.len()
    ))
}

fn c4_cycle_tightening() -> Outcome {
    let model = fixtures::triangle();
    let exact = exact_enumerate(&model, 20).map_err(|e| e.to_string())?;
    for space in [Space::Ground, Space::Lifted] {
        let local = solve(&model, space, &opts(Polytope::Local, 1000))?;
        ensure!(
            local.objective.abs() <= 1e-8,
            "{space:?} LOCAL objective {}",
            local.objective
        );
        let cycle = solve(&model, space, &opts(Polytope::Cycle, 1000))?;
        ensure!(
            cycle.status == MapStatus::Converged,
            "{space:?} CYCLE status {}",
            cycle.status
        );
        ensure!(
            (cycle.objective + 1.0).abs() <= 1e-8
                && (cycle.objective - exact.map_value).abs() <= 1e-8,
            "{space:?} CYCLE objective {} vs exact {}",
            cycle.objective,
            exact.map_value
        );
        ensure!(cycle.cuts >= 1, "{space:?} no cuts");
        ensure!(
            cycle.bounds.windows(2).all(|w| w[1] <= w[0] + 1e-8),
            "{space:?} bounds increase: {:?}",
            cycle.bounds
        );
    }
    Ok("LOCAL 0, CYCLE -1 in both spaces with non-increasing bounds".into())
}

fn c5_separation_completeness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut violated, mut symmetric) = (0, 0);
    for (name, model) in small(8) {
        let index = OvercompleteIndex::new(&model);
        let mut points = vec![solve(&model, Space::Ground, &opts(Polytope::Local, 1000))?.tau];
        points.extend((0..6).map(|_| random_local_point(&model, &index, &mut rng)));
        for (k, tau) in points.iter().enumerate() {
            let short = enumerate_cycle_constraints(&model, tau, 6);
            let best_short = short.iter().map(|c| 1.0 - c.lhs).fold(0.0, f64::max);
            if best_short <= SEP_TOL {
                continue;
            }
            violated += 1;
            let all = enumerate_cycle_constraints(&model, tau, model.num_vars());
            let best = all.iter().map(|c| 1.0 - c.lhs).fold(0.0, f64::max);
            let Some(cut) = separate_cycles_ground(&model, tau, SEP_TOL) else {
                return Err(format!("{name} point {k}: no cut, oracle violation {best}"));
            };
            ensure!(
                (cut.violation() - best).abs() <= 1e-9,
                "{name} point {k}: separation {} vs oracle {best}",
                cut.violation()
            );
        }

        let sym = SearchSymmetry::new(&model);
        let lifted = build_lifted_model(&model, sym.generators()).map_err(|e| e.to_string())?;
        let stabilized = lifted
            .stabilized_graphs(&model, &sym)
            .map_err(|e| e.to_string())?;
        for k in 0..6 {
            let tau = random_local_point(&model, &index, &mut rng);
            let tau_bar = lift_vector(&tau, &lifted.cells).map_err(|e| e.to_string())?;
            let tau_sym = unlift_vector(&tau_bar, &lifted.cells).map_err(|e| e.to_string())?;
            let g = separate_cycles_ground(&model, &tau_sym, SEP_TOL).map(|c| c.violation());
            let l = separate_cycles_lifted(&lifted, &stabilized, &tau_bar, SEP_TOL)
                .map(|c| c.violation());
            match (g, l) {
                (None, None) => {}
                (Some(a), Some(b)) if (a - b).abs() <= 1e-9 => symmetric += 1,
                _ => {
                    return Err(format!(
                        "{name} symmetric point {k}: ground {g:?} lifted {l:?}"
                    ))
                }
            }
        }
    }
    ensure!(
        violated > 0 && symmetric > 0,
        "no violated points were generated"
    );
    Ok(format!(
        "{violated} violated points match the oracle maximum; {symmetric} symmetric points agree"
    ))
}

fn c6_orbit_constant_marginals() -> Outcome {
    let models = fixture_models();
    for (name, model) in &models {
        let exact = exact_enumerate(model, 20).map_err(|e| e.to_string())?;
        let sym = SearchSymmetry::new(model);
        let lifted = build_lifted_model(model, sym.generators()).map_err(|e| e.to_string())?;
        for cell in &lifted.cells.members {
            let v0 = exact.mean_params[cell[0]];
            for &x in cell {
                ensure!(
                    (exact.mean_params[x] - v0).abs() <= 1e-9,
                    "{name}: coordinates {} and {x} differ: {v0} vs {}",
                    cell[0],
                    exact.mean_params[x]
                );
            }
        }
    }
    Ok(format!(
        "{} models, every lifted cell constant",
        models.len()
    ))
}

fn c7_centroids() -> Outcome {
    let models = small(10);
    for (name, model) in &models {
        let exact = exact_enumerate(model, 20).map_err(|e| e.to_string())?;
        let sym = SearchSymmetry::new(model);
        let orbits =
            configuration_orbits(model, sym.generators(), 10).map_err(|e| e.to_string())?;
        ensure!(
            (orbits.centroid_max - exact.map_value).abs() <= 1e-9,
            "{name}: centroid max {} vs exact {}",
            orbits.centroid_max,
            exact.map_value
        );
        let index = OvercompleteIndex::new(model);
        let theta = model.to_overcomplete().to_vector(&index);
        for o in &orbits.orbits {
            let c = o.centroid(model, &index);
            let value: f64 = c.iter().zip(&theta).map(|(a, b)| a * b).sum();
            ensure!(
                (value - o.value).abs() <= 1e-9,
                "{name}: centroid objective {value} vs mean score {}",
                o.value
            );
        }
    }
    let k3 = fixtures::complete_symmetric(3);
    let sym = SearchSymmetry::new(&k3);
    let orbits = configuration_orbits(&k3, sym.generators(), 10).map_err(|e| e.to_string())?;
    ensure!(
        orbits.orbits.len() == 4,
        "complete 3-var model has {} orbits",
        orbits.orbits.len()
    );
    Ok(format!(
        "{} models; complete 3-var model has 4 orbits",
        models.len()
    ))
}

fn c8_renaming_orbits() -> Outcome {
    let problem = Problem::from_mln(fixtures::Q2_MLN, None, 5).map_err(|e| e.to_string())?;
    let gmap = &problem.mln.as_ref().unwrap().1;
    let (vars, _) = renaming_orbits(gmap);
    let sizes = sorted_sizes(&vars.cells);
    ensure!(sizes == [1, 4, 4, 4, 12], "q2 d=5 orbit sizes {sizes:?}");
    for cell in &vars.cells {
        let sig = atom_signature(&gmap.atoms[cell[0]], gmap);
        let analytic = orbit_sizes_analytic(&sig, 5, gmap.num_distinguished);
        ensure!(
            analytic == cell.len() as u128,
            "analytic size {analytic} vs enumerated {}",
            cell.len()
        );
    }

    let mlns: [(&str, &str, Option<&str>, usize); 3] = [
        ("q2", fixtures::Q2_MLN, None, 1),
        ("lovers", fixtures::LOVERS_SMOKERS_MLN, None, 1),
        (
            "friends",
            fixtures::FRIENDS_SMOKERS_MLN,
            Some(fixtures::FRIENDS_SMOKERS_EVIDENCE),
            3,
        ),
    ];
    let mut refined = 0;
    for &(name, text, evidence, min_d) in &mlns {
        for d in min_d.max(2)..=4 {
            let p = Problem::from_mln(text, evidence, d).map_err(|e| e.to_string())?;
            let cmp = pipeline::compare_orbits(&p, 3).map_err(|e| e.to_string())?;
            ensure!(
                cmp.renaming_refines_search,
                "{name} d={d}: renaming not within search"
            );
            refined += 1;
        }
    }
    let mut counts = Vec::new();
    for &(name, text, evidence, _) in &mlns {
        let c: Vec<usize> = [5, 10, 20]
            .iter()
            .map(|&d| {
                let p = Problem::from_mln(text, evidence, d).unwrap();
                renaming_orbits(&p.mln.as_ref().unwrap().1).0.num_cells()
            })
            .collect();
        ensure!(
            c.windows(2).all(|w| w[0] == w[1]),
            "{name} counts {c:?} vary with domain size"
        );
        counts.push(format!("{name} {}", c[0]));
    }
    Ok(format!(
        "q2 sizes 1,4,4,4,12; {refined} groundings refine search; constant counts: {}",
        counts.join(", ")
    ))
}

fn c9_lovers_smokers() -> Outcome {
    let t = Instant::now();
    let mut counts = Vec::new();
    for d in 3..=6 {
        let p =
            Problem::from_mln(fixtures::LOVERS_SMOKERS_MLN, None, d).map_err(|e| e.to_string())?;
        if d == 4 {
            ensure!(
                p.model.num_vars() == 28,
                "d=4 has {} variables",
                p.model.num_vars()
            );
        }
        let r = pipeline::orbit_report(&p, Method::Search, 9).map_err(|e| e.to_string())?;
        ensure!(
            r.generators_verified,
            "d={d}: generator verification failed"
        );
        counts.push((r.counts, r.lifted_cells));
    }
    ensure!(
        counts.windows(2).all(|w| w[0] == w[1]),
        "orbit counts vary: {counts:?}"
    );
    let p = Problem::from_mln(fixtures::LOVERS_SMOKERS_MLN, None, 4).map_err(|e| e.to_string())?;
    let local = opts(Polytope::Local, 1000);
    let g = solve(&p.model, Space::Ground, &local)?;
    let l = solve(&p.model, Space::Lifted, &local)?;
    ensure!(
        (g.objective - l.objective).abs() <= 1e-6,
        "LOCAL ground {} lifted {}",
        g.objective,
        l.objective
    );
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1}s");
    let (c, cells) = &counts[0];
    Ok(format!(
        "28 vars at d=4; {} node / {} edge orbits and {cells} cells for d=3..6; LOCAL {:.6} both; {secs:.2}s",
        c.node_orbits, c.edge_orbits, g.objective
    ))
}

fn c10_frucht() -> Outcome {
    let model = fixtures::frucht();
    let sym = SearchSymmetry::new(&model);
    let gens = sym.generators();
    ensure!(
        gens.group_order == Some(1) && gens.generators.iter().all(|g| g.is_identity()),
        "non-trivial group {:?}",
        gens.group_order
    );
    let lifted = build_lifted_model(&model, gens).map_err(|e| e.to_string())?;
    ensure!(
        lifted.node_orbits.num_cells() == 12,
        "{} node orbits",
        lifted.node_orbits.num_cells()
    );
    ensure!(
        lifted.num_cells() == lifted.cells.ground_len(),
        "lifted size {} vs ground {}",
        lifted.num_cells(),
        lifted.cells.ground_len()
    );
    let g = build_colored_factor_graph(&model);
    let colors = refine_colors(&g);
    let classes: BTreeSet<usize> = colors[..model.num_vars()].iter().copied().collect();
    ensure!(
        classes.len() == 1,
        "refinement leaves {} variable classes",
        classes.len()
    );
    Ok("trivial group, 12 node orbits, refinement leaves 1 class".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("ex1 end-to-end", c1_ex1_end_to_end),
        ("generator validity", c2_generator_validity),
        ("lifted equals ground", c3_lifted_equals_ground),
        ("cycle tightening", c4_cycle_tightening),
        ("separation completeness", c5_separation_completeness),
        ("orbit-constant marginals", c6_orbit_constant_marginals),
        ("configuration-orbit centroids", c7_centroids),
        ("renaming orbits", c8_renaming_orbits),
        ("lovers and smokers", c9_lovers_smokers),
        ("frucht graph", c10_frucht),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
