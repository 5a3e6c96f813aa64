//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//!
//! Run with `cargo test --release --test acceptance` for realistic timings;
//! debug builds take noticeably longer on the exact and Monte Carlo checks.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use graphdep::bounds::{self, BlockVariant, Method, ValidUnder};
use graphdep::coupling::{self, LatentSpec, LipschitzFunction, MgfOutcome, ParentRule};
use graphdep::covers::{self, CoverKind, CoverPart, Strategy, WeightedCover};
use graphdep::montecarlo::{self, Combine, Latent, Model, RunConfig, SamplerSpec, Statistic, Verdict};
use graphdep::rational::{ratio, to_f64, Rational};
use graphdep::{cli, Graph, LipschitzProfile};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn c1_example() -> Outcome {
    let start = Instant::now();
    let g = example_graph();
    let c = uniform(9, ratio(1, 1));
    let chi = ok(covers::fractional_chromatic_number(&g))?;
    ensure(chi.objective.exact() == Some(&ratio(3, 1)), || format!("chi_f = {:?}", chi.objective))?;
    let (janson, _) = ok(bounds::janson_denominator(&g, &c))?;
    ensure(janson == ratio(27, 1), || format!("janson denominator {janson}"))?;

    let columns = ok(covers::enumerate_induced_forests(&g, covers::DEFAULT_ENUMERATION_CAP))?.len();
    let d = ok(covers::optimize_d(&g, &c, Strategy::EnumeratedLp))?;
    ensure(d.d <= 81.0 / 4.0, || format!("D = {} exceeds 81/4", d.d))?;
    ensure(covers::validate_cover(&g, &d.solution.cover).is_empty(), || "optimal cover invalid".into())?;

    // the three-part witness from the worked example
    let half = ratio(1, 2);
    let witness = WeightedCover {
        kind: CoverKind::Forest,
        parts: [vec![1, 2, 4, 5, 6, 7], vec![1, 3, 4, 5, 8, 9], vec![2, 3, 6, 7, 8, 9]]
            .into_iter()
            .map(|vertices| CoverPart { vertices, weight: half.clone() })
            .collect(),
    };
    let violations = covers::validate_cover(&g, &witness);
    ensure(violations.is_empty(), || format!("witness invalid: {violations:?}"))?;
    let mut root_sum = ratio(0, 1);
    for part in &witness.parts {
        let cost2 = ok(covers::forest_part_cost_squared(&g, &part.vertices, &c))?;
        ensure(cost2 == ratio(9, 1), || format!("part {:?} cost^2 = {cost2}", part.vertices))?;
        root_sum += &part.weight * ratio(3, 1);
    }
    ensure(&root_sum * &root_sum == ratio(81, 4), || format!("witness objective^2 = {}", &root_sum * &root_sum))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "chi_f=3, Janson=27, D={:.6} <= 81/4 over {columns} forest columns, witness exact, {elapsed:.2?}",
        d.d
    ))
}

fn c2_forest_bound() -> Outcome {
    let mut rng = rng(2);
    for _ in 0..50 {
        let n = rng.random_range(1..=12);
        let c = random_profile(&mut rng, n);
        let d = ok(bounds::forest_denominator(&Graph::empty(n), &c))?;
        let oracle = c.exact().iter().fold(ratio(0, 1), |acc, x| acc + x * x);
        ensure(d == oracle, || format!("empty graph n={n}: {d} != {oracle}"))?;
    }
    let table = trees(10);
    let mut checked = 0;
    for n in 1..=10 {
        for (g, k) in forests(n, &table) {
            let cval = ratio(rng.random_range(1..=9), rng.random_range(1..=4));
            let c = uniform(n, cval.clone());
            let d = ok(bounds::forest_denominator(&g, &c))?;
            let formula = ratio((4 * n - 3 * k) as i64, 1) * &cval * &cval;
            ensure(d == formula, || format!("forest n={n} k={k}: {d} != {formula}"))?;
            if g.edge_count() > 0 {
                let (janson, _) = ok(bounds::janson_denominator(&g, &c))?;
                let beats = d <= janson;
                ensure(beats == (3 * k >= 2 * n), || format!("crossover wrong at n={n} k={k}: forest {d} janson {janson}"))?;
            }
            checked += 1;
        }
    }
    Ok(format!("50 edgeless profiles, {checked} unlabelled forests (n<=10), crossover 3k>=2n"))
}

fn check_d_vs_janson(g: &Graph, c: &LipschitzProfile) -> Result<(), String> {
    let sol = ok(covers::optimize_d(g, c, Strategy::EnumeratedLp))?;
    let chi = sol.chi_f.objective.to_f64();
    let janson = chi * to_f64(&c.squared_norm());
    ensure(sol.d <= janson * (1.0 + 1e-9) + 1e-12, || format!("D={} > chi_f|c|^2={janson} on {:?}", sol.d, g.edges()))?;
    ensure(covers::validate_cover(g, &sol.solution.cover).is_empty(), || format!("invalid cover on {:?}", g.edges()))
}

fn c3_d_vs_chi() -> Outcome {
    let mut rng = rng(3);
    let graphs = connected_graphs(7);
    for g in &graphs {
        check_d_vs_janson(g, &uniform(g.n(), ratio(1, 1)))?;
        check_d_vs_janson(g, &random_profile(&mut rng, g.n()))?;
    }
    for _ in 0..100 {
        let n = rng.random_range(2..=12);
        let p = rng.random_range(0.1..0.7);
        let g = random_graph(&mut rng, n, p);
        check_d_vs_janson(&g, &random_profile(&mut rng, n))?;
    }
    Ok(format!("{} connected graphs (n<=7) x 2 profiles + 100 random graphs (n<=12)", graphs.len()))
}

fn c4_m_dependent() -> Outcome {
    let mut rng = rng(4);
    let mut formula_cases = 0;
    for _ in 0..200 {
        let m = rng.random_range(1..=6);
        let n = rng.random_range(m..=40);
        let c = random_profile(&mut rng, n);
        let (min_block, _) = ok(bounds::m_dependent_denominator(n, m, &c, BlockVariant::MinBlock))?;
        let (paulin, _) = ok(bounds::m_dependent_denominator(n, m, &c, BlockVariant::Paulin))?;
        ensure(min_block <= paulin, || format!("n={n} m={m}: MIN_BLOCK {min_block} > PAULIN {paulin}"))?;

        if n % m == 0 {
            let cval = ratio(rng.random_range(1..=9), rng.random_range(1..=4));
            let (d, _) = ok(bounds::m_dependent_denominator(n, m, &uniform(n, cval.clone()), BlockVariant::MinBlock))?;
            let (mm, blocks) = (ratio(m as i64, 1), ratio((n / m) as i64, 1));
            let two_mc = ratio(2, 1) * &mm * &cval;
            let formula = &two_mc * &two_mc * (blocks - ratio(1, 1)) + &mm * &mm * &cval * &cval;
            ensure(d == formula, || format!("n={n} m={m}: {d} != {formula}"))?;
            let cap = ratio(4 * (m * n) as i64, 1) * &cval * &cval;
            ensure(d <= cap, || format!("n={n} m={m}: {d} > 4mnc^2"))?;
            formula_cases += 1;
        }
    }
    Ok(format!("200 triples MIN_BLOCK<=PAULIN, {formula_cases} closed-form cases exact"))
}

struct ToyCase {
    joint: coupling::FiniteJoint,
    graph: Graph,
    f: LipschitzFunction,
}

fn toy_cases() -> Result<Vec<ToyCase>, String> {
    let mut rng = rng(5);
    let mut out = Vec::new();
    for seed in 0..24u64 {
        let n = 2 + (seed as usize % 5);
        let spec = ok(LatentSpec::random_tree(seed, n, 4))?;
        let joint = ok(coupling::build_tree_joint(&spec))?;
        let sizes = joint.sizes().to_vec();
        let f = if seed % 2 == 0 {
            ok(LipschitzFunction::sum(&sizes))?
        } else {
            let values: Vec<Rational> = (0..joint.states()).map(|_| ratio(rng.random_range(0..=6), 2)).collect();
            ok(LipschitzFunction::with_tight_profile(sizes, values))?
        };
        if f.profile().is_all_zero() {
            continue;
        }
        out.push(ToyCase { joint, graph: spec.graph, f });
    }
    Ok(out)
}

fn c5_coupling() -> Outcome {
    let start = Instant::now();
    let cases = toy_cases()?;
    ensure(cases.len() >= 20, || format!("only {} cases", cases.len()))?;
    let mut contexts = 0;
    let mut control_marginal_breaks = 0;
    let mut control_dependency_breaks = 0;
    for (k, case) in cases.iter().enumerate() {
        let report = ok(coupling::verify_forest_joint(&case.joint, &case.graph, &case.f, ParentRule::Conditional))?;
        ensure(report.passed(), || format!("case {k}: {report:?}"))?;
        contexts += report.contexts_checked;

        let control = ok(coupling::verify_forest_joint(&case.joint, &case.graph, &case.f, ParentRule::UnconditionalMarginal))?;
        if control.marginal_deviation > ratio(0, 1) {
            control_marginal_breaks += 1;
        }
        let dependency = ok(coupling::verify_dependency(&case.joint, &Graph::empty(case.graph.n())))?;
        if !dependency.is_ok() {
            control_dependency_breaks += 1;
        }
    }
    ensure(control_marginal_breaks > 0, || "independent-parent control never broke a marginal".into())?;
    ensure(control_dependency_breaks > 0, || "undeclared edges were never detected".into())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} joints, {contexts} contexts exact; controls broke {control_marginal_breaks} marginals, \
         {control_dependency_breaks} dependency claims; {elapsed:.2?}",
        cases.len()
    ))
}

fn c6_c7_exact_tails_and_mgf(cases: &[ToyCase]) -> (Outcome, Outcome) {
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_ratio: f64 = 0.0;
    let mut tail_fail = None;
    let mut mgf_fail = None;
    for (k, case) in cases.iter().enumerate() {
        let check = match coupling::theorem_check(
            &case.joint,
            &case.graph,
            &case.f,
            coupling::DEFAULT_TAIL_POINTS,
            &coupling::DEFAULT_S_GRID,
        ) {
            Ok(c) => c,
            Err(e) => return (Err(e.to_string()), Err(e.to_string())),
        };
        worst_margin = worst_margin.max(check.tail_worst_margin);
        if check.tail_worst_margin > coupling::FLOAT_SLACK && tail_fail.is_none() {
            tail_fail = Some(format!("case {k}: exact tail exceeds bound by {}", check.tail_worst_margin));
        }
        match check.mgf {
            MgfOutcome::Ratio { worst, .. } => {
                worst_ratio = worst_ratio.max(worst);
                if worst > 1.0 + 1e-9 && mgf_fail.is_none() {
                    mgf_fail = Some(format!("case {k}: MGF ratio {worst}"));
                }
            }
            MgfOutcome::SpreadViolation { step, spread, allowed, .. } => {
                mgf_fail.get_or_insert(format!("case {k}: step {step} spread {spread} > {allowed}"));
            }
        }
    }
    let tails = match tail_fail {
        Some(e) => Err(e),
        None => Ok(format!("{} joints x 20 thresholds, worst exact-bound margin {worst_margin:.3e}", cases.len())),
    };
    let mgf = match mgf_fail {
        Some(e) => Err(e),
        None => Ok(format!("{} joints x s in {{0.25,0.5,1,2,4}}, worst ratio {worst_ratio:.6}", cases.len())),
    };
    (tails, mgf)
}

fn forest_sampler() -> SamplerSpec {
    let mut rng = rng(8);
    let n = 12;
    let edges: Vec<(usize, usize)> = (2..=n).map(|v| (rng.random_range(1..v), v)).collect();
    let graph = Graph::new(n, &edges).unwrap();
    let factors = edges.iter().map(|&(u, v)| (vec![u, v], Latent::Bernoulli { p: 0.5 })).collect();
    SamplerSpec {
        model: Model::LatentGraph { graph, vertex: vec![Latent::Uniform { lo: 0.0, hi: 1.0 }; n], factors, combine: Combine::Average },
        clamp: None,
        statistic: Statistic::Sum,
    }
}

fn block_sampler() -> SamplerSpec {
    SamplerSpec {
        model: Model::BlockFactor { n: 12, k: 3, latent: Latent::Uniform { lo: 0.0, hi: 1.0 }, g: Combine::Max },
        clamp: None,
        statistic: Statistic::Sum,
    }
}

fn example_sampler() -> SamplerSpec {
    SamplerSpec {
        model: Model::LatentGraph {
            graph: example_graph(),
            vertex: vec![Latent::Bernoulli { p: 0.5 }; 9],
            factors: vec![(vec![1, 2, 3], Latent::Bernoulli { p: 0.5 })],
            combine: Combine::Average,
        },
        clamp: None,
        statistic: Statistic::Sum,
    }
}

fn common_sampler() -> SamplerSpec {
    SamplerSpec { model: Model::Common { n: 10, latent: Latent::Bernoulli { p: 0.5 } }, clamp: None, statistic: Statistic::Sum }
}

const MC_SAMPLES: u64 = 1_000_000;

fn c8_monte_carlo() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for (name, spec) in [("forest", forest_sampler()), ("block-factor", block_sampler()), ("example", example_sampler())] {
        let mut attempts = 0;
        loop {
            let seed = 80 + attempts;
            let v = ok(montecarlo::validate_bounds(&spec, None, &RunConfig::new(seed, MC_SAMPLES), Strategy::EnumeratedLp))?;
            let defects: Vec<String> = v.defects().map(|r| format!("{} t={:.4} ci={:.4} bound={:.4}", r.method, r.t, r.ci_upper, r.bound)).collect();
            ensure(v.rows.iter().any(|r| r.valid_under == ValidUnder::Dependence), || format!("{name}: no valid bound"))?;
            if defects.is_empty() {
                notes.push(if attempts == 0 { name.to_string() } else { format!("{name} (after retry)") });
                break;
            }
            attempts += 1;
            if attempts > 1 {
                return Err(format!("{name}: {}", defects.join("; ")));
            }
        }
    }

    let control = ok(montecarlo::validate_bounds(&common_sampler(), Some(&[3.0]), &RunConfig::new(81, MC_SAMPLES), Strategy::EnumeratedLp))?;
    let mcd_fails = control
        .rows
        .iter()
        .any(|r| r.method == Method::Mcdiarmid && r.verdict == Verdict::Fail && r.valid_under == ValidUnder::IndependenceOnly);
    ensure(mcd_fails, || "shared-latent control did not break McDiarmid".into())?;
    ensure(control.defects().next().is_none(), || "shared-latent control produced a defect in a valid bound".into())?;

    let tail = ok(montecarlo::estimate_tail(&example_sampler(), 4.0, &RunConfig::new(82, MC_SAMPLES)))?;
    ensure(tail.ci_upper <= 0.2057, || format!("example t=4: ci_upper {}", tail.ci_upper))?;

    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "no defects on {}; McDiarmid control FAILs; example t=4 ci_upper={:.2e}; N=1e6, {elapsed:.1?}",
        notes.join(", "),
        tail.ci_upper
    ))
}

fn cli_output(args: &[&str]) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run_with(args.iter().copied(), &mut out, &mut err);
    ensure(code == 0, || format!("{args:?} exited {code}: {}", String::from_utf8_lossy(&err)))?;
    Ok(out)
}

fn c9_determinism() -> Outcome {
    let dir = ok(tempfile::tempdir())?;
    let spec = dir.path().join("spec.json");
    ok(std::fs::write(
        &spec,
        r#"{"model": "block_factor", "n": 10, "k": 3, "latent": {"dist": "uniform", "lo": 0, "hi": 1}, "g": "max"}"#,
    ))?;
    let spec = spec.to_str().unwrap();
    for format in ["csv", "json"] {
        let run = |threads: &str| {
            cli_output(&["graphdep", "simulate", "--spec", spec, "--seed", "9", "--samples", "200000", "--threads", threads, "--format", format])
        };
        let one = run("1")?;
        let eight = run("8")?;
        ensure(!one.is_empty() && one == eight, || format!("{format} output differs between 1 and 8 threads"))?;
        ensure(run("8")? == eight, || format!("{format} output differs between reruns"))?;
    }
    Ok("simulate CSV and JSON byte-identical for 1 and 8 threads and across reruns".into())
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let guarded = |f: &dyn Fn() -> Outcome| -> Outcome {
        catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        })
    };
    results.push((1, "worked example", guarded(&c1_example)));
    results.push((2, "forest bound", guarded(&c2_forest_bound)));
    results.push((3, "decomposable vs fractional chromatic", guarded(&c3_d_vs_chi)));
    results.push((4, "m-dependent blocks", guarded(&c4_m_dependent)));
    results.push((5, "coupling construction", guarded(&c5_coupling)));
    let (tails, mgf) = match toy_cases() {
        Ok(cases) => c6_c7_exact_tails_and_mgf(&cases),
        Err(e) => (Err(e.clone()), Err(e)),
    };
    results.push((6, "exact tails under bound", tails));
    results.push((7, "moment generating function", mgf));
    results.push((8, "Monte Carlo soundness", guarded(&c8_monte_carlo)));
    results.push((9, "determinism", guarded(&c9_determinism)));

    let mut failed = 0;
    for (k, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {k} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {k} FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
