//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Run with
//! `cargo test --release -p cqa-core --test acceptance`.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cqa_core::bench::{average_iterations, run_bench, BenchPlan, BenchRecord};
use cqa_core::datagen::{generate, select, GenConfig};
use cqa_core::encoder::{encode_denial, encode_keys, Encoding, Role};
use cqa_core::engine::{
    all_denials, certain_boolean, consistent_answers, prepare, EngineConfig, Problem, Strategy,
};
use cqa_core::formula::Cnf;
use cqa_core::instance::FactId;
use cqa_core::oracle::check::{all_configs, check_case, describe_config};
use cqa_core::oracle::random::{random_case, sink_case, CaseOptions, RandomCase};
use cqa_core::oracle::{certain_bruteforce, DEFAULT_CAP};
use cqa_core::solver::{
    external_solve, maxsat_solve, sat_solve, ExternalSolver, SatOutcome, SolveError, SolverConfig,
};
use cqa_core::value::Value;
use cqa_core::witness::{minimal_witnesses, violation_index};

use common::{brute_maxsat, brute_sat, formula_size, loglog_slope, random_wcnf, size_violations};

type Outcome = Result<String, String>;

const SEED: u64 = 20_240_601;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn text(s: &str) -> Vec<Value> {
    vec![Value::text(s)]
}

fn rendered(e: &Encoding, role: Option<Role>) -> BTreeSet<String> {
    e.formula
        .clauses
        .iter()
        .filter(|c| role.is_none_or(|r| c.role == r))
        .map(|c| e.formula.render_clause(&c.lits))
        .collect()
}

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn ids(xs: &[u32]) -> Vec<FactId> {
    xs.iter().map(|&i| FactId(i)).collect()
}

fn c1() -> Outcome {
    let t = Instant::now();
    let f = common::flights();
    let w = minimal_witnesses(&f.canada_to_oak, &f.instance);
    let e = encode_keys(&f.instance, &w, false, false);
    let got = rendered(&e, None);
    let want = set(&[
        "(x1 | x3)",
        "(x2)",
        "(x4)",
        "(x5)",
        "(x6)",
        "(x7)",
        "(x8 | x9)",
        "(-x2 | -x7 | -p1)",
        "(-x3 | -x9 | -p2)",
    ]);
    ensure(got == want && e.formula.len() == 9, || format!("formula {got:?}"))?;
    let p = Problem {
        instance: &f.instance,
        dcs: &[],
        query: &f.canada_to_oak,
    };
    for cfg in all_configs() {
        let r = consistent_answers(&p, &cfg).map_err(|e| e.to_string())?;
        ensure(r.complete && r.consistent() == vec![&text("JZA 8329")], || {
            format!("{}: consistent {:?}", describe_config(&cfg), r.consistent())
        })?;
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.3}s"))?;
    Ok(format!(
        "9 clauses match, consistent = {{JZA 8329}} under 8 configs, {secs:.3}s"
    ))
}

fn c2() -> Outcome {
    let t = Instant::now();
    let f = common::flights();
    let p = Problem {
        instance: &f.instance,
        dcs: &f.dcs,
        query: &f.first_or_silkair,
    };
    let v = violation_index(&all_denials(&p), &f.instance);
    let viol: BTreeSet<Vec<FactId>> = v.violations.iter().cloned().collect();
    let want: BTreeSet<Vec<FactId>> = [ids(&[1, 3]), ids(&[8]), ids(&[4, 6, 9])].into_iter().collect();
    ensure(viol == want, || format!("violations {viol:?}"))?;
    let w = minimal_witnesses(&f.first_or_silkair, &f.instance);
    ensure(
        w.witnesses == vec![vec![ids(&[5])], vec![ids(&[6])], vec![ids(&[4, 8])]],
        || format!("witnesses {:?}", w.witnesses),
    )?;
    let near: Vec<Vec<Vec<FactId>>> = (1..=9).map(|i| v.near_of(FactId(i)).to_vec()).collect();
    let want_near = vec![
        vec![ids(&[3])],
        vec![],
        vec![ids(&[1])],
        vec![ids(&[6, 9])],
        vec![],
        vec![ids(&[4, 9])],
        vec![],
        vec![vec![FactId::TRUE]],
        vec![ids(&[4, 6])],
    ];
    ensure(near == want_near, || format!("near-violations {near:?}"))?;

    let e = encode_denial(&f.instance, &v, &w, false);
    let checks: [(Role, BTreeSet<String>); 5] = [
        (Role::Alpha, set(&["(-x1 | -x3)", "(-x8)", "(-x4 | -x6 | -x9)"])),
        (
            Role::Beta,
            set(&["(-x5 | -p1)", "(-x6 | -p2)", "(-x4 | -x8 | -p3)"]),
        ),
        (
            Role::Gamma,
            set(&[
                "(x1 | x3)",
                "(x2)",
                "(x4 | y4_1)",
                "(x5)",
                "(x6 | y6_1)",
                "(x7)",
                "(x8 | x_true)",
                "(x9 | y9_1)",
            ]),
        ),
        (
            Role::Theta,
            set(&[
                "(x6 | -y4_1)",
                "(x9 | -y4_1)",
                "(-x6 | -x9 | y4_1)",
                "(x4 | -y6_1)",
                "(x9 | -y6_1)",
                "(-x4 | -x9 | y6_1)",
                "(x4 | -y9_1)",
                "(x6 | -y9_1)",
                "(-x4 | -x6 | y9_1)",
            ]),
        ),
        (Role::TrueUnit, set(&["(x_true)"])),
    ];
    for (role, want) in checks {
        let got = rendered(&e, Some(role));
        ensure(got == want, || format!("{role:?} clauses {got:?}"))?;
    }
    for cfg in all_configs() {
        let r = consistent_answers(&p, &cfg).map_err(|e| e.to_string())?;
        ensure(r.complete && r.consistent() == vec![&text("KLF88V")], || {
            format!("{}: consistent {:?}", describe_config(&cfg), r.consistent())
        })?;
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.3}s"))?;
    Ok(format!(
        "violations, witnesses, near-violations and alpha/beta/gamma/theta match, consistent = {{KLF88V}}, {secs:.3}s"
    ))
}

fn oracle_cases(n: usize, seed: u64) -> Vec<RandomCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| random_case(&mut rng, &CaseOptions::default()))
        .collect()
}

fn c3() -> Outcome {
    let t = Instant::now();
    let configs = all_configs();
    let cases = oracle_cases(1000, SEED);
    for (i, c) in cases.iter().enumerate() {
        let bad = check_case(c, &configs, DEFAULT_CAP).map_err(|e| format!("case {i}: {e}"))?;
        ensure(bad.is_empty(), || {
            format!("case {i}\n{}\n{}", c.describe(), bad.join("\n"))
        })?;
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 300.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "1000 cases x 8 configs agree with the oracle, {secs:.1}s"
    ))
}

fn c4() -> Outcome {
    let configs = all_configs();
    let mut formulas = 0;
    for (i, c) in oracle_cases(1000, SEED).iter().enumerate() {
        let p = Problem {
            instance: &c.instance,
            dcs: &c.dcs,
            query: &c.query,
        };
        for cfg in &configs {
            let bad = size_violations(&p, &prepare(&p, cfg), cfg.optimize);
            ensure(bad.is_empty(), || {
                format!(
                    "case {i} {}: {}\n{}",
                    describe_config(cfg),
                    bad.join("; "),
                    c.describe()
                )
            })?;
            formulas += 1;
        }
    }
    let names = select("all").map_err(|e| e.to_string())?;
    for name in &names {
        let g = generate(&GenConfig::new(name, 300, 10.0, SEED)).map_err(|e| format!("{name}: {e}"))?;
        let p = Problem {
            instance: &g.instance,
            dcs: &g.dcs,
            query: &g.query,
        };
        for cfg in &configs {
            let bad = size_violations(&p, &prepare(&p, cfg), cfg.optimize);
            ensure(bad.is_empty(), || {
                format!("{name} {}: {}", describe_config(cfg), bad.join("; "))
            })?;
            formulas += 1;
        }
    }
    // Growth of the unoptimized formula with the instance size.
    let mut worst = String::new();
    let mut worst_margin = f64::INFINITY;
    for name in ["q1", "q4", "q7", "q13", "Q1", "Q3"] {
        let mut pts = Vec::new();
        let mut bound = 0.0;
        for rsize in [500, 1000, 2000, 4000] {
            let g = generate(&GenConfig::new(name, rsize, 10.0, SEED)).map_err(|e| format!("{name}: {e}"))?;
            let p = Problem {
                instance: &g.instance,
                dcs: &g.dcs,
                query: &g.query,
            };
            let cfg = EngineConfig {
                optimize: false,
                ..EngineConfig::default()
            };
            let prep = prepare(&p, &cfg);
            let m = g.query.arity() as f64;
            let d2 = g.query.max_atoms() as f64;
            bound = if prep.violations.is_none() {
                m + d2
            } else {
                let d1 = all_denials(&p).iter().map(|c| c.width()).max().unwrap_or(0) as f64;
                (d1 + 2.0).max(m + d2)
            };
            pts.push((g.instance.len() as f64, formula_size(&prep) as f64));
        }
        let slope = loglog_slope(&pts);
        ensure(slope <= bound, || {
            format!("{name}: measured exponent {slope:.2} > bound {bound}")
        })?;
        if bound - slope < worst_margin {
            worst_margin = bound - slope;
            worst = format!("{name} exponent {slope:.2} vs bound {bound}");
        }
    }
    Ok(format!(
        "{formulas} formulas within bounds; tightest growth {worst}"
    ))
}

fn bench(
    queries: &[&str],
    rsize: usize,
    optimize: Vec<bool>,
    reps: usize,
) -> Result<Vec<BenchRecord>, String> {
    let plan = BenchPlan {
        queries: queries.iter().map(|s| s.to_string()).collect(),
        rsizes: vec![rsize],
        indegs: vec![10.0],
        strategies: vec![Strategy::MaxSat],
        optimize,
        reps,
        seed: SEED,
        engine: EngineConfig::default(),
    };
    let recs = run_bench(&plan, |_| {});
    for r in &recs {
        if let Some(e) = &r.error {
            return Err(format!("{} (optimize={}): {e}", r.query, r.optimize));
        }
        ensure(r.complete, || format!("{} incomplete", r.query))?;
    }
    Ok(recs)
}

fn c5() -> Outcome {
    let names: Vec<String> = (1..=21).map(|i| format!("q{i}")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let recs = bench(&names, 10_000, vec![true, false], 1)?;
    for r in &recs {
        ensure(r.iterations <= r.potential_answers.max(1), || {
            format!(
                "{}: {} iterations for {} answers",
                r.query, r.iterations, r.potential_answers
            )
        })?;
    }
    let opt: Vec<BenchRecord> = recs.iter().filter(|r| r.optimize).cloned().collect();
    let unopt: Vec<BenchRecord> = recs.iter().filter(|r| !r.optimize).cloned().collect();
    let (a, b) = (average_iterations(&opt), average_iterations(&unopt));
    ensure(a <= 4.0 && b <= 4.0, || {
        format!("average iterations {a:.2} / {b:.2}")
    })?;
    Ok(format!(
        "iterations <= |A| on all 42 runs; average {a:.2} optimized, {b:.2} unoptimized"
    ))
}

fn c6() -> Outcome {
    let queries = ["q1", "q2", "q3", "q4", "q5", "q6", "q7"];
    let recs = bench(&queries, 100_000, vec![true, false], 3)?;
    let mut worst_t: f64 = 0.0;
    let mut worst_v: f64 = 0.0;
    for q in queries {
        let o = recs.iter().find(|r| r.query == q && r.optimize).expect("cell");
        let u = recs.iter().find(|r| r.query == q && !r.optimize).expect("cell");
        let t = o.total_seconds() / u.total_seconds();
        let v = o.variables as f64 / u.variables as f64;
        ensure(t <= 0.5, || {
            format!(
                "{q}: time ratio {t:.2} ({:.3}s vs {:.3}s)",
                o.total_seconds(),
                u.total_seconds()
            )
        })?;
        ensure(v <= 0.1, || format!("{q}: variable ratio {v:.3}"))?;
        ensure(o.consistent_answers == u.consistent_answers, || {
            format!("{q}: answers differ")
        })?;
        worst_t = worst_t.max(t);
        worst_v = worst_v.max(v);
    }
    Ok(format!(
        "max time ratio {worst_t:.2}, max variable ratio {worst_v:.4}"
    ))
}

fn c7() -> Outcome {
    let mut worst = (String::new(), 0.0);
    for q in ["q1", "q2", "q3", "q4", "q5", "q6", "q7"] {
        let t = Instant::now();
        let g = generate(&GenConfig::new(q, 100_000, 10.0, SEED)).map_err(|e| format!("{q}: {e}"))?;
        let p = Problem {
            instance: &g.instance,
            dcs: &g.dcs,
            query: &g.query,
        };
        let r = consistent_answers(&p, &EngineConfig::default()).map_err(|e| format!("{q}: {e}"))?;
        let secs = t.elapsed().as_secs_f64();
        ensure(r.complete, || format!("{q}: incomplete"))?;
        ensure(secs < 60.0, || format!("{q}: {secs:.1}s"))?;
        if secs > worst.1 {
            worst = (q.to_string(), secs);
        }
    }
    Ok(format!(
        "slowest {} at {:.2}s including generation",
        worst.0, worst.1
    ))
}

fn c8() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cfg = SolverConfig::default();
    let (mut sat, mut unsat) = (0, 0);
    for i in 0..10_000 {
        let w = random_wcnf(&mut rng, 20);
        let hard = Cnf {
            num_vars: w.num_vars,
            clauses: w.hard.clone(),
        };
        let want_sat = brute_sat(&hard);
        match sat_solve(&hard, &cfg) {
            SatOutcome::Sat(m) => ensure(want_sat && hard.satisfied_by(&m.assignment), || {
                format!("case {i}: bad SAT verdict")
            })?,
            SatOutcome::Unsat => ensure(!want_sat, || format!("case {i}: UNSAT but satisfiable"))?,
            SatOutcome::Unknown => return Err(format!("case {i}: unknown without budget")),
        }
        if want_sat {
            sat += 1;
        } else {
            unsat += 1;
        }
        match (maxsat_solve(&w, &cfg), brute_maxsat(&w)) {
            (Ok(m), Some(best)) => ensure(
                m.cost == best && w.hard_satisfied_by(&m.assignment) && w.cost(&m.assignment) == best,
                || format!("case {i}: cost {} vs optimum {best}", m.cost),
            )?,
            (Err(SolveError::HardUnsat), None) => {}
            (got, want) => return Err(format!("case {i}: solver {got:?} vs enumeration {want:?}")),
        }
    }
    let external = ExternalSolver {
        program: env!("CARGO_BIN_EXE_cqa").to_string(),
        args: vec!["solve".into()],
    };
    let mut ext_rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut sampled = 0;
    while sampled < 100 {
        let w = random_wcnf(&mut ext_rng, 20);
        let internal = maxsat_solve(&w, &cfg);
        let outside = external_solve(&external, &w);
        match (internal, outside) {
            (Ok(a), Ok(b)) => ensure(a.cost == b.cost && w.cost(&b.assignment) == b.cost, || {
                format!("external cost {} vs internal {}", b.cost, a.cost)
            })?,
            (Err(SolveError::HardUnsat), Err(SolveError::HardUnsat)) => {}
            (a, b) => return Err(format!("internal {a:?} vs external {b:?}")),
        }
        sampled += 1;
    }
    Ok(format!(
        "10000 instances ({sat} sat / {unsat} unsat hard parts) match enumeration; 100 exported WCNF agree via `cqa solve`; {:.1}s",
        t.elapsed().as_secs_f64()
    ))
}

fn c9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let opts = CaseOptions {
        boolean: Some(true),
        ..CaseOptions::default()
    };
    let configs = all_configs();
    let (mut certain, mut sinks) = (0, 0);
    for i in 0..200 {
        let c = if i % 4 == 3 {
            sinks += 1;
            sink_case(&mut rng, 12)
        } else {
            random_case(&mut rng, &opts)
        };
        let want =
            certain_bruteforce(&c.query, &c.instance, &c.dcs, DEFAULT_CAP).map_err(|e| e.to_string())?;
        certain += want as usize;
        let p = Problem {
            instance: &c.instance,
            dcs: &c.dcs,
            query: &c.query,
        };
        for cfg in &configs {
            let got = certain_boolean(&p, cfg).map_err(|e| format!("case {i}: {e}"))?;
            ensure(got == want, || {
                format!(
                    "case {i} {}: {got} but oracle says {want}\n{}",
                    describe_config(cfg),
                    c.describe()
                )
            })?;
        }
    }
    Ok(format!(
        "200 cases ({sinks} sink, {certain} certain) agree under 8 configs"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, fn() -> Outcome); 9] = [
        ("C1", "golden keys example", c1),
        ("C2", "golden denial-constraint example", c2),
        ("C3", "oracle equivalence", c3),
        ("C4", "formula size bounds", c4),
        ("C5", "iteration counts", c5),
        ("C6", "optimization efficacy", c6),
        ("C7", "desk-scale performance", c7),
        ("C8", "solver correctness", c8),
        ("C9", "boolean certainty", c9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if cfg!(debug_assertions) {
        println!("note: unoptimized build; timing criteria are meant for --release");
    }
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f.eq_ignore_ascii_case(id)) {
            continue;
        }
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("PASS {id} {name} [{secs:.1}s]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id} {name} [{secs:.1}s]: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
