mod common;

use std::collections::BTreeSet;

use cqa_core::encoder::{encode_denial, encode_keys, export_dimacs, Role};
use cqa_core::engine::{
    all_denials, consistent_answers, explain, EngineConfig, Explanation, KeyPath, Problem, Strategy, Verdict,
};
use cqa_core::formula::{parse_dimacs, Dimacs};
use cqa_core::instance::FactId;
use cqa_core::oracle::{consistent_answers_bruteforce, enumerate_repairs, is_repair, DEFAULT_CAP};
use cqa_core::solver::{maxsat_solve, solve_under_assumptions, SatOutcome, SolverConfig};
use cqa_core::value::Value;
use cqa_core::witness::{minimal_witnesses, violation_index};

fn ids(xs: &[u32]) -> Vec<FactId> {
    xs.iter().map(|&i| FactId(i)).collect()
}

fn text(s: &str) -> Vec<Value> {
    vec![Value::text(s)]
}

fn rendered(e: &cqa_core::encoder::Encoding, role: Option<Role>) -> BTreeSet<String> {
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

#[test]
fn key_groups_of_the_flights_table() {
    let f = common::flights();
    assert_eq!(f.instance.len(), 9);
    assert_eq!(
        f.instance.key_equal_groups_of("Airlines").unwrap(),
        vec![ids(&[1, 3]), ids(&[2])]
    );
    assert_eq!(
        f.instance.key_equal_groups_of("Flights").unwrap(),
        vec![ids(&[7]), ids(&[8, 9])]
    );
}

#[test]
fn keys_encoding_of_canada_to_oak() {
    let f = common::flights();
    let w = minimal_witnesses(&f.canada_to_oak, &f.instance);
    assert_eq!(w.answers, vec![text("JZA 8329"), text("SWA 1568")]);
    assert_eq!(w.witnesses, vec![vec![ids(&[2, 7])], vec![ids(&[3, 9])]]);

    let e = encode_keys(&f.instance, &w, false, false);
    assert_eq!(
        rendered(&e, None),
        set(&[
            "(x1 | x3)",
            "(x2)",
            "(x4)",
            "(x5)",
            "(x6)",
            "(x7)",
            "(x8 | x9)",
            "(-x2 | -x7 | -p1)",
            "(-x3 | -x9 | -p2)",
        ])
    );
    assert_eq!(e.formula.len(), 9);
    assert_eq!(e.formula.num_vars(), 11);

    let dimacs = export_dimacs(&e);
    assert!(dimacs.starts_with("p wcnf 11 11 3\n"), "{dimacs}");
    match parse_dimacs(&dimacs).unwrap() {
        Dimacs::Wcnf(w) => {
            assert_eq!(w.hard.len(), 9);
            assert_eq!(w.soft.len(), 2);
            assert_eq!(w, e.to_wcnf());
        }
        other => panic!("expected wcnf, got {other:?}"),
    }

    let cfg = SolverConfig::default();
    let cnf = e.formula.to_cnf();
    assert_eq!(
        solve_under_assumptions(&cnf, &[e.p(0).unwrap().pos()], &cfg),
        SatOutcome::Unsat
    );
    assert!(matches!(
        solve_under_assumptions(&cnf, &[e.p(1).unwrap().pos()], &cfg),
        SatOutcome::Sat(_)
    ));
    let m = maxsat_solve(&e.to_wcnf(), &cfg).unwrap();
    assert_eq!(m.cost, 1);
    assert!(!m.value(e.p(0).unwrap().pos()));
    assert!(m.value(e.p(1).unwrap().pos()));
}

#[test]
fn boolean_keys_encoding_keeps_the_witness_clause() {
    let f = common::flights();
    let cq = f.canada_to_oak.disjuncts[0]
        .substitute(&text("SWA 1568"))
        .unwrap();
    let q = cqa_core::query::UnionQuery::single(cq);
    let w = minimal_witnesses(&q, &f.instance);
    let e = encode_keys(&f.instance, &w, true, false);
    assert!(rendered(&e, Some(Role::Beta)).contains("(-x3 | -x9)"));
}

#[test]
fn canada_to_oak_answers() {
    let f = common::flights();
    let p = Problem {
        instance: &f.instance,
        dcs: &[],
        query: &f.canada_to_oak,
    };
    for strategy in [Strategy::MaxSat, Strategy::IterSat] {
        for optimize in [true, false] {
            for key_path in [KeyPath::Native, KeyPath::Denial] {
                let cfg = EngineConfig {
                    strategy,
                    optimize,
                    key_path,
                    ..EngineConfig::default()
                };
                let r = consistent_answers(&p, &cfg).unwrap();
                assert!(r.complete);
                assert_eq!(r.consistent(), vec![&text("JZA 8329")]);
                assert_eq!(r.inconsistent(), vec![&text("SWA 1568")]);
            }
        }
    }
    let r = consistent_answers(&p, &EngineConfig::default()).unwrap();
    assert_eq!(r.iterations, 1);
    assert_eq!(
        explain(&text("JZA 8329"), &r, &p).unwrap(),
        Explanation::Witness { facts: ids(&[2, 7]) }
    );
    match explain(&text("SWA 1568"), &r, &p).unwrap() {
        Explanation::FalsifyingRepair { facts } => {
            assert!(is_repair(&f.instance, &[], &facts), "{facts:?}");
            assert!(!(facts.contains(&FactId(3)) && facts.contains(&FactId(9))));
        }
        other => panic!("{other:?}"),
    }
    let oracle = consistent_answers_bruteforce(&f.canada_to_oak, &f.instance, &[], DEFAULT_CAP).unwrap();
    assert_eq!(oracle.into_iter().collect::<Vec<_>>(), vec![text("JZA 8329")]);
    assert_eq!(enumerate_repairs(&f.instance, &[], DEFAULT_CAP).unwrap().len(), 4);
}

#[test]
fn consistent_part_decides_jazz_air() {
    let f = common::flights();
    let w = minimal_witnesses(&f.canada_to_oak, &f.instance);
    let e = encode_keys(&f.instance, &w, false, true);
    assert_eq!(e.decided, vec![true, false]);
    assert_eq!(e.formula.num_vars(), 5);
    assert_eq!(
        rendered(&e, None),
        set(&["(x1 | x3)", "(x8 | x9)", "(-x3 | -x9 | -p2)"])
    );
}

#[test]
fn violations_witnesses_and_near_violations_with_denials() {
    let f = common::flights();
    let p = Problem {
        instance: &f.instance,
        dcs: &f.dcs,
        query: &f.first_or_silkair,
    };
    let v = violation_index(&all_denials(&p), &f.instance);
    let got: BTreeSet<Vec<FactId>> = v.violations.iter().cloned().collect();
    let want: BTreeSet<Vec<FactId>> = [ids(&[1, 3]), ids(&[8]), ids(&[4, 6, 9])].into_iter().collect();
    assert_eq!(got, want);

    let w = minimal_witnesses(&f.first_or_silkair, &f.instance);
    assert_eq!(w.answers, vec![text("KLF88V"), text("NJ5RT3"), text("MJ9C8R")]);
    assert_eq!(
        w.witnesses,
        vec![vec![ids(&[5])], vec![ids(&[6])], vec![ids(&[4, 8])]]
    );

    let near = |i: u32| v.near_of(FactId(i)).to_vec();
    assert_eq!(near(1), vec![ids(&[3])]);
    assert_eq!(near(3), vec![ids(&[1])]);
    assert_eq!(near(4), vec![ids(&[6, 9])]);
    assert_eq!(near(6), vec![ids(&[4, 9])]);
    assert_eq!(near(8), vec![vec![FactId::TRUE]]);
    assert_eq!(near(9), vec![ids(&[4, 6])]);
    for i in [2, 5, 7] {
        assert!(near(i).is_empty());
    }
    assert_eq!(v.consistent_part(&f.instance), ids(&[2, 5, 7]));
}

#[test]
fn denial_encoding_of_first_or_silkair() {
    let f = common::flights();
    let p = Problem {
        instance: &f.instance,
        dcs: &f.dcs,
        query: &f.first_or_silkair,
    };
    let v = violation_index(&all_denials(&p), &f.instance);
    let w = minimal_witnesses(&f.first_or_silkair, &f.instance);
    let e = encode_denial(&f.instance, &v, &w, false);

    assert_eq!(
        rendered(&e, Some(Role::Alpha)),
        set(&["(-x1 | -x3)", "(-x8)", "(-x4 | -x6 | -x9)"])
    );
    assert_eq!(
        rendered(&e, Some(Role::Beta)),
        set(&["(-x5 | -p1)", "(-x6 | -p2)", "(-x4 | -x8 | -p3)"])
    );
    // The near-violation {f3} of f1 stands in for its y variable, so the
    // gamma clauses of f1 and f3 coincide.
    assert_eq!(
        rendered(&e, Some(Role::Gamma)),
        set(&[
            "(x1 | x3)",
            "(x2)",
            "(x4 | y4_1)",
            "(x5)",
            "(x6 | y6_1)",
            "(x7)",
            "(x8 | x_true)",
            "(x9 | y9_1)",
        ])
    );
    assert_eq!(e.formula.stats.constructed.get(Role::Gamma), 9);
    assert_eq!(
        rendered(&e, Some(Role::Theta)),
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
        ])
    );
    assert_eq!(rendered(&e, Some(Role::TrueUnit)), set(&["(x_true)"]));
    // 9 x, 3 p, x_true, 3 y
    assert_eq!(e.formula.num_vars(), 16);

    let m = maxsat_solve(&e.to_wcnf(), &SolverConfig::default()).unwrap();
    assert_eq!(m.cost, 1);
    assert!(!m.value(e.p(0).unwrap().pos()));
    assert!(m.value(e.p(1).unwrap().pos()));
    assert!(m.value(e.p(2).unwrap().pos()));
}

#[test]
fn first_or_silkair_answers() {
    let f = common::flights();
    let p = Problem {
        instance: &f.instance,
        dcs: &f.dcs,
        query: &f.first_or_silkair,
    };
    for strategy in [Strategy::MaxSat, Strategy::IterSat] {
        for optimize in [true, false] {
            let cfg = EngineConfig {
                strategy,
                optimize,
                ..EngineConfig::default()
            };
            let r = consistent_answers(&p, &cfg).unwrap();
            assert!(r.complete);
            assert_eq!(r.consistent(), vec![&text("KLF88V")]);
            let bad: BTreeSet<_> = r.inconsistent().into_iter().cloned().collect();
            assert_eq!(bad, [text("MJ9C8R"), text("NJ5RT3")].into_iter().collect());
            for a in ["MJ9C8R", "NJ5RT3"] {
                match explain(&text(a), &r, &p).unwrap() {
                    Explanation::FalsifyingRepair { facts } => {
                        assert!(is_repair(&f.instance, &f.dcs, &facts), "{a}: {facts:?}")
                    }
                    other => panic!("{other:?}"),
                }
            }
        }
    }
    let r = consistent_answers(&p, &EngineConfig::default()).unwrap();
    assert_eq!(r.verdict_of(&text("KLF88V")), Some(Verdict::Consistent));

    let sigma = all_denials(&p);
    let oracle =
        consistent_answers_bruteforce(&f.first_or_silkair, &f.instance, &f.dcs, DEFAULT_CAP).unwrap();
    assert_eq!(oracle.into_iter().collect::<Vec<_>>(), vec![text("KLF88V")]);
    for rep in enumerate_repairs(&f.instance, &f.dcs, DEFAULT_CAP).unwrap() {
        assert!(!rep.contains(&FactId(8)));
        assert!(rep.iter().filter(|g| [4, 6, 9].contains(&g.0)).count() <= 2);
    }
    assert_eq!(sigma.len(), 1 + 3 + 5 + 2);
}
