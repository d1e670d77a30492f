#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;

use cqa_core::encoder::Role;
use cqa_core::engine::{all_denials, Prepared, Problem};
use cqa_core::formula::{Cnf, Lit, Var, Wcnf};
use cqa_core::instance::{ingest_dir, Instance};
use cqa_core::query::{parse_constraints, parse_query, DenialConstraint, UnionQuery};
use cqa_core::schema::Schema;

pub fn samples() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

pub struct Flights {
    pub instance: Instance,
    pub dcs: Vec<DenialConstraint>,
    pub canada_to_oak: UnionQuery,
    pub first_or_silkair: UnionQuery,
}

pub fn flights() -> Flights {
    let dir = samples().join("flights");
    let schema = Schema::parse(&fs::read_to_string(dir.join("schema.txt")).unwrap()).unwrap();
    let instance = ingest_dir(schema, &dir.join("data")).unwrap();
    let s = instance.schema();
    let dcs = parse_constraints(&fs::read_to_string(dir.join("constraints.txt")).unwrap(), s).unwrap();
    let canada_to_oak =
        parse_query(&fs::read_to_string(dir.join("canada_to_oak.query")).unwrap(), s).unwrap();
    let first_or_silkair = parse_query(
        &fs::read_to_string(dir.join("first_or_silkair.query")).unwrap(),
        s,
    )
    .unwrap();
    Flights {
        instance,
        dcs,
        canada_to_oak,
        first_or_silkair,
    }
}

/// Checks an encoding against the size bounds of the reductions. Returns
/// one line per violated bound.
pub fn size_violations(p: &Problem<'_>, prep: &Prepared, optimized: bool) -> Vec<String> {
    let st = &prep.encoding.formula.stats;
    let n = p.instance.len() as f64;
    let m = p.query.arity() as i32;
    let d2 = p.query.max_atoms();
    let d1 = all_denials(p).iter().map(|c| c.width()).max().unwrap_or(0);
    let answers = prep.witnesses.len();
    let mut bad = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            bad.push(what);
        }
    };
    let emitted_len = |role: Role| -> Vec<usize> {
        prep.encoding
            .formula
            .clauses
            .iter()
            .filter(|c| c.role == role)
            .map(|c| c.lits.len())
            .collect()
    };
    check(st.x_vars as f64 <= n, format!("x vars {} > n {n}", st.x_vars));
    check(
        st.p_vars <= answers && (answers as f64) <= n.powi(m).max(1.0),
        format!("p vars {} with {answers} answers", st.p_vars),
    );
    check(
        st.max_len.beta <= d2 + 1,
        format!("beta length {} > d+1 = {}", st.max_len.beta, d2 + 1),
    );
    let betas = emitted_len(Role::Beta).len() as f64;
    check(
        betas <= (answers.max(1) as f64) * n.powi(d2 as i32),
        format!("{betas} beta clauses exceed |A| n^d"),
    );
    if let Some(v) = &prep.violations {
        check(
            st.constructed.alpha <= v.violations.len() && (v.violations.len() as f64) <= n.powi(d1 as i32),
            format!(
                "alpha count {} with {} violations",
                st.constructed.alpha,
                v.violations.len()
            ),
        );
        check(
            st.constructed.gamma == st.gamma_facts,
            format!("gamma count {} != facts {}", st.constructed.gamma, st.gamma_facts),
        );
        if !optimized {
            check(
                st.gamma_facts == p.instance.len(),
                format!("gamma count {} != n {}", st.gamma_facts, p.instance.len()),
            );
        }
        check(
            (st.y_vars as f64) <= n.powi(d1 as i32 + 1),
            format!("y vars {} > n^(d+1)", st.y_vars),
        );
        check(
            st.max_len.gamma as f64 <= n.powi(d1 as i32 + 1) + 1.0,
            format!("gamma length {}", st.max_len.gamma),
        );
        check(
            st.max_theta_group <= d1 + 1,
            format!("theta group {} > d+1 = {}", st.max_theta_group, d1 + 1),
        );
        check(
            st.constructed.theta <= st.theta_groups * (d1 + 1),
            format!(
                "{} theta clauses for {} groups",
                st.constructed.theta, st.theta_groups
            ),
        );
    } else {
        check(
            st.constructed.alpha as f64 <= n,
            format!("alpha count {} > n {n}", st.constructed.alpha),
        );
        check(
            st.max_len.alpha as f64 <= n,
            format!("alpha length {} > n", st.max_len.alpha),
        );
        check(
            st.constructed.gamma + st.constructed.theta + st.y_vars == 0,
            "gamma/theta on the keys path".into(),
        );
    }
    bad
}

/// Total literal count of an encoding.
pub fn formula_size(prep: &Prepared) -> usize {
    prep.encoding.formula.clauses.iter().map(|c| c.lits.len()).sum()
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.max(1.0).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Random weighted partial MaxSAT instance over 1..=max_vars variables.
pub fn random_wcnf<R: rand::Rng>(rng: &mut R, max_vars: u32) -> Wcnf {
    let num_vars = rng.gen_range(1..=max_vars);
    let clause = |rng: &mut R| -> Vec<Lit> {
        let len = rng.gen_range(1..=3.min(num_vars as usize));
        (0..len)
            .map(|_| Lit::new(Var(rng.gen_range(1..=num_vars)), rng.gen_bool(0.5)))
            .collect()
    };
    let hard = (0..rng.gen_range(0..=(num_vars as usize * 3)))
        .map(|_| clause(rng))
        .collect();
    let soft = (0..rng.gen_range(0..=(num_vars as usize * 2)))
        .map(|_| (rng.gen_range(1..=5u64), clause(rng)))
        .collect();
    Wcnf { num_vars, hard, soft }
}

/// Clause as (positive mask, negative mask) over bit `var - 1`.
fn masks(c: &[Lit]) -> (u32, u32) {
    let mut m = (0u32, 0u32);
    for l in c {
        let bit = 1u32 << l.var().index();
        if l.is_neg() {
            m.1 |= bit;
        } else {
            m.0 |= bit;
        }
    }
    m
}

fn sat_by(bits: u32, (pos, neg): (u32, u32)) -> bool {
    bits & pos != 0 || !bits & neg != 0
}

/// Satisfiability by enumeration (at most 31 variables).
pub fn brute_sat(cnf: &Cnf) -> bool {
    assert!(cnf.num_vars < 32);
    let cs: Vec<_> = cnf.clauses.iter().map(|c| masks(c)).collect();
    (0u32..1 << cnf.num_vars).any(|b| cs.iter().all(|&c| sat_by(b, c)))
}

/// Optimum cost by enumeration, `None` when the hard part is unsatisfiable
/// (at most 31 variables).
pub fn brute_maxsat(w: &Wcnf) -> Option<u64> {
    assert!(w.num_vars < 32);
    let hard: Vec<_> = w.hard.iter().map(|c| masks(c)).collect();
    let soft: Vec<_> = w.soft.iter().map(|(wt, c)| (*wt, masks(c))).collect();
    let mut best: Option<u64> = None;
    for b in 0u32..1 << w.num_vars {
        if !hard.iter().all(|&c| sat_by(b, c)) {
            continue;
        }
        let cost = soft
            .iter()
            .filter(|(_, c)| !sat_by(b, *c))
            .map(|(wt, _)| wt)
            .sum();
        best = Some(best.map_or(cost, |x: u64| x.min(cost)));
    }
    best
}
