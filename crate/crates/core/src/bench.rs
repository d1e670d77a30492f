//! Benchmark sweeps over generated data, split into encode and solve time.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datagen::{generate, GenConfig};
use crate::engine::{consistent_answers, EngineConfig, Problem, Strategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub query: String,
    pub rsize: usize,
    pub indeg: f64,
    pub strategy: Strategy,
    pub optimize: bool,
    pub facts: usize,
    pub variables: u32,
    pub clauses: usize,
    pub encode_seconds: f64,
    pub solve_seconds: f64,
    pub iterations: usize,
    pub potential_answers: usize,
    pub consistent_answers: usize,
    pub complete: bool,
    pub error: Option<String>,
}

impl BenchRecord {
    pub fn total_seconds(&self) -> f64 {
        self.encode_seconds + self.solve_seconds
    }
}

#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub queries: Vec<String>,
    pub rsizes: Vec<usize>,
    pub indegs: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub optimize: Vec<bool>,
    pub reps: usize,
    pub seed: u64,
    pub engine: EngineConfig,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Run every cell of the plan. Errors are recorded in the cell and the
/// sweep continues. `progress` is called after each cell.
pub fn run_bench(plan: &BenchPlan, mut progress: impl FnMut(&BenchRecord)) -> Vec<BenchRecord> {
    let mut out = Vec::new();
    for q in &plan.queries {
        for &rsize in &plan.rsizes {
            for &indeg in &plan.indegs {
                let data = generate(&GenConfig::new(q, rsize, indeg, plan.seed));
                for &strategy in &plan.strategies {
                    for &optimize in &plan.optimize {
                        let mut rec = BenchRecord {
                            query: q.clone(),
                            rsize,
                            indeg,
                            strategy,
                            optimize,
                            facts: 0,
                            variables: 0,
                            clauses: 0,
                            encode_seconds: 0.0,
                            solve_seconds: 0.0,
                            iterations: 0,
                            potential_answers: 0,
                            consistent_answers: 0,
                            complete: false,
                            error: None,
                        };
                        match &data {
                            Err(e) => rec.error = Some(e.to_string()),
                            Ok(g) => {
                                rec.facts = g.instance.len();
                                let p = Problem {
                                    instance: &g.instance,
                                    dcs: &g.dcs,
                                    query: &g.query,
                                };
                                let cfg = EngineConfig {
                                    strategy,
                                    optimize,
                                    ..plan.engine.clone()
                                };
                                let (mut enc, mut sol) = (Vec::new(), Vec::new());
                                for _ in 0..plan.reps.max(1) {
                                    match consistent_answers(&p, &cfg) {
                                        Ok(r) => {
                                            enc.push(r.encode_seconds);
                                            sol.push(r.solve_seconds);
                                            rec.variables = r.variables;
                                            rec.clauses = r.clauses;
                                            rec.iterations = r.iterations;
                                            rec.potential_answers = r.answers.len();
                                            rec.consistent_answers = r.consistent().len();
                                            rec.complete = r.complete;
                                        }
                                        Err(e) => {
                                            rec.error = Some(e.to_string());
                                            break;
                                        }
                                    }
                                }
                                rec.encode_seconds = median(enc);
                                rec.solve_seconds = median(sol);
                            }
                        }
                        progress(&rec);
                        out.push(rec);
                    }
                }
            }
        }
    }
    out
}

/// Average iteration count over cells that completed.
pub fn average_iterations(records: &[BenchRecord]) -> f64 {
    let done: Vec<_> = records
        .iter()
        .filter(|r| r.error.is_none() && r.complete)
        .collect();
    if done.is_empty() {
        return 0.0;
    }
    done.iter().map(|r| r.iterations as f64).sum::<f64>() / done.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Table,
}

pub fn report(records: &[BenchRecord], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(records).expect("serializable"),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if records.is_empty() {
                // serde only writes a header together with the first row
                w.write_record(CSV_HEADER).expect("in-memory write");
            }
            for r in records {
                w.serialize(r).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
        ReportFormat::Table => table(records),
    }
}

const CSV_HEADER: [&str; 15] = [
    "query",
    "rsize",
    "indeg",
    "strategy",
    "optimize",
    "facts",
    "variables",
    "clauses",
    "encode_seconds",
    "solve_seconds",
    "iterations",
    "potential_answers",
    "consistent_answers",
    "complete",
    "error",
];

fn table(records: &[BenchRecord]) -> String {
    let head = [
        "query",
        "rsize",
        "indeg",
        "strategy",
        "opt",
        "vars",
        "clauses",
        "E(s)",
        "S(s)",
        "iters",
        "answers",
        "consistent",
    ];
    let rows: Vec<[String; 12]> = records
        .iter()
        .map(|r| {
            [
                r.query.clone(),
                r.rsize.to_string(),
                format!("{}", r.indeg),
                match r.strategy {
                    Strategy::MaxSat => "maxsat".into(),
                    Strategy::IterSat => "iter-sat".into(),
                },
                if r.optimize { "yes".into() } else { "no".into() },
                r.variables.to_string(),
                r.clauses.to_string(),
                format!("{:.3}", r.encode_seconds),
                format!("{:.3}", r.solve_seconds),
                r.iterations.to_string(),
                r.potential_answers.to_string(),
                match &r.error {
                    Some(e) => format!("error: {e}"),
                    None => r.consistent_answers.to_string(),
                },
            ]
        })
        .collect();
    let mut width: Vec<usize> = head.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (i, c) in row.iter().enumerate() {
            width[i] = width[i].max(c.len());
        }
    }
    let numeric = |i: usize| i != 0 && i != 3 && i != 4;
    let mut s = String::new();
    let line = |cells: &[String], s: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if numeric(i) {
                    format!("{c:>w$}", w = width[i])
                } else {
                    format!("{c:<w$}", w = width[i])
                }
            })
            .collect();
        let _ = writeln!(s, "{}", parts.join("  ").trim_end());
    };
    line(&head.map(String::from), &mut s);
    for row in &rows {
        line(row, &mut s);
    }
    s
}

/// Wall-clock helper for callers that time whole runs.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(queries: &[&str]) -> BenchPlan {
        BenchPlan {
            queries: queries.iter().map(|s| s.to_string()).collect(),
            rsizes: vec![300],
            indegs: vec![10.0],
            strategies: vec![Strategy::MaxSat],
            optimize: vec![true, false],
            reps: 1,
            seed: 1,
            engine: EngineConfig::default(),
        }
    }

    #[test]
    fn empty_plan_is_empty() {
        assert!(run_bench(&plan(&[]), |_| {}).is_empty());
        let csv = report(&[], ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn formats() {
        let (recs, wall) = timed(|| run_bench(&plan(&["q1"]), |_| {}));
        assert_eq!(recs.len(), 2);
        for r in &recs {
            assert!(r.error.is_none(), "{:?}", r.error);
            assert!(r.total_seconds() <= wall);
        }
        assert_eq!(recs[0].consistent_answers, recs[1].consistent_answers);

        let csv = report(&recs[..1], ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));

        let json = report(&recs, ReportFormat::Json);
        let back: Vec<BenchRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, recs);

        let t = report(&recs, ReportFormat::Table);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].find("300"), lines[2].find("300"));
    }
}
