use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cqa_core::bench::{average_iterations, report, run_bench, BenchPlan, ReportFormat};
use cqa_core::datagen::{self, generate, GenConfig};
use cqa_core::encoder::{encode_denial, encode_keys, export_cnf, export_dimacs};
use cqa_core::engine::{
    all_denials, consistent_answers, explain, EngineConfig, KeyPath, Problem, SolverChoice, Strategy,
};
use cqa_core::formula::{parse_dimacs, Dimacs};
use cqa_core::loader::load;
use cqa_core::oracle::check::{all_configs, check_case};
use cqa_core::oracle::random::{random_case, sink_case, CaseOptions, ConstraintMix};
use cqa_core::oracle::DEFAULT_CAP;
use cqa_core::solver::{maxsat_solve, sat_solve, ExternalSolver, SatOutcome, SolveError, SolverConfig};
use cqa_core::value::format_tuple;
use cqa_core::witness::{dump_json, minimal_witnesses, violation_index};

#[derive(Parser)]
#[command(
    name = "cqa",
    version,
    about = "Consistent query answering via SAT and MaxSAT"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Maxsat,
    IterSat,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Maxsat => Strategy::MaxSat,
            StrategyArg::IterSat => Strategy::IterSat,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KeyPathArg {
    Native,
    Denial,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportArg {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchFormat {
    Csv,
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulaFormat {
    Wcnf,
    Cnf,
}

#[derive(clap::Args)]
struct Inputs {
    /// Directory holding one `<Relation>.csv` per relation
    #[arg(long)]
    data: PathBuf,
    /// Schema file
    #[arg(long)]
    schema: PathBuf,
    /// Denial constraints, one per line (keys come from the schema)
    #[arg(long)]
    constraints: Option<PathBuf>,
    #[arg(long)]
    query: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load data and print per-relation statistics
    Ingest {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        constraints: Option<PathBuf>,
    },
    /// Write the DIMACS encoding of a problem
    Encode {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        no_optimize: bool,
        #[arg(long, value_enum, default_value = "native")]
        key_path: KeyPathArg,
        #[arg(long, value_enum, default_value = "wcnf")]
        format: FormulaFormat,
        /// Output file (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write witnesses, violations and near-violations as JSON
        #[arg(long)]
        emit_witnesses: Option<PathBuf>,
    },
    /// Solve a DIMACS CNF or WCNF file and print s/o/v lines
    Solve {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Conflict limit per SAT call
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Compute consistent answers
    Answer {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value = "maxsat")]
        strategy: StrategyArg,
        #[arg(long)]
        no_optimize: bool,
        #[arg(long, value_enum, default_value = "native")]
        key_path: KeyPathArg,
        /// `internal`, or a solver command line taking the WCNF path last
        #[arg(long, default_value = "internal")]
        solver: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, value_enum, default_value = "table")]
        report: ReportArg,
        /// Print a witness or falsifying repair for every answer
        #[arg(long)]
        explain: bool,
    },
    /// Run the engine against brute force on random cases
    OracleCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 12)]
        max_facts: usize,
        /// Where to write the first counterexample
        #[arg(long, default_value = "counterexample")]
        out: PathBuf,
    },
    /// Generate synthetic data for a catalog query
    Gen {
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 10_000)]
        rsize: usize,
        #[arg(long, default_value_t = 10.0)]
        indeg: f64,
        #[arg(long, default_value_t = 2)]
        ksize_min: usize,
        #[arg(long, default_value_t = 5)]
        ksize_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep catalog queries over generated data
    Bench {
        /// e.g. `q1-q7`, `q1,q8`, `all`
        #[arg(long, default_value = "q1-q7")]
        queries: String,
        #[arg(long, value_delimiter = ',', default_value = "10000")]
        rsize: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "5,10,15")]
        indeg: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// `maxsat`, `iter-sat` or `both`
        #[arg(long, default_value = "maxsat")]
        strategy: String,
        /// `on`, `off` or `both`
        #[arg(long, default_value = "on")]
        optimize: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: BenchFormat,
        /// Output file (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List catalog queries or print one
    Catalog { name: Option<String> },
}

fn engine_config(
    strategy: StrategyArg,
    no_optimize: bool,
    key_path: KeyPathArg,
    solver: &str,
    seed: u64,
    budget: Option<u64>,
) -> Result<EngineConfig> {
    let solver = if solver == "internal" {
        SolverChoice::Internal
    } else {
        SolverChoice::External(ExternalSolver::parse(solver).ok_or_else(|| anyhow!("empty solver command"))?)
    };
    Ok(EngineConfig {
        strategy: strategy.into(),
        optimize: !no_optimize,
        key_path: match key_path {
            KeyPathArg::Native => KeyPath::Native,
            KeyPathArg::Denial => KeyPath::Denial,
        },
        solver,
        solver_config: SolverConfig {
            seed,
            conflict_budget: budget,
        },
    })
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Ingest {
            data,
            schema,
            constraints,
        } => {
            let l = load(&schema, &data, constraints.as_deref(), None)?;
            let inst = &l.instance;
            println!(
                "{:<16} {:>10} {:>10} {:>12}",
                "relation", "facts", "groups", "in-conflict"
            );
            for id in inst.schema().ids() {
                let groups = inst.key_equal_groups(id);
                let conflicting: usize = groups.iter().filter(|g| g.len() > 1).map(Vec::len).sum();
                println!(
                    "{:<16} {:>10} {:>10} {:>12}",
                    inst.schema().relation(id).name,
                    inst.relation_facts(id).len(),
                    groups.len(),
                    conflicting
                );
            }
            if !l.dcs.is_empty() {
                let p = Problem {
                    instance: inst,
                    dcs: &l.dcs,
                    query: &cqa_core::query::UnionQuery {
                        disjuncts: Vec::new(),
                    },
                };
                let v = violation_index(&all_denials(&p), inst);
                println!(
                    "minimal violations: {}, consistent part: {} of {} facts",
                    v.violations.len(),
                    v.consistent_part(inst).len(),
                    inst.len()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Encode {
            inputs,
            no_optimize,
            key_path,
            format,
            out,
            emit_witnesses,
        } => {
            let l = load(
                &inputs.schema,
                &inputs.data,
                inputs.constraints.as_deref(),
                Some(&inputs.query),
            )?;
            let q = l.query.expect("query loaded");
            let p = Problem {
                instance: &l.instance,
                dcs: &l.dcs,
                query: &q,
            };
            let w = minimal_witnesses(&q, &l.instance);
            let native = matches!(key_path, KeyPathArg::Native) && l.dcs.is_empty();
            let needs_v = !native || emit_witnesses.is_some();
            let v = needs_v.then(|| violation_index(&all_denials(&p), &l.instance));
            let e = if native {
                encode_keys(&l.instance, &w, false, !no_optimize)
            } else {
                encode_denial(&l.instance, v.as_ref().expect("computed"), &w, !no_optimize)
            };
            if let Some(path) = emit_witnesses {
                fs::write(&path, dump_json(&w, v.as_ref().expect("computed")))?;
            }
            let text = match format {
                FormulaFormat::Wcnf => export_dimacs(&e),
                FormulaFormat::Cnf => export_cnf(&e),
            };
            write_out(out.as_deref(), &text)?;
            let s = &e.formula.stats;
            eprintln!(
                "c variables={} clauses={} soft={} decided={} x={} p={} y={}",
                e.formula.num_vars(),
                e.formula.len(),
                e.open().count(),
                e.decided.iter().filter(|d| **d).count(),
                s.x_vars,
                s.p_vars,
                s.y_vars
            );
            for l in 0..e.answers.len() {
                if let Some(v) = e.p(l) {
                    eprintln!("c p {} = {}", v.0, format_tuple(&e.answers[l]));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Solve { file, seed, budget } => {
            let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let cfg = SolverConfig {
                seed,
                conflict_budget: budget,
            };
            let vline = |a: &[bool]| {
                let lits: Vec<String> = a
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| {
                        if b {
                            format!("{}", i + 1)
                        } else {
                            format!("-{}", i + 1)
                        }
                    })
                    .collect();
                format!("v {}", lits.join(" "))
            };
            match parse_dimacs(&text)? {
                Dimacs::Cnf(c) => match sat_solve(&c, &cfg) {
                    SatOutcome::Sat(m) => {
                        println!("s SATISFIABLE\n{}", vline(&m.assignment));
                        Ok(ExitCode::from(10))
                    }
                    SatOutcome::Unsat => {
                        println!("s UNSATISFIABLE");
                        Ok(ExitCode::from(20))
                    }
                    SatOutcome::Unknown => {
                        println!("s UNKNOWN");
                        Ok(ExitCode::SUCCESS)
                    }
                },
                Dimacs::Wcnf(w) => match maxsat_solve(&w, &cfg) {
                    Ok(m) => {
                        println!("o {}\ns OPTIMUM FOUND\n{}", m.cost, vline(&m.assignment));
                        Ok(ExitCode::from(30))
                    }
                    Err(SolveError::HardUnsat) => {
                        println!("s UNSATISFIABLE");
                        Ok(ExitCode::from(20))
                    }
                    Err(SolveError::Unknown) => {
                        println!("s UNKNOWN");
                        Ok(ExitCode::SUCCESS)
                    }
                    Err(e) => Err(e.into()),
                },
            }
        }
        Cmd::Answer {
            inputs,
            strategy,
            no_optimize,
            key_path,
            solver,
            seed,
            budget,
            report: fmt,
            explain: want_explain,
        } => {
            let cfg = engine_config(strategy, no_optimize, key_path, &solver, seed, budget)?;
            let l = load(
                &inputs.schema,
                &inputs.data,
                inputs.constraints.as_deref(),
                Some(&inputs.query),
            )?;
            let q = l.query.expect("query loaded");
            let p = Problem {
                instance: &l.instance,
                dcs: &l.dcs,
                query: &q,
            };
            let r = consistent_answers(&p, &cfg)?;
            match fmt {
                ReportArg::Json if want_explain => {
                    let mut v = serde_json::to_value(&r)?;
                    let ex: Vec<_> = r
                        .answers
                        .iter()
                        .map(|a| {
                            explain(&a.answer, &r, &p).map(|e| serde_json::to_value(e).expect("serializable"))
                        })
                        .collect::<Result<_, _>>()?;
                    v["explanations"] = serde_json::Value::Array(ex);
                    println!("{}", serde_json::to_string_pretty(&v)?);
                }
                ReportArg::Json => println!("{}", r.to_json()),
                ReportArg::Table => {
                    print!("{}", r.to_table());
                    if want_explain {
                        for a in &r.answers {
                            let e = explain(&a.answer, &r, &p)?;
                            println!("{}: {}", format_tuple(&a.answer), serde_json::to_string(&e)?);
                        }
                    }
                }
            }
            Ok(if r.complete {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
        Cmd::OracleCheck {
            seed,
            cases,
            max_facts,
            out,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let configs = all_configs();
            let opts = CaseOptions {
                max_facts,
                constraints: ConstraintMix::Any,
                ..CaseOptions::default()
            };
            for i in 0..cases {
                let case = if i % 10 == 9 {
                    sink_case(&mut rng, max_facts)
                } else {
                    random_case(&mut rng, &opts)
                };
                let bad = check_case(&case, &configs, DEFAULT_CAP)?;
                if !bad.is_empty() {
                    case.write_to(&out)?;
                    eprintln!("case {i} disagrees with the oracle:");
                    for b in &bad {
                        eprintln!("  {b}");
                    }
                    eprintln!("{}", case.describe());
                    eprintln!("written to {}", out.display());
                    return Ok(ExitCode::FAILURE);
                }
            }
            println!("{cases} cases agree with the oracle");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Gen {
            query,
            rsize,
            indeg,
            ksize_min,
            ksize_max,
            seed,
            out,
        } => {
            let mut cfg = GenConfig::new(&query, rsize, indeg, seed);
            cfg.ksize = (ksize_min, ksize_max);
            let g = generate(&cfg)?;
            g.write_to(&out)?;
            println!("{}", serde_json::to_string_pretty(&g.report)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Bench {
            queries,
            rsize,
            indeg,
            reps,
            strategy,
            optimize,
            seed,
            format,
            out,
        } => {
            let strategies = match strategy.as_str() {
                "maxsat" => vec![Strategy::MaxSat],
                "iter-sat" => vec![Strategy::IterSat],
                "both" => vec![Strategy::MaxSat, Strategy::IterSat],
                s => bail!("unknown strategy `{s}`"),
            };
            let optimize = match optimize.as_str() {
                "on" => vec![true],
                "off" => vec![false],
                "both" => vec![true, false],
                s => bail!("unknown optimize setting `{s}`"),
            };
            let plan = BenchPlan {
                queries: datagen::select(&queries)?.into_iter().map(String::from).collect(),
                rsizes: rsize,
                indegs: indeg,
                strategies,
                optimize,
                reps,
                seed,
                engine: EngineConfig::default(),
            };
            let recs = run_bench(&plan, |r| {
                eprintln!(
                    "{} rsize={} indeg={} opt={} E={:.3}s S={:.3}s iters={}{}",
                    r.query,
                    r.rsize,
                    r.indeg,
                    r.optimize,
                    r.encode_seconds,
                    r.solve_seconds,
                    r.iterations,
                    r.error
                        .as_deref()
                        .map(|e| format!(" error: {e}"))
                        .unwrap_or_default()
                )
            });
            let fmt = match format {
                BenchFormat::Csv => ReportFormat::Csv,
                BenchFormat::Json => ReportFormat::Json,
                BenchFormat::Table => ReportFormat::Table,
            };
            write_out(out.as_deref(), &report(&recs, fmt))?;
            eprintln!("average iterations: {:.2}", average_iterations(&recs));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Catalog { name: None } => {
            for n in datagen::catalog_names() {
                let e = datagen::catalog::entry(n)?;
                println!("{:<4} {}", n, e.query.replace('\n', " "));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Catalog { name: Some(n) } => {
            let e = datagen::catalog::entry(&n)?;
            println!("# schema\n{}", e.schema.trim_end());
            if !e.constraints.is_empty() {
                println!("# constraints\n{}", e.constraints.trim_end());
            }
            println!("# query\n{}", e.query);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
