//! SAT and weighted partial MaxSAT solving.

mod card;
pub mod cdcl;
pub mod external;
mod maxsat;

use thiserror::Error;

use crate::formula::{Cnf, Lit, Wcnf};

pub use card::totalizer;
pub use cdcl::{SatResult, Solver, SolverStats};
pub use external::{external_solve, parse_solver_output, ExternalSolver};
pub use maxsat::{maxsat_with_stats, MaxSatStats};

/// A total assignment (indexed by `var.index()`) and, for MaxSAT, the
/// weight of falsified soft clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub assignment: Vec<bool>,
    pub cost: u64,
}

impl Model {
    pub fn value(&self, l: Lit) -> bool {
        self.assignment
            .get(l.var().index())
            .map_or(l.is_neg(), |&b| b != l.is_neg())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatOutcome {
    Sat(Model),
    Unsat,
    Unknown,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("hard clauses are unsatisfiable")]
    HardUnsat,
    #[error("conflict budget exhausted")]
    Unknown,
    #[error("external solver: {message}\n--- raw output ---\n{output}")]
    External { message: String, output: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error("internal: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolverConfig {
    pub seed: u64,
    /// Conflict limit per SAT call; `None` means unlimited.
    pub conflict_budget: Option<u64>,
}

pub fn sat_solve(cnf: &Cnf, cfg: &SolverConfig) -> SatOutcome {
    solve_under_assumptions(cnf, &[], cfg)
}

pub fn solve_under_assumptions(cnf: &Cnf, assumptions: &[Lit], cfg: &SolverConfig) -> SatOutcome {
    let mut s = Solver::new(cnf.num_vars, cfg.seed);
    s.set_budget(cfg.conflict_budget);
    for c in &cnf.clauses {
        if c.is_empty() || !s.add_clause(c) {
            return SatOutcome::Unsat;
        }
    }
    match s.solve(assumptions) {
        SatResult::Sat => {
            let mut assignment = s.model().to_vec();
            assignment.resize(cnf.num_vars as usize, false);
            SatOutcome::Sat(Model { assignment, cost: 0 })
        }
        SatResult::Unsat => SatOutcome::Unsat,
        SatResult::Unknown => SatOutcome::Unknown,
    }
}

/// Optimum model of a weighted partial MaxSAT instance.
pub fn maxsat_solve(w: &Wcnf, cfg: &SolverConfig) -> Result<Model, SolveError> {
    maxsat_with_stats(w, cfg).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Var;

    fn l(d: i64) -> Lit {
        Lit::from_dimacs(d)
    }

    #[test]
    fn no_softs_cost_zero() {
        let w = Wcnf {
            num_vars: 2,
            hard: vec![vec![l(1), l(2)]],
            soft: vec![],
        };
        let m = maxsat_solve(&w, &SolverConfig::default()).unwrap();
        assert_eq!(m.cost, 0);
        assert!(w.hard_satisfied_by(&m.assignment));
    }

    #[test]
    fn hard_unsat_is_an_error() {
        let w = Wcnf {
            num_vars: 1,
            hard: vec![vec![l(1)], vec![l(-1)]],
            soft: vec![(1, vec![l(1)])],
        };
        assert_eq!(
            maxsat_solve(&w, &SolverConfig::default()),
            Err(SolveError::HardUnsat)
        );
    }

    #[test]
    fn weighted_choice() {
        // at most one of 1,2,3; weights 2,3,4 -> keep 3, cost 5.
        let w = Wcnf {
            num_vars: 3,
            hard: vec![vec![l(-1), l(-2)], vec![l(-1), l(-3)], vec![l(-2), l(-3)]],
            soft: vec![(2, vec![l(1)]), (3, vec![l(2)]), (4, vec![l(3)])],
        };
        let m = maxsat_solve(&w, &SolverConfig::default()).unwrap();
        assert_eq!(m.cost, 5);
        assert!(m.value(Var(3).pos()));
    }

    #[test]
    fn non_unit_softs() {
        let w = Wcnf {
            num_vars: 2,
            hard: vec![vec![l(-1)], vec![l(-2)]],
            soft: vec![(1, vec![l(1), l(2)]), (1, vec![l(-1), l(2)]), (1, vec![])],
        };
        let m = maxsat_solve(&w, &SolverConfig::default()).unwrap();
        assert_eq!(m.cost, 2);
    }

    #[test]
    fn unsat_under_assumptions() {
        let cnf = Cnf {
            num_vars: 2,
            clauses: vec![vec![l(1), l(2)]],
        };
        let cfg = SolverConfig::default();
        assert_eq!(
            solve_under_assumptions(&cnf, &[l(-1), l(-2)], &cfg),
            SatOutcome::Unsat
        );
        assert!(matches!(
            solve_under_assumptions(&cnf, &[], &cfg),
            SatOutcome::Sat(_)
        ));
    }
}
