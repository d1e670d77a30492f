//! Differential checks of the engine against the brute-force oracle.

use std::collections::BTreeSet;

use crate::engine::{
    certain_boolean, consistent_answers, explain, EngineConfig, Explanation, KeyPath, Problem, Strategy,
};
use crate::value::{format_tuple, Tuple};

use super::random::RandomCase;
use super::{certain_bruteforce, consistent_answers_bruteforce, is_repair, naive_answers, OracleError};

/// Every combination of strategy, optimization and key encoding.
pub fn all_configs() -> Vec<EngineConfig> {
    let mut out = Vec::new();
    for strategy in [Strategy::MaxSat, Strategy::IterSat] {
        for optimize in [true, false] {
            for key_path in [KeyPath::Native, KeyPath::Denial] {
                out.push(EngineConfig {
                    strategy,
                    optimize,
                    key_path,
                    ..EngineConfig::default()
                });
            }
        }
    }
    out
}

pub fn describe_config(c: &EngineConfig) -> String {
    format!(
        "strategy={:?} optimize={} keys={:?}",
        c.strategy, c.optimize, c.key_path
    )
}

fn show(set: &BTreeSet<Tuple>) -> String {
    let parts: Vec<String> = set.iter().map(|t| format_tuple(t)).collect();
    format!("{{{}}}", parts.join(", "))
}

/// Compare the engine with the oracle on one case under every config.
/// Returns one line per disagreement.
pub fn check_case(
    case: &RandomCase,
    configs: &[EngineConfig],
    cap: u128,
) -> Result<Vec<String>, OracleError> {
    let inst = &case.instance;
    let expected = consistent_answers_bruteforce(&case.query, inst, &case.dcs, cap)?;
    let potential = naive_answers(&case.query, inst, &|_| true);
    let p = Problem {
        instance: inst,
        dcs: &case.dcs,
        query: &case.query,
    };
    let mut bad = Vec::new();
    for cfg in configs {
        let tag = describe_config(cfg);
        let r = match consistent_answers(&p, cfg) {
            Ok(r) => r,
            Err(e) => {
                bad.push(format!("{tag}: engine error: {e}"));
                continue;
            }
        };
        let got: BTreeSet<Tuple> = r.consistent().into_iter().cloned().collect();
        let all: BTreeSet<Tuple> = r.answers.iter().map(|a| a.answer.clone()).collect();
        if !r.complete {
            bad.push(format!("{tag}: incomplete"));
        }
        if got != expected {
            bad.push(format!(
                "{tag}: consistent {} but oracle says {}",
                show(&got),
                show(&expected)
            ));
        }
        if all != potential {
            bad.push(format!(
                "{tag}: potential {} but oracle says {}",
                show(&all),
                show(&potential)
            ));
        }
        if r.iterations > r.answers.len() {
            bad.push(format!(
                "{tag}: {} iterations for {} answers",
                r.iterations,
                r.answers.len()
            ));
        }
        for a in r.inconsistent() {
            match explain(a, &r, &p) {
                Ok(Explanation::FalsifyingRepair { facts }) => {
                    if !is_repair(inst, &case.dcs, &facts) {
                        bad.push(format!(
                            "{tag}: decoded set for {} is not a repair",
                            format_tuple(a)
                        ));
                    }
                    let m: BTreeSet<_> = facts.iter().copied().collect();
                    if naive_answers(&case.query, inst, &|f| m.contains(&f)).contains(a) {
                        bad.push(format!(
                            "{tag}: decoded repair for {} keeps the answer",
                            format_tuple(a)
                        ));
                    }
                }
                other => bad.push(format!("{tag}: explain {}: {other:?}", format_tuple(a))),
            }
        }
        if case.query.is_boolean() {
            let want = certain_bruteforce(&case.query, inst, &case.dcs, cap)?;
            match certain_boolean(&p, cfg) {
                Ok(b) if b == want => {}
                Ok(b) => bad.push(format!("{tag}: certain_boolean {b} but oracle says {want}")),
                Err(e) => bad.push(format!("{tag}: certain_boolean error: {e}")),
            }
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::random::{random_case, sink_case, CaseOptions};
    use crate::oracle::DEFAULT_CAP;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_cases_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let configs = all_configs();
        for i in 0..60 {
            let c = random_case(&mut rng, &CaseOptions::default());
            let bad = check_case(&c, &configs, DEFAULT_CAP).unwrap();
            assert!(bad.is_empty(), "case {i}\n{}\n{}", c.describe(), bad.join("\n"));
        }
        for i in 0..30 {
            let c = sink_case(&mut rng, 8);
            let bad = check_case(&c, &configs, DEFAULT_CAP).unwrap();
            assert!(bad.is_empty(), "sink {i}\n{}\n{}", c.describe(), bad.join("\n"));
        }
    }
}
