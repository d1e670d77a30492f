//! Generalized totalizer: a weighted sum of input literals, with one output
//! literal per reachable partial sum.
//!
//! Only the upward direction is encoded (inputs force outputs), which is
//! what an upper bound needs: asserting `!o_s` forbids every assignment
//! whose sum reaches `s`. Sums at or above `cap` are merged into `cap`.

use std::collections::BTreeMap;

use crate::formula::{Lit, Var};

/// Build the totalizer over `inputs` (weight, literal) and return the root
/// outputs sorted by sum. `new_var` allocates a fresh variable, `add` emits a
/// clause.
pub fn totalizer<N, A>(inputs: &[(u64, Lit)], cap: u64, new_var: &mut N, add: &mut A) -> Vec<(u64, Lit)>
where
    N: FnMut() -> Var,
    A: FnMut(&[Lit]),
{
    debug_assert!(cap > 0);
    if inputs.is_empty() {
        return Vec::new();
    }
    if inputs.len() == 1 {
        let (w, l) = inputs[0];
        return vec![(w.min(cap), l)];
    }
    let mid = inputs.len() / 2;
    let left = totalizer(&inputs[..mid], cap, new_var, add);
    let right = totalizer(&inputs[mid..], cap, new_var, add);

    let mut sums: BTreeMap<u64, Lit> = BTreeMap::new();
    let mut out = |s: u64, new_var: &mut N| -> Lit { *sums.entry(s).or_insert_with(|| new_var().pos()) };
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    for &(s, a) in left.iter().chain(right.iter()) {
        let o = out(s, new_var);
        clauses.push(vec![!a, o]);
    }
    for &(sa, a) in &left {
        for &(sb, b) in &right {
            let o = out((sa + sb).min(cap), new_var);
            clauses.push(vec![!a, !b, o]);
        }
    }
    for c in &clauses {
        add(c);
    }
    sums.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::clause_satisfied;

    fn check(weights: &[u64], cap: u64) {
        let n = weights.len() as u32;
        let mut next = n;
        let mut clauses: Vec<Vec<Lit>> = Vec::new();
        let inputs: Vec<(u64, Lit)> = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (w, Var(i as u32 + 1).pos()))
            .collect();
        let root = totalizer(
            &inputs,
            cap,
            &mut || {
                next += 1;
                Var(next)
            },
            &mut |c| clauses.push(c.to_vec()),
        );
        let total = next;
        // For each input assignment, the least extension satisfying all
        // clauses sets the output of the capped total and none above it.
        for mask in 0u32..(1 << n) {
            let mut a = vec![false; total as usize];
            for i in 0..n {
                a[i as usize] = mask >> i & 1 == 1;
            }
            // Propagate to fixpoint.
            loop {
                let mut changed = false;
                for c in &clauses {
                    if !clause_satisfied(c, &a) {
                        let o = *c.last().unwrap();
                        a[o.var().index()] = true;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            let sum: u64 = (0..n)
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| weights[i as usize])
                .sum::<u64>()
                .min(cap);
            for &(s, o) in &root {
                if s == sum {
                    assert!(o.eval(&a), "mask {mask:b}: output {s} not forced");
                }
                if s > sum {
                    assert!(!o.eval(&a), "mask {mask:b}: output {s} forced above {sum}");
                }
            }
        }
    }

    #[test]
    fn unit_weights() {
        check(&[1, 1, 1, 1, 1], 3);
        check(&[1, 1, 1, 1], 5);
    }

    #[test]
    fn mixed_weights() {
        check(&[2, 3, 1, 4], 6);
        check(&[5], 3);
    }
}
