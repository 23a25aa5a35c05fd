//! Exhaustive backtracking over all assignments.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::outcome::{SolveOutcome, Trace};

pub const DEFAULT_ORACLE_CAP: u64 = 10_000_000;

/// Product of the domain sizes, saturating.
pub fn search_space(inst: &Instance) -> u64 {
    inst.domains().iter().fold(1u64, |acc, d| acc.saturating_mul(d.elems.len() as u64))
}

struct Search<'a> {
    inst: &'a Instance,
    /// Constraints checked when their last variable is assigned.
    closing: Vec<Vec<(Vec<usize>, HashSet<Vec<usize>>)>>,
    assignment: Vec<usize>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance) -> Self {
        let mut closing = vec![Vec::new(); inst.len()];
        for (scope, rel) in inst.constraints() {
            if let Some(&last) = scope.last() {
                closing[last].push((scope.clone(), rel.iter().cloned().collect()));
            }
        }
        Search { inst, closing, assignment: vec![0; inst.len()] }
    }

    fn ok_at(&self, v: usize) -> bool {
        self.closing[v].iter().all(|(scope, rel)| {
            let t: Vec<usize> = scope.iter().map(|&u| self.assignment[u]).collect();
            rel.contains(&t)
        })
    }

    /// Calls `visit` on every solution in lexicographic order; stops when it returns false.
    fn run(&mut self, v: usize, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if v == self.inst.len() {
            return visit(&self.assignment);
        }
        for &a in self.inst.domain(v) {
            self.assignment[v] = a;
            if self.ok_at(v) && !self.run(v + 1, visit) {
                return false;
            }
        }
        true
    }
}

fn check_cap(inst: &Instance, cap: u64) -> Result<()> {
    if search_space(inst) > cap {
        return Err(Error::CapExceeded { what: "brute-force search space".into(), cap: cap as usize });
    }
    Ok(())
}

fn trivially_unsat(inst: &Instance) -> bool {
    inst.has_empty_constraint()
}

/// Lexicographically first solution, if any.
pub fn first_solution(inst: &Instance, cap: u64) -> Result<Option<Vec<usize>>> {
    if trivially_unsat(inst) {
        return Ok(None);
    }
    check_cap(inst, cap)?;
    let mut found = None;
    Search::new(inst).run(0, &mut |f| {
        found = Some(f.to_vec());
        false
    });
    Ok(found)
}

/// All solutions in lexicographic order.
pub fn all_solutions(inst: &Instance, cap: u64) -> Result<Vec<Vec<usize>>> {
    if trivially_unsat(inst) {
        return Ok(vec![]);
    }
    check_cap(inst, cap)?;
    let mut out = Vec::new();
    Search::new(inst).run(0, &mut |f| {
        out.push(f.to_vec());
        true
    });
    Ok(out)
}

/// The brute-force oracle: exhaustive enumeration with the lexicographically first witness.
pub fn brute_force(inst: &Instance, cap: u64) -> Result<SolveOutcome> {
    let mut trace = Trace::new("bruteforce");
    trace.solver_calls = 1;
    Ok(match first_solution(inst, cap)? {
        Some(w) => SolveOutcome::sat(Some(w), trace),
        None => SolveOutcome::unsat(trace),
    })
}
