//! Instances whose domains have linearly ordered blocks.
//!
//! The loop looks for the longest prefix of variables with a least-block
//! solution. When the prefix stops short of `n`, the next variable cannot
//! take a least-block value in any solution, so its least block is removed.

use std::collections::BTreeMap;

use crate::consistency::minimize_11;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::malcev::least_block_solve;
use crate::oracle::all_solutions;
use crate::outcome::{SolveOutcome, Trace, TraceEvent};

use super::{extract_witness, regularize_instance, SolveOptions};

fn check_shape(inst: &Instance) -> Result<()> {
    for i in 0..inst.len() {
        if !inst.domain(i).is_empty() && !inst.sort(i)?.smb().is_chain() {
            return Err(Error::Structure(format!(
                "the domain of {} does not have linearly ordered blocks",
                inst.variables()[i]
            )));
        }
    }
    Ok(())
}

/// Brute-force check that no solution of `q` takes a value of `least` at `i`.
fn audit_claim(q: &Instance, i: usize, least: &[usize], opts: &SolveOptions, trace: &mut Trace) -> Result<()> {
    if !opts.auditable(q) {
        return Ok(());
    }
    trace.audits += 1;
    let sols = all_solutions(q, opts.caps.audit)?;
    if let Some(f) = sols.iter().find(|f| least.binary_search(&f[i]).is_ok()) {
        return Err(Error::Invariant(format!(
            "removed least block {least:?} of {} but solution {f:?} uses it",
            q.variables()[i]
        )));
    }
    Ok(())
}

/// Decision procedure on a regularized instance.
pub(crate) fn decide_linear(p: &Instance, opts: &SolveOptions, trace: &mut Trace) -> Result<bool> {
    let mut q = p.clone();
    loop {
        let mass = q.mass();
        q = minimize_11(&q);
        let empty = q.has_empty_constraint();
        trace.push(TraceEvent::Minimize { k: 1, l: 1, empty });
        if empty {
            trace.push(TraceEvent::Decide { satisfiable: false, step: "2".into() });
            return Ok(false);
        }
        let n = q.len();
        let mut i = n;
        loop {
            let prefix: Vec<usize> = (0..i).collect();
            trace.solver_calls += 1;
            if least_block_solve(&q.restrict(&prefix), &[], false)?.satisfiable {
                break;
            }
            if i == 0 {
                return Err(Error::Invariant("the empty prefix has no least-block solution".into()));
            }
            i -= 1;
        }
        if i == n {
            trace.push(TraceEvent::Decide { satisfiable: true, step: "4.a".into() });
            return Ok(true);
        }
        let least = q.sort(i)?.least_block();
        audit_claim(&q, i, &least, opts, trace)?;
        let rest: Vec<usize> = q.domain(i).iter().copied().filter(|a| least.binary_search(a).is_err()).collect();
        q = q.tighten(&BTreeMap::from([(i, rest)]))?;
        trace.push(TraceEvent::Tighten { reason: "4.b".into(), variables: vec![i], removed: least.len() });
        if q.mass() >= mass {
            return Err(Error::Invariant("linear loop did not shrink the instance".into()));
        }
    }
}

/// Decides an instance over algebras with linearly ordered blocks.
pub fn solve_linear(inst: &Instance, opts: &SolveOptions) -> Result<SolveOutcome> {
    let p = regularize_instance(inst)?;
    check_shape(&p)?;
    let mut trace = Trace::new("linear");
    if !decide_linear(&p, opts, &mut trace)? {
        return Ok(SolveOutcome::unsat(trace));
    }
    let witness = if opts.witness {
        let mut sub = Trace::new("linear");
        let w = extract_witness(&p, |q| decide_linear(q, opts, &mut sub))?;
        trace.absorb(&sub, 1);
        Some(w)
    } else {
        None
    };
    let out = SolveOutcome::sat(witness, trace);
    out.verify(inst)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceBuilder;
    use crate::named;
    use crate::oracle::{brute_force, DEFAULT_ORACLE_CAP};

    fn opts() -> SolveOptions {
        SolveOptions::default().with_witness(true)
    }

    #[test]
    fn tightening_removes_the_least_block() {
        // An odd cycle of inequalities on the xor block; only the unit survives.
        let neq = vec![vec![0, 1], vec![1, 0], vec![2, 2]];
        let inst = InstanceBuilder::new()
            .algebra(named::unital3())
            .var("x", "U3")
            .var("y", "U3")
            .var("z", "U3")
            .constraint(&[0, 1], neq.clone())
            .constraint(&[1, 2], neq.clone())
            .constraint(&[0, 2], neq)
            .build()
            .unwrap();
        let out = solve_linear(&inst, &opts()).unwrap();
        assert_eq!(out.witness, Some(vec![2, 2, 2]));
        assert!(out.trace.events.iter().any(|e| matches!(e, TraceEvent::Tighten { .. })));
    }

    #[test]
    fn malcev_only_needs_one_query() {
        let inst = InstanceBuilder::new()
            .algebra(named::m2())
            .var("x", "M2")
            .var("y", "M2")
            .constraint(&[0, 1], vec![vec![0, 1], vec![1, 0]])
            .build()
            .unwrap();
        let out = solve_linear(&inst, &SolveOptions::default()).unwrap();
        assert!(out.satisfiable);
        assert_eq!(out.trace.solver_calls, 1);
    }

    #[test]
    fn unsat_matches_oracle() {
        // {(0,1),(1,0)} is not closed under min, so it is rejected at load.
        let bad = InstanceBuilder::new()
            .algebra(named::chain3())
            .var("x", "C3")
            .var("y", "C3")
            .constraint(&[0, 1], vec![vec![0, 1], vec![1, 0]])
            .build();
        assert!(bad.is_err());
        let inst = InstanceBuilder::new()
            .algebra(named::chain3())
            .var("x", "C3")
            .var("y", "C3")
            .constraint(&[0, 1], vec![vec![0, 0], vec![1, 2]])
            .constraint(&[1, 0], vec![vec![1, 1], vec![2, 2], vec![1, 2]])
            .build()
            .unwrap();
        let out = solve_linear(&inst, &opts()).unwrap();
        assert!(!out.satisfiable);
        assert!(!brute_force(&inst, DEFAULT_ORACLE_CAP).unwrap().satisfiable);
    }

    #[test]
    fn rejects_flat_domains() {
        let inst = InstanceBuilder::new().algebra(named::flat(2)).var("x", "F2").build().unwrap();
        assert!(matches!(solve_linear(&inst, &opts()), Err(Error::Structure(_))));
    }
}
