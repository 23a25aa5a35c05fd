//! Plain-text rendering.

use std::fmt::Write;

use smb_core::{Instance, SolveOutcome};

/// `{0,1} {2}`
pub fn sets(classes: &[Vec<usize>]) -> String {
    classes
        .iter()
        .map(|c| format!("{{{}}}", c.iter().map(usize::to_string).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Witness pairs sorted by variable name.
pub fn named_witness(inst: &Instance, w: &[usize]) -> Vec<(String, usize)> {
    let mut pairs: Vec<(String, usize)> = inst.variables().iter().cloned().zip(w.iter().copied()).collect();
    pairs.sort();
    pairs
}

pub fn solve_text(inst: &Instance, out: &SolveOutcome) -> String {
    let mut s = String::new();
    let t = &out.trace;
    writeln!(s, "{}", if out.satisfiable { "SAT" } else { "UNSAT" }).unwrap();
    if let Some(w) = &out.witness {
        writeln!(s, "witness:").unwrap();
        for (name, value) in named_witness(inst, w) {
            writeln!(s, "  {name} = {value}").unwrap();
        }
    }
    writeln!(s, "method: {}", t.method).unwrap();
    writeln!(
        s,
        "solver calls: {}, max depth: {}, restarts: {}, tightenings: {}, eliminations: {}, memo hits: {}, audits: {}",
        t.solver_calls, t.max_depth, t.restarts, t.tightenings, t.eliminations, t.memo_hits, t.audits
    )
    .unwrap();
    let sizes: Vec<String> =
        t.size_history.iter().map(|x| x.map_or_else(|| "-".to_string(), |v| v.to_string())).collect();
    writeln!(s, "size history: [{}]", sizes.join(", ")).unwrap();
    s
}
