//! Solver results and structured traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

/// A decision, an optional witness indexed by variable, and the trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub satisfiable: bool,
    pub witness: Option<Vec<usize>>,
    pub trace: Trace,
}

impl SolveOutcome {
    pub fn sat(witness: Option<Vec<usize>>, trace: Trace) -> Self {
        SolveOutcome { satisfiable: true, witness, trace }
    }

    pub fn unsat(trace: Trace) -> Self {
        SolveOutcome { satisfiable: false, witness: None, trace }
    }

    /// Re-checks the witness against `inst`.
    pub fn verify(&self, inst: &Instance) -> Result<()> {
        match (&self.witness, self.satisfiable) {
            (Some(_), false) => Err(Error::Invariant("witness attached to an UNSAT answer".into())),
            (Some(w), true) if !inst.is_solution(w) => {
                Err(Error::Invariant(format!("witness {w:?} does not satisfy the instance")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Minimize { k: usize, l: usize, empty: bool },
    Tighten { reason: String, variables: Vec<usize>, removed: usize },
    Eliminate { variables: Vec<usize>, outcome: String },
    Restart { mass: usize, size: Option<usize> },
    Recurse { size: Option<usize> },
    Delegate { method: String },
    Decide { satisfiable: bool, step: String },
}

/// Top-level events plus counters aggregated over nested calls.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub method: String,
    pub events: Vec<TraceEvent>,
    pub solver_calls: usize,
    pub max_depth: usize,
    pub restarts: usize,
    pub tightenings: usize,
    pub eliminations: usize,
    pub memo_hits: usize,
    /// Runtime invariant checks performed against the oracle.
    pub audits: usize,
    pub size_history: Vec<Option<usize>>,
}

impl Trace {
    pub fn new(method: &str) -> Self {
        Trace { method: method.to_string(), ..Default::default() }
    }

    pub fn push(&mut self, e: TraceEvent) {
        self.count(&e);
        if let TraceEvent::Restart { size, .. } | TraceEvent::Recurse { size } = &e {
            self.size_history.push(*size);
        }
        self.events.push(e);
    }

    /// Updates the counters for `e` without recording it.
    pub fn count(&mut self, e: &TraceEvent) {
        match e {
            TraceEvent::Tighten { .. } => self.tightenings += 1,
            TraceEvent::Restart { .. } => self.restarts += 1,
            TraceEvent::Eliminate { .. } => self.eliminations += 1,
            _ => {}
        }
    }

    /// Folds a nested call's counters into this trace; its events are dropped.
    pub fn absorb(&mut self, child: &Trace, depth: usize) {
        self.solver_calls += child.solver_calls;
        self.max_depth = self.max_depth.max(child.max_depth).max(depth);
        self.restarts += child.restarts;
        self.tightenings += child.tightenings;
        self.eliminations += child.eliminations;
        self.memo_hits += child.memo_hits;
        self.audits += child.audits;
    }
}
