//! Instances whose domains have flat block orders: a least block `O` below
//! pairwise incomparable maximal blocks.
//!
//! A pair `(i, j)` with `A_i` meeting both `O` and the maximal block `I_j`
//! belongs to `S(P)`. It is below `(i', j')` when every tuple of the binary
//! projection with `f(i) ∈ I_j` has `f(i') ∈ I_{j'}`. Classes of mutually
//! comparable pairs are strands.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::consistency::{is_23_minimal, minimize_23};
use crate::error::{Error, Result};
use crate::instance::{project, Instance};
use crate::malcev::{least_block_solve, malcev_solve};
use crate::oracle::{all_solutions, first_solution};
use crate::outcome::{SolveOutcome, Trace, TraceEvent};

use super::{extract_witness, regularize_instance, SolveOptions};

/// One element of `S(P)`: a variable and one of its maximal blocks.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StrandMember {
    pub variable: usize,
    /// Block id in the variable's domain structure.
    pub block: usize,
    pub elems: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strand {
    /// At most one member per variable, in variable order.
    pub members: Vec<StrandMember>,
}

impl Strand {
    pub fn variables(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.variable).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrandAnalysis {
    /// `S(P)` in lexicographic order.
    pub pairs: Vec<StrandMember>,
    /// `below[x][y]` iff `pairs[x] ⪯ pairs[y]`.
    pub below: Vec<Vec<bool>>,
    /// Strands in a topological order of `⪯`, ties broken by least member.
    pub strands: Vec<Strand>,
    /// Covering relations between strands, as index pairs into `strands`.
    pub hasse: Vec<(usize, usize)>,
}

fn check_flat(inst: &Instance) -> Result<()> {
    for i in 0..inst.len() {
        if !inst.domain(i).is_empty() && !inst.sort(i)?.smb().is_flat() {
            return Err(Error::Structure(format!(
                "the domain of {} does not have a flat block order",
                inst.variables()[i]
            )));
        }
    }
    Ok(())
}

/// `S(P)`: for every domain with at least two blocks, its non-least blocks.
fn strand_pairs(inst: &Instance) -> Result<Vec<StrandMember>> {
    let mut out = Vec::new();
    for i in 0..inst.len() {
        let sort = inst.sort(i)?;
        let smb = sort.smb();
        if smb.block_count() < 2 {
            continue;
        }
        let least = smb.least_block().expect("flat domains have a least block");
        for (b, elems) in sort.blocks().into_iter().enumerate() {
            if b != least {
                out.push(StrandMember { variable: i, block: b, elems });
            }
        }
    }
    Ok(out)
}

/// Whether `x ⪯ y` on the binary projection between their variables.
fn implies(inst: &Instance, x: &StrandMember, y: &StrandMember) -> bool {
    if x.variable == y.variable {
        return x.block == y.block;
    }
    let (lo, hi) = (x.variable.min(y.variable), x.variable.max(y.variable));
    let rel = inst.relation(&[lo, hi]).expect("(2,3)-minimal instances have all binary scopes");
    let (px, py) = if x.variable == lo { (0, 1) } else { (1, 0) };
    project(rel, &[px, py])
        .iter()
        .filter(|t| x.elems.binary_search(&t[0]).is_ok())
        .all(|t| y.elems.binary_search(&t[1]).is_ok())
}

/// Computes `S(P)`, the preorder `⪯` and the strands of a (2,3)-minimal
/// instance over flat domains.
pub fn compute_strands(inst: &Instance) -> Result<StrandAnalysis> {
    check_flat(inst)?;
    if !is_23_minimal(inst) {
        return Err(Error::State("strands need a (2,3)-minimal instance".into()));
    }
    let pairs = strand_pairs(inst)?;
    let k = pairs.len();
    let below: Vec<Vec<bool>> = (0..k).map(|x| (0..k).map(|y| implies(inst, &pairs[x], &pairs[y])).collect()).collect();
    for x in 0..k {
        for y in 0..k {
            if below[x][y] && (0..k).any(|z| below[y][z] && !below[x][z]) {
                return Err(Error::Invariant(format!("strand preorder is not transitive at {x}, {y}")));
            }
        }
    }

    // Classes of ⪯ ∩ ⪰, numbered by least member.
    let mut class = vec![usize::MAX; k];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for x in 0..k {
        if class[x] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = (x..k).filter(|&y| below[x][y] && below[y][x]).collect();
        for &y in &members {
            class[y] = classes.len();
        }
        classes.push(members);
    }
    let c = classes.len();
    let le = |a: usize, b: usize| below[classes[a][0]][classes[b][0]];

    // Kahn's algorithm: lower strands first.
    let mut indegree: Vec<usize> = (0..c).map(|b| (0..c).filter(|&a| a != b && le(a, b)).count()).collect();
    let mut ready: BTreeSet<usize> = (0..c).filter(|&b| indegree[b] == 0).collect();
    let mut order = Vec::with_capacity(c);
    while let Some(a) = ready.pop_first() {
        order.push(a);
        for b in 0..c {
            if b != a && le(a, b) {
                indegree[b] -= 1;
                if indegree[b] == 0 {
                    ready.insert(b);
                }
            }
        }
    }
    let position: BTreeMap<usize, usize> = order.iter().enumerate().map(|(p, &a)| (a, p)).collect();

    let mut strands = Vec::with_capacity(c);
    for &a in &order {
        let members: Vec<StrandMember> = classes[a].iter().map(|&x| pairs[x].clone()).collect();
        let vars: BTreeSet<usize> = members.iter().map(|m| m.variable).collect();
        if vars.len() != members.len() {
            return Err(Error::Invariant("a strand has two blocks at one variable".into()));
        }
        strands.push(Strand { members });
    }
    let mut hasse = Vec::new();
    for a in 0..c {
        for b in 0..c {
            if a != b && le(a, b) && !(0..c).any(|m| m != a && m != b && le(a, m) && le(m, b)) {
                hasse.push((position[&a], position[&b]));
            }
        }
    }
    hasse.sort_unstable();
    Ok(StrandAnalysis { pairs, below, strands, hasse })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum StrandTest {
    /// `P|_F` has a solution in the least blocks.
    LeastBlock,
    /// No least-block solution, but one inside the strand blocks.
    OnStrand,
    Neither,
}

fn test_strand(q: &Instance, strand: &Strand, trace: &mut Trace) -> Result<StrandTest> {
    let vars = strand.variables();
    let restricted = q.restrict(&vars);
    trace.solver_calls += 1;
    if least_block_solve(&restricted, &[], false)?.satisfiable {
        return Ok(StrandTest::LeastBlock);
    }
    let blocks: BTreeMap<usize, Vec<usize>> =
        strand.members.iter().enumerate().map(|(k, m)| (k, m.elems.clone())).collect();
    trace.solver_calls += 1;
    Ok(if malcev_solve(&restricted.tighten(&blocks)?, &[], false)?.satisfiable {
        StrandTest::OnStrand
    } else {
        StrandTest::Neither
    })
}

/// Every solution entering a strand block at one variable stays on the strand.
fn audit_strands(q: &Instance, analysis: &StrandAnalysis, opts: &SolveOptions, trace: &mut Trace) -> Result<()> {
    if !opts.auditable(q) {
        return Ok(());
    }
    trace.audits += 1;
    for f in all_solutions(q, opts.caps.audit)? {
        for s in &analysis.strands {
            let on: Vec<bool> = s.members.iter().map(|m| m.elems.binary_search(&f[m.variable]).is_ok()).collect();
            if on.iter().any(|&b| b) && !on.iter().all(|&b| b) {
                return Err(Error::Invariant(format!("solution {f:?} leaves strand {:?}", s.variables())));
            }
        }
    }
    Ok(())
}

/// Decision procedure on a regularized instance.
pub(crate) fn decide_flat(p: &Instance, opts: &SolveOptions, trace: &mut Trace) -> Result<bool> {
    let mut q = p.clone();
    'outer: loop {
        let mass = q.mass();
        q = minimize_23(&q);
        let empty = q.has_empty_constraint();
        trace.push(TraceEvent::Minimize { k: 2, l: 3, empty });
        if empty {
            trace.push(TraceEvent::Decide { satisfiable: false, step: "2".into() });
            return Ok(false);
        }
        let analysis = compute_strands(&q)?;
        audit_strands(&q, &analysis, opts, trace)?;
        for strand in &analysis.strands {
            let (reason, doms): (&str, BTreeMap<usize, Vec<usize>>) = match test_strand(&q, strand, trace)? {
                StrandTest::LeastBlock => continue,
                StrandTest::OnStrand => ("4.2", strand.members.iter().map(|m| (m.variable, m.elems.clone())).collect()),
                StrandTest::Neither => (
                    "4.3",
                    strand
                        .members
                        .iter()
                        .map(|m| {
                            let rest =
                                q.domain(m.variable).iter().copied().filter(|a| m.elems.binary_search(a).is_err());
                            (m.variable, rest.collect())
                        })
                        .collect(),
                ),
            };
            let removed = doms.iter().map(|(&v, d)| q.domain(v).len() - d.len()).sum();
            q = q.tighten(&doms)?;
            trace.push(TraceEvent::Tighten { reason: reason.into(), variables: strand.variables(), removed });
            if q.mass() >= mass {
                return Err(Error::Invariant("strand tightening did not shrink the instance".into()));
            }
            continue 'outer;
        }
        // Steps 5 and 6: every domain meeting O is tightened to its least block.
        trace.solver_calls += 1;
        let sat = least_block_solve(&q, &[], false)?.satisfiable;
        if !sat && opts.auditable(&q) {
            trace.audits += 1;
            if let Some(f) = first_solution(&q, opts.caps.audit)? {
                return Err(Error::Invariant(format!("no O-valued solution, but {f:?} solves the instance")));
            }
        }
        trace.push(TraceEvent::Decide { satisfiable: sat, step: "6".into() });
        return Ok(sat);
    }
}

/// Decides an instance over algebras with flat block orders.
pub fn solve_flat(inst: &Instance, opts: &SolveOptions) -> Result<SolveOutcome> {
    let p = regularize_instance(inst)?;
    check_flat(&p)?;
    let mut trace = Trace::new("flat");
    if !decide_flat(&p, opts, &mut trace)? {
        return Ok(SolveOutcome::unsat(trace));
    }
    let witness = if opts.witness {
        let mut sub = Trace::new("flat");
        let w = extract_witness(&p, |q| decide_flat(q, opts, &mut sub))?;
        trace.absorb(&sub, 1);
        Some(w)
    } else {
        None
    };
    let out = SolveOutcome::sat(witness, trace);
    out.verify(inst)?;
    Ok(out)
}
