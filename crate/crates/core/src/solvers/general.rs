//! The general solver: (2,3)-minimality, elimination to weak
//! M-irreducibility, then repeated filtering of binary relations through
//! coherent sets until the instance is block-2-consistent.
//!
//! Recursive calls go to instances of smaller `Size`. Results of recursive
//! decisions are memoized per top-level call on the exact instance key.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use crate::consistency::{is_23_minimal, minimize_23};
use crate::error::{Error, Result};
use crate::graphs::{connected_components, microstructure_graph};
use crate::instance::{Instance, Relation};
use crate::malcev::malcev_solve;
use crate::oracle::first_solution;
use crate::outcome::{SolveOutcome, Trace, TraceEvent};
use crate::polynomial::PairPolynomialClosure;
use crate::sorts::SortInfo;

use super::elimination::{eliminate, EliminationOutcome};
use super::{extract_witness, regularize_instance, SolveOptions};

type MemoKey = (Vec<String>, Vec<usize>);

/// Shared state of one top-level solve.
pub(crate) struct Ctx<'a> {
    pub(crate) opts: &'a SolveOptions,
    memo: HashMap<MemoKey, bool>,
    order: VecDeque<MemoKey>,
}

impl<'a> Ctx<'a> {
    pub(crate) fn new(opts: &'a SolveOptions) -> Self {
        Ctx { opts, memo: HashMap::new(), order: VecDeque::new() }
    }

    /// Records top-level events; nested calls only update the counters.
    pub(crate) fn event(&self, trace: &mut Trace, depth: usize, e: TraceEvent) {
        if depth == 0 {
            trace.push(e);
        } else {
            trace.count(&e);
        }
    }

    pub(crate) fn decide(&mut self, p: &Instance, trace: &mut Trace, depth: usize) -> Result<bool> {
        let key = p.canonical_key();
        if let Some(&r) = self.memo.get(&key) {
            trace.memo_hits += 1;
            return Ok(r);
        }
        let r = self.decide_uncached(p, trace, depth)?;
        if self.opts.caps.memo > 0 {
            if self.order.len() >= self.opts.caps.memo {
                if let Some(old) = self.order.pop_front() {
                    self.memo.remove(&old);
                }
            }
            self.order.push_back(key.clone());
            self.memo.insert(key, r);
        }
        Ok(r)
    }

    pub(crate) fn witness(&mut self, p: &Instance, trace: &mut Trace, depth: usize) -> Result<Vec<usize>> {
        extract_witness(p, |q| self.decide(q, trace, depth))
    }

    fn delegate(&self, q: &Instance, trace: &mut Trace, depth: usize) -> Result<bool> {
        self.event(trace, depth, TraceEvent::Delegate { method: "malcev".into() });
        trace.solver_calls += 1;
        Ok(malcev_solve(q, &[], false)?.satisfiable)
    }

    fn decide_uncached(&mut self, p: &Instance, trace: &mut Trace, depth: usize) -> Result<bool> {
        trace.solver_calls += 1;
        trace.max_depth = trace.max_depth.max(depth);
        let mut q = minimize_23(p);
        let empty = q.has_empty_constraint();
        self.event(trace, depth, TraceEvent::Minimize { k: 2, l: 3, empty });
        if empty {
            self.event(trace, depth, TraceEvent::Decide { satisfiable: false, step: "1".into() });
            return Ok(false);
        }
        if q.size()?.is_none() {
            return self.delegate(&q, trace, depth);
        }
        match eliminate(&q, self, trace, depth)? {
            EliminationOutcome::Unsat => return Ok(false),
            EliminationOutcome::Sat => return Ok(true),
            EliminationOutcome::Reduced(r) => q = r,
        }
        let Some(m) = q.size()? else {
            return self.delegate(&q, trace, depth);
        };
        if depth == 0 {
            trace.size_history.push(Some(m));
        }

        'restart: loop {
            let mut seps = Separation::new(&q)?;
            let mut flags = vec![false; seps.covers.len()];
            let mut sets = Vec::new();
            for idx in 0..seps.covers.len() {
                if flags[idx] {
                    continue;
                }
                let w = seps.coherent_set(idx, &mut flags, self.opts)?;
                let t = self.check_coherent(&q, &w, m, trace, depth)?;
                if t.iter().any(|(s, rel)| s.len() == 2 && rel.is_empty()) {
                    self.event(trace, depth, TraceEvent::Decide { satisfiable: false, step: "3.4".into() });
                    return Ok(false);
                }
                let shrunk: Vec<(Vec<usize>, Relation)> = t
                    .into_iter()
                    .filter(|(s, rel)| s.len() == 2 && rel.len() < q.relation(s).map_or(0, Vec::len))
                    .collect();
                if shrunk.is_empty() {
                    sets.push(w);
                    continue;
                }
                let mass = q.mass();
                let removed = shrunk.iter().map(|(s, rel)| q.relation(s).map_or(0, Vec::len) - rel.len()).sum();
                let mut cons = q.constraints().clone();
                cons.extend(shrunk);
                let next = minimize_23(&q.with_constraints(cons));
                self.event(trace, depth, TraceEvent::Tighten { reason: "3.5.1".into(), variables: w, removed });
                if next.has_empty_constraint() {
                    self.event(trace, depth, TraceEvent::Decide { satisfiable: false, step: "3.5.2".into() });
                    return Ok(false);
                }
                if next.mass() >= mass {
                    return Err(Error::Invariant("coherent-set filtering did not shrink the instance".into()));
                }
                let size = next.size()?;
                if size.is_none_or(|s| s < m) {
                    self.event(trace, depth, TraceEvent::Recurse { size });
                    return self.decide(&next, trace, depth + 1);
                }
                self.event(trace, depth, TraceEvent::Restart { mass: next.mass(), size });
                q = next;
                continue 'restart;
            }
            self.audit_block2(&q, &sets, trace)?;
            self.event(trace, depth, TraceEvent::Decide { satisfiable: true, step: "4".into() });
            return Ok(true);
        }
    }

    /// Every binary tuple inside a coherent set extends to a solution of the restriction.
    fn audit_block2(&self, q: &Instance, sets: &[Vec<usize>], trace: &mut Trace) -> Result<()> {
        if !self.opts.audit {
            return Ok(());
        }
        for w in sets {
            let qw = q.restrict(w);
            if !self.opts.auditable(&qw) {
                continue;
            }
            trace.audits += 1;
            for (scope, rel) in qw.constraints().iter().filter(|(s, _)| s.len() == 2) {
                for t in rel {
                    let pinned = qw.pin(&[(scope[0], t[0]), (scope[1], t[1])])?;
                    if first_solution(&pinned, self.opts.caps.audit)?.is_none() {
                        return Err(Error::Invariant(format!(
                            "not block-2-consistent: {t:?} on {:?} inside {w:?} has no extension",
                            scope.iter().map(|&k| w[k]).collect::<Vec<_>>()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The filtering step for one coherent set. Returns, for every scope of
    /// size one or two inside `w`, the tuples that extend to a solution of `P|_W`.
    fn check_coherent(
        &mut self,
        q: &Instance,
        w: &[usize],
        m: usize,
        trace: &mut Trace,
        depth: usize,
    ) -> Result<BTreeMap<Vec<usize>, Relation>> {
        let qw = q.restrict(w);
        let mut top = Vec::new();
        for k in 0..qw.len() {
            let s = qw.sort(k)?;
            if !s.is_malcev() && s.size() == m {
                top.push(k);
            }
        }
        let split = if top.is_empty() { None } else { Some(Components::new(&qw, &top)?) };

        let check = |ctx: &mut Self, pins: &[(usize, usize)], trace: &mut Trace| -> Result<bool> {
            let candidates: Vec<&Instance> = match &split {
                None => vec![&qw],
                Some(c) => match pins.iter().find(|(k, _)| top.contains(k)) {
                    Some(&(k, a)) => vec![&c.tightened[c.component(k, a)]],
                    None => c.tightened.iter().collect(),
                },
            };
            for base in candidates {
                if pins.iter().any(|&(k, a)| base.domain(k).binary_search(&a).is_err()) {
                    continue;
                }
                let pinned = base.pin(pins)?;
                if pinned.size()?.is_some_and(|s| s >= m) {
                    return Err(Error::Invariant("recursive call does not reduce Size".into()));
                }
                if ctx.decide(&pinned, trace, depth + 1)? {
                    return Ok(true);
                }
            }
            Ok(false)
        };

        let mut out = BTreeMap::new();
        let mut unary_ok: Vec<Vec<usize>> = Vec::with_capacity(qw.len());
        for k in 0..qw.len() {
            let mut ok = Vec::new();
            for &a in qw.domain(k) {
                if w.len() == 1 || check(self, &[(k, a)], trace)? {
                    ok.push(a);
                }
            }
            out.insert(vec![w[k]], ok.iter().map(|&a| vec![a]).collect());
            unary_ok.push(ok);
        }
        for (scope, rel) in qw.constraints().iter().filter(|(s, _)| s.len() == 2) {
            let (k, l) = (scope[0], scope[1]);
            let mut kept = Vec::new();
            for t in rel {
                if unary_ok[k].binary_search(&t[0]).is_ok()
                    && unary_ok[l].binary_search(&t[1]).is_ok()
                    && check(self, &[(k, t[0]), (l, t[1])], trace)?
                {
                    kept.push(t.clone());
                }
            }
            out.insert(vec![w[k], w[l]], kept);
        }
        Ok(out)
    }
}

/// Connected components of the microstructure of `P|_{W'}` and the
/// matching tightenings of `P|_W`.
struct Components {
    /// Component id per `(position in W', value)`.
    ids: BTreeMap<(usize, usize), usize>,
    top: Vec<usize>,
    tightened: Vec<Instance>,
}

impl Components {
    fn new(qw: &Instance, top: &[usize]) -> Result<Self> {
        let sub = qw.restrict(top);
        let graph = microstructure_graph(&sub);
        let comps = connected_components(&graph);
        let mut ids = BTreeMap::new();
        for (c, comp) in comps.iter().enumerate() {
            for &v in comp {
                let vertex = &graph.vertices[v];
                if let Some(a) = vertex.value {
                    ids.insert((vertex.variable, a), c);
                }
            }
        }
        let mut tightened = Vec::with_capacity(comps.len());
        for c in 0..comps.len() {
            let mut doms = BTreeMap::new();
            for (pos, &k) in top.iter().enumerate() {
                let b: Vec<usize> = qw.domain(k).iter().copied().filter(|&a| ids[&(pos, a)] == c).collect();
                if b.len() == qw.domain(k).len() {
                    return Err(Error::Invariant(format!(
                        "microstructure of the maximal-sized variables is connected at {}",
                        qw.variables()[k]
                    )));
                }
                doms.insert(k, b);
            }
            let t = qw.tighten(&doms).map_err(|e| Error::Invariant(format!("component is not a subuniverse: {e}")))?;
            tightened.push(t);
        }
        Ok(Components { ids, top: top.to_vec(), tightened })
    }

    fn component(&self, k: usize, a: usize) -> usize {
        let pos = self.top.iter().position(|&t| t == k).expect("variable in W'");
        self.ids[&(pos, a)]
    }
}

/// The covers `(i, α, β)` with `β` below the Rees congruence and the
/// separation test between them.
struct Separation<'q> {
    inst: &'q Instance,
    sorts: Vec<Arc<SortInfo>>,
    /// `(variable, index into the sort's cover list)`.
    covers: Vec<(usize, usize)>,
    closures: HashMap<(usize, usize), PairPolynomialClosure>,
}

impl<'q> Separation<'q> {
    fn new(inst: &'q Instance) -> Result<Self> {
        let sorts: Vec<Arc<SortInfo>> = (0..inst.len()).map(|i| inst.sort(i)).collect::<Result<_>>()?;
        let covers = sorts.iter().enumerate().flat_map(|(i, s)| (0..s.covers().len()).map(move |c| (i, c))).collect();
        Ok(Separation { inst, sorts, covers, closures: HashMap::new() })
    }

    fn closure(&mut self, lo: usize, hi: usize, cap: usize) -> Result<&PairPolynomialClosure> {
        if !self.closures.contains_key(&(lo, hi)) {
            let (sl, sh) = (&self.sorts[lo], &self.sorts[hi]);
            let rel: Vec<(usize, usize)> = if lo == hi {
                (0..sl.size()).map(|a| (a, a)).collect()
            } else {
                self.inst
                    .relation(&[lo, hi])
                    .ok_or_else(|| Error::State("separation needs a (2,3)-minimal instance".into()))?
                    .iter()
                    .map(|t| (sl.index_of(t[0]).unwrap(), sh.index_of(t[1]).unwrap()))
                    .collect()
            };
            let c = PairPolynomialClosure::new(
                sl.local(),
                sl.smb().min_elems()?,
                sh.local(),
                sh.smb().min_elems()?,
                &rel,
                cap,
            )?;
            self.closures.insert((lo, hi), c);
        }
        Ok(&self.closures[&(lo, hi)])
    }

    /// Whether cover `x` can be separated from cover `y` with respect to the instance.
    fn separable(&mut self, x: usize, y: usize, cap: usize) -> Result<bool> {
        let ((i, ci), (j, cj)) = (self.covers[x], self.covers[y]);
        let (si, sj) = (self.sorts[i].clone(), self.sorts[j].clone());
        let (a, b) = &si.covers()[ci];
        let (g, d) = &sj.covers()[cj];
        let (lo, hi) = (i.min(j), i.max(j));
        let from_left = i == lo;
        Ok(self.closure(lo, hi, cap)?.can_separate((a, b), (g, d), from_left))
    }

    /// `W_{i,α,β}` for cover `idx`; flags every cover found inseparable.
    fn coherent_set(&mut self, idx: usize, flags: &mut [bool], opts: &SolveOptions) -> Result<Vec<usize>> {
        let mut w = vec![self.covers[idx].0];
        flags[idx] = true;
        for y in 0..self.covers.len() {
            if y != idx && !self.separable(idx, y, opts.caps.closure)? {
                flags[y] = true;
                w.push(self.covers[y].0);
            }
        }
        w.sort_unstable();
        w.dedup();
        Ok(w)
    }
}

fn require_ready(inst: &Instance) -> Result<()> {
    if !is_23_minimal(inst) {
        return Err(Error::State("the instance is not (2,3)-minimal".into()));
    }
    if !inst.irreducibility_status()?.weakly_m_irreducible {
        return Err(Error::State("the instance is not weakly M-irreducible".into()));
    }
    Ok(())
}

/// The coherent sets of a (2,3)-minimal instance, in the order the solver visits them.
pub fn coherent_sets(inst: &Instance, opts: &SolveOptions) -> Result<Vec<Vec<usize>>> {
    if !is_23_minimal(inst) {
        return Err(Error::State("the instance is not (2,3)-minimal".into()));
    }
    let mut seps = Separation::new(inst)?;
    let mut flags = vec![false; seps.covers.len()];
    let mut out = Vec::new();
    for idx in 0..seps.covers.len() {
        if !flags[idx] {
            out.push(seps.coherent_set(idx, &mut flags, opts)?);
        }
    }
    Ok(out)
}

/// Filters the unary and binary relations inside the coherent set `w` down
/// to the tuples that extend to a solution of the restriction to `w`.
pub fn chk_coh_set(inst: &Instance, w: &[usize], opts: &SolveOptions) -> Result<BTreeMap<Vec<usize>, Relation>> {
    require_ready(inst)?;
    let mut w = w.to_vec();
    w.sort_unstable();
    w.dedup();
    let Some(m) = inst.size()? else {
        return Err(Error::State("Size is undefined on an all-Mal'cev instance".into()));
    };
    let mut ctx = Ctx::new(opts);
    let mut trace = Trace::new("chkcohset");
    ctx.check_coherent(inst, &w, m, &mut trace, 0)
}

/// Decides an instance over any template of SMB algebras.
pub fn solve_general(inst: &Instance, opts: &SolveOptions) -> Result<SolveOutcome> {
    let p = regularize_instance(inst)?;
    let mut ctx = Ctx::new(opts);
    let mut trace = Trace::new("general");
    if !ctx.decide(&p, &mut trace, 0)? {
        return Ok(SolveOutcome::unsat(trace));
    }
    let witness = if opts.witness {
        let mut sub = Trace::new("general");
        let w = ctx.witness(&p, &mut sub, 1)?;
        trace.absorb(&sub, 1);
        Some(w)
    } else {
        None
    };
    let out = SolveOutcome::sat(witness, trace);
    out.verify(inst)?;
    Ok(out)
}
