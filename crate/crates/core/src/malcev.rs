//! Compact-representation solver for instances whose domains carry a Mal'cev `d`.
//!
//! A representation of `R ≤ ∏ A_i` stores, for every fork `(i, a, b)` of `R`,
//! two tuples agreeing before `i` with values `a`, `b` at `i`. Such a set
//! generates `R` under `d`. Variables are added from last to first so that
//! each constraint is applied while its least variable is coordinate 0;
//! prefix fixing then stays short on chain-like instances.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::algebra::FiniteAlgebra;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::oracle;
use crate::outcome::{SolveOutcome, Trace};

type Fork = (usize, usize, usize);

/// Generating set of a subpower together with its signature witnesses.
#[derive(Clone, Debug, Default)]
pub struct CompactRepresentation {
    tuples: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    sig: BTreeMap<Fork, (usize, usize)>,
}

impl CompactRepresentation {
    fn unit() -> Self {
        let mut r = Self::default();
        r.add(Vec::new());
        r
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    /// The forks `(i, a, b)` covered, in order.
    pub fn signature(&self) -> impl Iterator<Item = &Fork> {
        self.sig.keys()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    fn add(&mut self, t: Vec<usize>) -> usize {
        if let Some(&k) = self.index.get(&t) {
            return k;
        }
        self.tuples.push(t.clone());
        self.index.insert(t, self.tuples.len() - 1);
        self.tuples.len() - 1
    }

    fn add_pair(&mut self, fork: Fork, x: Vec<usize>, y: Vec<usize>) {
        let kx = self.add(x);
        let ky = self.add(y);
        self.sig.entry(fork).or_insert((kx, ky));
    }
}

struct Engine<'a> {
    /// Algebra of each coordinate of the current representation.
    algs: Vec<&'a FiniteAlgebra>,
}

impl<'a> Engine<'a> {
    fn d(&self, x: &[usize], y: &[usize], z: &[usize]) -> Vec<usize> {
        (0..x.len()).map(|c| self.algs[c].d(x[c], y[c], z[c])).collect()
    }

    /// A tuple of the generated subpower whose projection onto `coords`
    /// satisfies `pred`, found by closing the projection under `d`.
    fn nonempty(&self, tuples: &[Vec<usize>], coords: &[usize], pred: impl Fn(&[usize]) -> bool) -> Option<Vec<usize>> {
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut items: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for t in tuples {
            let p: Vec<usize> = coords.iter().map(|&c| t[c]).collect();
            if seen.insert(p.clone()) {
                if pred(&p) {
                    return Some(t.clone());
                }
                items.push((p, t.clone()));
            }
        }
        let mut k = 0;
        while k < items.len() {
            for i in 0..=k {
                for j in 0..=k {
                    for (x, y, z) in [(k, i, j), (i, k, j), (i, j, k)] {
                        let p: Vec<usize> = coords
                            .iter()
                            .enumerate()
                            .map(|(m, &c)| self.algs[c].d(items[x].0[m], items[y].0[m], items[z].0[m]))
                            .collect();
                        if seen.contains(&p) {
                            continue;
                        }
                        let full = self.d(&items[x].1, &items[y].1, &items[z].1);
                        if pred(&p) {
                            return Some(full);
                        }
                        seen.insert(p.clone());
                        items.push((p, full));
                    }
                }
            }
            k += 1;
        }
        None
    }

    /// Representation of `{t ∈ R : t[j] = v}` from one of `R` whose coordinates
    /// before `j` are already constant.
    fn fix_step(&self, rep: &CompactRepresentation, j: usize, v: usize) -> CompactRepresentation {
        let mut out = CompactRepresentation::default();
        for (&(i, a, b), &(k2, k3)) in rep.sig.range((j + 1, 0, 0)..) {
            if let Some(t1) = self.nonempty(&rep.tuples, &[j, i], |p| p[0] == v && p[1] == a) {
                let t = self.d(&t1, &rep.tuples[k2], &rep.tuples[k3]);
                out.add_pair((i, a, b), t1, t);
            }
        }
        if out.is_empty() {
            if let Some(t) = self.nonempty(&rep.tuples, &[j], |p| p[0] == v) {
                out.add(t);
            }
        }
        if let Some(t) = out.tuples.first().cloned() {
            for c in 0..=j {
                out.sig.entry((c, t[c], t[c])).or_insert((0, 0));
            }
        }
        out
    }

    /// Representation of `R ∩ {t : t[scope] ∈ rel}`.
    fn next(&self, rep: &CompactRepresentation, scope: &[usize], rel: &HashSet<Vec<usize>>) -> CompactRepresentation {
        let mut out = CompactRepresentation::default();
        let max = *scope.iter().max().unwrap();
        let mut fixed: HashMap<Vec<usize>, CompactRepresentation> = HashMap::new();
        let arity = scope.len();
        for (&(i, a, b), &(k2, k3)) in &rep.sig {
            let mut coords = scope.to_vec();
            coords.push(i);
            let in_rel = |p: &[usize]| rel.contains(&p[..arity]);
            let Some(t1) = self.nonempty(&rep.tuples, &coords, |p| in_rel(p) && p[arity] == a) else {
                continue;
            };
            if a == b {
                out.add_pair((i, a, a), t1.clone(), t1);
            } else if i > max {
                let t = self.d(&t1, &rep.tuples[k2], &rep.tuples[k3]);
                out.add_pair((i, a, b), t1, t);
            } else {
                let prefix = t1[..i].to_vec();
                let base = self.fix_prefix(rep, &prefix, &mut fixed);
                if let Some(t4) = self.nonempty(&base.tuples, &coords, |p| in_rel(p) && p[arity] == b) {
                    out.add_pair((i, a, b), t1, t4);
                }
            }
        }
        out
    }

    fn fix_prefix(
        &self,
        rep: &CompactRepresentation,
        prefix: &[usize],
        memo: &mut HashMap<Vec<usize>, CompactRepresentation>,
    ) -> CompactRepresentation {
        if prefix.is_empty() {
            return rep.clone();
        }
        if let Some(r) = memo.get(prefix) {
            return r.clone();
        }
        let parent = self.fix_prefix(rep, &prefix[..prefix.len() - 1], memo);
        let r = self.fix_step(&parent, prefix.len() - 1, prefix[prefix.len() - 1]);
        memo.insert(prefix.to_vec(), r.clone());
        r
    }
}

/// Representation of `A × R` where the new coordinate comes first.
fn prepend(rep: &CompactRepresentation, domain: &[usize]) -> CompactRepresentation {
    let mut out = CompactRepresentation::default();
    if rep.is_empty() || domain.is_empty() {
        return out;
    }
    let c = domain[0];
    for t in &rep.tuples {
        let mut u = Vec::with_capacity(t.len() + 1);
        u.push(c);
        u.extend(t);
        out.add(u);
    }
    for (&(i, a, b), &(k2, k3)) in &rep.sig {
        out.sig.insert((i + 1, a, b), (k2, k3));
    }
    let base: Vec<usize> = rep.tuples[0].clone();
    let ids: Vec<usize> = domain
        .iter()
        .map(|&a| {
            let mut u = vec![a];
            u.extend(&base);
            out.add(u)
        })
        .collect();
    for (x, &a) in domain.iter().enumerate() {
        for (y, &b) in domain.iter().enumerate() {
            out.sig.insert((0, a, b), (ids[x], ids[y]));
        }
    }
    out
}

/// Errors unless `d` satisfies `d(x,y,y) = x = d(y,y,x)` on every domain.
pub fn check_malcev_domains(inst: &Instance) -> Result<()> {
    for i in 0..inst.len() {
        let alg = inst.algebra_of(i);
        let dom = inst.domain(i);
        for &x in dom {
            for &y in dom {
                if alg.d(x, y, y) != x || alg.d(y, y, x) != x {
                    return Err(Error::Structure(format!(
                        "d is not Mal'cev on the domain of {} (witness {x}, {y})",
                        inst.variables()[i]
                    )));
                }
            }
        }
    }
    Ok(())
}

fn pinned(inst: &Instance, pins: &[(usize, usize)]) -> Result<Instance> {
    for &(v, a) in pins {
        if v >= inst.len() || inst.domain(v).binary_search(&a).is_err() {
            return Err(Error::Domain(format!("pin ({v}, {a}) is outside the domains")));
        }
    }
    inst.pin(pins)
}

/// Representation of the full solution set, coordinates in variable order.
pub fn solution_representation(inst: &Instance) -> Result<CompactRepresentation> {
    check_malcev_domains(inst)?;
    if inst.has_empty_constraint() {
        return Ok(CompactRepresentation::default());
    }
    let n = inst.len();
    let all: Vec<&FiniteAlgebra> = (0..n).map(|i| inst.algebra_of(i).as_ref()).collect();
    let mut by_min: Vec<Vec<(Vec<usize>, HashSet<Vec<usize>>)>> = vec![Vec::new(); n];
    for (scope, rel) in inst.constraints() {
        if let Some(&m) = scope.first() {
            by_min[m].push((scope.iter().map(|&v| v - m).collect(), rel.iter().cloned().collect()));
        }
    }
    let mut rep = CompactRepresentation::unit();
    for k in (0..n).rev() {
        rep = prepend(&rep, inst.domain(k));
        let engine = Engine { algs: all[k..].to_vec() };
        for (scope, rel) in &by_min[k] {
            rep = engine.next(&rep, scope, rel);
            if rep.is_empty() {
                return Ok(rep);
            }
        }
    }
    Ok(rep)
}

/// The lexicographically first member of the subpower generated by `rep`.
fn first_member(inst: &Instance, rep: &CompactRepresentation) -> Vec<usize> {
    let engine = Engine { algs: (0..inst.len()).map(|i| inst.algebra_of(i).as_ref()).collect() };
    let mut u = rep.clone();
    let mut w = Vec::with_capacity(inst.len());
    for j in 0..inst.len() {
        let v = u.tuples.iter().map(|t| t[j]).min().expect("nonempty representation");
        w.push(v);
        u = engine.fix_step(&u, j, v);
    }
    w
}

/// Decides the instance with the given pins; when `witness` is set, a SAT
/// answer carries the lexicographically first solution.
pub fn malcev_solve(inst: &Instance, pins: &[(usize, usize)], witness: bool) -> Result<SolveOutcome> {
    let p = pinned(inst, pins)?;
    let rep = solution_representation(&p)?;
    let mut trace = Trace::new("malcev");
    trace.solver_calls = 1;
    if rep.is_empty() {
        return Ok(SolveOutcome::unsat(trace));
    }
    let w = witness.then(|| first_member(&p, &rep));
    let out = SolveOutcome::sat(w, trace);
    out.verify(inst)?;
    Ok(out)
}

/// Exhaustive counterpart of [`malcev_solve`] for differential testing.
pub fn malcev_solve_exhaustive(inst: &Instance, pins: &[(usize, usize)], cap: u64) -> Result<SolveOutcome> {
    check_malcev_domains(inst)?;
    let p = pinned(inst, pins)?;
    let mut out = oracle::brute_force(&p, cap)?;
    out.trace.method = "malcev-exhaustive".into();
    Ok(out)
}

/// Tightens every domain to its least block, then solves with the pins.
/// A pin outside its least block makes the query UNSAT.
pub fn least_block_solve(inst: &Instance, pins: &[(usize, usize)], witness: bool) -> Result<SolveOutcome> {
    pinned(inst, pins)?;
    let least = least_block_instance(inst)?;
    if pins.iter().any(|&(v, a)| least.domain(v).binary_search(&a).is_err()) {
        let mut trace = Trace::new("least-block");
        trace.solver_calls = 1;
        return Ok(SolveOutcome::unsat(trace));
    }
    let mut out = malcev_solve(&least, pins, witness)?;
    out.trace.method = "least-block".into();
    Ok(out)
}

/// The tightening of every domain to its least block.
pub fn least_block_instance(inst: &Instance) -> Result<Instance> {
    if inst.has_empty_constraint() {
        return Ok(inst.clone());
    }
    let doms = (0..inst.len()).map(|i| Ok(inst.sort(i)?.least_block())).collect::<Result<Vec<_>>>()?;
    Ok(inst.with_domains(doms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{InstanceBuilder, Relation};
    use crate::named;
    use crate::oracle::{all_solutions, DEFAULT_ORACLE_CAP};

    fn xor(c: usize) -> Relation {
        vec![vec![0, c], vec![1, 1 - c]]
    }

    fn system(xz: usize) -> Instance {
        InstanceBuilder::new()
            .algebra(named::m2())
            .var("x", "M2")
            .var("y", "M2")
            .var("z", "M2")
            .constraint(&[0, 1], xor(1))
            .constraint(&[1, 2], xor(1))
            .constraint(&[0, 2], xor(xz))
            .build()
            .unwrap()
    }

    fn d_closure(inst: &Instance, gens: &[Vec<usize>]) -> Vec<Vec<usize>> {
        let algs: Vec<&FiniteAlgebra> = (0..inst.len()).map(|i| inst.algebra_of(i).as_ref()).collect();
        let mut set: HashSet<Vec<usize>> = gens.iter().cloned().collect();
        loop {
            let items: Vec<Vec<usize>> = set.iter().cloned().collect();
            let mut grew = false;
            for x in &items {
                for y in &items {
                    for z in &items {
                        let t: Vec<usize> = (0..x.len()).map(|c| algs[c].d(x[c], y[c], z[c])).collect();
                        grew |= set.insert(t);
                    }
                }
            }
            if !grew {
                let mut v: Vec<_> = set.into_iter().collect();
                v.sort();
                return v;
            }
        }
    }

    #[test]
    fn xor_system() {
        let sat = malcev_solve(&system(0), &[], true).unwrap();
        assert!(sat.satisfiable);
        assert_eq!(sat.witness, Some(vec![0, 1, 0]));
        assert!(!malcev_solve(&system(1), &[], true).unwrap().satisfiable);
    }

    #[test]
    fn single_unconstrained_variable() {
        let inst = InstanceBuilder::new().algebra(named::z3()).var("x", "Z3").build().unwrap();
        let out = malcev_solve(&inst, &[], true).unwrap();
        assert_eq!(out.witness, Some(vec![0]));
        assert_eq!(malcev_solve(&inst, &[(0, 2)], true).unwrap().witness, Some(vec![2]));
        assert!(matches!(malcev_solve(&inst, &[(0, 5)], true), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_non_malcev() {
        let inst = InstanceBuilder::new().algebra(named::l4()).var("x", "L4").build().unwrap();
        assert!(matches!(malcev_solve(&inst, &[], false), Err(Error::Structure(_))));
        let out = least_block_solve(&inst, &[], true).unwrap();
        assert_eq!(out.witness, Some(vec![0]));
        assert!(!least_block_solve(&inst, &[(0, 2)], true).unwrap().satisfiable);
    }

    #[test]
    fn representation_generates_solutions() {
        // A ternary affine constraint over Z3 plus a binary one.
        let sum: Relation = (0..3).flat_map(|a| (0..3).map(move |b| vec![a, b, (a + b) % 3])).collect();
        let diff: Relation = (0..3).map(|a| vec![a, (a + 1) % 3]).collect();
        let inst = InstanceBuilder::new()
            .algebra(named::z3())
            .var("a", "Z3")
            .var("b", "Z3")
            .var("c", "Z3")
            .var("e", "Z3")
            .constraint(&[0, 1, 3], sum)
            .constraint(&[1, 2], diff)
            .build()
            .unwrap();
        let rep = solution_representation(&inst).unwrap();
        let sols = all_solutions(&inst, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(d_closure(&inst, rep.tuples()), sols);
        let out = malcev_solve(&inst, &[(3, 1)], true).unwrap();
        assert_eq!(out.witness, oracle::first_solution(&inst.pin(&[(3, 1)]).unwrap(), 1000).unwrap());
    }

    #[test]
    fn long_xor_chain() {
        let mut b = InstanceBuilder::new().algebra(named::m2());
        for i in 0..60 {
            b = b.var(&format!("v{i}"), "M2");
        }
        for i in 0..59 {
            b = b.constraint(&[i, i + 1], xor(1));
        }
        let inst = b.constraint(&[0, 59], xor(1)).build().unwrap();
        let out = malcev_solve(&inst, &[], true).unwrap();
        assert!(out.satisfiable);
        let w = out.witness.unwrap();
        assert!(inst.is_solution(&w));
        assert_eq!(w[0], 0);
    }
}
