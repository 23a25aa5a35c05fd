//! (1,1)- and (2,3)-minimality.
//!
//! Both procedures only remove tuples (besides adding the implied scopes),
//! so solution sets are preserved. An instance in which something empties is
//! returned in a canonical empty form: every domain and relation empty.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::instance::{project, Instance, Relation};

fn canonical_empty(inst: &Instance) -> Instance {
    let cons = inst.constraints().keys().map(|s| (s.clone(), Vec::new())).collect();
    inst.replace(vec![Vec::new(); inst.len()], cons)
}

fn masks(inst: &Instance, doms: &[Vec<usize>]) -> Vec<Vec<bool>> {
    doms.iter()
        .enumerate()
        .map(|(i, d)| {
            let mut m = vec![false; inst.algebra_of(i).size()];
            for &a in d {
                m[a] = true;
            }
            m
        })
        .collect()
}

/// Shrinks domains to the projections of all constraints and filters the
/// relations, to a fixpoint.
pub fn minimize_11(inst: &Instance) -> Instance {
    if inst.has_empty_constraint() {
        return canonical_empty(inst);
    }
    let mut doms: Vec<Vec<usize>> = inst.domains().iter().map(|d| d.elems.clone()).collect();
    let mut cons = inst.constraints().clone();
    loop {
        let m = masks(inst, &doms);
        let mut changed = false;
        for (scope, rel) in cons.iter_mut() {
            rel.retain(|t| scope.iter().zip(t).all(|(&v, &a)| m[v][a]));
            if rel.is_empty() {
                return canonical_empty(inst);
            }
            for (p, &v) in scope.iter().enumerate() {
                let mut seen = vec![false; m[v].len()];
                for t in rel.iter() {
                    seen[t[p]] = true;
                }
                let before = doms[v].len();
                doms[v].retain(|&a| seen[a]);
                changed |= doms[v].len() != before;
            }
        }
        if !changed {
            break;
        }
    }
    inst.replace(doms, cons)
}

/// Whether every relation projects exactly onto the domains of its scope.
pub fn is_11_minimal(inst: &Instance) -> bool {
    inst.constraints().iter().all(|(scope, rel)| {
        scope.iter().enumerate().all(|(p, &v)| {
            let vals: Vec<usize> = project(rel, &[p]).into_iter().map(|t| t[0]).collect();
            vals == inst.domain(v)
        })
    })
}

struct PairMask {
    stride: usize,
    bits: Vec<bool>,
}

impl PairMask {
    fn from_rel(stride: usize, rows: usize, rel: &[Vec<usize>]) -> Self {
        let mut bits = vec![false; stride * rows];
        for t in rel {
            bits[t[0] * stride + t[1]] = true;
        }
        PairMask { stride, bits }
    }

    fn get(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.stride + b]
    }
}

fn pairs_of(scope: &[usize]) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for p in 0..scope.len() {
        for q in p + 1..scope.len() {
            out.push((p, q, scope[p], scope[q]));
        }
    }
    out
}

/// Enforces (2,3)-minimality: all scopes of size 2 and 3 are materialized and
/// every constraint is made consistent with its unary and binary projections.
/// Constraints of arity four or more are kept and take part in propagation.
pub fn minimize_23(inst: &Instance) -> Instance {
    let base = minimize_11(inst);
    if base.has_empty_constraint() {
        return canonical_empty(inst);
    }
    let n = base.len();
    let sizes: Vec<usize> = (0..n).map(|i| base.algebra_of(i).size()).collect();
    let mut doms: Vec<Vec<usize>> = base.domains().iter().map(|d| d.elems.clone()).collect();
    let mut cons: BTreeMap<Vec<usize>, Relation> = base.constraints().clone();

    // Binary scopes: existing relation or full product, cut by projections of larger constraints.
    for i in 0..n {
        for j in i + 1..n {
            let key = vec![i, j];
            let mut rel = cons
                .get(&key)
                .cloned()
                .unwrap_or_else(|| doms[i].iter().flat_map(|&a| doms[j].iter().map(move |&b| vec![a, b])).collect());
            for (scope, r) in base.constraints() {
                if scope.len() > 2 {
                    if let (Ok(p), Ok(q)) = (scope.binary_search(&i), scope.binary_search(&j)) {
                        let pm = PairMask::from_rel(sizes[j], sizes[i], &project(r, &[p, q]));
                        rel.retain(|t| pm.get(t[0], t[1]));
                    }
                }
            }
            if rel.is_empty() {
                return canonical_empty(inst);
            }
            cons.insert(key, rel);
        }
    }
    // Ternary scopes: join of the three binary relations, cut the same way.
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let key = vec![i, j, k];
                let ij = &cons[&vec![i, j]];
                let ik = PairMask::from_rel(sizes[k], sizes[i], &cons[&vec![i, k]]);
                let jk = PairMask::from_rel(sizes[k], sizes[j], &cons[&vec![j, k]]);
                let mut rel: Relation = Vec::new();
                for t in ij {
                    for &c in &doms[k] {
                        if ik.get(t[0], c) && jk.get(t[1], c) {
                            rel.push(vec![t[0], t[1], c]);
                        }
                    }
                }
                if let Some(existing) = cons.get(&key) {
                    rel = crate::instance::intersect_sorted(existing, &rel);
                }
                for (scope, r) in base.constraints() {
                    if scope.len() > 3 {
                        if let Some(pos) = crate::instance::positions_in(scope, &key) {
                            let proj: std::collections::HashSet<Vec<usize>> = project(r, &pos).into_iter().collect();
                            rel.retain(|t| proj.contains(t));
                        }
                    }
                }
                if rel.is_empty() {
                    return canonical_empty(inst);
                }
                cons.insert(key, rel);
            }
        }
    }

    let scopes: Vec<Vec<usize>> = cons.keys().cloned().collect();
    let id_of: HashMap<Vec<usize>, usize> = scopes.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect();
    let mut by_var: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut by_pair: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (k, s) in scopes.iter().enumerate() {
        for &v in s {
            by_var[v].push(k);
        }
        if s.len() >= 3 {
            for (_, _, a, b) in pairs_of(s) {
                by_pair.entry((a, b)).or_default().push(k);
            }
        }
    }
    let mut rels: Vec<Relation> = scopes.iter().map(|s| cons.remove(s).unwrap()).collect();
    let mut dom_mask = masks(&base, &doms);
    let mut pair_mask: HashMap<(usize, usize), PairMask> = HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            pair_mask.insert((i, j), PairMask::from_rel(sizes[j], sizes[i], &rels[id_of[&vec![i, j]]]));
        }
    }

    let mut queued = vec![true; scopes.len()];
    let mut work: VecDeque<usize> = (0..scopes.len()).collect();
    while let Some(c) = work.pop_front() {
        queued[c] = false;
        let scope = &scopes[c];
        let pairs = pairs_of(scope);
        let rel = &mut rels[c];
        rel.retain(|t| {
            scope.iter().zip(t).all(|(&v, &a)| dom_mask[v][a])
                && pairs.iter().all(|&(p, q, a, b)| pair_mask[&(a, b)].get(t[p], t[q]))
        });
        if rel.is_empty() {
            return canonical_empty(inst);
        }
        let mut touched: Vec<usize> = Vec::new();
        for (p, &v) in scope.iter().enumerate() {
            let mut seen = vec![false; sizes[v]];
            for t in rel.iter() {
                seen[t[p]] = true;
            }
            if doms[v].iter().any(|&a| !seen[a]) {
                doms[v].retain(|&a| seen[a]);
                dom_mask[v] = seen;
                touched.extend(by_var[v].iter().copied());
            }
        }
        for &(p, q, a, b) in &pairs {
            let mut seen = PairMask::from_rel(sizes[b], sizes[a], &[]);
            for t in rel.iter() {
                seen.bits[t[p] * seen.stride + t[q]] = true;
            }
            let pid = id_of[&vec![a, b]];
            let before = rels_len(&pair_mask[&(a, b)]);
            let after = rels_len(&seen);
            if after != before {
                pair_mask.insert((a, b), seen);
                touched.push(pid);
                touched.extend(by_pair.get(&(a, b)).into_iter().flatten().copied());
            }
        }
        for k in touched {
            if k != c && !queued[k] {
                queued[k] = true;
                work.push_back(k);
            }
        }
    }
    let mut out = BTreeMap::new();
    for (s, r) in scopes.into_iter().zip(rels) {
        out.insert(s, r);
    }
    base.replace(doms, out)
}

fn rels_len(m: &PairMask) -> usize {
    m.bits.iter().filter(|&&b| b).count()
}

/// Whether all scopes of size 2 and 3 exist and every constraint projects
/// exactly onto its unary and binary subscopes.
pub fn is_23_minimal(inst: &Instance) -> bool {
    if !is_11_minimal(inst) {
        return false;
    }
    let n = inst.len();
    for i in 0..n {
        for j in i + 1..n {
            if inst.relation(&[i, j]).is_none() {
                return false;
            }
            for k in j + 1..n {
                if inst.relation(&[i, j, k]).is_none() {
                    return false;
                }
            }
        }
    }
    inst.constraints().iter().all(|(scope, rel)| {
        scope.len() < 3
            || pairs_of(scope).iter().all(|&(p, q, a, b)| &project(rel, &[p, q]) == inst.relation(&[a, b]).unwrap())
    })
}

/// Enforces (k,l)-minimality for the supported pairs (1,1) and (2,3).
pub fn enforce_kl_minimality(inst: &Instance, k: usize, l: usize) -> Result<Instance> {
    match (k, l) {
        (1, 1) => Ok(minimize_11(inst)),
        (2, 3) => Ok(minimize_23(inst)),
        _ => Err(Error::Invalid(format!("({k},{l})-minimality is not supported; use (1,1) or (2,3)"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceBuilder;
    use crate::named;
    use crate::oracle::{all_solutions, DEFAULT_ORACLE_CAP};

    fn neq() -> Relation {
        vec![vec![0, 1], vec![1, 0]]
    }

    #[test]
    fn xor_pair_keeps_domains() {
        let inst = InstanceBuilder::new()
            .algebra(named::m2())
            .var("x", "M2")
            .var("y", "M2")
            .constraint(&[0, 1], neq())
            .build()
            .unwrap();
        let m = minimize_23(&inst);
        assert_eq!(m.domain(0), &[0, 1]);
        assert_eq!(m.relation(&[0, 1]).unwrap(), &neq());
        assert!(is_23_minimal(&m));
        assert_eq!(minimize_23(&m), m);
    }

    #[test]
    fn triangle_empties() {
        let inst = InstanceBuilder::new()
            .algebra(named::m2())
            .var("x", "M2")
            .var("y", "M2")
            .var("z", "M2")
            .constraint(&[0, 1], neq())
            .constraint(&[1, 2], neq())
            .constraint(&[0, 2], neq())
            .build()
            .unwrap();
        assert!(!minimize_11(&inst).has_empty_constraint());
        let m = minimize_23(&inst);
        assert!(m.has_empty_constraint());
        assert_eq!(minimize_23(&m), m);
    }

    #[test]
    fn l4_propagation_preserves_solutions() {
        // y = 2 forces x = 2 through the block relation; z is tied to x by equality.
        let sim: Relation = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1], vec![2, 2]];
        let eq: Relation = vec![vec![0, 0], vec![1, 1], vec![2, 2]];
        let inst = InstanceBuilder::new()
            .algebra(named::l4())
            .var("x", "L4")
            .var("y", "L4")
            .var("z", "L4")
            .constraint(&[1], vec![vec![2]])
            .constraint(&[0, 1], sim)
            .constraint(&[0, 2], eq)
            .build()
            .unwrap();
        let m = minimize_23(&inst);
        assert_eq!(m.domain(0), &[2]);
        assert_eq!(m.domain(2), &[2]);
        assert_eq!(all_solutions(&m, DEFAULT_ORACLE_CAP).unwrap(), all_solutions(&inst, DEFAULT_ORACLE_CAP).unwrap());
        assert!(enforce_kl_minimality(&inst, 2, 2).is_err());
    }
}
