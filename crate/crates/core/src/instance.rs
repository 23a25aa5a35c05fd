//! Multisorted CSP instances over finite algebras.
//!
//! Variables are indexed `0..n`. Every constraint scope is strictly increasing
//! and appears at most once; unary constraints are folded into the domains.
//! Relations are sorted, duplicate-free tuple lists.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::algebra::{tuples_closed, AlgebraJson, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::smb::detect_smb;
use crate::sorts::SortInfo;

pub type Relation = Vec<Vec<usize>>;

/// A variable's domain: a subuniverse of a named template algebra.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Domain {
    pub algebra: String,
    pub elems: Vec<usize>,
}

type SortCache = Arc<Mutex<HashMap<Domain, Arc<SortInfo>>>>;

#[derive(Clone)]
pub struct Instance {
    algebras: BTreeMap<String, Arc<FiniteAlgebra>>,
    variables: Vec<String>,
    domains: Vec<Domain>,
    constraints: BTreeMap<Vec<usize>, Relation>,
    sorts: SortCache,
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Instance")
            .field("variables", &self.variables)
            .field("domains", &self.domains)
            .field("constraints", &self.constraints)
            .finish()
    }
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables
            && self.domains == other.domains
            && self.constraints == other.constraints
            && self.algebras == other.algebras
    }
}

/// Weak/strong M-irreducibility flags and `Size(P)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrreducibilityStatus {
    pub weakly_m_irreducible: bool,
    pub strongly_m_irreducible: bool,
    pub size: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainJson {
    pub algebra: String,
    pub subuniverse: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintJson {
    pub scope: Vec<String>,
    pub tuples: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub algebras: BTreeMap<String, AlgebraJson>,
    pub variables: Vec<String>,
    pub domains: BTreeMap<String, DomainJson>,
    pub constraints: Vec<ConstraintJson>,
}

/// Projects `rel` onto the given positions; the result is sorted and deduplicated.
pub fn project(rel: &[Vec<usize>], positions: &[usize]) -> Relation {
    let mut out: Relation = rel.iter().map(|t| positions.iter().map(|&p| t[p]).collect()).collect();
    out.sort();
    out.dedup();
    out
}

/// Positions of `sub` inside the sorted scope `scope`; `None` unless `sub ⊆ scope`.
pub fn positions_in(scope: &[usize], sub: &[usize]) -> Option<Vec<usize>> {
    sub.iter().map(|v| scope.binary_search(v).ok()).collect()
}

/// Sorted intersection of two sorted relations.
pub fn intersect_sorted(a: &[Vec<usize>], b: &[Vec<usize>]) -> Relation {
    let set: HashSet<&Vec<usize>> = b.iter().collect();
    a.iter().filter(|t| set.contains(t)).cloned().collect()
}

impl Instance {
    /// Builds an instance, validating that domains are nonempty subuniverses,
    /// tuples lie inside their domains and relations are closed under the operations.
    pub fn new(
        algebras: BTreeMap<String, Arc<FiniteAlgebra>>,
        variables: Vec<String>,
        domains: Vec<Domain>,
        constraints: Vec<(Vec<usize>, Relation)>,
    ) -> Result<Instance> {
        if domains.len() != variables.len() {
            return Err(Error::Invalid(format!("{} variables but {} domains", variables.len(), domains.len())));
        }
        let mut seen = HashSet::new();
        for v in &variables {
            if !seen.insert(v) {
                return Err(Error::Invalid(format!("duplicate variable {v}")));
            }
        }
        for (i, d) in domains.iter().enumerate() {
            let alg = algebras
                .get(&d.algebra)
                .ok_or_else(|| Error::Invalid(format!("variable {}: unknown algebra {}", variables[i], d.algebra)))?;
            if d.elems.is_empty() || !d.elems.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Invalid(format!(
                    "variable {}: subuniverse must be nonempty, sorted and duplicate-free",
                    variables[i]
                )));
            }
            if !alg.is_subuniverse(&d.elems) {
                return Err(Error::Invalid(format!(
                    "variable {}: {:?} is not a subuniverse of {}",
                    variables[i], d.elems, d.algebra
                )));
            }
        }
        let n = variables.len();
        for (scope, rel) in &constraints {
            if let Some(&v) = scope.iter().find(|&&v| v >= n) {
                return Err(Error::Invalid(format!("scope mentions unknown variable index {v}")));
            }
            for t in rel {
                if t.len() != scope.len() {
                    return Err(Error::Invalid(format!(
                        "tuple {t:?} has arity {} but scope has arity {}",
                        t.len(),
                        scope.len()
                    )));
                }
                for (k, &v) in scope.iter().enumerate() {
                    if domains[v].elems.binary_search(&t[k]).is_err() {
                        return Err(Error::Invalid(format!(
                            "tuple {t:?}: value {} outside the domain of {}",
                            t[k], variables[v]
                        )));
                    }
                }
            }
            let algs: Vec<&FiniteAlgebra> = scope.iter().map(|&v| algebras[&domains[v].algebra].as_ref()).collect();
            if !tuples_closed(&algs, rel) {
                return Err(Error::Invalid(format!(
                    "relation on scope {:?} is not closed under the operations",
                    scope.iter().map(|&v| &variables[v]).collect::<Vec<_>>()
                )));
            }
        }
        Ok(Self::assemble(algebras, variables, domains, constraints, new_cache()))
    }

    /// Normalizes without validation: scopes are sorted, repeated variables
    /// identified, tuples outside domains dropped, unary constraints merged into
    /// domains and same-scope relations intersected.
    pub(crate) fn assemble(
        algebras: BTreeMap<String, Arc<FiniteAlgebra>>,
        variables: Vec<String>,
        mut domains: Vec<Domain>,
        constraints: Vec<(Vec<usize>, Relation)>,
        sorts: SortCache,
    ) -> Instance {
        let mut merged: BTreeMap<Vec<usize>, Relation> = BTreeMap::new();
        for (scope, rel) in constraints {
            let mut sorted: Vec<usize> = scope.clone();
            sorted.sort_unstable();
            sorted.dedup();
            let first_pos: Vec<usize> = sorted.iter().map(|v| scope.iter().position(|w| w == v).unwrap()).collect();
            let mut out: Relation = rel
                .into_iter()
                .filter(|t| {
                    scope.iter().enumerate().all(|(k, v)| t[k] == t[first_pos[sorted.binary_search(v).unwrap()]])
                })
                .map(|t| first_pos.iter().map(|&p| t[p]).collect())
                .collect();
            out.sort();
            out.dedup();
            match merged.get_mut(&sorted) {
                Some(existing) => *existing = intersect_sorted(existing, &out),
                None => {
                    merged.insert(sorted, out);
                }
            }
        }
        for (scope, rel) in std::mem::take(&mut merged) {
            match scope.len() {
                0 => {
                    if rel.is_empty() {
                        merged.insert(scope, rel);
                    }
                }
                1 => {
                    let vals: HashSet<usize> = rel.iter().map(|t| t[0]).collect();
                    domains[scope[0]].elems.retain(|a| vals.contains(a));
                }
                _ => {
                    merged.insert(scope, rel);
                }
            }
        }
        let mut inst = Instance { algebras, variables, domains, constraints: merged, sorts };
        inst.filter_to_domains();
        inst
    }

    fn filter_to_domains(&mut self) {
        let masks: Vec<Vec<bool>> = self
            .domains
            .iter()
            .map(|d| {
                let mut m = vec![false; self.algebras[&d.algebra].size()];
                for &a in &d.elems {
                    m[a] = true;
                }
                m
            })
            .collect();
        for (scope, rel) in self.constraints.iter_mut() {
            rel.retain(|t| scope.iter().zip(t).all(|(&v, &a)| masks[v][a]));
        }
    }

    pub fn algebras(&self) -> &BTreeMap<String, Arc<FiniteAlgebra>> {
        &self.algebras
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn domain(&self, i: usize) -> &[usize] {
        &self.domains[i].elems
    }

    pub fn algebra_of(&self, i: usize) -> &Arc<FiniteAlgebra> {
        &self.algebras[&self.domains[i].algebra]
    }

    pub fn constraints(&self) -> &BTreeMap<Vec<usize>, Relation> {
        &self.constraints
    }

    pub fn relation(&self, scope: &[usize]) -> Option<&Relation> {
        self.constraints.get(scope)
    }

    /// `∑|A_i| + ∑|R|`, the termination measure of the reduction loops.
    pub fn mass(&self) -> usize {
        self.domains.iter().map(|d| d.elems.len()).sum::<usize>()
            + self.constraints.values().map(Vec::len).sum::<usize>()
    }

    /// The cached structure of variable `i`'s domain.
    pub fn sort(&self, i: usize) -> Result<Arc<SortInfo>> {
        let key = &self.domains[i];
        if key.elems.is_empty() {
            return Err(Error::State(format!("variable {} has an empty domain", self.variables[i])));
        }
        if let Some(s) = self.sorts.lock().unwrap().get(key) {
            return Ok(s.clone());
        }
        let info = Arc::new(SortInfo::new(self.algebra_of(i), &key.elems)?);
        self.sorts.lock().unwrap().insert(key.clone(), info.clone());
        Ok(info)
    }

    pub fn has_empty_constraint(&self) -> bool {
        self.domains.iter().any(|d| d.elems.is_empty()) || self.constraints.values().any(Vec::is_empty)
    }

    /// Whether `f` (indexed by variable) lies in every domain and satisfies every constraint.
    pub fn is_solution(&self, f: &[usize]) -> bool {
        if f.len() != self.len() {
            return false;
        }
        if self.domains.iter().zip(f).any(|(d, a)| d.elems.binary_search(a).is_err()) {
            return false;
        }
        self.constraints.iter().all(|(scope, rel)| {
            let t: Vec<usize> = scope.iter().map(|&v| f[v]).collect();
            rel.binary_search(&t).is_ok()
        })
    }

    /// Replaces domains (assumed subuniverses of the old ones) and filters relations.
    pub(crate) fn with_domains(&self, domains: Vec<Vec<usize>>) -> Instance {
        let mut out = self.clone();
        for (d, e) in out.domains.iter_mut().zip(domains) {
            d.elems = e;
        }
        out.filter_to_domains();
        out
    }

    /// Replaces domains and the constraint map (scopes assumed normalized).
    pub(crate) fn replace(&self, domains: Vec<Vec<usize>>, constraints: BTreeMap<Vec<usize>, Relation>) -> Instance {
        let mut out = self.clone();
        for (d, e) in out.domains.iter_mut().zip(domains) {
            d.elems = e;
        }
        out.constraints = constraints;
        out.filter_to_domains();
        out
    }

    /// Replaces the constraint map (scopes assumed normalized).
    pub(crate) fn with_constraints(&self, constraints: BTreeMap<Vec<usize>, Relation>) -> Instance {
        let mut out = self.clone();
        out.constraints = constraints;
        out.filter_to_domains();
        out
    }

    /// A new instance over the same algebras, sharing the sort cache.
    pub(crate) fn derived(
        &self,
        variables: Vec<String>,
        domains: Vec<Domain>,
        constraints: Vec<(Vec<usize>, Relation)>,
    ) -> Instance {
        Self::assemble(self.algebras.clone(), variables, domains, constraints, self.sorts.clone())
    }

    /// The same instance over replacement algebras (same names and universes).
    /// The sort cache is not shared.
    pub(crate) fn with_algebras(&self, algebras: BTreeMap<String, Arc<FiniteAlgebra>>) -> Instance {
        Instance {
            algebras,
            variables: self.variables.clone(),
            domains: self.domains.clone(),
            constraints: self.constraints.clone(),
            sorts: new_cache(),
        }
    }

    /// Intersects every relation with the product of the new domains.
    pub fn tighten(&self, new_domains: &BTreeMap<usize, Vec<usize>>) -> Result<Instance> {
        let mut doms: Vec<Vec<usize>> = self.domains.iter().map(|d| d.elems.clone()).collect();
        for (&i, elems) in new_domains {
            if i >= self.len() {
                return Err(Error::Domain(format!("unknown variable index {i}")));
            }
            let mut e = elems.clone();
            e.sort_unstable();
            e.dedup();
            if let Some(a) = e.iter().find(|a| self.domains[i].elems.binary_search(a).is_err()) {
                return Err(Error::Domain(format!("value {a} is not in the domain of {}", self.variables[i])));
            }
            if !e.is_empty() && !self.algebra_of(i).is_subuniverse(&e) {
                return Err(Error::Domain(format!(
                    "{e:?} is not a subuniverse of the domain of {}",
                    self.variables[i]
                )));
            }
            doms[i] = e;
        }
        Ok(self.with_domains(doms))
    }

    /// Tightens pinned variables to singletons.
    pub fn pin(&self, pins: &[(usize, usize)]) -> Result<Instance> {
        let map: BTreeMap<usize, Vec<usize>> = pins.iter().map(|&(v, a)| (v, vec![a])).collect();
        self.tighten(&map)
    }

    /// The restriction to the variables `w`, renumbered in increasing order.
    pub fn restrict(&self, w: &[usize]) -> Instance {
        let mut keep: Vec<usize> = w.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut index = vec![usize::MAX; self.len()];
        for (k, &v) in keep.iter().enumerate() {
            index[v] = k;
        }
        let mut constraints = Vec::new();
        for (scope, rel) in &self.constraints {
            let pos: Vec<usize> = (0..scope.len()).filter(|&p| index[scope[p]] != usize::MAX).collect();
            let new_scope: Vec<usize> = pos.iter().map(|&p| index[scope[p]]).collect();
            constraints.push((new_scope, project(rel, &pos)));
        }
        Self::assemble(
            self.algebras.clone(),
            keep.iter().map(|&v| self.variables[v].clone()).collect(),
            keep.iter().map(|&v| self.domains[v].clone()).collect(),
            constraints,
            self.sorts.clone(),
        )
    }

    /// Weak/strong M-irreducibility and `Size(P)`.
    pub fn irreducibility_status(&self) -> Result<IrreducibilityStatus> {
        let sorts: Vec<Arc<SortInfo>> = (0..self.len()).map(|i| self.sort(i)).collect::<Result<_>>()?;
        let size = sorts.iter().filter(|s| !s.is_malcev()).map(|s| s.size()).max();
        let weak = sorts.iter().filter(|s| !s.is_malcev() && Some(s.size()) == size).all(|s| s.is_unital());
        let strong = sorts.iter().all(|s| s.is_malcev() || s.has_singleton_top());
        Ok(IrreducibilityStatus { weakly_m_irreducible: weak, strongly_m_irreducible: strong, size })
    }

    /// `Size(P)`: the largest non-Mal'cev domain, `None` when every domain is Mal'cev.
    pub fn size(&self) -> Result<Option<usize>> {
        Ok(self.irreducibility_status()?.size)
    }

    /// An exact key for memoization: algebra names and a flat encoding of
    /// domains and constraints.
    pub fn canonical_key(&self) -> (Vec<String>, Vec<usize>) {
        let names = self.domains.iter().map(|d| d.algebra.clone()).collect();
        let mut flat = Vec::new();
        for d in &self.domains {
            flat.push(d.elems.len());
            flat.extend(&d.elems);
        }
        for (scope, rel) in &self.constraints {
            flat.push(scope.len());
            flat.extend(scope);
            flat.push(rel.len());
            for t in rel {
                flat.extend(t);
            }
        }
        (names, flat)
    }

    pub fn to_json(&self) -> InstanceJson {
        let algebras = self
            .algebras
            .iter()
            .map(|(k, a)| {
                let blocks = detect_smb(a).ok().map(|s| s.blocks().to_vec());
                (k.clone(), a.to_json(blocks))
            })
            .collect();
        let domains = self
            .variables
            .iter()
            .zip(&self.domains)
            .map(|(v, d)| (v.clone(), DomainJson { algebra: d.algebra.clone(), subuniverse: d.elems.clone() }))
            .collect();
        let constraints = self
            .constraints
            .iter()
            .map(|(scope, rel)| ConstraintJson {
                scope: scope.iter().map(|&v| self.variables[v].clone()).collect(),
                tuples: rel.clone(),
            })
            .collect();
        InstanceJson { algebras, variables: self.variables.clone(), domains, constraints }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("instance serializes")
    }

    pub fn from_json(j: &InstanceJson) -> Result<Instance> {
        let mut algebras = BTreeMap::new();
        for (id, aj) in &j.algebras {
            let (alg, hint) = FiniteAlgebra::from_json(aj)?;
            if let Some(blocks) = hint {
                let smb = detect_smb(&alg)?;
                let mut given: Vec<Vec<usize>> = blocks.iter().map(|b| sorted(b)).collect();
                given.sort();
                let mut found: Vec<Vec<usize>> = smb.blocks().to_vec();
                found.sort();
                if given != found {
                    return Err(Error::Invalid(format!(
                        "algebra {id}: block hint {blocks:?} differs from the computed blocks {found:?}"
                    )));
                }
            }
            algebras.insert(id.clone(), Arc::new(alg));
        }
        let index: HashMap<&str, usize> = j.variables.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let mut domains = Vec::with_capacity(j.variables.len());
        for v in &j.variables {
            let d = j.domains.get(v).ok_or_else(|| Error::Invalid(format!("variable {v} has no domain")))?;
            domains.push(Domain { algebra: d.algebra.clone(), elems: sorted(&d.subuniverse) });
        }
        if let Some(extra) = j.domains.keys().find(|k| !index.contains_key(k.as_str())) {
            return Err(Error::Invalid(format!("domain given for undeclared variable {extra}")));
        }
        let mut constraints = Vec::new();
        for c in &j.constraints {
            let scope = c
                .scope
                .iter()
                .map(|v| {
                    index
                        .get(v.as_str())
                        .copied()
                        .ok_or_else(|| Error::Invalid(format!("unknown variable {v} in scope")))
                })
                .collect::<Result<Vec<usize>>>()?;
            constraints.push((scope, c.tuples.clone()));
        }
        Instance::new(algebras, j.variables.clone(), domains, constraints)
    }

    pub fn parse(text: &str) -> Result<Instance> {
        let j: InstanceJson = serde_json::from_str(text)?;
        Self::from_json(&j)
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn new_cache() -> SortCache {
    Arc::new(Mutex::new(HashMap::new()))
}

/// Convenience builder used by tests, generators and the CLI.
pub struct InstanceBuilder {
    algebras: BTreeMap<String, Arc<FiniteAlgebra>>,
    variables: Vec<String>,
    domains: Vec<Domain>,
    constraints: Vec<(Vec<usize>, Relation)>,
}

impl Default for InstanceBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl InstanceBuilder {
    pub fn new() -> Self {
        InstanceBuilder { algebras: BTreeMap::new(), variables: vec![], domains: vec![], constraints: vec![] }
    }

    /// Registers an algebra under its own name.
    pub fn algebra(mut self, alg: FiniteAlgebra) -> Self {
        self.algebras.insert(alg.name().to_string(), Arc::new(alg));
        self
    }

    /// Adds a variable whose domain is the whole algebra.
    pub fn var(self, name: &str, algebra: &str) -> Self {
        let n = self.algebras.get(algebra).map_or(0, |a| a.size());
        self.var_in(name, algebra, &(0..n).collect::<Vec<_>>())
    }

    pub fn var_in(mut self, name: &str, algebra: &str, elems: &[usize]) -> Self {
        self.variables.push(name.to_string());
        self.domains.push(Domain { algebra: algebra.to_string(), elems: sorted(elems) });
        self
    }

    pub fn constraint(mut self, scope: &[usize], tuples: Relation) -> Self {
        self.constraints.push((scope.to_vec(), tuples));
        self
    }

    pub fn build(self) -> Result<Instance> {
        Instance::new(self.algebras, self.variables, self.domains, self.constraints)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::named;

    fn xor_pair() -> Instance {
        InstanceBuilder::new()
            .algebra(named::m2())
            .var("x", "M2")
            .var("y", "M2")
            .constraint(&[0, 1], vec![vec![0, 1], vec![1, 0]])
            .build()
            .unwrap()
    }

    #[test]
    fn normalizes_scopes() {
        let inst = InstanceBuilder::new()
            .algebra(named::m2())
            .var("x", "M2")
            .var("y", "M2")
            .constraint(&[1, 0], vec![vec![0, 1], vec![1, 0]])
            .constraint(&[0, 1], vec![vec![1, 0], vec![0, 0], vec![1, 1], vec![0, 1]])
            .constraint(&[0, 0], vec![vec![0, 0], vec![1, 1]])
            .build()
            .unwrap();
        assert_eq!(inst.constraints().len(), 1);
        assert_eq!(inst.relation(&[0, 1]).unwrap(), &vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn unary_constraints_become_domains() {
        let inst = InstanceBuilder::new()
            .algebra(named::l4())
            .var("x", "L4")
            .var("y", "L4")
            .constraint(&[0], vec![vec![0], vec![1]])
            .constraint(&[0, 1], vec![vec![0, 0], vec![1, 1], vec![2, 2], vec![0, 1], vec![1, 0]])
            .build()
            .unwrap();
        assert_eq!(inst.domain(0), &[0, 1]);
        assert!(inst.relation(&[0, 1]).unwrap().iter().all(|t| t[0] != 2));
    }

    #[test]
    fn rejects_bad_input() {
        let b = || InstanceBuilder::new().algebra(named::l4()).var("x", "L4");
        assert!(matches!(b().var_in("y", "L4", &[1, 2]).build(), Err(Error::Invalid(_))));
        assert!(matches!(
            b().var_in("y", "L4", &[0, 1]).constraint(&[0, 1], vec![vec![0, 2]]).build(),
            Err(Error::Invalid(_))
        ));
        // {(0,1),(1,0)} over L4 on the first variable is fine; adding (2,2) breaks closure.
        assert!(matches!(
            b().var("y", "L4").constraint(&[0, 1], vec![vec![0, 1], vec![2, 2]]).build(),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(b().var("y", "Q").build(), Err(Error::Invalid(_))));
    }

    #[test]
    fn tighten_filters() {
        let inst = InstanceBuilder::new()
            .algebra(named::l4())
            .var("x", "L4")
            .var("y", "L4")
            .constraint(&[0, 1], vec![vec![0, 0], vec![1, 1], vec![2, 2], vec![0, 1], vec![1, 0]])
            .build()
            .unwrap();
        let same = inst.tighten(&BTreeMap::new()).unwrap();
        assert_eq!(same, inst);
        let t = inst.tighten(&BTreeMap::from([(0, vec![0, 1])])).unwrap();
        assert_eq!(t.relation(&[0, 1]).unwrap().len(), 4);
        assert!(inst.tighten(&BTreeMap::from([(0, vec![2])])).is_ok());
        assert!(matches!(inst.tighten(&BTreeMap::from([(0, vec![1, 2])])), Err(Error::Domain(_))));
    }

    #[test]
    fn restrict_chain_to_endpoints() {
        let inst = InstanceBuilder::new()
            .algebra(named::m2())
            .var("a", "M2")
            .var("b", "M2")
            .var("c", "M2")
            .constraint(&[0, 1], vec![vec![0, 1], vec![1, 0]])
            .constraint(&[1, 2], vec![vec![0, 1], vec![1, 0]])
            .build()
            .unwrap();
        let r = inst.restrict(&[0, 2]);
        assert_eq!(r.variables(), &["a".to_string(), "c".to_string()]);
        assert!(r.constraints().is_empty());
        assert_eq!(inst.restrict(&[0, 1, 2]), inst);
    }

    #[test]
    fn json_round_trip() {
        let inst = xor_pair();
        let text = inst.to_json_string();
        let back = Instance::parse(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_json_string(), text);
        let err = Instance::parse("{\"algebras\": {}, \n \"variables\": [").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn irreducibility() {
        let st = xor_pair().irreducibility_status().unwrap();
        assert_eq!(st, IrreducibilityStatus { weakly_m_irreducible: true, strongly_m_irreducible: true, size: None });
        let l = InstanceBuilder::new().algebra(named::l4()).var("x", "L4").build().unwrap();
        let st = l.irreducibility_status().unwrap();
        assert!(!st.weakly_m_irreducible && st.strongly_m_irreducible);
        assert_eq!(st.size, Some(3));
        let u = InstanceBuilder::new().algebra(named::unital3()).var("x", "U3").build().unwrap();
        assert!(u.irreducibility_status().unwrap().weakly_m_irreducible);
    }

    #[test]
    fn solution_check() {
        let inst = xor_pair();
        assert!(inst.is_solution(&[0, 1]));
        assert!(!inst.is_solution(&[1, 1]));
        assert!(!inst.is_solution(&[0]));
    }
}
