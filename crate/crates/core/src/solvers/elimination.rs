//! Consistent maps, decompositions and the elimination loop that makes an
//! instance weakly M-irreducible.
//!
//! The decomposition uses `t(x, y) = x ∧ y`. On regular SMB algebras the
//! images `a ∧ A_i` and the images of the extracted retractions are
//! subuniverses of the original algebras, so both constructions stay inside
//! the input template; this is checked and reported as a structure error.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::algebra::close_tuples;
use crate::consistency::minimize_23;
use crate::error::{Error, Result};
use crate::instance::{Domain, Instance, Relation};
use crate::outcome::{Trace, TraceEvent};
use crate::polynomial::idempotent_power;

use super::general::Ctx;

/// One unary map per variable, stored as images of the domain elements in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistentMapSet {
    pub maps: Vec<Vec<usize>>,
}

impl ConsistentMapSet {
    pub fn identity(inst: &Instance) -> Self {
        ConsistentMapSet { maps: inst.domains().iter().map(|d| d.elems.clone()).collect() }
    }

    fn local(&self, inst: &Instance, i: usize) -> Vec<usize> {
        let dom = inst.domain(i);
        self.maps[i].iter().map(|a| dom.binary_search(a).expect("map stays in the domain")).collect()
    }

    pub fn apply(&self, inst: &Instance, i: usize, a: usize) -> usize {
        self.maps[i][inst.domain(i).binary_search(&a).expect("argument in the domain")]
    }

    /// Whether every map sends its domain into itself.
    pub fn fits(&self, inst: &Instance) -> bool {
        self.maps.len() == inst.len()
            && self.maps.iter().enumerate().all(|(i, m)| {
                m.len() == inst.domain(i).len() && m.iter().all(|a| inst.domain(i).binary_search(a).is_ok())
            })
    }

    pub fn is_permutational(&self) -> bool {
        self.maps.iter().all(|m| m.iter().collect::<BTreeSet<_>>().len() == m.len())
    }

    pub fn is_retractive(&self, inst: &Instance) -> bool {
        (0..self.maps.len()).all(|i| {
            let f = self.local(inst, i);
            f.iter().all(|&x| f[f[x]] == f[x])
        })
    }

    /// Whether `p|_S(r) ∈ R` for every constraint `(S, R)` and `r ∈ R`.
    pub fn is_consistent(&self, inst: &Instance) -> bool {
        self.fits(inst)
            && inst.constraints().iter().all(|(scope, rel)| {
                rel.iter().all(|r| {
                    let img: Vec<usize> = scope.iter().zip(r).map(|(&i, &a)| self.apply(inst, i, a)).collect();
                    rel.binary_search(&img).is_ok()
                })
            })
    }

    /// Replaces every map by its idempotent power.
    pub fn iterate_to_retractive(&self, inst: &Instance) -> Self {
        let maps = (0..self.maps.len())
            .map(|i| {
                let dom = inst.domain(i);
                idempotent_power(&self.local(inst, i)).into_iter().map(|x| dom[x]).collect()
            })
            .collect();
        ConsistentMapSet { maps }
    }
}

/// The instance `t(P)` together with the map back to `P`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub instance: Instance,
    /// `slots[i][k]` is the variable `(i, A_i[k])` of `t(P)`.
    pub slots: Vec<Vec<usize>>,
    /// The inverse of `slots`: `(i, a)` for each variable of `t(P)`.
    pub origin: Vec<(usize, usize)>,
}

/// Builds `t(P)` for `t(x, y) = x ∧ y`.
pub fn decompose(inst: &Instance, closure_cap: usize) -> Result<Decomposition> {
    for i in 0..inst.len() {
        let alg = inst.algebra_of(i);
        let dom = inst.domain(i);
        if let Some((x, y)) = dom
            .iter()
            .flat_map(|&x| dom.iter().map(move |&y| (x, y)))
            .find(|&(x, y)| alg.meet(x, alg.meet(x, y)) != alg.meet(x, y))
        {
            return Err(Error::State(format!(
                "x∧(x∧y) = x∧y fails at ({x}, {y}) on {}; regularize first",
                inst.variables()[i]
            )));
        }
    }
    let mut variables = Vec::new();
    let mut domains = Vec::new();
    let mut slots = Vec::with_capacity(inst.len());
    let mut origin = Vec::new();
    for i in 0..inst.len() {
        let alg = inst.algebra_of(i);
        let dom = inst.domain(i);
        let mut row = Vec::with_capacity(dom.len());
        for &a in dom {
            let mut image: Vec<usize> = dom.iter().map(|&x| alg.meet(a, x)).collect();
            image.sort_unstable();
            image.dedup();
            if !alg.is_subuniverse(&image) {
                return Err(Error::Structure(format!("{a}∧A is not a subuniverse at {}", inst.variables()[i])));
            }
            row.push(variables.len());
            origin.push((i, a));
            variables.push(format!("{}@{}", inst.variables()[i], a));
            domains.push(Domain { algebra: inst.domains()[i].algebra.clone(), elems: image });
        }
        slots.push(row);
    }

    let mut constraints: Vec<(Vec<usize>, Relation)> = Vec::new();
    for (scope, rel) in inst.constraints() {
        let algs: Vec<_> = scope.iter().map(|&i| inst.algebra_of(i)).collect();
        for r in rel {
            let new_scope: Vec<usize> =
                scope.iter().zip(r).map(|(&i, &a)| slots[i][inst.domain(i).binary_search(&a).unwrap()]).collect();
            let image: Relation =
                rel.iter().map(|x| (0..r.len()).map(|k| algs[k].meet(r[k], x[k])).collect()).collect();
            constraints.push((new_scope, image));
        }
    }
    for i in 0..inst.len() {
        let alg = inst.algebra_of(i);
        let dom = inst.domain(i);
        let gens: Vec<Vec<usize>> = dom.iter().map(|&b| dom.iter().map(|&a| alg.meet(a, b)).collect()).collect();
        let t_i = close_tuples(&vec![alg.as_ref(); dom.len()], gens, closure_cap)?;
        constraints.push((slots[i].clone(), t_i));
    }
    Ok(Decomposition { instance: inst.derived(variables, domains, constraints), slots, origin })
}

/// The consistent map set `p_i(a) = g((i, a))` induced by a solution `g` of `t(P)`.
pub fn extract_consistent_maps(inst: &Instance, dec: &Decomposition, g: &[usize]) -> Result<ConsistentMapSet> {
    if !dec.instance.is_solution(g) {
        return Err(Error::Invariant("the assignment does not solve t(P)".into()));
    }
    let p = ConsistentMapSet { maps: dec.slots.iter().map(|row| row.iter().map(|&v| g[v]).collect()).collect() };
    if !p.is_consistent(inst) {
        return Err(Error::Invariant("maps extracted from t(P) are not consistent".into()));
    }
    Ok(p)
}

/// The retraction `p(P)`: domains `p_i(A_i)` and relations `R ∩ ∏ p_i(A_i)`.
pub fn apply_retraction(inst: &Instance, p: &ConsistentMapSet) -> Result<Instance> {
    if !p.fits(inst) || !p.is_retractive(inst) {
        return Err(Error::State("the map set is not a retraction of this instance".into()));
    }
    let mut doms = BTreeMap::new();
    for (i, m) in p.maps.iter().enumerate() {
        let mut image = m.clone();
        image.sort_unstable();
        image.dedup();
        if !inst.algebra_of(i).is_subuniverse(&image) {
            return Err(Error::Structure(format!("retract {image:?} is not a subuniverse at {}", inst.variables()[i])));
        }
        doms.insert(i, image);
    }
    inst.tighten(&doms)
}

#[derive(Clone, Debug, PartialEq)]
pub enum EliminationOutcome {
    /// An equivalent weakly M-irreducible instance.
    Reduced(Instance),
    Unsat,
    /// A tightening to the subuniverse generated by the permutation elements is satisfiable.
    Sat,
}

/// The elements `c` of the domain for which `x ↦ x∧c` permutes it.
fn permutation_elements(inst: &Instance, i: usize) -> Vec<usize> {
    let alg = inst.algebra_of(i);
    let dom = inst.domain(i);
    dom.iter()
        .copied()
        .filter(|&c| dom.iter().map(|&x| alg.meet(x, c)).collect::<BTreeSet<_>>().len() == dom.len())
        .collect()
}

/// Picks the first variable carrying a maximal-sized non-Mal'cev domain that is not unital.
fn offending_domain(inst: &Instance) -> Result<Option<usize>> {
    let status = inst.irreducibility_status()?;
    let Some(size) = status.size else { return Ok(None) };
    for i in 0..inst.len() {
        let s = inst.sort(i)?;
        if !s.is_malcev() && s.size() == size && !s.is_unital() {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

pub(crate) fn eliminate(
    p0: &Instance,
    ctx: &mut Ctx<'_>,
    trace: &mut Trace,
    depth: usize,
) -> Result<EliminationOutcome> {
    let mut p = p0.clone();
    while let Some(v) = offending_domain(&p)? {
        let mass = p.mass();
        let b = p.domains()[v].clone();
        let vars: Vec<usize> = (0..p.len()).filter(|&i| p.domains()[i] == b).collect();
        let alg = p.algebra_of(v).clone();
        let c = permutation_elements(&p, v);

        // The instance restricted to Sg(C) at every copy of the domain.
        if !c.is_empty() {
            let sg = alg.generate_subuniverse(&c)?;
            if sg.len() >= b.elems.len() {
                return Err(Error::Invariant(format!("{c:?} generates the whole domain {:?}", b.elems)));
            }
            let q = p.tighten(&vars.iter().map(|&i| (i, sg.clone())).collect())?;
            if ctx.decide(&q, trace, depth + 1)? {
                ctx.event(trace, depth, TraceEvent::Eliminate { variables: vars, outcome: "sat-on-generated".into() });
                return Ok(EliminationOutcome::Sat);
            }
        }

        let dec = decompose(&p, ctx.opts.caps.closure)?;
        let mut reduced = None;
        'sweep: for &i in &vars {
            for &d in b.elems.iter().filter(|d| !c.contains(d)) {
                let pins: Vec<(usize, usize)> =
                    b.elems.iter().enumerate().map(|(k, &x)| (dec.slots[i][k], alg.meet(x, d))).collect();
                let pinned = dec.instance.pin(&pins)?;
                if !ctx.decide(&pinned, trace, depth + 1)? {
                    continue;
                }
                let g = ctx.witness(&pinned, trace, depth + 1)?;
                let maps = extract_consistent_maps(&p, &dec, &g)?.iterate_to_retractive(&p);
                if maps.is_permutational() {
                    return Err(Error::Invariant("pinned decomposition gave permutational maps".into()));
                }
                reduced = Some(apply_retraction(&p, &maps)?);
                break 'sweep;
            }
        }
        let Some(q) = reduced else {
            ctx.event(trace, depth, TraceEvent::Eliminate { variables: vars, outcome: "unsat".into() });
            return Ok(EliminationOutcome::Unsat);
        };
        p = minimize_23(&q);
        ctx.event(trace, depth, TraceEvent::Eliminate { variables: vars, outcome: "retracted".into() });
        if p.has_empty_constraint() {
            return Ok(EliminationOutcome::Unsat);
        }
        if p.mass() >= mass {
            return Err(Error::Invariant("elimination did not shrink the instance".into()));
        }
    }
    Ok(EliminationOutcome::Reduced(p))
}

/// Eliminates non-unital maximal-sized non-Mal'cev domains from a regularized,
/// (2,3)-minimal instance.
pub fn enforce_weak_m_irreducibility(
    inst: &Instance,
    opts: &super::SolveOptions,
) -> Result<(EliminationOutcome, Trace)> {
    let mut trace = Trace::new("eliminate");
    let mut ctx = Ctx::new(opts);
    let out = eliminate(inst, &mut ctx, &mut trace, 0)?;
    Ok((out, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceBuilder;
    use crate::named;
    use crate::oracle::{all_solutions, brute_force, DEFAULT_ORACLE_CAP};
    use crate::solvers::SolveOptions;

    fn two_flat() -> Instance {
        InstanceBuilder::new()
            .algebra(named::flat(2))
            .var("x", "F2")
            .var("y", "F2")
            .constraint(&[0, 1], vec![vec![0, 0], vec![0, 1], vec![1, 2], vec![2, 0], vec![2, 1]])
            .build()
            .unwrap()
    }

    #[test]
    fn malcev_decomposition_has_singleton_domains() {
        let inst = InstanceBuilder::new()
            .algebra(named::m2())
            .var("x", "M2")
            .var("y", "M2")
            .constraint(&[0, 1], vec![vec![0, 1], vec![1, 0]])
            .build()
            .unwrap();
        let dec = decompose(&inst, 10_000).unwrap();
        assert_eq!(dec.instance.len(), 4);
        assert!(dec.instance.domains().iter().all(|d| d.elems.len() == 1));
    }

    #[test]
    fn solutions_transfer_to_the_decomposition() {
        let inst = two_flat();
        let dec = decompose(&inst, 10_000).unwrap();
        for f in all_solutions(&inst, DEFAULT_ORACLE_CAP).unwrap() {
            let g: Vec<usize> = dec.origin.iter().map(|&(i, a)| inst.algebra_of(i).meet(a, f[i])).collect();
            assert!(dec.instance.is_solution(&g));
            let p = extract_consistent_maps(&inst, &dec, &g).unwrap();
            let r = p.iterate_to_retractive(&inst);
            assert!(r.is_retractive(&inst) && r.is_consistent(&inst));
            let q = apply_retraction(&inst, &r).unwrap();
            assert!(brute_force(&q, DEFAULT_ORACLE_CAP).unwrap().satisfiable);
        }
    }

    #[test]
    fn identity_retraction_is_a_no_op() {
        let inst = two_flat();
        let id = ConsistentMapSet::identity(&inst);
        assert!(id.is_permutational() && id.is_retractive(&inst) && id.is_consistent(&inst));
        assert_eq!(apply_retraction(&inst, &id).unwrap(), inst);
    }

    #[test]
    fn flat_two_maximal_blocks_is_eliminated() {
        let inst = minimize_23(&two_flat());
        let (out, trace) = enforce_weak_m_irreducibility(&inst, &SolveOptions::default()).unwrap();
        let sat = brute_force(&inst, DEFAULT_ORACLE_CAP).unwrap().satisfiable;
        match out {
            EliminationOutcome::Reduced(q) => {
                assert!(q.irreducibility_status().unwrap().weakly_m_irreducible);
                assert_eq!(brute_force(&q, DEFAULT_ORACLE_CAP).unwrap().satisfiable, sat);
            }
            EliminationOutcome::Sat => assert!(sat),
            EliminationOutcome::Unsat => assert!(!sat),
        }
        assert!(trace.eliminations >= 1);
    }
}
