//! Unary polynomials, minimal sets, separation of congruence covers, split
//! elements and collapsing polynomials.
//!
//! Maps are stored as value tables. Closures are computed as subuniverses of
//! a power of the algebra, generated by the identity and the constants.

use std::collections::BTreeSet;

use crate::algebra::{close_tuples, FiniteAlgebra};
use crate::congruence::{all_congruences, covers_below, Congruence};
use crate::error::{Error, Result};
use crate::smb::SmbStructure;

/// Default cap on the number of maps in a closure.
pub const DEFAULT_CLOSURE_CAP: usize = 200_000;

/// Default cap on the relation size for collapsing-polynomial search.
pub const DEFAULT_COLLAPSE_CAP: usize = 8;

/// `Pol₁` of a finite algebra, as a sorted list of value tables.
#[derive(Clone, Debug)]
pub struct UnaryPolynomialClosure {
    maps: Vec<Vec<usize>>,
}

impl UnaryPolynomialClosure {
    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn contains(&self, f: &[usize]) -> bool {
        self.maps.binary_search_by(|m| m.as_slice().cmp(f)).is_ok()
    }

    pub fn idempotents(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.maps.iter().filter(|f| is_idempotent(f))
    }
}

pub fn is_idempotent(f: &[usize]) -> bool {
    f.iter().all(|&x| f[x] == x || f[f[x]] == f[x])
}

pub fn compose(f: &[usize], g: &[usize]) -> Vec<usize> {
    g.iter().map(|&x| f[x]).collect()
}

/// The unique idempotent in the cyclic semigroup generated by `f`.
pub fn idempotent_power(f: &[usize]) -> Vec<usize> {
    let mut g = f.to_vec();
    loop {
        if is_idempotent(&g) {
            return g;
        }
        g = compose(f, &g);
    }
}

pub fn unary_polynomials(alg: &FiniteAlgebra, cap: usize) -> Result<UnaryPolynomialClosure> {
    let n = alg.size();
    let algs = vec![alg; n];
    let mut gens = vec![(0..n).collect::<Vec<_>>()];
    gens.extend((0..n).map(|c| vec![c; n]));
    let maps = close_tuples(&algs, gens, cap).map_err(|e| relabel_cap(e, "unary polynomial closure"))?;
    Ok(UnaryPolynomialClosure { maps })
}

fn relabel_cap(e: Error, what: &str) -> Error {
    match e {
        Error::CapExceeded { cap, .. } => Error::CapExceeded { what: what.into(), cap },
        other => other,
    }
}

/// Checks that `alpha ≺ beta` in the congruence lattice.
pub fn check_cover(alg: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence) -> Result<()> {
    if !alpha.is_congruence_of(alg) || !beta.is_congruence_of(alg) {
        return Err(Error::Domain("cover endpoints must be congruences".into()));
    }
    if alpha == beta || !alpha.le(beta) {
        return Err(Error::Domain(format!("{alpha:?} is not strictly below {beta:?}")));
    }
    let between = all_congruences(alg).into_iter().any(|g| &g != alpha && &g != beta && alpha.le(&g) && g.le(beta));
    if between {
        return Err(Error::Domain(format!("{alpha:?} ≺ {beta:?} is not a cover")));
    }
    Ok(())
}

/// Non-trivial pairs of `beta`.
fn proper_pairs(beta: &Congruence) -> Vec<(usize, usize)> {
    let n = beta.size();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x != y && beta.related(x, y) {
                out.push((x, y));
            }
        }
    }
    out
}

/// Whether `f(beta) ⊄ alpha`.
pub fn moves(f: &[usize], alpha: &Congruence, beta: &Congruence) -> bool {
    proper_pairs(beta).iter().any(|&(x, y)| !alpha.related(f[x], f[y]))
}

fn image(f: &[usize]) -> Vec<usize> {
    let set: BTreeSet<usize> = f.iter().copied().collect();
    set.into_iter().collect()
}

/// Minimal images of idempotent maps in `pol` with `f(beta) ⊄ alpha`.
fn minimal_images(pol: &UnaryPolynomialClosure, alpha: &Congruence, beta: &Congruence) -> Vec<Vec<usize>> {
    let images: BTreeSet<Vec<usize>> = pol.idempotents().filter(|f| moves(f, alpha, beta)).map(|f| image(f)).collect();
    let subset = |a: &Vec<usize>, b: &Vec<usize>| a.iter().all(|x| b.binary_search(x).is_ok());
    images.iter().filter(|u| !images.iter().any(|v| v != *u && subset(v, u))).cloned().collect()
}

/// The `(alpha, beta)`-minimal sets.
pub fn minimal_sets(alg: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence, cap: usize) -> Result<Vec<Vec<usize>>> {
    check_cover(alg, alpha, beta)?;
    Ok(minimal_images(&unary_polynomials(alg, cap)?, alpha, beta))
}

/// Elements whose left meet action moves some `beta` pair out of `alpha`.
pub fn split_elements(alg: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence) -> Vec<usize> {
    let pairs = proper_pairs(beta);
    (0..alg.size()).filter(|&a| pairs.iter().any(|&(b, c)| !alpha.related(alg.meet(a, b), alg.meet(a, c)))).collect()
}

/// Whether every tuple is split at all of the given positions or at none.
/// Each entry names a tuple position and the split elements there.
pub fn is_aligned(relation: &[Vec<usize>], split: &[(usize, Vec<usize>)]) -> bool {
    relation.iter().all(|t| {
        let mut flags = split.iter().map(|(pos, s)| s.contains(&t[*pos]));
        match flags.next() {
            None => true,
            Some(first) => flags.all(|f| f == first),
        }
    })
}

/// The pairs `(f_i, f_j)` induced by unary polynomials of a binary relation,
/// with both components restricted to the least blocks.
#[derive(Clone, Debug)]
pub struct PairPolynomialClosure {
    left_min: Vec<usize>,
    right_min: Vec<usize>,
    pairs: Vec<Vec<usize>>,
}

impl PairPolynomialClosure {
    /// `relation` is a subuniverse of `left × right`; `*_min` are the least
    /// blocks of the two coordinate algebras.
    pub fn new(
        left: &FiniteAlgebra,
        left_min: &[usize],
        right: &FiniteAlgebra,
        right_min: &[usize],
        relation: &[(usize, usize)],
        cap: usize,
    ) -> Result<Self> {
        let (p, q) = (left_min.len(), right_min.len());
        let mut algs = vec![left; p];
        algs.extend(std::iter::repeat_n(right, q));
        let mut gens = vec![left_min.iter().chain(right_min).copied().collect::<Vec<_>>()];
        for &(a, b) in relation {
            let mut t = vec![a; p];
            t.extend(std::iter::repeat_n(b, q));
            gens.push(t);
        }
        let pairs = close_tuples(&algs, gens, cap).map_err(|e| relabel_cap(e, "pair polynomial closure"))?;
        Ok(PairPolynomialClosure { left_min: left_min.to_vec(), right_min: right_min.to_vec(), pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Restricted cover pairs as index pairs into a component table.
    fn indexed(min: &[usize], beta: &Congruence) -> Vec<(usize, usize)> {
        proper_pairs(beta)
            .into_iter()
            .filter_map(|(x, y)| Some((min.binary_search(&x).ok()?, min.binary_search(&y).ok()?)))
            .collect()
    }

    /// Whether some pair moves `beta` out of `alpha` on one side while
    /// mapping `delta` into `gamma` on the other. With `from_left` the
    /// `(alpha, beta)` cover lives on the left coordinate.
    pub fn can_separate(
        &self,
        (alpha, beta): (&Congruence, &Congruence),
        (gamma, delta): (&Congruence, &Congruence),
        from_left: bool,
    ) -> bool {
        let p = self.left_min.len();
        let (first_min, second_min) =
            if from_left { (&self.left_min, &self.right_min) } else { (&self.right_min, &self.left_min) };
        let moving = Self::indexed(first_min, beta);
        let collapsing = Self::indexed(second_min, delta);
        self.pairs.iter().any(|t| {
            let (l, r) = t.split_at(p);
            let (f, g) = if from_left { (l, r) } else { (r, l) };
            moving.iter().any(|&(x, y)| !alpha.related(f[x], f[y]))
                && collapsing.iter().all(|&(x, y)| gamma.related(g[x], g[y]))
        })
    }
}

/// A finite subdirect relation with its coordinate algebras.
pub struct SubdirectRelation<'a> {
    pub algebras: Vec<&'a FiniteAlgebra>,
    pub tuples: Vec<Vec<usize>>,
}

/// Component tables of a collapsing polynomial.
pub type PolynomialTables = Vec<Vec<usize>>;

impl<'a> SubdirectRelation<'a> {
    pub fn new(algebras: Vec<&'a FiniteAlgebra>, mut tuples: Vec<Vec<usize>>) -> Result<Self> {
        tuples.sort();
        tuples.dedup();
        for (k, alg) in algebras.iter().enumerate() {
            let proj: BTreeSet<usize> = tuples.iter().map(|t| t[k]).collect();
            if proj.len() != alg.size() {
                return Err(Error::Domain(format!("relation is not subdirect at coordinate {k}")));
            }
        }
        if !crate::algebra::tuples_closed(&algebras, &tuples) {
            return Err(Error::Domain("relation is not a subuniverse".into()));
        }
        Ok(SubdirectRelation { algebras, tuples })
    }

    /// The relation as an algebra on tuple indices.
    fn as_algebra(&self) -> FiniteAlgebra {
        let idx = |t: Vec<usize>| self.tuples.binary_search(&t).expect("closed relation");
        let algs = &self.algebras;
        let ts = &self.tuples;
        FiniteAlgebra::from_fns(
            "R",
            ts.len(),
            |a, b| idx((0..algs.len()).map(|k| algs[k].meet(ts[a][k], ts[b][k])).collect()),
            |a, b, c| idx((0..algs.len()).map(|k| algs[k].d(ts[a][k], ts[b][k], ts[c][k])).collect()),
        )
        .expect("subuniverse of idempotent algebras")
    }

    /// Component `k` of a map on tuple indices.
    fn component(&self, f: &[usize], k: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.algebras[k].size()];
        for (i, t) in self.tuples.iter().enumerate() {
            out[t[k]] = self.tuples[f[i]][k];
        }
        out
    }
}

/// Searches `Pol₁(R)` for an `(alpha, beta)`-collapsing polynomial at
/// coordinate `i` that fixes `a` and maps `b` into its own `alpha` class.
pub fn find_collapsing_polynomial(
    rel: &SubdirectRelation<'_>,
    (i, alpha, beta): (usize, &Congruence, &Congruence),
    a: &[usize],
    b: usize,
    collapse_cap: usize,
    closure_cap: usize,
) -> Result<PolynomialTables> {
    if rel.tuples.len() > collapse_cap {
        return Err(Error::CapExceeded { what: "collapsing polynomial relation size".into(), cap: collapse_cap });
    }
    let smbs: Vec<SmbStructure> = rel
        .algebras
        .iter()
        .map(|alg| SmbStructure::from_meet_relation(std::sync::Arc::new((*alg).clone())))
        .collect::<Result<_>>()?;
    let mins: Vec<Vec<usize>> = smbs.iter().map(|s| s.min_elems().map(<[usize]>::to_vec)).collect::<Result<_>>()?;
    let a_idx = rel.tuples.binary_search(&a.to_vec()).map_err(|_| Error::Domain(format!("{a:?} is not in R")))?;
    if a.iter().zip(&mins).any(|(x, m)| !m.contains(x)) {
        return Err(Error::Domain(format!("{a:?} is not in min(R)")));
    }
    check_cover(rel.algebras[i], alpha, beta)?;
    if !beta.related(a[i], b) || alpha.related(a[i], b) {
        return Err(Error::Domain("(a(i), b) must lie in beta minus alpha".into()));
    }

    let r_alg = rel.as_algebra();
    let pol = unary_polynomials(&r_alg, closure_cap)?;
    let comps: Vec<Vec<Vec<usize>>> =
        pol.maps().iter().map(|f| (0..rel.algebras.len()).map(|k| rel.component(f, k)).collect()).collect();

    // Covers of every coordinate below its Rees congruence.
    let mut index = Vec::new();
    for (k, s) in smbs.iter().enumerate() {
        for (g, d) in covers_below(rel.algebras[k], &s.rees()?)? {
            index.push((k, g, d));
        }
    }
    let separable = |k: usize, g: &Congruence, d: &Congruence| {
        comps.iter().any(|c| moves(&c[i], alpha, beta) && !moves(&c[k], g, d))
    };
    let mut minimal = Vec::new();
    for (k, g, d) in &index {
        let sep = separable(*k, g, d);
        let msets = if sep { Vec::new() } else { minimal_sets(rel.algebras[*k], g, d, closure_cap)? };
        minimal.push((sep, msets));
    }

    for (f, c) in pol.maps().iter().zip(&comps) {
        if !is_idempotent(f) || f[a_idx] != a_idx || !alpha.related(c[i][b], b) {
            continue;
        }
        if c.iter().zip(&mins).any(|(ck, m)| ck.iter().any(|x| !m.contains(x))) {
            continue;
        }
        let ok =
            index.iter().zip(&minimal).all(
                |((k, g, d), (sep, msets))| {
                    if *sep {
                        !moves(&c[*k], g, d)
                    } else {
                        msets.contains(&image(&c[*k]))
                    }
                },
            );
        if ok {
            return Ok(c.clone());
        }
    }
    Err(Error::NotFound("no collapsing polynomial in the closure".into()))
}

/// Checks the one-subtrace property for `(a, b) ∈ beta − alpha`: some
/// minimal set contains `a` and an element `alpha`-related to `b`.
pub fn one_subtrace_holds(
    alg: &FiniteAlgebra,
    alpha: &Congruence,
    beta: &Congruence,
    a: usize,
    b: usize,
    cap: usize,
) -> Result<bool> {
    let msets = minimal_sets(alg, alpha, beta, cap)?;
    Ok(msets.iter().any(|u| u.contains(&a) && u.iter().any(|&c| alpha.related(c, b))))
}
