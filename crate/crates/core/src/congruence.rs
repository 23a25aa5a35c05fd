//! Congruences as canonical partitions, principal congruences and the
//! congruence lattice.

use std::collections::BTreeSet;
use std::fmt;

use crate::algebra::FiniteAlgebra;
use crate::error::{Error, Result};

/// An equivalence relation on `0..n`, stored as block labels numbered by
/// first occurrence so equal partitions compare equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Congruence {
    labels: Vec<usize>,
}

impl fmt::Debug for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.blocks())
    }
}

impl Congruence {
    /// Canonicalises arbitrary block labels.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|r| {
                let next = map.len();
                *map.entry(*r).or_insert(next)
            })
            .collect();
        Congruence { labels }
    }

    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut raw = vec![usize::MAX; n];
        for (i, b) in blocks.iter().enumerate() {
            for &a in b {
                if a >= n || raw[a] != usize::MAX {
                    return Err(Error::Domain(format!("blocks {blocks:?} do not partition 0..{n}")));
                }
                raw[a] = i;
            }
        }
        if raw.contains(&usize::MAX) {
            return Err(Error::Domain(format!("blocks {blocks:?} do not cover 0..{n}")));
        }
        Ok(Self::from_labels(&raw))
    }

    pub fn identity(n: usize) -> Self {
        Congruence { labels: (0..n).collect() }
    }

    pub fn full(n: usize) -> Self {
        Congruence { labels: vec![0; n] }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn block_of(&self, a: usize) -> usize {
        self.labels[a]
    }

    #[inline]
    pub fn related(&self, a: usize, b: usize) -> bool {
        self.labels[a] == self.labels[b]
    }

    pub fn block_count(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Blocks in label order, each sorted.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.block_count()];
        for (a, &l) in self.labels.iter().enumerate() {
            out[l].push(a);
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.block_count() == self.labels.len()
    }

    pub fn is_full(&self) -> bool {
        self.block_count() <= 1
    }

    /// Refinement order: every block of `self` lies inside a block of `other`.
    pub fn le(&self, other: &Congruence) -> bool {
        let n = self.labels.len();
        let mut rep = vec![usize::MAX; self.block_count()];
        for a in 0..n {
            let l = self.labels[a];
            if rep[l] == usize::MAX {
                rep[l] = other.labels[a];
            } else if rep[l] != other.labels[a] {
                return false;
            }
        }
        true
    }

    pub fn intersect(&self, other: &Congruence) -> Congruence {
        let raw: Vec<usize> =
            self.labels.iter().zip(&other.labels).map(|(&a, &b)| a * other.labels.len() + b).collect();
        Self::from_labels(&raw)
    }

    pub fn join(&self, other: &Congruence) -> Congruence {
        let n = self.labels.len();
        let mut uf = UnionFind::new(n);
        for c in [self, other] {
            let mut first = vec![usize::MAX; c.block_count()];
            for a in 0..n {
                let l = c.labels[a];
                if first[l] == usize::MAX {
                    first[l] = a;
                } else {
                    uf.union(first[l], a);
                }
            }
        }
        uf.to_congruence()
    }

    /// Whether this partition is compatible with both operations of `alg`.
    pub fn is_congruence_of(&self, alg: &FiniteAlgebra) -> bool {
        let n = alg.size();
        if self.labels.len() != n {
            return false;
        }
        for a in 0..n {
            for a2 in 0..n {
                if a == a2 || !self.related(a, a2) {
                    continue;
                }
                for b in 0..n {
                    if !self.related(alg.meet(a, b), alg.meet(a2, b)) || !self.related(alg.meet(b, a), alg.meet(b, a2))
                    {
                        return false;
                    }
                    for c in 0..n {
                        if !self.related(alg.d(a, b, c), alg.d(a2, b, c))
                            || !self.related(alg.d(b, a, c), alg.d(b, a2, c))
                            || !self.related(alg.d(b, c, a), alg.d(b, c, a2))
                        {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// Returns true when two classes were merged.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }

    fn to_congruence(&mut self) -> Congruence {
        let raw: Vec<usize> = (0..self.parent.len()).map(|a| self.find(a)).collect();
        Congruence::from_labels(&raw)
    }
}

/// The congruence generated by a set of pairs.
pub fn congruence_generated(alg: &FiniteAlgebra, pairs: &[(usize, usize)]) -> Congruence {
    let n = alg.size();
    let mut uf = UnionFind::new(n);
    let mut work: Vec<(usize, usize)> = Vec::new();
    for &(a, b) in pairs {
        if uf.union(a, b) {
            work.push((a, b));
        }
    }
    while let Some((x, y)) = work.pop() {
        let mut images = Vec::with_capacity(2 * n + 3 * n * n);
        for c in 0..n {
            images.push((alg.meet(x, c), alg.meet(y, c)));
            images.push((alg.meet(c, x), alg.meet(c, y)));
            for e in 0..n {
                images.push((alg.d(x, c, e), alg.d(y, c, e)));
                images.push((alg.d(c, x, e), alg.d(c, y, e)));
                images.push((alg.d(c, e, x), alg.d(c, e, y)));
            }
        }
        for (u, v) in images {
            if uf.union(u, v) {
                work.push((u, v));
            }
        }
    }
    uf.to_congruence()
}

pub fn principal(alg: &FiniteAlgebra, a: usize, b: usize) -> Congruence {
    congruence_generated(alg, &[(a, b)])
}

fn lattice_order(mut list: Vec<Congruence>) -> Vec<Congruence> {
    list.sort_by(|x, y| y.block_count().cmp(&x.block_count()).then_with(|| x.cmp(y)));
    list.dedup();
    list
}

/// All congruences, built from principal congruences by joins. Finer
/// congruences come first; ties are broken lexicographically on labels.
pub fn all_congruences(alg: &FiniteAlgebra) -> Vec<Congruence> {
    let n = alg.size();
    let mut found: BTreeSet<Congruence> = BTreeSet::new();
    found.insert(Congruence::identity(n));
    let mut principals = BTreeSet::new();
    for a in 0..n {
        for b in a + 1..n {
            principals.insert(principal(alg, a, b));
        }
    }
    found.extend(principals.iter().cloned());
    // Every congruence is a join of principal ones, so joining with
    // principals until nothing new appears reaches the whole lattice.
    let mut frontier: Vec<Congruence> = found.iter().cloned().collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for c in &frontier {
            for p in &principals {
                let j = c.join(p);
                if found.insert(j.clone()) {
                    next.push(j);
                }
            }
        }
        frontier = next;
    }
    lattice_order(found.into_iter().collect())
}

/// Largest universe for [`all_congruences_exhaustive`].
pub const EXHAUSTIVE_LIMIT: usize = 6;

/// All congruences by testing every partition; universes up to
/// [`EXHAUSTIVE_LIMIT`] elements.
pub fn all_congruences_exhaustive(alg: &FiniteAlgebra) -> Result<Vec<Congruence>> {
    let n = alg.size();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::CapExceeded { what: "exhaustive congruence search universe".into(), cap: EXHAUSTIVE_LIMIT });
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    // Restricted growth strings enumerate each set partition once.
    fn rec(pos: usize, max: usize, rgs: &mut Vec<usize>, alg: &FiniteAlgebra, out: &mut Vec<Congruence>) {
        if pos == rgs.len() {
            let c = Congruence::from_labels(rgs);
            if c.is_congruence_of(alg) {
                out.push(c);
            }
            return;
        }
        for v in 0..=max + 1 {
            rgs[pos] = v;
            rec(pos + 1, max.max(v), rgs, alg, out);
        }
    }
    if n > 0 {
        rec(1, 0, &mut rgs, alg, &mut out);
    }
    Ok(lattice_order(out))
}

/// All covering pairs `α ≺ β` in the interval `[0, θ]`.
pub fn covers_below(alg: &FiniteAlgebra, theta: &Congruence) -> Result<Vec<(Congruence, Congruence)>> {
    if !theta.is_congruence_of(alg) {
        return Err(Error::Domain(format!("{theta:?} is not a congruence of {}", alg.name())));
    }
    let interval: Vec<Congruence> = all_congruences(alg).into_iter().filter(|c| c.le(theta)).collect();
    Ok(covers_in(&interval))
}

/// Covering pairs within an explicit list of congruences.
pub fn covers_in(list: &[Congruence]) -> Vec<(Congruence, Congruence)> {
    let mut out = Vec::new();
    for a in list {
        for b in list {
            if a == b || !a.le(b) {
                continue;
            }
            let between = list.iter().any(|g| g != a && g != b && a.le(g) && g.le(b));
            if !between {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::named;

    #[test]
    fn m2_and_trivial() {
        let m2 = named::m2();
        assert_eq!(all_congruences(&m2), vec![Congruence::identity(2), Congruence::full(2)]);
        let one = FiniteAlgebra::from_fns("one", 1, |a, _| a, |a, _, _| a).unwrap();
        assert_eq!(all_congruences(&one), vec![Congruence::identity(1)]);
    }

    #[test]
    fn l4_lattice() {
        let l4 = named::l4();
        let cons = all_congruences(&l4);
        let rees = Congruence::from_blocks(3, &[vec![0, 1], vec![2]]).unwrap();
        assert!(cons.contains(&Congruence::identity(3)));
        assert!(cons.contains(&Congruence::full(3)));
        assert!(cons.contains(&rees));
        assert_eq!(covers_below(&l4, &rees).unwrap(), vec![(Congruence::identity(3), rees.clone())]);
        assert!(covers_below(&l4, &Congruence::identity(3)).unwrap().is_empty());
        let m2 = named::m2();
        assert_eq!(
            covers_below(&m2, &Congruence::full(2)).unwrap(),
            vec![(Congruence::identity(2), Congruence::full(2))]
        );
    }

    #[test]
    fn principal_generation_matches_exhaustive() {
        for alg in [
            named::m2(),
            named::l4(),
            named::z3(),
            named::chain3(),
            named::unital3(),
            named::flat_xor(),
            named::zmod(4),
            named::broken3(),
        ] {
            assert_eq!(all_congruences(&alg), all_congruences_exhaustive(&alg).unwrap(), "{}", alg.name());
        }
    }

    #[test]
    fn rejects_non_congruence_theta() {
        let l4 = named::l4();
        let bad = Congruence::from_blocks(3, &[vec![0], vec![1, 2]]).unwrap();
        assert!(covers_below(&l4, &bad).is_err());
    }
}
