//! Finite algebras `(A; ∧, d)` given by operation tables over the universe `0..n`.
//!
//! Subuniverses are plain sorted element lists. Relations over several
//! algebras are closed coordinatewise with [`close_tuples`].

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An idempotent algebra with a binary operation `∧` and a ternary operation `d`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FiniteAlgebra {
    name: String,
    size: usize,
    meet: Vec<usize>,
    maltsev: Vec<usize>,
}

impl fmt::Debug for FiniteAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteAlgebra({}, n={})", self.name, self.size)
    }
}

/// JSON form of an algebra. `blocks` is an optional hint that is checked,
/// never trusted.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct AlgebraJson {
    pub name: String,
    pub size: usize,
    pub meet: Vec<Vec<usize>>,
    pub maltsev: Vec<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<usize>>>,
}

impl FiniteAlgebra {
    /// Builds an algebra from flat row-major tables, checking closure and idempotence.
    pub fn new(name: impl Into<String>, size: usize, meet: Vec<usize>, maltsev: Vec<usize>) -> Result<Self> {
        let name = name.into();
        if size == 0 {
            return Err(Error::Invalid(format!("algebra {name}: empty universe")));
        }
        if meet.len() != size * size || maltsev.len() != size * size * size {
            return Err(Error::Invalid(format!("algebra {name}: table dimensions do not match size {size}")));
        }
        if let Some(v) = meet.iter().chain(maltsev.iter()).find(|&&v| v >= size) {
            return Err(Error::Invalid(format!("algebra {name}: table entry {v} outside 0..{size}")));
        }
        let alg = FiniteAlgebra { name, size, meet, maltsev };
        for a in 0..size {
            if alg.meet(a, a) != a || alg.d(a, a, a) != a {
                return Err(Error::Invalid(format!("algebra {}: not idempotent at {a}", alg.name)));
            }
        }
        Ok(alg)
    }

    /// Builds an algebra by tabulating two closures.
    pub fn from_fns(
        name: impl Into<String>,
        size: usize,
        meet: impl Fn(usize, usize) -> usize,
        d: impl Fn(usize, usize, usize) -> usize,
    ) -> Result<Self> {
        let mut m = Vec::with_capacity(size * size);
        for a in 0..size {
            for b in 0..size {
                m.push(meet(a, b));
            }
        }
        let mut t = Vec::with_capacity(size * size * size);
        for a in 0..size {
            for b in 0..size {
                for c in 0..size {
                    t.push(d(a, b, c));
                }
            }
        }
        Self::new(name, size, m, t)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    #[inline]
    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a * self.size + b]
    }

    #[inline]
    pub fn d(&self, a: usize, b: usize, c: usize) -> usize {
        self.maltsev[(a * self.size + b) * self.size + c]
    }

    pub fn meet_table(&self) -> &[usize] {
        &self.meet
    }

    pub fn maltsev_table(&self) -> &[usize] {
        &self.maltsev
    }

    fn check_elements(&self, set: &[usize]) -> Result<()> {
        match set.iter().find(|&&a| a >= self.size) {
            Some(a) => Err(Error::Domain(format!("element {a} outside universe of {}", self.name))),
            None => Ok(()),
        }
    }

    /// The least subuniverse containing `seed`, sorted ascending.
    pub fn generate_subuniverse(&self, seed: &[usize]) -> Result<Vec<usize>> {
        self.check_elements(seed)?;
        let mut inside = vec![false; self.size];
        let mut items: Vec<usize> = Vec::new();
        for &a in seed {
            if !inside[a] {
                inside[a] = true;
                items.push(a);
            }
        }
        // Semi-naive closure: every combination is tried once its newest argument arrives.
        let mut k = 0;
        while k < items.len() {
            let x = items[k];
            let mut fresh = Vec::new();
            for i in 0..=k {
                let y = items[i];
                fresh.push(self.meet(x, y));
                fresh.push(self.meet(y, x));
                for j in 0..=k {
                    let z = items[j];
                    fresh.push(self.d(x, y, z));
                    fresh.push(self.d(y, x, z));
                    fresh.push(self.d(y, z, x));
                }
            }
            for v in fresh {
                if !inside[v] {
                    inside[v] = true;
                    items.push(v);
                }
            }
            k += 1;
        }
        Ok((0..self.size).filter(|&a| inside[a]).collect())
    }

    /// Whether `set` is closed under both operations.
    pub fn is_subuniverse(&self, set: &[usize]) -> bool {
        if self.check_elements(set).is_err() {
            return false;
        }
        let mut inside = vec![false; self.size];
        for &a in set {
            inside[a] = true;
        }
        for &a in set {
            for &b in set {
                if !inside[self.meet(a, b)] {
                    return false;
                }
                for &c in set {
                    if !inside[self.d(a, b, c)] {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// The subalgebra on `elems`, relabelled to `0..elems.len()` in the given order.
    pub fn subalgebra(&self, elems: &[usize]) -> Result<FiniteAlgebra> {
        if elems.is_empty() {
            return Err(Error::Domain("empty subuniverse".into()));
        }
        if !self.is_subuniverse(elems) {
            return Err(Error::Domain(format!("{elems:?} is not a subuniverse of {}", self.name)));
        }
        let mut local = vec![usize::MAX; self.size];
        for (i, &a) in elems.iter().enumerate() {
            local[a] = i;
        }
        FiniteAlgebra::from_fns(
            format!("{}|{:?}", self.name, elems),
            elems.len(),
            |x, y| local[self.meet(elems[x], elems[y])],
            |x, y, z| local[self.d(elems[x], elems[y], elems[z])],
        )
    }

    /// A copy of this algebra whose operations on `image` are replaced.
    ///
    /// Used for polynomial retracts and regularized sorts: only the restriction
    /// to `image` is meaningful, the remaining entries keep the old values.
    pub fn patched(
        &self,
        name: impl Into<String>,
        image: &[usize],
        meet: impl Fn(usize, usize) -> usize,
        d: impl Fn(usize, usize, usize) -> usize,
    ) -> Result<FiniteAlgebra> {
        self.check_elements(image)?;
        let mut out = self.clone();
        out.name = name.into();
        let n = self.size;
        for &a in image {
            for &b in image {
                out.meet[a * n + b] = meet(a, b);
                for &c in image {
                    out.maltsev[(a * n + b) * n + c] = d(a, b, c);
                }
            }
        }
        if !out.is_subuniverse(image) {
            return Err(Error::Domain(format!("patched operations leave {image:?}")));
        }
        Ok(out)
    }

    pub fn to_json(&self, blocks: Option<Vec<Vec<usize>>>) -> AlgebraJson {
        let n = self.size;
        AlgebraJson {
            name: self.name.clone(),
            size: n,
            meet: (0..n).map(|a| (0..n).map(|b| self.meet(a, b)).collect()).collect(),
            maltsev: (0..n).map(|a| (0..n).map(|b| (0..n).map(|c| self.d(a, b, c)).collect()).collect()).collect(),
            blocks,
        }
    }

    /// Parses the JSON form. The `blocks` hint is returned separately for verification.
    pub fn from_json(j: &AlgebraJson) -> Result<(FiniteAlgebra, Option<Vec<Vec<usize>>>)> {
        let n = j.size;
        if j.meet.len() != n || j.meet.iter().any(|r| r.len() != n) {
            return Err(Error::Parse(format!("algebra {}: meet must be {n}x{n}", j.name)));
        }
        if j.maltsev.len() != n || j.maltsev.iter().any(|p| p.len() != n || p.iter().any(|r| r.len() != n)) {
            return Err(Error::Parse(format!("algebra {}: maltsev must be {n}x{n}x{n}", j.name)));
        }
        let meet = j.meet.iter().flatten().copied().collect();
        let maltsev = j.maltsev.iter().flatten().flatten().copied().collect();
        Ok((FiniteAlgebra::new(j.name.clone(), n, meet, maltsev)?, j.blocks.clone()))
    }

    pub fn parse(text: &str) -> Result<(FiniteAlgebra, Option<Vec<Vec<usize>>>)> {
        let j: AlgebraJson = serde_json::from_str(text)?;
        Self::from_json(&j)
    }
}

/// Closes a set of tuples under coordinatewise `∧` and `d`, where coordinate `k`
/// is interpreted in `algs[k]`. Returns the closure sorted; errors past `cap` tuples.
pub fn close_tuples(
    algs: &[&FiniteAlgebra],
    gens: impl IntoIterator<Item = Vec<usize>>,
    cap: usize,
) -> Result<Vec<Vec<usize>>> {
    let arity = algs.len();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut items: Vec<Vec<usize>> = Vec::new();
    for g in gens {
        debug_assert_eq!(g.len(), arity);
        if seen.insert(g.clone()) {
            items.push(g);
        }
    }
    let mut push = |t: Vec<usize>, items: &mut Vec<Vec<usize>>| -> Result<()> {
        if !seen.contains(&t) {
            if seen.len() >= cap {
                return Err(Error::CapExceeded { what: "subpower closure".into(), cap });
            }
            seen.insert(t.clone());
            items.push(t);
        }
        Ok(())
    };
    let mut k = 0;
    while k < items.len() {
        for i in 0..=k {
            let m1: Vec<usize> = (0..arity).map(|c| algs[c].meet(items[k][c], items[i][c])).collect();
            let m2: Vec<usize> = (0..arity).map(|c| algs[c].meet(items[i][c], items[k][c])).collect();
            push(m1, &mut items)?;
            push(m2, &mut items)?;
            for j in 0..=k {
                let (x, y, z) = (&items[k], &items[i], &items[j]);
                let t1: Vec<usize> = (0..arity).map(|c| algs[c].d(x[c], y[c], z[c])).collect();
                let t2: Vec<usize> = (0..arity).map(|c| algs[c].d(y[c], x[c], z[c])).collect();
                let t3: Vec<usize> = (0..arity).map(|c| algs[c].d(y[c], z[c], x[c])).collect();
                push(t1, &mut items)?;
                push(t2, &mut items)?;
                push(t3, &mut items)?;
            }
        }
        k += 1;
    }
    items.sort();
    Ok(items)
}

/// Whether a tuple set is closed under coordinatewise `∧` and `d`.
pub fn tuples_closed(algs: &[&FiniteAlgebra], tuples: &[Vec<usize>]) -> bool {
    let set: HashSet<&[usize]> = tuples.iter().map(|t| t.as_slice()).collect();
    let arity = algs.len();
    let mut buf = vec![0; arity];
    for x in tuples {
        for y in tuples {
            for c in 0..arity {
                buf[c] = algs[c].meet(x[c], y[c]);
            }
            if !set.contains(buf.as_slice()) {
                return false;
            }
            for z in tuples {
                for c in 0..arity {
                    buf[c] = algs[c].d(x[c], y[c], z[c]);
                }
                if !set.contains(buf.as_slice()) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::named;

    #[test]
    fn rejects_non_idempotent_tables() {
        let r = FiniteAlgebra::from_fns("bad", 2, |_, _| 0, |a, _, _| a);
        assert!(matches!(r, Err(Error::Invalid(_))));
    }

    #[test]
    fn subuniverse_examples() {
        let m2 = named::m2();
        assert_eq!(m2.generate_subuniverse(&[0]).unwrap(), vec![0]);
        assert_eq!(m2.generate_subuniverse(&[0, 1]).unwrap(), vec![0, 1]);
        let l4 = named::l4();
        assert_eq!(l4.generate_subuniverse(&[1, 2]).unwrap(), vec![0, 1, 2]);
        assert!(matches!(l4.generate_subuniverse(&[7]), Err(Error::Domain(_))));
    }

    /// Independent oracle: the least subuniverse is the intersection of all
    /// subuniverses containing the seed, found by enumerating subsets.
    fn sg_by_subsets(alg: &FiniteAlgebra, seed: &[usize]) -> Vec<usize> {
        let n = alg.size();
        let mut best: Option<Vec<usize>> = None;
        for mask in 0u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|&a| mask >> a & 1 == 1).collect();
            if seed.iter().all(|s| set.contains(s)) && alg.is_subuniverse(&set) {
                if best.as_ref().is_none_or(|b| set.len() < b.len()) {
                    best = Some(set);
                }
            }
        }
        best.unwrap()
    }

    #[test]
    fn closure_matches_subset_oracle() {
        for alg in [named::m2(), named::l4(), named::z3(), named::chain3()] {
            let n = alg.size();
            for mask in 1u32..(1 << n) {
                let seed: Vec<usize> = (0..n).filter(|&a| mask >> a & 1 == 1).collect();
                assert_eq!(alg.generate_subuniverse(&seed).unwrap(), sg_by_subsets(&alg, &seed));
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let l4 = named::l4();
        let j = l4.to_json(Some(vec![vec![0, 1], vec![2]]));
        let text = serde_json::to_string(&j).unwrap();
        let (back, hint) = FiniteAlgebra::parse(&text).unwrap();
        assert_eq!(back, l4);
        assert_eq!(hint, Some(vec![vec![0, 1], vec![2]]));
    }

    #[test]
    fn product_closure_of_xor_graph() {
        let m2 = named::m2();
        let algs = [&m2, &m2];
        let r = close_tuples(&algs, vec![vec![0, 1], vec![1, 0]], 100).unwrap();
        assert_eq!(r, vec![vec![0, 1], vec![1, 0]]);
        let r = close_tuples(&algs, vec![vec![0, 0], vec![0, 1], vec![1, 0]], 100).unwrap();
        assert_eq!(r.len(), 4);
        assert!(tuples_closed(&algs, &r));
    }
}
