//! Semilattice-of-Mal'cev-blocks structure: detection, regularization,
//! Rees congruence and least blocks.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::FiniteAlgebra;
use crate::congruence::{all_congruences, Congruence};
use crate::error::{Error, Result};

/// Shape of the block semilattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderShape {
    /// A single block.
    Malcev,
    /// A chain of at least two blocks.
    Linear,
    /// A least block below at least two pairwise incomparable maximal blocks.
    Flat,
    /// Every principal down-set is a chain.
    Tree,
    General,
}

impl fmt::Display for OrderShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OrderShape::Malcev => "malcev",
            OrderShape::Linear => "linear",
            OrderShape::Flat => "flat",
            OrderShape::Tree => "tree",
            OrderShape::General => "general",
        };
        f.write_str(s)
    }
}

/// A verified SMB decomposition of an algebra.
#[derive(Clone)]
pub struct SmbStructure {
    algebra: Arc<FiniteAlgebra>,
    sim: Congruence,
    blocks: Vec<Vec<usize>>,
    block_meet: Vec<usize>,
    least_block: Option<usize>,
    is_regular: bool,
    unit: Option<usize>,
    shape: OrderShape,
}

impl fmt::Debug for SmbStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmbStructure")
            .field("algebra", &self.algebra.name())
            .field("blocks", &self.blocks)
            .field("least_block", &self.least_block)
            .field("regular", &self.is_regular)
            .field("unit", &self.unit)
            .field("shape", &self.shape)
            .finish()
    }
}

/// Outcome of checking one regularity identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub holds: bool,
    pub witness: Option<Vec<usize>>,
}

/// Names of the checked identities, in checking order.
pub const IDENTITIES: [&str; 5] = [
    "block(d(x,y,z)) = block((x^y)^z)",
    "[y] >= [x] implies x^y = x",
    "d(x,y,z) = d(x^(z^y), y^(z^x), z^(y^x))",
    "x^(x^y) = x^y",
    "x^y = d(y,y,x) = d(x,y,y)",
];

/// Checks the four regularity identities and the derived fifth one
/// exhaustively, relative to `sim`.
pub fn identity_report(alg: &FiniteAlgebra, sim: &Congruence) -> Vec<IdentityCheck> {
    let n = alg.size();
    let m = |a, b| alg.meet(a, b);
    let mut wit: [Option<Vec<usize>>; 5] = Default::default();
    for x in 0..n {
        for y in 0..n {
            // [y] >= [x] means the block of x^y is [x].
            if wit[1].is_none() && sim.related(m(x, y), x) && m(x, y) != x {
                wit[1] = Some(vec![x, y]);
            }
            if wit[3].is_none() && m(x, m(x, y)) != m(x, y) {
                wit[3] = Some(vec![x, y]);
            }
            if wit[4].is_none() && (alg.d(y, y, x) != m(x, y) || alg.d(x, y, y) != m(x, y)) {
                wit[4] = Some(vec![x, y]);
            }
            for z in 0..n {
                if wit[0].is_none() && !sim.related(alg.d(x, y, z), m(m(x, y), z)) {
                    wit[0] = Some(vec![x, y, z]);
                }
                if wit[2].is_none() && alg.d(x, y, z) != alg.d(m(x, m(z, y)), m(y, m(z, x)), m(z, m(y, x))) {
                    wit[2] = Some(vec![x, y, z]);
                }
            }
        }
    }
    IDENTITIES
        .iter()
        .zip(wit)
        .map(|(name, w)| IdentityCheck { identity: name.to_string(), holds: w.is_none(), witness: w })
        .collect()
}

fn first_failure(report: &[IdentityCheck]) -> Option<&IdentityCheck> {
    report.iter().find(|c| !c.holds)
}

/// Why `sim` fails to be an SMB congruence, with a witness tuple.
fn smb_violation(alg: &FiniteAlgebra, sim: &Congruence) -> Option<(String, Vec<usize>)> {
    let n = alg.size();
    if !sim.is_congruence_of(alg) {
        return Some(("partition is not a congruence".into(), vec![]));
    }
    for a in 0..n {
        for b in 0..n {
            if sim.related(a, b) {
                if alg.meet(a, b) != a {
                    return Some(("meet is not first projection on a block".into(), vec![a, b]));
                }
                if alg.d(a, a, b) != b || alg.d(b, a, a) != b {
                    return Some(("d is not Mal'cev on a block".into(), vec![a, b]));
                }
            } else if !sim.related(alg.meet(a, b), alg.meet(b, a)) {
                return Some(("block meet is not commutative".into(), vec![a, b]));
            }
            for c in 0..n {
                if !sim.related(alg.meet(alg.meet(a, b), c), alg.meet(a, alg.meet(b, c))) {
                    return Some(("block meet is not associative".into(), vec![a, b, c]));
                }
            }
        }
    }
    None
}

impl SmbStructure {
    /// Builds the structure for a congruence already known to satisfy the
    /// SMB axioms.
    fn assemble(algebra: Arc<FiniteAlgebra>, sim: Congruence) -> Self {
        let blocks = sim.blocks();
        let k = blocks.len();
        let mut block_meet = vec![0; k * k];
        for x in 0..k {
            for y in 0..k {
                block_meet[x * k + y] = sim.block_of(algebra.meet(blocks[x][0], blocks[y][0]));
            }
        }
        let le = |x: usize, y: usize| block_meet[x * k + y] == x;
        let least_block = (0..k).find(|&x| (0..k).all(|y| le(x, y)));
        let n = algebra.size();
        let unit = (0..n).find(|&u| (0..n).all(|x| algebra.meet(u, x) == x && algebra.meet(x, u) == x));
        let is_regular = first_failure(&identity_report(&algebra, &sim)).is_none();
        let shape = classify(k, &le);
        SmbStructure { algebra, sim, blocks, block_meet, least_block, is_regular, unit, shape }
    }

    /// The structure induced by the canonical relation `x^y = x ∧ y^x = y`.
    /// Returns an error when that relation does not satisfy the axioms.
    pub fn from_meet_relation(algebra: Arc<FiniteAlgebra>) -> Result<Self> {
        let n = algebra.size();
        let mut labels: Vec<usize> = (0..n).collect();
        for a in 0..n {
            for b in 0..a {
                if algebra.meet(a, b) == a && algebra.meet(b, a) == b {
                    labels[a] = labels[b];
                    break;
                }
            }
        }
        let sim = Congruence::from_labels(&labels);
        if let Some((reason, witness)) = smb_violation(&algebra, &sim) {
            return Err(Error::NotSmb { reason, witness });
        }
        Ok(Self::assemble(algebra, sim))
    }

    pub fn algebra(&self) -> &Arc<FiniteAlgebra> {
        &self.algebra
    }

    pub fn sim(&self) -> &Congruence {
        &self.sim
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    #[inline]
    pub fn block_of(&self, a: usize) -> usize {
        self.sim.block_of(a)
    }

    #[inline]
    pub fn block_meet(&self, x: usize, y: usize) -> usize {
        self.block_meet[x * self.blocks.len() + y]
    }

    /// Block order: `x ≤ y` iff `x ∧ y = x`.
    #[inline]
    pub fn block_le(&self, x: usize, y: usize) -> bool {
        self.block_meet(x, y) == x
    }

    pub fn least_block(&self) -> Option<usize> {
        self.least_block
    }

    /// Blocks with nothing strictly above them.
    pub fn maximal_blocks(&self) -> Vec<usize> {
        let k = self.blocks.len();
        (0..k).filter(|&x| (0..k).all(|y| y == x || !self.block_le(x, y))).collect()
    }

    /// The largest block, if the block semilattice has one.
    pub fn top_block(&self) -> Option<usize> {
        let k = self.blocks.len();
        (0..k).find(|&x| (0..k).all(|y| self.block_le(y, x)))
    }

    pub fn is_regular(&self) -> bool {
        self.is_regular
    }

    pub fn unit(&self) -> Option<usize> {
        self.unit
    }

    pub fn is_unital(&self) -> bool {
        self.unit.is_some()
    }

    pub fn shape(&self) -> OrderShape {
        self.shape
    }

    pub fn is_malcev(&self) -> bool {
        self.blocks.len() == 1
    }

    /// Whether the block order is a chain (including a single block).
    pub fn is_chain(&self) -> bool {
        matches!(self.shape, OrderShape::Malcev | OrderShape::Linear)
    }

    /// Whether every non-least block is maximal (including chains of at
    /// most two blocks).
    pub fn is_flat(&self) -> bool {
        match self.shape {
            OrderShape::Malcev | OrderShape::Flat => true,
            OrderShape::Linear => self.blocks.len() == 2,
            _ => false,
        }
    }

    /// The least block as an element set.
    pub fn min_elems(&self) -> Result<&[usize]> {
        self.least_block
            .map(|b| self.blocks[b].as_slice())
            .ok_or_else(|| Error::Structure(format!("{} has no least block", self.algebra.name())))
    }

    /// The Rees congruence `min(A)² ∪ Δ`.
    pub fn rees(&self) -> Result<Congruence> {
        let min = self.min_elems()?;
        let n = self.algebra.size();
        let labels: Vec<usize> = (0..n).map(|a| if min.contains(&a) { min[0] } else { a }).collect();
        Ok(Congruence::from_labels(&labels))
    }

    pub fn identity_report(&self) -> Vec<IdentityCheck> {
        identity_report(&self.algebra, &self.sim)
    }
}

pub(crate) fn classify(k: usize, le: &dyn Fn(usize, usize) -> bool) -> OrderShape {
    if k == 1 {
        return OrderShape::Malcev;
    }
    let comparable = |x, y| le(x, y) || le(y, x);
    let chain = (0..k).all(|x| (0..k).all(|y| comparable(x, y)));
    if chain {
        return OrderShape::Linear;
    }
    let least = (0..k).find(|&x| (0..k).all(|y| le(x, y)));
    if let Some(o) = least {
        let flat = (0..k).all(|x| x == o || (0..k).all(|y| y == x || y == o || !le(x, y)));
        if flat {
            return OrderShape::Flat;
        }
    }
    let tree = (0..k).all(|top| {
        let below: Vec<usize> = (0..k).filter(|&x| le(x, top)).collect();
        below.iter().all(|&x| below.iter().all(|&y| comparable(x, y)))
    });
    if tree {
        OrderShape::Tree
    } else {
        OrderShape::General
    }
}

/// Finds the finest congruence making `alg` an SMB algebra.
pub fn detect_smb(alg: &FiniteAlgebra) -> Result<SmbStructure> {
    let n = alg.size();
    for a in 0..n {
        if alg.meet(a, a) != a || alg.d(a, a, a) != a {
            return Err(Error::NotSmb { reason: "not idempotent".into(), witness: vec![a] });
        }
    }
    let candidates = all_congruences(alg);
    let mut first_failure = None;
    for sim in &candidates {
        match smb_violation(alg, sim) {
            None => return Ok(SmbStructure::assemble(Arc::new(alg.clone()), sim.clone())),
            Some(v) => {
                first_failure.get_or_insert(v);
            }
        }
    }
    // The equality congruence comes first; its failure names the broken
    // semilattice law directly.
    let (reason, witness) = first_failure.unwrap_or_else(|| ("no congruences".into(), vec![]));
    Err(Error::NotSmb { reason, witness })
}

/// The idempotent power of `x ↦ a∧x`, as a table over the universe.
fn idempotent_power(alg: &FiniteAlgebra, a: usize) -> Vec<usize> {
    let n = alg.size();
    let f: Vec<usize> = (0..n).map(|x| alg.meet(a, x)).collect();
    let mut g = f.clone();
    // The cyclic semigroup generated by f contains exactly one idempotent.
    for _ in 0..=n * n + 1 {
        let gg: Vec<usize> = g.iter().map(|&x| g[x]).collect();
        if gg == g {
            return g;
        }
        g = g.iter().map(|&x| f[x]).collect();
    }
    unreachable!("idempotent power exists within n steps past the index and period")
}

/// Replaces the operations by the regular term operations `∧′` and `d′`.
/// The congruence is unchanged and `d′` agrees with `d` inside blocks.
pub fn regularize(smb: &SmbStructure) -> Result<SmbStructure> {
    let alg = smb.algebra();
    if smb.is_regular {
        return Ok(smb.clone());
    }
    let n = alg.size();
    let powers: Vec<Vec<usize>> = (0..n).map(|a| idempotent_power(alg, a)).collect();
    let m2 = |a: usize, b: usize| powers[a][b];
    let reg =
        FiniteAlgebra::from_fns(alg.name(), n, m2, |x, y, z| alg.d(m2(x, m2(z, y)), m2(y, m2(z, x)), m2(z, m2(y, x))))?;
    let report = identity_report(&reg, &smb.sim);
    if let Some(fail) = first_failure(&report) {
        return Err(Error::RegularizationFailed {
            identity: fail.identity.clone(),
            witness: fail.witness.clone().unwrap_or_default(),
        });
    }
    if let Some((reason, witness)) = smb_violation(&reg, &smb.sim) {
        return Err(Error::RegularizationFailed { identity: reason, witness });
    }
    Ok(SmbStructure::assemble(Arc::new(reg), smb.sim.clone()))
}

/// Detects and regularizes in one step.
pub fn regular_structure(alg: &FiniteAlgebra) -> Result<SmbStructure> {
    regularize(&detect_smb(alg)?)
}

/// The least block of the subalgebra on `sub`.
pub fn min_of(sub: &[usize], smb: &SmbStructure) -> Result<Vec<usize>> {
    if sub.is_empty() || !smb.algebra.is_subuniverse(sub) {
        return Err(Error::Domain(format!("{sub:?} is not a subuniverse of {}", smb.algebra.name())));
    }
    let blocks: std::collections::BTreeSet<usize> = sub.iter().map(|&a| smb.block_of(a)).collect();
    let least = blocks
        .iter()
        .copied()
        .find(|&x| blocks.iter().all(|&y| smb.block_le(x, y)))
        .ok_or_else(|| Error::Structure(format!("{sub:?} has no least block")))?;
    Ok(sub.iter().copied().filter(|&a| smb.block_of(a) == least).collect())
}

/// The Rees congruence of a structure with a least block.
pub fn rees_congruence(smb: &SmbStructure) -> Result<Congruence> {
    smb.rees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::named;

    #[test]
    fn m2_is_malcev() {
        let s = detect_smb(&named::m2()).unwrap();
        assert!(s.sim().is_full());
        assert_eq!(s.shape(), OrderShape::Malcev);
        assert!(s.is_regular());
        assert!(!s.is_unital());
        assert_eq!(s.rees().unwrap(), Congruence::full(2));
        assert_eq!(s.min_elems().unwrap(), &[0, 1]);
    }

    #[test]
    fn two_element_semilattice_is_linear() {
        let s = detect_smb(&named::chain(2)).unwrap();
        assert!(s.sim().is_identity());
        assert_eq!(s.shape(), OrderShape::Linear);
    }

    #[test]
    fn l4_blocks_and_min() {
        let s = detect_smb(&named::l4()).unwrap();
        assert_eq!(s.blocks(), &[vec![0, 1], vec![2]]);
        assert_eq!(s.shape(), OrderShape::Linear);
        assert!(s.is_regular());
        assert!(!s.is_unital());
        assert_eq!(s.rees().unwrap(), Congruence::from_blocks(3, &[vec![0, 1], vec![2]]).unwrap());
        assert_eq!(min_of(&[0, 1, 2], &s).unwrap(), vec![0, 1]);
        assert_eq!(min_of(&[2], &s).unwrap(), vec![2]);
        assert_eq!(regularize(&s).unwrap().algebra().meet_table(), named::l4().meet_table());
    }

    #[test]
    fn shapes_of_named_algebras() {
        assert_eq!(detect_smb(&named::flat(3)).unwrap().shape(), OrderShape::Flat);
        assert_eq!(detect_smb(&named::flat_xor()).unwrap().shape(), OrderShape::Flat);
        let u = detect_smb(&named::unital3()).unwrap();
        assert_eq!(u.unit(), Some(2));
        assert_eq!(u.shape(), OrderShape::Linear);
    }

    #[test]
    fn broken_table_is_not_smb() {
        match detect_smb(&named::broken3()) {
            Err(Error::NotSmb { witness, .. }) => assert_eq!(witness.len(), 3),
            other => panic!("expected NotSmb, got {other:?}"),
        }
    }

    /// FX with a perturbed cross-block `d` and a meet that is only
    /// eventually absorbing.
    fn irregular4() -> FiniteAlgebra {
        let base = named::flat_xor();
        let meet = |a: usize, b: usize| match (a, b) {
            (0, 2) | (0, 3) => 1,
            (1, 2) | (1, 3) => 0,
            _ => base.meet(a, b),
        };
        let d = |x: usize, y: usize, z: usize| {
            if x < 2 && y < 2 && z < 2 || x == y && y == z {
                base.d(x, y, z)
            } else {
                // any element of the right block
                let b = meet(meet(x, y), z);
                if b < 2 {
                    (b + x + y + z) % 2
                } else {
                    b
                }
            }
        };
        FiniteAlgebra::from_fns("FX~", 4, meet, d).unwrap()
    }

    #[test]
    fn regularize_repairs_identities() {
        let alg = irregular4();
        let s = detect_smb(&alg).unwrap();
        assert!(!s.is_regular());
        let r = regularize(&s).unwrap();
        assert!(r.identity_report().iter().all(|c| c.holds));
        assert_eq!(r.sim(), s.sim());
        let (a, b) = (r.algebra(), s.algebra());
        for x in 0..4 {
            for y in 0..4 {
                for z in 0..4 {
                    if s.sim().related(x, y) && s.sim().related(y, z) {
                        assert_eq!(a.d(x, y, z), b.d(x, y, z));
                    }
                }
            }
        }
        assert_eq!(detect_smb(a).unwrap().sim(), s.sim());
    }
}
