//! Per-domain structure: the induced subalgebra on a variable's domain,
//! its SMB decomposition and its congruence covers below the Rees congruence.
//!
//! Local indices are positions in the sorted element list.

use std::sync::{Arc, OnceLock};

use crate::algebra::FiniteAlgebra;
use crate::congruence::{covers_below, Congruence};
use crate::error::Result;
use crate::smb::SmbStructure;

pub struct SortInfo {
    elems: Vec<usize>,
    smb: SmbStructure,
    covers: OnceLock<Vec<(Congruence, Congruence)>>,
}

impl std::fmt::Debug for SortInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SortInfo({:?}, {:?})", self.elems, self.smb)
    }
}

impl SortInfo {
    pub fn new(alg: &FiniteAlgebra, elems: &[usize]) -> Result<SortInfo> {
        let local = Arc::new(alg.subalgebra(elems)?);
        let smb = SmbStructure::from_meet_relation(local)?;
        Ok(SortInfo { elems: elems.to_vec(), smb, covers: OnceLock::new() })
    }

    pub fn elems(&self) -> &[usize] {
        &self.elems
    }

    pub fn size(&self) -> usize {
        self.elems.len()
    }

    pub fn local(&self) -> &FiniteAlgebra {
        self.smb.algebra()
    }

    pub fn smb(&self) -> &SmbStructure {
        &self.smb
    }

    pub fn index_of(&self, global: usize) -> Option<usize> {
        self.elems.binary_search(&global).ok()
    }

    pub fn global(&self, local: usize) -> usize {
        self.elems[local]
    }

    pub fn is_malcev(&self) -> bool {
        self.smb.is_malcev()
    }

    pub fn unit(&self) -> Option<usize> {
        self.smb.unit().map(|u| self.elems[u])
    }

    pub fn is_unital(&self) -> bool {
        self.smb.is_unital()
    }

    /// Elements of the least block, in global labels.
    pub fn least_block(&self) -> Vec<usize> {
        let b = self.smb.least_block().expect("subalgebras of SMB algebras have a least block");
        self.smb.blocks()[b].iter().map(|&x| self.elems[x]).collect()
    }

    /// Blocks in global labels, in block-id order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        self.smb.blocks().iter().map(|b| b.iter().map(|&x| self.elems[x]).collect()).collect()
    }

    pub fn block_of(&self, global: usize) -> usize {
        self.smb.block_of(self.index_of(global).expect("element in domain"))
    }

    /// Whether the top block exists and is a single element.
    pub fn has_singleton_top(&self) -> bool {
        self.smb.top_block().is_some_and(|t| self.smb.blocks()[t].len() == 1)
    }

    /// Covers `α ≺ β` with `β ≤ θ`, in local indices.
    pub fn covers(&self) -> &[(Congruence, Congruence)] {
        self.covers.get_or_init(|| {
            let rees = self.smb.rees().expect("least block exists");
            covers_below(self.local(), &rees).expect("the Rees relation is a congruence")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::named;

    #[test]
    fn l4_sort() {
        let s = SortInfo::new(&named::l4(), &[0, 1, 2]).unwrap();
        assert!(!s.is_malcev());
        assert_eq!(s.least_block(), vec![0, 1]);
        assert!(s.has_singleton_top());
        assert!(!s.is_unital());
        // Covers below θ = {0,1}² ∪ Δ: only 0 ≺ θ.
        assert_eq!(s.covers().len(), 1);
        let sub = SortInfo::new(&named::l4(), &[0, 2]).unwrap();
        assert_eq!(sub.blocks(), vec![vec![0], vec![2]]);
        assert_eq!(sub.unit(), Some(2));
    }
}
