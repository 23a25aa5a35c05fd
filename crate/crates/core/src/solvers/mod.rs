//! The solving pipelines and the method dispatcher.
//!
//! Every pipeline regularizes the template first and decides the instance.
//! Witnesses come from singleton pinning: variables are fixed in order to
//! the smallest value that keeps the instance satisfiable, so every method
//! returns the lexicographically first solution.

pub mod elimination;
pub mod flat;
pub mod general;
pub mod linear;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::Caps;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::malcev;
use crate::oracle;
use crate::outcome::SolveOutcome;
use crate::smb::{detect_smb, regularize, OrderShape};

pub use elimination::{
    apply_retraction, decompose, enforce_weak_m_irreducibility, extract_consistent_maps, ConsistentMapSet,
    Decomposition, EliminationOutcome,
};
pub use flat::{compute_strands, solve_flat, Strand, StrandAnalysis};
pub use general::{chk_coh_set, coherent_sets, solve_general};
pub use linear::solve_linear;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Auto,
    Linear,
    Flat,
    General,
    Malcev,
    Bruteforce,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Auto, Method::Linear, Method::Flat, Method::General, Method::Malcev, Method::Bruteforce];

    pub fn name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Linear => "linear",
            Method::Flat => "flat",
            Method::General => "general",
            Method::Malcev => "malcev",
            Method::Bruteforce => "bruteforce",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Parse(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub witness: bool,
    /// Enables the oracle audits on instances whose search space is within `caps.audit`.
    pub audit: bool,
    pub caps: Caps,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { witness: false, audit: true, caps: Caps::default() }
    }
}

impl SolveOptions {
    pub fn with_witness(mut self, witness: bool) -> Self {
        self.witness = witness;
        self
    }

    /// Whether `inst` is small enough for an oracle audit.
    pub(crate) fn auditable(&self, inst: &Instance) -> bool {
        self.audit && oracle::search_space(inst) <= self.caps.audit
    }
}

/// Replaces every template algebra by its regular term reduct. Domains and
/// relations are unchanged since subuniverses survive passing to a reduct.
pub fn regularize_instance(inst: &Instance) -> Result<Instance> {
    let mut changed = false;
    let mut algebras = BTreeMap::new();
    for (name, alg) in inst.algebras() {
        let reg = regularize(&detect_smb(alg)?)?;
        let new = reg.algebra().as_ref().clone().renamed(name.clone());
        changed |= new.meet_table() != alg.meet_table() || new.maltsev_table() != alg.maltsev_table();
        algebras.insert(name.clone(), Arc::new(new));
    }
    Ok(if changed { inst.with_algebras(algebras) } else { inst.clone() })
}

/// The combined order shape of the algebras used by some variable.
pub fn template_shape(inst: &Instance) -> Result<OrderShape> {
    let mut used: Vec<&str> = inst.domains().iter().map(|d| d.algebra.as_str()).collect();
    used.sort_unstable();
    used.dedup();
    let mut shapes = Vec::new();
    for name in used {
        shapes.push(detect_smb(&inst.algebras()[name])?);
    }
    Ok(if shapes.iter().all(|s| s.is_malcev()) {
        OrderShape::Malcev
    } else if shapes.iter().all(|s| s.is_chain()) {
        OrderShape::Linear
    } else if shapes.iter().all(|s| s.is_flat()) {
        OrderShape::Flat
    } else if shapes.iter().all(|s| matches!(s.shape(), OrderShape::Malcev | OrderShape::Linear | OrderShape::Tree)) {
        OrderShape::Tree
    } else {
        OrderShape::General
    })
}

/// The method `Auto` resolves to.
pub fn auto_method(inst: &Instance) -> Result<Method> {
    Ok(match template_shape(inst)? {
        OrderShape::Malcev => Method::Malcev,
        OrderShape::Linear => Method::Linear,
        OrderShape::Flat => Method::Flat,
        _ => Method::General,
    })
}

/// Decides `inst` with the chosen method.
pub fn solve(inst: &Instance, method: Method, opts: &SolveOptions) -> Result<SolveOutcome> {
    let out = match method {
        Method::Auto => {
            let m = auto_method(inst)?;
            let mut out = solve(inst, m, opts)?;
            out.trace.method = format!("auto:{}", m.name());
            return Ok(out);
        }
        Method::Linear => solve_linear(inst, opts)?,
        Method::Flat => solve_flat(inst, opts)?,
        Method::General => solve_general(inst, opts)?,
        Method::Malcev => {
            let mut out = malcev::malcev_solve(inst, &[], opts.witness)?;
            out.trace.method = "malcev".into();
            out
        }
        Method::Bruteforce => {
            let mut out = oracle::brute_force(inst, opts.caps.oracle)?;
            if !opts.witness {
                out.witness = None;
            }
            out
        }
    };
    out.verify(inst)?;
    Ok(out)
}

/// Singleton pinning: fixes variables in order to the least value for which
/// `decide` still answers SAT. The last candidate of a domain is taken
/// without a query since the current instance is known to be satisfiable.
pub(crate) fn extract_witness(
    inst: &Instance,
    mut decide: impl FnMut(&Instance) -> Result<bool>,
) -> Result<Vec<usize>> {
    let mut cur = inst.clone();
    let mut w = Vec::with_capacity(inst.len());
    for v in 0..inst.len() {
        let dom = cur.domain(v).to_vec();
        let mut chosen = None;
        for (k, &a) in dom.iter().enumerate() {
            let pinned = cur.pin(&[(v, a)])?;
            if k + 1 == dom.len() || decide(&pinned)? {
                chosen = Some((a, pinned));
                break;
            }
        }
        let (a, pinned) = chosen
            .ok_or_else(|| Error::Invariant(format!("no value left for {} while pinning", inst.variables()[v])))?;
        w.push(a);
        cur = pinned;
    }
    if !inst.is_solution(&w) {
        return Err(Error::Invariant(format!("pinned assignment {w:?} is not a solution")));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceBuilder;
    use crate::named;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("gauss".parse::<Method>().is_err());
    }

    #[test]
    fn auto_picks_by_shape() {
        let m2 = InstanceBuilder::new().algebra(named::m2()).var("x", "M2").build().unwrap();
        assert_eq!(auto_method(&m2).unwrap(), Method::Malcev);
        let l4 = InstanceBuilder::new().algebra(named::l4()).var("x", "L4").build().unwrap();
        assert_eq!(auto_method(&l4).unwrap(), Method::Linear);
        let f = InstanceBuilder::new().algebra(named::flat(3)).var("x", "F3").build().unwrap();
        assert_eq!(auto_method(&f).unwrap(), Method::Flat);
    }

    #[test]
    fn regularization_keeps_regular_templates() {
        let inst = InstanceBuilder::new().algebra(named::l4()).var("x", "L4").build().unwrap();
        assert_eq!(regularize_instance(&inst).unwrap(), inst);
    }
}
