//! Corpora and test-local oracles shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use smb_core::algebra::{close_tuples, FiniteAlgebra};
use smb_core::generate::{gen_algebra, gen_shaped_instance, rng_from_seed, AlgebraParams, InstanceParams};
use smb_core::{named, Instance, OrderShape};

pub const SHAPES: [OrderShape; 5] =
    [OrderShape::Malcev, OrderShape::Linear, OrderShape::Flat, OrderShape::Tree, OrderShape::General];

/// Every solution, enumerated directly in lexicographic order.
pub fn naive_solutions(inst: &Instance) -> Vec<Vec<usize>> {
    let n = inst.len();
    let doms: Vec<&[usize]> = (0..n).map(|i| inst.domain(i)).collect();
    if doms.iter().any(|d| d.is_empty()) {
        return Vec::new();
    }
    let mut idx = vec![0; n];
    let mut out = Vec::new();
    loop {
        let f: Vec<usize> = (0..n).map(|i| doms[i][idx[i]]).collect();
        let ok = inst.constraints().iter().all(|(scope, rel)| {
            let t: Vec<usize> = scope.iter().map(|&v| f[v]).collect();
            rel.contains(&t)
        });
        if ok {
            out.push(f);
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < doms[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Product of the domain sizes.
pub fn space(inst: &Instance) -> u64 {
    (0..inst.len()).map(|i| inst.domain(i).len() as u64).product()
}

/// Regular SMB algebras of every shape, with and without a unit, plus the named ones.
pub fn algebra_corpus(seeds: u64) -> Vec<FiniteAlgebra> {
    let mut out = vec![
        named::m2(),
        named::z3(),
        named::l4(),
        named::unital3(),
        named::chain3(),
        named::flat(2),
        named::flat(3),
        named::flat_xor(),
    ];
    for seed in 0..seeds {
        for shape in SHAPES {
            for unit in [false, true] {
                let blocks = match shape {
                    OrderShape::Malcev => 1,
                    OrderShape::Linear | OrderShape::Flat => 2 + (seed % 2) as usize,
                    _ => 3 + (seed % 2) as usize,
                };
                let mut p = AlgebraParams::new(&format!("G{seed}{shape:?}{unit}"), shape, blocks);
                p.unit = unit;
                if let Ok(a) = gen_algebra(&p, &mut rng_from_seed(seed)) {
                    out.push(a);
                }
            }
        }
    }
    out
}

/// A subdirect relation with its coordinate algebras.
pub struct Subdirect {
    pub algebras: Vec<FiniteAlgebra>,
    pub tuples: Vec<Vec<usize>>,
}

impl Subdirect {
    pub fn refs(&self) -> Vec<&FiniteAlgebra> {
        self.algebras.iter().collect()
    }

    /// The relation as an algebra on tuple indices.
    pub fn algebra(&self) -> FiniteAlgebra {
        let ts = &self.tuples;
        let algs = &self.algebras;
        let idx = |t: Vec<usize>| ts.binary_search(&t).expect("closed relation");
        FiniteAlgebra::from_fns(
            "R",
            ts.len(),
            |a, b| idx((0..algs.len()).map(|k| algs[k].meet(ts[a][k], ts[b][k])).collect()),
            |a, b, c| idx((0..algs.len()).map(|k| algs[k].d(ts[a][k], ts[b][k], ts[c][k])).collect()),
        )
        .unwrap()
    }
}

/// Random subdirect relations of the given arity, relabelled so that every
/// coordinate algebra is exactly the projection.
pub fn subdirect_corpus(count: usize, arity: usize, max_tuples: usize, seed: u64) -> Vec<Subdirect> {
    let algs = algebra_corpus(4);
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < count && tries < count * 200 {
        tries += 1;
        let chosen: Vec<&FiniteAlgebra> = (0..arity).map(|_| algs.choose(&mut rng).unwrap()).collect();
        let gens: Vec<Vec<usize>> =
            (0..rng.gen_range(1..=3)).map(|_| chosen.iter().map(|a| rng.gen_range(0..a.size())).collect()).collect();
        let Ok(rel) = close_tuples(&chosen, gens, 4096) else { continue };
        if rel.len() > max_tuples || rel.len() < 2 {
            continue;
        }
        let mut algebras = Vec::new();
        let mut projs = Vec::new();
        for (k, a) in chosen.iter().enumerate() {
            let mut p: Vec<usize> = rel.iter().map(|t| t[k]).collect();
            p.sort_unstable();
            p.dedup();
            algebras.push(a.subalgebra(&p).unwrap());
            projs.push(p);
        }
        let mut tuples: Vec<Vec<usize>> = rel
            .iter()
            .map(|t| t.iter().enumerate().map(|(k, x)| projs[k].binary_search(x).unwrap()).collect())
            .collect();
        tuples.sort();
        out.push(Subdirect { algebras, tuples });
    }
    out
}

/// Small generated instances of every shape.
pub fn instance_corpus(count: u64, max_vars: usize, seed_base: u64) -> Vec<Instance> {
    let mut out = Vec::new();
    for seed in seed_base..seed_base + count {
        let shape = SHAPES[(seed % 5) as usize];
        let mut p = InstanceParams::default();
        p.variables = 2 + (seed as usize % (max_vars - 1));
        p.constraints = 2 + (seed % 5) as usize;
        p.max_arity = 2 + (seed % 2) as usize;
        p.generators = 1 + (seed % 3) as usize;
        p.planted = seed % 3 == 0;
        if let Ok(inst) = gen_shaped_instance(shape, seed, &p) {
            out.push(inst);
        }
    }
    out
}
