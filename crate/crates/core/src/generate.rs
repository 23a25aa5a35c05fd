//! Seeded generators for SMB algebras and instances.
//!
//! Algebras are built from a semilattice of blocks `Z_m` with
//! `d(x,y,z) = x − y + z`, affine descent maps that compose along the order,
//! `a∧b` the descent of `a` into the block `[a]∧[b]`, and cross-block `d`
//! given by `d(x∧(z∧y), y∧(z∧x), z∧(y∧x))`. Every output is verified.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::algebra::{close_tuples, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::instance::{Domain, Instance, Relation};
use crate::smb::{detect_smb, OrderShape};

const RETRIES: usize = 500;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraParams {
    pub name: String,
    pub shape: OrderShape,
    /// Number of blocks, not counting an added unit.
    pub blocks: usize,
    pub max_block_size: usize,
    /// Bound on the universe size, unit included.
    pub max_size: usize,
    /// Adds a singleton top block acting as a two-sided unit.
    pub unit: bool,
    /// When false, cross-block operations are scrambled (still SMB, usually not regular).
    pub regular: bool,
}

impl AlgebraParams {
    pub fn new(name: &str, shape: OrderShape, blocks: usize) -> Self {
        AlgebraParams {
            name: name.to_string(),
            shape,
            blocks,
            max_block_size: 3,
            max_size: 4,
            unit: false,
            regular: true,
        }
    }
}

/// A finite meet-semilattice on `0..k`, with `0` the least element.
struct Semilattice {
    k: usize,
    meet: Vec<usize>,
}

impl Semilattice {
    fn m(&self, x: usize, y: usize) -> usize {
        self.meet[x * self.k + y]
    }

    fn le(&self, x: usize, y: usize) -> bool {
        self.m(x, y) == x
    }

    fn from_fn(k: usize, f: impl Fn(usize, usize) -> usize) -> Self {
        Semilattice { k, meet: (0..k * k).map(|i| f(i / k, i % k)).collect() }
    }

    /// Adds a new top element.
    fn with_top(&self) -> Self {
        let k = self.k;
        Semilattice::from_fn(k + 1, |x, y| match (x == k, y == k) {
            (true, _) => y,
            (_, true) => x,
            _ => self.m(x, y),
        })
    }

    fn lower_covers(&self, x: usize) -> Vec<usize> {
        let below: Vec<usize> = (0..self.k).filter(|&y| y != x && self.le(y, x)).collect();
        below.iter().copied().filter(|&y| !below.iter().any(|&z| z != y && self.le(y, z))).collect()
    }

    fn shape(&self) -> OrderShape {
        crate::smb::classify(self.k, &|x, y| self.le(x, y))
    }
}

fn random_semilattice(shape: OrderShape, k: usize, rng: &mut ChaCha8Rng) -> Result<Semilattice> {
    let k = k.max(1);
    let s = match shape {
        OrderShape::Malcev => Semilattice::from_fn(1, |_, _| 0),
        OrderShape::Linear => Semilattice::from_fn(k, |x, y| x.min(y)),
        OrderShape::Flat => Semilattice::from_fn(k.max(2), |x, y| if x == y { x } else { 0 }),
        OrderShape::Tree => {
            if k < 4 {
                return Err(Error::Invalid("tree-shaped semilattices need at least 4 blocks".into()));
            }
            let mut found = None;
            for _ in 0..RETRIES {
                let parent: Vec<usize> = (0..k).map(|x| if x == 0 { 0 } else { rng.gen_range(0..x) }).collect();
                let ancestors = |mut x: usize| {
                    let mut a = vec![x];
                    while x != 0 {
                        x = parent[x];
                        a.push(x);
                    }
                    a
                };
                let s = Semilattice::from_fn(k, |x, y| {
                    let ay = ancestors(y);
                    *ancestors(x).iter().find(|a| ay.contains(a)).unwrap()
                });
                if s.shape() == OrderShape::Tree {
                    found = Some(s);
                    break;
                }
            }
            found.ok_or_else(retry_error)?
        }
        OrderShape::General => {
            if k < 4 {
                return Err(Error::Invalid("non-tree semilattices need at least 4 blocks".into()));
            }
            let mut found = None;
            for _ in 0..RETRIES {
                // An intersection-closed family of subsets of a 4-element set.
                let mut family: Vec<u8> = vec![0b1111];
                let picks = rng.gen_range(2..=k);
                while family.len() <= picks {
                    family.push(rng.gen_range(0..16));
                }
                let mut closed = family.clone();
                loop {
                    let mut grew = false;
                    for i in 0..closed.len() {
                        for j in 0..closed.len() {
                            let c = closed[i] & closed[j];
                            if !closed.contains(&c) {
                                closed.push(c);
                                grew = true;
                            }
                        }
                    }
                    closed.sort_unstable();
                    closed.dedup();
                    if !grew {
                        break;
                    }
                }
                if closed.len() != k {
                    continue;
                }
                closed.sort_by_key(|s| (s.count_ones(), *s));
                let s = Semilattice::from_fn(k, |x, y| {
                    let c = closed[x] & closed[y];
                    closed.iter().position(|&z| z == c).unwrap()
                });
                if s.shape() == OrderShape::General {
                    found = Some(s);
                    break;
                }
            }
            found.ok_or_else(retry_error)?
        }
    };
    Ok(s)
}

fn retry_error() -> Error {
    Error::CapExceeded { what: "generator retries".into(), cap: RETRIES }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A random affine map `Z_m → Z_n`.
fn affine_map(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let step = n / gcd(m, n);
    let c = step * rng.gen_range(0..n.div_ceil(step).max(1));
    let s = rng.gen_range(0..n);
    (0..m).map(|a| (c * a + s) % n).collect()
}

/// Descent maps `f[x][y]` for `y ≤ x`, composing along every path.
fn descent_maps(sl: &Semilattice, sizes: &[usize], rng: &mut ChaCha8Rng) -> Option<Vec<Vec<Option<Vec<usize>>>>> {
    let k = sl.k;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&x| (0..k).filter(|&y| sl.le(y, x)).count());
    let mut f: Vec<Vec<Option<Vec<usize>>>> = vec![vec![None; k]; k];
    for &x in &order {
        f[x][x] = Some((0..sizes[x]).collect());
        let covers = sl.lower_covers(x);
        let mut ok = false;
        for _ in 0..50 {
            let g: Vec<Vec<usize>> = covers.iter().map(|&z| affine_map(sizes[x], sizes[z], rng)).collect();
            let mut row: Vec<Option<Vec<usize>>> = vec![None; k];
            let mut consistent = true;
            for y in (0..k).filter(|&y| y != x && sl.le(y, x)) {
                for (ci, &z) in covers.iter().enumerate() {
                    if !sl.le(y, z) {
                        continue;
                    }
                    let fzy = f[z][y].as_ref().unwrap();
                    let comp: Vec<usize> = g[ci].iter().map(|&a| fzy[a]).collect();
                    match &row[y] {
                        None => row[y] = Some(comp),
                        Some(prev) if *prev != comp => consistent = false,
                        _ => {}
                    }
                }
            }
            if consistent {
                for y in 0..k {
                    if row[y].is_some() {
                        f[x][y] = row[y].take();
                    }
                }
                ok = true;
                break;
            }
        }
        if !ok {
            return None;
        }
    }
    Some(f)
}

fn random_sizes(k: usize, max_block: usize, budget: usize, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    if k > budget {
        return None;
    }
    let mut sizes = vec![1; k];
    let mut spare = budget - k;
    let mut idx: Vec<usize> = (0..k).collect();
    idx.shuffle(rng);
    for i in idx {
        let room = (max_block - 1).min(spare);
        let extra = rng.gen_range(0..=room);
        sizes[i] += extra;
        spare -= extra;
    }
    Some(sizes)
}

/// Generates a verified SMB algebra.
pub fn gen_algebra(params: &AlgebraParams, rng: &mut ChaCha8Rng) -> Result<FiniteAlgebra> {
    let base_k = if params.shape == OrderShape::Malcev { 1 } else { params.blocks.max(2) };
    for _ in 0..RETRIES {
        let mut sl = random_semilattice(params.shape, base_k, rng)?;
        let budget = params.max_size - usize::from(params.unit);
        let Some(mut sizes) = random_sizes(sl.k, params.max_block_size.max(1), budget, rng) else {
            return Err(Error::Invalid(format!("{} blocks do not fit in {} elements", sl.k, params.max_size)));
        };
        if params.shape == OrderShape::Malcev && sizes[0] == 1 && budget > 1 {
            sizes[0] = rng.gen_range(2..=params.max_block_size.clamp(2, budget));
        }
        let Some(maps) = descent_maps(&sl, &sizes, rng) else { continue };
        let unit = params.unit.then_some(sl.k);
        if params.unit {
            sl = sl.with_top();
            sizes.push(1);
        }
        let k = sl.k;
        let offsets: Vec<usize> = sizes
            .iter()
            .scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect();
        let n: usize = sizes.iter().sum();
        let block_of: Vec<usize> = (0..k).flat_map(|x| std::iter::repeat_n(x, sizes[x])).collect();
        let meet = |a: usize, b: usize| -> usize {
            let (x, y) = (block_of[a], block_of[b]);
            if Some(x) == unit {
                return b;
            }
            let m = sl.m(x, y);
            let fx = maps[x][m].as_ref().unwrap();
            offsets[m] + fx[a - offsets[x]]
        };
        let block_d = |a: usize, b: usize, c: usize| -> usize {
            let x = block_of[a];
            let o = offsets[x];
            o + (a - o + sizes[x] - (b - o) + (c - o)) % sizes[x]
        };
        let mut meet_t: Vec<usize> = (0..n * n).map(|i| meet(i / n, i % n)).collect();
        let mut d_t: Vec<usize> = (0..n * n * n)
            .map(|i| {
                let (x, y, z) = (i / (n * n), (i / n) % n, i % n);
                block_d(meet(x, meet(z, y)), meet(y, meet(z, x)), meet(z, meet(y, x)))
            })
            .collect();
        if !params.regular {
            scramble(&mut meet_t, &mut d_t, n, &block_of, &sizes, &offsets, &sl, rng);
        }
        // Random relabelling of the universe.
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let mut meet_p = vec![0; n * n];
        let mut d_p = vec![0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                meet_p[perm[a] * n + perm[b]] = perm[meet_t[a * n + b]];
                for c in 0..n {
                    d_p[(perm[a] * n + perm[b]) * n + perm[c]] = perm[d_t[(a * n + b) * n + c]];
                }
            }
        }
        let alg = FiniteAlgebra::new(params.name.clone(), n, meet_p, d_p)?;
        let Ok(smb) = detect_smb(&alg) else { continue };
        if params.regular && !smb.is_regular() {
            continue;
        }
        let shape_ok = match params.shape {
            _ if params.unit => true,
            OrderShape::Flat => smb.is_flat(),
            s => smb.shape() == s,
        };
        if !shape_ok {
            continue;
        }
        return Ok(alg);
    }
    Err(retry_error())
}

/// Replaces cross-block values with arbitrary elements of the right block,
/// and `x∧y` for `[x] < [y]` with arbitrary elements of `[x]`.
#[allow(clippy::too_many_arguments)]
fn scramble(
    meet: &mut [usize],
    d: &mut [usize],
    n: usize,
    block_of: &[usize],
    sizes: &[usize],
    offsets: &[usize],
    sl: &Semilattice,
    rng: &mut ChaCha8Rng,
) {
    for a in 0..n {
        for b in 0..n {
            let (x, y) = (block_of[a], block_of[b]);
            if x != y && sl.le(x, y) && rng.gen_bool(0.5) {
                meet[a * n + b] = offsets[x] + rng.gen_range(0..sizes[x]);
            }
            for c in 0..n {
                let z = block_of[c];
                if x == y && y == z {
                    continue;
                }
                let m = sl.m(sl.m(x, y), z);
                if rng.gen_bool(0.5) {
                    d[(a * n + b) * n + c] = offsets[m] + rng.gen_range(0..sizes[m]);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    pub variables: usize,
    pub constraints: usize,
    /// Scope sizes are drawn from `2..=max_arity`.
    pub max_arity: usize,
    /// Generators per relation.
    pub generators: usize,
    /// Include the projection of a hidden solution in every relation.
    pub planted: bool,
    /// Probability that a domain is a proper generated subuniverse.
    pub subdomain_prob: f64,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            variables: 5,
            constraints: 5,
            max_arity: 3,
            generators: 2,
            planted: false,
            subdomain_prob: 0.3,
        }
    }
}

/// A random instance over the given template. Relations are subuniverses
/// generated by random tuples.
pub fn gen_instance(template: &[FiniteAlgebra], params: &InstanceParams, rng: &mut ChaCha8Rng) -> Result<Instance> {
    if template.is_empty() || params.variables == 0 {
        return Err(Error::Invalid("instance generation needs a template and variables".into()));
    }
    let algebras: BTreeMap<String, Arc<FiniteAlgebra>> =
        template.iter().map(|a| (a.name().to_string(), Arc::new(a.clone()))).collect();
    if algebras.len() != template.len() {
        return Err(Error::Invalid("template algebras must have distinct names".into()));
    }
    let n = params.variables;
    let mut domains = Vec::with_capacity(n);
    for _ in 0..n {
        let alg = &template[rng.gen_range(0..template.len())];
        let elems = if rng.gen_bool(params.subdomain_prob.clamp(0.0, 1.0)) {
            let k = rng.gen_range(1..=2.min(alg.size()));
            let seed: Vec<usize> = (0..k).map(|_| rng.gen_range(0..alg.size())).collect();
            alg.generate_subuniverse(&seed)?
        } else {
            (0..alg.size()).collect()
        };
        domains.push(Domain { algebra: alg.name().to_string(), elems });
    }
    let hidden: Vec<usize> = domains.iter().map(|d| *d.elems.choose(rng).unwrap()).collect();
    let mut constraints: Vec<(Vec<usize>, Relation)> = Vec::new();
    let max_arity = params.max_arity.clamp(2, n.max(2)).min(n);
    for _ in 0..params.constraints {
        if n < 2 {
            break;
        }
        let arity = rng.gen_range(2..=max_arity.max(2));
        let mut vars: Vec<usize> = (0..n).collect();
        vars.shuffle(rng);
        let mut scope: Vec<usize> = vars[..arity].to_vec();
        scope.sort_unstable();
        let algs: Vec<&FiniteAlgebra> = scope.iter().map(|&v| algebras[&domains[v].algebra].as_ref()).collect();
        let mut gens: Vec<Vec<usize>> = (0..params.generators.max(1))
            .map(|_| scope.iter().map(|&v| *domains[v].elems.choose(rng).unwrap()).collect())
            .collect();
        if params.planted {
            gens.push(scope.iter().map(|&v| hidden[v]).collect());
        }
        let rel = close_tuples(&algs, gens, 100_000)?;
        constraints.push((scope, rel));
    }
    let variables = (0..n).map(|i| format!("x{i}")).collect();
    Instance::new(algebras, variables, domains, constraints)
}

/// A chain of xor equations `x_i ⊕ x_{i+1} = c_i` over `M2`, with one extra
/// equation closing the cycle when `cyclic`.
pub fn xor_chain(n: usize, cyclic: bool, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let m2 = crate::named::m2();
    let mut algebras = BTreeMap::new();
    algebras.insert("M2".to_string(), Arc::new(m2));
    let rel = |c: usize| vec![vec![0, c], vec![1, 1 - c]];
    let mut constraints = Vec::new();
    for i in 0..n.saturating_sub(1) {
        constraints.push((vec![i, i + 1], rel(rng.gen_range(0..2))));
    }
    if cyclic && n > 2 {
        constraints.push((vec![0, n - 1], rel(rng.gen_range(0..2))));
    }
    let domains = (0..n).map(|_| Domain { algebra: "M2".into(), elems: vec![0, 1] }).collect();
    Instance::new(algebras, (0..n).map(|i| format!("x{i}")).collect(), domains, constraints)
}

/// Template plus instance for a given block-order shape, sized for oracle
/// checks. `General` mixes algebras of every shape, some with a unit.
pub fn gen_shaped_instance(shape: OrderShape, seed: u64, params: &InstanceParams) -> Result<Instance> {
    let mut rng = rng_from_seed(seed);
    let count = rng.gen_range(1..=2);
    let mut template = Vec::new();
    for k in 0..count {
        let (own, unit) = match shape {
            OrderShape::General => {
                let pick =
                    [OrderShape::Malcev, OrderShape::Linear, OrderShape::Flat, OrderShape::Tree, OrderShape::General]
                        [rng.gen_range(0..5)];
                let unit =
                    matches!(pick, OrderShape::Malcev | OrderShape::Linear | OrderShape::Flat) && rng.gen_bool(0.4);
                (pick, unit)
            }
            OrderShape::Linear => (shape, rng.gen_bool(0.25)),
            _ => (shape, false),
        };
        let blocks = match own {
            OrderShape::Malcev => 1,
            OrderShape::Linear | OrderShape::Flat => rng.gen_range(2..=3),
            OrderShape::Tree | OrderShape::General => 4,
        };
        let mut ap = AlgebraParams::new(&format!("A{k}"), own, blocks);
        ap.unit = unit;
        if own == OrderShape::Malcev && !unit {
            ap.max_size = 3;
        }
        template.push(gen_algebra(&ap, &mut rng)?);
    }
    gen_instance(&template, params, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smb::regularize;

    #[test]
    fn shapes_verified() {
        for (shape, k) in [
            (OrderShape::Malcev, 1),
            (OrderShape::Linear, 2),
            (OrderShape::Linear, 3),
            (OrderShape::Flat, 3),
            (OrderShape::Tree, 4),
            (OrderShape::General, 4),
        ] {
            for seed in 0..20 {
                let mut rng = rng_from_seed(seed);
                let alg = gen_algebra(&AlgebraParams::new("G", shape, k), &mut rng).unwrap();
                let s = detect_smb(&alg).unwrap();
                assert!(s.is_regular(), "{shape:?} seed {seed}");
                assert_eq!(s.shape(), shape);
                assert!(alg.size() <= 4);
            }
        }
    }

    #[test]
    fn unit_variant() {
        for seed in 0..20 {
            let mut rng = rng_from_seed(seed);
            let mut p = AlgebraParams::new("U", OrderShape::Linear, 2);
            p.unit = true;
            let alg = gen_algebra(&p, &mut rng).unwrap();
            let s = detect_smb(&alg).unwrap();
            assert!(s.is_unital() && s.is_regular());
        }
    }

    #[test]
    fn irregular_variant_regularizes() {
        let mut irregular = 0;
        for seed in 0..30 {
            let mut rng = rng_from_seed(seed);
            let mut p = AlgebraParams::new("N", OrderShape::Linear, 2);
            p.regular = false;
            let alg = gen_algebra(&p, &mut rng).unwrap();
            let s = detect_smb(&alg).unwrap();
            irregular += usize::from(!s.is_regular());
            assert!(regularize(&s).unwrap().is_regular());
        }
        assert!(irregular > 0);
    }

    #[test]
    fn deterministic() {
        let a = gen_shaped_instance(OrderShape::Flat, 1, &InstanceParams::default()).unwrap();
        let b = gen_shaped_instance(OrderShape::Flat, 1, &InstanceParams::default()).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
    }

    #[test]
    fn planted_is_sat() {
        for seed in 0..20 {
            let p = InstanceParams { planted: true, ..Default::default() };
            let inst = gen_shaped_instance(OrderShape::Linear, seed, &p).unwrap();
            assert!(crate::oracle::brute_force(&inst, 1_000_000).unwrap().satisfiable);
        }
    }
}
