//! Small hand-built algebras used in documentation, tests and the CLI.

use crate::algebra::FiniteAlgebra;

/// Builds a regular SMB algebra from a meet table and a Mal'cev operation
/// given on blocks; cross-block `d` is normalised through
/// `d(x∧(z∧y), y∧(z∧x), z∧(y∧x))`.
pub fn regular_from_meet(
    name: &str,
    size: usize,
    meet: impl Fn(usize, usize) -> usize,
    block_d: impl Fn(usize, usize, usize) -> usize,
) -> FiniteAlgebra {
    FiniteAlgebra::from_fns(name, size, &meet, |x, y, z| {
        block_d(meet(x, meet(z, y)), meet(y, meet(z, x)), meet(z, meet(y, x)))
    })
    .expect("well-formed named algebra")
}

/// Two elements, `∧` the first projection, `d = x ⊕ y ⊕ z`.
pub fn m2() -> FiniteAlgebra {
    FiniteAlgebra::from_fns("M2", 2, |a, _| a, |a, b, c| a ^ b ^ c).unwrap()
}

/// The affine algebra of `Z_m`: `∧` the first projection, `d = x − y + z`.
pub fn zmod(m: usize) -> FiniteAlgebra {
    FiniteAlgebra::from_fns(format!("Z{m}"), m, |a, _| a, |a, b, c| (a + m - b + c) % m).unwrap()
}

pub fn z3() -> FiniteAlgebra {
    zmod(3)
}

/// Three elements: the xor block `{0,1}` below the singleton `{2}`, with
/// descent `2 ↦ 0`, so `2∧x = 0` and `x∧2 = x` for `x ∈ {0,1}`.
pub fn l4() -> FiniteAlgebra {
    let meet = |a: usize, b: usize| match (a, b) {
        (2, 2) => 2,
        (2, _) => 0,
        (a, _) => a,
    };
    regular_from_meet("L4", 3, meet, |a, b, c| if a == 2 { 2 } else { a ^ b ^ c })
}

/// `M2` with an extra unit element `2` on top.
pub fn unital3() -> FiniteAlgebra {
    let meet = |a: usize, b: usize| match (a, b) {
        (2, b) => b,
        (a, _) => a,
    };
    regular_from_meet("U3", 3, meet, |a, b, c| if a == 2 { 2 } else { a ^ b ^ c })
}

/// The `k`-element chain `0 < 1 < … < k−1` with `d(x,y,z) = x∧y∧z`.
pub fn chain(k: usize) -> FiniteAlgebra {
    FiniteAlgebra::from_fns(format!("C{k}"), k, |a, b| a.min(b), |a, b, c| a.min(b).min(c)).unwrap()
}

pub fn chain3() -> FiniteAlgebra {
    chain(3)
}

/// Flat semilattice: `0` below the maximal elements `1..k`, `d(x,y,z) = x∧y∧z`.
pub fn flat(k: usize) -> FiniteAlgebra {
    let meet = move |a: usize, b: usize| if a == b { a } else { 0 };
    FiniteAlgebra::from_fns(format!("F{k}"), k + 1, meet, move |a, b, c| meet(meet(a, b), c)).unwrap()
}

/// Four elements: the xor block `{0,1}` below the maximal singletons `{2}`
/// and `{3}`, with descents `2 ↦ 0` and `3 ↦ 1`.
pub fn flat_xor() -> FiniteAlgebra {
    let meet = |a: usize, b: usize| match (a, b) {
        (a, b) if a == b => a,
        (2, _) => 0,
        (3, _) => 1,
        (a, _) => a,
    };
    regular_from_meet("FX", 4, meet, |a, b, c| if a >= 2 { a } else { a ^ b ^ c })
}

/// Three elements with the commutative but non-associative meet
/// `0∧1 = 2`, `0∧2 = 1`, `1∧2 = 0`; not SMB.
pub fn broken3() -> FiniteAlgebra {
    let meet = |a: usize, b: usize| if a == b { a } else { 3 - a - b };
    FiniteAlgebra::from_fns("broken3", 3, meet, |a, b, c| meet(meet(a, b), c)).unwrap()
}
