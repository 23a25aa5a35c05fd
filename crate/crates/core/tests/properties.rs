//! Property tests over generated instances and algebras.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use common::{naive_solutions, SHAPES};
use smb_core::consistency::{is_11_minimal, is_23_minimal, minimize_11, minimize_23};
use smb_core::generate::{gen_algebra, gen_shaped_instance, rng_from_seed, AlgebraParams, InstanceParams};
use smb_core::smb::regular_structure;
use smb_core::{detect_smb, solve, Instance, Method, SolveOptions};

fn instance(seed: u64, shape_ix: usize, vars: usize, arity: usize, planted: bool) -> Option<Instance> {
    let mut p = InstanceParams::default();
    p.variables = vars;
    p.constraints = 2 + (seed % 4) as usize;
    p.max_arity = arity;
    p.generators = 1 + (seed % 3) as usize;
    p.planted = planted;
    gen_shaped_instance(SHAPES[shape_ix], seed, &p).ok()
}

fn arb_instance() -> impl Strategy<Value = Instance> {
    (0u64..1_000_000, 0usize..5, 2usize..6, 2usize..4, any::<bool>())
        .prop_filter_map("generation failed", |(s, k, v, a, p)| instance(s, k, v, a, p))
}

fn opts() -> SolveOptions {
    SolveOptions::default().with_witness(true)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn minimize_23_keeps_solutions(inst in arb_instance()) {
        let before = naive_solutions(&inst);
        let m = minimize_23(&inst);
        if before.is_empty() {
            prop_assert!(naive_solutions(&m).is_empty());
        } else {
            prop_assert_eq!(naive_solutions(&m), before);
            prop_assert!(is_23_minimal(&m));
        }
    }

    #[test]
    fn minimize_23_is_idempotent(inst in arb_instance()) {
        let m = minimize_23(&inst);
        let mm = minimize_23(&m);
        prop_assert_eq!(m.canonical_key(), mm.canonical_key());
    }

    #[test]
    fn minimize_11_keeps_solutions(inst in arb_instance()) {
        let before = naive_solutions(&inst);
        let m = minimize_11(&inst);
        prop_assert_eq!(naive_solutions(&m), before.clone());
        if !m.has_empty_constraint() && (0..m.len()).all(|i| !m.domain(i).is_empty()) {
            prop_assert!(is_11_minimal(&m));
        }
        prop_assert!(m.mass() <= inst.mass());
    }

    #[test]
    fn restriction_contains_projected_solutions(inst in arb_instance(), mask in 1u32..64) {
        let w: Vec<usize> = (0..inst.len()).filter(|i| mask >> i & 1 == 1).collect();
        prop_assume!(!w.is_empty());
        let r = inst.restrict(&w);
        prop_assert_eq!(r.len(), w.len());
        for f in naive_solutions(&inst) {
            let g: Vec<usize> = w.iter().map(|&v| f[v]).collect();
            prop_assert!(r.is_solution(&g));
        }
    }

    #[test]
    fn pinning_filters_solutions(inst in arb_instance(), var in 0usize..6, pick in 0usize..16) {
        let var = var % inst.len();
        let dom = inst.domain(var);
        prop_assume!(!dom.is_empty());
        let a = dom[pick % dom.len()];
        let pinned = inst.pin(&[(var, a)]).unwrap();
        let expected: Vec<Vec<usize>> = naive_solutions(&inst).into_iter().filter(|f| f[var] == a).collect();
        prop_assert_eq!(naive_solutions(&pinned), expected);
    }

    #[test]
    fn tightening_to_current_domains_is_identity(inst in arb_instance()) {
        let doms: BTreeMap<usize, Vec<usize>> = (0..inst.len()).map(|i| (i, inst.domain(i).to_vec())).collect();
        let t = inst.tighten(&doms).unwrap();
        prop_assert_eq!(t.canonical_key(), inst.canonical_key());
    }

    #[test]
    fn json_round_trip(inst in arb_instance()) {
        let back = Instance::parse(&inst.to_json_string()).unwrap();
        prop_assert_eq!(back.canonical_key(), inst.canonical_key());
        prop_assert_eq!(back.variables(), inst.variables());
    }

    #[test]
    fn auto_returns_first_solution(inst in arb_instance()) {
        let sols = naive_solutions(&inst);
        let out = solve(&inst, Method::Auto, &opts()).unwrap();
        prop_assert_eq!(out.satisfiable, !sols.is_empty());
        prop_assert_eq!(out.witness, sols.first().cloned());
    }

    #[test]
    fn general_agrees_with_enumeration(inst in arb_instance()) {
        let sols = naive_solutions(&inst);
        let out = solve(&inst, Method::General, &opts()).unwrap();
        prop_assert_eq!(out.satisfiable, !sols.is_empty());
        prop_assert_eq!(out.witness, sols.first().cloned());
    }

    #[test]
    fn decisions_do_not_depend_on_witness_flag(inst in arb_instance()) {
        let a = solve(&inst, Method::Auto, &SolveOptions::default()).unwrap();
        let b = solve(&inst, Method::Auto, &opts()).unwrap();
        prop_assert_eq!(a.satisfiable, b.satisfiable);
        prop_assert!(a.witness.is_none());
    }

    #[test]
    fn generated_algebras_are_regular(seed in 0u64..100_000, k in 0usize..5, blocks in 1usize..5, unit: bool) {
        let shape = SHAPES[k];
        let blocks = if k == 0 { 1 } else { blocks.max(2) };
        let mut p = AlgebraParams::new("A", shape, blocks);
        p.unit = unit;
        if let Ok(a) = gen_algebra(&p, &mut rng_from_seed(seed)) {
            let smb = detect_smb(&a).unwrap();
            prop_assert!(smb.is_regular());
            prop_assert!(smb.identity_report().iter().all(|c| c.holds));
            if unit {
                prop_assert!(smb.is_unital());
            }
        }
    }

    #[test]
    fn regularization_is_idempotent(seed in 0u64..100_000, k in 0usize..5) {
        let blocks = if k == 0 { 1 } else { 3 };
        let mut p = AlgebraParams::new("N", SHAPES[k], blocks);
        p.regular = false;
        p.max_size = 5;
        if let Ok(a) = gen_algebra(&p, &mut rng_from_seed(seed)) {
            let once = regular_structure(&a).unwrap();
            let twice = regular_structure(once.algebra()).unwrap();
            prop_assert_eq!(once.algebra().meet_table(), twice.algebra().meet_table());
            prop_assert_eq!(once.algebra().maltsev_table(), twice.algebra().maltsev_table());
        }
    }
}
