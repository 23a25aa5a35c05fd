//! Subcommand implementations. Each returns the process exit code.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use smb_core::algebra::FiniteAlgebra;
use smb_core::consistency::{enforce_kl_minimality, minimize_23};
use smb_core::generate::{
    gen_algebra as generate_algebra, gen_shaped_instance, rng_from_seed, AlgebraParams, InstanceParams,
};
use smb_core::graphs::{is_cycle_consistent, link_partition, microstructure_graph, scope_graph, to_dot};
use smb_core::smb::IdentityCheck;
use smb_core::solvers::{coherent_sets, compute_strands};
use smb_core::{detect_smb, regularize, Caps, Error, Instance, Method, OrderShape, SolveOptions};

use crate::report::{named_witness, sets, solve_text};
use crate::{AnalyzeArgs, CheckArgs, CompareArgs, Format, GenAlgebraArgs, GenInstanceArgs, MinimizeArgs, SolveArgs};

pub type CmdResult = Result<u8, Box<dyn std::error::Error>>;

fn read(path: &Path) -> Result<String, Box<dyn std::error::Error>> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_instance(path: &Path) -> Result<Instance, Box<dyn std::error::Error>> {
    Instance::parse(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Box<dyn std::error::Error>> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn options(witness: bool, audit: bool) -> Result<SolveOptions, Error> {
    Ok(SolveOptions { witness, audit, caps: Caps::from_env()? })
}

fn has_empty(inst: &Instance) -> bool {
    inst.has_empty_constraint() || (0..inst.len()).any(|i| inst.domain(i).is_empty())
}

pub fn solve(a: &SolveArgs) -> CmdResult {
    let inst = load_instance(&a.path)?;
    let opts = options(a.extract, !a.no_audit)?;
    let out = smb_core::solve(&inst, a.method.into(), &opts)?;
    out.verify(&inst)?;
    match a.format {
        Format::Json => {
            let witness = out.witness.as_ref().map(|w| named_witness(&inst, w).into_iter().collect::<BTreeMap<_, _>>());
            print!("{}", pretty(&json!({ "satisfiable": out.satisfiable, "witness": witness, "trace": out.trace })));
        }
        _ => print!("{}", solve_text(&inst, &out)),
    }
    Ok(if out.satisfiable { 0 } else { 1 })
}

#[derive(Serialize)]
struct AlgebraReport {
    name: String,
    size: usize,
    blocks: Vec<Vec<usize>>,
    shape: OrderShape,
    /// Pairs `(x, y)` of block indices with `x` below `y`, covering relation only.
    block_order: Vec<(usize, usize)>,
    unit: Option<usize>,
    regular: bool,
    rees: Option<Vec<Vec<usize>>>,
    identities: Vec<IdentityCheck>,
    regularized_identities: Vec<IdentityCheck>,
    declared_blocks_match: Option<bool>,
}

pub fn check_algebra(a: &CheckArgs) -> CmdResult {
    let (alg, declared) = FiniteAlgebra::parse(&read(&a.path)?)?;
    let smb = detect_smb(&alg)?;
    let reg = regularize(&smb)?;
    let blocks = smb.blocks().to_vec();
    let k = blocks.len();
    let below = |x: usize, y: usize| x != y && smb.block_le(x, y);
    let block_order = (0..k)
        .flat_map(|x| (0..k).map(move |y| (x, y)))
        .filter(|&(x, y)| below(x, y) && !(0..k).any(|z| below(x, z) && below(z, y)))
        .collect();
    let declared_blocks_match = declared.map(|d| {
        let mut d: Vec<Vec<usize>> = d
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        d.sort();
        let mut b = blocks.clone();
        b.sort();
        d == b
    });
    let rep = AlgebraReport {
        name: alg.name().to_string(),
        size: alg.size(),
        blocks,
        shape: smb.shape(),
        block_order,
        unit: smb.unit(),
        regular: smb.is_regular(),
        rees: smb.rees().ok().map(|c| c.blocks()),
        identities: smb.identity_report(),
        regularized_identities: reg.identity_report(),
        declared_blocks_match,
    };
    match a.format {
        Format::Json => print!("{}", pretty(&rep)),
        _ => print!("{}", algebra_text(&rep)),
    }
    let ok = rep.regularized_identities.iter().all(|c| c.holds) && rep.declared_blocks_match != Some(false);
    Ok(if ok { 0 } else { 1 })
}

fn algebra_text(r: &AlgebraReport) -> String {
    let yes = |b: bool| if b { "yes" } else { "no" };
    let mut s = format!("algebra {} ({} elements)\n", r.name, r.size);
    s += &format!("blocks: {}\n", sets(&r.blocks));
    s += &format!("shape: {}\n", serde_json::to_value(r.shape).unwrap().as_str().unwrap());
    let order: Vec<String> = r.block_order.iter().map(|(x, y)| format!("{x}<{y}")).collect();
    s += &format!("block order: {}\n", if order.is_empty() { "-".to_string() } else { order.join(" ") });
    s += &format!("unit: {}\n", r.unit.map_or("none".to_string(), |u| u.to_string()));
    s += &format!("regular: {}\n", yes(r.regular));
    s += &format!("rees: {}\n", r.rees.as_ref().map_or("-".to_string(), |c| sets(c)));
    if let Some(m) = r.declared_blocks_match {
        s += &format!("declared blocks match: {}\n", yes(m));
    }
    for (title, rows) in [("identities", &r.identities), ("after regularization", &r.regularized_identities)] {
        s += &format!("{title}:\n");
        for c in rows {
            let w = c.witness.as_ref().map_or(String::new(), |w| format!(" at {w:?}"));
            s += &format!("  {} {}{w}\n", if c.holds { "PASS" } else { "FAIL" }, c.identity);
        }
    }
    s
}

fn or_error<T: Serialize>(r: Result<T, Error>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).expect("report serializes"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn analyze(a: &AnalyzeArgs) -> CmdResult {
    let inst = minimize_23(&load_instance(&a.path)?);
    let all = !(a.strands || a.coherent_sets || a.link_partitions || a.cycle_consistency || a.graphs);
    if a.format == Format::Dot {
        let mut s = to_dot(&scope_graph(&inst), "scope", inst.variables());
        s += &to_dot(&microstructure_graph(&inst), "microstructure", inst.variables());
        print!("{s}");
        return Ok(0);
    }
    let mut rep = serde_json::Map::new();
    rep.insert("variables".into(), json!(inst.variables()));
    rep.insert("empty_after_minimization".into(), json!(has_empty(&inst)));
    if !has_empty(&inst) {
        if all || a.strands {
            rep.insert("strands".into(), or_error(compute_strands(&inst)));
        }
        if all || a.coherent_sets {
            rep.insert("coherent_sets".into(), or_error(coherent_sets(&inst, &options(false, true)?)));
        }
        if all || a.link_partitions {
            rep.insert("link_partition".into(), or_error(link_partition(&inst)));
        }
        if all || a.cycle_consistency {
            rep.insert("cycle_consistency".into(), or_error(is_cycle_consistent(&inst)));
        }
    }
    if all || a.graphs {
        rep.insert("scope_graph".into(), json!(scope_graph(&inst)));
        rep.insert("microstructure".into(), json!(microstructure_graph(&inst)));
    }
    print!("{}", pretty(&rep));
    Ok(0)
}

pub fn minimize(a: &MinimizeArgs) -> CmdResult {
    let inst = enforce_kl_minimality(&load_instance(&a.path)?, a.k, a.l)?;
    let mut text = inst.to_json_string();
    text.push('\n');
    emit(&text, a.output.as_deref())?;
    Ok(if has_empty(&inst) { 1 } else { 0 })
}

pub fn gen_algebra(a: &GenAlgebraArgs) -> CmdResult {
    let mut p = AlgebraParams::new(&a.name, a.shape.into(), a.blocks);
    p.max_block_size = a.max_block_size;
    p.max_size = a.max_size;
    p.unit = a.unit;
    p.regular = !a.irregular;
    let alg = generate_algebra(&p, &mut rng_from_seed(a.seed))?;
    let blocks = detect_smb(&alg)?.blocks().to_vec();
    emit(&pretty(&alg.to_json(Some(blocks))), a.output.as_deref())?;
    Ok(0)
}

pub fn gen_instance(a: &GenInstanceArgs) -> CmdResult {
    let p = InstanceParams {
        variables: a.variables,
        constraints: a.constraints,
        max_arity: a.max_arity,
        generators: a.generators,
        planted: a.planted,
        subdomain_prob: a.subdomain_prob,
    };
    let inst = gen_shaped_instance(a.shape.into(), a.seed, &p)?;
    let mut text = inst.to_json_string();
    text.push('\n');
    emit(&text, a.output.as_deref())?;
    Ok(0)
}

const SHAPES: [OrderShape; 5] =
    [OrderShape::Malcev, OrderShape::Linear, OrderShape::Flat, OrderShape::Tree, OrderShape::General];

/// Small instances of every shape for differential runs.
fn compare_corpus(count: u64, seed: u64) -> Vec<(String, Instance)> {
    (0..count)
        .filter_map(|i| {
            let s = seed + i;
            let p = InstanceParams {
                variables: 2 + (s % 5) as usize,
                constraints: 2 + (s % 5) as usize,
                max_arity: 2 + (s % 2) as usize,
                generators: 1 + (s % 3) as usize,
                planted: s.is_multiple_of(3),
                ..InstanceParams::default()
            };
            gen_shaped_instance(SHAPES[(s % 5) as usize], s, &p).ok().map(|inst| (format!("seed {s}"), inst))
        })
        .collect()
}

#[derive(Default, Serialize)]
struct MethodTally {
    agree: usize,
    disagree: usize,
    not_applicable: usize,
    errors: usize,
}

enum Verdict {
    Agree,
    Disagree,
    NotApplicable,
    Failed(String),
}

pub fn compare(a: &CompareArgs) -> CmdResult {
    let mut corpus = Vec::new();
    for p in &a.paths {
        corpus.push((p.display().to_string(), load_instance(p)?));
    }
    corpus.extend(compare_corpus(a.generate, a.seed));
    let opts = options(true, true)?;
    let methods: Vec<Method> = a.methods.iter().map(|&m| m.into()).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.threads).build()?;
    let rows: Vec<Result<Vec<Verdict>, Error>> = pool.install(|| {
        corpus
            .par_iter()
            .map(|(_, inst)| {
                let truth = smb_core::solve(inst, Method::Bruteforce, &opts)?;
                Ok(methods
                    .iter()
                    .map(|&m| match smb_core::solve(inst, m, &opts) {
                        Ok(o) if o.satisfiable == truth.satisfiable && o.witness == truth.witness => Verdict::Agree,
                        Ok(_) => Verdict::Disagree,
                        Err(Error::Structure(_)) => Verdict::NotApplicable,
                        Err(e) => Verdict::Failed(e.to_string()),
                    })
                    .collect())
            })
            .collect()
    });
    let mut tallies: BTreeMap<&str, MethodTally> = methods.iter().map(|m| (m.name(), MethodTally::default())).collect();
    let mut problems = Vec::new();
    for ((label, _), row) in corpus.iter().zip(&rows) {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("{label}: oracle: {e}"));
                continue;
            }
        };
        for (m, v) in methods.iter().zip(row) {
            let t = tallies.get_mut(m.name()).unwrap();
            match v {
                Verdict::Agree => t.agree += 1,
                Verdict::Disagree => {
                    t.disagree += 1;
                    problems.push(format!("{label}: {} disagrees with bruteforce", m.name()));
                }
                Verdict::NotApplicable => t.not_applicable += 1,
                Verdict::Failed(e) => {
                    t.errors += 1;
                    problems.push(format!("{label}: {}: {e}", m.name()));
                }
            }
        }
    }
    match a.format {
        Format::Json => {
            print!("{}", pretty(&json!({ "instances": corpus.len(), "methods": tallies, "problems": problems })))
        }
        _ => {
            println!("{} instances", corpus.len());
            for (m, t) in &tallies {
                println!(
                    "{m:<10} agree {:>5}  disagree {:>3}  n/a {:>5}  errors {:>3}",
                    t.agree, t.disagree, t.not_applicable, t.errors
                );
            }
            for p in &problems {
                println!("{p}");
            }
        }
    }
    Ok(if problems.is_empty() { 0 } else { 1 })
}
