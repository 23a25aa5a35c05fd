//! Scope and microstructure hypergraphs, connectivity, cycle consistency and
//! link partitions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::consistency::is_11_minimal;
use crate::error::{Error, Result};
use crate::instance::{project, Instance};

/// A vertex is a variable (scope graph) or a variable/value pair (microstructure).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub variable: usize,
    pub value: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperedge {
    /// Sorted vertex indices.
    pub vertices: Vec<usize>,
    /// The constraint scope the edge comes from.
    pub scope: Vec<usize>,
    /// Index of the tuple in the relation, for microstructure edges.
    pub tuple: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypergraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Hyperedge>,
}

/// Vertices are the variables; each domain contributes a singleton edge and
/// each constraint an edge on its scope.
pub fn scope_graph(inst: &Instance) -> Hypergraph {
    let vertices = (0..inst.len()).map(|i| Vertex { variable: i, value: None }).collect();
    let mut edges: Vec<Hyperedge> =
        (0..inst.len()).map(|i| Hyperedge { vertices: vec![i], scope: vec![i], tuple: None }).collect();
    for scope in inst.constraints().keys().filter(|s| !s.is_empty()) {
        edges.push(Hyperedge { vertices: scope.clone(), scope: scope.clone(), tuple: None });
    }
    Hypergraph { vertices, edges }
}

/// Vertices are the pairs `(i, a)` with `a ∈ A_i`; every domain value and
/// every constraint tuple contributes an edge.
pub fn microstructure_graph(inst: &Instance) -> Hypergraph {
    let mut vertices = Vec::new();
    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for i in 0..inst.len() {
        for &a in inst.domain(i) {
            index.insert((i, a), vertices.len());
            vertices.push(Vertex { variable: i, value: Some(a) });
        }
    }
    let mut edges = Vec::new();
    for i in 0..inst.len() {
        for (k, &a) in inst.domain(i).iter().enumerate() {
            edges.push(Hyperedge { vertices: vec![index[&(i, a)]], scope: vec![i], tuple: Some(k) });
        }
    }
    for (scope, rel) in inst.constraints().iter().filter(|(s, _)| !s.is_empty()) {
        for (k, t) in rel.iter().enumerate() {
            let vs = scope.iter().zip(t).map(|(&v, &a)| index[&(v, a)]).collect();
            edges.push(Hyperedge { vertices: vs, scope: scope.clone(), tuple: Some(k) });
        }
    }
    Hypergraph { vertices, edges }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components as sorted vertex-index lists, ordered by least vertex.
pub fn connected_components(g: &Hypergraph) -> Vec<Vec<usize>> {
    let mut uf = UnionFind((0..g.vertices.len()).collect());
    for e in &g.edges {
        for w in e.vertices.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..g.vertices.len() {
        let r = uf.find(v);
        by_root.entry(r).or_default().push(v);
    }
    // Roots are component minima, so map order is least-vertex order.
    by_root.into_values().collect()
}

/// A failing closed path: starting at `value` of `variable`, walking `cycle`
/// cannot return to `value`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleCounterexample {
    pub variable: usize,
    pub value: usize,
    /// Variables visited, starting and ending at `variable`.
    pub cycle: Vec<usize>,
    /// The scope used for each step.
    pub scopes: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleReport {
    pub consistent: bool,
    pub cycles_checked: usize,
    pub counterexample: Option<CycleCounterexample>,
}

/// Step choices beyond this count fall back to the first containing scope.
const MAX_SCOPE_CHOICES: usize = 64;

struct PairSteps<'a> {
    inst: &'a Instance,
    /// For each ordered adjacent pair, the scopes containing both.
    containing: BTreeMap<(usize, usize), Vec<&'a Vec<usize>>>,
}

impl<'a> PairSteps<'a> {
    fn new(inst: &'a Instance) -> Self {
        let mut containing: BTreeMap<(usize, usize), Vec<&Vec<usize>>> = BTreeMap::new();
        for scope in inst.constraints().keys() {
            for &u in scope {
                for &v in scope {
                    if u != v {
                        containing.entry((u, v)).or_default().push(scope);
                    }
                }
            }
        }
        PairSteps { inst, containing }
    }

    fn neighbours(&self, u: usize) -> Vec<usize> {
        self.containing.range((u, 0)..(u + 1, 0)).map(|(&(_, v), _)| v).collect()
    }

    fn step(&self, scope: &[usize], from: usize, to: usize, values: &BTreeSet<usize>) -> BTreeSet<usize> {
        let p = scope.binary_search(&from).unwrap();
        let q = scope.binary_search(&to).unwrap();
        let rel = self.inst.relation(scope).unwrap();
        project(rel, &[p, q]).into_iter().filter(|t| values.contains(&t[0])).map(|t| t[1]).collect()
    }

    /// Checks one vertex cycle under every affordable choice of scopes.
    fn check(&self, cycle: &[usize]) -> Option<CycleCounterexample> {
        let options: Vec<&Vec<&Vec<usize>>> = cycle.windows(2).map(|w| &self.containing[&(w[0], w[1])]).collect();
        let combos = options.iter().try_fold(1usize, |acc, o| acc.checked_mul(o.len()));
        let all = combos.is_some_and(|c| c <= MAX_SCOPE_CHOICES);
        let total = if all { combos.unwrap() } else { 1 };
        for mut code in 0..total {
            let scopes: Vec<Vec<usize>> = options
                .iter()
                .map(|o| {
                    let k = if all { code % o.len() } else { 0 };
                    if all {
                        code /= o.len();
                    }
                    o[k].clone()
                })
                .collect();
            let start = cycle[0];
            for &a in self.inst.domain(start) {
                let mut vals = BTreeSet::from([a]);
                for (w, s) in cycle.windows(2).zip(&scopes) {
                    vals = self.step(s, w[0], w[1], &vals);
                }
                if !vals.contains(&a) {
                    return Some(CycleCounterexample { variable: start, value: a, cycle: cycle.to_vec(), scopes });
                }
            }
        }
        None
    }
}

/// Checks cycle consistency over a generating family of closed paths: the
/// fundamental cycles of a BFS forest of the 2-section, every triangle and
/// every two-step cycle. Requires (1,1)-minimality.
pub fn is_cycle_consistent(inst: &Instance) -> Result<CycleReport> {
    if !is_11_minimal(inst) {
        return Err(Error::State("cycle consistency requires a (1,1)-minimal instance".into()));
    }
    let steps = PairSteps::new(inst);
    let n = inst.len();
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    // Two-step cycles through two different scopes.
    for (&(u, v), scopes) in &steps.containing {
        if u < v && scopes.len() > 1 {
            cycles.push(vec![u, v, u]);
        }
    }
    for u in 0..n {
        let nu = steps.neighbours(u);
        for &v in nu.iter().filter(|&&v| v > u) {
            for &w in steps.neighbours(v).iter().filter(|&&w| w > v) {
                if nu.contains(&w) {
                    cycles.push(vec![u, v, w, u]);
                }
            }
        }
    }
    // Fundamental cycles of a BFS forest.
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0usize; n];
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for v in steps.neighbours(u) {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = u;
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    for (&(u, v), _) in steps.containing.iter().filter(|(&(u, v), _)| u < v) {
        if parent[v] == u || parent[u] == v {
            continue;
        }
        let (mut a, mut b) = (u, v);
        let mut left = vec![a];
        let mut right = vec![b];
        while a != b {
            if depth[a] >= depth[b] {
                a = parent[a];
                left.push(a);
            } else {
                b = parent[b];
                right.push(b);
            }
        }
        right.pop();
        right.reverse();
        let mut cycle = left;
        cycle.extend(right);
        cycle.push(u);
        if cycle.len() > 4 {
            cycles.push(cycle);
        }
    }
    for (k, c) in cycles.iter().enumerate() {
        if let Some(ce) = steps.check(c) {
            return Ok(CycleReport { consistent: false, cycles_checked: k + 1, counterexample: Some(ce) });
        }
    }
    Ok(CycleReport { consistent: true, cycles_checked: cycles.len(), counterexample: None })
}

/// A uniform `k`-class splitting of all domains aligned with every relation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkPartition {
    pub k: usize,
    /// `classes[i][j]` is the class `A_{i,j}`.
    pub classes: Vec<Vec<Vec<usize>>>,
    /// For each scope, the class index of every tuple.
    pub tuple_classes: BTreeMap<String, Vec<usize>>,
    /// Whether the classes were audited as subuniverses (cycle-consistent input).
    pub subuniverses_checked: bool,
}

/// The link partition induced by the microstructure components, or `None`
/// when the microstructure is connected.
pub fn link_partition(inst: &Instance) -> Result<Option<LinkPartition>> {
    if !is_11_minimal(inst) {
        return Err(Error::State("link partitions require a (1,1)-minimal instance".into()));
    }
    if inst.has_empty_constraint() {
        return Err(Error::State("link partitions require nonempty domains".into()));
    }
    if connected_components(&scope_graph(inst)).len() > 1 {
        return Err(Error::State("the scope graph is disconnected".into()));
    }
    let g = microstructure_graph(inst);
    let comps = connected_components(&g);
    if comps.len() <= 1 {
        return Ok(None);
    }
    let k = comps.len();
    let mut comp_of = vec![0; g.vertices.len()];
    for (j, c) in comps.iter().enumerate() {
        for &v in c {
            comp_of[v] = j;
        }
    }
    let mut classes = vec![vec![Vec::new(); k]; inst.len()];
    for (v, vx) in g.vertices.iter().enumerate() {
        classes[vx.variable][comp_of[v]].push(vx.value.unwrap());
    }
    for (i, cl) in classes.iter().enumerate() {
        if let Some(j) = cl.iter().position(Vec::is_empty) {
            return Err(Error::Invariant(format!("component {j} misses variable {i}")));
        }
    }
    let mut tuple_classes = BTreeMap::new();
    for e in g.edges.iter().filter(|e| e.scope.len() > 1) {
        let entry: &mut Vec<usize> = tuple_classes.entry(format!("{:?}", e.scope)).or_default();
        entry.push(comp_of[e.vertices[0]]);
    }
    let subuniverses_checked = is_cycle_consistent(inst)?.consistent;
    if subuniverses_checked {
        for (i, cl) in classes.iter().enumerate() {
            for c in cl {
                if !inst.algebra_of(i).is_subuniverse(c) {
                    return Err(Error::Invariant(format!("link class {c:?} of variable {i} is not a subuniverse")));
                }
            }
        }
    }
    Ok(Some(LinkPartition { k, classes, tuple_classes, subuniverses_checked }))
}

const PALETTE: [&str; 8] = ["#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5"];

/// Graphviz rendering. Binary edges are drawn directly; larger edges get a
/// small hub node. Vertices are coloured by component.
pub fn to_dot(g: &Hypergraph, name: &str, variables: &[String]) -> String {
    let comps = connected_components(g);
    let mut comp_of = vec![0; g.vertices.len()];
    for (j, c) in comps.iter().enumerate() {
        for &v in c {
            comp_of[v] = j;
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "graph \"{name}\" {{");
    for (v, vx) in g.vertices.iter().enumerate() {
        let label = match vx.value {
            Some(a) => format!("{}={}", variables[vx.variable], a),
            None => variables[vx.variable].clone(),
        };
        let _ = writeln!(
            out,
            "  v{v} [label=\"{label}\", style=filled, fillcolor=\"{}\"];",
            PALETTE[comp_of[v] % PALETTE.len()]
        );
    }
    for (k, e) in g.edges.iter().enumerate() {
        match e.vertices.len() {
            1 => {}
            2 => {
                let _ = writeln!(out, "  v{} -- v{};", e.vertices[0], e.vertices[1]);
            }
            _ => {
                let _ = writeln!(out, "  e{k} [shape=point];");
                for v in &e.vertices {
                    let _ = writeln!(out, "  e{k} -- v{v};");
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::{minimize_11, minimize_23};
    use crate::instance::{InstanceBuilder, Relation};
    use crate::named;

    fn eq2() -> Relation {
        vec![vec![0, 0], vec![1, 1]]
    }

    fn neq() -> Relation {
        vec![vec![0, 1], vec![1, 0]]
    }

    #[test]
    fn unary_edges() {
        let inst = InstanceBuilder::new().algebra(named::m2()).var("x", "M2").build().unwrap();
        let g = microstructure_graph(&inst);
        assert_eq!(g.edges.len(), 2);
        assert!(g.edges.iter().all(|e| e.vertices.len() == 1));
        assert_eq!(connected_components(&g), vec![vec![0], vec![1]]);
    }

    #[test]
    fn full_product_edges() {
        let full: Relation = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        let inst = InstanceBuilder::new()
            .algebra(named::m2())
            .var("x", "M2")
            .var("y", "M2")
            .constraint(&[0, 1], full)
            .build()
            .unwrap();
        let g = microstructure_graph(&inst);
        assert_eq!(g.edges.iter().filter(|e| e.vertices.len() == 2).count(), 4);
        assert_eq!(connected_components(&g).len(), 1);
        assert!(link_partition(&inst).unwrap().is_none());
    }

    #[test]
    fn twisted_triangle() {
        let inst = InstanceBuilder::new()
            .algebra(named::m2())
            .var("x", "M2")
            .var("y", "M2")
            .var("z", "M2")
            .constraint(&[0, 1], eq2())
            .constraint(&[1, 2], eq2())
            .constraint(&[0, 2], neq())
            .build()
            .unwrap();
        let m = minimize_11(&inst);
        let r = is_cycle_consistent(&m).unwrap();
        assert!(!r.consistent);
        let ce = r.counterexample.unwrap();
        assert_eq!(ce.cycle.first(), ce.cycle.last());
        assert!(minimize_23(&inst).has_empty_constraint());
    }

    #[test]
    fn tree_is_cycle_consistent() {
        let inst = InstanceBuilder::new()
            .algebra(named::m2())
            .var("x", "M2")
            .var("y", "M2")
            .var("z", "M2")
            .constraint(&[0, 1], neq())
            .constraint(&[0, 2], eq2())
            .build()
            .unwrap();
        assert!(is_cycle_consistent(&inst).unwrap().consistent);
    }

    #[test]
    fn equality_chain_link_partition() {
        let inst = InstanceBuilder::new()
            .algebra(named::m2())
            .var("x", "M2")
            .var("y", "M2")
            .constraint(&[0, 1], eq2())
            .build()
            .unwrap();
        let lp = link_partition(&inst).unwrap().unwrap();
        assert_eq!(lp.k, 2);
        assert_eq!(lp.classes[0], vec![vec![0], vec![1]]);
        assert!(lp.subuniverses_checked);
        let split = InstanceBuilder::new().algebra(named::m2()).var("x", "M2").var("y", "M2").build().unwrap();
        assert!(matches!(link_partition(&split), Err(Error::State(_))));
    }

    #[test]
    fn dot_output() {
        let inst = InstanceBuilder::new()
            .algebra(named::m2())
            .var("x", "M2")
            .var("y", "M2")
            .constraint(&[0, 1], eq2())
            .build()
            .unwrap();
        let dot = to_dot(&microstructure_graph(&inst), "ms", inst.variables());
        assert!(dot.starts_with("graph \"ms\""));
        assert!(dot.contains("x=0"));
    }
}
