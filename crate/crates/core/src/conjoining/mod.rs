//! Perfect conjoining matchings.
//!
//! A conjoining instance is a weighted graph whose nodes are split into
//! classes, plus a pattern graph on the classes. A perfect matching is
//! conjoining when, for every pattern edge `{V_i, V_j}`, some matched edge
//! runs between `V_i` and `V_j` (inside `V_i` for a loop).

pub mod field;
pub mod pfaffian;
pub mod sieve;

use std::fmt::Write as _;

use thiserror::Error;

use sieve::{Sieve, Variant};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("randomized extraction failed after {attempts} attempts")]
    RandomizedFailure { attempts: u32 },
    #[error("brute force limited to {cap} nodes, instance has {nodes}")]
    CapExceeded { nodes: usize, cap: usize },
    #[error("invalid instance: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    /// False negatives happen with probability at most `(n + ℓ)^-c`.
    pub error_exponent: u32,
    /// Fresh-seed restarts of the extraction before giving up.
    pub retries: u32,
    /// Largest number of interpolation points.
    pub max_points: usize,
    /// Largest number of pattern edges (the sieve is exponential in it).
    pub max_requirements: usize,
    /// Largest total number of matrix cells kept during extraction.
    pub max_state_cells: usize,
    /// Caller-certified bounds on the weight of every feasible matching;
    /// narrows the interpolation window.
    pub weight_window: Option<(u64, u64)>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            error_exponent: 2,
            retries: 3,
            max_points: 4096,
            max_requirements: 20,
            max_state_cells: 32_000_000,
            weight_window: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeightedEdge {
    pub u: usize,
    pub v: usize,
    pub weight: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjoiningInstance {
    nodes: usize,
    edges: Vec<WeightedEdge>,
    class_of: Vec<usize>,
    classes: usize,
    pattern: Vec<(usize, usize)>,
    budget: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjoiningSolution {
    /// Matched edge indices, ascending.
    pub edges: Vec<usize>,
    pub weight: u64,
    /// Pattern edge indices crossed by the matching, ascending.
    pub satisfied: Vec<usize>,
}

impl ConjoiningInstance {
    pub fn new(
        class_of: Vec<usize>,
        classes: usize,
        edges: Vec<WeightedEdge>,
        pattern: Vec<(usize, usize)>,
        budget: u64,
    ) -> Result<Self, EngineError> {
        let nodes = class_of.len();
        if let Some(c) = class_of.iter().find(|&&c| c >= classes) {
            return Err(EngineError::Invalid(format!("class {c} out of range")));
        }
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if e.u >= nodes || e.v >= nodes || e.u == e.v {
                return Err(EngineError::Invalid(format!("bad edge {e:?}")));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(EngineError::Invalid(format!("parallel edge {e:?}")));
            }
        }
        let mut norm = Vec::with_capacity(pattern.len());
        for &(a, b) in &pattern {
            if a >= classes || b >= classes {
                return Err(EngineError::Invalid(format!("pattern edge ({a}, {b})")));
            }
            let p = (a.min(b), a.max(b));
            if norm.contains(&p) {
                return Err(EngineError::Invalid(format!("repeated pattern edge {p:?}")));
            }
            norm.push(p);
        }
        Ok(ConjoiningInstance {
            nodes,
            edges,
            class_of,
            classes,
            pattern: norm,
            budget,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    pub fn class_of(&self, v: usize) -> usize {
        self.class_of[v]
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Pattern edges as `(i, j)` with `i ≤ j`.
    pub fn pattern(&self) -> &[(usize, usize)] {
        &self.pattern
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn has_loops(&self) -> bool {
        self.pattern.iter().any(|&(a, b)| a == b)
    }

    /// Bitmask of pattern edges crossed by edge `e`.
    pub fn crossings(&self, e: usize) -> u64 {
        let WeightedEdge { u, v, .. } = self.edges[e];
        let (a, b) = (self.class_of[u], self.class_of[v]);
        let key = (a.min(b), a.max(b));
        self.pattern
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == key)
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    fn sieve(&self) -> Sieve {
        let variants = (0..self.edges.len())
            .map(|i| Variant {
                u: self.edges[i].u,
                v: self.edges[i].v,
                weight: self.edges[i].weight,
                hits: self.crossings(i),
            })
            .collect();
        Sieve::new(self.nodes, self.pattern.len(), variants)
    }

    /// Deterministic check of every solution invariant.
    pub fn verify(&self, sol: &ConjoiningSolution) -> bool {
        let mut covered = vec![false; self.nodes];
        let mut hits = 0u64;
        let mut weight = 0;
        for &i in &sol.edges {
            let Some(e) = self.edges.get(i) else {
                return false;
            };
            if covered[e.u] || covered[e.v] {
                return false;
            }
            covered[e.u] = true;
            covered[e.v] = true;
            hits |= self.crossings(i);
            weight += e.weight;
        }
        let satisfied: Vec<usize> = (0..self.pattern.len()).filter(|i| hits >> i & 1 == 1).collect();
        covered.iter().all(|&c| c)
            && satisfied.len() == self.pattern.len()
            && weight == sol.weight
            && weight <= self.budget
            && satisfied == sol.satisfied
    }

    fn solution(&self, mut edges: Vec<usize>) -> ConjoiningSolution {
        edges.sort_unstable();
        let hits = edges.iter().fold(0u64, |m, &i| m | self.crossings(i));
        ConjoiningSolution {
            weight: edges.iter().map(|&i| self.edges[i].weight).sum(),
            satisfied: (0..self.pattern.len()).filter(|i| hits >> i & 1 == 1).collect(),
            edges,
        }
    }

    /// Plain-text dump: one `node`, `edge` or `pattern` record per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "conjoining {} nodes {} classes budget {}", self.nodes, self.classes, self.budget).unwrap();
        for (v, c) in self.class_of.iter().enumerate() {
            writeln!(out, "node {v} class {c}").unwrap();
        }
        for e in &self.edges {
            writeln!(out, "edge {} {} weight {}", e.u, e.v, e.weight).unwrap();
        }
        for (a, b) in &self.pattern {
            writeln!(out, "pattern {a} {b}").unwrap();
        }
        out
    }
}

/// Minimum weight of a perfect conjoining matching, if at most the budget.
/// Loops in the pattern are handled directly. False negatives only.
pub fn decide_min_weight(
    inst: &ConjoiningInstance,
    seed: u64,
    cfg: &EngineConfig,
) -> Result<Option<u64>, EngineError> {
    inst.sieve().min_weight(inst.budget, seed, cfg)
}

/// A perfect conjoining matching of weight exactly `target`.
pub fn extract_matching(
    inst: &ConjoiningInstance,
    target: u64,
    seed: u64,
    cfg: &EngineConfig,
) -> Result<ConjoiningSolution, EngineError> {
    let picked = inst.sieve().extract(target, seed, cfg)?;
    let sol = inst.solution(picked);
    if !inst.verify(&sol) {
        return Err(EngineError::RandomizedFailure {
            attempts: cfg.retries + 1,
        });
    }
    Ok(sol)
}

/// Decide, then extract.
pub fn solve(
    inst: &ConjoiningInstance,
    seed: u64,
    cfg: &EngineConfig,
) -> Result<Option<ConjoiningSolution>, EngineError> {
    match decide_min_weight(inst, seed, cfg)? {
        None => Ok(None),
        Some(w) => extract_matching(inst, w, sieve::derive_seed(seed, 1), cfg).map(Some),
    }
}

/// Loop-free equivalent of an instance, with a map back to the original edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayeredInstance {
    pub instance: ConjoiningInstance,
    /// Original edge of each layered edge; `None` for the star edges.
    pub back_map: Vec<Option<usize>>,
}

impl LayeredInstance {
    /// Node ids of `v′`, `v″` and `v*`.
    pub fn layers(v: usize) -> (usize, usize, usize) {
        (3 * v, 3 * v + 1, 3 * v + 2)
    }

    pub fn lift(&self, original: &ConjoiningInstance, sol: &ConjoiningSolution) -> ConjoiningSolution {
        let edges = sol.edges.iter().filter_map(|&i| self.back_map[i]).collect();
        original.solution(edges)
    }
}

/// Triples every node into `v′`, `v″`, `v*` and directs every pattern edge
/// from a `′` class to a `″` class, so loops disappear.
pub fn eliminate_self_loops(inst: &ConjoiningInstance) -> LayeredInstance {
    let t = inst.classes;
    let mut class_of = vec![0; 3 * inst.nodes];
    for v in 0..inst.nodes {
        let (a, b, s) = LayeredInstance::layers(v);
        class_of[a] = 2 * inst.class_of[v];
        class_of[b] = 2 * inst.class_of[v] + 1;
        class_of[s] = 2 * t;
    }
    let mut edges = Vec::new();
    let mut back_map = Vec::new();
    for v in 0..inst.nodes {
        let (a, b, s) = LayeredInstance::layers(v);
        edges.push(WeightedEdge { u: a, v: s, weight: 0 });
        edges.push(WeightedEdge { u: b, v: s, weight: 0 });
        back_map.extend([None, None]);
    }
    for (i, e) in inst.edges.iter().enumerate() {
        let (u1, u2, _) = LayeredInstance::layers(e.u);
        let (v1, v2, _) = LayeredInstance::layers(e.v);
        edges.push(WeightedEdge { u: u1, v: v2, weight: e.weight });
        edges.push(WeightedEdge { u: v1, v: u2, weight: e.weight });
        back_map.extend([Some(i), Some(i)]);
    }
    let pattern = inst.pattern.iter().map(|&(a, b)| (2 * a, 2 * b + 1)).collect();
    let instance = ConjoiningInstance::new(class_of, 2 * t + 1, edges, pattern, inst.budget)
        .expect("layered instance is well formed");
    LayeredInstance { instance, back_map }
}

pub const DEFAULT_BRUTE_FORCE_CAP: usize = 16;

/// Exact minimum-weight perfect conjoining matching by enumeration.
pub fn brute_force_conjoining(
    inst: &ConjoiningInstance,
    cap: usize,
) -> Result<Option<ConjoiningSolution>, EngineError> {
    if inst.nodes > cap {
        return Err(EngineError::CapExceeded {
            nodes: inst.nodes,
            cap,
        });
    }
    if inst.nodes % 2 == 1 {
        return Ok(None);
    }
    let mut adj = vec![Vec::new(); inst.nodes];
    for (i, e) in inst.edges.iter().enumerate() {
        adj[e.u].push((e.v, i));
        adj[e.v].push((e.u, i));
    }
    let all = if inst.pattern.is_empty() {
        0
    } else {
        u64::MAX >> (64 - inst.pattern.len())
    };
    let crossings: Vec<u64> = (0..inst.edges.len()).map(|i| inst.crossings(i)).collect();
    let mut search = MatchSearch {
        inst,
        adj: &adj,
        crossings: &crossings,
        all,
        matched: vec![false; inst.nodes],
        stack: Vec::new(),
        best: None,
    };
    search.run(0, 0);
    Ok(search
        .best
        .filter(|(w, _)| *w <= inst.budget)
        .map(|(_, edges)| inst.solution(edges)))
}

struct MatchSearch<'a> {
    inst: &'a ConjoiningInstance,
    adj: &'a [Vec<(usize, usize)>],
    crossings: &'a [u64],
    all: u64,
    matched: Vec<bool>,
    stack: Vec<usize>,
    best: Option<(u64, Vec<usize>)>,
}

impl MatchSearch<'_> {
    fn run(&mut self, weight: u64, hits: u64) {
        if self.best.as_ref().is_some_and(|(b, _)| weight >= *b) {
            return;
        }
        let Some(v) = self.matched.iter().position(|&m| !m) else {
            if hits == self.all {
                self.best = Some((weight, self.stack.clone()));
            }
            return;
        };
        self.matched[v] = true;
        for &(w, e) in &self.adj[v] {
            if self.matched[w] {
                continue;
            }
            self.matched[w] = true;
            self.stack.push(e);
            self.run(weight + self.inst.edges[e].weight, hits | self.crossings[e]);
            self.stack.pop();
            self.matched[w] = false;
        }
        self.matched[v] = false;
    }
}
