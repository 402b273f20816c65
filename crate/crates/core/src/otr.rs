//! Perfect Over-the-Rainbow matchings.
//!
//! Every edge carries a non-empty set of colors with a weight per color. A
//! solution is a perfect matching with one chosen color per matched edge such
//! that every color is used at least once and the total weight stays within
//! the budget.

use std::fmt::Write as _;

use crate::conjoining::sieve::{derive_seed, Sieve, Variant};
use crate::conjoining::{
    self, eliminate_self_loops, ConjoiningInstance, EngineConfig, EngineError, WeightedEdge,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredEdge {
    pub u: usize,
    pub v: usize,
    /// `(color, weight)` pairs, colors strictly ascending.
    pub options: Vec<(usize, u64)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredGraph {
    nodes: usize,
    colors: usize,
    edges: Vec<ColoredEdge>,
    budget: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RainbowSolution {
    /// `(edge, color)` per matched edge, ascending by edge.
    pub matching: Vec<(usize, usize)>,
    pub weight: u64,
}

impl ColoredGraph {
    pub fn new(
        nodes: usize,
        colors: usize,
        edges: Vec<ColoredEdge>,
        budget: u64,
    ) -> Result<Self, EngineError> {
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if e.u >= nodes || e.v >= nodes || e.u == e.v {
                return Err(EngineError::Invalid(format!("bad edge {}-{}", e.u, e.v)));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(EngineError::Invalid(format!("parallel edge {}-{}", e.u, e.v)));
            }
            if e.options.is_empty() {
                return Err(EngineError::Invalid(format!("edge {}-{} has no color", e.u, e.v)));
            }
            if e.options.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(EngineError::Invalid("colors must be strictly ascending".into()));
            }
            if e.options.iter().any(|&(c, _)| c >= colors) {
                return Err(EngineError::Invalid("color out of range".into()));
            }
        }
        Ok(ColoredGraph {
            nodes,
            colors,
            edges,
            budget,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn colors(&self) -> usize {
        self.colors
    }

    pub fn edges(&self) -> &[ColoredEdge] {
        &self.edges
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Colors allowed on edge `e`.
    pub fn lambda(&self, e: usize) -> Vec<usize> {
        self.edges[e].options.iter().map(|&(c, _)| c).collect()
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| (e.u, e.v) == (u, v) || (e.u, e.v) == (v, u))
    }

    fn weight_of(&self, e: usize, c: usize) -> Option<u64> {
        self.edges[e]
            .options
            .iter()
            .find(|&&(col, _)| col == c)
            .map(|&(_, w)| w)
    }

    /// Deterministic check of every solution invariant.
    pub fn verify(&self, sol: &RainbowSolution) -> bool {
        let mut covered = vec![false; self.nodes];
        let mut used = vec![false; self.colors];
        let mut weight = 0;
        for &(e, c) in &sol.matching {
            let Some(edge) = self.edges.get(e) else {
                return false;
            };
            let Some(w) = self.weight_of(e, c) else {
                return false;
            };
            if covered[edge.u] || covered[edge.v] {
                return false;
            }
            covered[edge.u] = true;
            covered[edge.v] = true;
            used[c] = true;
            weight += w;
        }
        covered.iter().all(|&x| x)
            && used.iter().all(|&x| x)
            && weight == sol.weight
            && weight <= self.budget
    }

    /// Plain-text dump: one `edge` line per edge with its `color:weight` options.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "rainbow {} nodes {} colors budget {}", self.nodes, self.colors, self.budget).unwrap();
        for e in &self.edges {
            let opts: Vec<String> = e.options.iter().map(|(c, w)| format!("{c}:{w}")).collect();
            writeln!(out, "edge {} {} {}", e.u, e.v, opts.join(" ")).unwrap();
        }
        out
    }
}

/// How [`solve`] and [`decide`] run the algebraic engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Reduce to conjoining matching with per-color copies and knock-out sets.
    /// With `layered`, pattern loops are removed by the node-tripling
    /// transformation before solving; otherwise they are sieved directly.
    Conjoining { layered: bool },
    /// Sieve over colors on the original graph, one variant per (edge, color).
    /// Algebraically the same polynomial as the reduction with the knock-out
    /// nodes eliminated, on a graph |C| times smaller.
    ColorSieve,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OtrConfig {
    pub route: Route,
    pub engine: EngineConfig,
    /// Caller-certified bounds on the weight of every solution, narrowing the
    /// interpolation window.
    pub weight_window: Option<(u64, u64)>,
}

impl Default for OtrConfig {
    fn default() -> Self {
        OtrConfig {
            route: Route::Conjoining { layered: false },
            engine: EngineConfig::default(),
            weight_window: None,
        }
    }
}

impl OtrConfig {
    pub fn with_route(route: Route) -> Self {
        OtrConfig {
            route,
            ..OtrConfig::default()
        }
    }
}

/// The reduced instance plus, per reduced edge, the `(edge, color)` it copies.
/// Knock-out edges map to `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub instance: ConjoiningInstance,
    pub back_map: Vec<Option<(usize, usize)>>,
}

impl Reduction {
    /// Node id of the copy of `v` for color `c`.
    pub fn copy_node(cg: &ColoredGraph, v: usize, c: usize) -> usize {
        c * cg.nodes + v
    }

    /// Node id of the `i`-th knock-out node of `v`.
    pub fn knockout_node(cg: &ColoredGraph, v: usize, i: usize) -> usize {
        cg.colors * cg.nodes + v * (cg.colors - 1) + i
    }
}

pub fn reduce_to_conjoining(cg: &ColoredGraph) -> Reduction {
    let (n, k) = (cg.nodes, cg.colors);
    if k == 0 {
        // No copies exist; keep the bare nodes so an empty graph stays feasible
        // and anything else has no perfect matching.
        let instance = ConjoiningInstance::new(vec![0; n], 1, vec![], vec![], cg.budget)
            .expect("well formed");
        return Reduction {
            instance,
            back_map: vec![],
        };
    }
    let total = k * n + (k - 1) * n;
    let mut class_of = vec![k; total];
    for c in 0..k {
        for v in 0..n {
            class_of[Reduction::copy_node(cg, v, c)] = c;
        }
    }
    let mut edges = Vec::new();
    let mut back_map = Vec::new();
    for c in 0..k {
        for (i, e) in cg.edges.iter().enumerate() {
            if let Some(w) = cg.weight_of(i, c) {
                edges.push(WeightedEdge {
                    u: Reduction::copy_node(cg, e.u, c),
                    v: Reduction::copy_node(cg, e.v, c),
                    weight: w,
                });
                back_map.push(Some((i, c)));
            }
        }
    }
    for v in 0..n {
        for j in 0..k - 1 {
            for c in 0..k {
                edges.push(WeightedEdge {
                    u: Reduction::copy_node(cg, v, c),
                    v: Reduction::knockout_node(cg, v, j),
                    weight: 0,
                });
                back_map.push(None);
            }
        }
    }
    let pattern = (0..k).map(|c| (c, c)).collect();
    let instance = ConjoiningInstance::new(class_of, k + 1, edges, pattern, cg.budget)
        .expect("reduction is well formed");
    Reduction { instance, back_map }
}

fn color_sieve(cg: &ColoredGraph) -> (Sieve, Vec<(usize, usize)>) {
    let mut variants = Vec::new();
    let mut origin = Vec::new();
    for (i, e) in cg.edges.iter().enumerate() {
        for &(c, w) in &e.options {
            variants.push(Variant {
                u: e.u,
                v: e.v,
                weight: w,
                hits: 1 << c,
            });
            origin.push((i, c));
        }
    }
    (Sieve::new(cg.nodes, cg.colors, variants), origin)
}

fn engine_config(cfg: &OtrConfig) -> EngineConfig {
    let mut e = cfg.engine.clone();
    if let Some(w) = cfg.weight_window {
        e.weight_window = Some(e.weight_window.map_or(w, |(a, b)| (a.max(w.0), b.min(w.1))));
    }
    e
}

/// Minimum solution weight, if within budget. False negatives only.
pub fn decide(cg: &ColoredGraph, seed: u64, cfg: &OtrConfig) -> Result<Option<u64>, EngineError> {
    let ecfg = engine_config(cfg);
    match cfg.route {
        Route::ColorSieve => color_sieve(cg).0.min_weight(cg.budget, seed, &ecfg),
        Route::Conjoining { layered } => {
            let red = reduce_to_conjoining(cg);
            if layered {
                conjoining::decide_min_weight(&eliminate_self_loops(&red.instance).instance, seed, &ecfg)
            } else {
                conjoining::decide_min_weight(&red.instance, seed, &ecfg)
            }
        }
    }
}

/// A minimum-weight solution, if one within budget exists. Every returned
/// solution has been verified deterministically.
pub fn solve(
    cg: &ColoredGraph,
    seed: u64,
    cfg: &OtrConfig,
) -> Result<Option<RainbowSolution>, EngineError> {
    let Some(w) = decide(cg, seed, cfg)? else {
        return Ok(None);
    };
    extract(cg, w, derive_seed(seed, 1), cfg).map(Some)
}

/// A solution of weight exactly `target`, which a prior [`decide`] reported.
pub fn extract(
    cg: &ColoredGraph,
    target: u64,
    seed: u64,
    cfg: &OtrConfig,
) -> Result<RainbowSolution, EngineError> {
    let ecfg = engine_config(cfg);
    let mut matching = match cfg.route {
        Route::ColorSieve => {
            let (sieve, origin) = color_sieve(cg);
            let picked = sieve.extract(target, seed, &ecfg)?;
            picked.into_iter().map(|i| origin[i]).collect::<Vec<_>>()
        }
        Route::Conjoining { layered } => {
            let red = reduce_to_conjoining(cg);
            let sol = if layered {
                let lay = eliminate_self_loops(&red.instance);
                let s = conjoining::extract_matching(&lay.instance, target, seed, &ecfg)?;
                lay.lift(&red.instance, &s)
            } else {
                conjoining::extract_matching(&red.instance, target, seed, &ecfg)?
            };
            assert_one_real_copy(cg, &red, &sol.edges);
            sol.edges.iter().filter_map(|&i| red.back_map[i]).collect()
        }
    };
    matching.sort_unstable();
    let sol = RainbowSolution {
        weight: matching
            .iter()
            .map(|&(e, c)| cg.weight_of(e, c).expect("color in lambda"))
            .sum(),
        matching,
    };
    if !cg.verify(&sol) || sol.weight != target {
        return Err(EngineError::RandomizedFailure {
            attempts: cfg.engine.retries + 1,
        });
    }
    Ok(sol)
}

/// In a perfect matching of the reduced graph exactly one copy of each node
/// is matched outside its knock-out set.
fn assert_one_real_copy(cg: &ColoredGraph, red: &Reduction, edges: &[usize]) {
    let mut real = vec![0usize; cg.nodes];
    for &i in edges {
        if red.back_map[i].is_some() {
            let e = red.instance.edges()[i];
            real[e.u % cg.nodes] += 1;
            real[e.v % cg.nodes] += 1;
        }
    }
    assert!(real.iter().all(|&r| r == 1), "copy structure violated: {real:?}");
}

pub const DEFAULT_BRUTE_FORCE_CAP: usize = 16;

/// Exact minimum-weight solution by enumerating perfect matchings and colors.
pub fn brute_force(cg: &ColoredGraph, cap: usize) -> Result<Option<RainbowSolution>, EngineError> {
    if cg.nodes > cap {
        return Err(EngineError::CapExceeded {
            nodes: cg.nodes,
            cap,
        });
    }
    if cg.nodes % 2 == 1 {
        return Ok(None);
    }
    let mut adj = vec![Vec::new(); cg.nodes];
    for (i, e) in cg.edges.iter().enumerate() {
        adj[e.u].push((e.v, i));
        adj[e.v].push((e.u, i));
    }
    let mut search = RainbowSearch {
        cg,
        adj,
        all: if cg.colors == 0 { 0 } else { u64::MAX >> (64 - cg.colors) },
        matched: vec![false; cg.nodes],
        stack: Vec::new(),
        best: None,
    };
    search.run(0, 0);
    Ok(search.best.filter(|(w, _)| *w <= cg.budget).map(|(weight, mut matching)| {
        matching.sort_unstable();
        RainbowSolution { matching, weight }
    }))
}

struct RainbowSearch<'a> {
    cg: &'a ColoredGraph,
    adj: Vec<Vec<(usize, usize)>>,
    all: u64,
    matched: Vec<bool>,
    stack: Vec<(usize, usize)>,
    best: Option<(u64, Vec<(usize, usize)>)>,
}

impl RainbowSearch<'_> {
    fn run(&mut self, weight: u64, used: u64) {
        if self.best.as_ref().is_some_and(|(b, _)| weight >= *b) {
            return;
        }
        let Some(v) = self.matched.iter().position(|&m| !m) else {
            if used == self.all {
                self.best = Some((weight, self.stack.clone()));
            }
            return;
        };
        self.matched[v] = true;
        for k in 0..self.adj[v].len() {
            let (w, e) = self.adj[v][k];
            if self.matched[w] {
                continue;
            }
            self.matched[w] = true;
            for &(c, cw) in &self.cg.edges[e].options {
                self.stack.push((e, c));
                self.run(weight + cw, used | 1 << c);
                self.stack.pop();
            }
            self.matched[w] = false;
        }
        self.matched[v] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(u: usize, v: usize, options: &[(usize, u64)]) -> ColoredEdge {
        ColoredEdge {
            u,
            v,
            options: options.to_vec(),
        }
    }

    fn routes() -> [OtrConfig; 3] {
        [
            OtrConfig::default(),
            OtrConfig::with_route(Route::Conjoining { layered: true }),
            OtrConfig::with_route(Route::ColorSieve),
        ]
    }

    #[test]
    fn k2_examples() {
        let cg = ColoredGraph::new(2, 1, vec![edge(0, 1, &[(0, 0)])], 0).unwrap();
        for cfg in routes() {
            let sol = solve(&cg, 3, &cfg).unwrap().unwrap();
            assert_eq!(sol.matching, vec![(0, 0)]);
            assert_eq!(sol.weight, 0);
        }
        let cg = ColoredGraph::new(2, 2, vec![edge(0, 1, &[(0, 0)])], 100).unwrap();
        for cfg in routes() {
            assert_eq!(solve(&cg, 3, &cfg).unwrap(), None);
        }
        assert_eq!(brute_force(&cg, 16).unwrap(), None);
    }

    #[test]
    fn empty_graph() {
        let cg = ColoredGraph::new(0, 0, vec![], 0).unwrap();
        assert_eq!(brute_force(&cg, 16).unwrap().unwrap().weight, 0);
        for cfg in routes() {
            assert_eq!(solve(&cg, 0, &cfg).unwrap().unwrap().weight, 0);
        }
    }

    #[test]
    fn path_of_three_edges() {
        // Only perfect matching is {01, 23}.
        let build = |outer: (usize, usize)| {
            ColoredGraph::new(
                4,
                2,
                vec![
                    edge(0, 1, &[(outer.0, 1)]),
                    edge(1, 2, &[(0, 0), (1, 0)]),
                    edge(2, 3, &[(outer.1, 1)]),
                ],
                10,
            )
            .unwrap()
        };
        let ok = build((0, 1));
        assert_eq!(brute_force(&ok, 16).unwrap().unwrap().matching, vec![(0, 0), (2, 1)]);
        let bad = build((1, 1));
        assert_eq!(brute_force(&bad, 16).unwrap(), None);
        for cfg in routes() {
            assert_eq!(solve(&ok, 1, &cfg).unwrap().unwrap().weight, 2);
            assert_eq!(solve(&bad, 1, &cfg).unwrap(), None);
        }
    }

    #[test]
    fn reduction_shapes() {
        let one = ColoredGraph::new(2, 1, vec![edge(0, 1, &[(0, 4)])], 9).unwrap();
        let red = reduce_to_conjoining(&one);
        assert_eq!(red.instance.nodes(), 2);
        assert_eq!(red.instance.pattern(), &[(0, 0)]);
        assert_eq!(red.back_map, vec![Some((0, 0))]);

        // A single node with four colors: four copies, three knock-out nodes, 12 edges.
        let lone = ColoredGraph::new(1, 4, vec![], 0).unwrap();
        let red = reduce_to_conjoining(&lone);
        assert_eq!(red.instance.nodes(), 4 + 3);
        assert_eq!(red.instance.edges().len(), 12);
        assert!(red.instance.edges().iter().all(|e| e.weight == 0));
        assert_eq!(red.instance.pattern().len(), 4);
        assert!((4..7).all(|v| red.instance.class_of(v) == 4));

        let cg = ColoredGraph::new(
            3,
            3,
            vec![edge(0, 1, &[(0, 1), (2, 2)]), edge(1, 2, &[(1, 0)])],
            5,
        )
        .unwrap();
        let red = reduce_to_conjoining(&cg);
        assert_eq!(red.instance.nodes(), 3 * 3 + 2 * 3);
        assert_eq!(red.instance.edges().len(), 3 + 3 * 2 * 3);
    }

    #[test]
    fn validation_rejects() {
        let cg = ColoredGraph::new(2, 1, vec![edge(0, 1, &[(0, 2)])], 5).unwrap();
        let good = RainbowSolution {
            matching: vec![(0, 0)],
            weight: 2,
        };
        assert!(cg.verify(&good));
        assert!(!cg.verify(&RainbowSolution { weight: 1, ..good.clone() }));
        assert!(!cg.verify(&RainbowSolution {
            matching: vec![],
            weight: 0
        }));
        assert!(ColoredGraph::new(2, 1, vec![edge(0, 1, &[])], 0).is_err());
        assert!(ColoredGraph::new(2, 1, vec![edge(0, 1, &[(1, 0)])], 0).is_err());
    }
}
