//! Shared pieces of the packing, covering and knapsack graph constructions.
//!
//! Node layout: large vectors `0..L`, their copies `L..2L`, then blockers.

use thiserror::Error;

use crate::conjoining::EngineError;
use crate::model::{Instance, Vector};
use crate::otr::{ColoredEdge, ColoredGraph, OtrConfig, RainbowSolution, Route};

/// Engine settings shared by the randomized solvers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub otr: OtrConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            otr: OtrConfig::with_route(Route::ColorSieve),
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("object {index} exceeds the container capacity")]
    Oversized { index: usize },
    #[error("knapsack instances need profits and a container count")]
    MissingKnapsackData,
    #[error("deterministic bin packing needs dimension 1, got {0}")]
    NotOneDimensional(usize),
    #[error("{context}: {source}")]
    Engine {
        context: String,
        #[source]
        source: EngineError,
    },
}

impl SolveError {
    pub fn is_randomized_failure(&self) -> bool {
        matches!(
            self,
            SolveError::Engine {
                source: EngineError::RandomizedFailure { .. },
                ..
            }
        )
    }

    pub(crate) fn engine(context: impl Into<String>) -> impl FnOnce(EngineError) -> SolveError {
        let context = context.into();
        move |source| SolveError::Engine { context, source }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ColorKind {
    /// A partially filled container, by block index of the guess.
    Partial { block: usize },
    Top,
    Bottom,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorSpec {
    pub id: usize,
    /// Remaining room (packing) or remaining demand (covering).
    pub residual: Vector,
    pub kind: ColorKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    /// Two large vectors, by position in the large list.
    Pair(usize, usize),
    /// A large vector with its own copy: the vector alone.
    Single(usize),
    /// A large vector (or its copy when `copy`) with a blocker.
    Block { large: usize, copy: bool, blocker: usize },
}

#[derive(Clone, Debug)]
pub struct PackingGraph {
    pub graph: ColoredGraph,
    pub kinds: Vec<EdgeKind>,
    pub colors: Vec<ColorSpec>,
    pub blockers: usize,
}

/// Which side of the large vectors a blocker group is joined to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockerGroup {
    pub count: usize,
    pub to_large: bool,
    pub to_copies: bool,
}

/// Large vectors with their pairwise sums, computed once per solve.
pub struct LargeSet {
    pub ids: Vec<usize>,
    pub vectors: Vec<Vector>,
    pairs: Vec<(usize, usize, Vector)>,
}

impl LargeSet {
    pub fn new(instance: &Instance, ids: &[usize]) -> LargeSet {
        let vectors: Vec<Vector> = ids.iter().map(|&i| instance.vector(i).clone()).collect();
        let mut pairs = Vec::new();
        for i in 0..vectors.len() {
            for j in i + 1..vectors.len() {
                pairs.push((i, j, vectors[i].add(&vectors[j])));
            }
        }
        LargeSet {
            ids: ids.to_vec(),
            vectors,
            pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Builds the colored graph. `pair_options` and `single_options` return the
    /// `(color, weight)` list of a pair or single edge given its sum; empty
    /// lists drop the edge. Blocker edges get color `bottom`.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        &self,
        colors: Vec<ColorSpec>,
        mut pair_options: impl FnMut(usize, usize, &Vector) -> Vec<(usize, u64)>,
        mut single_options: impl FnMut(usize, &Vector) -> Vec<(usize, u64)>,
        groups: &[BlockerGroup],
        bottom: Option<usize>,
        blocker_weight: u64,
        budget: u64,
    ) -> PackingGraph {
        let l = self.len();
        let blockers: usize = groups.iter().map(|g| g.count).sum();
        let mut edges = Vec::new();
        let mut kinds = Vec::new();
        for (i, j, sum) in &self.pairs {
            let options = pair_options(*i, *j, sum);
            if !options.is_empty() {
                edges.push(ColoredEdge { u: *i, v: *j, options });
                kinds.push(EdgeKind::Pair(*i, *j));
            }
        }
        for (i, v) in self.vectors.iter().enumerate() {
            let options = single_options(i, v);
            if !options.is_empty() {
                edges.push(ColoredEdge { u: i, v: l + i, options });
                kinds.push(EdgeKind::Single(i));
            }
        }
        let mut first = 2 * l;
        for g in groups {
            if g.count > 0 {
                let bottom = bottom.expect("blockers need the bottom color");
                for i in 0..l {
                    for (on, copy) in [(g.to_large, false), (g.to_copies, true)] {
                        if !on {
                            continue;
                        }
                        for b in first..first + g.count {
                            edges.push(ColoredEdge {
                                u: if copy { l + i } else { i },
                                v: b,
                                options: vec![(bottom, blocker_weight)],
                            });
                            kinds.push(EdgeKind::Block {
                                large: i,
                                copy,
                                blocker: b - 2 * l,
                            });
                        }
                    }
                }
            }
            first += g.count;
        }
        let graph = ColoredGraph::new(2 * l + blockers, colors.len(), edges, budget)
            .expect("packing graph is well formed");
        PackingGraph {
            graph,
            kinds,
            colors,
            blockers,
        }
    }
}

/// Large vectors per color class of a solution. Partial colors map to their
/// block on first use; repeats and ⊤ edges open fresh containers.
pub struct Translation {
    /// Large object ids added to each guessed block.
    pub into_blocks: Vec<Vec<usize>>,
    /// Large object ids of each fresh container.
    pub fresh: Vec<Vec<usize>>,
    /// Large object ids matched to blockers directly (not their copies).
    pub blocked: Vec<usize>,
    /// Number of container edges per partial color.
    pub uses: Vec<usize>,
}

pub fn translate(pg: &PackingGraph, large: &LargeSet, blocks: usize, sol: &RainbowSolution) -> Translation {
    let mut into_blocks = vec![Vec::new(); blocks];
    let mut taken = vec![false; blocks];
    let mut fresh = Vec::new();
    let mut blocked = Vec::new();
    let mut uses = vec![0; pg.colors.len()];
    for &(e, c) in &sol.matching {
        let members = match pg.kinds[e] {
            EdgeKind::Pair(i, j) => vec![large.ids[i], large.ids[j]],
            EdgeKind::Single(i) => vec![large.ids[i]],
            EdgeKind::Block { large: i, copy, .. } => {
                if !copy {
                    blocked.push(large.ids[i]);
                }
                continue;
            }
        };
        uses[c] += 1;
        match pg.colors[c].kind {
            ColorKind::Partial { block } if !taken[block] => {
                taken[block] = true;
                into_blocks[block] = members;
            }
            ColorKind::Bottom => unreachable!("container edge colored bottom"),
            _ => fresh.push(members),
        }
    }
    Translation {
        into_blocks,
        fresh,
        blocked,
        uses,
    }
}
