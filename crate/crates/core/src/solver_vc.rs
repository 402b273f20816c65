//! Vector covering: most containers whose load reaches the demand `T`.
//!
//! After removing vectors that cover on their own, any three large vectors
//! cover a container, so a covered container holds one, two or three of them.

use crate::conjoining::sieve::derive_seed;
use crate::conjoining::EngineError;
use crate::model::{validate, Assignment, Instance, Mode, Vector};
use crate::otr;
use crate::packing::{
    translate, BlockerGroup, ColorKind, ColorSpec, LargeSet, PackingGraph, SolveError, SolverConfig,
};
use crate::smallness::{split_small_large, FitMode, SmallnessResult};
use crate::solver_vp::enumerate_partitions;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preprocessed {
    pub reduced: Instance,
    /// Original index of each vector of `reduced`.
    pub kept: Vec<usize>,
    /// Vectors covering the demand alone, each in its own container.
    pub singles: Vec<usize>,
}

impl Preprocessed {
    pub fn covered(&self) -> usize {
        self.singles.len()
    }
}

pub fn preprocess_singletons(instance: &Instance) -> Preprocessed {
    let cap = instance.capacity();
    let (singles, kept): (Vec<usize>, Vec<usize>) =
        (0..instance.len()).partition(|&i| instance.vector(i).covers(cap));
    Preprocessed {
        reduced: instance.subset(&kept),
        kept,
        singles,
    }
}

/// One guess for a fixed target, in indices of the reduced instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverGuess {
    pub containers: usize,
    pub blocks: Vec<Vec<usize>>,
    /// Blocks already covered by their small vectors.
    pub full: Vec<bool>,
    /// Partial blocks completed by three large vectors outside the matching.
    pub triple: Vec<bool>,
    /// Containers still to cover with large vectors.
    pub c_prime: usize,
    /// Partial blocks completed through the matching.
    pub colored: usize,
    pub c1: usize,
    pub c2: usize,
    pub c3: usize,
}

#[derive(Clone, Debug)]
pub struct CoverOutcome {
    pub assignment: Assignment,
    pub pre: Preprocessed,
    pub split: SmallnessResult,
    pub guess: Option<CoverGuess>,
    pub probes: Vec<(usize, bool)>,
}

fn block_load(instance: &Instance, block: &[usize]) -> Vector {
    Vector::sum(instance.dimension(), block.iter().map(|&i| instance.vector(i)))
}

/// Colored graph of a guess. Colors: the matched partial blocks in order,
/// then ⊤ if some matched container is fresh, then ⊥ if blockers exist.
pub fn build_cover_graph(instance: &Instance, large: &LargeSet, guess: &CoverGuess) -> PackingGraph {
    let cap = instance.capacity();
    let l = large.len();
    let mut colors = Vec::new();
    for (b, block) in guess.blocks.iter().enumerate() {
        if !guess.full[b] && !guess.triple[b] {
            colors.push(ColorSpec {
                id: colors.len(),
                residual: block_load(instance, block).deficit_to(cap),
                kind: ColorKind::Partial { block: b },
            });
        }
    }
    let partial = colors.len();
    let top = (guess.c1 + guess.c2 > partial).then(|| {
        colors.push(ColorSpec {
            id: colors.len(),
            residual: cap.clone(),
            kind: ColorKind::Top,
        });
        colors.len() - 1
    });
    let b1 = l - guess.c1;
    let b2 = l - guess.c1 - 2 * guess.c2;
    let bottom = (b1 + b2 > 0).then(|| {
        colors.push(ColorSpec {
            id: colors.len(),
            residual: Vector::zeros(cap.dim()),
            kind: ColorKind::Bottom,
        });
        colors.len() - 1
    });
    let palette = colors.clone();
    let covering = |sum: &Vector| -> Vec<(usize, u64)> {
        palette[..partial]
            .iter()
            .filter(|c| sum.covers(&c.residual))
            .map(|c| (c.id, 1))
            .collect()
    };
    let groups = [
        BlockerGroup {
            count: b1,
            to_large: false,
            to_copies: true,
        },
        BlockerGroup {
            count: b2,
            to_large: true,
            to_copies: false,
        },
    ];
    large.assemble(
        colors,
        |_, _, sum| {
            let mut opts = covering(sum);
            if let Some(t) = top {
                if sum.covers(cap) {
                    opts.push((t, 0));
                }
            }
            opts
        },
        |_, v| covering(v),
        &groups,
        bottom,
        0,
        partial as u64,
    )
}

enum Witness {
    /// Every remaining container gets three large vectors.
    Trivial { blocks: Vec<Vec<usize>>, fresh: usize },
    Graph(CoverGuess, PackingGraph, u64),
}

fn decide(
    inst: &Instance,
    split: &SmallnessResult,
    large: &LargeSet,
    containers: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Option<Witness>, SolveError> {
    let cap = inst.capacity();
    let l = large.len();
    if containers == 0 {
        let blocks = if split.small.is_empty() { Vec::new() } else { vec![split.small.clone()] };
        return Ok(Some(Witness::Trivial { blocks, fresh: 0 }));
    }
    let stream = derive_seed(seed, containers as u64);
    let mut g = 0u64;
    for blocks in enumerate_partitions(&split.small, containers.min(split.k())) {
        let full: Vec<bool> = blocks.iter().map(|b| block_load(inst, b).covers(cap)).collect();
        let n_full = full.iter().filter(|&&f| f).count();
        let c_prime = containers.saturating_sub(n_full);
        let partials: Vec<usize> = (0..blocks.len()).filter(|&b| !full[b]).collect();
        if partials.len() > c_prime {
            continue;
        }
        if 3 * c_prime <= l {
            let fresh = c_prime - partials.len();
            return Ok(Some(Witness::Trivial { blocks, fresh }));
        }
        for mask in 0u64..(1u64 << partials.len()) {
            let mut triple = vec![false; blocks.len()];
            for (t, &b) in partials.iter().enumerate() {
                triple[b] = mask >> t & 1 == 1;
            }
            let n_triple = mask.count_ones() as usize;
            let colored = partials.len() - n_triple;
            for c1 in 0..=colored {
                // C3 = (L - C1) - 2(C' - C1) and C2 = C' - C1 - C3.
                let Some(c3) = (l + c1).checked_sub(2 * c_prime) else {
                    continue;
                };
                let Some(c2) = c_prime.checked_sub(c1 + c3) else {
                    continue;
                };
                if c3 < n_triple || c1 + c2 < colored {
                    continue;
                }
                let guess = CoverGuess {
                    containers,
                    blocks: blocks.clone(),
                    full: full.clone(),
                    triple: triple.clone(),
                    c_prime,
                    colored,
                    c1,
                    c2,
                    c3,
                };
                let pg = build_cover_graph(inst, large, &guess);
                let mut ocfg = cfg.otr.clone();
                ocfg.weight_window = Some((colored as u64, (c1 + c2) as u64));
                let found = otr::decide(&pg.graph, derive_seed(stream, g), &ocfg)
                    .map_err(SolveError::engine(format!("covering {containers} containers")))?;
                g += 1;
                if let Some(w) = found {
                    return Ok(Some(Witness::Graph(guess, pg, w)));
                }
            }
        }
    }
    Ok(None)
}

pub fn solve(instance: &Instance, seed: u64) -> Result<Assignment, SolveError> {
    solve_with(instance, seed, &SolverConfig::default()).map(|o| o.assignment)
}

pub fn solve_with(instance: &Instance, seed: u64, cfg: &SolverConfig) -> Result<CoverOutcome, SolveError> {
    let pre = preprocess_singletons(instance);
    let inst = &pre.reduced;
    let split = split_small_large(inst, FitMode::Cover);
    let large = LargeSet::new(inst, &split.large);
    let mut lo = large.len() / 3;
    let mut hi = (inst.len() / 2).max(lo);
    let mut probes = Vec::new();
    let mut best: Option<(usize, Witness)> = None;
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        let found = decide(inst, &split, &large, mid, seed, cfg)?;
        probes.push((mid, found.is_some()));
        match found {
            Some(w) => {
                lo = mid;
                best = Some((mid, w));
            }
            None => hi = mid - 1,
        }
    }
    let witness = match best {
        Some((c, w)) if c == lo => w,
        _ => decide(inst, &split, &large, lo, seed, cfg)?.ok_or_else(|| SolveError::Engine {
            context: format!("covering {lo} containers"),
            source: EngineError::RandomizedFailure {
                attempts: cfg.otr.engine.retries + 1,
            },
        })?,
    };
    let (mut containers, guess) = match witness {
        Witness::Trivial { blocks, fresh } => {
            let mut containers = blocks;
            containers.extend(std::iter::repeat_with(Vec::new).take(fresh));
            let cap = inst.capacity();
            let open: Vec<usize> = (0..containers.len())
                .filter(|&b| !block_load(inst, &containers[b]).covers(cap))
                .collect();
            let mut rest = large.ids.iter().copied();
            for &b in &open {
                containers[b].extend(rest.by_ref().take(3));
            }
            let rest: Vec<usize> = rest.collect();
            if containers.is_empty() {
                containers.push(Vec::new());
            }
            containers[0].extend(rest);
            (containers, None)
        }
        Witness::Graph(guess, pg, weight) => {
            let mut ocfg = cfg.otr.clone();
            ocfg.weight_window = Some((guess.colored as u64, (guess.c1 + guess.c2) as u64));
            let sol = otr::extract(&pg.graph, weight, derive_seed(seed, u64::MAX), &ocfg)
                .map_err(SolveError::engine(format!("covering {lo} containers")))?;
            let tr = translate(&pg, &large, guess.blocks.len(), &sol);
            for (c, &u) in tr.uses.iter().enumerate() {
                if matches!(pg.colors[c].kind, ColorKind::Partial { .. }) {
                    assert_eq!(u, 1, "partial color used more than once");
                }
            }
            let mut containers: Vec<Vec<usize>> = guess
                .blocks
                .iter()
                .zip(tr.into_blocks)
                .map(|(b, extra)| b.iter().copied().chain(extra).collect())
                .collect();
            containers.extend(tr.fresh);
            assert_eq!(tr.blocked.len(), 3 * guess.c3);
            let mut threes = tr.blocked.chunks(3);
            for b in 0..guess.blocks.len() {
                if guess.triple[b] {
                    containers[b].extend(threes.next().expect("enough triples"));
                }
            }
            containers.extend(threes.map(|t| t.to_vec()));
            (containers, Some(guess))
        }
    };
    // Back to original indices, then the single coverers.
    for c in &mut containers {
        for i in c.iter_mut() {
            *i = pre.kept[*i];
        }
    }
    containers.extend(pre.singles.iter().map(|&i| vec![i]));
    let cap = instance.capacity();
    let covered = containers
        .iter()
        .filter(|c| block_load(instance, c).covers(cap))
        .count();
    assert!(covered >= lo + pre.covered(), "cover translation lost containers");
    let assignment = Assignment::from_containers(instance.len(), &containers, covered as u64);
    let report = validate(instance, &assignment, Mode::Cover);
    assert!(report.valid, "cover translation invalid: {:?}", report.violations);
    Ok(CoverOutcome {
        assignment,
        pre,
        split,
        guess,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_rational;

    fn one_dim(sizes: &[&str]) -> Instance {
        Instance::one_dim(
            parse_rational("1").unwrap(),
            sizes.iter().map(|s| parse_rational(s).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn singletons_removed() {
        let pre = preprocess_singletons(&one_dim(&["1.2", "0.5"]));
        assert_eq!(pre.covered(), 1);
        assert_eq!(pre.singles, vec![0]);
        assert_eq!(pre.kept, vec![1]);
        assert_eq!(pre.reduced.len(), 1);
        let same = one_dim(&["0.2", "0.5"]);
        assert_eq!(preprocess_singletons(&same).reduced, same);
    }

    #[test]
    fn small_examples() {
        assert_eq!(solve(&one_dim(&["0.6", "0.5"]), 0).unwrap().objective, 1);
        assert_eq!(solve(&one_dim(&[]), 0).unwrap().objective, 0);
        assert_eq!(solve(&one_dim(&["0.3"]), 0).unwrap().objective, 0);
        assert_eq!(solve(&one_dim(&["1.2", "1", "0.5", "0.5"]), 0).unwrap().objective, 3);
        assert_eq!(
            solve(&one_dim(&["0.5", "0.5", "0.9", "0.1", "0.4", "0.6"]), 3).unwrap().objective,
            3
        );
    }

    #[test]
    fn graph_node_count() {
        let inst = one_dim(&["0.45", "0.45", "0.45", "0.45", "0.45", "0.2", "0.7"]);
        let split = split_small_large(&inst, FitMode::Cover);
        let large = LargeSet::new(&inst, &split.large);
        let l = large.len();
        assert_eq!(l, 7);
        let guess = CoverGuess {
            containers: 3,
            blocks: vec![],
            full: vec![],
            triple: vec![],
            c_prime: 3,
            colored: 0,
            c1: 0,
            c2: 2,
            c3: 1,
        };
        let pg = build_cover_graph(&inst, &large, &guess);
        assert_eq!(pg.graph.nodes(), 4 * l - 2 * guess.c1 - 2 * guess.c2);
        assert_eq!(pg.graph.budget(), 0);
    }
}
