//! Vector packing: fewest containers of capacity `T` holding every vector.
//!
//! Small vectors are placed by exhaustive guessing, large ones through one
//! rainbow matching per guess. The container count is binary searched.

use num_traits::ToPrimitive;

use crate::conjoining::sieve::derive_seed;
use crate::model::{validate, Assignment, Instance, Mode, Vector};
use crate::otr;
use crate::packing::{
    translate, BlockerGroup, ColorKind, ColorSpec, LargeSet, PackingGraph, SolveError,
    SolverConfig,
};
use crate::smallness::{split_small_large, FitMode, SmallnessResult};

/// Set partitions of `items` into at most `max_blocks` blocks, in restricted
/// growth order. Blocks list items in input order.
pub fn enumerate_partitions(items: &[usize], max_blocks: usize) -> Partitions {
    Partitions {
        items: items.to_vec(),
        max_blocks,
        rgs: vec![0; items.len()],
        started: false,
        done: !items.is_empty() && max_blocks == 0,
    }
}

pub struct Partitions {
    items: Vec<usize>,
    max_blocks: usize,
    rgs: Vec<usize>,
    started: bool,
    done: bool,
}

impl Partitions {
    fn advance(&mut self) -> bool {
        let n = self.rgs.len();
        for i in (1..n).rev() {
            let prefix_max = self.rgs[..i].iter().copied().max().unwrap_or(0);
            if self.rgs[i] <= prefix_max && self.rgs[i] + 1 < self.max_blocks {
                self.rgs[i] += 1;
                for x in &mut self.rgs[i + 1..] {
                    *x = 0;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for Partitions {
    type Item = Vec<Vec<usize>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        let blocks = self.rgs.iter().copied().max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); blocks];
        for (pos, &b) in self.rgs.iter().enumerate() {
            out[b].push(self.items[pos]);
        }
        Some(out)
    }
}

/// One guess for a fixed container count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackGuess {
    pub containers: usize,
    /// Small vectors per guessed container.
    pub blocks: Vec<Vec<usize>>,
    /// Blocks that receive no large vector.
    pub finalized: Vec<bool>,
    pub c0: usize,
    /// Containers with exactly one large vector.
    pub c1: usize,
    /// Containers with two large vectors.
    pub c2: usize,
}

#[derive(Clone, Debug)]
pub struct PackOutcome {
    pub assignment: Assignment,
    pub split: SmallnessResult,
    pub guess: Option<PackGuess>,
    /// Container counts probed by the search and their answers.
    pub probes: Vec<(usize, bool)>,
}

/// Colored graph for one guess. Colors: the partial blocks in order, then ⊤
/// if fresh containers are needed, then ⊥ if blockers exist.
pub fn build_pack_graph(instance: &Instance, large: &LargeSet, guess: &PackGuess) -> PackingGraph {
    let cap = instance.capacity();
    let mut colors = Vec::new();
    for (b, block) in guess.blocks.iter().enumerate() {
        if !guess.finalized[b] {
            let load = Vector::sum(cap.dim(), block.iter().map(|&i| instance.vector(i)));
            colors.push(ColorSpec {
                id: colors.len(),
                residual: cap.sub(&load),
                kind: ColorKind::Partial { block: b },
            });
        }
    }
    let partial = colors.len();
    let top = (guess.containers - guess.c0 > partial).then(|| {
        colors.push(ColorSpec {
            id: colors.len(),
            residual: cap.clone(),
            kind: ColorKind::Top,
        });
        colors.len() - 1
    });
    let bottom = (guess.c2 > 0).then(|| {
        colors.push(ColorSpec {
            id: colors.len(),
            residual: Vector::zeros(cap.dim()),
            kind: ColorKind::Bottom,
        });
        colors.len() - 1
    });
    let fits = |sum: &Vector, colors: &[ColorSpec]| -> Vec<(usize, u64)> {
        let mut opts: Vec<(usize, u64)> = colors[..partial]
            .iter()
            .filter(|c| sum.fits_within(&c.residual))
            .map(|c| (c.id, 1))
            .collect();
        if let Some(t) = top {
            if sum.fits_within(cap) {
                opts.push((t, 1));
            }
        }
        opts
    };
    let l = large.len() as u64;
    let budget = l + guess.c2 as u64;
    let groups = [BlockerGroup {
        count: 2 * guess.c2,
        to_large: false,
        to_copies: true,
    }];
    let palette = colors.clone();
    large.assemble(
        colors,
        |_, _, sum| fits(sum, &palette),
        |_, v| fits(v, &palette),
        &groups,
        bottom,
        1,
        budget,
    )
}

/// All guesses for `containers` whose counts are consistent.
fn guesses(instance: &Instance, split: &SmallnessResult, containers: usize) -> Vec<PackGuess> {
    let cap = instance.capacity();
    let l = split.large.len();
    let mut out = Vec::new();
    for blocks in enumerate_partitions(&split.small, containers.min(split.k())) {
        let fits = blocks.iter().all(|b| {
            Vector::sum(cap.dim(), b.iter().map(|&i| instance.vector(i))).fits_within(cap)
        });
        if !fits {
            continue;
        }
        for mask in 0u64..(1u64 << blocks.len()) {
            let c0 = mask.count_ones() as usize;
            let m = containers - c0;
            if m > l || 2 * m < l {
                continue;
            }
            out.push(PackGuess {
                containers,
                finalized: (0..blocks.len()).map(|b| mask >> b & 1 == 1).collect(),
                blocks: blocks.clone(),
                c0,
                c1: 2 * m - l,
                c2: l - m,
            });
        }
    }
    out
}

fn lower_bound(instance: &Instance, large: usize) -> usize {
    let cap = instance.capacity();
    let total = Vector::sum(cap.dim(), instance.vectors().iter());
    let mut lb = large.div_ceil(2).max(1);
    for (t, s) in cap.iter().zip(total.iter()) {
        if *t > num_traits::zero() {
            lb = lb.max((s / t).ceil().to_integer().to_usize().unwrap_or(usize::MAX));
        }
    }
    lb
}

type Found = (PackGuess, PackingGraph, u64);

fn decide(
    instance: &Instance,
    split: &SmallnessResult,
    large: &LargeSet,
    containers: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Option<Found>, SolveError> {
    let stream = derive_seed(seed, containers as u64);
    for (g, guess) in guesses(instance, split, containers).into_iter().enumerate() {
        let pg = build_pack_graph(instance, large, &guess);
        let found = otr::decide(&pg.graph, derive_seed(stream, g as u64), &cfg.otr)
            .map_err(SolveError::engine(format!("packing into {containers} containers")))?;
        if let Some(w) = found {
            return Ok(Some((guess, pg, w)));
        }
    }
    Ok(None)
}

pub fn solve(instance: &Instance, seed: u64) -> Result<Assignment, SolveError> {
    solve_with(instance, seed, &SolverConfig::default()).map(|o| o.assignment)
}

pub fn solve_with(instance: &Instance, seed: u64, cfg: &SolverConfig) -> Result<PackOutcome, SolveError> {
    let cap = instance.capacity();
    if let Some(index) = (0..instance.len()).find(|&i| !instance.vector(i).fits_within(cap)) {
        return Err(SolveError::Oversized { index });
    }
    let split = split_small_large(instance, FitMode::Pack);
    if instance.is_empty() {
        return Ok(PackOutcome {
            assignment: Assignment::from_containers(0, &[], 0),
            split,
            guess: None,
            probes: Vec::new(),
        });
    }
    let large = LargeSet::new(instance, &split.large);
    let mut lo = lower_bound(instance, large.len());
    let mut hi = instance.len().max(lo);
    let mut probes = Vec::new();
    let mut best: Option<Found> = None;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let found = decide(instance, &split, &large, mid, seed, cfg)?;
        probes.push((mid, found.is_some()));
        match found {
            Some(f) => {
                hi = mid;
                best = Some(f);
            }
            None => lo = mid + 1,
        }
    }
    let best = match best {
        Some(b) if b.0.containers == hi => b,
        _ => {
            let found = decide(instance, &split, &large, hi, seed, cfg)?;
            probes.push((hi, found.is_some()));
            found.ok_or_else(|| SolveError::Engine {
                context: format!("packing into {hi} containers"),
                source: crate::conjoining::EngineError::RandomizedFailure {
                    attempts: cfg.otr.engine.retries + 1,
                },
            })?
        }
    };
    let (guess, pg, weight) = best;
    let sol = otr::extract(&pg.graph, weight, derive_seed(seed, u64::MAX), &cfg.otr)
        .map_err(SolveError::engine(format!("packing into {hi} containers")))?;
    let tr = translate(&pg, &large, guess.blocks.len(), &sol);
    let mut containers: Vec<Vec<usize>> = guess
        .blocks
        .iter()
        .zip(tr.into_blocks)
        .map(|(b, extra)| b.iter().copied().chain(extra).collect())
        .collect();
    containers.extend(tr.fresh);
    let used = containers.iter().filter(|c| !c.is_empty()).count();
    let assignment = Assignment::from_containers(instance.len(), &containers, used as u64);
    let report = validate(instance, &assignment, Mode::Pack);
    assert!(report.valid, "packing translation invalid: {:?}", report.violations);
    assert_eq!(used, guess.containers);
    Ok(PackOutcome {
        assignment,
        split,
        guess: Some(guess),
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

    fn bell(n: usize) -> usize {
        let mut row = vec![1usize];
        for _ in 0..n {
            let mut next = vec![*row.last().unwrap()];
            for &x in &row {
                let y = *next.last().unwrap() + x;
                next.push(y);
            }
            row = next;
        }
        row[0]
    }

    #[test]
    fn partitions_count_bell_numbers() {
        for n in 0..7 {
            let items: Vec<usize> = (0..n).collect();
            assert_eq!(enumerate_partitions(&items, n.max(1)).count(), bell(n), "n={n}");
        }
        // Partitions of 4 items into at most 2 blocks: S(4,1)+S(4,2) = 1+7.
        assert_eq!(enumerate_partitions(&[0, 1, 2, 3], 2).count(), 8);
        assert_eq!(enumerate_partitions(&[], 0).count(), 1);
        assert_eq!(enumerate_partitions(&[3], 0).count(), 0);
    }

    #[test]
    fn partitions_are_distinct_and_cover() {
        let items = [4, 7, 9, 11];
        let all: Vec<_> = enumerate_partitions(&items, 3).collect();
        let mut seen = std::collections::BTreeSet::new();
        for p in &all {
            assert!(p.len() <= 3);
            let mut flat: Vec<usize> = p.iter().flatten().copied().collect();
            flat.sort_unstable();
            assert_eq!(flat, items);
            let mut canon = p.clone();
            canon.sort();
            assert!(seen.insert(canon));
        }
        assert_eq!(all[0], vec![vec![4, 7, 9, 11]]);
    }

    #[test]
    fn worked_example_golden_graph() {
        let inst = one_dim(&["0.1", "0.15", "0.2", "0.3", "0.4", "0.9"]);
        let split = split_small_large(&inst, FitMode::Pack);
        let large = LargeSet::new(&inst, &split.large);
        let guess = PackGuess {
            containers: 3,
            blocks: vec![vec![0], vec![1], vec![2]],
            finalized: vec![false, true, false],
            c0: 1,
            c1: 1,
            c2: 1,
        };
        let pg = build_pack_graph(&inst, &large, &guess);
        assert_eq!(pg.colors.len(), 3);
        assert_eq!(pg.colors[0].residual, Vector::new(vec![parse_rational("0.9").unwrap()]));
        assert_eq!(pg.colors[1].residual, Vector::new(vec![parse_rational("0.8").unwrap()]));
        assert_eq!(pg.colors[2].kind, ColorKind::Bottom);
        assert_eq!(pg.graph.nodes(), 8);
        assert_eq!(pg.graph.budget(), 4);
        // {0.3, 0.4} fits both partial containers; {0.9} alone only the first.
        let pair = pg.graph.edge_index(0, 1).unwrap();
        assert_eq!(pg.graph.lambda(pair), vec![0, 1]);
        let single = pg.graph.edge_index(2, 5).unwrap();
        assert_eq!(pg.graph.lambda(single), vec![0]);
        for v in 0..2 {
            let e = pg.graph.edge_index(v, v + 3).unwrap();
            assert_eq!(pg.graph.lambda(e), vec![0, 1]);
        }
        assert!(pg.graph.edge_index(0, 2).is_none());
        let sol = otr::solve(&pg.graph, 7, &SolverConfig::default().otr).unwrap().unwrap();
        assert_eq!(sol.weight, 4);
    }

    #[test]
    fn worked_packs_into_three() {
        let inst = one_dim(&["0.1", "0.15", "0.2", "0.3", "0.4", "0.9"]);
        let out = solve_with(&inst, 1, &SolverConfig::default()).unwrap();
        // Total size 2.05 forces a third container.
        assert_eq!(out.assignment.objective, 3);
        assert!(validate(&inst, &out.assignment, Mode::Pack).valid);
    }

    #[test]
    fn trivial_instances() {
        let empty = one_dim(&[]);
        assert_eq!(solve(&empty, 0).unwrap().objective, 0);
        assert_eq!(solve(&one_dim(&["1"]), 0).unwrap().objective, 1);
        assert_eq!(solve(&one_dim(&["0", "0", "0", "0"]), 0).unwrap().objective, 1);
        assert_eq!(solve(&one_dim(&["0.6", "0.6", "0.6"]), 0).unwrap().objective, 3);
    }

    #[test]
    fn oversized_rejected() {
        let inst = Instance::new(Vector::from_ints(&[2, 2]), vec![Vector::from_ints(&[1, 3])], None, None).unwrap();
        assert!(matches!(solve(&inst, 0), Err(SolveError::Oversized { index: 0 })));
    }
}
