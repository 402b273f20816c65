//! Vector multiple knapsack: most profit packed into `C` containers.
//!
//! Every container edge weighs `2·p_max` minus the profit it packs, so a
//! minimum-weight matching packs the most profitable large vectors.

use crate::conjoining::sieve::derive_seed;
use crate::model::{validate, Assignment, Instance, Mode, Vector};
use crate::otr;
use crate::packing::{
    translate, BlockerGroup, ColorKind, ColorSpec, LargeSet, PackingGraph, SolveError, SolverConfig,
};
use crate::smallness::{split_small_large, FitMode, SmallnessResult};
use crate::solver_vp::enumerate_partitions;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnapsackGuess {
    /// Small vectors packed, split into their containers.
    pub blocks: Vec<Vec<usize>>,
    pub finalized: Vec<bool>,
    pub c0: usize,
    /// Empty containers receiving large vectors.
    pub c_e: usize,
    /// Containers receiving large vectors: non-finalized blocks plus `c_e`.
    pub u: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnapsackTrace {
    pub guess: KnapsackGuess,
    pub p_max: u64,
    /// Weight of the accepted matching; `None` when no large vector is packed.
    pub weight: Option<u64>,
    pub large_profit: u64,
}

#[derive(Clone, Debug)]
pub struct KnapsackOutcome {
    pub assignment: Assignment,
    pub split: SmallnessResult,
    pub trace: KnapsackTrace,
    /// Guesses whose graph was handed to the engine.
    pub graphs: usize,
}

/// Colored graph of a guess. Colors: non-finalized blocks in order, then ⊤
/// if `c_e > 0`, then ⊥ if blockers exist. Budget `2·U·p_max`.
pub fn build_knapsack_graph(
    instance: &Instance,
    large: &LargeSet,
    profits: &[u64],
    p_max: u64,
    guess: &KnapsackGuess,
) -> PackingGraph {
    let cap = instance.capacity();
    let l = large.len();
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
    let top = (guess.c_e > 0).then(|| {
        colors.push(ColorSpec {
            id: colors.len(),
            residual: cap.clone(),
            kind: ColorKind::Top,
        });
        colors.len() - 1
    });
    let blockers = 2 * l - 2 * guess.u;
    let bottom = (blockers > 0).then(|| {
        colors.push(ColorSpec {
            id: colors.len(),
            residual: Vector::zeros(cap.dim()),
            kind: ColorKind::Bottom,
        });
        colors.len() - 1
    });
    let palette = colors.clone();
    let options = |sum: &Vector, gain: u64| -> Vec<(usize, u64)> {
        let w = 2 * p_max - gain;
        let mut opts: Vec<(usize, u64)> = palette[..partial]
            .iter()
            .filter(|c| sum.fits_within(&c.residual))
            .map(|c| (c.id, w))
            .collect();
        if let Some(t) = top {
            if sum.fits_within(cap) {
                opts.push((t, w));
            }
        }
        opts
    };
    let p = |i: usize| profits[large.ids[i]];
    let groups = [BlockerGroup {
        count: blockers,
        to_large: true,
        to_copies: true,
    }];
    large.assemble(
        colors,
        |i, j, sum| options(sum, p(i) + p(j)),
        |i, v| options(v, p(i)),
        &groups,
        bottom,
        0,
        2 * guess.u as u64 * p_max,
    )
}

fn guesses(instance: &Instance, split: &SmallnessResult, containers: usize) -> Vec<KnapsackGuess> {
    let cap = instance.capacity();
    let k = split.k();
    let l = split.large.len();
    let mut out = Vec::new();
    for subset in 0u64..(1u64 << k) {
        let chosen: Vec<usize> = (0..k).filter(|&t| subset >> t & 1 == 1).map(|t| split.small[t]).collect();
        if !chosen.is_empty() && containers == 0 {
            continue;
        }
        for blocks in enumerate_partitions(&chosen, containers.min(chosen.len())) {
            let fits = blocks.iter().all(|b| {
                Vector::sum(cap.dim(), b.iter().map(|&i| instance.vector(i))).fits_within(cap)
            });
            if !fits {
                continue;
            }
            for mask in 0u64..(1u64 << blocks.len()) {
                let c0 = mask.count_ones() as usize;
                for c_e in 0..=containers - blocks.len() {
                    let u = blocks.len() - c0 + c_e;
                    if u > l {
                        continue;
                    }
                    out.push(KnapsackGuess {
                        finalized: (0..blocks.len()).map(|b| mask >> b & 1 == 1).collect(),
                        blocks: blocks.clone(),
                        c0,
                        c_e,
                        u,
                    });
                }
            }
        }
    }
    out
}

pub fn solve(instance: &Instance, seed: u64) -> Result<Assignment, SolveError> {
    solve_with(instance, seed, &SolverConfig::default()).map(|o| o.assignment)
}

pub fn solve_with(instance: &Instance, seed: u64, cfg: &SolverConfig) -> Result<KnapsackOutcome, SolveError> {
    let (Some(profits), Some(containers)) = (instance.profits(), instance.containers()) else {
        return Err(SolveError::MissingKnapsackData);
    };
    let split = split_small_large(instance, FitMode::Pack);
    let large = LargeSet::new(instance, &split.large);
    let p_max = large.ids.iter().map(|&i| profits[i]).max().unwrap_or(0).max(1);
    let mut top_profits: Vec<u64> = large.ids.iter().map(|&i| profits[i]).collect();
    top_profits.sort_unstable_by(|a, b| b.cmp(a));

    let mut best: Option<(u64, KnapsackGuess, Option<(PackingGraph, u64)>)> = None;
    let mut graphs = 0usize;
    for (g, guess) in guesses(instance, &split, containers).into_iter().enumerate() {
        let small: u64 = guess.blocks.iter().flatten().map(|&i| profits[i]).sum();
        if guess.u == 0 {
            if best.as_ref().is_none_or(|b| small > b.0) {
                best = Some((small, guess, None));
            }
            continue;
        }
        let ceiling = 2 * guess.u as u64 * p_max;
        let reachable: u64 = top_profits.iter().take(2 * guess.u).sum();
        // Skip guesses that cannot beat the incumbent even packing the best vectors.
        if best.as_ref().is_some_and(|b| small + reachable <= b.0) {
            continue;
        }
        let pg = build_knapsack_graph(instance, &large, profits, p_max, &guess);
        let mut ocfg = cfg.otr.clone();
        ocfg.weight_window = Some((ceiling.saturating_sub(reachable), ceiling));
        graphs += 1;
        let found = otr::decide(&pg.graph, derive_seed(seed, g as u64), &ocfg)
            .map_err(SolveError::engine(format!("knapsack guess {g}")))?;
        if let Some(w) = found {
            let profit = small + ceiling - w;
            if best.as_ref().is_none_or(|b| profit > b.0) {
                best = Some((profit, guess, Some((pg, w))));
            }
        }
    }
    let (profit, guess, graph) = best.expect("the empty guess is always available");
    let mut containers_out: Vec<Vec<usize>> = guess.blocks.clone();
    let mut trace = KnapsackTrace {
        guess: guess.clone(),
        p_max,
        weight: None,
        large_profit: 0,
    };
    if let Some((pg, w)) = graph {
        let mut ocfg = cfg.otr.clone();
        let ceiling = 2 * guess.u as u64 * p_max;
        ocfg.weight_window = Some((ceiling.saturating_sub(top_profits.iter().take(2 * guess.u).sum()), ceiling));
        let sol = otr::extract(&pg.graph, w, derive_seed(seed, u64::MAX), &ocfg)
            .map_err(SolveError::engine("knapsack extraction"))?;
        let tr = translate(&pg, &large, guess.blocks.len(), &sol);
        for (b, extra) in tr.into_blocks.into_iter().enumerate() {
            containers_out[b].extend(extra);
        }
        let fresh = tr.fresh.len();
        containers_out.extend(tr.fresh);
        assert!(containers_out.len() <= containers);
        assert_eq!(fresh, guess.c_e);
        let packed: Vec<usize> = containers_out.iter().flatten().copied().collect();
        let large_profit: u64 = large.ids.iter().filter(|i| packed.contains(i)).map(|&i| profits[i]).sum();
        assert_eq!(sol.weight + large_profit, ceiling, "weight and profit out of balance");
        let unpacked: Vec<usize> = large.ids.iter().copied().filter(|i| !packed.contains(i)).collect();
        let mut blocked = tr.blocked.clone();
        blocked.sort_unstable();
        assert_eq!(blocked, unpacked, "unpacked vectors differ from blocked ones");
        trace.weight = Some(sol.weight);
        trace.large_profit = large_profit;
    }
    let assignment = Assignment::from_containers(instance.len(), &containers_out, profit);
    let report = validate(instance, &assignment, Mode::Knapsack);
    assert!(report.valid, "knapsack translation invalid: {:?}", report.violations);
    Ok(KnapsackOutcome {
        assignment,
        split,
        trace,
        graphs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_rational;

    fn knap(sizes: &[&str], profits: Vec<u64>, c: usize) -> Instance {
        Instance::new(
            Vector::new(vec![parse_rational("1").unwrap()]),
            sizes.iter().map(|s| Vector::new(vec![parse_rational(s).unwrap()])).collect(),
            Some(profits),
            Some(c),
        )
        .unwrap()
    }

    #[test]
    fn only_singletons_fit() {
        let inst = knap(&["0.6", "0.7"], vec![5, 6], 1);
        let a = solve(&inst, 0).unwrap();
        assert_eq!(a.objective, 6);
        assert_eq!(a.placement, vec![None, Some(0)]);
    }

    #[test]
    fn zero_containers() {
        let inst = knap(&["0.6", "0.1"], vec![5, 6], 0);
        let a = solve(&inst, 0).unwrap();
        assert_eq!(a.objective, 0);
        assert_eq!(a.placement, vec![None, None]);
    }

    #[test]
    fn single_empty_container_graph() {
        let inst = knap(&["0.4", "0.5"], vec![3, 7], 1);
        let split = split_small_large(&inst, FitMode::Pack);
        assert_eq!(split.k(), 0);
        let large = LargeSet::new(&inst, &split.large);
        let guess = KnapsackGuess {
            blocks: vec![],
            finalized: vec![],
            c0: 0,
            c_e: 1,
            u: 1,
        };
        let pg = build_knapsack_graph(&inst, &large, inst.profits().unwrap(), 7, &guess);
        assert_eq!(pg.blockers, 2);
        let pair = pg.graph.edge_index(0, 1).unwrap();
        assert_eq!(pg.graph.edges()[pair].options, vec![(0, 14 - 3 - 7)]);
        assert_eq!(solve(&inst, 0).unwrap().objective, 10);
    }

    #[test]
    fn small_and_large_mix() {
        let inst = knap(&["0.1", "0.1", "0.2", "0.5", "0.6", "0.9"], vec![1, 1, 2, 5, 6, 9], 2);
        let a = solve(&inst, 4).unwrap();
        // 0.9+0.1 and 0.5+0.2+0.1 or 0.6+0.2+0.1+0.1: best is 9+1 + 6+2+1 = 19.
        assert_eq!(a.objective, 19);
    }
}
