//! Splitting objects into small and large ones.
//!
//! The large objects form a largest 3-incompatible set: no three of them fit
//! one container together. The small ones are a minimum hitting set of all
//! fitting triples, found by plain 3-way branching.

use crate::model::{Instance, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FitMode {
    /// A triple fits when its sum stays within capacity.
    Pack,
    /// A triple "fits" when it fails to cover capacity in some dimension.
    Cover,
}

/// Sorted indices of three distinct objects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FitTriple(pub [usize; 3]);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmallnessResult {
    pub small: Vec<usize>,
    pub large: Vec<usize>,
}

impl SmallnessResult {
    pub fn k(&self) -> usize {
        self.small.len()
    }
}

fn triple_fits(sum: &Vector, cap: &Vector, mode: FitMode) -> bool {
    match mode {
        FitMode::Pack => sum.fits_within(cap),
        FitMode::Cover => !sum.covers(cap),
    }
}

/// All fitting triples in lexicographic order.
pub fn enumerate_fit_triples(instance: &Instance, mode: FitMode) -> Vec<FitTriple> {
    let n = instance.len();
    let cap = instance.capacity();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let ab = instance.vector(a).add(instance.vector(b));
            // Pair sums are monotone: an overflowing pair cannot start a fitting triple.
            if mode == FitMode::Pack && !ab.fits_within(cap) {
                continue;
            }
            for c in b + 1..n {
                if triple_fits(&ab.add(instance.vector(c)), cap, mode) {
                    out.push(FitTriple([a, b, c]));
                }
            }
        }
    }
    out
}

/// Search statistics of the branching.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BranchStats {
    /// Leaves of the last (successful or final) deepening round.
    pub leaves: u64,
    /// Depth limit of the last round.
    pub depth: usize,
}

/// Minimum hitting set of size at most `k_max`, or `None`.
pub fn min_hitting_set_3(triples: &[FitTriple], k_max: usize) -> Option<Vec<usize>> {
    min_hitting_set_3_with_stats(triples, k_max).0
}

pub fn min_hitting_set_3_with_stats(
    triples: &[FitTriple],
    k_max: usize,
) -> (Option<Vec<usize>>, BranchStats) {
    let universe = triples.iter().flat_map(|t| t.0).max().map_or(0, |m| m + 1);
    let mut chosen = vec![false; universe];
    let mut picked = Vec::new();
    let mut stats = BranchStats::default();
    for depth in 0..=k_max {
        stats = BranchStats { leaves: 0, depth };
        if branch(triples, 0, depth, &mut chosen, &mut picked, &mut stats.leaves) {
            assert!(stats.leaves <= 3u64.saturating_pow(depth as u32));
            picked.sort_unstable();
            return (Some(picked), stats);
        }
        assert!(stats.leaves <= 3u64.saturating_pow(depth as u32));
    }
    (None, stats)
}

fn branch(
    triples: &[FitTriple],
    from: usize,
    budget: usize,
    chosen: &mut [bool],
    picked: &mut Vec<usize>,
    leaves: &mut u64,
) -> bool {
    // Triples before `from` are already hit by the current selection.
    let open = triples[from..]
        .iter()
        .position(|t| !t.0.iter().any(|&i| chosen[i]))
        .map(|p| p + from);
    let Some(pos) = open else {
        *leaves += 1;
        return true;
    };
    if budget == 0 {
        *leaves += 1;
        return false;
    }
    for &e in &triples[pos].0 {
        chosen[e] = true;
        picked.push(e);
        if branch(triples, pos + 1, budget - 1, chosen, picked, leaves) {
            return true;
        }
        picked.pop();
        chosen[e] = false;
    }
    false
}

pub fn split_small_large(instance: &Instance, mode: FitMode) -> SmallnessResult {
    let triples = enumerate_fit_triples(instance, mode);
    let small = min_hitting_set_3(&triples, instance.len()).expect("all objects always hit");
    let mut is_small = vec![false; instance.len()];
    for &s in &small {
        is_small[s] = true;
    }
    let large = (0..instance.len()).filter(|&i| !is_small[i]).collect();
    SmallnessResult { small, large }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_rational, Instance};

    fn one_dim(sizes: &[&str]) -> Instance {
        Instance::one_dim(
            parse_rational("1").unwrap(),
            sizes.iter().map(|s| parse_rational(s).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn worked_triples_and_split() {
        let inst = one_dim(&["0.1", "0.15", "0.2", "0.3", "0.4", "0.9"]);
        let triples = enumerate_fit_triples(&inst, FitMode::Pack);
        assert_eq!(triples.len(), 10);
        assert!(triples.iter().all(|t| !t.0.contains(&5)));
        assert!(triples.windows(2).all(|w| w[0] < w[1]));
        let split = split_small_large(&inst, FitMode::Pack);
        assert_eq!(split.small, vec![0, 1, 2]);
        assert_eq!(split.large, vec![3, 4, 5]);
        assert_eq!(split.k(), 3);
    }

    #[test]
    fn no_fitting_triples() {
        let inst = one_dim(&["0.5", "0.6", "0.7"]);
        assert!(enumerate_fit_triples(&inst, FitMode::Pack).is_empty());
        assert_eq!(split_small_large(&inst, FitMode::Pack).k(), 0);
        assert!(enumerate_fit_triples(&one_dim(&["0.1", "0.1"]), FitMode::Pack).is_empty());
    }

    #[test]
    fn hitting_set_edge_cases() {
        assert_eq!(min_hitting_set_3(&[], 0), Some(vec![]));
        let one = [FitTriple([2, 4, 7])];
        assert_eq!(min_hitting_set_3(&one, 1), Some(vec![2]));
        assert_eq!(min_hitting_set_3(&one, 0), None);
        let disjoint = [FitTriple([0, 1, 2]), FitTriple([3, 4, 5])];
        assert_eq!(min_hitting_set_3(&disjoint, 1), None);
        assert_eq!(min_hitting_set_3(&disjoint, 2), Some(vec![0, 3]));
    }

    #[test]
    fn cover_mode_triples_fail_to_cover() {
        let inst = one_dim(&["0.2", "0.3", "0.6", "0.1"]);
        let triples = enumerate_fit_triples(&inst, FitMode::Cover);
        // 0.2+0.3+0.1 and 0.2+0.6+0.1 stay below 1.
        assert_eq!(triples, vec![FitTriple([0, 1, 3]), FitTriple([0, 2, 3])]);
        let split = split_small_large(&inst, FitMode::Cover);
        assert_eq!(split.small, vec![0]);
    }
}
