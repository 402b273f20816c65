//! Deterministic one-dimensional bin packing.
//!
//! Small items are guessed exhaustively. Large items are then placed by
//! greedy rules with a bounded amount of backtracking: bins taking a single
//! large item get the largest fitting one, and the two-item bins are filled
//! in order of item size.

use std::cmp::Reverse;
use std::collections::BTreeSet;

use num_traits::Zero;

use crate::model::{validate, Assignment, Instance, Mode, Rational};
use crate::packing::SolveError;
use crate::smallness::{split_small_large, FitMode, SmallnessResult};
use crate::solver_vp::enumerate_partitions;

/// Remaining large items ordered by size. Equal sizes order by index, with
/// the lowest index counting as largest.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ItemPool {
    set: BTreeSet<(Rational, Reverse<usize>)>,
}

impl ItemPool {
    pub fn new(items: impl IntoIterator<Item = (Rational, usize)>) -> Self {
        ItemPool {
            set: items.into_iter().map(|(s, i)| (s, Reverse(i))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn largest(&self) -> Option<(Rational, usize)> {
        self.set.last().map(|(s, Reverse(i))| (s.clone(), *i))
    }

    pub fn smallest(&self) -> Option<(Rational, usize)> {
        self.set.first().map(|(s, Reverse(i))| (s.clone(), *i))
    }

    /// Largest item of size at most `x`.
    pub fn largest_at_most(&self, x: &Rational) -> Option<(Rational, usize)> {
        self.set
            .range(..=(x.clone(), Reverse(0)))
            .next_back()
            .map(|(s, Reverse(i))| (s.clone(), *i))
    }

    pub fn remove(&mut self, item: &(Rational, usize)) -> bool {
        self.set.remove(&(item.0.clone(), Reverse(item.1)))
    }
}

/// Gives each bin, in order, the largest pool item fitting its residual.
/// `None` when some bin finds nothing.
pub fn fill_single_large(residuals: &[Rational], pool: &mut ItemPool) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(residuals.len());
    for r in residuals {
        let item = pool.largest_at_most(r)?;
        pool.remove(&item);
        out.push(item.1);
    }
    Some(out)
}

#[derive(Clone, Debug)]
pub struct BinPackOutcome {
    pub assignment: Assignment,
    pub split: SmallnessResult,
    /// Completed or abandoned runs of the large-item loop.
    pub branches: u64,
}

/// (k!)²·(k+1)·2^k.
pub fn branch_bound(k: usize) -> u64 {
    let f: u64 = (1..=k as u64).product();
    f.saturating_mul(f)
        .saturating_mul(k as u64 + 1)
        .saturating_mul(1u64 << k)
}

struct Search<'a> {
    cap: Rational,
    sizes: &'a [Rational],
    branches: u64,
    best: Option<Vec<Vec<usize>>>,
}

impl Search<'_> {
    fn offer(&mut self, bins: Vec<Vec<usize>>) {
        if self.best.as_ref().is_none_or(|b| bins.len() < b.len()) {
            self.best = Some(bins);
        }
    }

    /// Places the rest of the pool. `open` lists partial bins still expecting
    /// two large items, with their residuals.
    fn place(&mut self, mut pool: ItemPool, open: Vec<(usize, Rational)>, mut bins: Vec<Vec<usize>>) {
        loop {
            let Some(big) = pool.largest() else {
                self.branches += 1;
                if open.is_empty() {
                    self.offer(bins);
                }
                return;
            };
            let small = pool.smallest().expect("pool not empty");
            let hosts: Vec<usize> = if small.1 == big.1 {
                Vec::new()
            } else {
                let pair = &big.0 + &small.0;
                (0..open.len()).filter(|&o| pair <= open[o].1).collect()
            };
            if hosts.is_empty() {
                // The largest item cannot share a partial bin: it gets a bin of
                // its own, with the largest item still fitting beside it.
                if pool.len() < 2 * open.len() + 1 {
                    self.branches += 1;
                    return;
                }
                pool.remove(&big);
                let mut bin = vec![big.1];
                if let Some(partner) = pool.largest_at_most(&(&self.cap - &big.0)) {
                    pool.remove(&partner);
                    bin.push(partner.1);
                }
                bins.push(bin);
                continue;
            }
            // The smallest item goes into one of the open partial bins, with
            // the largest item fitting there too.
            pool.remove(&small);
            for o in 0..open.len() {
                let (b, ref res) = open[o];
                let room = res - &small.0;
                let Some(partner) = pool.largest_at_most(&room) else {
                    self.branches += 1;
                    continue;
                };
                let mut p = pool.clone();
                p.remove(&partner);
                let mut rest = open.clone();
                rest.remove(o);
                let mut bs = bins.clone();
                bs[b].push(small.1);
                bs[b].push(partner.1);
                self.place(p, rest, bs);
            }
            return;
        }
    }
}

pub fn solve(instance: &Instance) -> Result<Assignment, SolveError> {
    solve_traced(instance).map(|o| o.assignment)
}

pub fn solve_traced(instance: &Instance) -> Result<BinPackOutcome, SolveError> {
    if instance.dimension() != 1 {
        return Err(SolveError::NotOneDimensional(instance.dimension()));
    }
    let cap = instance.capacity()[0].clone();
    let sizes: Vec<Rational> = instance.vectors().iter().map(|v| v[0].clone()).collect();
    if let Some(index) = sizes.iter().position(|s| *s > cap) {
        return Err(SolveError::Oversized { index });
    }
    let split = split_small_large(instance, FitMode::Pack);
    let mut search = Search {
        cap: cap.clone(),
        sizes: &sizes,
        branches: 0,
        best: None,
    };
    let large_pool = ItemPool::new(split.large.iter().map(|&i| (sizes[i].clone(), i)));
    for blocks in enumerate_partitions(&split.small, split.k()) {
        let loads: Vec<Rational> = blocks
            .iter()
            .map(|b| b.iter().fold(Rational::zero(), |acc, &i| acc + &search.sizes[i]))
            .collect();
        if loads.iter().any(|l| *l > cap) {
            continue;
        }
        // Heaviest first; a bin without large items can be taken as a prefix.
        let mut order: Vec<usize> = (0..blocks.len()).collect();
        order.sort_by(|&a, &b| loads[b].cmp(&loads[a]).then(a.cmp(&b)));
        for finalized in 0..=order.len() {
            let rest = &order[finalized..];
            for mask in 0u64..(1u64 << rest.len()) {
                let singles: Vec<usize> = (0..rest.len()).filter(|&t| mask >> t & 1 == 1).map(|t| rest[t]).collect();
                let doubles: Vec<usize> = (0..rest.len()).filter(|&t| mask >> t & 1 == 0).map(|t| rest[t]).collect();
                let mut pool = large_pool.clone();
                let residuals: Vec<Rational> = singles.iter().map(|&b| &cap - &loads[b]).collect();
                let Some(picked) = fill_single_large(&residuals, &mut pool) else {
                    search.branches += 1;
                    continue;
                };
                let mut bins = blocks.clone();
                for (&b, item) in singles.iter().zip(picked) {
                    bins[b].push(item);
                }
                let open = doubles.iter().map(|&b| (b, &cap - &loads[b])).collect();
                search.place(pool, open, bins);
            }
        }
    }
    let branches = search.branches;
    let bins = search.best.expect("one item per bin is always reached");
    let assignment = Assignment::from_containers(instance.len(), &bins, bins.len() as u64);
    let report = validate(instance, &assignment, Mode::Pack);
    assert!(report.valid, "bin packing invalid: {:?}", report.violations);
    Ok(BinPackOutcome {
        assignment,
        split,
        branches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_rational, Vector};

    fn r(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn one_dim(sizes: &[&str]) -> Instance {
        Instance::one_dim(r("1"), sizes.iter().map(|s| r(s)).collect()).unwrap()
    }

    #[test]
    fn pool_queries() {
        let pool = ItemPool::new([(r("0.5"), 3), (r("0.5"), 1), (r("0.7"), 2)]);
        assert_eq!(pool.largest_at_most(&r("0.6")), Some((r("0.5"), 1)));
        assert_eq!(pool.largest_at_most(&r("0.4")), None);
        assert_eq!(pool.largest(), Some((r("0.7"), 2)));
        assert_eq!(pool.smallest(), Some((r("0.5"), 3)));
    }

    #[test]
    fn single_large_fill() {
        let mut pool = ItemPool::new([(r("0.45"), 0), (r("0.8"), 1)]);
        assert_eq!(fill_single_large(&[r("0.5"), r("0.9")], &mut pool), Some(vec![0, 1]));
        assert!(pool.is_empty());
        let mut pool = ItemPool::new([(r("0.6"), 0)]);
        assert_eq!(fill_single_large(&[r("0.5")], &mut pool), None);
    }

    #[test]
    fn examples() {
        let worked = one_dim(&["0.1", "0.15", "0.2", "0.3", "0.4", "0.9"]);
        let out = solve_traced(&worked).unwrap();
        assert_eq!(out.assignment.objective, 3);
        assert!(out.branches <= branch_bound(out.split.k()));
        assert_eq!(solve(&one_dim(&["1", "1", "1", "1"])).unwrap().objective, 4);
        assert_eq!(solve(&one_dim(&[])).unwrap().objective, 0);
        assert_eq!(solve(&one_dim(&["0.5", "0.5", "0.5", "0.5"])).unwrap().objective, 2);
    }

    #[test]
    fn rejects_other_dimensions() {
        let inst = Instance::new(Vector::from_ints(&[1, 1]), vec![], None, None).unwrap();
        assert!(matches!(solve(&inst), Err(SolveError::NotOneDimensional(2))));
    }
}
