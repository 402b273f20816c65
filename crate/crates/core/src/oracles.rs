//! Exhaustive exact solvers for small instances.
//!
//! Objects are assigned in input order to an open container or a new one, so
//! containers are always opened in first-use order.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{Assignment, Instance, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_objects: usize,
    /// Largest container count the search may open (pack and cover).
    pub max_containers: Option<usize>,
    pub wall_clock: Option<Duration>,
    /// Bound pruning, plus never adding to an already covering container.
    pub pruning: bool,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_objects: 12,
            max_containers: None,
            wall_clock: None,
            pruning: true,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{objects} objects exceed the oracle limit of {max}")]
    TooLarge { objects: usize, max: usize },
    #[error("oracle ran out of its {0:?} time budget")]
    TimedOut(Duration),
    #[error("no packing within the container limit")]
    Infeasible,
    #[error("knapsack oracle needs profits and a container count")]
    MissingKnapsackData,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Goal {
    Pack,
    Cover,
    Knapsack,
}

struct Search<'a> {
    inst: &'a Instance,
    goal: Goal,
    budget: OracleBudget,
    limit: usize,
    deadline: Option<Instant>,
    ticks: u64,
    loads: Vec<Vector>,
    place: Vec<Option<usize>>,
    best: Option<(u64, Vec<Option<usize>>)>,
    profit: u64,
    suffix_profit: Vec<u64>,
}

impl Search<'_> {
    fn better(&self, value: u64) -> bool {
        match (&self.best, self.goal) {
            (None, _) => true,
            (Some((b, _)), Goal::Pack) => value < *b,
            (Some((b, _)), _) => value > *b,
        }
    }

    fn covered(&self) -> usize {
        let cap = self.inst.capacity();
        self.loads.iter().filter(|l| l.covers(cap)).count()
    }

    fn value(&self) -> u64 {
        match self.goal {
            Goal::Pack => self.loads.len() as u64,
            Goal::Cover => self.covered() as u64,
            Goal::Knapsack => self.profit,
        }
    }

    fn hopeless(&self, i: usize) -> bool {
        let Some((best, _)) = &self.best else {
            return false;
        };
        match self.goal {
            Goal::Pack => self.loads.len() as u64 >= *best,
            Goal::Cover => {
                let cap = self.inst.capacity();
                let open = self.loads.iter().filter(|l| !l.covers(cap)).count();
                (self.covered() + open + self.inst.len() - i) as u64 <= *best
            }
            Goal::Knapsack => self.profit + self.suffix_profit[i] <= *best,
        }
    }

    fn run(&mut self, i: usize) -> Result<(), OracleError> {
        self.ticks += 1;
        if self.ticks % 4096 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() > d {
                    return Err(OracleError::TimedOut(self.budget.wall_clock.unwrap_or_default()));
                }
            }
        }
        if i == self.inst.len() {
            let v = self.value();
            if self.better(v) {
                self.best = Some((v, self.place.clone()));
            }
            return Ok(());
        }
        if self.budget.pruning && self.hopeless(i) {
            return Ok(());
        }
        let cap = self.inst.capacity();
        let v = self.inst.vector(i);
        let gain = self.inst.profits().map_or(0, |p| p[i]);
        for c in 0..=self.loads.len() {
            let fresh = c == self.loads.len();
            if fresh && self.loads.len() >= self.limit {
                break;
            }
            if !fresh {
                let next = self.loads[c].add(v);
                let ok = match self.goal {
                    Goal::Pack | Goal::Knapsack => next.fits_within(cap),
                    Goal::Cover => !(self.budget.pruning && self.loads[c].covers(cap)),
                };
                if !ok {
                    continue;
                }
                let old = std::mem::replace(&mut self.loads[c], next);
                self.place[i] = Some(c);
                self.profit += gain;
                let r = self.run(i + 1);
                self.profit -= gain;
                self.loads[c] = old;
                r?;
            } else {
                if self.goal != Goal::Cover && !v.fits_within(cap) {
                    continue;
                }
                self.loads.push(v.clone());
                self.place[i] = Some(c);
                self.profit += gain;
                let r = self.run(i + 1);
                self.profit -= gain;
                self.loads.pop();
                r?;
            }
        }
        if self.goal == Goal::Knapsack {
            self.place[i] = None;
            self.run(i + 1)?;
        }
        self.place[i] = None;
        Ok(())
    }
}

fn search(inst: &Instance, goal: Goal, budget: OracleBudget) -> Result<Assignment, OracleError> {
    let n = inst.len();
    if n > budget.max_objects {
        return Err(OracleError::TooLarge {
            objects: n,
            max: budget.max_objects,
        });
    }
    let mut limit = budget.max_containers.unwrap_or(n);
    let mut suffix_profit = vec![0; n + 1];
    if goal == Goal::Knapsack {
        let (Some(p), Some(c)) = (inst.profits(), inst.containers()) else {
            return Err(OracleError::MissingKnapsackData);
        };
        limit = limit.min(c);
        for i in (0..n).rev() {
            suffix_profit[i] = suffix_profit[i + 1] + p[i];
        }
    }
    let mut s = Search {
        inst,
        goal,
        budget,
        limit,
        deadline: budget.wall_clock.map(|d| Instant::now() + d),
        ticks: 0,
        loads: Vec::new(),
        place: vec![None; n],
        best: None,
        profit: 0,
        suffix_profit,
    };
    s.run(0)?;
    let (objective, placement) = s.best.ok_or(OracleError::Infeasible)?;
    Ok(Assignment {
        objective,
        placement,
    })
}

/// Fewest containers.
pub fn brute_force_pack(inst: &Instance, budget: OracleBudget) -> Result<Assignment, OracleError> {
    search(inst, Goal::Pack, budget)
}

/// Most containers whose load covers the demand.
pub fn brute_force_cover(inst: &Instance, budget: OracleBudget) -> Result<Assignment, OracleError> {
    search(inst, Goal::Cover, budget)
}

/// Most profit packed into the given number of containers.
pub fn brute_force_knapsack(inst: &Instance, budget: OracleBudget) -> Result<Assignment, OracleError> {
    search(inst, Goal::Knapsack, budget)
}
