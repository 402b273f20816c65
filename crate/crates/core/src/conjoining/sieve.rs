//! Inclusion–exclusion over requirement subsets on top of random Tutte
//! matrices.
//!
//! A *variant* is a candidate matching edge `{u, v}` with a weight and the
//! set of requirements it satisfies (bitmask). Several variants may join the
//! same pair of nodes. The engine evaluates
//!
//! ```text
//!     P(y) = Σ_{S ⊆ R} (-1)^{|S|} Pf(A_S(y))
//! ```
//!
//! where `A_S(y)` holds `r_x · y^{w_x}` for every variant `x` missing `S`.
//! Monomials of `P` are exactly the perfect matchings meeting every
//! requirement, so the lowest non-vanishing power of `y` is the minimum
//! weight. `P` is sampled at consecutive points and interpolated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::field::{Fp, P};
use super::pfaffian::{inverse, pfaffian_in_place, Matrix};
use super::{EngineConfig, EngineError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Variant {
    pub u: usize,
    pub v: usize,
    pub weight: u64,
    pub hits: u64,
}

#[derive(Clone, Debug)]
pub struct Sieve {
    nodes: usize,
    requirements: usize,
    variants: Vec<Variant>,
}

/// SplitMix64 finalizer, used to derive independent streams from one seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Plan {
    lo: u64,
    points: Vec<Fp>,
    /// `lagrange[t][j]`: coefficient of `y^t` in the j-th Lagrange basis polynomial.
    lagrange: Vec<Vec<Fp>>,
    /// Live subsets with their sign (`true` for odd size).
    subsets: Vec<(u64, bool)>,
}

struct State {
    mask: u64,
    odd: bool,
    point: usize,
    pf: Fp,
    inv: Matrix,
}

impl Sieve {
    pub fn new(nodes: usize, requirements: usize, variants: Vec<Variant>) -> Sieve {
        for x in &variants {
            assert!(x.u < nodes && x.v < nodes && x.u != x.v, "bad variant {x:?}");
            assert!(
                requirements >= 64 || x.hits >> requirements == 0,
                "variant hits unknown requirement"
            );
        }
        Sieve {
            nodes,
            requirements,
            variants,
        }
    }

    pub fn variants(&self) -> &[Variant] {
        &self.variants
    }

    fn all_requirements(&self) -> u64 {
        if self.requirements == 0 {
            0
        } else {
            u64::MAX >> (64 - self.requirements)
        }
    }

    /// Weight bounds valid for every perfect matching, or `None` when no
    /// perfect matching can exist.
    fn weight_window(&self, hint: Option<(u64, u64)>) -> Option<(u64, u64)> {
        let n = self.nodes;
        let mut lo_at = vec![u64::MAX; n];
        let mut hi_at = vec![0u64; n];
        for x in &self.variants {
            for e in [x.u, x.v] {
                lo_at[e] = lo_at[e].min(x.weight);
                hi_at[e] = hi_at[e].max(x.weight);
            }
        }
        if lo_at.contains(&u64::MAX) {
            return None;
        }
        let lo_sum: u64 = lo_at.iter().sum();
        let hi_sum: u64 = hi_at.iter().sum();
        let mut lo = lo_sum.div_ceil(2);
        let mut hi = hi_sum / 2;
        let mut weights: Vec<u64> = self.variants.iter().map(|x| x.weight).collect();
        weights.sort_unstable();
        let half = n / 2;
        if weights.len() >= half {
            lo = lo.max(weights[..half].iter().sum());
            hi = hi.min(weights[weights.len() - half..].iter().sum());
        }
        if let Some((a, b)) = hint {
            lo = lo.max(a);
            hi = hi.min(b);
        }
        (lo <= hi).then_some((lo, hi))
    }

    fn live_subsets(&self) -> Vec<(u64, bool)> {
        let all = self.all_requirements();
        let reachable = self.variants.iter().fold(0u64, |m, x| m | x.hits);
        if reachable & all != all {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut seen = vec![false; self.nodes];
        for mask in 0..=all {
            if mask & !all != 0 {
                continue;
            }
            seen.fill(false);
            for x in &self.variants {
                if x.hits & mask == 0 {
                    seen[x.u] = true;
                    seen[x.v] = true;
                }
            }
            if seen.iter().all(|&s| s) {
                out.push((mask, mask.count_ones() % 2 == 1));
            }
        }
        out
    }

    fn plan(&self, cfg: &EngineConfig) -> Result<Option<Plan>, EngineError> {
        if self.requirements > cfg.max_requirements {
            return Err(EngineError::Capacity(format!(
                "{} requirements exceed the limit of {}",
                self.requirements, cfg.max_requirements
            )));
        }
        let Some((lo, hi)) = self.weight_window(cfg.weight_window) else {
            return Ok(None);
        };
        let count = (hi - lo) as usize + 1;
        if hi - lo >= cfg.max_points as u64 {
            return Err(EngineError::Capacity(format!(
                "interpolation needs {} points, limit is {}",
                hi - lo + 1,
                cfg.max_points
            )));
        }
        let subsets = self.live_subsets();
        if subsets.is_empty() {
            return Ok(None);
        }
        let points: Vec<Fp> = (1..=count as u64).map(Fp::new).collect();
        let lagrange = lagrange_rows(&points);
        Ok(Some(Plan {
            lo,
            points,
            lagrange,
            subsets,
        }))
    }

    fn trial_count(&self, plan: &Plan, budget: u64, cfg: &EngineConfig) -> Result<u32, EngineError> {
        let evaluations = (plan.subsets.len() * plan.points.len()) as f64 + 1.0;
        let degree = (self.nodes / 2).max(1) as f64;
        let eps = degree * evaluations / P as f64;
        if eps >= 0.5 {
            return Err(EngineError::Capacity(
                "instance too large for the field's error bound".into(),
            ));
        }
        let scale = (self.nodes as f64 + budget as f64).max(2.0);
        let needed = cfg.error_exponent as f64 * scale.ln() / -eps.ln();
        Ok((needed.ceil() as u32).max(1))
    }

    fn draw(&self, seed: u64) -> Vec<Fp> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.variants.iter().map(|_| Fp::random_nonzero(&mut rng)).collect()
    }

    /// `r_x · y^{w_x}` for every variant at one point.
    fn entries(&self, r: &[Fp], y: Fp) -> Vec<Fp> {
        self.variants
            .iter()
            .zip(r)
            .map(|(x, &rx)| rx * y.pow(x.weight))
            .collect()
    }

    fn fill(&self, m: &mut Matrix, entries: &[Fp], mask: u64) {
        m.fill_zero();
        for (x, &e) in self.variants.iter().zip(entries) {
            if x.hits & mask == 0 {
                let (a, b) = (x.u.min(x.v), x.u.max(x.v));
                m.add_skew(a, b, e);
            }
        }
    }

    /// Minimum weight of a perfect matching meeting every requirement, if it
    /// is at most `budget`. Errs only towards `None`.
    pub fn min_weight(
        &self,
        budget: u64,
        seed: u64,
        cfg: &EngineConfig,
    ) -> Result<Option<u64>, EngineError> {
        if self.nodes % 2 == 1 {
            return Ok(None);
        }
        if self.nodes == 0 {
            return Ok((self.requirements == 0).then_some(0));
        }
        let Some(plan) = self.plan(cfg)? else {
            return Ok(None);
        };
        if plan.lo > budget {
            return Ok(None);
        }
        let trials = self.trial_count(&plan, budget, cfg)?;
        let mut best: Option<u64> = None;
        for trial in 0..trials {
            let r = self.draw(derive_seed(seed, trial as u64));
            if let Some(w) = self.min_weight_once(&plan, &r, budget) {
                best = Some(best.map_or(w, |b: u64| b.min(w)));
            }
        }
        Ok(best)
    }

    fn min_weight_once(&self, plan: &Plan, r: &[Fp], budget: u64) -> Option<u64> {
        let mut m = Matrix::zeros(self.nodes);
        let mut values = Vec::with_capacity(plan.points.len());
        for &y in &plan.points {
            let entries = self.entries(r, y);
            let mut total = Fp::ZERO;
            for &(mask, odd) in &plan.subsets {
                self.fill(&mut m, &entries, mask);
                let pf = pfaffian_in_place(&mut m);
                if odd {
                    total -= pf;
                } else {
                    total += pf;
                }
            }
            values.push(total * y.inv().pow(plan.lo));
        }
        let top = (budget - plan.lo).min(plan.points.len() as u64 - 1) as usize;
        (0..=top)
            .find(|&t| {
                let q = plan.lagrange[t]
                    .iter()
                    .zip(&values)
                    .fold(Fp::ZERO, |acc, (&l, &v)| acc + l * v);
                !q.is_zero()
            })
            .map(|t| plan.lo + t as u64)
    }

    /// A perfect matching of weight exactly `target` meeting every
    /// requirement, as variant indices in pick order. Variants are tried in
    /// input order; each is kept iff the rest can still be completed at the
    /// remaining weight. Retries with fresh randomness on failure.
    pub fn extract(
        &self,
        target: u64,
        seed: u64,
        cfg: &EngineConfig,
    ) -> Result<Vec<usize>, EngineError> {
        let attempts = cfg.retries + 1;
        for attempt in 0..attempts {
            let s = derive_seed(seed, 0x5eed_0000 + attempt as u64);
            if let Some(picked) = self.extract_once(target, s, cfg)? {
                if self.is_valid(&picked, target) {
                    return Ok(picked);
                }
            }
        }
        Err(EngineError::RandomizedFailure { attempts })
    }

    pub fn is_valid(&self, picked: &[usize], target: u64) -> bool {
        let mut covered = vec![false; self.nodes];
        let mut hits = 0u64;
        let mut weight = 0u64;
        for &i in picked {
            let x = self.variants[i];
            if covered[x.u] || covered[x.v] {
                return false;
            }
            covered[x.u] = true;
            covered[x.v] = true;
            hits |= x.hits;
            weight += x.weight;
        }
        covered.iter().all(|&c| c) && hits == self.all_requirements() && weight == target
    }

    fn extract_once(
        &self,
        target: u64,
        seed: u64,
        cfg: &EngineConfig,
    ) -> Result<Option<Vec<usize>>, EngineError> {
        if self.nodes % 2 == 1 {
            return Ok(None);
        }
        if self.nodes == 0 {
            return Ok((self.requirements == 0 && target == 0).then(Vec::new));
        }
        let Some(plan) = self.plan(cfg)? else {
            return Ok(None);
        };
        let cells = plan.subsets.len() * plan.points.len() * self.nodes * self.nodes;
        if cells > cfg.max_state_cells {
            return Err(EngineError::Capacity(format!(
                "extraction needs {cells} matrix cells, limit is {}",
                cfg.max_state_cells
            )));
        }
        let r = self.draw(seed);
        let entries: Vec<Vec<Fp>> = plan.points.iter().map(|&y| self.entries(&r, y)).collect();
        let mut states = Vec::new();
        let mut m = Matrix::zeros(self.nodes);
        for (j, e) in entries.iter().enumerate() {
            for &(mask, odd) in &plan.subsets {
                self.fill(&mut m, e, mask);
                let Some(inv) = inverse(&m) else { continue };
                let mut work = m.clone();
                let pf = pfaffian_in_place(&mut work);
                states.push(State {
                    mask,
                    odd,
                    point: j,
                    pf,
                    inv,
                });
            }
        }
        let y_inv: Vec<Fp> = plan.points.iter().map(|y| y.inv()).collect();
        let degree = plan.points.len() as u64 - 1;
        let mut active: Vec<usize> = (0..self.nodes).collect();
        let mut alive = vec![true; self.nodes];
        let mut forced = 0u64;
        let mut picked = Vec::new();
        let mut scale = vec![Fp::ZERO; states.len()];
        while !active.is_empty() {
            let Some(rest) = target.checked_sub(forced) else {
                return Ok(None);
            };
            let base = plan.lo.saturating_sub(forced);
            let Some(idx) = rest.checked_sub(base).filter(|&i| i <= degree) else {
                return Ok(None);
            };
            let row = &plan.lagrange[idx as usize];
            for (s, st) in scale.iter_mut().zip(&states) {
                let c = row[st.point] * y_inv[st.point].pow(base) * st.pf;
                *s = if st.odd { -c } else { c };
            }
            let choice = self.variants.iter().enumerate().find(|(i, x)| {
                if !alive[x.u] || !alive[x.v] {
                    return false;
                }
                let (a, b) = (x.u.min(x.v), x.u.max(x.v));
                let mut total = Fp::ZERO;
                for (st, &s) in states.iter().zip(&scale) {
                    if st.mask & x.hits == 0 {
                        total += s * st.inv.get(b, a) * entries[st.point][*i];
                    }
                }
                !total.is_zero()
            });
            let Some((i, x)) = choice else {
                return Ok(None);
            };
            let (a, b) = (x.u.min(x.v), x.u.max(x.v));
            alive[a] = false;
            alive[b] = false;
            active.retain(|&v| v != a && v != b);
            forced += x.weight;
            picked.push(i);
            states.retain(|st| st.mask & x.hits == 0);
            states.retain_mut(|st| {
                let pivot = st.inv.get(b, a);
                if pivot.is_zero() {
                    return false;
                }
                st.pf *= pivot;
                downdate(&mut st.inv, &active, a, b, pivot);
                true
            });
            scale.truncate(states.len());
        }
        Ok(Some(picked))
    }
}

/// Inverse of the principal submatrix without rows/columns `a`, `b`, given
/// the inverse `inv` of the full matrix; only `active` indices are updated.
fn downdate(inv: &mut Matrix, active: &[usize], a: usize, b: usize, pivot: Fp) {
    let scale = pivot.inv();
    let col_a: Vec<Fp> = active.iter().map(|&i| inv.get(i, a) * scale).collect();
    let col_b: Vec<Fp> = active.iter().map(|&i| inv.get(i, b) * scale).collect();
    let row_a: Vec<Fp> = active.iter().map(|&j| inv.get(a, j)).collect();
    let row_b: Vec<Fp> = active.iter().map(|&j| inv.get(b, j)).collect();
    for (p, &i) in active.iter().enumerate() {
        let (ca, cb) = (col_a[p], col_b[p]);
        for (q, &j) in active.iter().enumerate() {
            let v = inv.get(i, j) - (ca * row_b[q] - cb * row_a[q]);
            inv.set(i, j, v);
        }
    }
}

/// `rows[t][j]` is the coefficient of `y^t` in the Lagrange basis polynomial
/// that is 1 at `points[j]` and 0 at the other points.
pub fn lagrange_rows(points: &[Fp]) -> Vec<Vec<Fp>> {
    let n = points.len();
    // master(y) = Π (y - x_m), coefficients low to high.
    let mut master = vec![Fp::ONE];
    for &x in points {
        let mut next = vec![Fp::ZERO; master.len() + 1];
        for (i, &c) in master.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * x;
        }
        master = next;
    }
    let mut rows = vec![vec![Fp::ZERO; n]; n];
    let mut quotient = vec![Fp::ZERO; n];
    for (j, &xj) in points.iter().enumerate() {
        // master / (y - xj) by synthetic division from the top.
        let mut carry = Fp::ZERO;
        for t in (0..n).rev() {
            carry = master[t + 1] + carry * xj;
            quotient[t] = carry;
        }
        let denom = quotient.iter().rev().fold(Fp::ZERO, |acc, &c| acc * xj + c);
        let inv = denom.inv();
        for t in 0..n {
            rows[t][j] = quotient[t] * inv;
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EngineConfig {
        EngineConfig::default()
    }

    #[test]
    fn lagrange_interpolates() {
        let points: Vec<Fp> = (1..=5).map(Fp::new).collect();
        let rows = lagrange_rows(&points);
        // q(y) = 3 + 2y^2 + y^4
        let q = |y: Fp| Fp::new(3) + Fp::new(2) * y * y + y.pow(4);
        let vals: Vec<Fp> = points.iter().map(|&y| q(y)).collect();
        let coef: Vec<Fp> = rows
            .iter()
            .map(|row| row.iter().zip(&vals).fold(Fp::ZERO, |a, (&l, &v)| a + l * v))
            .collect();
        let expect: Vec<Fp> = [3, 0, 2, 0, 1].iter().map(|&c| Fp::new(c)).collect();
        assert_eq!(coef, expect);
    }

    fn var(u: usize, v: usize, weight: u64, hits: u64) -> Variant {
        Variant { u, v, weight, hits }
    }

    #[test]
    fn single_edge() {
        let s = Sieve::new(2, 0, vec![var(0, 1, 5, 0)]);
        assert_eq!(s.min_weight(5, 1, &cfg()).unwrap(), Some(5));
        assert_eq!(s.min_weight(4, 1, &cfg()).unwrap(), None);
        assert_eq!(s.extract(5, 1, &cfg()).unwrap(), vec![0]);
        let unmet = Sieve::new(2, 1, vec![var(0, 1, 5, 0)]);
        assert_eq!(unmet.min_weight(10, 1, &cfg()).unwrap(), None);
    }

    #[test]
    fn four_cycle_with_requirement() {
        // Cycle 0-1-2-3-0; the cheap matching {01,23} misses requirement 0,
        // which only edge 12 meets.
        let s = Sieve::new(
            4,
            1,
            vec![var(0, 1, 0, 0), var(2, 3, 0, 0), var(1, 2, 3, 1), var(3, 0, 4, 0)],
        );
        assert_eq!(s.min_weight(100, 9, &cfg()).unwrap(), Some(7));
        let picked = s.extract(7, 9, &cfg()).unwrap();
        assert_eq!(picked, vec![2, 3]);
    }

    #[test]
    fn parallel_variants() {
        // Two variants on the same pair, only the heavier one meets the requirement.
        let s = Sieve::new(2, 1, vec![var(0, 1, 1, 0), var(1, 0, 4, 1)]);
        assert_eq!(s.min_weight(10, 3, &cfg()).unwrap(), Some(4));
        assert_eq!(s.extract(4, 3, &cfg()).unwrap(), vec![1]);
    }

    #[test]
    fn window_hint_is_respected() {
        let s = Sieve::new(2, 0, vec![var(0, 1, 7, 0), var(0, 1, 900_000, 0)]);
        let narrow = EngineConfig {
            weight_window: Some((7, 7)),
            ..cfg()
        };
        assert_eq!(s.min_weight(7, 0, &narrow).unwrap(), Some(7));
    }

    #[test]
    fn capacity_errors() {
        let s = Sieve::new(2, 0, vec![var(0, 1, 0, 0), var(0, 1, 1_000_000, 0)]);
        assert!(matches!(
            s.min_weight(u64::MAX, 0, &cfg()),
            Err(EngineError::Capacity(_))
        ));
    }
}
