//! Instances, assignments and exact feasibility checks.

use std::fmt;
use std::ops::Deref;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact non-negative rational. Always normalized by `num-rational`.
pub type Rational = BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error("invalid rational literal {0:?}")]
    BadRational(String),
    #[error("negative coordinate in {what} at dimension {dimension}")]
    Negative { what: String, dimension: usize },
    #[error("dimension mismatch: {what} has {found} coordinates, expected {expected}")]
    DimensionMismatch {
        what: String,
        found: usize,
        expected: usize,
    },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("{found} profits given for {expected} vectors")]
    ProfitCount { found: usize, expected: usize },
    #[error("profits given without a container count")]
    ProfitsWithoutContainers,
}

/// Parses `"p/q"`, an integer, or a decimal literal such as `"0.15"` or `"1e-3"`.
pub fn parse_rational(text: &str) -> Result<Rational, ModelError> {
    let bad = || ModelError::BadRational(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| bad())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Rational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

/// Renders as `"p"` or `"p/q"`, the form accepted back by [`parse_rational`].
pub fn format_rational(r: &Rational) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A d-dimensional vector of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Vector(Vec<Rational>);

impl Vector {
    pub fn new(coords: Vec<Rational>) -> Self {
        Vector(coords)
    }

    pub fn zeros(d: usize) -> Self {
        Vector(vec![Rational::zero(); d])
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        Vector(coords.iter().map(|&c| Rational::from_integer(c.into())).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn add_assign(&mut self, other: &Vector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self ≤ cap` in every coordinate.
    pub fn fits_within(&self, cap: &Vector) -> bool {
        self.0.iter().zip(&cap.0).all(|(a, b)| a <= b)
    }

    /// `self ≥ demand` in every coordinate.
    pub fn covers(&self, demand: &Vector) -> bool {
        self.0.iter().zip(&demand.0).all(|(a, b)| a >= b)
    }

    /// Componentwise `max(cap - self, 0)`.
    pub fn deficit_to(&self, cap: &Vector) -> Vector {
        Vector(
            self.0
                .iter()
                .zip(&cap.0)
                .map(|(a, b)| if a >= b { Rational::zero() } else { b - a })
                .collect(),
        )
    }

    pub fn sum<'a>(d: usize, items: impl IntoIterator<Item = &'a Vector>) -> Vector {
        let mut acc = Vector::zeros(d);
        for v in items {
            acc.add_assign(v);
        }
        acc
    }
}

impl Deref for Vector {
    type Target = [Rational];
    fn deref(&self) -> &[Rational] {
        &self.0
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(format_rational).collect();
        write!(f, "({})", parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    dimension: usize,
    capacity: Vector,
    vectors: Vec<Vector>,
    profits: Option<Vec<u64>>,
    containers: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceJson {
    dimension: usize,
    capacity: Vec<String>,
    vectors: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    profits: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    containers: Option<usize>,
}

impl Instance {
    pub fn new(
        capacity: Vector,
        vectors: Vec<Vector>,
        profits: Option<Vec<u64>>,
        containers: Option<usize>,
    ) -> Result<Self, ModelError> {
        let dimension = capacity.dim();
        if dimension == 0 {
            return Err(ModelError::ZeroDimension);
        }
        check_coords("capacity", &capacity, dimension)?;
        for (i, v) in vectors.iter().enumerate() {
            check_coords(&format!("vector {i}"), v, dimension)?;
        }
        if let Some(p) = &profits {
            if p.len() != vectors.len() {
                return Err(ModelError::ProfitCount {
                    found: p.len(),
                    expected: vectors.len(),
                });
            }
            if containers.is_none() {
                return Err(ModelError::ProfitsWithoutContainers);
            }
        }
        Ok(Instance {
            dimension,
            capacity,
            vectors,
            profits,
            containers,
        })
    }

    /// One-dimensional convenience constructor.
    pub fn one_dim(capacity: Rational, sizes: Vec<Rational>) -> Result<Self, ModelError> {
        Instance::new(
            Vector::new(vec![capacity]),
            sizes.into_iter().map(|s| Vector::new(vec![s])).collect(),
            None,
            None,
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn capacity(&self) -> &Vector {
        &self.capacity
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &Vector {
        &self.vectors[i]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn profits(&self) -> Option<&[u64]> {
        self.profits.as_deref()
    }

    pub fn containers(&self) -> Option<usize> {
        self.containers
    }

    /// Restriction to the given objects, keeping capacity, profits and container count.
    pub fn subset(&self, indices: &[usize]) -> Instance {
        Instance {
            dimension: self.dimension,
            capacity: self.capacity.clone(),
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
            profits: self
                .profits
                .as_ref()
                .map(|p| indices.iter().map(|&i| p[i]).collect()),
            containers: self.containers,
        }
    }

    pub fn to_json(&self) -> String {
        let doc = InstanceJson {
            dimension: self.dimension,
            capacity: self.capacity.iter().map(format_rational).collect(),
            vectors: self
                .vectors
                .iter()
                .map(|v| v.iter().map(format_rational).collect())
                .collect(),
            profits: self.profits.clone(),
            containers: self.containers,
        };
        serde_json::to_string(&doc).expect("instance serializes")
    }
}

fn check_coords(what: &str, v: &Vector, d: usize) -> Result<(), ModelError> {
    if v.dim() != d {
        return Err(ModelError::DimensionMismatch {
            what: what.to_string(),
            found: v.dim(),
            expected: d,
        });
    }
    if let Some(dim) = v.iter().position(|c| c.is_negative()) {
        return Err(ModelError::Negative {
            what: what.to_string(),
            dimension: dim,
        });
    }
    Ok(())
}

pub fn parse_instance(text: &[u8]) -> Result<Instance, ModelError> {
    let doc: InstanceJson =
        serde_json::from_slice(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
    if doc.dimension == 0 {
        return Err(ModelError::ZeroDimension);
    }
    let parse_vec = |what: String, coords: &[String]| -> Result<Vector, ModelError> {
        if coords.len() != doc.dimension {
            return Err(ModelError::DimensionMismatch {
                what,
                found: coords.len(),
                expected: doc.dimension,
            });
        }
        coords
            .iter()
            .map(|c| parse_rational(c))
            .collect::<Result<Vec<_>, _>>()
            .map(Vector::new)
    };
    let capacity = parse_vec("capacity".into(), &doc.capacity)?;
    let vectors = doc
        .vectors
        .iter()
        .enumerate()
        .map(|(i, v)| parse_vec(format!("vector {i}"), v))
        .collect::<Result<Vec<_>, _>>()?;
    Instance::new(capacity, vectors, doc.profits, doc.containers)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Pack,
    Cover,
    Knapsack,
}

/// Container per object (`None` is unpacked) and the claimed objective.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub objective: u64,
    pub placement: Vec<Option<usize>>,
}

impl Assignment {
    /// Numbers non-empty containers by their smallest member, which makes the
    /// output independent of the order the solver discovered them in.
    pub fn from_containers(n: usize, containers: &[Vec<usize>], objective: u64) -> Self {
        let mut order: Vec<&Vec<usize>> = containers.iter().filter(|c| !c.is_empty()).collect();
        order.sort_by_key(|c| c.iter().min().copied());
        let mut placement = vec![None; n];
        for (idx, c) in order.into_iter().enumerate() {
            for &obj in c {
                assert!(placement[obj].is_none(), "object {obj} placed twice");
                placement[obj] = Some(idx);
            }
        }
        Assignment {
            objective,
            placement,
        }
    }

    /// Object indices per container, indexed by container id.
    pub fn containers(&self) -> Vec<Vec<usize>> {
        let count = self.placement.iter().flatten().map(|&c| c + 1).max().unwrap_or(0);
        let mut out = vec![Vec::new(); count];
        for (obj, c) in self.placement.iter().enumerate() {
            if let Some(c) = c {
                out[*c].push(obj);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("assignment serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Excess {
        container: usize,
        dimension: usize,
        amount: String,
    },
    Deficit {
        container: usize,
        dimension: usize,
        amount: String,
    },
    Unplaced {
        object: usize,
    },
    ContainerOutOfRange {
        container: usize,
    },
    WrongLength {
        found: usize,
        expected: usize,
    },
    ObjectiveMismatch {
        claimed: u64,
        actual: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub objective: u64,
    pub violations: Vec<Violation>,
}

/// Re-checks an assignment with exact arithmetic. Never fails; problems are
/// reported as violations.
pub fn validate(instance: &Instance, assignment: &Assignment, mode: Mode) -> ValidationReport {
    let mut violations = Vec::new();
    let n = instance.len();
    if assignment.placement.len() != n {
        violations.push(Violation::WrongLength {
            found: assignment.placement.len(),
            expected: n,
        });
        return ValidationReport {
            valid: false,
            objective: 0,
            violations,
        };
    }
    let limit = match mode {
        Mode::Knapsack => instance.containers(),
        _ => None,
    };
    let mut loads: Vec<Vector> = Vec::new();
    for (obj, slot) in assignment.placement.iter().enumerate() {
        match slot {
            None => {
                if mode != Mode::Knapsack {
                    violations.push(Violation::Unplaced { object: obj });
                }
            }
            Some(c) => {
                if limit.is_some_and(|l| *c >= l) {
                    violations.push(Violation::ContainerOutOfRange { container: *c });
                    continue;
                }
                if loads.len() <= *c {
                    loads.resize(*c + 1, Vector::zeros(instance.dimension()));
                }
                loads[*c].add_assign(instance.vector(obj));
            }
        }
    }
    let used: Vec<bool> = {
        let mut u = vec![false; loads.len()];
        for c in assignment.placement.iter().flatten() {
            if *c < u.len() {
                u[*c] = true;
            }
        }
        u
    };
    let cap = instance.capacity();
    let objective = match mode {
        Mode::Pack | Mode::Knapsack => {
            for (c, load) in loads.iter().enumerate() {
                for (dim, (a, b)) in load.iter().zip(cap.iter()).enumerate() {
                    if a > b {
                        violations.push(Violation::Excess {
                            container: c,
                            dimension: dim,
                            amount: format_rational(&(a - b)),
                        });
                    }
                }
            }
            if mode == Mode::Pack {
                used.iter().filter(|&&u| u).count() as u64
            } else {
                let profits = instance.profits().unwrap_or(&[]);
                assignment
                    .placement
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.is_some())
                    .map(|(i, _)| profits.get(i).copied().unwrap_or(0))
                    .sum()
            }
        }
        Mode::Cover => loads
            .iter()
            .zip(&used)
            .filter(|(load, &u)| u && load.covers(cap))
            .count() as u64,
    };
    if objective != assignment.objective {
        violations.push(Violation::ObjectiveMismatch {
            claimed: assignment.objective,
            actual: objective,
        });
        if mode == Mode::Cover {
            for (c, load) in loads.iter().enumerate() {
                if !used[c] {
                    continue;
                }
                for (dim, (a, b)) in load.iter().zip(cap.iter()).enumerate() {
                    if a < b {
                        violations.push(Violation::Deficit {
                            container: c,
                            dimension: dim,
                            amount: format_rational(&(b - a)),
                        });
                    }
                }
            }
        }
    }
    ValidationReport {
        valid: violations.is_empty(),
        objective,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn rational_literals() {
        assert_eq!(r("0.15"), Rational::new(3.into(), 20.into()));
        assert_eq!(r("1/3"), Rational::new(1.into(), 3.into()));
        assert_eq!(r("2/4"), Rational::new(1.into(), 2.into()));
        assert_eq!(r("7"), Rational::from_integer(7.into()));
        assert_eq!(r(".5"), Rational::new(1.into(), 2.into()));
        assert_eq!(r("5."), Rational::from_integer(5.into()));
        assert_eq!(r("1.5e-1"), Rational::new(3.into(), 20.into()));
        assert_eq!(r("2e2"), Rational::from_integer(200.into()));
        for bad in ["", ".", "1/0", "abc", "1..2", "0x10", "1/2/3", "e5"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn parse_examples() {
        let inst = parse_instance(br#"{"dimension":1,"capacity":["1"],"vectors":[["0.5"]]}"#)
            .unwrap();
        assert_eq!(inst.len(), 1);
        assert_eq!(inst.capacity()[0], r("1"));
        let inst = parse_instance(
            br#"{"dimension":2,"capacity":["1","1"],"vectors":[["1/3","2/3"]]}"#,
        )
        .unwrap();
        assert_eq!(inst.vector(0)[0], Rational::new(1.into(), 3.into()));
        assert_eq!(inst.vector(0)[1], Rational::new(2.into(), 3.into()));
    }

    #[test]
    fn parse_errors() {
        let cases: [(&[u8], fn(&ModelError) -> bool); 6] = [
            (b"{", |e| matches!(e, ModelError::Malformed(_))),
            (
                br#"{"dimension":1,"capacity":["1"],"vectors":[["-0.5"]]}"#,
                |e| matches!(e, ModelError::Negative { .. }),
            ),
            (
                br#"{"dimension":2,"capacity":["1","1"],"vectors":[["0.5"]]}"#,
                |e| matches!(e, ModelError::DimensionMismatch { .. }),
            ),
            (
                br#"{"dimension":1,"capacity":["1"],"vectors":[["0.5"]],"profits":[3]}"#,
                |e| *e == ModelError::ProfitsWithoutContainers,
            ),
            (
                br#"{"dimension":1,"capacity":["1"],"vectors":[["0.5"]],"profits":[3,4],"containers":1}"#,
                |e| matches!(e, ModelError::ProfitCount { .. }),
            ),
            (
                br#"{"dimension":0,"capacity":[],"vectors":[]}"#,
                |e| *e == ModelError::ZeroDimension,
            ),
        ];
        for (text, check) in cases {
            let err = parse_instance(text).unwrap_err();
            assert!(check(&err), "{err:?}");
        }
    }

    fn one_dim(sizes: &[&str]) -> Instance {
        Instance::one_dim(r("1"), sizes.iter().map(|s| r(s)).collect()).unwrap()
    }

    #[test]
    fn validate_examples() {
        let inst = one_dim(&["0.5", "0.5"]);
        let a = Assignment {
            objective: 1,
            placement: vec![Some(0), Some(0)],
        };
        assert!(validate(&inst, &a, Mode::Pack).valid);

        let inst = one_dim(&["0.6", "0.5"]);
        let rep = validate(&inst, &a, Mode::Pack);
        assert!(!rep.valid);
        assert_eq!(
            rep.violations,
            vec![Violation::Excess {
                container: 0,
                dimension: 0,
                amount: "1/10".into()
            }]
        );
        let rep = validate(&inst, &a, Mode::Cover);
        assert!(rep.valid);
        assert_eq!(rep.objective, 1);
    }

    #[test]
    fn validate_cover_mismatch_lists_deficits() {
        let inst = one_dim(&["0.3", "0.5"]);
        let a = Assignment {
            objective: 1,
            placement: vec![Some(0), Some(0)],
        };
        let rep = validate(&inst, &a, Mode::Cover);
        assert!(!rep.valid);
        assert!(rep.violations.contains(&Violation::Deficit {
            container: 0,
            dimension: 0,
            amount: "1/5".into()
        }));
    }

    #[test]
    fn validate_knapsack() {
        let inst = Instance::new(
            Vector::from_ints(&[10]),
            vec![Vector::from_ints(&[6]), Vector::from_ints(&[7])],
            Some(vec![5, 6]),
            Some(1),
        )
        .unwrap();
        let ok = Assignment {
            objective: 6,
            placement: vec![None, Some(0)],
        };
        assert!(validate(&inst, &ok, Mode::Knapsack).valid);
        let out_of_range = Assignment {
            objective: 6,
            placement: vec![None, Some(1)],
        };
        assert!(!validate(&inst, &out_of_range, Mode::Knapsack).valid);
        assert!(!validate(&inst, &ok, Mode::Pack).valid);
    }

    #[test]
    fn canonical_container_numbering() {
        let a = Assignment::from_containers(4, &[vec![3], vec![], vec![2, 0], vec![1]], 3);
        assert_eq!(a.placement, vec![Some(0), Some(1), Some(0), Some(2)]);
        assert_eq!(a.containers(), vec![vec![0, 2], vec![1], vec![3]]);
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (0i64..50, 1i64..13).prop_map(|(p, q)| Rational::new(p.into(), q.into()))
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (1usize..4).prop_flat_map(|d| {
            (
                prop::collection::vec(arb_rational(), d),
                prop::collection::vec(prop::collection::vec(arb_rational(), d), 0..7),
                any::<bool>(),
            )
                .prop_map(|(cap, vs, with_profits)| {
                    let n = vs.len();
                    let (p, c) = if with_profits {
                        (Some((0..n as u64).collect()), Some(2))
                    } else {
                        (None, None)
                    };
                    Instance::new(
                        Vector::new(cap),
                        vs.into_iter().map(Vector::new).collect(),
                        p,
                        c,
                    )
                    .unwrap()
                })
        })
    }

    /// Independent re-evaluation: container loads recomputed from scratch per container.
    fn reference_pack_ok(inst: &Instance, placement: &[Option<usize>]) -> bool {
        let max = placement.iter().flatten().copied().max();
        let Some(max) = max else {
            return placement.iter().all(|p| p.is_some());
        };
        (0..=max).all(|c| {
            (0..inst.dimension()).all(|dim| {
                let total: Rational = placement
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p == Some(c))
                    .map(|(i, _)| inst.vector(i)[dim].clone())
                    .sum();
                total <= inst.capacity()[dim]
            })
        }) && placement.iter().all(|p| p.is_some())
    }

    proptest! {
        #[test]
        fn instance_round_trip(inst in arb_instance()) {
            let text = inst.to_json();
            let back = parse_instance(text.as_bytes()).unwrap();
            prop_assert_eq!(&back, &inst);
            prop_assert_eq!(back.to_json(), text);
        }

        #[test]
        fn rational_round_trip(p in 0i64..10_000, q in 1i64..10_000) {
            let x = Rational::new(p.into(), q.into());
            prop_assert_eq!(parse_rational(&format_rational(&x)).unwrap(), x);
        }

        #[test]
        fn pack_validation_matches_reference(
            inst in arb_instance(),
            slots in prop::collection::vec(0usize..3, 7),
        ) {
            let placement: Vec<Option<usize>> =
                slots[..inst.len()].iter().map(|&s| Some(s)).collect();
            let used = {
                let mut u: Vec<usize> = placement.iter().flatten().copied().collect();
                u.sort();
                u.dedup();
                u.len() as u64
            };
            let a = Assignment { objective: used, placement: placement.clone() };
            let rep = validate(&inst, &a, Mode::Pack);
            prop_assert_eq!(rep.valid, reference_pack_ok(&inst, &placement));
        }
    }
}
