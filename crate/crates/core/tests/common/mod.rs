#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rainbowpack::conjoining::{ConjoiningInstance, WeightedEdge};
use rainbowpack::model::{Instance, Rational, Vector};
use rainbowpack::otr::{ColoredEdge, ColoredGraph};

pub fn random_colored_graph<R: Rng>(rng: &mut R, max_nodes: usize, max_colors: usize, max_w: u64) -> ColoredGraph {
    let nodes = rng.gen_range(0..=max_nodes);
    let colors = rng.gen_range(1..=max_colors);
    let density = rng.gen_range(0.3..0.9);
    let mut edges = Vec::new();
    for u in 0..nodes {
        for v in u + 1..nodes {
            if !rng.gen_bool(density) {
                continue;
            }
            let mut options: Vec<(usize, u64)> = Vec::new();
            for c in 0..colors {
                if rng.gen_bool(0.5) {
                    options.push((c, rng.gen_range(0..=max_w)));
                }
            }
            if options.is_empty() {
                let c = rng.gen_range(0..colors);
                options.push((c, rng.gen_range(0..=max_w)));
            }
            edges.push(ColoredEdge { u, v, options });
        }
    }
    let budget = if rng.gen_bool(0.7) { 1000 } else { rng.gen_range(0..=max_w * nodes as u64 / 2 + 1) };
    ColoredGraph::new(nodes, colors, edges, budget).unwrap()
}

pub fn random_conjoining<R: Rng>(rng: &mut R, max_nodes: usize, max_pattern: usize, loops: bool, max_w: u64) -> ConjoiningInstance {
    let nodes = rng.gen_range(0..=max_nodes);
    let classes = rng.gen_range(1..=3);
    let class_of: Vec<usize> = (0..nodes).map(|_| rng.gen_range(0..classes)).collect();
    let density = rng.gen_range(0.3..0.9);
    let mut edges = Vec::new();
    for u in 0..nodes {
        for v in u + 1..nodes {
            if rng.gen_bool(density) {
                edges.push(WeightedEdge { u, v, weight: rng.gen_range(0..=max_w) });
            }
        }
    }
    let mut candidates: Vec<(usize, usize)> = (0..classes)
        .flat_map(|a| (a..classes).map(move |b| (a, b)))
        .filter(|&(a, b)| loops || a != b)
        .collect();
    candidates.shuffle(rng);
    let take = rng.gen_range(0..=max_pattern.min(candidates.len()));
    let pattern = candidates[..take].to_vec();
    let budget = if rng.gen_bool(0.7) { 1000 } else { rng.gen_range(0..=max_w * nodes as u64 / 2 + 1) };
    ConjoiningInstance::new(class_of, classes, edges, pattern, budget).unwrap()
}

/// Coordinates are multiples of 1/`grain`.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    n: usize,
    d: usize,
    grain: i64,
    max: i64,
    profits: Option<(u64, usize)>,
) -> Instance {
    let cap = Vector::new(vec![Rational::from_integer(1.into()); d]);
    let vectors = (0..n)
        .map(|_| {
            Vector::new(
                (0..d)
                    .map(|_| Rational::new(rng.gen_range(1..=max).into(), grain.into()))
                    .collect(),
            )
        })
        .collect();
    let (p, c) = match profits {
        Some((pmax, cmax)) => (
            Some((0..n).map(|_| rng.gen_range(0..=pmax)).collect()),
            Some(rng.gen_range(0..=cmax)),
        ),
        None => (None, None),
    };
    Instance::new(cap, vectors, p, c).unwrap()
}
