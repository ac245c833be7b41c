//! First-passage times, reachable sets and time-constant estimates.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::Serialize;

use crate::environment::{sample_window, EnvironmentSpec, EnvironmentWindow, Topology};
use crate::error::{config_err, Error, Result};
use crate::lattice::{l1_norm_f, BoxShape, Coord, Direction, DirectionSet, MAX_DIM};
use crate::rng;
use crate::stats::{summarize, Summary};

/// Nearest-neighbour lattice path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    vertices: Vec<Vec<i64>>,
}

impl Path {
    pub fn new(vertices: Vec<Vec<i64>>) -> Result<Self> {
        if vertices.is_empty() {
            return config_err("a path needs at least one vertex");
        }
        for w in vertices.windows(2) {
            if step_between(&w[0], &w[1]).is_none() {
                return config_err(format!("{:?} -> {:?} is not a unit step", w[0], w[1]));
            }
        }
        Ok(Path { vertices })
    }

    /// Path from `start` following `steps`.
    pub fn from_steps(start: Vec<i64>, steps: &[Direction]) -> Self {
        let mut vertices = vec![start];
        for s in steps {
            let mut y = vertices.last().unwrap().clone();
            y[s.axis] += s.sign();
            vertices.push(y);
        }
        Path { vertices }
    }

    pub fn vertices(&self) -> &[Vec<i64>] {
        &self.vertices
    }

    pub fn steps(&self) -> Vec<Direction> {
        self.vertices.windows(2).map(|w| step_between(&w[0], &w[1]).unwrap()).collect()
    }

    /// Passage time, summed from the start of the path.
    pub fn time(&self, env: &EnvironmentWindow) -> Result<f64> {
        let mut t = 0.0;
        for (w, s) in self.vertices.windows(2).zip(self.steps()) {
            t += env.weight(&w[0], s)?;
        }
        Ok(t)
    }
}

fn step_between(x: &[i64], y: &[i64]) -> Option<Direction> {
    if x.len() != y.len() {
        return None;
    }
    let mut found = None;
    for i in 0..x.len() {
        match y[i] - x[i] {
            0 => {}
            1 if found.is_none() => found = Some(Direction::plus(i)),
            -1 if found.is_none() => found = Some(Direction::minus(i)),
            _ => return None,
        }
    }
    found
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    t: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Min-heap on (time, linear index); linear index order is lexicographic.
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over the vertices of `shape`.
///
/// With `wrap`, neighbours leaving the box re-enter on the opposite face.
/// Vertices whose time exceeds `cap` are left at infinity. The search stops
/// once every index in `targets` is settled.
pub(crate) fn dijkstra(
    shape: &BoxShape,
    wrap: bool,
    weight: impl Fn(&[i64], Direction) -> f64,
    source: usize,
    cap: f64,
    targets: &[usize],
) -> Vec<f64> {
    let d = shape.dim();
    let dirs = DirectionSet::new(d);
    let mut dist = vec![f64::INFINITY; shape.len()];
    let mut done = vec![false; shape.len()];
    let mut remaining = targets.len();
    let mut is_target = vec![false; if targets.is_empty() { 0 } else { shape.len() }];
    for &t in targets {
        is_target[t] = true;
    }
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry { t: 0.0, idx: source });
    let mut x: Coord = [0; MAX_DIM];
    while let Some(Entry { t, idx }) = heap.pop() {
        if done[idx] {
            continue;
        }
        done[idx] = true;
        if !targets.is_empty() && is_target[idx] {
            is_target[idx] = false;
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        shape.coord_into(idx, &mut x);
        for dir in dirs.all() {
            let nb = match shape.neighbor(idx, &x[..d], dir) {
                Some(nb) => nb,
                None if wrap => {
                    let mut y = x;
                    y[dir.axis] += dir.sign();
                    let lo = shape.lo()[dir.axis];
                    y[dir.axis] = lo + (y[dir.axis] - lo).rem_euclid(shape.extents()[dir.axis]);
                    shape.index_of(&y[..d]).expect("wrapped point")
                }
                None => continue,
            };
            if done[nb] {
                continue;
            }
            let w = weight(&x[..d], dir);
            if w.is_nan() {
                continue;
            }
            let nt = t + w;
            if nt <= cap && nt < dist[nb] {
                dist[nb] = nt;
                heap.push(Entry { t: nt, idx: nb });
            }
        }
    }
    dist
}

/// Single-source passage times `T(source, ·)` over a window.
#[derive(Debug, Clone)]
pub struct PassageTimeMap {
    source: Vec<i64>,
    shape: BoxShape,
    topology: Topology,
    times: Vec<f64>,
}

impl PassageTimeMap {
    pub fn source(&self) -> &[i64] {
        &self.source
    }

    pub fn shape(&self) -> &BoxShape {
        &self.shape
    }

    /// `T(source, y)`; `None` outside the window or when unreached.
    pub fn time(&self, y: &[i64]) -> Option<f64> {
        let idx = match self.topology {
            Topology::OpenBox => self.shape.index_of(y)?,
            Topology::Torus => {
                let mut c: Coord = [0; MAX_DIM];
                let lo = self.shape.lo();
                for i in 0..y.len() {
                    c[i] = lo[i] + (y[i] - lo[i]).rem_euclid(self.shape.extents()[i]);
                }
                self.shape.index_of(&c[..y.len()])?
            }
        };
        let t = self.times[idx];
        t.is_finite().then_some(t)
    }

    /// Dense times in the window's linear order (infinite where unreached).
    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

fn source_index(env: &EnvironmentWindow, x: &[i64]) -> Result<usize> {
    if x.len() != env.dim() {
        return config_err("source has the wrong dimension");
    }
    match env.topology() {
        Topology::OpenBox => env
            .shape()
            .index_of(x)
            .ok_or_else(|| Error::OutOfWindow { point: x.to_vec(), direction: "none".into() }),
        Topology::Torus => {
            let mut c: Coord = [0; MAX_DIM];
            let s = env.shape();
            for i in 0..x.len() {
                c[i] = s.lo()[i] + (x[i] - s.lo()[i]).rem_euclid(s.extents()[i]);
            }
            Ok(s.index_of(&c[..x.len()]).unwrap())
        }
    }
}

fn run(env: &EnvironmentWindow, source: &[i64], cap: f64, targets: &[usize]) -> Result<PassageTimeMap> {
    let src = source_index(env, source)?;
    let wrap = env.topology() == Topology::Torus;
    let times = dijkstra(env.shape(), wrap, |x, a| env.weight_unchecked(x, a), src, cap, targets);
    Ok(PassageTimeMap { source: source.to_vec(), shape: env.shape().clone(), topology: env.topology(), times })
}

/// Exact shortest-path times from `source` to every vertex of the window.
pub fn first_passage_times(env: &EnvironmentWindow, source: &[i64]) -> Result<PassageTimeMap> {
    run(env, source, f64::INFINITY, &[])
}

/// `T(x, y)` with early exit once `y` is settled.
pub fn passage_time(env: &EnvironmentWindow, x: &[i64], y: &[i64]) -> Result<f64> {
    let target = source_index(env, y)?;
    let map = run(env, x, f64::INFINITY, &[target])?;
    map.time(y).ok_or_else(|| Error::DomainTooSmall(format!("{y:?} is unreachable from {x:?}")))
}

/// `R(x, t) = {y : T(x, y) <= t}` within the window, in lexicographic order.
pub fn reachable_set(env: &EnvironmentWindow, x: &[i64], t: f64) -> Result<Vec<Vec<i64>>> {
    if !(t >= 0.0) {
        return config_err(format!("time budget must be >= 0, got {t}"));
    }
    let map = run(env, x, t, &[])?;
    Ok(map
        .times
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= t)
        .map(|(i, _)| env.shape().coord_of(i))
        .collect())
}

/// Nearest lattice point; exact halves round toward zero.
pub fn round_to_lattice(v: &[f64]) -> Vec<i64> {
    v.iter()
        .map(|&c| {
            let r = if (c - c.trunc()).abs() == 0.5 { c.trunc() } else { c.round() };
            r as i64
        })
        .collect()
}

/// Monte-Carlo estimate of `m(x)` from independent replicas.
#[derive(Debug, Clone, Serialize)]
pub struct TimeConstantEstimate {
    pub direction: Vec<f64>,
    pub n_values: Vec<u64>,
    pub seeds: Vec<u64>,
    /// `scaled[k][s] = T(0, [n_k x]) / n_k` for replica `s`.
    pub scaled: Vec<Vec<f64>>,
    /// Per-scale summaries, in the order of `n_values`.
    pub per_n: Vec<Summary>,
    /// Summary at the largest scale.
    pub estimate: Summary,
}

impl TimeConstantEstimate {
    pub fn value(&self) -> f64 {
        self.estimate.mean
    }

    pub fn half_width(&self) -> f64 {
        self.estimate.half_width
    }
}

/// Open-box radius guaranteeing no optimal path to `[n x]` is clipped.
pub fn window_radius(n: u64, x: &[f64], a: f64, b: f64) -> i64 {
    (n as f64 * l1_norm_f(x) * b / a).ceil() as i64 + 2
}

/// `T(0, [n x]) / n` for every `n` in one replica.
pub fn scaled_passage_times(spec: &EnvironmentSpec, x: &[f64], n_values: &[u64]) -> Result<Vec<f64>> {
    let bounds = spec.bounds();
    let n_max = *n_values.iter().max().unwrap();
    let r = window_radius(n_max, x, bounds.a, bounds.b);
    let origin = vec![0i64; spec.d];
    let env = sample_window(spec, BoxShape::centered(&origin, r)?, Topology::OpenBox)?;
    let targets: Vec<Vec<i64>> =
        n_values.iter().map(|&n| round_to_lattice(&x.iter().map(|c| c * n as f64).collect::<Vec<_>>())).collect();
    let idx: Vec<usize> = targets.iter().map(|t| env.shape().index_of(t).expect("inside window")).collect();
    let map = run(&env, &origin, f64::INFINITY, &idx)?;
    targets
        .iter()
        .zip(n_values)
        .map(|(t, &n)| {
            map.time(t)
                .map(|s| s / n as f64)
                .ok_or_else(|| Error::DomainTooSmall(format!("target {t:?} not reached")))
        })
        .collect()
}

/// Estimates `m(x)` as the replica mean of `T(0, [n x]) / n` at the largest `n`.
pub fn estimate_time_constant(
    spec: &EnvironmentSpec,
    x: &[f64],
    n_values: &[u64],
    seeds: usize,
) -> Result<TimeConstantEstimate> {
    if x.len() != spec.d {
        return config_err(format!("direction has {} entries, expected {}", x.len(), spec.d));
    }
    if !(l1_norm_f(x) > 0.0) || x.iter().any(|c| !c.is_finite()) {
        return config_err("direction must be finite and nonzero");
    }
    if n_values.is_empty() || n_values.contains(&0) || seeds == 0 {
        return config_err("need at least one positive scale and one seed");
    }
    let mut n_sorted = n_values.to_vec();
    n_sorted.sort_unstable();
    n_sorted.dedup();
    let bounds = spec.bounds();
    let r = window_radius(*n_sorted.last().unwrap(), x, bounds.a, bounds.b);
    if (2 * r + 1).checked_pow(spec.d as u32).is_none_or(|v| v > 400_000_000) {
        return config_err(format!("window of radius {r} in d = {} is too large", spec.d));
    }
    let seed_list: Vec<u64> = (0..seeds as u64).map(|k| rng::replica_seed(spec.seed, k)).collect();
    let rows: Vec<Vec<f64>> = seed_list
        .par_iter()
        .map(|&s| scaled_passage_times(&spec.with_seed(s), x, &n_sorted))
        .collect::<Result<_>>()?;
    let scaled: Vec<Vec<f64>> = (0..n_sorted.len()).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
    let per_n: Vec<Summary> = scaled.iter().map(|v| summarize(v)).collect();
    let estimate = *per_n.last().unwrap();
    Ok(TimeConstantEstimate { direction: x.to_vec(), n_values: n_sorted, seeds: seed_list, scaled, per_n, estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{EnvironmentKind, ExplicitTable, WeightDistribution};

    fn open(spec: &EnvironmentSpec, shape: BoxShape) -> EnvironmentWindow {
        sample_window(spec, shape, Topology::OpenBox).unwrap()
    }

    #[test]
    fn rounding_rule() {
        assert_eq!(round_to_lattice(&[1.2, -0.7]), vec![1, -1]);
        assert_eq!(round_to_lattice(&[0.5, 0.5]), vec![0, 0]);
        assert_eq!(round_to_lattice(&[-0.5, 2.5]), vec![0, 2]);
        assert_eq!(round_to_lattice(&[-1.5, 1.51]), vec![-1, 2]);
    }

    #[test]
    fn homogeneous_times_are_scaled_l1() {
        let spec = EnvironmentSpec::constant(2, 2.5).unwrap();
        let env = open(&spec, BoxShape::centered(&[0, 0], 4).unwrap());
        let map = first_passage_times(&env, &[0, 0]).unwrap();
        for y in env.shape().iter() {
            assert_eq!(map.time(&y).unwrap(), 2.5 * (y[0].abs() + y[1].abs()) as f64);
        }
    }

    #[test]
    fn one_dimensional_times_are_partial_sums() {
        let spec = EnvironmentSpec::new(
            EnvironmentKind::IidUndirected,
            1,
            WeightDistribution::Uniform { lo: 1.0, hi: 3.0 },
            4,
        )
        .unwrap();
        let env = open(&spec, BoxShape::from_extents(vec![30]).unwrap());
        let map = first_passage_times(&env, &[0]).unwrap();
        let mut acc = 0.0;
        for n in 1..30 {
            acc += env.weight(&[n - 1], Direction::plus(0)).unwrap();
            assert_eq!(map.time(&[n]).unwrap(), acc);
        }
    }

    #[test]
    fn reachable_sets() {
        let spec = EnvironmentSpec::constant(2, 1.0).unwrap();
        let env = open(&spec, BoxShape::centered(&[0, 0], 5).unwrap());
        assert_eq!(reachable_set(&env, &[0, 0], 0.0).unwrap(), vec![vec![0, 0]]);
        let r = reachable_set(&env, &[0, 0], 2.5).unwrap();
        assert_eq!(r.len(), 13);
        assert!(r.iter().all(|y| y[0].abs() + y[1].abs() <= 2));
        assert!(reachable_set(&env, &[0, 0], -1.0).is_err());
    }

    #[test]
    fn passage_time_on_torus_wraps() {
        let spec = EnvironmentSpec::constant(2, 1.0).unwrap();
        let env = sample_window(&spec, BoxShape::from_extents(vec![5, 5]).unwrap(), Topology::Torus).unwrap();
        assert_eq!(passage_time(&env, &[0, 0], &[4, 4]).unwrap(), 2.0);
    }

    #[test]
    fn path_time_matches_dijkstra_on_unique_geodesic() {
        let shape = BoxShape::from_extents(vec![3, 1]).unwrap();
        let t = ExplicitTable::undirected_from_fn(shape.clone(), |x, _| 1.0 + x[0] as f64);
        let env = open(&EnvironmentSpec::explicit(t).unwrap(), shape);
        let p = Path::from_steps(vec![0, 0], &[Direction::plus(0), Direction::plus(0)]);
        assert_eq!(p.time(&env).unwrap(), 3.0);
        assert_eq!(passage_time(&env, &[0, 0], &[2, 0]).unwrap(), 3.0);
        assert!(Path::new(vec![vec![0, 0], vec![1, 1]]).is_err());
    }

    #[test]
    fn constant_medium_estimate_is_exact() {
        let spec = EnvironmentSpec::constant(2, 2.5).unwrap();
        let est = estimate_time_constant(&spec, &[1.0, 0.0], &[5, 20], 3).unwrap();
        assert_eq!(est.value(), 2.5);
        assert_eq!(est.half_width(), 0.0);
    }

    #[test]
    fn rejects_bad_requests() {
        let spec = EnvironmentSpec::constant(2, 1.0).unwrap();
        assert!(estimate_time_constant(&spec, &[0.0, 0.0], &[5], 2).is_err());
        assert!(estimate_time_constant(&spec, &[1.0], &[5], 2).is_err());
        assert!(estimate_time_constant(&spec, &[1.0, 0.0], &[], 2).is_err());
    }
}
