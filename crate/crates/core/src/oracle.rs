//! Exhaustive path-enumeration references for tiny open boxes.
//!
//! These walk every simple path, so they are only usable on boxes of a
//! handful of vertices. Removing a loop never increases a path's time, and
//! floating-point addition is monotone, so restricting to simple paths loses
//! nothing.

use crate::environment::EnvironmentWindow;
use crate::lattice::{BoxShape, DirectionSet};

fn walk(
    env: &EnvironmentWindow,
    shape: &BoxShape,
    x: &mut Vec<i64>,
    visited: &mut [bool],
    time: f64,
    drift: f64,
    p: &[f64],
    visit: &mut dyn FnMut(&[i64], f64, f64),
) {
    visit(x, time, drift);
    for dir in DirectionSet::new(shape.dim()).all() {
        x[dir.axis] += dir.sign();
        if let Some(j) = shape.index_of(x) {
            if !visited[j] {
                x[dir.axis] -= dir.sign();
                let w = env.weight_unchecked(x, dir);
                x[dir.axis] += dir.sign();
                if !w.is_nan() {
                    visited[j] = true;
                    let pd = if p.is_empty() { 0.0 } else { dir.dot(p) };
                    walk(env, shape, x, visited, time + w, drift + pd, p, visit);
                    visited[j] = false;
                }
            }
        }
        x[dir.axis] -= dir.sign();
    }
}

/// Minimum over simple paths of the path time, for every vertex of the box.
pub fn passage_times_by_enumeration(env: &EnvironmentWindow, source: &[i64]) -> Vec<f64> {
    let shape = env.shape().clone();
    let mut best = vec![f64::INFINITY; shape.len()];
    let mut visited = vec![false; shape.len()];
    visited[shape.index_of(source).expect("source inside box")] = true;
    let mut x = source.to_vec();
    walk(env, &shape, &mut x, &mut visited, 0.0, 0.0, &[], &mut |y, t, _| {
        let j = shape.index_of(y).unwrap();
        if t < best[j] {
            best[j] = t;
        }
    });
    best
}

/// `min { Σ p·α_i + μ₀(end) : simple paths from x of time <= t }`.
pub fn horizon_by_enumeration(
    env: &EnvironmentWindow,
    p: &[f64],
    x: &[i64],
    t: f64,
    mu0: &dyn Fn(&[i64]) -> f64,
) -> f64 {
    let shape = env.shape().clone();
    let mut visited = vec![false; shape.len()];
    visited[shape.index_of(x).expect("start inside box")] = true;
    let mut best = f64::INFINITY;
    let mut y = x.to_vec();
    walk(env, &shape, &mut y, &mut visited, 0.0, 0.0, p, &mut |end, time, drift| {
        if time <= t {
            best = best.min(drift + mu0(end));
        }
    });
    best
}
