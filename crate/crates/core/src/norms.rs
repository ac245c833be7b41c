//! Norm checks for `H̄`, the dual norm `m = H̄*`, and limit-shape export.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{config_err, Error, Result};
use crate::lattice::linf_norm_f;

/// Pointwise evaluator of `H̄(p)`.
pub type HbarFn<'a> = dyn Fn(&[f64]) -> Result<f64> + Sync + 'a;

/// Sampled values of `H̄` on unit directions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormTable {
    pub d: usize,
    pub directions: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Absolute uncertainty of each value.
    pub tolerances: Vec<f64>,
    pub provenance: String,
    /// Every unit vector lies within this Euclidean distance of a table direction.
    pub mesh_gap: f64,
}

impl NormTable {
    pub fn new(
        directions: Vec<Vec<f64>>,
        values: Vec<f64>,
        tolerances: Vec<f64>,
        provenance: impl Into<String>,
        mesh_gap: f64,
    ) -> Result<Self> {
        if directions.is_empty() {
            return config_err("norm table is empty");
        }
        let d = directions[0].len();
        if directions.iter().any(|p| p.len() != d) || values.len() != directions.len() || tolerances.len() != values.len()
        {
            return config_err("norm table columns have inconsistent lengths");
        }
        for (p, &v) in directions.iter().zip(&values) {
            if linf_norm_f(p) > 0.0 && !(v > 0.0) {
                return config_err(format!("H̄({p:?}) = {v} is not positive"));
            }
        }
        Ok(NormTable { d, directions, values, tolerances, provenance: provenance.into(), mesh_gap })
    }

    /// Evaluates `hbar` on every mesh direction in parallel.
    pub fn from_evaluator(mesh: Mesh, hbar: &HbarFn, tolerance: f64, provenance: impl Into<String>) -> Result<Self> {
        let values: Vec<f64> = mesh.directions.par_iter().map(|p| hbar(p)).collect::<Result<_>>()?;
        let n = values.len();
        NormTable::new(mesh.directions, values, vec![tolerance; n], provenance, mesh.gap)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Every entry satisfies `H̄(p) ≥ |p|∞ / b`, up to its tolerance.
    pub fn lower_bound_holds(&self, b: f64) -> bool {
        self.directions
            .iter()
            .zip(&self.values)
            .zip(&self.tolerances)
            .all(|((p, v), t)| *v + t >= linf_norm_f(p) / b * (1.0 - 1e-12))
    }

    /// Table of `λ H̄`.
    pub fn scaled(&self, lambda: f64) -> NormTable {
        NormTable {
            values: self.values.iter().map(|v| v * lambda).collect(),
            tolerances: self.tolerances.iter().map(|t| t * lambda.abs()).collect(),
            ..self.clone()
        }
    }
}

/// Unit directions with a covering radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub directions: Vec<Vec<f64>>,
    pub gap: f64,
}

/// Unit directions: `±1` in d = 1; angle step `theta` (snapped to divide
/// 2π evenly) in d = 2; a Fibonacci sphere of about `(4π/θ²)` points in d = 3.
pub fn direction_mesh(d: usize, theta: f64) -> Result<Mesh> {
    if !(theta > 0.0 && theta <= PI) {
        return config_err(format!("mesh angle must lie in (0, π], got {theta}"));
    }
    match d {
        1 => Ok(Mesh { directions: vec![vec![1.0], vec![-1.0]], gap: 0.0 }),
        2 => {
            let n = (2.0 * PI / theta).round().max(4.0) as usize;
            let step = 2.0 * PI / n as f64;
            let directions = (0..n)
                .map(|k| {
                    let t = k as f64 * step;
                    snap(vec![t.cos(), t.sin()])
                })
                .collect();
            Ok(Mesh { directions, gap: 2.0 * (step / 4.0).sin() })
        }
        3 => {
            let n = ((4.0 * PI) / (theta * theta)).ceil().max(6.0) as usize;
            let golden = PI * (3.0 - 5f64.sqrt());
            let mut directions: Vec<Vec<f64>> = (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect();
            for i in 0..3 {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; 3];
                    e[i] = s;
                    directions.push(e);
                }
            }
            // Fibonacci spacing is about sqrt(4π/n); allow a factor of two.
            Ok(Mesh { directions, gap: 2.0 * (4.0 * PI / n as f64).sqrt() })
        }
        _ => config_err(format!("direction meshes are only built for d <= 3, got {d}")),
    }
}

/// Rounds components within 1e-15 of 0 or ±1 so axis directions are exact.
fn snap(mut v: Vec<f64>) -> Vec<f64> {
    for c in v.iter_mut() {
        for target in [-1.0, 0.0, 1.0] {
            if (*c - target).abs() < 1e-15 {
                *c = target;
            }
        }
    }
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct NormAxiomReport {
    /// `max |H̄(λp) − λH̄(p)|` over table directions and `λ`.
    pub homogeneity_worst: f64,
    /// `max (H̄(p+q) − H̄(p) − H̄(q))` over sampled pairs; ≤ 0 when it holds.
    pub triangle_worst: f64,
    /// `max (|p|∞/b − H̄(p))`; ≤ 0 when it holds.
    pub lower_bound_worst: f64,
    pub positivity_ok: bool,
    pub pairs: usize,
    pub ok: bool,
}

/// Checks positive homogeneity at each `λ`, the triangle inequality on
/// `pairs` random pairs in `[-1,1]^d`, positivity, and `H̄(p) ≥ |p|∞/b`.
pub fn check_norm_axioms(
    table: &NormTable,
    hbar: &HbarFn,
    lambdas: &[f64],
    pairs: usize,
    b: f64,
    tol: f64,
    seed: u64,
) -> Result<NormAxiomReport> {
    let mut homogeneity_worst: f64 = 0.0;
    for (p, &v) in table.directions.iter().zip(&table.values) {
        for &lam in lambdas {
            let q: Vec<f64> = p.iter().map(|c| c * lam).collect();
            homogeneity_worst = homogeneity_worst.max((hbar(&q)? - lam * v).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..pairs)
        .map(|_| {
            let p = (0..table.d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q = (0..table.d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (p, q)
        })
        .collect();
    let tri: Vec<(f64, f64, bool)> = samples
        .par_iter()
        .map(|(p, q)| {
            let s: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + b).collect();
            let (hp, hq, hs) = (hbar(p)?, hbar(q)?, hbar(&s)?);
            let lb = [(p, hp), (q, hq)].iter().map(|(v, h)| linf_norm_f(v) / b - h).fold(f64::NEG_INFINITY, f64::max);
            Ok((hs - hp - hq, lb, hp > 0.0 && hq > 0.0))
        })
        .collect::<Result<_>>()?;
    let triangle_worst = tri.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let mut lower_bound_worst = tri.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    for (p, &v) in table.directions.iter().zip(&table.values) {
        lower_bound_worst = lower_bound_worst.max(linf_norm_f(p) / b - v);
    }
    let positivity_ok = tri.iter().all(|t| t.2) && table.values.iter().all(|&v| v > 0.0);
    let ok = homogeneity_worst <= tol && triangle_worst <= tol && lower_bound_worst <= tol && positivity_ok;
    Ok(NormAxiomReport { homogeneity_worst, triangle_worst, lower_bound_worst, positivity_ok, pairs, ok })
}

/// `L(x) = max_k p_k·x / H̄(p_k)` with its mesh slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualNormValue {
    /// Lower bound on `m(x)`.
    pub value: f64,
    /// `m(x) − value` is at most this much.
    pub slack: f64,
}

/// Dual norm from a table, with slack from the mesh gap θ and the `1/a`
/// Lipschitz constant of `H̄`:
/// `θ|x|₂ (1/h + 1/(a h²)) + |x|₂ δ / h²`, where `h` bounds `H̄` below on the
/// unit sphere and `δ` is the largest table tolerance.
pub fn dual_norm(table: &NormTable, x: &[f64], a: f64) -> Result<DualNormValue> {
    if table.is_empty() {
        return config_err("norm table is empty");
    }
    if x.len() != table.d {
        return config_err(format!("point has {} entries, table has d = {}", x.len(), table.d));
    }
    let xn = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    if xn == 0.0 {
        return Ok(DualNormValue { value: 0.0, slack: 0.0 });
    }
    let value = table
        .directions
        .iter()
        .zip(&table.values)
        .map(|(p, h)| p.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / h)
        .fold(f64::NEG_INFINITY, f64::max);
    let theta = table.mesh_gap;
    let hmin = table.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let delta = table.tolerances.iter().cloned().fold(0.0, f64::max);
    let h = (hmin - theta / a - delta).max(f64::MIN_POSITIVE);
    let slack = theta * xn * (1.0 / h + 1.0 / (a * h * h)) + xn * delta / (h * h);
    Ok(DualNormValue { value, slack })
}

/// Vertices of `{x : p_k·x ≤ H̄(p_k) ∀k}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polytope {
    pub d: usize,
    /// Counterclockwise in d = 2; unordered in d = 3.
    pub vertices: Vec<Vec<f64>>,
}

impl Polytope {
    /// Strict convexity of a d = 2 polygon via cross products of consecutive edges.
    pub fn is_convex(&self) -> bool {
        if self.d != 2 || self.vertices.len() < 3 {
            return self.d != 2;
        }
        let n = self.vertices.len();
        (0..n).all(|i| {
            let (a, b, c) = (&self.vertices[i], &self.vertices[(i + 1) % n], &self.vertices[(i + 2) % n]);
            (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) > 0.0
        })
    }
}

/// Dual-ball approximation of the limit shape `{x : m(x) ≤ 1}`.
pub fn limit_shape(table: &NormTable) -> Result<Polytope> {
    if table.is_empty() {
        return config_err("norm table is empty");
    }
    match table.d {
        1 => {
            let mut hi = f64::INFINITY;
            let mut lo = f64::NEG_INFINITY;
            for (p, &h) in table.directions.iter().zip(&table.values) {
                if p[0] > 0.0 {
                    hi = hi.min(h / p[0]);
                } else if p[0] < 0.0 {
                    lo = lo.max(h / p[0]);
                }
            }
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Unavailable("table directions do not span both signs".into()));
            }
            Ok(Polytope { d: 1, vertices: vec![vec![lo], vec![hi]] })
        }
        2 => polygon(table),
        3 => polytope3(table),
        d => Err(Error::Unavailable(format!("limit-shape export is not supported for d = {d}"))),
    }
}

fn polygon(table: &NormTable) -> Result<Polytope> {
    let big = 1e6 * table.values.iter().cloned().fold(1.0, f64::max);
    let mut poly = vec![[-big, -big], [big, -big], [big, big], [-big, big]];
    for (p, &h) in table.directions.iter().zip(&table.values) {
        poly = clip(&poly, p[0], p[1], h);
        if poly.is_empty() {
            return Err(Error::Unavailable("empty dual ball".into()));
        }
    }
    if poly.iter().any(|v| v[0].abs() >= big / 2.0 || v[1].abs() >= big / 2.0) {
        return Err(Error::Unavailable("table directions do not span the plane".into()));
    }
    // Merge coincident vertices and drop collinear ones.
    let scale = poly.iter().map(|v| v[0].abs().max(v[1].abs())).fold(0.0, f64::max);
    let eps = 1e-9 * scale;
    let mut merged: Vec<[f64; 2]> = Vec::new();
    for v in poly {
        if merged.last().is_none_or(|l| (l[0] - v[0]).abs() > eps || (l[1] - v[1]).abs() > eps) {
            merged.push(v);
        }
    }
    while merged.len() > 1 {
        let (f, l) = (merged[0], merged[merged.len() - 1]);
        if (f[0] - l[0]).abs() <= eps && (f[1] - l[1]).abs() <= eps {
            merged.pop();
        } else {
            break;
        }
    }
    let mut changed = true;
    while changed && merged.len() > 3 {
        changed = false;
        let n = merged.len();
        for i in 0..n {
            let (a, b, c) = (merged[(i + n - 1) % n], merged[i], merged[(i + 1) % n]);
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if cross.abs() <= eps * scale {
                merged.remove(i);
                changed = true;
                break;
            }
        }
    }
    Ok(Polytope { d: 2, vertices: merged.into_iter().map(|v| v.to_vec()).collect() })
}

/// Sutherland-Hodgman clip of a convex polygon against `px·x + py·y ≤ h`.
fn clip(poly: &[[f64; 2]], px: f64, py: f64, h: f64) -> Vec<[f64; 2]> {
    let f = |v: &[f64; 2]| px * v[0] + py * v[1] - h;
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (fa, fb) = (f(&a), f(&b));
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let s = fa / (fa - fb);
            out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    out
}

fn polytope3(table: &NormTable) -> Result<Polytope> {
    let planes: Vec<([f64; 3], f64)> =
        table.directions.iter().zip(&table.values).map(|(p, &h)| ([p[0], p[1], p[2]], h)).collect();
    let n = planes.len();
    let scale = table.values.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-9 * scale.max(1.0);
    let mut verts: Vec<[f64; 3]> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let Some(v) = solve3(planes[i], planes[j], planes[k]) else { continue };
                if planes.iter().all(|(p, h)| p[0] * v[0] + p[1] * v[1] + p[2] * v[2] <= h + tol)
                    && !verts.iter().any(|w| (0..3).all(|c| (w[c] - v[c]).abs() <= tol))
                {
                    verts.push(v);
                }
            }
        }
    }
    if verts.len() < 4 {
        return Err(Error::Unavailable("table directions do not span R^3".into()));
    }
    Ok(Polytope { d: 3, vertices: verts.into_iter().map(|v| v.to_vec()).collect() })
}

fn solve3(a: ([f64; 3], f64), b: ([f64; 3], f64), c: ([f64; 3], f64)) -> Option<[f64; 3]> {
    let (r0, r1, r2) = (a.0, b.0, c.0);
    let det = r0[0] * (r1[1] * r2[2] - r1[2] * r2[1]) - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0])
        + r0[2] * (r1[0] * r2[1] - r1[1] * r2[0]);
    if det.abs() < 1e-12 {
        return None;
    }
    let rhs = [a.1, b.1, c.1];
    let mut out = [0.0; 3];
    for col in 0..3 {
        let m = |r: [f64; 3], h: f64| {
            let mut r = r;
            r[col] = h;
            r
        };
        let (m0, m1, m2) = (m(r0, rhs[0]), m(r1, rhs[1]), m(r2, rhs[2]));
        let d = m0[0] * (m1[1] * m2[2] - m1[2] * m2[1]) - m0[1] * (m1[0] * m2[2] - m1[2] * m2[0])
            + m0[2] * (m1[0] * m2[1] - m1[1] * m2[0]);
        out[col] = d / det;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn homogeneous(c: f64) -> impl Fn(&[f64]) -> Result<f64> + Sync {
        move |p: &[f64]| Ok(linf_norm_f(p) / c)
    }

    #[test]
    fn homogeneous_axioms_are_exact() {
        let h = homogeneous(2.0);
        let table = NormTable::from_evaluator(direction_mesh(2, PI / 32.0).unwrap(), &h, 0.0, "analytic").unwrap();
        let r = check_norm_axioms(&table, &h, &[2.0, 0.5], 100, 2.0, 1e-12, 1).unwrap();
        assert!(r.ok, "{r:?}");
        assert_eq!(r.homogeneity_worst, 0.0);
        assert!(table.lower_bound_holds(2.0));
    }

    #[test]
    fn dual_norm_on_axes() {
        let c = 2.5;
        let dirs = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
        let t = NormTable::new(dirs, vec![1.0 / c; 4], vec![0.0; 4], "analytic", 0.0).unwrap();
        assert_eq!(dual_norm(&t, &[1.0, 0.0], c).unwrap().value, c);
        assert_eq!(dual_norm(&t, &[0.0, 0.0], c).unwrap().value, 0.0);
        let t1 = NormTable::new(vec![vec![1.0]], vec![2.0 / 3.0], vec![0.0], "analytic", 0.0).unwrap();
        assert!((dual_norm(&t1, &[1.0], 1.0).unwrap().value - 1.5).abs() < 1e-15);
    }

    #[test]
    fn dual_norm_slack_covers_the_truth() {
        // m(x) = c|x|₁ for H̄ = |p|∞/c.
        let c = 1.5;
        let h = homogeneous(c);
        let table = NormTable::from_evaluator(direction_mesh(2, PI / 7.0).unwrap(), &h, 0.0, "analytic").unwrap();
        for x in [[1.0, 0.3], [-0.2, 0.9], [0.7, -0.7]] {
            let v = dual_norm(&table, &x, c).unwrap();
            let truth = c * (x[0].abs() + x[1].abs());
            assert!(v.value <= truth + 1e-12 && truth <= v.value + v.slack);
        }
    }

    #[test]
    fn unit_l1_ball() {
        let h = homogeneous(1.0);
        let table = NormTable::from_evaluator(direction_mesh(2, PI / 256.0).unwrap(), &h, 0.0, "analytic").unwrap();
        let shape = limit_shape(&table).unwrap();
        assert_eq!(shape.vertices.len(), 4);
        assert!(shape.is_convex());
        for v in &shape.vertices {
            assert!((v[0].abs() + v[1].abs() - 1.0).abs() < 1e-9);
            assert!(v[0].abs() < 1e-9 || v[1].abs() < 1e-9);
        }
        let doubled = limit_shape(&table.scaled(2.0)).unwrap();
        assert_eq!(doubled.vertices.len(), 4);
        for b in &doubled.vertices {
            assert!(shape.vertices.iter().any(|a| (2.0 * a[0] - b[0]).abs() < 1e-9 && (2.0 * a[1] - b[1]).abs() < 1e-9));
        }
    }

    #[test]
    fn octahedron_in_three_dimensions() {
        let h = homogeneous(1.0);
        let table = NormTable::from_evaluator(direction_mesh(3, 0.6).unwrap(), &h, 0.0, "analytic").unwrap();
        let shape = limit_shape(&table).unwrap();
        // The dual ball of a coarse mesh contains the unit l1 ball.
        for v in &shape.vertices {
            assert!(v.iter().map(|c| c.abs()).sum::<f64>() >= 1.0 - 1e-9);
        }
        assert!(shape.vertices.iter().any(|v| (v[0] - 1.0).abs() < 1e-9 && v[1].abs() < 1e-9 && v[2].abs() < 1e-9));
        let four = NormTable::new(vec![vec![1.0; 4]], vec![1.0], vec![0.0], "x", 0.0).unwrap();
        assert!(matches!(limit_shape(&four), Err(Error::Unavailable(_))));
    }

    #[test]
    fn empty_table_is_rejected() {
        assert!(NormTable::new(vec![], vec![], vec![], "x", 0.0).is_err());
    }
}
