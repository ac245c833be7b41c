//! Discrete cell problems: the finite-horizon value `μ(x,t)`, the discounted
//! stationary value `ν_ε`, the discrete Hamiltonian, and the two routes from
//! them to `H̄(p)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::environment::{EnvironmentKind, EnvironmentWindow, Topology};
use crate::error::{config_err, Error, Result};
use crate::fpp::dijkstra;
use crate::lattice::{linf_norm_f, BoxShape, Coord, Direction, DirectionSet, MAX_DIM};

/// A real function on Z^d: a linear part plus a table on a box.
///
/// With `periodic`, the table repeats with the box extents, so the function
/// has a stationary gradient on the torus. Otherwise it is only defined on the box.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    shape: BoxShape,
    periodic: bool,
    slope: Vec<f64>,
    values: Vec<f64>,
    lipschitz: f64,
}

impl LatticeFunction {
    pub fn new(shape: BoxShape, periodic: bool, slope: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() || slope.len() != shape.dim() {
            return config_err("lattice function table does not match its box");
        }
        if values.iter().chain(&slope).any(|v| !v.is_finite()) {
            return config_err("lattice function values must be finite");
        }
        let mut f = LatticeFunction { shape, periodic, slope, values, lipschitz: 0.0 };
        f.lipschitz = f.compute_lipschitz();
        Ok(f)
    }

    pub fn from_fn(shape: BoxShape, periodic: bool, f: impl Fn(&[i64]) -> f64) -> Result<Self> {
        let values = shape.iter().map(|x| f(&x)).collect();
        let d = shape.dim();
        LatticeFunction::new(shape, periodic, vec![0.0; d], values)
    }

    /// The constant `c` on all of Z^d.
    pub fn constant(d: usize, c: f64) -> Self {
        let shape = BoxShape::from_extents(vec![1; d]).expect("unit box");
        LatticeFunction::new(shape, true, vec![0.0; d], vec![c]).expect("finite")
    }

    /// `x ↦ slope · x` on all of Z^d.
    pub fn linear(slope: Vec<f64>) -> Result<Self> {
        let shape = BoxShape::from_extents(vec![1; slope.len()])?;
        LatticeFunction::new(shape, true, slope, vec![0.0])
    }

    pub fn shape(&self) -> &BoxShape {
        &self.shape
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// `φ(y)`.
    pub fn value(&self, y: &[i64]) -> Result<f64> {
        let lin: f64 = self.slope.iter().zip(y).map(|(s, &c)| s * c as f64).sum();
        let idx = if self.periodic {
            let mut c: Coord = [0; MAX_DIM];
            let lo = self.shape.lo();
            for i in 0..y.len() {
                c[i] = lo[i] + (y[i] - lo[i]).rem_euclid(self.shape.extents()[i]);
            }
            self.shape.index_of(&c[..y.len()])
        } else {
            self.shape.index_of(y)
        };
        match idx {
            Some(i) => Ok(lin + self.values[i]),
            None => Err(Error::OutOfWindow { point: y.to_vec(), direction: "none".into() }),
        }
    }

    /// `𝒟φ(x, α) = φ(x + α) − φ(x)`.
    pub fn derivative(&self, x: &[i64], dir: Direction) -> Result<f64> {
        let mut y = x.to_vec();
        y[dir.axis] += dir.sign();
        Ok(self.value(&y)? - self.value(x)?)
    }

    /// Discrete Lipschitz constant in the l¹ metric: the largest `|𝒟φ|` over edges.
    pub fn lipschitz_norm(&self) -> f64 {
        self.lipschitz
    }

    fn compute_lipschitz(&self) -> f64 {
        let d = self.shape.dim();
        let mut best: f64 = 0.0;
        for x in self.shape.iter() {
            for dir in DirectionSet::new(d).positive() {
                let mut y = x.clone();
                y[dir.axis] += 1;
                if !self.periodic && !self.shape.contains(&y) {
                    continue;
                }
                let v = (self.value(&y).unwrap() - self.value(&x).unwrap()).abs();
                best = best.max(v);
            }
        }
        best
    }
}

/// `ℋ(φ, p, x) = sup_α (−𝒟φ(x, α) − p·α) / τ(x, α)`.
pub fn discrete_hamiltonian(phi: &LatticeFunction, p: &[f64], x: &[i64], env: &EnvironmentWindow) -> Result<f64> {
    if p.len() != env.dim() || x.len() != env.dim() {
        return config_err("momentum or point has the wrong dimension");
    }
    let mut best = f64::NEG_INFINITY;
    for dir in DirectionSet::new(env.dim()).all() {
        let w = env.weight(x, dir)?;
        let v = (-phi.derivative(x, dir)? - dir.dot(p)) / w;
        best = best.max(v);
    }
    Ok(best)
}

/// Converged discounted stationary field `ν_ε` on a torus.
#[derive(Debug, Clone, Serialize)]
pub struct CellField {
    pub p: Vec<f64>,
    pub epsilon: f64,
    #[serde(skip)]
    shape: BoxShape,
    pub values: Vec<f64>,
    /// `‖ν − Φν‖_∞` at the returned field.
    pub residual: f64,
    pub sweeps: usize,
    /// Largest observed ratio of successive sweep changes.
    pub contraction_ratio: f64,
}

impl CellField {
    pub fn shape(&self) -> &BoxShape {
        &self.shape
    }

    pub fn value_at(&self, x: &[i64]) -> f64 {
        let mut c: Coord = [0; MAX_DIM];
        let lo = self.shape.lo();
        for i in 0..x.len() {
            c[i] = lo[i] + (x[i] - lo[i]).rem_euclid(self.shape.extents()[i]);
        }
        self.values[self.shape.index_of(&c[..x.len()]).unwrap()]
    }

    pub fn as_lattice_function(&self) -> LatticeFunction {
        LatticeFunction::new(self.shape.clone(), true, vec![0.0; self.shape.dim()], self.values.clone())
            .expect("finite field")
    }

    pub fn lipschitz_norm(&self) -> f64 {
        self.as_lattice_function().lipschitz_norm()
    }

    /// Bounds `−|p|∞/(1−e^{−εa}) ≤ ν ≤ −|p|∞/(1−e^{−εb})` forced by the DPP.
    pub fn value_bounds(&self, a: f64, b: f64) -> (f64, f64) {
        let pn = linf_norm_f(&self.p);
        (-pn / (1.0 - (-self.epsilon * a).exp()), -pn / (1.0 - (-self.epsilon * b).exp()))
    }
}

struct Stencil {
    nb: Vec<usize>,
    disc: Vec<f64>,
    cost: Vec<f64>,
    k: usize,
}

fn stencil(env: &EnvironmentWindow, p: &[f64], eps: f64) -> Stencil {
    let shape = env.shape();
    let d = env.dim();
    let k = 2 * d;
    let n = shape.len();
    let mut st = Stencil { nb: vec![0; n * k], disc: vec![0.0; n * k], cost: vec![0.0; n * k], k };
    let mut x: Coord = [0; MAX_DIM];
    for idx in 0..n {
        shape.coord_into(idx, &mut x);
        for (j, dir) in DirectionSet::new(d).all().enumerate() {
            let mut y = x;
            y[dir.axis] += dir.sign();
            let lo = shape.lo()[dir.axis];
            y[dir.axis] = lo + (y[dir.axis] - lo).rem_euclid(shape.extents()[dir.axis]);
            st.nb[idx * k + j] = shape.index_of(&y[..d]).unwrap();
            st.disc[idx * k + j] = (-eps * env.weight_unchecked(&x[..d], dir)).exp();
            st.cost[idx * k + j] = dir.dot(p);
        }
    }
    st
}

impl Stencil {
    #[inline]
    fn apply(&self, v: &[f64], idx: usize) -> f64 {
        let base = idx * self.k;
        let mut best = f64::INFINITY;
        for j in base..base + self.k {
            best = best.min(self.cost[j] + self.disc[j] * v[self.nb[j]]);
        }
        best
    }

    fn residual(&self, v: &[f64]) -> f64 {
        (0..v.len()).map(|i| (v[i] - self.apply(v, i)).abs()).fold(0.0, f64::max)
    }
}

/// Solves `ν(x) = min_α (p·α + e^{−ετ(x,α)} ν(x+α))` on a torus by
/// lexicographic Gauss-Seidel sweeps until `‖ν − Φν‖_∞ ≤ tol`.
pub fn solve_stationary(env: &EnvironmentWindow, p: &[f64], epsilon: f64, tol: f64) -> Result<CellField> {
    if env.topology() != Topology::Torus {
        return Err(Error::Topology("the stationary problem needs a torus window".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) || !(tol > 0.0) {
        return config_err(format!("need epsilon > 0 and tol > 0, got {epsilon}, {tol}"));
    }
    if p.len() != env.dim() || p.iter().any(|c| !c.is_finite()) {
        return config_err("momentum has the wrong dimension or is not finite");
    }
    let st = stencil(env, p, epsilon);
    let n = env.shape().len();
    let a = env.bounds().a;
    let q = (-epsilon * a).exp();
    let scale = linf_norm_f(p) / (1.0 - q);
    let mut v = vec![0.0; n];
    let max_sweeps = (((tol / (scale + 1.0)).ln() / q.ln()).ceil().max(0.0) as usize) * 2 + 1000;
    let mut prev_delta = f64::INFINITY;
    let mut ratio: f64 = 0.0;
    let slack = 8.0 * f64::EPSILON * (scale + 1.0);
    for sweep in 1..=max_sweeps {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let nv = st.apply(&v, i);
            delta = delta.max((nv - v[i]).abs());
            v[i] = nv;
        }
        if prev_delta.is_finite() && prev_delta > slack {
            if delta > q * prev_delta + slack {
                return Err(Error::NotConverged(format!(
                    "sweep {sweep}: change {delta:e} exceeds {q} x previous {prev_delta:e}"
                )));
            }
            ratio = ratio.max(delta / prev_delta);
        }
        prev_delta = delta;
        if delta <= tol {
            let r = st.residual(&v);
            if r <= tol {
                return Ok(CellField {
                    p: p.to_vec(),
                    epsilon,
                    shape: env.shape().clone(),
                    values: v,
                    residual: r,
                    sweeps: sweep,
                    contraction_ratio: ratio,
                });
            }
        }
    }
    Err(Error::NotConverged(format!("no convergence to {tol:e} within {max_sweeps} sweeps")))
}

/// `max_x |ε ν_ε(x) + ℋ(ν_ε, p, x)|` over the torus.
pub fn check_hjb_residual(field: &CellField, env: &EnvironmentWindow) -> Result<f64> {
    if field.shape() != env.shape() {
        return config_err("field and window boxes differ");
    }
    let phi = field.as_lattice_function();
    let mut worst: f64 = 0.0;
    for x in env.shape().iter() {
        let h = discrete_hamiltonian(&phi, &field.p, &x, env)?;
        worst = worst.max((field.epsilon * field.value_at(&x) + h).abs());
    }
    Ok(worst)
}

/// Tauberian estimates `−ε ν_ε(0)` along a ladder of discount rates.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryEstimate {
    pub p: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub sweeps: Vec<usize>,
    /// Linear-in-ε extrapolation to ε = 0 from the two smallest rates.
    pub extrapolated: f64,
    /// Deviation of every ladder value from the fitted line.
    pub fit_residuals: Vec<f64>,
}

pub fn estimate_hbar_stationary(
    env: &EnvironmentWindow,
    p: &[f64],
    epsilon_ladder: &[f64],
    tol: f64,
) -> Result<StationaryEstimate> {
    if epsilon_ladder.is_empty() || epsilon_ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return config_err("epsilon ladder must be nonempty and strictly decreasing");
    }
    let origin = vec![0i64; env.dim()];
    let fields: Vec<CellField> =
        epsilon_ladder.par_iter().map(|&e| solve_stationary(env, p, e, tol)).collect::<Result<_>>()?;
    let values: Vec<f64> = fields.iter().map(|f| -f.epsilon * f.value_at(&origin)).collect();
    let k = values.len();
    let (extrapolated, slope) = if k == 1 {
        (values[0], 0.0)
    } else {
        let (e1, e2) = (epsilon_ladder[k - 2], epsilon_ladder[k - 1]);
        let (v1, v2) = (values[k - 2], values[k - 1]);
        let slope = (v1 - v2) / (e1 - e2);
        (v2 - slope * e2, slope)
    };
    let fit_residuals = epsilon_ladder.iter().zip(&values).map(|(e, v)| v - (extrapolated + slope * e)).collect();
    Ok(StationaryEstimate {
        p: p.to_vec(),
        epsilons: epsilon_ladder.to_vec(),
        residuals: fields.iter().map(|f| f.residual).collect(),
        sweeps: fields.iter().map(|f| f.sweeps).collect(),
        values,
        extrapolated,
        fit_residuals,
    })
}

/// `μ(x, t)` together with the endpoint attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonValue {
    pub x: Vec<i64>,
    pub t: f64,
    pub value: f64,
    pub argmin: Vec<i64>,
}

/// `μ(x,t) = min_{y ∈ R(x,t)} p·(y−x) + μ₀(y)`.
///
/// The running cost `p·α` telescopes along any path, so one bounded
/// shortest-path expansion suffices. A torus window is unrolled onto its
/// universal cover around `x`. On an open box the search fails with
/// [`Error::DomainTooSmall`] if the reachable set could leave the box,
/// unless the medium is an explicit table (defined only on its box).
pub fn solve_finite_horizon(
    env: &EnvironmentWindow,
    p: &[f64],
    x: &[i64],
    t: f64,
    mu0: &LatticeFunction,
) -> Result<HorizonValue> {
    let d = env.dim();
    if p.len() != d || x.len() != d {
        return config_err("momentum or point has the wrong dimension");
    }
    if !(t >= 0.0 && t.is_finite()) {
        return config_err(format!("time budget must be finite and >= 0, got {t}"));
    }
    let a = env.bounds().a;
    let (shape, times) = match env.topology() {
        Topology::Torus => {
            let r = (t / a).floor() as i64 + 1;
            let shape = BoxShape::centered(x, r)?;
            let src = shape.index_of(x).unwrap();
            let times = dijkstra(&shape, false, |y, dir| env.weight_unchecked(y, dir), src, t, &[]);
            (shape, times)
        }
        Topology::OpenBox => {
            let shape = env.shape().clone();
            let src = shape
                .index_of(x)
                .ok_or_else(|| Error::OutOfWindow { point: x.to_vec(), direction: "none".into() })?;
            let times = dijkstra(&shape, false, |y, dir| env.weight_unchecked(y, dir), src, t, &[]);
            if !matches!(env.spec().kind, EnvironmentKind::Explicit(_)) {
                for (i, &s) in times.iter().enumerate() {
                    if s + a <= t && shape.on_boundary(&shape.coord_of(i)) {
                        return Err(Error::DomainTooSmall(format!(
                            "reachable set from {x:?} within t = {t} reaches the window boundary"
                        )));
                    }
                }
            }
            (shape, times)
        }
    };
    let mut best = f64::INFINITY;
    let mut argmin = x.to_vec();
    let mut y: Coord = [0; MAX_DIM];
    for (i, &s) in times.iter().enumerate() {
        if s <= t {
            shape.coord_into(i, &mut y);
            let drift: f64 = (0..d).map(|k| p[k] * (y[k] - x[k]) as f64).sum();
            let v = drift + mu0.value(&y[..d])?;
            if v < best {
                best = v;
                argmin = y[..d].to_vec();
            }
        }
    }
    Ok(HorizonValue { x: x.to_vec(), t, value: best, argmin })
}

/// Horizon-route estimates `−μ(0,t)/t` with `μ₀ ≡ 0`.
#[derive(Debug, Clone, Serialize)]
pub struct HorizonEstimate {
    pub p: Vec<f64>,
    pub ts: Vec<f64>,
    pub values: Vec<f64>,
    /// Extrapolation in `1/t` from the two largest horizons.
    pub trend: f64,
}

pub fn estimate_hbar_horizon(env: &EnvironmentWindow, p: &[f64], t_ladder: &[f64]) -> Result<HorizonEstimate> {
    if t_ladder.is_empty() || t_ladder.iter().any(|&t| !(t > 0.0)) || t_ladder.windows(2).any(|w| !(w[1] > w[0])) {
        return config_err("t ladder must be nonempty, positive and strictly increasing");
    }
    let origin = vec![0i64; env.dim()];
    let zero = LatticeFunction::constant(env.dim(), 0.0);
    let values: Vec<f64> = t_ladder
        .par_iter()
        .map(|&t| solve_finite_horizon(env, p, &origin, t, &zero).map(|h| -h.value / t))
        .collect::<Result<_>>()?;
    let k = values.len();
    let trend = if k == 1 {
        values[0]
    } else {
        let (t1, t2) = (t_ladder[k - 2], t_ladder[k - 1]);
        (t2 * values[k - 1] - t1 * values[k - 2]) / (t2 - t1)
    };
    Ok(HorizonEstimate { p: p.to_vec(), ts: t_ladder.to_vec(), values, trend })
}

/// One evaluated `(x, t)` sample of the comparison check.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonSample {
    pub x: Vec<i64>,
    pub t: f64,
    pub mu: f64,
    /// `φ(x) − t·sup ℋ`.
    pub lower: f64,
    /// `φ(x) − t·inf ℋ`.
    pub upper: f64,
    /// `φ(x) − inf ℋ·(t − b)⁺` if `inf ℋ ≥ 0`, else `upper`.
    pub upper_discrete: f64,
}

/// Outcome of [`check_comparison_principle`]. Violations are sample indices.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub sup_h: f64,
    pub inf_h: f64,
    pub samples: Vec<ComparisonSample>,
    pub lower_violations: Vec<usize>,
    pub upper_violations: Vec<usize>,
    pub upper_discrete_violations: Vec<usize>,
}

impl ComparisonReport {
    pub fn ok(&self) -> bool {
        self.lower_violations.is_empty() && self.upper_violations.is_empty()
    }
}

/// Compares `μ(x,t)` (terminal cost `φ`) with `φ(x) − t·sup ℋ(φ)` from below
/// and `φ(x) − t·inf ℋ(φ)` from above.
///
/// The upper inequality is exact only as `t → ∞`: a path cannot spend a
/// fraction of an edge, so the report also carries the discrete form
/// `φ(x) − inf ℋ·(t − b)⁺`, which always holds when `inf ℋ ≥ 0`.
pub fn check_comparison_principle(
    phi: &LatticeFunction,
    p: &[f64],
    env: &EnvironmentWindow,
    samples: &[(Vec<i64>, f64)],
) -> Result<ComparisonReport> {
    let d = env.dim();
    let mut sup_h = f64::NEG_INFINITY;
    let mut inf_h = f64::INFINITY;
    for x in env.shape().iter() {
        let inner = env.topology() == Topology::Torus
            || DirectionSet::new(d).all().all(|dir| {
                let mut y = x.clone();
                y[dir.axis] += dir.sign();
                env.shape().contains(&y)
            });
        if inner {
            let h = discrete_hamiltonian(phi, p, &x, env)?;
            sup_h = sup_h.max(h);
            inf_h = inf_h.min(h);
        }
    }
    let b = env.bounds().b;
    let evaluated: Vec<ComparisonSample> = samples
        .par_iter()
        .map(|(x, t)| {
            let mu = solve_finite_horizon(env, p, x, *t, phi)?.value;
            let f = phi.value(x)?;
            let upper = f - t * inf_h;
            let upper_discrete = if inf_h >= 0.0 { f - inf_h * (t - b).max(0.0) } else { upper };
            Ok(ComparisonSample { x: x.clone(), t: *t, mu, lower: f - t * sup_h, upper, upper_discrete })
        })
        .collect::<Result<_>>()?;
    let slack = |s: &ComparisonSample| 1e-9 * (1.0 + s.mu.abs() + s.lower.abs() + s.upper.abs());
    let pick = |pred: &dyn Fn(&ComparisonSample) -> bool| -> Vec<usize> {
        evaluated.iter().enumerate().filter(|(_, s)| pred(s)).map(|(i, _)| i).collect()
    };
    let lower_violations = pick(&|s| s.mu < s.lower - slack(s));
    let upper_violations = pick(&|s| s.mu > s.upper + slack(s));
    let upper_discrete_violations = pick(&|s| s.mu > s.upper_discrete + slack(s));
    Ok(ComparisonReport { sup_h, inf_h, samples: evaluated, lower_violations, upper_violations, upper_discrete_violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{sample_window, EnvironmentSpec, WeightDistribution};

    fn torus(spec: &EnvironmentSpec, ext: Vec<i64>) -> EnvironmentWindow {
        sample_window(spec, BoxShape::from_extents(ext).unwrap(), Topology::Torus).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let env = torus(&EnvironmentSpec::constant(2, 2.0).unwrap(), vec![3, 3]);
        let zero = LatticeFunction::constant(2, 0.0);
        assert_eq!(discrete_hamiltonian(&zero, &[1.0, 0.0], &[1, 1], &env).unwrap(), 0.5);
        assert_eq!(discrete_hamiltonian(&zero, &[0.0, 0.0], &[1, 1], &env).unwrap(), 0.0);
        let lin = LatticeFunction::linear(vec![-0.3, 0.7]).unwrap();
        assert_eq!(discrete_hamiltonian(&lin, &[0.3, -0.7], &[1, 1], &env).unwrap(), 0.0);
    }

    #[test]
    fn constant_stationary_field() {
        let env = torus(&EnvironmentSpec::constant(2, 1.0).unwrap(), vec![4, 4]);
        let f = solve_stationary(&env, &[1.0, 0.0], 0.1, 1e-10).unwrap();
        let exact = -1.0 / (1.0 - (-0.1f64).exp());
        assert!((exact + 10.50833).abs() < 5e-6);
        for &v in &f.values {
            assert!((v - exact).abs() < 1e-8);
        }
        assert!(f.residual <= 1e-10);
        assert!(f.contraction_ratio <= (-0.1f64).exp() + 1e-9);
    }

    #[test]
    fn zero_momentum_gives_zero_field() {
        let spec = EnvironmentSpec::new(EnvironmentKind::IidUndirected, 2, WeightDistribution::Uniform { lo: 1.0, hi: 2.0 }, 1)
            .unwrap();
        let env = torus(&spec, vec![5, 5]);
        let f = solve_stationary(&env, &[0.0, 0.0], 0.2, 1e-10).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
        assert_eq!(check_hjb_residual(&f, &env).unwrap(), 0.0);
    }

    #[test]
    fn stationary_rejects_open_box() {
        let spec = EnvironmentSpec::constant(1, 1.0).unwrap();
        let env = sample_window(&spec, BoxShape::from_extents(vec![4]).unwrap(), Topology::OpenBox).unwrap();
        assert!(matches!(solve_stationary(&env, &[1.0], 0.1, 1e-10), Err(Error::Topology(_))));
    }

    #[test]
    fn constant_ladder_extrapolates_to_one() {
        let env = torus(&EnvironmentSpec::constant(1, 1.0).unwrap(), vec![3]);
        let est = estimate_hbar_stationary(&env, &[1.0], &[0.2, 0.1, 0.05, 0.025], 1e-11).unwrap();
        assert!((est.values[1] - 1.050833).abs() < 1e-6);
        assert!((est.extrapolated - 1.0).abs() < 5e-3);
    }

    #[test]
    fn horizon_examples() {
        let env = torus(&EnvironmentSpec::constant(2, 1.0).unwrap(), vec![4, 4]);
        let zero = LatticeFunction::constant(2, 0.0);
        let h = solve_finite_horizon(&env, &[1.0, 0.0], &[0, 0], 5.0, &zero).unwrap();
        assert_eq!(h.value, -5.0);
        assert_eq!(h.argmin, vec![-5, 0]);
        let mu0 = LatticeFunction::from_fn(BoxShape::from_extents(vec![4, 4]).unwrap(), true, |y| y[0] as f64).unwrap();
        let h0 = solve_finite_horizon(&env, &[1.0, 0.0], &[2, 1], 0.0, &mu0).unwrap();
        assert_eq!(h0.value, 2.0);
        let est = estimate_hbar_horizon(&env, &[1.0, 0.0], &[2.5, 10.0]).unwrap();
        assert_eq!(est.values, vec![0.8, 1.0]);
    }

    #[test]
    fn horizon_detects_clipping() {
        let env = sample_window(&EnvironmentSpec::constant(2, 1.0).unwrap(), BoxShape::centered(&[0, 0], 3).unwrap(), Topology::OpenBox)
            .unwrap();
        let zero = LatticeFunction::constant(2, 0.0);
        assert!(solve_finite_horizon(&env, &[1.0, 0.0], &[0, 0], 3.0, &zero).is_ok());
        assert!(matches!(solve_finite_horizon(&env, &[1.0, 0.0], &[0, 0], 4.0, &zero), Err(Error::DomainTooSmall(_))));
    }

    #[test]
    fn linear_corrector_is_sandwiched() {
        let spec = EnvironmentSpec::new(EnvironmentKind::IidUndirected, 2, WeightDistribution::Uniform { lo: 1.0, hi: 2.0 }, 3)
            .unwrap();
        let env = torus(&spec, vec![6, 6]);
        let p = [0.5, -0.25];
        let phi = LatticeFunction::linear(vec![-0.5, 0.25]).unwrap();
        let samples: Vec<_> = (0..5).map(|k| (vec![k, 5 - k], 1.5 * k as f64)).collect();
        let r = check_comparison_principle(&phi, &p, &env, &samples).unwrap();
        assert_eq!((r.sup_h, r.inf_h), (0.0, 0.0));
        assert!(r.ok());
        for s in &r.samples {
            assert_eq!(s.mu, phi.value(&s.x).unwrap());
        }
    }

    #[test]
    fn literal_upper_bound_fails_for_short_horizons() {
        // ℋ(0) ≡ 1 here, but no edge fits in a budget of 0.5.
        let env = torus(&EnvironmentSpec::constant(2, 1.0).unwrap(), vec![3, 3]);
        let zero = LatticeFunction::constant(2, 0.0);
        let r = check_comparison_principle(&zero, &[1.0, 0.0], &env, &[(vec![0, 0], 0.5)]).unwrap();
        assert_eq!(r.inf_h, 1.0);
        assert_eq!(r.samples[0].mu, 0.0);
        assert_eq!(r.upper_violations, vec![0]);
        assert!(r.upper_discrete_violations.is_empty());
        assert!(r.lower_violations.is_empty());
    }
}
