//! Comparing time constants of two iid media through the quantile coupling.

use serde::Serialize;

use crate::environment::{EnvironmentKind, EnvironmentSpec, PiecewiseCdf, WeightDistribution};
use crate::error::{config_err, Error, Result};
use crate::fpp::estimate_time_constant;
use crate::lattice::l1_norm_f;
use crate::stats::{summarize, Summary};

/// Number of uniform mesh points used by the sup-gap check.
pub const U_MESH: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum Law {
    Uniform { lo: f64, hi: f64 },
    /// Sorted, distinct values with positive probabilities.
    Atoms { values: Vec<f64>, probs: Vec<f64> },
    Piecewise { cdf: PiecewiseCdf },
}

/// A one-dimensional edge-weight law on `[a, b] ⊂ (0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalSpec {
    law: Law,
}

impl MarginalSpec {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return config_err(format!("uniform[{lo}, {hi}] needs 0 < lo < hi"));
        }
        Ok(MarginalSpec { law: Law::Uniform { lo, hi } })
    }

    pub fn atoms(values: &[f64], probs: &[f64]) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return config_err("atom values and probabilities must be nonempty and of equal length");
        }
        if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) || probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return config_err("atoms need positive values and probabilities in [0, 1]");
        }
        if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return config_err("atom probabilities must sum to 1");
        }
        let mut pairs: Vec<(f64, f64)> = values.iter().cloned().zip(probs.iter().cloned()).filter(|p| p.1 > 0.0).collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut vs: Vec<f64> = Vec::new();
        let mut ps: Vec<f64> = Vec::new();
        for (v, p) in pairs {
            if vs.last() == Some(&v) {
                *ps.last_mut().unwrap() += p;
            } else {
                vs.push(v);
                ps.push(p);
            }
        }
        Ok(MarginalSpec { law: Law::Atoms { values: vs, probs: ps } })
    }

    pub fn piecewise(cdf: PiecewiseCdf) -> Result<Self> {
        if cdf.knots()[0].0 <= 0.0 {
            return config_err("tabulated support must be positive");
        }
        Ok(MarginalSpec { law: Law::Piecewise { cdf } })
    }

    /// Scalar marginal of an edge-weight distribution. Vector atoms are rejected.
    pub fn from_distribution(dist: &WeightDistribution) -> Result<Self> {
        match dist {
            WeightDistribution::Uniform { lo, hi } => Self::uniform(*lo, *hi),
            WeightDistribution::InverseCdf(cdf) => Self::piecewise(cdf.clone()),
            WeightDistribution::Atoms { values, probs } => {
                if values.iter().any(|v| v.len() != 1) {
                    return config_err("only scalar atoms define a one-dimensional marginal");
                }
                Self::atoms(&values.iter().map(|v| v[0]).collect::<Vec<_>>(), probs)
            }
        }
    }

    pub fn to_distribution(&self) -> WeightDistribution {
        match &self.law {
            Law::Uniform { lo, hi } => WeightDistribution::Uniform { lo: *lo, hi: *hi },
            Law::Atoms { values, probs } => {
                WeightDistribution::Atoms { values: values.iter().map(|&v| vec![v]).collect(), probs: probs.clone() }
            }
            Law::Piecewise { cdf } => WeightDistribution::InverseCdf(cdf.clone()),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match &self.law {
            Law::Uniform { lo, hi } => (*lo, *hi),
            Law::Atoms { values, .. } => (values[0], values[values.len() - 1]),
            Law::Piecewise { cdf } => {
                let k = cdf.knots();
                (k[0].0, k[k.len() - 1].0)
            }
        }
    }

    /// Minimum density on the support; zero for atoms.
    pub fn rho_star(&self) -> f64 {
        match &self.law {
            Law::Uniform { lo, hi } => 1.0 / (hi - lo),
            Law::Atoms { .. } => 0.0,
            Law::Piecewise { cdf } => cdf.density_floor(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.law {
            Law::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Law::Atoms { values, probs } => values.iter().zip(probs).filter(|(v, _)| **v <= x).map(|(_, p)| p).sum(),
            Law::Piecewise { cdf } => cdf.cdf(x),
        }
    }

    /// `F(x−)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match &self.law {
            Law::Atoms { values, probs } => values.iter().zip(probs).filter(|(v, _)| **v < x).map(|(_, p)| p).sum(),
            _ => self.cdf(x),
        }
    }

    /// Points where `F` has a kink or a jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.law {
            Law::Uniform { lo, hi } => vec![*lo, *hi],
            Law::Atoms { values, .. } => values.clone(),
            Law::Piecewise { cdf } => cdf.knots().iter().map(|k| k.0).collect(),
        }
    }

    /// Generalized inverse `inf {x : F(x) ≥ u}`; `u = 0` gives the left end.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return config_err(format!("probability {u} is outside [0, 1]"));
        }
        Ok(match &self.law {
            Law::Uniform { lo, hi } => {
                if u == 1.0 {
                    *hi
                } else {
                    lo + u * (hi - lo)
                }
            }
            Law::Atoms { values, probs } => {
                let mut acc = 0.0;
                let mut out = values[values.len() - 1];
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u <= acc {
                        out = *v;
                        break;
                    }
                }
                out
            }
            Law::Piecewise { cdf } => cdf.inverse(u),
        })
    }
}

/// `Y(u) = F^{-1}(u)`.
pub fn skorokhod_values(f: &MarginalSpec, u: f64) -> Result<f64> {
    f.inverse(u)
}

/// `sup_x |F₁(x) − F₂(x)|` over all breakpoints and their left limits, plus
/// `mesh` evenly spaced points across the joint support. Exact whenever both
/// CDFs are piecewise linear or atomic.
pub fn kolmogorov_distance(f1: &MarginalSpec, f2: &MarginalSpec, mesh: usize) -> f64 {
    let mut xs: Vec<f64> = f1.breakpoints();
    xs.extend(f2.breakpoints());
    let lo = f1.support().0.min(f2.support().0);
    let hi = f1.support().1.max(f2.support().1);
    if mesh > 1 {
        xs.extend((0..mesh).map(|k| lo + (hi - lo) * k as f64 / (mesh - 1) as f64));
    }
    xs.iter()
        .map(|&x| (f1.cdf(x) - f2.cdf(x)).abs().max((f1.cdf_left(x) - f2.cdf_left(x)).abs()))
        .fold(0.0, f64::max)
}

/// Sup-gap of the common-uniform coupling.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    pub d_kol: f64,
    pub rho_star: f64,
    /// Certified `sup_u |Y₁(u) − Y₂(u)| ≤ d_kol / rho_star`.
    pub bound: f64,
    /// Largest `|Y₁(u) − Y₂(u)|` seen on the u-mesh.
    pub mesh_sup_gap: f64,
    pub mesh_points: usize,
    pub mesh_ok: bool,
}

impl CouplingReport {
    /// The weaker `d ≤ d_Kol` reading, reported as its own route.
    pub fn ks_upper(&self) -> GapBound {
        GapBound { value: self.d_kol, route: GapRoute::KsUpper, inputs: format!("d_kol={:e}", self.d_kol) }
    }
}

/// Certified coupling distance `d_Kol/ρ*` with `ρ*` the smaller density floor,
/// checked on a u-mesh of `U_MESH` points plus every breakpoint image.
pub fn coupling_gap_bound(f1: &MarginalSpec, f2: &MarginalSpec) -> Result<CouplingReport> {
    let d_kol = kolmogorov_distance(f1, f2, 0);
    let rho_star = f1.rho_star().min(f2.rho_star());
    let bound = if d_kol == 0.0 {
        0.0
    } else if rho_star > 0.0 {
        d_kol / rho_star
    } else {
        return Err(Error::Unavailable("coupling bound needs a positive density floor".into()));
    };
    let mut us: Vec<f64> = (0..=U_MESH).map(|k| k as f64 / U_MESH as f64).collect();
    for f in [f1, f2] {
        for x in f1.breakpoints().into_iter().chain(f2.breakpoints()) {
            us.push(f.cdf(x));
            us.push(f.cdf_left(x));
        }
    }
    let mut mesh_sup_gap: f64 = 0.0;
    for &u in &us {
        mesh_sup_gap = mesh_sup_gap.max((f1.inverse(u)? - f2.inverse(u)?).abs());
    }
    // Rounding in F⁻¹ is a few ulps of the support's scale.
    let slack = 16.0 * f64::EPSILON * f1.support().1.max(f2.support().1);
    Ok(CouplingReport { d_kol, rho_star, bound, mesh_sup_gap, mesh_points: us.len(), mesh_ok: mesh_sup_gap <= bound + slack })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapRoute {
    Primal,
    Dual,
    KsUpper,
}

impl GapRoute {
    pub fn as_str(&self) -> &'static str {
        match self {
            GapRoute::Primal => "primal",
            GapRoute::Dual => "dual",
            GapRoute::KsUpper => "ks-upper",
        }
    }
}

/// Bound on `|m₁(x) − m₂(x)|` per unit `|x|₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapBound {
    pub value: f64,
    pub route: GapRoute,
    pub inputs: String,
}

fn check_bounds(b1: f64, a1: f64, b2: f64, a2: f64, d: f64) -> Result<()> {
    if !(a1 > 0.0 && b1 >= a1 && a2 > 0.0 && b2 >= a2 && b1.is_finite() && b2.is_finite()) {
        return config_err(format!("need 0 < a <= b, got a1={a1} b1={b1} a2={a2} b2={b2}"));
    }
    if !(d >= 0.0 && d.is_finite()) {
        return config_err(format!("coupling distance must be finite and nonnegative, got {d}"));
    }
    Ok(())
}

fn inputs(b1: f64, a1: f64, b2: f64, a2: f64, d: f64) -> String {
    format!("b1={b1:e};a1={a1:e};b2={b2:e};a2={a2:e};d={d:e}")
}

/// `max(b₁/a₁, b₂/a₂) · d`.
pub fn gap_bound_primal(b1: f64, a1: f64, b2: f64, a2: f64, coupling_dist: f64) -> Result<GapBound> {
    check_bounds(b1, a1, b2, a2, coupling_dist)?;
    Ok(GapBound {
        value: (b1 / a1).max(b2 / a2) * coupling_dist,
        route: GapRoute::Primal,
        inputs: inputs(b1, a1, b2, a2, coupling_dist),
    })
}

/// `max(b₁/a₁, b₂/a₂) · (b₁b₂/(a₁a₂)) · d`; never smaller than the primal bound.
pub fn gap_bound_dual(b1: f64, a1: f64, b2: f64, a2: f64, coupling_dist: f64) -> Result<GapBound> {
    check_bounds(b1, a1, b2, a2, coupling_dist)?;
    Ok(GapBound {
        value: (b1 / a1).max(b2 / a2) * (b1 * b2 / (a1 * a2)) * coupling_dist,
        route: GapRoute::Dual,
        inputs: inputs(b1, a1, b2, a2, coupling_dist),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalGapReport {
    pub x: Vec<f64>,
    pub n: u64,
    pub seeds: usize,
    pub m1: Summary,
    pub m2: Summary,
    /// Per-replica `T₂/n − T₁/n`, divided by `|x|₁`.
    pub gap: Summary,
    /// `|m̂₁ − m̂₂| / |x|₁`.
    pub measured: f64,
    pub coupling: CouplingReport,
    pub primal: GapBound,
    pub dual: GapBound,
    pub ok: bool,
}

/// Estimates both time constants on the same uniforms (equal seeds, equal
/// kinds) and checks the measured gap against the primal bound plus the
/// paired 95% half-width.
pub fn empirical_gap_check(
    spec1: &EnvironmentSpec,
    spec2: &EnvironmentSpec,
    x: &[f64],
    n: u64,
    seeds: usize,
) -> Result<EmpiricalGapReport> {
    let iid = |k: &EnvironmentKind| matches!(k, EnvironmentKind::IidEdges | EnvironmentKind::IidUndirected);
    if !iid(&spec1.kind) || spec1.kind != spec2.kind {
        return config_err("gap check needs two iid media of the same kind");
    }
    if spec1.d != spec2.d || spec1.seed != spec2.seed {
        return config_err("coupled media must share dimension and seed");
    }
    let f1 = MarginalSpec::from_distribution(&spec1.distribution)?;
    let f2 = MarginalSpec::from_distribution(&spec2.distribution)?;
    let coupling = coupling_gap_bound(&f1, &f2)?;
    let (b1, b2) = (spec1.bounds(), spec2.bounds());
    let primal = gap_bound_primal(b1.b, b1.a, b2.b, b2.a, coupling.bound)?;
    let dual = gap_bound_dual(b1.b, b1.a, b2.b, b2.a, coupling.bound)?;
    let norm = l1_norm_f(x);
    if norm == 0.0 {
        let zero = summarize(&vec![0.0; seeds.max(2)]);
        return Ok(EmpiricalGapReport {
            x: x.to_vec(),
            n,
            seeds,
            m1: zero,
            m2: zero,
            gap: zero,
            measured: 0.0,
            coupling,
            primal,
            dual,
            ok: true,
        });
    }
    let e1 = estimate_time_constant(spec1, x, &[n], seeds)?;
    let e2 = estimate_time_constant(spec2, x, &[n], seeds)?;
    let s1 = e1.scaled.last().unwrap();
    let s2 = e2.scaled.last().unwrap();
    let diffs: Vec<f64> = s1.iter().zip(s2).map(|(a, b)| (b - a) / norm).collect();
    let gap = summarize(&diffs);
    let measured = gap.mean.abs();
    let ok = measured <= primal.value + gap.half_width;
    Ok(EmpiricalGapReport { x: x.to_vec(), n, seeds, m1: e1.estimate, m2: e2.estimate, gap, measured, coupling, primal, dual, ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_examples() {
        let u1 = MarginalSpec::uniform(1.0, 2.0).unwrap();
        let u2 = MarginalSpec::uniform(1.1, 2.1).unwrap();
        assert_eq!(kolmogorov_distance(&u1, &u1, 100), 0.0);
        assert!((kolmogorov_distance(&u1, &u2, 0) - 0.1).abs() < 1e-12);
        let p1 = MarginalSpec::atoms(&[1.0], &[1.0]).unwrap();
        let p2 = MarginalSpec::atoms(&[2.0], &[1.0]).unwrap();
        assert_eq!(kolmogorov_distance(&p1, &p2, 0), 1.0);
    }

    #[test]
    fn kolmogorov_of_atoms_uses_left_limits() {
        // F₁ − F₂ peaks just below the atom at 1.5.
        let f1 = MarginalSpec::uniform(1.0, 2.0).unwrap();
        let f2 = MarginalSpec::atoms(&[1.5], &[1.0]).unwrap();
        assert_eq!(kolmogorov_distance(&f1, &f2, 0), 0.5);
    }

    #[test]
    fn skorokhod_examples() {
        let u = MarginalSpec::uniform(1.0, 2.0).unwrap();
        assert_eq!(skorokhod_values(&u, 0.5).unwrap(), 1.5);
        assert_eq!(skorokhod_values(&u, 0.0).unwrap(), 1.0);
        assert_eq!(skorokhod_values(&u, 1.0).unwrap(), 2.0);
        let two = MarginalSpec::atoms(&[2.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(skorokhod_values(&two, 0.3).unwrap(), 1.0);
        assert_eq!(skorokhod_values(&two, 0.5).unwrap(), 1.0);
        assert_eq!(skorokhod_values(&two, 0.0).unwrap(), 1.0);
        assert_eq!(skorokhod_values(&two, 1.0).unwrap(), 2.0);
        assert!(skorokhod_values(&two, 1.5).is_err());
    }

    #[test]
    fn coupling_bounds() {
        let u1 = MarginalSpec::uniform(1.0, 2.0).unwrap();
        let shift = coupling_gap_bound(&u1, &MarginalSpec::uniform(1.1, 2.1).unwrap()).unwrap();
        assert!((shift.bound - 0.1).abs() < 1e-12 && (shift.mesh_sup_gap - 0.1).abs() < 1e-12 && shift.mesh_ok);
        let wide = coupling_gap_bound(&u1, &MarginalSpec::uniform(1.0, 3.0).unwrap()).unwrap();
        assert_eq!(wide.rho_star, 0.5);
        assert_eq!(wide.d_kol, 0.5);
        assert_eq!(wide.bound, 1.0);
        assert_eq!(wide.mesh_sup_gap, 1.0);
        assert_eq!(coupling_gap_bound(&u1, &u1).unwrap().bound, 0.0);
        let atoms = MarginalSpec::atoms(&[1.0, 2.0], &[0.5, 0.5]).unwrap();
        assert!(matches!(coupling_gap_bound(&u1, &atoms), Err(Error::Unavailable(_))));
    }

    #[test]
    fn primal_and_dual() {
        assert!((gap_bound_primal(2.0, 1.0, 2.1, 1.1, 0.1).unwrap().value - 0.2).abs() < 1e-15);
        let dual = gap_bound_dual(2.0, 1.0, 2.1, 1.1, 0.1).unwrap();
        assert!((dual.value - 2.0 * (4.2 / 1.1) * 0.1).abs() < 1e-12);
        assert!((dual.value - 0.7636).abs() < 1e-4);
        assert_eq!(gap_bound_primal(2.0, 1.0, 2.0, 1.0, 0.0).unwrap().value, 0.0);
        assert_eq!(gap_bound_dual(2.0, 1.0, 2.0, 1.0, 0.0).unwrap().route, GapRoute::Dual);
        assert!(gap_bound_primal(2.0, 0.0, 2.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn identical_media_have_zero_gap() {
        let spec = EnvironmentSpec::new(EnvironmentKind::IidEdges, 2, WeightDistribution::Uniform { lo: 1.0, hi: 2.0 }, 9)
            .unwrap();
        let r = empirical_gap_check(&spec, &spec, &[1.0, 0.0], 20, 3).unwrap();
        assert_eq!(r.measured, 0.0);
        assert_eq!(r.gap.half_width, 0.0);
        assert!(r.ok);
        let z = empirical_gap_check(&spec, &spec, &[0.0, 0.0], 20, 3).unwrap();
        assert_eq!(z.measured, 0.0);
    }
}
