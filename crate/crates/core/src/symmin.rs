//! Variational formula for `H̄(p)` in hyperplane-symmetric media with
//! finitely many atoms, the descent algorithm that produces a minimiser,
//! and an exact bisection reference.
//!
//! Under the symmetry every admissible corrector collapses to one real
//! number per atom, and
//! `H̄(p) = inf_{f ∈ F} max_i h_sym(f_i, p, t_i)` over `F = {Σ π_i f_i = 0}`.

use serde::Serialize;

use crate::environment::{BoundsSpec, WeightDistribution};
use crate::error::{config_err, Error, Result};
use crate::lattice::linf_norm_f;

/// Relative tolerance for MIN₀ membership and the Step-2 comparison.
pub const TIE_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_TOL: f64 = 1e-10;
/// Relative width below which the final bracket counts as collapsed.
pub const CORRECTOR_TOL: f64 = 1e-8;

/// Finite-atom law of the weight vector `(τ(e_1), …, τ(e_d))` of one hyperplane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicMedium {
    d: usize,
    atoms: Vec<Vec<f64>>,
    probs: Vec<f64>,
    bounds: BoundsSpec,
}

impl AtomicMedium {
    pub fn new(d: usize, atoms: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        let dist = WeightDistribution::Atoms { values: atoms.clone(), probs: probs.clone() };
        dist.validate(d)?;
        let atoms: Vec<Vec<f64>> =
            atoms.into_iter().map(|v| if v.len() == 1 { vec![v[0]; d] } else { v }).collect();
        let bounds = dist.bounds();
        Ok(AtomicMedium { d, atoms, probs, bounds })
    }

    pub fn from_distribution(d: usize, dist: &WeightDistribution) -> Result<Self> {
        match dist {
            WeightDistribution::Atoms { values, probs } => AtomicMedium::new(d, values.clone(), probs.clone()),
            _ => config_err("the symmetric algorithm needs a finite-atom distribution"),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn bounds(&self) -> BoundsSpec {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Indices of atoms with positive probability.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    /// `E[τ(e_k)]` per axis.
    pub fn mean_weights(&self) -> Vec<f64> {
        (0..self.d).map(|k| self.atoms.iter().zip(&self.probs).map(|(t, p)| p * t[k]).sum()).collect()
    }

    fn check_p(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.d || p.iter().any(|c| !c.is_finite()) {
            return config_err(format!("momentum must have {} finite entries", self.d));
        }
        Ok(())
    }
}

/// Candidate corrector: one value `f_i` per atom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub p: Vec<f64>,
    pub f: Vec<f64>,
}

impl Profile {
    pub fn zero(medium: &AtomicMedium, p: &[f64]) -> Self {
        Profile { p: p.to_vec(), f: vec![0.0; medium.len()] }
    }

    /// `Σ π_i f_i`.
    pub fn mean(&self, medium: &AtomicMedium) -> f64 {
        self.f.iter().zip(medium.probs()).map(|(f, p)| f * p).sum()
    }

    /// Per-atom `h_sym(f_i)`.
    pub fn values(&self, medium: &AtomicMedium) -> Vec<f64> {
        self.f.iter().zip(medium.atoms()).map(|(&f, t)| h_sym(f, &self.p, t)).collect()
    }

    /// Essential supremum of `h_sym(f)` over positive-probability atoms.
    pub fn sup(&self, medium: &AtomicMedium) -> f64 {
        let v = self.values(medium);
        medium.support().iter().map(|&i| v[i]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Membership in F: mean zero and `max_{i,k} |f_i + p_k| ≤ (b/a)|p|∞`.
    pub fn in_f(&self, medium: &AtomicMedium, tol: f64) -> bool {
        let bnd = medium.bounds().ratio() * linf_norm_f(&self.p);
        let box_ok = medium
            .support()
            .iter()
            .all(|&i| self.p.iter().all(|pk| (self.f[i] + pk).abs() <= bnd * (1.0 + tol) + tol));
        box_ok && self.mean(medium).abs() <= tol * (1.0 + self.f.iter().fold(0.0f64, |m, f| m.max(f.abs())))
    }
}

/// `h_sym(t, p, atom) = max_k |t + p_k| / atom_k`.
pub fn h_sym(t: f64, p: &[f64], atom: &[f64]) -> f64 {
    p.iter().zip(atom).map(|(pk, tk)| (t + pk).abs() / tk).fold(0.0, f64::max)
}

/// Minimiser and minimum of the convex function `t ↦ h_sym(t, p, atom)`.
///
/// The minimum sits at a tent apex `−p_k` or where two tents cross, so a
/// finite candidate set suffices.
pub fn h_sym_minimum(atom: &[f64], p: &[f64]) -> (f64, f64) {
    let mut cands: Vec<f64> = p.iter().map(|pk| -pk).collect();
    for k in 0..p.len() {
        for j in (k + 1)..p.len() {
            let (pk, pj, tk, tj) = (p[k], p[j], atom[k], atom[j]);
            cands.push(-(pj * tk + pk * tj) / (tj + tk));
            if tj != tk {
                cands.push((pj * tk - pk * tj) / (tj - tk));
            }
        }
    }
    let mut best = (0.0, f64::INFINITY);
    for t in cands {
        let v = h_sym(t, p, atom);
        if v < best.1 {
            best = (t, v);
        }
    }
    best.0 += 0.0;
    best
}

/// Index partitions and step quantities of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub iter: usize,
    pub mu0: f64,
    pub d: f64,
    pub sup_before: f64,
    pub min0: Vec<usize>,
    pub s: Vec<usize>,
    pub i: Vec<usize>,
    /// Atoms of S \ MIN₀ right of their minimiser (h increasing).
    pub s_plus: Vec<usize>,
    /// Atoms of S \ MIN₀ left of their minimiser (h decreasing).
    pub s_minus: Vec<usize>,
    pub xi: f64,
    pub delta_f: Vec<f64>,
    pub sup_after: f64,
}

impl StepDiagnostics {
    /// `sup_after ≤ sup_before − d·a/b`, with rounding slack.
    pub fn descent_holds(&self, a: f64, b: f64) -> bool {
        self.sup_after <= self.sup_before - self.d * a / b + 1e-12 * (1.0 + self.sup_before)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmStatus {
    CorrectorAtTermination,
    MinimizerNotCorrector,
    ConvergedLimit,
    IterationCap,
}

impl AlgorithmStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmStatus::CorrectorAtTermination => "corrector-at-termination",
            AlgorithmStatus::MinimizerNotCorrector => "minimizer-not-corrector",
            AlgorithmStatus::ConvergedLimit => "converged-limit",
            AlgorithmStatus::IterationCap => "iteration-cap",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmResult {
    pub profile: Profile,
    pub hbar: f64,
    pub status: AlgorithmStatus,
    /// Gap `sup − mean` at the final profile.
    pub final_d: f64,
    /// `infsup_bounds` at the final profile: certified `lo ≤ H̄ ≤ hi`.
    pub bracket: (f64, f64),
    pub trace: Vec<StepDiagnostics>,
}

impl AlgorithmResult {
    /// Whether the final profile is a corrector on the lattice: the run
    /// stopped with `d` small and the certified bracket has collapsed.
    ///
    /// Equal `h_sym` values are not enough. If some atoms sit left of their
    /// minimiser and others right, `inf ℋ` over the lattice stays below the
    /// common value and `hbar` overestimates `H̄`.
    pub fn is_corrector(&self) -> bool {
        let (lo, hi) = self.bracket;
        matches!(self.status, AlgorithmStatus::CorrectorAtTermination | AlgorithmStatus::ConvergedLimit)
            && hi - lo <= CORRECTOR_TOL * hi.abs().max(1.0)
    }

    /// Rows `(iter, mu0, d, sup, xi)` for convergence plots.
    pub fn trace_rows(&self) -> Vec<(usize, f64, f64, f64, f64)> {
        self.trace.iter().map(|s| (s.iter, s.mu0, s.d, s.sup_before, s.xi)).collect()
    }

    /// Indices of non-terminal steps (steps after which the algorithm went
    /// on) that did not lower the sup by `d·a/b`.
    pub fn descent_failures(&self, a: f64, b: f64) -> Vec<usize> {
        let n = self.trace.len();
        let stopped = self.status != AlgorithmStatus::IterationCap;
        (0..n)
            .filter(|&k| !(k + 1 == n && stopped) && !self.trace[k].descent_holds(a, b))
            .collect()
    }
}

fn close(x: f64, y: f64, rel: f64) -> bool {
    (x - y).abs() <= rel * x.abs().max(y.abs()).max(1.0)
}

fn mu_and_sup(values: &[f64], medium: &AtomicMedium) -> (f64, f64) {
    let mut mu = 0.0;
    let mut sup = f64::NEG_INFINITY;
    for &i in &medium.support() {
        mu += medium.probs()[i] * values[i];
        sup = sup.max(values[i]);
    }
    (mu, sup)
}

/// Partitions of Steps 2-3 for `profile`; `xi`, `delta_f` and `sup_after`
/// are left unset.
pub fn classify_sets(profile: &Profile, medium: &AtomicMedium) -> StepDiagnostics {
    let values = profile.values(medium);
    let (mu0, sup) = mu_and_sup(&values, medium);
    let mut diag = StepDiagnostics {
        iter: 0,
        mu0,
        d: (sup - mu0).max(0.0),
        sup_before: sup,
        min0: vec![],
        s: vec![],
        i: vec![],
        s_plus: vec![],
        s_minus: vec![],
        xi: 0.0,
        delta_f: vec![0.0; medium.len()],
        sup_after: sup,
    };
    for idx in medium.support() {
        let (tstar, hmin) = h_sym_minimum(&medium.atoms()[idx], &profile.p);
        let h = values[idx];
        let at_min = close(h, hmin, TIE_TOL);
        if at_min {
            diag.min0.push(idx);
        }
        if h > mu0 {
            diag.s.push(idx);
            if !at_min {
                if profile.f[idx] > tstar {
                    diag.s_plus.push(idx);
                } else {
                    diag.s_minus.push(idx);
                }
            }
        } else if h < mu0 {
            diag.i.push(idx);
        }
    }
    diag
}

/// Whether the Step-2 stopping rule holds: the sup is attained on MIN₀.
pub fn sup_attained_on_min0(diag: &StepDiagnostics, values: &[f64]) -> bool {
    let m = diag.min0.iter().map(|&i| values[i]).fold(f64::NEG_INFINITY, f64::max);
    diag.min0.iter().any(|_| true) && close(m, diag.sup_before, TIE_TOL)
}

/// One pass of Step 3. Requires `d > 0` and that Step 2 did not stop.
pub fn iterate_step(profile: &Profile, medium: &AtomicMedium) -> Result<(Profile, StepDiagnostics)> {
    let values = profile.values(medium);
    let mut diag = classify_sets(profile, medium);
    if diag.d <= 0.0 {
        return config_err("step requires d > 0");
    }
    if sup_attained_on_min0(&diag, &values) {
        return config_err("step requires the sup not to be attained on MIN0");
    }
    let a = medium.bounds().a;
    let p = &profile.p;
    let mu0 = diag.mu0;
    let probs = medium.probs();
    let mut df = vec![0.0; medium.len()];
    let mut moved = 0.0;
    for &i in &diag.s_plus {
        let (tstar, _) = h_sym_minimum(&medium.atoms()[i], p);
        df[i] = (-a * (values[i] - mu0)).max(tstar - profile.f[i]);
        moved += probs[i] * df[i];
    }
    for &i in &diag.s_minus {
        let (tstar, _) = h_sym_minimum(&medium.atoms()[i], p);
        df[i] = (a * (values[i] - mu0)).min(tstar - profile.f[i]);
        moved += probs[i] * df[i];
    }
    let denom: f64 = diag.i.iter().map(|&i| probs[i] * a * (mu0 - values[i])).sum();
    if !(denom > 0.0) {
        return Err(Error::NotConverged(format!("degenerate mass balance (d = {:e})", diag.d)));
    }
    let mut xi = -moved / denom;
    // |ξ| ≤ 1 holds exactly; the computed mean carries an absolute error of
    // a few ulps of the values, which the division by `denom` magnifies.
    let scale: f64 = medium.support().iter().map(|&i| probs[i] * values[i].abs()).sum();
    let rounding = 64.0 * f64::EPSILON * a * (scale + mu0.abs()) * medium.len() as f64 / denom;
    if xi.abs() > 1.0 + rounding {
        return Err(Error::NotConverged(format!("mass-balance factor {xi} outside [-1, 1]")));
    }
    xi = xi.clamp(-1.0, 1.0);
    for &i in &diag.i {
        df[i] = a * xi * (mu0 - values[i]);
    }
    let f: Vec<f64> = profile.f.iter().zip(&df).map(|(f, d)| f + d).collect();
    let next = Profile { p: p.clone(), f };
    diag.xi = xi;
    diag.delta_f = df;
    diag.sup_after = next.sup(medium);
    Ok((next, diag))
}

/// Runs Steps 1-3 from `f = 0` until a termination rule fires, `d < tol`,
/// or `max_iter` steps.
pub fn run_algorithm(medium: &AtomicMedium, p: &[f64], max_iter: usize, tol: f64) -> Result<AlgorithmResult> {
    run_algorithm_from(medium, Profile::zero(medium, p), max_iter, tol)
}

pub fn run_algorithm_from(
    medium: &AtomicMedium,
    start: Profile,
    max_iter: usize,
    tol: f64,
) -> Result<AlgorithmResult> {
    medium.check_p(&start.p)?;
    if start.f.len() != medium.len() {
        return config_err("profile length does not match the number of atoms");
    }
    if !(tol >= 0.0) {
        return config_err(format!("tolerance must be >= 0, got {tol}"));
    }
    if !start.in_f(medium, 1e-12) {
        return config_err("starting profile is not in F");
    }
    let mut profile = start;
    let mut trace = Vec::new();
    let status = loop {
        let values = profile.values(medium);
        let diag = classify_sets(&profile, medium);
        if diag.d <= 4.0 * f64::EPSILON * diag.sup_before.abs() {
            break AlgorithmStatus::CorrectorAtTermination;
        }
        if diag.d < tol {
            break AlgorithmStatus::ConvergedLimit;
        }
        if sup_attained_on_min0(&diag, &values) {
            break AlgorithmStatus::MinimizerNotCorrector;
        }
        if trace.len() >= max_iter {
            break AlgorithmStatus::IterationCap;
        }
        let (next, mut diag) = iterate_step(&profile, medium)?;
        diag.iter = trace.len();
        if diag.sup_after > diag.sup_before * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::NotConverged(format!("sup increased at step {}", diag.iter)));
        }
        if !next.in_f(medium, 1e-9) {
            return Err(Error::NotConverged(format!("iterate left F at step {}", diag.iter)));
        }
        trace.push(diag);
        profile = next;
    };
    let values = profile.values(medium);
    let (mu, sup) = mu_and_sup(&values, medium);
    let bracket = infsup_bounds(&profile, medium);
    Ok(AlgorithmResult { hbar: sup, final_d: (sup - mu).max(0.0), bracket, status, profile, trace })
}

/// `max − min` of `h_sym(f_i)` over positive-probability atoms is at most `tol`.
pub fn check_corrector(profile: &Profile, medium: &AtomicMedium, tol: f64) -> bool {
    let v = profile.values(medium);
    let s = medium.support();
    let hi = s.iter().map(|&i| v[i]).fold(f64::NEG_INFINITY, f64::max);
    let lo = s.iter().map(|&i| v[i]).fold(f64::INFINITY, f64::min);
    hi - lo <= tol
}

/// `(inf_x ℋ(φ), sup_x ℋ(φ))` for the lattice function `φ` generated by the profile.
///
/// At a vertex between hyperplane layers `j` (behind) and `i` (ahead),
/// `ℋ = max(neg_i, pos_j)` with `pos_j = max_k (f_j + p_k)/t_jk` and
/// `neg_i = max_k (−f_i − p_k)/t_ik`. Layers are independent, so every
/// pair occurs and the infimum is `max(min_i neg_i, min_j pos_j)`. The
/// supremum is `max_i h_sym(f_i)`.
pub fn infsup_bounds(profile: &Profile, medium: &AtomicMedium) -> (f64, f64) {
    let p = &profile.p;
    let mut min_pos = f64::INFINITY;
    let mut min_neg = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in medium.support() {
        let t = &medium.atoms()[i];
        let f = profile.f[i];
        let pos = p.iter().zip(t).map(|(pk, tk)| (f + pk) / tk).fold(f64::NEG_INFINITY, f64::max);
        let neg = p.iter().zip(t).map(|(pk, tk)| (-f - pk) / tk).fold(f64::NEG_INFINITY, f64::max);
        min_pos = min_pos.min(pos);
        min_neg = min_neg.min(neg);
        hi = hi.max(h_sym(f, p, t));
    }
    (min_pos.max(min_neg), hi)
}

/// Reference minimiser from [`brute_force_hbar`].
#[derive(Debug, Clone, Serialize)]
pub struct BruteForce {
    pub hbar: f64,
    pub profile: Profile,
    /// Perturbation-star certificate of local (hence global) optimality.
    pub certified: bool,
}

/// Minimises `g(f) = max_i h_sym(f_i)` over `Σ π_i f_i = 0` directly.
///
/// Bisection on the level `s`: `g ≤ s` is feasible iff every per-atom
/// sublevel interval `[max_k(−p_k − s t_ik), min_k(−p_k + s t_ik)]` is
/// nonempty and `0` lies between the weighted sums of their endpoints.
/// The resulting `f` is then checked on a perturbation star of radius 1e-7.
pub fn brute_force_hbar(medium: &AtomicMedium, p: &[f64], resolution: f64) -> Result<BruteForce> {
    medium.check_p(p)?;
    if !(resolution > 0.0) {
        return config_err("resolution must be positive");
    }
    let support = medium.support();
    let probs = medium.probs();
    let intervals = |s: f64| -> Vec<(f64, f64)> {
        support
            .iter()
            .map(|&i| {
                let t = &medium.atoms()[i];
                let lo = p.iter().zip(t).map(|(pk, tk)| -pk - s * tk).fold(f64::NEG_INFINITY, f64::max);
                let hi = p.iter().zip(t).map(|(pk, tk)| -pk + s * tk).fold(f64::INFINITY, f64::min);
                (lo, hi)
            })
            .collect()
    };
    let feasible = |s: f64| -> bool {
        let iv = intervals(s);
        if iv.iter().any(|(l, h)| l > h) {
            return false;
        }
        let lo: f64 = iv.iter().zip(&support).map(|((l, _), &i)| probs[i] * l).sum();
        let hi: f64 = iv.iter().zip(&support).map(|((_, h), &i)| probs[i] * h).sum();
        lo <= 0.0 && 0.0 <= hi
    };
    let mut lo = 0.0;
    let mut hi = Profile::zero(medium, p).sup(medium);
    if feasible(0.0) {
        hi = 0.0;
    }
    while hi - lo > resolution * hi.max(1.0) * 0.25 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Recover a mean-zero profile inside the level-`hi` sublevel box.
    let iv = intervals(hi);
    let slo: f64 = iv.iter().zip(&support).map(|((l, _), &i)| probs[i] * l).sum();
    let shi: f64 = iv.iter().zip(&support).map(|((_, h), &i)| probs[i] * h).sum();
    let lam = if shi > slo { (-slo / (shi - slo)).clamp(0.0, 1.0) } else { 0.5 };
    let mut f = vec![0.0; medium.len()];
    for ((l, h), &i) in iv.iter().zip(&support) {
        f[i] = l + lam * (h - l);
    }
    // Remove rounding drift from the mean using the heaviest atom.
    let drift: f64 = f.iter().zip(probs).map(|(f, p)| f * p).sum();
    let heavy = *support.iter().max_by(|&&x, &&y| probs[x].total_cmp(&probs[y])).unwrap();
    f[heavy] -= drift / probs[heavy];
    let profile = Profile { p: p.to_vec(), f };
    let g0 = profile.sup(medium);
    let radius = 1e-7;
    let mut certified = true;
    for &i in &support {
        for &j in &support {
            if i == j {
                continue;
            }
            for sign in [-1.0, 1.0] {
                let mut q = profile.clone();
                q.f[i] += sign * radius / probs[i];
                q.f[j] -= sign * radius / probs[j];
                if q.sup(medium) < g0 - 1e-12 * g0.max(1.0) {
                    certified = false;
                }
            }
        }
    }
    Ok(BruteForce { hbar: g0, profile, certified })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_atom_1d() -> AtomicMedium {
        AtomicMedium::new(1, vec![vec![1.0], vec![2.0]], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn h_sym_examples() {
        assert_eq!(h_sym(0.0, &[1.0, 0.0], &[1.0, 1.0]), 1.0);
        assert_eq!(h_sym(-0.5, &[1.0, 0.0], &[1.0, 1.0]), 0.5);
        assert_eq!(h_sym(0.0, &[0.0, 0.0], &[1.0, 3.0]), 0.0);
        assert_eq!(h_sym_minimum(&[2.0], &[1.0]), (-1.0, 0.0));
        assert_eq!(h_sym_minimum(&[1.0, 1.0], &[1.0, 0.0]), (-0.5, 0.5));
        assert_eq!(h_sym_minimum(&[1.0, 2.0], &[0.0, 0.0]), (0.0, 0.0));
    }

    #[test]
    fn classify_two_atom_example() {
        let m = two_atom_1d();
        let diag = classify_sets(&Profile::zero(&m, &[1.0]), &m);
        assert_eq!(diag.mu0, 0.75);
        assert_eq!(diag.s, vec![0]);
        assert_eq!(diag.i, vec![1]);
        assert!(diag.min0.is_empty());
        let single = AtomicMedium::new(1, vec![vec![2.0]], vec![1.0]).unwrap();
        let diag = classify_sets(&Profile::zero(&single, &[1.0]), &single);
        assert_eq!(diag.d, 0.0);
        assert!(diag.s.is_empty() && diag.i.is_empty());
        let corr = Profile { p: vec![1.0], f: vec![-1.0 / 3.0, 1.0 / 3.0] };
        assert!(classify_sets(&corr, &m).d < 1e-15);
    }

    #[test]
    fn first_step_by_hand() {
        let m = two_atom_1d();
        let (next, diag) = iterate_step(&Profile::zero(&m, &[1.0]), &m).unwrap();
        assert_eq!(diag.s_plus, vec![0]);
        assert_eq!(diag.delta_f, vec![-0.25, 0.25]);
        assert_eq!(diag.xi, 1.0);
        assert_eq!(next.f, vec![-0.25, 0.25]);
        assert!(diag.sup_after < 1.0);
        assert_eq!(next.mean(&m), 0.0);
        let (n2, _) = iterate_step(&next, &m).unwrap();
        assert_eq!(n2.f, vec![-0.3125, 0.3125]);
    }

    #[test]
    fn step_refuses_zero_gap() {
        let single = AtomicMedium::new(1, vec![vec![2.0]], vec![1.0]).unwrap();
        assert!(iterate_step(&Profile::zero(&single, &[1.0]), &single).is_err());
    }

    #[test]
    fn two_atom_corrector() {
        let m = two_atom_1d();
        let r = run_algorithm(&m, &[1.0], DEFAULT_MAX_ITER, 1e-13).unwrap();
        assert!(r.is_corrector());
        assert!((r.hbar - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.profile.f[0] + 1.0 / 3.0).abs() < 1e-12);
        assert!((r.profile.f[1] - 1.0 / 3.0).abs() < 1e-12);
        let bf = brute_force_hbar(&m, &[1.0], 1e-14).unwrap();
        assert!((bf.hbar - 2.0 / 3.0).abs() < 1e-8);
        assert!(bf.certified);
    }

    #[test]
    fn single_atom_terminates_immediately() {
        let m = AtomicMedium::new(2, vec![vec![2.5]], vec![1.0]).unwrap();
        let r = run_algorithm(&m, &[1.0, -0.5], 10, 1e-10).unwrap();
        assert_eq!(r.status, AlgorithmStatus::CorrectorAtTermination);
        assert_eq!(r.hbar, 0.4);
        assert!(r.trace.is_empty());
        assert_eq!(brute_force_hbar(&m, &[1.0, -0.5], 1e-13).unwrap().hbar, 0.4);
        assert_eq!(infsup_bounds(&r.profile, &m), (0.4, 0.4));
    }

    #[test]
    fn zero_momentum() {
        let m = two_atom_1d();
        let bf = brute_force_hbar(&m, &[0.0], 1e-12).unwrap();
        assert_eq!(bf.hbar, 0.0);
        assert_eq!(bf.profile.f, vec![0.0, 0.0]);
    }

    #[test]
    fn swapped_atoms_in_2d() {
        let m = AtomicMedium::new(2, vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![0.5, 0.5]).unwrap();
        let r = run_algorithm(&m, &[1.0, 0.0], DEFAULT_MAX_ITER, 1e-13).unwrap();
        let bf = brute_force_hbar(&m, &[1.0, 0.0], 1e-14).unwrap();
        assert!((r.hbar - bf.hbar).abs() < 1e-6, "{} vs {}", r.hbar, bf.hbar);
        assert!((r.hbar - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn minimizer_that_is_not_a_corrector() {
        // The first atom cannot go below 1/2; the second stays strictly lower.
        let m = AtomicMedium::new(2, vec![vec![1.0, 1.0], vec![5.0, 5.0]], vec![0.5, 0.5]).unwrap();
        let r = run_algorithm(&m, &[1.0, 0.0], DEFAULT_MAX_ITER, 1e-13).unwrap();
        assert_eq!(r.status, AlgorithmStatus::MinimizerNotCorrector);
        assert!(!r.is_corrector());
        assert!((r.hbar - 0.5).abs() < 1e-12);
        let bf = brute_force_hbar(&m, &[1.0, 0.0], 1e-14).unwrap();
        assert!((r.hbar - bf.hbar).abs() < 1e-9);
        assert!(r.descent_failures(1.0, 5.0).is_empty());
    }

    #[test]
    fn equalised_limit_can_overshoot() {
        // Atoms 0 and 2 start left of their minimisers, 3 and 4 right. The
        // iteration never moves an atom across its minimiser, so it equalises
        // all values at a level above the true minimum.
        let atoms = vec![vec![2.91, 1.59], vec![2.48, 1.93], vec![2.28, 1.70], vec![1.10, 2.69], vec![1.03, 2.42]];
        let m = AtomicMedium::new(2, atoms, vec![0.30, 0.36, 0.05, 0.17, 0.12]).unwrap();
        let p = [0.25, -0.35];
        let r = run_algorithm(&m, &p, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let bf = brute_force_hbar(&m, &p, 1e-14).unwrap();
        assert_eq!(r.status, AlgorithmStatus::ConvergedLimit);
        assert!(r.final_d < DEFAULT_TOL);
        assert!(r.hbar > bf.hbar + 1e-2, "{} vs {}", r.hbar, bf.hbar);
        assert!(!r.is_corrector());
        assert!(r.bracket.0 <= bf.hbar && bf.hbar <= r.bracket.1);
        let (lo, hi) = infsup_bounds(&bf.profile, &m);
        assert!(hi - lo < 1e-9);
    }

    #[test]
    fn corrector_checks() {
        let m = two_atom_1d();
        assert!(check_corrector(&Profile { p: vec![1.0], f: vec![-1.0 / 3.0, 1.0 / 3.0] }, &m, 1e-12));
        assert!(!check_corrector(&Profile::zero(&m, &[1.0]), &m, 1e-12));
        let single = AtomicMedium::new(1, vec![vec![2.0]], vec![1.0]).unwrap();
        assert!(check_corrector(&Profile::zero(&single, &[1.0]), &single, 0.0));
        assert_eq!(infsup_bounds(&Profile::zero(&m, &[1.0]), &m), (0.5, 1.0));
    }

    #[test]
    fn zero_probability_atoms_are_ignored() {
        let m = AtomicMedium::new(1, vec![vec![1.0], vec![2.0], vec![0.1]], vec![0.5, 0.5, 0.0]).unwrap();
        let r = run_algorithm(&m, &[1.0], DEFAULT_MAX_ITER, 1e-13).unwrap();
        assert!((r.hbar - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.bounds(), BoundsSpec { a: 1.0, b: 2.0 });
    }
}
