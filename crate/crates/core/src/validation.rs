//! The built-in acceptance suite, one function per criterion.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cellproblem::{
    check_comparison_principle, check_hjb_residual, estimate_hbar_horizon, estimate_hbar_stationary,
    solve_finite_horizon, solve_stationary, LatticeFunction,
};
use crate::distcompare::{empirical_gap_check, kolmogorov_distance, MarginalSpec};
use crate::environment::{
    sample_window, EnvironmentKind, EnvironmentSpec, EnvironmentWindow, ExplicitTable, Topology, WeightDistribution,
};
use crate::error::{config_err, Result};
use crate::fpp::{estimate_time_constant, first_passage_times};
use crate::lattice::{linf_norm_f, BoxShape, DirectionSet};
use crate::norms::{check_norm_axioms, direction_mesh, dual_norm, NormTable};
use crate::oracle::{horizon_by_enumeration, passage_times_by_enumeration};
use crate::symmin::{
    brute_force_hbar, infsup_bounds, run_algorithm, AlgorithmStatus, AtomicMedium, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

/// Pass thresholds for every criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Stationary-route error for the constant medium.
    pub stationary: f64,
    /// Horizon-route error is at most `horizon_factor / t`.
    pub horizon_factor: f64,
    pub max_seconds_homogeneous: f64,
    pub max_seconds_corrector: f64,
    pub max_seconds_oracle: f64,
    /// `|hbar − |p|/E[τ]|`.
    pub corrector_hbar: f64,
    /// Algorithm against the brute-force minimiser.
    pub brute_force: f64,
    /// Monte-Carlo agreement in standard errors.
    pub std_errors: f64,
    /// Bound on `max/min` of `residual(ε)/ε`.
    pub residual_ratio: f64,
    /// Slack on the `[lo, hi]` bracket.
    pub bracket: f64,
    pub homogeneity: f64,
    pub triangle: f64,
    /// Kolmogorov distance and sup-gap against 0.1.
    pub kolmogorov: f64,
    /// Dual bound against 0.7636.
    pub dual_bound: f64,
    /// Relative floor of the duality check.
    pub duality_relative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            stationary: 5e-3,
            horizon_factor: 2.0,
            max_seconds_homogeneous: 30.0,
            max_seconds_corrector: 120.0,
            max_seconds_oracle: 60.0,
            corrector_hbar: 1e-9,
            brute_force: 1e-6,
            std_errors: 3.0,
            residual_ratio: 4.0,
            bracket: 1e-9,
            homogeneity: 1e-9,
            triangle: 1e-9,
            kolmogorov: 1e-12,
            dual_bound: 1e-4,
            duality_relative: 0.05,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("stationary", self.stationary),
            ("horizon_factor", self.horizon_factor),
            ("max_seconds_homogeneous", self.max_seconds_homogeneous),
            ("max_seconds_corrector", self.max_seconds_corrector),
            ("max_seconds_oracle", self.max_seconds_oracle),
            ("corrector_hbar", self.corrector_hbar),
            ("brute_force", self.brute_force),
            ("std_errors", self.std_errors),
            ("residual_ratio", self.residual_ratio),
            ("bracket", self.bracket),
            ("homogeneity", self.homogeneity),
            ("triangle", self.triangle),
            ("kolmogorov", self.kolmogorov),
            ("dual_bound", self.dual_bound),
            ("duality_relative", self.duality_relative),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return config_err(format!("tolerance {name} must be finite and nonnegative, got {v}"));
            }
        }
        Ok(())
    }
}

/// A named clause of a criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
}

/// Outcome of one criterion: its clauses plus free-form detail lines.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
    pub details: Vec<String>,
}

impl CriterionReport {
    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn line(&self) -> String {
        format!("criterion {} {} {} ({:.1} s)", self.id, self.verdict(), self.title, self.seconds)
    }

    /// Names of the clauses that failed.
    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect()
    }
}

#[derive(Default)]
struct Acc {
    checks: Vec<Check>,
    details: Vec<String>,
}

impl Acc {
    /// Records `pass` under `name`; repeated names are combined with AND.
    fn check(&mut self, name: &'static str, pass: bool) {
        match self.checks.iter_mut().find(|c| c.name == name) {
            Some(c) => c.pass &= pass,
            None => self.checks.push(Check { name, pass }),
        }
    }

    fn note(&mut self, line: String) {
        self.details.push(line);
    }

    fn runtime(&mut self, start: &Instant, limit: f64) {
        let s = start.elapsed().as_secs_f64();
        self.note(format!("runtime = {s:.2} s (limit {limit} s)"));
        self.check("runtime", s < limit);
    }
}

pub const TITLES: [&str; 9] = [
    "homogeneous exactness",
    "d=1 corrector law",
    "oracle equivalence",
    "HJB residual scaling",
    "algorithm descent certificate",
    "norm axioms",
    "comparison principle",
    "distribution comparison",
    "duality roundtrip",
];

/// Runs criterion `id` (1 to 9).
pub fn run_criterion(id: u8, tol: &Tolerances, seed: u64) -> Result<CriterionReport> {
    tol.validate()?;
    let start = Instant::now();
    let mut acc = Acc::default();
    match id {
        1 => homogeneous(tol, &mut acc, &start)?,
        2 => corrector_law(tol, seed, &mut acc, &start)?,
        3 => oracle_equivalence(tol, seed, &mut acc, &start)?,
        4 => residual_scaling(tol, seed, &mut acc)?,
        5 => descent_certificate(tol, seed, &mut acc)?,
        6 => norm_axioms(tol, seed, &mut acc)?,
        7 => comparison(seed, &mut acc)?,
        8 => distributions(tol, seed, &mut acc)?,
        9 => duality(tol, seed, &mut acc)?,
        _ => return config_err(format!("no criterion {id}; expected 1 to 9")),
    }
    Ok(CriterionReport {
        id,
        title: TITLES[id as usize - 1],
        pass: acc.checks.iter().all(|c| c.pass),
        seconds: start.elapsed().as_secs_f64(),
        checks: acc.checks,
        details: acc.details,
    })
}

pub fn run_all(tol: &Tolerances, seed: u64) -> Result<Vec<CriterionReport>> {
    (1..=9).map(|id| run_criterion(id, tol, seed)).collect()
}

fn unit(d: usize, axis: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[axis] = 1.0;
    e
}

fn homogeneous(tol: &Tolerances, acc: &mut Acc, start: &Instant) -> Result<()> {
    for c in [1.0, 2.5] {
        for d in [1usize, 2] {
            let e1 = unit(d, 0);
            let spec = EnvironmentSpec::constant(d, c)?;
            let m = estimate_time_constant(&spec, &e1, &[64], 4)?;
            let medium = AtomicMedium::new(d, vec![vec![c]], vec![1.0])?;
            let sym = run_algorithm(&medium, &e1, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
            let torus = sample_window(&spec, BoxShape::from_extents(vec![8; d])?, Topology::Torus)?;
            let st = estimate_hbar_stationary(&torus, &e1, &[0.2, 0.1, 0.05, 0.025], 1e-11)?;
            let t = 400.0;
            let hz = estimate_hbar_horizon(&torus, &e1, &[t / 2.0, t])?;
            let hz_t = *hz.values.last().unwrap();
            acc.check("time constant exact", m.value() == c && m.half_width() == 0.0);
            acc.check("algorithm exact", sym.hbar == 1.0 / c);
            acc.check("stationary route", (st.extrapolated - 1.0 / c).abs() <= tol.stationary);
            acc.check("horizon route", (hz_t - 1.0 / c).abs() <= tol.horizon_factor / t);
            acc.note(format!(
                "c = {c}, d = {d}: m = {} (hw {}), algorithm = {}, stationary = {:.6}, horizon(t=400) = {:.6}, 1/c = {}",
                m.value(),
                m.half_width(),
                sym.hbar,
                st.extrapolated,
                hz_t,
                1.0 / c
            ));
        }
    }
    acc.runtime(start, tol.max_seconds_homogeneous);
    Ok(())
}

fn random_probs(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Five d = 1 media with 2 to 5 atoms in `[1, 3]`.
pub fn random_d1_media(seed: u64) -> Result<Vec<AtomicMedium>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd1);
    (0..5)
        .map(|_| {
            let k = rng.gen_range(2..=5);
            let atoms = (0..k).map(|_| vec![rng.gen_range(1.0..3.0)]).collect();
            let probs = random_probs(&mut rng, k);
            AtomicMedium::new(1, atoms, probs)
        })
        .collect()
}

/// Twenty d = 2 media with 2 to 6 atoms, components in `[1, 3]`, each with a momentum.
pub fn random_d2_media(seed: u64) -> Result<Vec<(AtomicMedium, Vec<f64>)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd2);
    (0..20)
        .map(|_| {
            let k = rng.gen_range(2..=6);
            let atoms = (0..k).map(|_| vec![rng.gen_range(1.0..3.0), rng.gen_range(1.0..3.0)]).collect();
            let probs = random_probs(&mut rng, k);
            let p = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            Ok((AtomicMedium::new(2, atoms, probs)?, p))
        })
        .collect()
}

/// Hyperplane-symmetric environment with the medium's atoms.
pub fn layered_spec(medium: &AtomicMedium, seed: u64) -> Result<EnvironmentSpec> {
    let dist = WeightDistribution::Atoms { values: medium.atoms().to_vec(), probs: medium.probs().to_vec() };
    EnvironmentSpec::new(EnvironmentKind::HyperplaneSymmetric, medium.dim(), dist, seed)
}

fn corrector_law(tol: &Tolerances, seed: u64, acc: &mut Acc, start: &Instant) -> Result<()> {
    for (k, medium) in random_d1_media(seed)?.iter().enumerate() {
        let mean = medium.mean_weights()[0];
        for p in [1.0, -0.7] {
            let r = run_algorithm(medium, &[p], DEFAULT_MAX_ITER, DEFAULT_TOL)?;
            let bf = brute_force_hbar(medium, &[p], 1e-13)?;
            let target = p.abs() / mean;
            acc.check("corrector status", r.is_corrector());
            acc.check("hbar = |p|/E[tau]", (r.hbar - target).abs() <= tol.corrector_hbar);
            acc.check("brute force agreement", (bf.hbar - r.hbar).abs() <= tol.brute_force);
            acc.note(format!(
                "medium {k}, p = {p}: status {}, hbar = {:.12}, |p|/E = {:.12}, brute force = {:.12}",
                r.status.as_str(),
                r.hbar,
                target,
                bf.hbar
            ));
        }
        let hbar = run_algorithm(medium, &[1.0], DEFAULT_MAX_ITER, DEFAULT_TOL)?.hbar;
        let spec = layered_spec(medium, seed.wrapping_add(k as u64))?;
        let m = estimate_time_constant(&spec, &[1.0], &[10_000], 16)?;
        let se = m.estimate.std_err;
        acc.check("monte carlo agreement", (m.value() - 1.0 / hbar).abs() <= tol.std_errors * se);
        acc.note(format!("medium {k}: m = {:.6} (se {:.2e}), 1/hbar = {:.6}", m.value(), se, 1.0 / hbar));
    }
    acc.runtime(start, tol.max_seconds_corrector);
    Ok(())
}

/// A directed 3x3 table with dyadic weights in `[1/2, 2]`.
fn random_table(rng: &mut ChaCha8Rng) -> Result<EnvironmentWindow> {
    let shape = BoxShape::from_extents(vec![3, 3])?;
    let mut table = ExplicitTable::empty(shape.clone());
    for x in shape.iter() {
        for dir in DirectionSet::new(2).all() {
            let mut y = x.clone();
            y[dir.axis] += dir.sign();
            if shape.contains(&y) {
                table.set(&x, dir, rng.gen_range(4..=16) as f64 / 8.0)?;
            }
        }
    }
    sample_window(&EnvironmentSpec::explicit(table)?, shape, Topology::OpenBox)
}

fn oracle_equivalence(tol: &Tolerances, seed: u64, acc: &mut Acc, start: &Instant) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x03);
    let mut fpp_mismatch = 0usize;
    let mut horizon_mismatch = 0usize;
    let mut sources = 0usize;
    let mut samples = 0usize;
    for _ in 0..50 {
        let env = random_table(&mut rng)?;
        let shape = env.shape().clone();
        for src in shape.iter() {
            sources += 1;
            let fast = first_passage_times(&env, &src)?;
            if fast.times() != passage_times_by_enumeration(&env, &src).as_slice() {
                fpp_mismatch += 1;
            }
        }
        let vals: Vec<f64> = (0..shape.len()).map(|_| rng.gen_range(-8..=8) as f64 / 8.0).collect();
        let mu0 = LatticeFunction::new(shape.clone(), false, vec![0.0, 0.0], vals)?;
        for _ in 0..5 {
            let x = vec![rng.gen_range(0..3), rng.gen_range(0..3)];
            let t = rng.gen_range(0..=48) as f64 / 8.0;
            let p = vec![rng.gen_range(-8..=8) as f64 / 8.0, rng.gen_range(-8..=8) as f64 / 8.0];
            let fast = solve_finite_horizon(&env, &p, &x, t, &mu0)?.value;
            let slow = horizon_by_enumeration(&env, &p, &x, t, &|y| mu0.value(y).unwrap_or(f64::NAN));
            samples += 1;
            if fast != slow {
                horizon_mismatch += 1;
            }
        }
    }
    acc.check("passage times exact", fpp_mismatch == 0);
    acc.check("horizon values exact", horizon_mismatch == 0);
    acc.note(format!("passage-time mismatches: {fpp_mismatch} of {sources} sources"));
    acc.note(format!("horizon mismatches: {horizon_mismatch} of {samples} samples"));
    acc.runtime(start, tol.max_seconds_oracle);
    Ok(())
}

fn residual_scaling(tol: &Tolerances, seed: u64, acc: &mut Acc) -> Result<()> {
    let uniform = WeightDistribution::Uniform { lo: 1.0, hi: 2.0 };
    let periodic = EnvironmentSpec::new(EnvironmentKind::Periodic(vec![4, 4]), 2, uniform.clone(), seed)?;
    let iid = EnvironmentSpec::new(EnvironmentKind::IidUndirected, 2, uniform, seed)?;
    let p = [1.0, 0.5];
    for (name, spec, n) in [("period-4 on 8x8", periodic, 8), ("iid on 32x32", iid, 32)] {
        let env = sample_window(&spec, BoxShape::from_extents(vec![n, n])?, Topology::Torus)?;
        let bnd = env.bounds();
        let lip_cap = (bnd.a + bnd.b) / bnd.a * linf_norm_f(&p);
        let mut scaled = Vec::new();
        for eps in [0.2, 0.1, 0.05, 0.025] {
            let field = solve_stationary(&env, &p, eps, 1e-11)?;
            let r = check_hjb_residual(&field, &env)?;
            let lip = field.lipschitz_norm();
            scaled.push(r / eps);
            acc.check("lipschitz bound", lip <= lip_cap * (1.0 + 1e-12));
            acc.note(format!("{name}, eps = {eps}: residual/eps = {:.6}, lipschitz = {lip:.6} (cap {lip_cap})", r / eps));
        }
        let hi = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        acc.check("residual/eps ratio", lo > 0.0 && hi / lo < tol.residual_ratio);
        acc.note(format!("{name}: max/min = {:.4}", hi / lo));
    }
    Ok(())
}

fn descent_certificate(tol: &Tolerances, seed: u64, acc: &mut Acc) -> Result<()> {
    let (mut descent_fail, mut xi_fail, mut bracket_fail, mut steps) = (0usize, 0usize, 0usize, 0usize);
    for (k, (medium, p)) in random_d2_media(seed)?.iter().enumerate() {
        let r = run_algorithm(medium, p, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
        let b = medium.bounds();
        descent_fail += r.descent_failures(b.a, b.b).len();
        let n = r.trace.len();
        let non_terminal = if r.status == AlgorithmStatus::IterationCap { n } else { n.saturating_sub(1) };
        steps += non_terminal;
        let xi_bad = r.trace[..non_terminal].iter().filter(|s| !(s.xi.abs() < 1.0)).count();
        xi_fail += xi_bad;
        let (lo, hi) = infsup_bounds(&r.profile, medium);
        let bf = brute_force_hbar(medium, p, 1e-13)?;
        if !(lo - tol.bracket <= bf.hbar && bf.hbar <= hi + tol.bracket) {
            bracket_fail += 1;
        }
        acc.note(format!(
            "medium {k}: {} atoms, {n} steps, status {}, |xi| >= 1 on {xi_bad} steps, bracket [{lo:.9}, {hi:.9}], brute force {:.9}",
            medium.len(),
            r.status.as_str(),
            bf.hbar
        ));
    }
    acc.check("sup descent", descent_fail == 0);
    acc.check("|xi| < 1", xi_fail == 0);
    acc.check("bracket", bracket_fail == 0);
    acc.note(format!("descent failures: {descent_fail} of {steps} non-terminal steps"));
    acc.note(format!("steps with |xi| >= 1: {xi_fail} of {steps}"));
    acc.note(format!("bracket failures: {bracket_fail} of 20"));
    Ok(())
}

fn norm_axioms(tol: &Tolerances, seed: u64, acc: &mut Acc) -> Result<()> {
    let mut media: Vec<AtomicMedium> = random_d1_media(seed)?;
    media.extend(random_d2_media(seed)?.into_iter().map(|(m, _)| m));
    let mut triangle_fail = 0usize;
    for (k, medium) in media.iter().enumerate() {
        let hbar = |p: &[f64]| run_algorithm(medium, p, DEFAULT_MAX_ITER, DEFAULT_TOL).map(|r| r.hbar);
        let table = NormTable::from_evaluator(direction_mesh(medium.dim(), PI / 8.0)?, &hbar, 0.0, "algorithm")?;
        let b = medium.bounds().b;
        let r = check_norm_axioms(&table, &hbar, &[2.0, 0.5], 100, b, 0.0, seed.wrapping_add(k as u64))?;
        acc.check("homogeneity", r.homogeneity_worst <= tol.homogeneity);
        acc.check("triangle inequality", r.triangle_worst <= tol.triangle);
        acc.check("lower bound |p|/b", r.lower_bound_worst <= 0.0);
        acc.check("positivity", r.positivity_ok);
        if r.triangle_worst > tol.triangle {
            triangle_fail += 1;
        }
        acc.note(format!(
            "medium {k} (d = {}): homogeneity {:.2e}, triangle excess {:.3e}, lower-bound excess {:.3e}",
            medium.dim(),
            r.homogeneity_worst,
            r.triangle_worst,
            r.lower_bound_worst
        ));
    }
    acc.note(format!("media violating the triangle inequality: {triangle_fail} of {}", media.len()));
    Ok(())
}

fn comparison(seed: u64, acc: &mut Acc) -> Result<()> {
    let spec =
        EnvironmentSpec::new(EnvironmentKind::IidUndirected, 2, WeightDistribution::Uniform { lo: 1.0, hi: 2.0 }, seed)?;
    let shape = BoxShape::from_extents(vec![6, 6])?;
    let env = sample_window(&spec, shape.clone(), Topology::Torus)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x07);
    let (mut lower, mut upper, mut discrete) = (0usize, 0usize, 0usize);
    for k in 0..20 {
        let vals: Vec<f64> = (0..shape.len()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let phi = LatticeFunction::new(shape.clone(), true, vec![0.0, 0.0], vals)?;
        let p = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let samples: Vec<(Vec<i64>, f64)> =
            (0..20).map(|_| (vec![rng.gen_range(0..6), rng.gen_range(0..6)], rng.gen_range(0.5..12.0))).collect();
        let r = check_comparison_principle(&phi, &p, &env, &samples)?;
        lower += r.lower_violations.len();
        upper += r.upper_violations.len();
        discrete += r.upper_discrete_violations.len();
        acc.note(format!(
            "phi {k}: inf H = {:.4}, sup H = {:.4}, violations lower {} upper {} upper-discrete {}",
            r.inf_h,
            r.sup_h,
            r.lower_violations.len(),
            r.upper_violations.len(),
            r.upper_discrete_violations.len()
        ));
    }
    acc.check("lower inequality", lower == 0);
    acc.check("upper inequality", upper == 0);
    acc.note(format!("total violations: lower {lower}, upper {upper}, upper-discrete {discrete} of 400"));
    Ok(())
}

fn distributions(tol: &Tolerances, seed: u64, acc: &mut Acc) -> Result<()> {
    let f1 = MarginalSpec::uniform(1.0, 2.0)?;
    let f2 = MarginalSpec::uniform(1.1, 2.1)?;
    let d_kol = kolmogorov_distance(&f1, &f2, 1000);
    let s1 = EnvironmentSpec::new(EnvironmentKind::IidUndirected, 2, f1.to_distribution(), seed)?;
    let s2 = EnvironmentSpec::new(EnvironmentKind::IidUndirected, 2, f2.to_distribution(), seed)?;
    let r = empirical_gap_check(&s1, &s2, &[1.0, 0.0], 200, 8)?;
    let hw = r.gap.half_width;
    acc.check("kolmogorov distance", (d_kol - 0.1).abs() <= tol.kolmogorov);
    acc.check("skorokhod sup-gap", (r.coupling.mesh_sup_gap - 0.1).abs() <= tol.kolmogorov && r.coupling.mesh_ok);
    acc.check("coupled gap range", r.gap.mean >= 0.1 - hw && r.gap.mean <= 0.2 + hw && r.ok);
    acc.check("dual bound", (r.dual.value - 0.7636).abs() <= tol.dual_bound && r.dual.value > r.primal.value);
    acc.note(format!("d_kol = {d_kol:.17}, sup gap = {:.17}", r.coupling.mesh_sup_gap));
    acc.note(format!("coupled gap per unit = {:.6} +- {hw:.6}", r.gap.mean));
    acc.note(format!(
        "primal bound = {:.6}, dual bound = {:.6} ({})",
        r.primal.value,
        r.dual.value,
        if r.dual.value > r.primal.value { "weaker than primal" } else { "not weaker" }
    ));
    Ok(())
}

fn duality(tol: &Tolerances, seed: u64, acc: &mut Acc) -> Result<()> {
    let medium = AtomicMedium::new(2, vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![0.5, 0.5])?;
    let hbar = |p: &[f64]| run_algorithm(&medium, p, DEFAULT_MAX_ITER, DEFAULT_TOL).map(|r| r.hbar);
    let table = NormTable::from_evaluator(direction_mesh(2, PI / 256.0)?, &hbar, DEFAULT_TOL, "algorithm")?;
    let spec = layered_spec(&medium, seed)?;
    let a = medium.bounds().a;
    for x in [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]] {
        let l = dual_norm(&table, &x, a)?;
        let m = estimate_time_constant(&spec, &x, &[100], 8)?;
        let allowed = (tol.duality_relative * m.value()).max(m.half_width() + l.slack);
        acc.check("dual norm matches monte carlo", (l.value - m.value()).abs() <= allowed);
        acc.note(format!(
            "x = {x:?}: dual norm = {:.6} (slack {:.4}), m = {:.6} (hw {:.4}), allowed {allowed:.4}",
            l.value,
            l.slack,
            m.value(),
            m.half_width()
        ));
    }
    Ok(())
}
