//! Turning `[[jobs]]` entries into validated tasks, and running them.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::Result;
use fpp_core::cellproblem::{
    check_comparison_principle, check_hjb_residual, estimate_hbar_horizon, estimate_hbar_stationary,
    solve_finite_horizon, solve_stationary, LatticeFunction,
};
use fpp_core::distcompare::{
    coupling_gap_bound, empirical_gap_check, gap_bound_dual, gap_bound_primal, kolmogorov_distance, MarginalSpec,
};
use fpp_core::environment::{
    sample_window, DistributionConfig, EnvironmentKind, EnvironmentSpec, EnvironmentWindow, Topology,
};
use fpp_core::fpp::{estimate_time_constant, first_passage_times};
use fpp_core::lattice::BoxShape;
use fpp_core::norms::{direction_mesh, dual_norm, limit_shape, NormTable};
use fpp_core::rng;
use fpp_core::symmin::{
    brute_force_hbar, infsup_bounds, run_algorithm, AtomicMedium, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use fpp_core::validation::{run_criterion, Tolerances};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::config::{config_error, Command, Expect, JobSpec, Loaded};
use crate::output::{Format, Record, Value};

/// Tag for the random terminal cost of `solve-horizon`.
const PHI_TAG: u64 = 0x5048_4930;

trait CoreResult<T> {
    fn ctx(self) -> Result<T>;
}

impl<T> CoreResult<T> for fpp_core::Result<T> {
    fn ctx(self) -> Result<T> {
        self.map_err(|e| match e {
            fpp_core::Error::Config(m) => config_error(m),
            other => other.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymMethod {
    #[default]
    Algorithm,
    BruteForce,
}

impl SymMethod {
    fn as_str(self) -> &'static str {
        match self {
            SymMethod::Algorithm => "algorithm",
            SymMethod::BruteForce => "brute-force",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HbarMethod {
    Stationary,
    Horizon,
    Algorithm,
    BruteForce,
}

fn default_replicas() -> usize {
    8
}

fn default_sweep_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

fn default_alg_tol() -> f64 {
    DEFAULT_TOL
}

fn default_resolution() -> f64 {
    1e-13
}

fn default_mesh() -> u32 {
    64
}

fn default_kolmogorov_mesh() -> usize {
    1000
}

fn default_kind() -> String {
    "iid-undirected".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateParams {
    medium: String,
    radius: i64,
    #[serde(default)]
    source: Option<Vec<i64>>,
    #[serde(default)]
    targets: Option<Vec<Vec<i64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateMParams {
    medium: String,
    directions: Vec<Vec<f64>>,
    n: Vec<u64>,
    #[serde(default = "default_replicas")]
    replicas: usize,
    #[serde(default)]
    replicas_output: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StationaryParams {
    medium: String,
    size: Vec<i64>,
    p: Vec<f64>,
    epsilons: Vec<f64>,
    #[serde(default = "default_sweep_tol")]
    tol: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HorizonParams {
    medium: String,
    size: Vec<i64>,
    p: Vec<f64>,
    #[serde(default)]
    x: Option<Vec<i64>>,
    times: Vec<f64>,
    /// Terminal cost uniform in `[-amplitude, amplitude]` per site; 0 gives `μ₀ ≡ 0`.
    #[serde(default)]
    amplitude: f64,
    #[serde(default)]
    check_comparison: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HbarParams {
    medium: String,
    p: Vec<f64>,
    method: HbarMethod,
    #[serde(default)]
    size: Option<Vec<i64>>,
    #[serde(default)]
    epsilons: Option<Vec<f64>>,
    #[serde(default)]
    times: Option<Vec<f64>>,
    #[serde(default = "default_sweep_tol")]
    tol: f64,
    #[serde(default = "default_resolution")]
    resolution: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SymParams {
    medium: String,
    p: Vec<f64>,
    #[serde(default)]
    method: SymMethod,
    #[serde(default = "default_max_iter")]
    max_iter: usize,
    #[serde(default = "default_alg_tol")]
    tol: f64,
    #[serde(default = "default_resolution")]
    resolution: f64,
    #[serde(default)]
    trace_output: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableParams {
    medium: String,
    /// Mesh angle is `π / mesh`.
    #[serde(default = "default_mesh")]
    mesh: u32,
    #[serde(default)]
    method: SymMethod,
    #[serde(default)]
    points: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareParams {
    first: DistributionConfig,
    second: DistributionConfig,
    #[serde(default = "default_kolmogorov_mesh")]
    mesh: usize,
    #[serde(default)]
    empirical: Option<EmpiricalParams>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmpiricalParams {
    d: usize,
    #[serde(default = "default_kind")]
    kind: String,
    direction: Vec<f64>,
    n: u64,
    replicas: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateParams {
    #[serde(default)]
    criteria: Option<Vec<u8>>,
}

#[derive(Debug, Clone)]
struct NormSource {
    medium: AtomicMedium,
    method: SymMethod,
    mesh: u32,
}

#[derive(Debug, Clone)]
enum Task {
    SimulateFpp { spec: EnvironmentSpec, radius: i64, source: Vec<i64>, targets: Option<Vec<Vec<i64>>> },
    EstimateM { spec: EnvironmentSpec, directions: Vec<Vec<f64>>, n: Vec<u64>, replicas: usize, replicas_output: Option<PathBuf> },
    SolveStationary { spec: EnvironmentSpec, size: Vec<i64>, p: Vec<f64>, epsilons: Vec<f64>, tol: f64 },
    SolveHorizon { spec: EnvironmentSpec, size: Vec<i64>, p: Vec<f64>, x: Vec<i64>, times: Vec<f64>, amplitude: f64, check: bool },
    HbarNumeric { spec: EnvironmentSpec, size: Vec<i64>, p: Vec<f64>, method: HbarMethod, ladder: Vec<f64>, tol: f64 },
    HbarAtomic { medium: AtomicMedium, p: Vec<f64>, method: SymMethod, resolution: f64 },
    SymMinimize { medium: AtomicMedium, p: Vec<f64>, method: SymMethod, max_iter: usize, tol: f64, resolution: f64, trace_output: Option<PathBuf> },
    DualNorm { source: NormSource, points: Vec<Vec<f64>> },
    LimitShape { source: NormSource },
    CompareDistros { first: MarginalSpec, second: MarginalSpec, mesh: usize, empirical: Option<(EnvironmentSpec, EnvironmentSpec, Vec<f64>, u64, usize)> },
    Validate { tolerances: Tolerances, seed: u64, criteria: Vec<u8> },
}

/// A job whose parameters have passed every check that can be made
/// without running it.
#[derive(Debug, Clone)]
pub struct Planned {
    pub name: String,
    pub command: Command,
    pub seed: Option<u64>,
    pub output: PathBuf,
    pub format: Format,
    expect: Option<Expect>,
    task: Task,
}

/// A file written by a job in addition to its main output.
#[derive(Debug, Clone)]
pub struct Extra {
    pub path: PathBuf,
    pub format: Format,
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, Default)]
pub struct JobResult {
    pub records: Vec<Record>,
    pub extras: Vec<Extra>,
    /// Embedded assertions that did not hold.
    pub failures: Vec<String>,
    /// Lines for the terminal.
    pub console: Vec<String>,
}

fn params<T: DeserializeOwned>(job: &JobSpec, name: &str) -> Result<T> {
    toml::Value::Table(job.params.clone())
        .try_into()
        .map_err(|e: toml::de::Error| config_error(format!("job {name:?}: {}", e.message())))
}

fn broadcast(size: &[i64], d: usize, name: &str) -> Result<Vec<i64>> {
    match size.len() {
        1 => Ok(vec![size[0]; d]),
        n if n == d => Ok(size.to_vec()),
        n => Err(config_error(format!("job {name:?}: size has {n} entries, expected 1 or {d}"))),
    }
}

fn check_len<T>(v: &[T], d: usize, what: &str, name: &str) -> Result<()> {
    if v.len() != d {
        return Err(config_error(format!("job {name:?}: {what} has {} entries, expected {d}", v.len())));
    }
    Ok(())
}

fn check_finite(v: &[f64], what: &str, name: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(config_error(format!("job {name:?}: {what} must be finite")));
    }
    Ok(())
}

fn check_positive(x: f64, what: &str, name: &str) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(config_error(format!("job {name:?}: {what} must be positive, got {x}")));
    }
    Ok(())
}

struct Planner<'a> {
    loaded: &'a Loaded,
    out_dir: &'a Path,
    paths: BTreeSet<PathBuf>,
}

impl Planner<'_> {
    fn medium(&self, job: &JobSpec, name: &str, medium: &str) -> Result<EnvironmentSpec> {
        let cfg = self
            .loaded
            .config
            .media
            .get(medium)
            .ok_or_else(|| config_error(format!("job {name:?}: unknown medium {medium:?}")))?;
        let spec = cfg
            .build(&self.loaded.base_dir, self.loaded.seed())
            .map_err(|e| config_error(format!("medium {medium:?}: {e}")))?;
        Ok(match job.seed {
            Some(s) => spec.with_seed(s),
            None => spec,
        })
    }

    fn atomic(&self, job: &JobSpec, name: &str, medium: &str) -> Result<AtomicMedium> {
        let spec = self.medium(job, name, medium)?;
        let layered = spec.kind == EnvironmentKind::HyperplaneSymmetric
            || (spec.d == 1 && matches!(spec.kind, EnvironmentKind::IidUndirected));
        if !layered {
            return Err(config_error(format!(
                "job {name:?}: medium {medium:?} must be hyperplane-symmetric (or undirected iid in d = 1)"
            )));
        }
        AtomicMedium::from_distribution(spec.d, &spec.distribution)
            .map_err(|e| config_error(format!("job {name:?}: {e}")))
    }

    fn claim(&mut self, name: &str, file: &str) -> Result<PathBuf> {
        let path = self.out_dir.join(file);
        if file == crate::MANIFEST || !self.paths.insert(path.clone()) {
            return Err(config_error(format!("job {name:?}: output {file:?} is already used")));
        }
        Ok(path)
    }

    fn plan(&mut self, index: usize, job: &JobSpec) -> Result<Planned> {
        let name = job.name.clone().unwrap_or_else(|| format!("job{index}"));
        let n = name.as_str();
        let task = match job.command {
            Command::SimulateFpp => {
                let q: SimulateParams = params(job, n)?;
                let spec = self.medium(job, n, &q.medium)?;
                let source = q.source.unwrap_or_else(|| vec![0; spec.d]);
                check_len(&source, spec.d, "source", n)?;
                if q.radius < 0 {
                    return Err(config_error(format!("job {n:?}: radius must be nonnegative")));
                }
                for t in q.targets.iter().flatten() {
                    check_len(t, spec.d, "target", n)?;
                }
                Task::SimulateFpp { spec, radius: q.radius, source, targets: q.targets }
            }
            Command::EstimateM => {
                let q: EstimateMParams = params(job, n)?;
                let spec = self.medium(job, n, &q.medium)?;
                if q.directions.is_empty() || q.n.is_empty() || q.n.contains(&0) || q.replicas == 0 {
                    return Err(config_error(format!(
                        "job {n:?}: need directions, positive scales n and at least one replica"
                    )));
                }
                for dir in &q.directions {
                    check_len(dir, spec.d, "direction", n)?;
                    check_finite(dir, "direction", n)?;
                }
                let replicas_output = q.replicas_output.map(|f| self.claim(n, &f)).transpose()?;
                Task::EstimateM { spec, directions: q.directions, n: q.n, replicas: q.replicas, replicas_output }
            }
            Command::SolveStationary => {
                let q: StationaryParams = params(job, n)?;
                let spec = self.medium(job, n, &q.medium)?;
                let size = broadcast(&q.size, spec.d, n)?;
                check_len(&q.p, spec.d, "p", n)?;
                check_finite(&q.p, "p", n)?;
                if q.epsilons.is_empty() {
                    return Err(config_error(format!("job {n:?}: epsilons is empty")));
                }
                for &e in &q.epsilons {
                    check_positive(e, "epsilon", n)?;
                }
                check_positive(q.tol, "tol", n)?;
                Task::SolveStationary { spec, size, p: q.p, epsilons: q.epsilons, tol: q.tol }
            }
            Command::SolveHorizon => {
                let q: HorizonParams = params(job, n)?;
                let spec = self.medium(job, n, &q.medium)?;
                let size = broadcast(&q.size, spec.d, n)?;
                check_len(&q.p, spec.d, "p", n)?;
                check_finite(&q.p, "p", n)?;
                let x = q.x.unwrap_or_else(|| vec![0; spec.d]);
                check_len(&x, spec.d, "x", n)?;
                if q.times.is_empty() || q.times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
                    return Err(config_error(format!("job {n:?}: times must be nonempty and nonnegative")));
                }
                if !(q.amplitude >= 0.0 && q.amplitude.is_finite()) {
                    return Err(config_error(format!("job {n:?}: amplitude must be nonnegative")));
                }
                Task::SolveHorizon { spec, size, p: q.p, x, times: q.times, amplitude: q.amplitude, check: q.check_comparison }
            }
            Command::EstimateHbar => {
                let q: HbarParams = params(job, n)?;
                check_finite(&q.p, "p", n)?;
                match q.method {
                    HbarMethod::Stationary | HbarMethod::Horizon => {
                        let spec = self.medium(job, n, &q.medium)?;
                        check_len(&q.p, spec.d, "p", n)?;
                        let size = q.size.as_deref().ok_or_else(|| config_error(format!("job {n:?}: size is required")))?;
                        let size = broadcast(size, spec.d, n)?;
                        let (ladder, key) = if q.method == HbarMethod::Stationary {
                            (q.epsilons, "epsilons")
                        } else {
                            (q.times, "times")
                        };
                        let ladder = ladder.filter(|l| !l.is_empty()).ok_or_else(|| {
                            config_error(format!("job {n:?}: {key} is required for this method"))
                        })?;
                        check_positive(q.tol, "tol", n)?;
                        Task::HbarNumeric { spec, size, p: q.p, method: q.method, ladder, tol: q.tol }
                    }
                    HbarMethod::Algorithm | HbarMethod::BruteForce => {
                        let medium = self.atomic(job, n, &q.medium)?;
                        check_len(&q.p, medium.dim(), "p", n)?;
                        check_positive(q.resolution, "resolution", n)?;
                        let method =
                            if q.method == HbarMethod::Algorithm { SymMethod::Algorithm } else { SymMethod::BruteForce };
                        Task::HbarAtomic { medium, p: q.p, method, resolution: q.resolution }
                    }
                }
            }
            Command::SymMinimize => {
                let q: SymParams = params(job, n)?;
                let medium = self.atomic(job, n, &q.medium)?;
                check_len(&q.p, medium.dim(), "p", n)?;
                check_finite(&q.p, "p", n)?;
                check_positive(q.tol, "tol", n)?;
                check_positive(q.resolution, "resolution", n)?;
                if q.trace_output.is_some() && q.method == SymMethod::BruteForce {
                    return Err(config_error(format!("job {n:?}: trace_output needs method = \"algorithm\"")));
                }
                let trace_output = q.trace_output.map(|f| self.claim(n, &f)).transpose()?;
                Task::SymMinimize {
                    medium,
                    p: q.p,
                    method: q.method,
                    max_iter: q.max_iter,
                    tol: q.tol,
                    resolution: q.resolution,
                    trace_output,
                }
            }
            Command::DualNorm | Command::LimitShape => {
                let q: TableParams = params(job, n)?;
                let medium = self.atomic(job, n, &q.medium)?;
                if q.mesh < 2 {
                    return Err(config_error(format!("job {n:?}: mesh must be at least 2")));
                }
                let source = NormSource { medium, method: q.method, mesh: q.mesh };
                if job.command == Command::DualNorm {
                    let points = q.points.filter(|p| !p.is_empty()).ok_or_else(|| {
                        config_error(format!("job {n:?}: points is required"))
                    })?;
                    for x in &points {
                        check_len(x, source.medium.dim(), "point", n)?;
                        check_finite(x, "point", n)?;
                    }
                    Task::DualNorm { source, points }
                } else {
                    if q.points.is_some() {
                        return Err(config_error(format!("job {n:?}: limit-shape takes no points")));
                    }
                    Task::LimitShape { source }
                }
            }
            Command::CompareDistros => {
                let q: CompareParams = params(job, n)?;
                let marginal = |c: &DistributionConfig| -> Result<MarginalSpec> {
                    c.build()
                        .and_then(|d| MarginalSpec::from_distribution(&d))
                        .map_err(|e| config_error(format!("job {n:?}: {e}")))
                };
                let (first, second) = (marginal(&q.first)?, marginal(&q.second)?);
                let seed = job.seed.unwrap_or(self.loaded.seed());
                let empirical = match q.empirical {
                    None => None,
                    Some(e) => {
                        let kind = match e.kind.as_str() {
                            "iid-undirected" => EnvironmentKind::IidUndirected,
                            "iid-edges" => EnvironmentKind::IidEdges,
                            other => return Err(config_error(format!("job {n:?}: kind {other:?} is not iid"))),
                        };
                        check_len(&e.direction, e.d, "direction", n)?;
                        check_finite(&e.direction, "direction", n)?;
                        if e.n == 0 || e.replicas == 0 {
                            return Err(config_error(format!("job {n:?}: need n > 0 and replicas > 0")));
                        }
                        let s1 = EnvironmentSpec::new(kind.clone(), e.d, first.to_distribution(), seed).ctx()?;
                        let s2 = EnvironmentSpec::new(kind, e.d, second.to_distribution(), seed).ctx()?;
                        Some((s1, s2, e.direction, e.n, e.replicas))
                    }
                };
                Task::CompareDistros { first, second, mesh: q.mesh, empirical }
            }
            Command::Validate => {
                let q: ValidateParams = params(job, n)?;
                let criteria = q.criteria.unwrap_or_else(|| (1..=9).collect());
                if let Some(bad) = criteria.iter().find(|&&c| !(1..=9).contains(&c)) {
                    return Err(config_error(format!("job {n:?}: no criterion {bad}")));
                }
                let seed = job.seed.unwrap_or(self.loaded.seed());
                Task::Validate { tolerances: self.loaded.config.tolerances.clone(), seed, criteria }
            }
        };
        if let Some(e) = job.expect {
            if !matches!(job.command, Command::EstimateM | Command::EstimateHbar | Command::SymMinimize | Command::DualNorm)
            {
                return Err(config_error(format!("job {n:?}: {} has no scalar to expect", job.command.as_str())));
            }
            if !(e.tol >= 0.0 && e.tol.is_finite() && e.value.is_finite()) {
                return Err(config_error(format!("job {n:?}: expect needs a finite value and tol >= 0")));
            }
        }
        let format = job.format.unwrap_or_else(|| job.output.as_deref().map_or(Format::JsonLines, Format::infer));
        let file = job.output.clone().unwrap_or_else(|| format!("{name}.{}", format.extension()));
        let output = self.claim(n, &file)?;
        let seed = match &task {
            Task::SimulateFpp { spec, .. }
            | Task::EstimateM { spec, .. }
            | Task::SolveStationary { spec, .. }
            | Task::SolveHorizon { spec, .. }
            | Task::HbarNumeric { spec, .. } => Some(spec.seed),
            Task::CompareDistros { empirical: Some((s, ..)), .. } => Some(s.seed),
            Task::Validate { seed, .. } => Some(*seed),
            _ => None,
        };
        Ok(Planned { name, command: job.command, seed, output, format, expect: job.expect, task })
    }
}

/// Validates every job before any of them runs.
pub fn plan(loaded: &Loaded, out_dir: &Path) -> Result<Vec<Planned>> {
    let mut planner = Planner { loaded, out_dir, paths: BTreeSet::new() };
    let mut names = BTreeSet::new();
    let mut planned = Vec::new();
    for (i, job) in loaded.config.jobs.iter().enumerate() {
        let p = planner.plan(i, job)?;
        if !names.insert(p.name.clone()) {
            return Err(config_error(format!("duplicate job name {:?}", p.name)));
        }
        planned.push(p);
    }
    Ok(planned)
}

fn torus(spec: &EnvironmentSpec, size: &[i64]) -> Result<EnvironmentWindow> {
    sample_window(spec, BoxShape::from_extents(size.to_vec()).ctx()?, Topology::Torus).ctx()
}

fn norm_table(src: &NormSource) -> Result<NormTable> {
    let mesh = direction_mesh(src.medium.dim(), PI / src.mesh as f64).ctx()?;
    let m = &src.medium;
    match src.method {
        SymMethod::Algorithm => {
            let h = |p: &[f64]| run_algorithm(m, p, DEFAULT_MAX_ITER, DEFAULT_TOL).map(|r| r.hbar);
            NormTable::from_evaluator(mesh, &h, DEFAULT_TOL, "algorithm").ctx()
        }
        SymMethod::BruteForce => {
            let h = |p: &[f64]| brute_force_hbar(m, p, 1e-13).map(|r| r.hbar);
            NormTable::from_evaluator(mesh, &h, 1e-9, "brute-force").ctx()
        }
    }
}

fn atomic_hbar(medium: &AtomicMedium, p: &[f64], method: SymMethod, resolution: f64) -> Result<f64> {
    Ok(match method {
        SymMethod::Algorithm => run_algorithm(medium, p, DEFAULT_MAX_ITER, DEFAULT_TOL).ctx()?.hbar,
        SymMethod::BruteForce => brute_force_hbar(medium, p, resolution).ctx()?.hbar,
    })
}

impl Planned {
    pub fn run(&self) -> Result<JobResult> {
        let mut out = self.execute()?;
        if let Some(e) = self.expect {
            let key = match self.command {
                Command::EstimateM => "m",
                Command::DualNorm => "value",
                _ => "hbar",
            };
            for r in &out.records {
                let got = r.get(key).and_then(Value::as_f64);
                if !got.is_some_and(|g| (g - e.value).abs() <= e.tol) {
                    out.failures.push(format!("{key} = {got:?}, expected {} +- {}", e.value, e.tol));
                }
            }
        }
        Ok(out)
    }

    fn execute(&self) -> Result<JobResult> {
        let mut out = JobResult::default();
        match &self.task {
            Task::SimulateFpp { spec, radius, source, targets } => {
                let env = sample_window(spec, BoxShape::centered(source, *radius).ctx()?, Topology::OpenBox).ctx()?;
                let map = first_passage_times(&env, source).ctx()?;
                let points: Vec<Vec<i64>> = match targets {
                    Some(t) => t.clone(),
                    None => env.shape().iter().collect(),
                };
                for y in points {
                    out.records.push(Record::new().with("x", y.as_slice()).with("time", map.time(&y)));
                }
            }
            Task::EstimateM { spec, directions, n, replicas, replicas_output } => {
                let mut detail = Vec::new();
                for dir in directions {
                    let est = estimate_time_constant(spec, dir, n, *replicas).ctx()?;
                    out.records.push(
                        Record::new()
                            .with("direction", dir.as_slice())
                            .with("n", *est.n_values.last().unwrap())
                            .with("replicas", *replicas)
                            .with("seed", spec.seed)
                            .with("m", est.value())
                            .with("std_err", est.estimate.std_err)
                            .with("half_width", est.half_width()),
                    );
                    for (k, &nk) in est.n_values.iter().enumerate() {
                        for (s, &seed) in est.seeds.iter().enumerate() {
                            detail.push(
                                Record::new()
                                    .with("direction", dir.as_slice())
                                    .with("n", nk)
                                    .with("seed", seed)
                                    .with("scaled_time", est.scaled[k][s]),
                            );
                        }
                    }
                }
                if let Some(path) = replicas_output {
                    out.extras.push(Extra { path: path.clone(), format: Format::infer(&path.to_string_lossy()), records: detail });
                }
            }
            Task::SolveStationary { spec, size, p, epsilons, tol } => {
                let env = torus(spec, size)?;
                let origin = vec![0i64; spec.d];
                let rows: Vec<Record> = epsilons
                    .par_iter()
                    .map(|&eps| -> Result<Record> {
                        let field = solve_stationary(&env, p, eps, *tol).ctx()?;
                        let residual = check_hjb_residual(&field, &env).ctx()?;
                        Ok(Record::new()
                            .with("p", p.as_slice())
                            .with("epsilon", eps)
                            .with("value", -eps * field.value_at(&origin))
                            .with("residual", residual)
                            .with("fixed_point_residual", field.residual)
                            .with("sweeps", field.sweeps)
                            .with("lipschitz", field.lipschitz_norm()))
                    })
                    .collect::<Result<_>>()?;
                out.records = rows;
            }
            Task::SolveHorizon { spec, size, p, x, times, amplitude, check } => {
                let env = torus(spec, size)?;
                let shape = env.shape().clone();
                let mu0 = if *amplitude == 0.0 {
                    LatticeFunction::constant(spec.d, 0.0)
                } else {
                    let (a, seed) = (*amplitude, spec.seed);
                    LatticeFunction::from_fn(shape, true, |y| a * (2.0 * rng::uniform(seed, y, PHI_TAG) - 1.0)).ctx()?
                };
                let values = times
                    .par_iter()
                    .map(|&t| solve_finite_horizon(&env, p, x, t, &mu0))
                    .collect::<fpp_core::Result<Vec<_>>>()
                    .ctx()?;
                let report = if *check {
                    let samples: Vec<(Vec<i64>, f64)> = times.iter().map(|&t| (x.clone(), t)).collect();
                    Some(check_comparison_principle(&mu0, p, &env, &samples).ctx()?)
                } else {
                    None
                };
                for (i, v) in values.iter().enumerate() {
                    let mut r = Record::new()
                        .with("p", p.as_slice())
                        .with("x", v.x.as_slice())
                        .with("t", v.t)
                        .with("value", v.value)
                        .with("argmin", v.argmin.as_slice());
                    if let Some(rep) = &report {
                        let s = &rep.samples[i];
                        r = r.with("lower", s.lower).with("upper", s.upper);
                    }
                    out.records.push(r);
                }
                if let Some(rep) = report {
                    for &i in &rep.lower_violations {
                        out.failures.push(format!("lower comparison inequality fails at t = {}", times[i]));
                    }
                    for &i in &rep.upper_violations {
                        out.failures.push(format!("upper comparison inequality fails at t = {}", times[i]));
                    }
                }
            }
            Task::HbarNumeric { spec, size, p, method, ladder, tol } => {
                let env = torus(spec, size)?;
                let (hbar, values, label) = if *method == HbarMethod::Stationary {
                    let e = estimate_hbar_stationary(&env, p, ladder, *tol).ctx()?;
                    (e.extrapolated, e.values, "stationary")
                } else {
                    let e = estimate_hbar_horizon(&env, p, ladder).ctx()?;
                    (e.trend, e.values, "horizon")
                };
                out.records.push(
                    Record::new()
                        .with("p", p.as_slice())
                        .with("method", label)
                        .with("hbar", hbar)
                        .with("ladder", ladder.as_slice())
                        .with("values", values),
                );
            }
            Task::HbarAtomic { medium, p, method, resolution } => {
                let hbar = atomic_hbar(medium, p, *method, *resolution)?;
                out.records.push(
                    Record::new()
                        .with("p", p.as_slice())
                        .with("method", method.as_str())
                        .with("hbar", hbar)
                        .with("ladder", Vec::<f64>::new())
                        .with("values", Vec::<f64>::new()),
                );
            }
            Task::SymMinimize { medium, p, method, max_iter, tol, resolution, trace_output } => {
                let r = Record::new().with("p", p.as_slice()).with("method", method.as_str());
                let r = match method {
                    SymMethod::Algorithm => {
                        let res = run_algorithm(medium, p, *max_iter, *tol).ctx()?;
                        if let Some(path) = trace_output {
                            let rows = res
                                .trace_rows()
                                .into_iter()
                                .map(|(iter, mu0, d, sup, xi)| {
                                    Record::new().with("iter", iter).with("mu0", mu0).with("d", d).with("sup", sup).with("xi", xi)
                                })
                                .collect();
                            out.extras.push(Extra { path: path.clone(), format: Format::infer(&path.to_string_lossy()), records: rows });
                        }
                        r.with("hbar", res.hbar)
                            .with("status", res.status.as_str())
                            .with("corrector", res.is_corrector())
                            .with("iterations", res.trace.len())
                            .with("final_d", res.final_d)
                            .with("bracket_lo", res.bracket.0)
                            .with("bracket_hi", res.bracket.1)
                            .with("profile", res.profile.f.clone())
                    }
                    SymMethod::BruteForce => {
                        let bf = brute_force_hbar(medium, p, *resolution).ctx()?;
                        let (lo, hi) = infsup_bounds(&bf.profile, medium);
                        r.with("hbar", bf.hbar)
                            .with("status", if bf.certified { "certified" } else { "uncertified" })
                            .with("corrector", bf.certified)
                            .with("iterations", 0usize)
                            .with("final_d", Value::Null)
                            .with("bracket_lo", lo)
                            .with("bracket_hi", hi)
                            .with("profile", bf.profile.f.clone())
                    }
                };
                out.records.push(r);
            }
            Task::DualNorm { source, points } => {
                let table = norm_table(source)?;
                let a = source.medium.bounds().a;
                for x in points {
                    let v = dual_norm(&table, x, a).ctx()?;
                    out.records.push(
                        Record::new()
                            .with("x", x.as_slice())
                            .with("value", v.value)
                            .with("slack", v.slack)
                            .with("method", source.method.as_str())
                            .with("mesh_gap", table.mesh_gap),
                    );
                }
            }
            Task::LimitShape { source } => {
                let table = norm_table(source)?;
                let shape = limit_shape(&table).ctx()?;
                for (i, v) in shape.vertices.iter().enumerate() {
                    out.records.push(Record::new().with("index", i).with("vertex", v.as_slice()));
                }
                if !shape.is_convex() {
                    out.failures.push("limit shape is not convex".into());
                }
            }
            Task::CompareDistros { first, second, mesh, empirical } => {
                let d_kol = kolmogorov_distance(first, second, *mesh);
                let rho_star = first.rho_star().min(second.rho_star());
                let coupling = match coupling_gap_bound(first, second) {
                    Ok(c) => Some(c),
                    Err(fpp_core::Error::Unavailable(_)) => None,
                    Err(e) => return Err(e.into()),
                };
                let ab = |m: &MarginalSpec| m.support();
                let ((a1, b1), (a2, b2)) = (ab(first), ab(second));
                let bounds = |d: f64| -> Result<(f64, f64)> {
                    Ok((gap_bound_primal(b1, a1, b2, a2, d).ctx()?.value, gap_bound_dual(b1, a1, b2, a2, d).ctx()?.value))
                };
                let (primal, dual) = match &coupling {
                    Some(c) => {
                        let (p, q) = bounds(c.bound)?;
                        (Some(p), Some(q))
                    }
                    None => (None, None),
                };
                let mut r = Record::new()
                    .with("d_kol", d_kol)
                    .with("rho_star", rho_star)
                    .with("coupling_bound", coupling.as_ref().map(|c| c.bound))
                    .with("sup_gap", coupling.as_ref().map(|c| c.mesh_sup_gap))
                    .with("primal", primal)
                    .with("dual", dual)
                    .with("dual_weaker", match (primal, dual) {
                        (Some(p), Some(q)) => Value::Bool(q >= p),
                        _ => Value::Null,
                    });
                if let Some(c) = &coupling {
                    if !c.mesh_ok {
                        out.failures.push("Skorokhod sup-gap exceeds the coupling bound".into());
                    }
                }
                match empirical {
                    Some((s1, s2, x, n, reps)) => {
                        let e = empirical_gap_check(s1, s2, x, *n, *reps).ctx()?;
                        r = r
                            .with("measured", e.measured)
                            .with("gap_mean", e.gap.mean)
                            .with("gap_half_width", e.gap.half_width)
                            .with("ok", e.ok);
                        if !e.ok {
                            out.failures.push(format!(
                                "measured gap {} exceeds primal bound {} + {}",
                                e.measured, e.primal.value, e.gap.half_width
                            ));
                        }
                    }
                    None => {
                        r = r
                            .with("measured", Value::Null)
                            .with("gap_mean", Value::Null)
                            .with("gap_half_width", Value::Null)
                            .with("ok", Value::Null);
                    }
                }
                out.records.push(r);
            }
            Task::Validate { tolerances, seed, criteria } => {
                for &id in criteria {
                    let rep = run_criterion(id, tolerances, *seed).ctx()?;
                    out.console.push(rep.line());
                    let failed: Vec<String> = rep.failed().iter().map(|s| s.to_string()).collect();
                    if !rep.pass {
                        out.failures.push(format!("criterion {id} failed: {}", failed.join(", ")));
                    }
                    out.records.push(
                        Record::new()
                            .with("criterion", id as i64)
                            .with("title", rep.title)
                            .with("pass", rep.pass)
                            .with("seconds", rep.seconds)
                            .with("failed", failed),
                    );
                }
            }
        }
        Ok(out)
    }
}
