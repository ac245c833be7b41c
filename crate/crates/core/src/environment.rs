//! Random edge-weight environments `τ(x, α)` served on finite windows.
//!
//! A window is a lazily-evaluated view: weights are recomputed from the
//! counter-based stream on every query, so a window costs O(1) memory and
//! windows of different sizes agree wherever they overlap.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::lattice::{wrap_into, BoxShape, Coord, Direction, DirectionSet, MAX_DIM};
use crate::rng;

const SITE_TAG: u64 = 0x5173;
const AXIS_TAG: u64 = 0xA000;
const EDGE_TAG: u64 = 0xE000;

/// Essential bounds `0 < a <= τ <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsSpec {
    pub a: f64,
    pub b: f64,
}

impl BoundsSpec {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let s = BoundsSpec { a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a <= self.b && self.b.is_finite()) {
            return config_err(format!("bounds must satisfy 0 < a <= b < inf, got [{}, {}]", self.a, self.b));
        }
        Ok(())
    }

    pub fn contains(&self, w: f64) -> bool {
        w >= self.a && w <= self.b
    }

    /// `b / a`.
    pub fn ratio(&self) -> f64 {
        self.b / self.a
    }
}

/// Piecewise-linear CDF given by knots `(x_k, F(x_k))`.
///
/// `x` is strictly increasing, `F` nondecreasing from 0 to 1. A flat
/// segment is allowed; a jump is not (use atoms for that).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCdf {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseCdf {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return config_err("a tabulated CDF needs at least two knots");
        }
        let first = knots[0].1;
        let last = knots[knots.len() - 1].1;
        if first.abs() > 1e-12 || (last - 1.0).abs() > 1e-12 {
            return config_err("tabulated CDF must start at 0 and end at 1");
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) || w[1].1 < w[0].1 {
                return config_err("tabulated CDF knots must have increasing x and nondecreasing F");
            }
        }
        Ok(PiecewiseCdf { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return 0.0;
        }
        if x >= k[k.len() - 1].0 {
            return 1.0;
        }
        let j = k.partition_point(|&(kx, _)| kx <= x);
        let (x0, f0) = k[j - 1];
        let (x1, f1) = k[j];
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }

    /// Generalized inverse `inf {x : F(x) >= u}`, clamped to the support.
    pub fn inverse(&self, u: f64) -> f64 {
        let k = &self.knots;
        if u <= 0.0 {
            return k[0].0;
        }
        if u >= 1.0 {
            // smallest x with F(x) = 1
            let j = k.partition_point(|&(_, f)| f < 1.0);
            return k[j.min(k.len() - 1)].0;
        }
        let j = k.partition_point(|&(_, f)| f < u);
        let (x0, f0) = k[j - 1];
        let (x1, f1) = k[j];
        if f1 == f0 {
            return x1;
        }
        x0 + (x1 - x0) * (u - f0) / (f1 - f0)
    }

    /// Smallest slope over the support, `min_k ΔF/Δx`.
    pub fn density_floor(&self) -> f64 {
        self.knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Law of the edge weights at one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightDistribution {
    /// Finite atoms. Each atom is a weight vector over the positive
    /// directions; a length-1 atom is broadcast to all axes.
    Atoms { values: Vec<Vec<f64>>, probs: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
    InverseCdf(PiecewiseCdf),
}

impl WeightDistribution {
    pub fn constant(c: f64) -> Self {
        WeightDistribution::Atoms { values: vec![vec![c]], probs: vec![1.0] }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            WeightDistribution::Atoms { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return config_err("atom values and probabilities must be nonempty and of equal length");
                }
                if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return config_err("atom probabilities must lie in [0, 1]");
                }
                let s: f64 = probs.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return config_err(format!("atom probabilities sum to {s}, not 1"));
                }
                for v in values {
                    if v.len() != 1 && v.len() != d {
                        return config_err(format!("atom {v:?} must have length 1 or d = {d}"));
                    }
                    if v.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
                        return config_err(format!("atom {v:?} has a non-positive weight"));
                    }
                }
            }
            WeightDistribution::Uniform { lo, hi } => {
                if !(*lo > 0.0 && lo < hi && hi.is_finite()) {
                    return config_err(format!("uniform[{lo}, {hi}] needs 0 < lo < hi"));
                }
            }
            WeightDistribution::InverseCdf(cdf) => {
                if cdf.knots()[0].0 <= 0.0 {
                    return config_err("tabulated support must be positive");
                }
            }
        }
        Ok(())
    }

    /// Support bounds, counting only atoms with positive probability.
    pub fn bounds(&self) -> BoundsSpec {
        match self {
            WeightDistribution::Atoms { values, probs } => {
                let mut a = f64::INFINITY;
                let mut b = f64::NEG_INFINITY;
                for (v, &p) in values.iter().zip(probs) {
                    if p > 0.0 {
                        for &w in v {
                            a = a.min(w);
                            b = b.max(w);
                        }
                    }
                }
                BoundsSpec { a, b }
            }
            WeightDistribution::Uniform { lo, hi } => BoundsSpec { a: *lo, b: *hi },
            WeightDistribution::InverseCdf(cdf) => {
                let k = cdf.knots();
                BoundsSpec { a: k[0].0, b: k[k.len() - 1].0 }
            }
        }
    }

    /// Index of the atom selected by a uniform draw (generalized inverse CDF).
    pub fn atom_index(probs: &[f64], u: f64) -> usize {
        let mut acc = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc && p > 0.0 {
                return i;
            }
        }
        probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    /// Weight of atom `i` along `axis`.
    pub fn atom_component(values: &[Vec<f64>], i: usize, axis: usize) -> f64 {
        let v = &values[i];
        if v.len() == 1 {
            v[0]
        } else {
            v[axis]
        }
    }

    /// Scalar inverse CDF; for atoms the first component of the chosen atom.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match self {
            WeightDistribution::Atoms { values, probs } => {
                Self::atom_component(values, Self::atom_index(probs, u), 0)
            }
            WeightDistribution::Uniform { lo, hi } => lo + u * (hi - lo),
            WeightDistribution::InverseCdf(cdf) => cdf.inverse(u),
        }
    }

    fn sample_site(&self, seed: u64, site: &[i64], axis: usize) -> f64 {
        match self {
            WeightDistribution::Atoms { values, probs } => {
                let i = Self::atom_index(probs, rng::uniform(seed, site, SITE_TAG));
                Self::atom_component(values, i, axis)
            }
            _ => self.inverse_cdf(rng::uniform(seed, site, AXIS_TAG + axis as u64)),
        }
    }

    fn sample_edge(&self, seed: u64, cell: &[i64], dir_index: usize, axis: usize) -> f64 {
        let u = rng::uniform(seed, cell, EDGE_TAG + dir_index as u64);
        match self {
            WeightDistribution::Atoms { values, probs } => {
                Self::atom_component(values, Self::atom_index(probs, u), axis)
            }
            _ => self.inverse_cdf(u),
        }
    }
}

/// Explicit directed weight table over a box; missing edges are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitTable {
    shape: BoxShape,
    values: Vec<f64>,
    declared: Option<BoundsSpec>,
}

impl ExplicitTable {
    /// Table with every edge set to `NaN`.
    pub fn empty(shape: BoxShape) -> Self {
        let n = shape.len() * 2 * shape.dim();
        ExplicitTable { shape, values: vec![f64::NAN; n], declared: None }
    }

    /// Undirected table filled from `f(x, α)` for every edge whose endpoints are
    /// both inside `shape`; `f` is evaluated once per undirected edge.
    pub fn undirected_from_fn(shape: BoxShape, mut f: impl FnMut(&[i64], Direction) -> f64) -> Self {
        let mut t = ExplicitTable::empty(shape);
        let d = t.shape.dim();
        for idx in 0..t.shape.len() {
            let x = t.shape.coord_of(idx);
            for axis in 0..d {
                let dir = Direction::plus(axis);
                let mut y = x.clone();
                y[axis] += 1;
                if t.shape.contains(&y) {
                    let w = f(&x, dir);
                    t.set(&x, dir, w).expect("inside");
                    t.set(&y, dir.negate(), w).expect("inside");
                }
            }
        }
        t
    }

    pub fn with_bounds(mut self, bounds: BoundsSpec) -> Self {
        self.declared = Some(bounds);
        self
    }

    pub fn shape(&self) -> &BoxShape {
        &self.shape
    }

    pub fn set(&mut self, x: &[i64], dir: Direction, w: f64) -> Result<()> {
        let d = self.shape.dim();
        let idx = self.shape.index_of(x).ok_or_else(|| Error::OutOfWindow {
            point: x.to_vec(),
            direction: dir.to_string(),
        })?;
        self.values[idx * 2 * d + dir.index(d)] = w;
        Ok(())
    }

    pub fn get(&self, x: &[i64], dir: Direction) -> Option<f64> {
        let d = self.shape.dim();
        let idx = self.shape.index_of(x)?;
        let w = self.values[idx * 2 * d + dir.index(d)];
        (!w.is_nan()).then_some(w)
    }

    pub fn bounds(&self) -> BoundsSpec {
        if let Some(b) = self.declared {
            return b;
        }
        let (a, b) = self
            .values
            .iter()
            .filter(|w| !w.is_nan())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &w| (a.min(w), b.max(w)));
        BoundsSpec { a, b }
    }

    /// Reads `x1,..,xd,direction,weight` rows. Each row also fills the
    /// reverse edge when that edge is not listed explicitly.
    pub fn from_csv_reader<R: std::io::Read>(reader: R, d: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let mut rows: Vec<(Vec<i64>, Direction, f64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != d + 2 {
                return config_err(format!("expected {} columns, found {}", d + 2, rec.len()));
            }
            let mut x = Vec::with_capacity(d);
            for i in 0..d {
                x.push(rec[i].parse::<i64>().map_err(|e| Error::Config(format!("coordinate {:?}: {e}", &rec[i])))?);
            }
            let dir = Direction::parse(&rec[d], d)?;
            let w: f64 = rec[d + 1].parse().map_err(|e| Error::Config(format!("weight {:?}: {e}", &rec[d + 1])))?;
            rows.push((x, dir, w));
        }
        if rows.is_empty() {
            return config_err("explicit table has no rows");
        }
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for (x, dir, _) in &rows {
            for i in 0..d {
                let end = x[i] + if i == dir.axis { dir.sign() } else { 0 };
                lo[i] = lo[i].min(x[i]).min(end);
                hi[i] = hi[i].max(x[i]).max(end);
            }
        }
        let shape = BoxShape::new(lo.clone(), lo.iter().zip(&hi).map(|(l, h)| h - l + 1).collect())?;
        let mut t = ExplicitTable::empty(shape);
        for (x, dir, w) in &rows {
            t.set(x, *dir, *w)?;
        }
        for (x, dir, w) in &rows {
            let mut y = x.clone();
            y[dir.axis] += dir.sign();
            if t.get(&y, dir.negate()).is_none() {
                t.set(&y, dir.negate(), *w)?;
            }
        }
        Ok(t)
    }

    pub fn from_csv_path(path: &Path, d: usize) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(f, d)
    }
}

/// How weights are laid out in space.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvironmentKind {
    /// Every directed edge `(x, α)` drawn independently.
    IidEdges,
    /// Independent sites, undirected: `τ(x, α) = τ(x + α, -α)`.
    IidUndirected,
    /// Undirected, constant on each hyperplane `Σ x_i = z`.
    HyperplaneSymmetric,
    /// Undirected, with the site law repeated with the given period per axis.
    Periodic(Vec<i64>),
    Explicit(Arc<ExplicitTable>),
}

/// Full description of a random medium.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    pub kind: EnvironmentKind,
    pub d: usize,
    pub distribution: WeightDistribution,
    pub seed: u64,
}

impl EnvironmentSpec {
    pub fn new(kind: EnvironmentKind, d: usize, distribution: WeightDistribution, seed: u64) -> Result<Self> {
        let s = EnvironmentSpec { kind, d, distribution, seed };
        s.validate()?;
        Ok(s)
    }

    /// `τ ≡ c`.
    pub fn constant(d: usize, c: f64) -> Result<Self> {
        EnvironmentSpec::new(EnvironmentKind::IidUndirected, d, WeightDistribution::constant(c), 0)
    }

    pub fn explicit(table: ExplicitTable) -> Result<Self> {
        let d = table.shape().dim();
        let b = table.bounds();
        let dist = WeightDistribution::Uniform { lo: b.a, hi: b.b.max(b.a * (1.0 + 1e-12)) };
        Ok(EnvironmentSpec { kind: EnvironmentKind::Explicit(Arc::new(table)), d, distribution: dist, seed: 0 })
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > MAX_DIM {
            return config_err(format!("dimension must be in 1..={MAX_DIM}, got {}", self.d));
        }
        match &self.kind {
            EnvironmentKind::Explicit(t) => {
                if t.shape().dim() != self.d {
                    return config_err("explicit table dimension does not match d");
                }
                return Ok(());
            }
            EnvironmentKind::Periodic(period) => {
                if period.len() != self.d || period.iter().any(|&p| p < 1) {
                    return config_err(format!("period {period:?} must have d = {} entries >= 1", self.d));
                }
            }
            _ => {}
        }
        self.distribution.validate(self.d)?;
        self.bounds().validate()
    }

    pub fn bounds(&self) -> BoundsSpec {
        match &self.kind {
            EnvironmentKind::Explicit(t) => t.bounds(),
            _ => self.distribution.bounds(),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        EnvironmentSpec { seed, ..self.clone() }
    }

    pub fn directions(&self) -> DirectionSet {
        DirectionSet::new(self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    OpenBox,
    Torus,
}

/// Immutable view of an environment on a box or torus.
#[derive(Debug, Clone)]
pub struct EnvironmentWindow {
    spec: Arc<EnvironmentSpec>,
    shape: BoxShape,
    topology: Topology,
}

/// Outcome of [`verify_bounds`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub min_seen: f64,
    pub max_seen: f64,
    pub ok: bool,
}

/// Builds the window `(spec, box, topology)`.
pub fn sample_window(spec: &EnvironmentSpec, shape: BoxShape, topology: Topology) -> Result<EnvironmentWindow> {
    spec.validate()?;
    if shape.dim() != spec.d {
        return config_err(format!("box dimension {} does not match spec dimension {}", shape.dim(), spec.d));
    }
    if topology == Topology::Torus {
        let ext = shape.extents();
        match &spec.kind {
            EnvironmentKind::HyperplaneSymmetric if ext.iter().any(|&e| e != ext[0]) => {
                return config_err("a hyperplane-symmetric torus needs equal extents");
            }
            EnvironmentKind::Periodic(period) if ext.iter().zip(period).any(|(e, p)| e % p != 0) => {
                return config_err(format!("torus extents {ext:?} must be multiples of the period {period:?}"));
            }
            EnvironmentKind::Explicit(t) if t.shape() != &shape => {
                return config_err("an explicit torus must cover exactly the table box");
            }
            _ => {}
        }
    }
    Ok(EnvironmentWindow { spec: Arc::new(spec.clone()), shape, topology })
}

impl EnvironmentWindow {
    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    pub fn shape(&self) -> &BoxShape {
        &self.shape
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn dim(&self) -> usize {
        self.spec.d
    }

    pub fn bounds(&self) -> BoundsSpec {
        self.spec.bounds()
    }

    /// `τ(x, α)`; on a torus `x` may be any point of Z^d.
    pub fn weight(&self, x: &[i64], dir: Direction) -> Result<f64> {
        if x.len() != self.dim() || dir.axis >= self.dim() {
            return config_err("point or direction has the wrong dimension");
        }
        if self.topology == Topology::OpenBox {
            let mut y = [0i64; MAX_DIM];
            y[..x.len()].copy_from_slice(x);
            y[dir.axis] += dir.sign();
            if !self.shape.contains(x) || !self.shape.contains(&y[..x.len()]) {
                return Err(Error::OutOfWindow { point: x.to_vec(), direction: dir.to_string() });
            }
        }
        let w = self.weight_unchecked(x, dir);
        if w.is_nan() {
            return Err(Error::OutOfWindow { point: x.to_vec(), direction: dir.to_string() });
        }
        Ok(w)
    }

    /// `τ(x, α)` without the open-box check. Missing explicit entries give `NaN`.
    #[inline]
    pub fn weight_unchecked(&self, x: &[i64], dir: Direction) -> f64 {
        let d = self.dim();
        let mut cell: Coord = [0; MAX_DIM];
        match self.topology {
            Topology::Torus => {
                let lo = self.shape.lo();
                for i in 0..d {
                    cell[i] = lo[i] + (x[i] - lo[i]).rem_euclid(self.shape.extents()[i]);
                }
            }
            Topology::OpenBox => cell[..d].copy_from_slice(x),
        }
        let spec = &*self.spec;
        match &spec.kind {
            EnvironmentKind::Explicit(t) => t.get(&cell[..d], dir).unwrap_or(f64::NAN),
            EnvironmentKind::IidEdges => spec.distribution.sample_edge(spec.seed, &cell[..d], dir.index(d), dir.axis),
            kind => {
                // Undirected kinds: the edge (x, -e_i) is owned by x - e_i.
                if !dir.positive {
                    cell[dir.axis] -= 1;
                    if self.topology == Topology::Torus {
                        let i = dir.axis;
                        let lo = self.shape.lo()[i];
                        cell[i] = lo + (cell[i] - lo).rem_euclid(self.shape.extents()[i]);
                    }
                }
                match kind {
                    EnvironmentKind::IidUndirected => spec.distribution.sample_site(spec.seed, &cell[..d], dir.axis),
                    EnvironmentKind::Periodic(period) => {
                        let mut base: Coord = [0; MAX_DIM];
                        wrap_into(&cell[..d], period, &mut base);
                        spec.distribution.sample_site(spec.seed, &base[..d], dir.axis)
                    }
                    EnvironmentKind::HyperplaneSymmetric => {
                        let mut z: i64 = cell[..d].iter().sum();
                        if self.topology == Topology::Torus {
                            let lo: i64 = self.shape.lo().iter().sum();
                            z = (z - lo).rem_euclid(self.shape.extents()[0]);
                        }
                        spec.distribution.sample_site(spec.seed, &[z], dir.axis)
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    /// Every directed edge of the window, as `(x, α)` pairs.
    pub fn edges(&self) -> impl Iterator<Item = (Vec<i64>, Direction)> + '_ {
        let dirs = DirectionSet::new(self.dim());
        self.shape.iter().flat_map(move |x| {
            let x2 = x.clone();
            dirs.all()
                .filter(move |&dir| {
                    if self.topology == Topology::Torus {
                        return true;
                    }
                    let mut y = x2.clone();
                    y[dir.axis] += dir.sign();
                    self.shape.contains(&y)
                })
                .map(move |dir| (x.clone(), dir))
                .collect::<Vec<_>>()
        })
    }
}

/// Scans every edge of the window and checks it against the spec bounds.
pub fn verify_bounds(env: &EnvironmentWindow) -> BoundsReport {
    let bounds = env.bounds();
    let mut min_seen = f64::INFINITY;
    let mut max_seen = f64::NEG_INFINITY;
    let mut ok = bounds.a > 0.0 && bounds.a <= bounds.b;
    for (x, dir) in env.edges() {
        let w = env.weight_unchecked(&x, dir);
        if w.is_nan() {
            ok = false;
            continue;
        }
        min_seen = min_seen.min(w);
        max_seen = max_seen.max(w);
        if !bounds.contains(w) {
            ok = false;
        }
    }
    BoundsReport { min_seen, max_seen, ok }
}

/// Serialized form of [`WeightDistribution`] used in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionConfig {
    Constant { value: f64 },
    Atoms { values: Vec<Vec<f64>>, probs: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
    InverseCdf { knots: Vec<(f64, f64)> },
}

impl DistributionConfig {
    pub fn build(&self) -> Result<WeightDistribution> {
        Ok(match self {
            DistributionConfig::Constant { value } => WeightDistribution::constant(*value),
            DistributionConfig::Atoms { values, probs } => {
                WeightDistribution::Atoms { values: values.clone(), probs: probs.clone() }
            }
            DistributionConfig::Uniform { lo, hi } => WeightDistribution::Uniform { lo: *lo, hi: *hi },
            DistributionConfig::InverseCdf { knots } => WeightDistribution::InverseCdf(PiecewiseCdf::new(knots.clone())?),
        })
    }
}

/// Serialized form of [`EnvironmentSpec`] used in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub kind: String,
    pub d: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub distribution: Option<DistributionConfig>,
    #[serde(default)]
    pub period: Option<Vec<i64>>,
    /// CSV path for explicit media, relative to the config file.
    #[serde(default)]
    pub table: Option<String>,
    #[serde(default)]
    pub bounds: Option<(f64, f64)>,
}

impl EnvironmentConfig {
    pub fn build(&self, base_dir: &Path, default_seed: u64) -> Result<EnvironmentSpec> {
        let seed = self.seed.unwrap_or(default_seed);
        if self.kind == "explicit" {
            let Some(table) = &self.table else {
                return config_err("explicit medium needs a `table` path");
            };
            let mut t = ExplicitTable::from_csv_path(&base_dir.join(table), self.d)?;
            if let Some((a, b)) = self.bounds {
                t = t.with_bounds(BoundsSpec::new(a, b)?);
            }
            return EnvironmentSpec::explicit(t);
        }
        let Some(dist) = &self.distribution else {
            return config_err(format!("medium of kind {:?} needs a distribution", self.kind));
        };
        let dist = dist.build()?;
        let kind = match self.kind.as_str() {
            "iid-edges" => EnvironmentKind::IidEdges,
            "iid-undirected" => EnvironmentKind::IidUndirected,
            "hyperplane-symmetric" => EnvironmentKind::HyperplaneSymmetric,
            "periodic" => {
                let period = match &self.period {
                    Some(p) if p.len() == 1 => vec![p[0]; self.d],
                    Some(p) => p.clone(),
                    None => return config_err("periodic medium needs `period`"),
                };
                EnvironmentKind::Periodic(period)
            }
            other => return config_err(format!("unknown medium kind {other:?}")),
        };
        EnvironmentSpec::new(kind, self.d, dist, seed)
    }
}
