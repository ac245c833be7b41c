//! Lattice geometry: signed unit directions and rectangular boxes of Z^d.

use crate::error::{config_err, Result};

/// Largest dimension supported by the fixed-size coordinate buffers.
pub const MAX_DIM: usize = 6;

/// Stack buffer for one lattice point; only the first `d` entries are used.
pub type Coord = [i64; MAX_DIM];

/// A signed unit vector `±e_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction {
    pub axis: usize,
    pub positive: bool,
}

impl Direction {
    pub fn plus(axis: usize) -> Self {
        Direction { axis, positive: true }
    }

    pub fn minus(axis: usize) -> Self {
        Direction { axis, positive: false }
    }

    pub fn negate(self) -> Self {
        Direction { axis: self.axis, positive: !self.positive }
    }

    pub fn sign(self) -> i64 {
        if self.positive {
            1
        } else {
            -1
        }
    }

    /// Dense index in `0..2d`: `+e_i -> i`, `-e_i -> d + i`.
    pub fn index(self, d: usize) -> usize {
        if self.positive {
            self.axis
        } else {
            d + self.axis
        }
    }

    pub fn from_index(index: usize, d: usize) -> Self {
        if index < d {
            Direction::plus(index)
        } else {
            Direction::minus(index - d)
        }
    }

    /// `p · α`.
    pub fn dot(self, p: &[f64]) -> f64 {
        if self.positive {
            p[self.axis]
        } else {
            -p[self.axis]
        }
    }

    /// Parses the signed-axis notation used in CSV tables: `+1`, `-2`, `1`.
    pub fn parse(s: &str, d: usize) -> Result<Self> {
        let s = s.trim();
        let (positive, digits) = match s.as_bytes().first() {
            Some(b'+') => (true, &s[1..]),
            Some(b'-') => (false, &s[1..]),
            _ => (true, s),
        };
        let axis: usize = match digits.parse() {
            Ok(a) => a,
            Err(_) => return config_err(format!("bad direction {s:?}")),
        };
        if axis == 0 || axis > d {
            return config_err(format!("direction {s:?} out of range for d = {d}"));
        }
        Ok(Direction { axis: axis - 1, positive })
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", if self.positive { '+' } else { '-' }, self.axis + 1)
    }
}

/// The 2d control directions `A = {±e_1, …, ±e_d}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionSet {
    d: usize,
}

impl DirectionSet {
    pub fn new(d: usize) -> Self {
        DirectionSet { d }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        2 * self.d
    }

    pub fn is_empty(&self) -> bool {
        self.d == 0
    }

    /// All 2d directions in dense-index order.
    pub fn all(&self) -> impl Iterator<Item = Direction> + '_ {
        (0..2 * self.d).map(move |k| Direction::from_index(k, self.d))
    }

    /// `A_+ = {e_1, …, e_d}`.
    pub fn positive(&self) -> impl Iterator<Item = Direction> + '_ {
        (0..self.d).map(Direction::plus)
    }
}

/// Rectangular box `[lo_i, lo_i + extent_i)` with row-major linear indexing.
///
/// Linear order agrees with lexicographic order of coordinates, which the
/// shortest-path code relies on for deterministic tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoxShape {
    lo: Vec<i64>,
    extents: Vec<i64>,
    strides: Vec<usize>,
    len: usize,
}

impl BoxShape {
    pub fn new(lo: Vec<i64>, extents: Vec<i64>) -> Result<Self> {
        if lo.len() != extents.len() || lo.is_empty() {
            return config_err("box corner and extents must have the same nonzero length");
        }
        if lo.len() > MAX_DIM {
            return config_err(format!("dimension {} exceeds the supported maximum {MAX_DIM}", lo.len()));
        }
        if extents.iter().any(|&e| e < 1) {
            return config_err(format!("box extents must be >= 1, got {extents:?}"));
        }
        let d = lo.len();
        let mut strides = vec![0usize; d];
        let mut acc = 1usize;
        for i in (0..d).rev() {
            strides[i] = acc;
            acc = acc
                .checked_mul(extents[i] as usize)
                .ok_or_else(|| crate::Error::Config("box too large".into()))?;
        }
        Ok(BoxShape { lo, extents, strides, len: acc })
    }

    /// Box `[0, extent_i)`.
    pub fn from_extents(extents: Vec<i64>) -> Result<Self> {
        BoxShape::new(vec![0; extents.len()], extents)
    }

    /// Cube of l∞ radius `r` around `center`.
    pub fn centered(center: &[i64], r: i64) -> Result<Self> {
        BoxShape::new(center.iter().map(|c| c - r).collect(), vec![2 * r + 1; center.len()])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn extents(&self) -> &[i64] {
        &self.extents
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.extents))
            .all(|(&c, (&l, &e))| c >= l && c < l + e)
    }

    /// Whether `x` lies on the outer face of the box.
    pub fn on_boundary(&self, x: &[i64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.extents))
            .any(|(&c, (&l, &e))| c == l || c == l + e - 1)
    }

    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        Some(
            x.iter()
                .zip(&self.lo)
                .zip(&self.strides)
                .map(|((&c, &l), &s)| (c - l) as usize * s)
                .sum(),
        )
    }

    /// Writes the coordinates of linear index `idx` into `out[..d]`.
    pub fn coord_into(&self, mut idx: usize, out: &mut Coord) {
        for i in 0..self.dim() {
            let q = idx / self.strides[i];
            idx -= q * self.strides[i];
            out[i] = self.lo[i] + q as i64;
        }
    }

    pub fn coord_of(&self, idx: usize) -> Vec<i64> {
        let mut c = [0i64; MAX_DIM];
        self.coord_into(idx, &mut c);
        c[..self.dim()].to_vec()
    }

    /// Linear index of the neighbour `x + α`, if it is inside the box.
    pub fn neighbor(&self, idx: usize, coord: &[i64], dir: Direction) -> Option<usize> {
        let i = dir.axis;
        let c = coord[i] + dir.sign();
        if c < self.lo[i] || c >= self.lo[i] + self.extents[i] {
            return None;
        }
        Some(if dir.positive { idx + self.strides[i] } else { idx - self.strides[i] })
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len).map(move |i| self.coord_of(i))
    }
}

/// Coordinatewise reduction of `x` into `[0, extent)`.
pub fn wrap_into(x: &[i64], extents: &[i64], out: &mut Coord) {
    for i in 0..x.len() {
        out[i] = x[i].rem_euclid(extents[i]);
    }
}

pub fn l1_norm(x: &[i64]) -> i64 {
    x.iter().map(|c| c.abs()).sum()
}

pub fn l1_norm_f(x: &[f64]) -> f64 {
    x.iter().map(|c| c.abs()).sum()
}

pub fn linf_norm_f(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, c| m.max(c.abs()))
}

pub fn dot(p: &[f64], x: &[i64]) -> f64 {
    p.iter().zip(x).map(|(a, &b)| a * b as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_index_roundtrip() {
        for d in 1..4 {
            for k in 0..2 * d {
                assert_eq!(Direction::from_index(k, d).index(d), k);
            }
        }
        assert_eq!(Direction::parse("-2", 3).unwrap(), Direction::minus(1));
        assert_eq!(Direction::parse("1", 3).unwrap(), Direction::plus(0));
        assert!(Direction::parse("4", 3).is_err());
        assert_eq!(Direction::minus(1).to_string(), "-2");
    }

    #[test]
    fn direction_set_is_closed_under_negation() {
        let set = DirectionSet::new(3);
        let all: Vec<_> = set.all().collect();
        assert_eq!(all.len(), 6);
        for d in &all {
            assert!(all.contains(&d.negate()));
        }
        assert_eq!(set.positive().count(), 3);
    }

    #[test]
    fn box_indexing_is_lexicographic() {
        let b = BoxShape::new(vec![-1, -2], vec![3, 4]).unwrap();
        let mut prev: Option<Vec<i64>> = None;
        for i in 0..b.len() {
            let c = b.coord_of(i);
            assert_eq!(b.index_of(&c), Some(i));
            if let Some(p) = prev {
                assert!(p < c);
            }
            prev = Some(c);
        }
        assert_eq!(b.index_of(&[2, 0]), None);
        assert!(BoxShape::from_extents(vec![0, 2]).is_err());
    }
}
