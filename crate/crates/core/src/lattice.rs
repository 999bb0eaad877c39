//! Lattice primitives shared by every model: points, rectangular windows and
//! windowed rows standing in for bi-infinite sequences.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
}

impl LatticePoint {
    pub const E1: LatticePoint = LatticePoint { x: 1, y: 0 };
    pub const E2: LatticePoint = LatticePoint { x: 0, y: 1 };

    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    /// Coordinatewise order `self <= other`.
    pub fn precedes(&self, other: &LatticePoint) -> bool {
        self.x <= other.x && self.y <= other.y
    }

    pub fn l1(&self) -> i64 {
        self.x.abs() + self.y.abs()
    }
}

impl Add for LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Inclusive integer rectangle `[x0..=x1] x [y0..=y1]`. Empty when `x1 < x0`
/// or `y1 < y0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: i64,
    pub x1: i64,
    pub y0: i64,
    pub y1: i64,
}

impl Rect {
    pub const fn new(x0: i64, x1: i64, y0: i64, y1: i64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    /// Square `[0..=side-1]^2`.
    pub const fn square(side: i64) -> Self {
        Self::new(0, side - 1, 0, side - 1)
    }

    pub fn width(&self) -> usize {
        if self.x1 < self.x0 {
            0
        } else {
            (self.x1 - self.x0 + 1) as usize
        }
    }

    pub fn height(&self) -> usize {
        if self.y1 < self.y0 {
            0
        } else {
            (self.y1 - self.y0 + 1) as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.width() == 0 || self.height() == 0
    }

    pub fn len(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// Row-major index of `p`; caller guarantees containment.
    #[inline]
    pub fn index(&self, p: LatticePoint) -> usize {
        (p.y - self.y0) as usize * self.width() + (p.x - self.x0) as usize
    }

    pub fn intersect(&self, other: &Rect) -> Rect {
        Rect::new(
            self.x0.max(other.x0),
            self.x1.min(other.x1),
            self.y0.max(other.y0),
            self.y1.min(other.y1),
        )
    }

    pub fn points(&self) -> impl Iterator<Item = LatticePoint> {
        let Rect { x0, x1, y0, y1 } = *self;
        (y0..=y1).flat_map(move |y| (x0..=x1).map(move |x| LatticePoint::new(x, y)))
    }
}

/// Finite window of a bi-infinite positive sequence; `entries[i]` sits at
/// index `offset + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowSequence {
    pub offset: i64,
    pub entries: Vec<f64>,
}

impl RowSequence {
    pub fn new(offset: i64, entries: Vec<f64>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Input(format!("row entries must be finite and positive, got {bad}")));
        }
        Ok(Self { offset, entries })
    }

    /// Constructs without the positivity check; used for rows computed from
    /// tables whose positivity already follows from the weights.
    pub(crate) fn from_raw(offset: i64, entries: Vec<f64>) -> Self {
        Self { offset, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// First index in the window.
    pub fn start(&self) -> i64 {
        self.offset
    }

    /// Last index in the window (inclusive); `start - 1` when empty.
    pub fn end(&self) -> i64 {
        self.offset + self.entries.len() as i64 - 1
    }

    pub fn get(&self, j: i64) -> Option<f64> {
        if j < self.offset {
            return None;
        }
        self.entries.get((j - self.offset) as usize).copied()
    }

    /// Restriction to `[lo..=hi]` intersected with the window.
    pub fn restrict(&self, lo: i64, hi: i64) -> RowSequence {
        let lo = lo.max(self.start());
        let hi = hi.min(self.end());
        if hi < lo {
            return RowSequence::from_raw(lo, Vec::new());
        }
        let a = (lo - self.offset) as usize;
        let b = (hi - self.offset) as usize;
        RowSequence::from_raw(lo, self.entries[a..=b].to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.entries.iter().enumerate().map(move |(i, v)| (self.offset + i as i64, *v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_indexing_is_row_major() {
        let r = Rect::new(-2, 1, 3, 4);
        assert_eq!(r.width(), 4);
        assert_eq!(r.height(), 2);
        assert_eq!(r.index(LatticePoint::new(-2, 3)), 0);
        assert_eq!(r.index(LatticePoint::new(1, 3)), 3);
        assert_eq!(r.index(LatticePoint::new(-2, 4)), 4);
        assert_eq!(r.points().count(), 8);
    }

    #[test]
    fn empty_rect() {
        assert!(Rect::new(0, -1, 0, 5).is_empty());
        assert_eq!(Rect::new(0, -1, 0, 5).len(), 0);
    }

    #[test]
    fn row_rejects_nonpositive() {
        assert!(RowSequence::new(0, vec![1.0, 0.0]).is_err());
        assert!(RowSequence::new(0, vec![1.0, f64::NAN]).is_err());
        let r = RowSequence::new(-3, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.end(), -1);
        assert_eq!(r.get(-2), Some(2.0));
        assert_eq!(r.get(0), None);
        assert_eq!(r.restrict(-2, 10).entries, vec![2.0, 3.0]);
    }
}
