//! Zero-temperature last-passage percolation: point-to-point and
//! horizontal-boundary tables, increments, geodesics and coalescence.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::busemann::{characteristic_direction, DirectionParam, Model};
use crate::dp::{IncrementSet, ReverseTable, Table};
use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, Rect, RowSequence};
use crate::randfield::WeightField;
use crate::semiring::MaxPlus;

pub type ValueTable = Table<MaxPlus>;
pub type Increments = IncrementSet<MaxPlus>;

/// Differences within this absolute distance count as ties.
pub const TIE_TOL: f64 = 1e-12;

impl Table<MaxPlus> {
    /// Whether a maximizing boundary entry sits on the truncation column for
    /// some vertex right of the base column.
    pub fn argmax_touched_edge(&self) -> bool {
        self.touched_edge()
    }
}

/// `G_{base,z}` for all `z >= base` in the field window.
pub fn lpp_table(field: &WeightField, base: LatticePoint) -> Result<ValueTable> {
    Table::bulk(field, base)
}

/// Last-passage values from a horizontal boundary one level below `bulk`.
pub fn boundary_lpp_table(boundary: &RowSequence, bulk: &WeightField, base_x: i64) -> Result<ValueTable> {
    Table::with_boundary(boundary, bulk, base_x)
}

/// Horizontal and vertical increments and dual weights of a table.
pub fn increments(table: &ValueTable) -> Increments {
    table.increments()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub vertices: Vec<LatticePoint>,
    pub value: f64,
    /// Steps where both predecessors were within the tie tolerance.
    pub ties: usize,
}

/// Maximizing up-right path from `from` to `to`, recovered by backtracking.
///
/// Uses `table` when it is a bulk table based at `from`; otherwise a table
/// from `from` is built on the fly.
pub fn geodesic(table: &ValueTable, field: &WeightField, from: LatticePoint, to: LatticePoint) -> Result<GeodesicPath> {
    if !from.precedes(&to) {
        return Err(Error::Domain(format!("geodesic endpoints out of order: {from} to {to}")));
    }
    let owned;
    let t = if table.base() == from && table.mode() == crate::dp::BoundaryMode::Bulk {
        table
    } else {
        owned = lpp_table(field, from)?;
        &owned
    };
    if !t.window().contains(to) {
        return Err(Error::Domain(format!("{to} outside table window {:?}", t.window())));
    }
    let mut vertices = vec![to];
    let mut ties = 0;
    let mut z = to;
    while z != from {
        let left = (z.x > from.x).then(|| z - LatticePoint::E1);
        let down = (z.y > from.y).then(|| z - LatticePoint::E2);
        z = match (left, down) {
            (Some(l), Some(d)) => {
                let diff = t.at(l) - t.at(d);
                if diff.abs() <= TIE_TOL {
                    ties += 1;
                    d
                } else if diff > 0.0 {
                    l
                } else {
                    d
                }
            }
            (Some(l), None) => l,
            (None, Some(d)) => d,
            (None, None) => unreachable!("loop stops at the base"),
        };
        vertices.push(z);
    }
    vertices.reverse();
    Ok(GeodesicPath { vertices, value: t.at(to), ties })
}

/// Sum of field weights along a vertex path.
pub fn path_weight(field: &WeightField, vertices: &[LatticePoint]) -> f64 {
    vertices.iter().map(|&p| field.at(p)).sum()
}

/// Geodesic from `from` to the target of `rev`, following the larger reverse
/// value; ties go to `e2`. Returns the vertices and the tie count.
pub fn forward_geodesic(rev: &ReverseTable<MaxPlus>, from: LatticePoint) -> Result<(Vec<LatticePoint>, usize)> {
    let v = rev.target();
    if !from.precedes(&v) || !rev.window().contains(from) {
        return Err(Error::Domain(format!("{from} not below target {v} inside {:?}", rev.window())));
    }
    let mut path = vec![from];
    let mut ties = 0;
    let mut z = from;
    while z != v {
        let right = (z.x < v.x).then(|| z + LatticePoint::E1);
        let up = (z.y < v.y).then(|| z + LatticePoint::E2);
        z = match (right, up) {
            (Some(r), Some(u)) => {
                let diff = rev.at(r) - rev.at(u);
                if diff.abs() <= TIE_TOL {
                    ties += 1;
                    u
                } else if diff > 0.0 {
                    r
                } else {
                    u
                }
            }
            (Some(r), None) => r,
            (None, Some(u)) => u,
            (None, None) => unreachable!("loop stops at the target"),
        };
        path.push(z);
    }
    Ok((path, ties))
}

/// Finite-`N` proxy for the coalescence point of two geodesics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "point")]
pub enum Coalescence {
    At(LatticePoint),
    /// The geodesics share no vertex before the common target.
    NotCoalesced,
}

/// Target `v_N = round(t * xi)` with `t = N / |xi|_1`.
pub fn target_point(d: DirectionParam, n: u64) -> Result<LatticePoint> {
    let (xi1, xi2) = characteristic_direction(d)?;
    let t = n as f64 / (xi1 + xi2);
    Ok(LatticePoint::new((t * xi1).round() as i64, (t * xi2).round() as i64))
}

/// First common vertex of the geodesics from `x` and from `y` to `v_N`.
pub fn coalescence_point(field: &WeightField, x: LatticePoint, y: LatticePoint, rho: f64, n: u64) -> Result<Coalescence> {
    let v = target_point(DirectionParam::new(rho, Model::Cgm)?, n)?;
    let fw = field.window();
    for p in [x, y] {
        if !p.precedes(&v) || !fw.contains(p) {
            return Err(Error::Domain(format!("{p} is not below target {v} inside the field window")));
        }
    }
    if !fw.contains(v) {
        return Err(Error::Domain(format!("field window {fw:?} does not reach target {v}")));
    }
    let region = Rect::new(x.x.min(y.x), v.x, x.y.min(y.y), v.y);
    let rev = ReverseTable::<MaxPlus>::new(field, v, region)?;
    coalescence_in(&rev, x, y)
}

/// Coalescence on a precomputed reverse table.
pub fn coalescence_in(rev: &ReverseTable<MaxPlus>, x: LatticePoint, y: LatticePoint) -> Result<Coalescence> {
    let (px, _) = forward_geodesic(rev, x)?;
    let (py, _) = forward_geodesic(rev, y)?;
    let seen: HashSet<LatticePoint> = px.into_iter().collect();
    let first = py.into_iter().find(|p| seen.contains(p)).expect("both paths end at the target");
    Ok(if first == rev.target() && x != y { Coalescence::NotCoalesced } else { Coalescence::At(first) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randfield::{make_field, Law, Recipe, SeedSpec};

    fn field2x2() -> WeightField {
        WeightField::from_values(Rect::square(2), vec![1.0, 2.0, 4.0, 8.0]).unwrap()
    }

    #[test]
    fn single_vertex() {
        let f = WeightField::from_values(Rect::square(1), vec![3.5]).unwrap();
        let t = lpp_table(&f, LatticePoint::new(0, 0)).unwrap();
        assert_eq!(t.at(LatticePoint::new(0, 0)), 3.5);
    }

    #[test]
    fn two_by_two_corner() {
        let t = lpp_table(&field2x2(), LatticePoint::new(0, 0)).unwrap();
        assert_eq!(t.at(LatticePoint::new(1, 1)), 13.0);
        let inc = increments(&t);
        assert_eq!(inc.vertical.at(LatticePoint::new(1, 0)), 10.0);
        assert_eq!(inc.horizontal.at(LatticePoint::new(0, 1)), 8.0);
        // transposed layout: omega(1,0) = 4, omega(0,1) = 2
        let tr = WeightField::from_values(Rect::square(2), vec![1.0, 4.0, 2.0, 8.0]).unwrap();
        let t = lpp_table(&tr, LatticePoint::new(0, 0)).unwrap();
        assert_eq!(t.at(LatticePoint::new(1, 1)), 13.0);
        assert_eq!(increments(&t).vertical.at(LatticePoint::new(1, 0)), 8.0);
    }

    #[test]
    fn base_outside_window_is_domain_error() {
        assert!(matches!(lpp_table(&field2x2(), LatticePoint::new(5, 0)), Err(Error::Domain(_))));
    }

    #[test]
    fn boundary_example() {
        let b = RowSequence::new(0, vec![1.0, 2.0]).unwrap();
        let bulk = WeightField::from_values(Rect::new(0, 1, 1, 1), vec![3.0, 1.0]).unwrap();
        let t = boundary_lpp_table(&b, &bulk, 0).unwrap();
        assert_eq!(t.at(LatticePoint::new(0, 1)), 4.0);
        assert_eq!(t.at(LatticePoint::new(1, 1)), 5.0);
        assert_eq!(t.boundary_prefix().unwrap(), &[1.0, 3.0]);
    }

    #[test]
    fn saturated_server() {
        let b = RowSequence::new(0, vec![0.001, 0.001]).unwrap();
        let bulk = WeightField::from_values(Rect::new(0, 1, 1, 1), vec![100.0, 100.0]).unwrap();
        let t = boundary_lpp_table(&b, &bulk, 0).unwrap();
        let d = t.at(LatticePoint::new(1, 1)) - t.at(LatticePoint::new(0, 1));
        assert!((d - 100.0).abs() < 1e-12);
    }

    #[test]
    fn empty_boundary_is_domain_error() {
        let b = RowSequence::new(0, vec![]).unwrap();
        let bulk = WeightField::from_values(Rect::new(0, 1, 1, 1), vec![3.0, 1.0]).unwrap();
        assert!(matches!(boundary_lpp_table(&b, &bulk, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn prefix_telescopes_on_both_sides_of_base() {
        let b = RowSequence::new(-3, vec![1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
        let h = crate::dp::prefix::<MaxPlus>(&b, 0);
        assert_eq!(h, vec![-6.0, -4.0, 0.0, 8.0, 24.0]);
        for j in 1..h.len() {
            assert_eq!(h[j] - h[j - 1], b.entries[j]);
        }
    }

    #[test]
    fn increments_recover_table_and_telescope() {
        let f = make_field(&Recipe::uniform(Law::Exponential { rate: 1.0 }), Rect::square(8), SeedSpec::new(3, 0)).unwrap();
        let t = lpp_table(&f, LatticePoint::new(0, 0)).unwrap();
        let inc = increments(&t);
        for p in inc.dual.window().points() {
            let i = inc.horizontal.at(p);
            let j = inc.vertical.at(p);
            assert!(i > 0.0 && j > 0.0);
            assert_eq!(inc.dual.at(p), i.min(j));
        }
        let row: f64 = (0..7).map(|x| inc.horizontal.at(LatticePoint::new(x, 4))).sum();
        let direct = t.at(LatticePoint::new(7, 4)) - t.at(LatticePoint::new(0, 4));
        assert!((row - direct).abs() < 1e-9);
    }

    #[test]
    fn geodesic_value_matches_weights() {
        let f = make_field(&Recipe::uniform(Law::Exponential { rate: 1.0 }), Rect::square(6), SeedSpec::new(9, 1)).unwrap();
        let o = LatticePoint::new(0, 0);
        let t = lpp_table(&f, o).unwrap();
        let to = LatticePoint::new(5, 5);
        let g = geodesic(&t, &f, o, to).unwrap();
        assert_eq!(g.vertices.len(), 11);
        assert!((g.value - path_weight(&f, &g.vertices)).abs() < 1e-12);
        assert_eq!(g.ties, 0);
        let single = geodesic(&t, &f, to, to).unwrap();
        assert_eq!(single.vertices, vec![to]);
        assert_eq!(single.value, f.at(to));
        assert!(geodesic(&t, &f, to, o).is_err());
    }

    #[test]
    fn coalescence_of_equal_points_and_symmetry() {
        let f = make_field(&Recipe::uniform(Law::Exponential { rate: 1.0 }), Rect::new(-5, 40, -5, 40), SeedSpec::new(1, 0)).unwrap();
        let x = LatticePoint::new(0, 0);
        assert_eq!(coalescence_point(&f, x, x, 0.5, 40).unwrap(), Coalescence::At(x));
        let y = LatticePoint::new(3, -3);
        assert_eq!(
            coalescence_point(&f, x, y, 0.5, 40).unwrap(),
            coalescence_point(&f, y, x, 0.5, 40).unwrap()
        );
        assert!(coalescence_point(&f, x, y, 0.5, 400).is_err());
    }
}
