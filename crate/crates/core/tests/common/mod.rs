//! Exhaustive path-enumeration oracles shared by the integration tests.

#![allow(dead_code)]

use kpzlab::lattice::{LatticePoint, Rect};
use kpzlab::lpp::lpp_table;
use kpzlab::polymer::logz_table;
use kpzlab::randfield::{make_field, Law, Recipe, SeedSpec, Stream};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Every up-right vertex path from `from` to `to`.
pub fn all_paths(from: LatticePoint, to: LatticePoint) -> Vec<Vec<LatticePoint>> {
    fn walk(p: LatticePoint, to: LatticePoint, cur: &mut Vec<LatticePoint>, out: &mut Vec<Vec<LatticePoint>>) {
        cur.push(p);
        if p == to {
            out.push(cur.clone());
        } else {
            if p.x < to.x {
                walk(LatticePoint::new(p.x + 1, p.y), to, cur, out);
            }
            if p.y < to.y {
                walk(LatticePoint::new(p.x, p.y + 1), to, cur, out);
            }
        }
        cur.pop();
    }
    let mut out = Vec::new();
    walk(from, to, &mut Vec::new(), &mut out);
    out
}

/// Random window of at most 7x7 with a base point inside it.
pub fn random_window(rng: &mut Stream) -> (Rect, LatticePoint) {
    let mut pick = |n: u64| (rng.next_u64() % n) as i64;
    let (w, h) = (1 + pick(7), 1 + pick(7));
    let (x0, y0) = (pick(21) - 10, pick(21) - 10);
    let window = Rect::new(x0, x0 + w - 1, y0, y0 + h - 1);
    let base = LatticePoint::new(x0 + pick(w as u64), y0 + pick(h as u64));
    (window, base)
}

pub fn targets(window: Rect, base: LatticePoint) -> impl Iterator<Item = LatticePoint> {
    window.points().filter(move |p| base.precedes(p))
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite weight")
}

/// `log` of an exact positive rational, accurate to a few ulps.
fn ln_exact(q: &BigRational) -> f64 {
    let (n, d) = (q.numer(), q.denom());
    let shift = n.bits() as i64 - d.bits() as i64;
    let scaled = if shift > 0 {
        BigRational::new(n.clone(), d.clone() << shift as usize)
    } else {
        BigRational::new(n.clone() << (-shift) as usize, d.clone())
    };
    scaled.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Largest relative error of `lpp_table` against enumeration over `windows`
/// random windows with Exp(1) weights.
pub fn lpp_oracle_error(windows: u64, seed: u64) -> f64 {
    let mut rng = SeedSpec::new(seed, 0).stream(&[1]);
    let mut worst = 0.0_f64;
    for r in 0..windows {
        let (window, base) = random_window(&mut rng);
        let field = make_field(&Recipe::uniform(Law::Exponential { rate: 1.0 }), window, SeedSpec::new(seed + 1, r)).unwrap();
        let table = lpp_table(&field, base).unwrap();
        for z in targets(window, base) {
            let want = all_paths(base, z)
                .iter()
                .map(|p| p.iter().map(|&v| field.at(v)).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(rel_err(table.at(z), want));
        }
    }
    worst
}

/// Largest relative error of `logz_table` against exact rational sums over
/// `windows` random windows with inverse-gamma weights of random shape.
pub fn polymer_oracle_error(windows: u64, seed: u64) -> f64 {
    let mut rng = SeedSpec::new(seed, 0).stream(&[1]);
    let mut worst = 0.0_f64;
    for r in 0..windows {
        let (window, base) = random_window(&mut rng);
        let shape = 0.5 + 2.5 * rng.next_open01();
        let field = make_field(&Recipe::uniform(Law::InverseGamma { shape }), window, SeedSpec::new(seed + 1, r)).unwrap();
        let table = logz_table(&field, base).unwrap();
        for z in targets(window, base) {
            let mut z_exact = BigRational::zero();
            for path in all_paths(base, z) {
                z_exact += path.iter().fold(BigRational::from_integer(BigInt::from(1)), |acc, &v| acc * exact(field.at(v)));
            }
            worst = worst.max(rel_err(table.at(z), ln_exact(&z_exact)));
        }
    }
    worst
}
