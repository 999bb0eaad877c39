use kpzlab::lattice::{LatticePoint, Rect};
use kpzlab::lpp::lpp_table;
use kpzlab::polymer::logz_table;
use kpzlab::randfield::WeightField;
use kpzlab::semiring::{logaddexp, LogSumExp, Semiring};
use proptest::prelude::*;

fn weights() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..6, 1usize..6).prop_flat_map(|(w, h)| (Just(w), Just(h), prop::collection::vec(0.01f64..5.0, w * h)))
}

fn field(w: usize, h: usize, values: Vec<f64>) -> WeightField {
    WeightField::from_values(Rect::new(0, w as i64 - 1, 0, h as i64 - 1), values).unwrap()
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

proptest! {
    #[test]
    fn logaddexp_is_a_smooth_maximum(a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let s = logaddexp(a, b);
        prop_assert_eq!(s, logaddexp(b, a));
        prop_assert!(s >= a.max(b));
        prop_assert!(s <= a.max(b) + std::f64::consts::LN_2 + 1e-12);
    }

    #[test]
    fn shares_stay_between_their_inputs(a in -30.0f64..30.0, b in -30.0f64..30.0, sa in 0.0f64..=1.0, sb in 0.0f64..=1.0) {
        let (total, share) = LogSumExp::plus_share(a, b, sa, sb);
        prop_assert!((total - logaddexp(a, b)).abs() <= 1e-12 * total.abs().max(1.0));
        prop_assert!(share >= sa.min(sb) - 1e-15 && share <= sa.max(sb) + 1e-15);
    }

    #[test]
    fn lpp_satisfies_the_recursion((w, h, values) in weights()) {
        let f = field(w, h, values);
        let t = lpp_table(&f, LatticePoint::new(0, 0)).unwrap();
        for p in f.window().points() {
            let prev = [(p.x > 0).then(|| t.at(LatticePoint::new(p.x - 1, p.y))), (p.y > 0).then(|| t.at(LatticePoint::new(p.x, p.y - 1)))];
            let best = prev.into_iter().flatten().fold(0.0, f64::max);
            prop_assert!((t.at(p) - (f.at(p) + best)).abs() <= 1e-12 * t.at(p));
        }
    }

    #[test]
    fn lpp_is_positively_homogeneous((w, h, values) in weights(), c in 0.1f64..10.0) {
        let f = field(w, h, values);
        let scaled = f.map(|v| c * v).unwrap();
        let end = LatticePoint::new(w as i64 - 1, h as i64 - 1);
        let a = lpp_table(&f, LatticePoint::new(0, 0)).unwrap().at(end);
        let b = lpp_table(&scaled, LatticePoint::new(0, 0)).unwrap().at(end);
        prop_assert!((b - c * a).abs() <= 1e-12 * b);
    }

    #[test]
    fn free_energy_is_bracketed_by_the_best_path((w, h, values) in weights()) {
        let f = field(w, h, values.iter().map(|v| 1.0 + v).collect());
        let logs = f.map(f64::ln).unwrap();
        let end = LatticePoint::new(w as i64 - 1, h as i64 - 1);
        let logz = logz_table(&f, LatticePoint::new(0, 0)).unwrap().at(end);
        let best = lpp_table(&logs, LatticePoint::new(0, 0)).unwrap().at(end);
        let paths = ln_binomial((w + h - 2) as u64, (w - 1) as u64);
        prop_assert!(logz >= best - 1e-12 * best.abs().max(1.0));
        prop_assert!(logz <= best + paths + 1e-12 * best.abs().max(1.0));
    }
}
