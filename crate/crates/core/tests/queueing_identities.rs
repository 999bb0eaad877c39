use kpzlab::lattice::RowSequence;
use kpzlab::lpp::{boundary_lpp_table, increments};
use kpzlab::queueing::{
    default_margin, depart, dual, iterate_depart, random_rows, sojourn, verify_dual_swap, verify_iterated,
    verify_nested, verify_sojourn, QueueConfig,
};
use kpzlab::randfield::{Law, SeedSpec, WeightField};
use kpzlab::semiring::Temperature;

fn row(offset: i64, v: &[f64]) -> RowSequence {
    RowSequence::new(offset, v.to_vec()).unwrap()
}

/// Laws with strictly increasing drift parameters, slowest row first.
fn drift_laws(levels: usize, t: Temperature) -> Vec<Law> {
    (0..levels)
        .map(|m| {
            let s = 0.4 + 0.6 * m as f64 / (levels - 1).max(1) as f64;
            match t {
                Temperature::Zero => Law::Exponential { rate: s },
                Temperature::Positive => Law::InverseGamma { shape: s },
            }
        })
        .collect()
}

fn random_instance(levels: usize, width: usize, t: Temperature, seed: u64) -> (Vec<RowSequence>, QueueConfig) {
    let margin = default_margin(width, levels, t);
    let len = width + levels * margin;
    let rows = random_rows(&drift_laws(levels, t), 0, len, SeedSpec::new(seed, 0)).unwrap();
    (rows, QueueConfig::new(margin, t))
}

#[test]
fn exhaustive_two_column_oracle() {
    let a = row(0, &[1.0, 2.0]);
    let s = row(0, &[3.0, 1.0]);
    let cfg = QueueConfig::new(0, Temperature::Zero);
    // G(j, 1) = max over exit columns i <= j of sum a[0..=i] + sum s[i..=j].
    let g = |j: usize| (0..=j).map(|i| a.entries[..=i].iter().sum::<f64>() + s.entries[i..=j].iter().sum::<f64>()).fold(f64::MIN, f64::max);
    assert_eq!(depart(&a, &s, cfg).unwrap().row.get(1), Some(g(1) - g(0)));
    assert_eq!(sojourn(&a, &s, cfg).unwrap().row.get(1), Some(g(1) - 3.0));
    assert_eq!(dual(&a, &s, cfg).unwrap().row.get(1), Some(2.0_f64.min(g(0) - 1.0)));
}

#[test]
fn single_column_sojourn_is_service() {
    let cfg = QueueConfig::new(0, Temperature::Zero);
    assert_eq!(sojourn(&row(4, &[0.7]), &row(4, &[2.5]), cfg).unwrap().row, row(4, &[2.5]));
}

#[test]
fn operator_outputs_are_positive_and_dual_is_dominated() {
    for t in Temperature::BOTH {
        let (rows, cfg) = random_instance(2, 50, t, 11);
        let d = depart(&rows[0], &rows[1], cfg).unwrap().row;
        let s = sojourn(&rows[0], &rows[1], cfg).unwrap().row;
        let v = dual(&rows[0], &rows[1], cfg).unwrap().row;
        assert!(d.entries.iter().chain(&s.entries).chain(&v.entries).all(|&x| x > 0.0));
        for (j, w) in v.iter() {
            if let (Some(arrival), Some(soj)) = (rows[0].get(j), s.get(j - 1)) {
                assert!(w <= arrival * (1.0 + 1e-12) && w <= soj * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn three_rows_match_boundary_table_increments() {
    let rows = vec![
        row(0, &[5.0, 6.0, 5.0, 7.0, 5.0, 6.0]),
        row(0, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]),
        row(0, &[2.0, 1.0, 2.0, 1.0, 2.0, 1.0]),
    ];
    let cfg = QueueConfig::new(2, Temperature::Zero);
    let d = iterate_depart(&rows, cfg).unwrap();
    assert!(!d.contaminated);
    let bulk = WeightField::stack(1, &[&rows[1], &rows[2]]).unwrap();
    let table = boundary_lpp_table(&rows[0], &bulk, 0).unwrap();
    let top = increments(&table).horizontal_row(2);
    assert!(!d.row.is_empty());
    for (j, v) in d.row.iter() {
        assert_eq!(v, top.get(j).unwrap());
    }
    assert!(verify_iterated(&rows, cfg).unwrap().pass);
    assert!(verify_sojourn(&rows, cfg).unwrap().pass);
}

#[test]
fn iteration_is_recursive() {
    for t in Temperature::BOTH {
        let (rows, cfg) = random_instance(4, 30, t, 5);
        let whole = iterate_depart(&rows, cfg).unwrap();
        let inner = iterate_depart(&rows[..3], cfg).unwrap();
        let outer = depart(&inner.row, &rows[3], cfg).unwrap();
        assert_eq!(whole.row, outer.row);
    }
}

#[test]
fn hand_computed_nested_instance() {
    let rows = vec![row(0, &[1.0, 2.0, 3.0]), row(0, &[2.0, 1.0, 1.0]), row(0, &[1.0, 3.0, 1.0])];
    let r = verify_nested(&rows, 2, QueueConfig::new(0, Temperature::Zero)).unwrap();
    assert_eq!(r.max_abs_discrepancy, 0.0);
    assert_eq!(r.compared_window, (1, 2));
}

#[test]
fn nested_at_level_one_is_trivial() {
    for t in Temperature::BOTH {
        let (rows, cfg) = random_instance(2, 40, t, 3);
        let r = verify_nested(&rows, 1, cfg).unwrap();
        assert_eq!(r.max_abs_discrepancy, 0.0);
    }
}

#[test]
fn random_identities_hold_on_uncontaminated_seeds() {
    for t in Temperature::BOTH {
        let mut clean = 0;
        for seed in 0..100 {
            let (rows, cfg) = random_instance(4, 40, t, 1000 + seed);
            let reports = [
                verify_nested(&rows, 3, cfg).unwrap(),
                verify_iterated(&rows, cfg).unwrap(),
                verify_sojourn(&rows, cfg).unwrap(),
            ];
            for r in &reports {
                assert!(r.contaminated || r.pass, "{t} seed {seed}: {r:?}");
            }
            clean += reports.iter().all(|r| !r.contaminated) as usize;
        }
        eprintln!("{t}: {clean}/100 uncontaminated");
        assert!(clean >= 90, "{t}: only {clean}/100 uncontaminated seeds");
    }
}

#[test]
fn dual_swap_holds_on_uncontaminated_seeds() {
    for t in Temperature::BOTH {
        let mut clean = 0;
        for seed in 0..100 {
            let (rows, cfg) = random_instance(3, 30, t, 2000 + seed);
            let r = verify_dual_swap(&rows, 1, cfg).unwrap();
            assert!(r.contaminated || r.pass, "{t} seed {seed}: {r:?}");
            clean += !r.contaminated as usize;
        }
        eprintln!("{t}: {clean}/100 uncontaminated");
        assert!(clean >= 90, "{t}: only {clean}/100 uncontaminated seeds");
    }
}

#[test]
fn dual_swap_on_three_deterministic_rows() {
    let pattern = [
        [3.0, 4.0, 2.5, 5.0, 3.5, 4.5, 3.0, 4.0],
        [1.5, 2.0, 1.0, 2.5, 1.0, 2.0, 1.5, 1.0],
        [1.0, 0.5, 1.5, 1.0, 0.5, 1.0, 1.5, 0.5],
    ];
    let rows: Vec<RowSequence> = pattern.iter().map(|p| row(0, p)).collect();
    let r = verify_dual_swap(&rows, 1, QueueConfig::new(1, Temperature::Zero)).unwrap();
    assert_eq!(r.max_abs_discrepancy, 0.0, "{r:?}");
    // Periodic extension with room for the margin, reported width 8.
    let margin = default_margin(8, 3, Temperature::Positive);
    let len = 8 + 3 * margin;
    let long: Vec<RowSequence> = pattern.iter().map(|p| row(0, &p.iter().cycle().take(len).copied().collect::<Vec<_>>())).collect();
    for t in Temperature::BOTH {
        let r = verify_dual_swap(&long, 1, QueueConfig::new(margin, t)).unwrap();
        assert!(r.pass, "{t}: {r:?}");
        assert_eq!(r.compared_window.1 - r.compared_window.0 + 1, 8);
    }
}

#[test]
fn dual_swap_on_constant_rows_with_drift() {
    let rows = vec![row(0, &[2.0; 20]), row(0, &[1.0; 20]), row(0, &[1.0; 20])];
    let r = verify_dual_swap(&rows, 1, QueueConfig::new(4, Temperature::Zero)).unwrap();
    assert!(r.max_abs_discrepancy <= 1e-9, "{r:?}");
}

#[test]
fn deep_dual_swap() {
    for t in Temperature::BOTH {
        let (rows, cfg) = random_instance(6, 30, t, 77);
        for k in 1..=4 {
            let r = verify_dual_swap(&rows, k, cfg).unwrap();
            assert!(r.contaminated || r.pass, "{t} k={k}: {r:?}");
        }
    }
}

#[test]
fn bad_arguments_are_rejected() {
    let cfg = QueueConfig::new(0, Temperature::Zero);
    let one = vec![row(0, &[1.0, 2.0])];
    assert!(iterate_depart(&one, cfg).is_err());
    assert!(verify_dual_swap(&[row(0, &[1.0]), row(0, &[1.0])], 1, cfg).is_err());
    assert!(verify_nested(&one, 1, cfg).is_err());
}
