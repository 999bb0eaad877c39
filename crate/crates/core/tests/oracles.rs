mod common;

use std::time::Instant;

use kpzlab::lattice::{LatticePoint, Rect};
use kpzlab::lpp::lpp_table;
use kpzlab::randfield::{digamma, make_field, trigamma, Law, Recipe, SeedSpec};
use kpzlab::stats::kolmogorov_sf;

use common::{lpp_oracle_error, polymer_oracle_error};

#[test]
fn lpp_matches_enumeration() {
    let start = Instant::now();
    let worst = lpp_oracle_error(100, 31);
    assert!(worst <= 1e-12, "max relative error {worst:e}");
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn polymer_matches_exact_rational_enumeration() {
    let start = Instant::now();
    let worst = polymer_oracle_error(100, 33);
    assert!(worst <= 1e-10, "max relative error {worst:e}");
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn single_site_and_line_windows() {
    let field = make_field(&Recipe::uniform(Law::Exponential { rate: 1.0 }), Rect::new(0, 4, 0, 0), SeedSpec::new(1, 0)).unwrap();
    let table = lpp_table(&field, LatticePoint::new(0, 0)).unwrap();
    let sum: f64 = (0..=4).map(|x| field.at(LatticePoint::new(x, 0))).sum();
    assert!((table.at(LatticePoint::new(4, 0)) - sum).abs() <= 1e-12 * sum);
    assert_eq!(table.at(LatticePoint::new(0, 0)), field.at(LatticePoint::new(0, 0)));
}

// Reference values from mpmath at 30 digits.
const DIGAMMA: &[(f64, f64)] = &[
    (0.05, -20.497844991299869257),
    (0.3, -3.5025242222001331249),
    (0.5, -1.9635100260214234794),
    (1.0, -0.57721566490153286061),
    (1.7, 0.20854787487349392145),
    (3.25, 1.0169909110681790364),
    (10.0, 2.2517525890667211076),
    (42.0, 3.7257176179372821503),
];

const TRIGAMMA: &[(f64, f64)] = &[
    (0.05, 401.53235734211507489),
    (0.3, 12.245364546107731301),
    (0.5, 4.9348022005446793094),
    (1.0, 1.6449340668482264365),
    (1.7, 0.79323283016399840877),
    (3.25, 0.35979829030957987507),
    (10.0, 0.10516633568168574612),
    (42.0, 0.024095219843670564148),
];

/// `P(X <= x)` for `X ~ Ga^-1(shape)`.
const INVERSE_GAMMA_CDF: &[(f64, f64, f64)] = &[
    (0.7, 0.5, 0.076252852707898355851),
    (0.7, 2.0, 0.44248470712281134664),
    (0.3, 10.0, 0.45408715040820350354),
    (2.5, 0.25, 0.15623562757772232746),
];

const KOLMOGOROV_SF: &[(f64, f64)] = &[
    (0.5, 0.96394524366487509439),
    (0.8, 0.54414241157419807674),
    (1.0, 0.2699996716773545212),
    (1.2, 0.11224966667072498483),
    (1.36, 0.04948587675537788364),
    (1.63, 0.009846364888486531251),
    (2.0, 0.00067092525577969534654),
];

#[test]
fn digamma_and_trigamma_match_reference() {
    for &(x, want) in DIGAMMA {
        assert!((digamma(x) - want).abs() <= 1e-14 * want.abs().max(1.0), "digamma({x})");
    }
    for &(x, want) in TRIGAMMA {
        assert!((trigamma(x) - want).abs() <= 1e-14 * want.abs(), "trigamma({x})");
    }
}

#[test]
fn inverse_gamma_cdf_matches_reference() {
    for &(shape, x, want) in INVERSE_GAMMA_CDF {
        let got = Law::InverseGamma { shape }.cdf(x).unwrap();
        assert!((got - want).abs() <= 1e-12, "shape {shape} at {x}: {got} vs {want}");
    }
}

#[test]
fn kolmogorov_tail_matches_reference() {
    for &(l, want) in KOLMOGOROV_SF {
        let got = kolmogorov_sf(l);
        assert!((got - want).abs() <= 1e-12, "lambda {l}: {got} vs {want}");
    }
}
