use hgsim::analysis::{estimate_factorial_gn, estimate_gn, statistical_efficiency, Bootstrap};
use hgsim::lightmodel::{poissonize, sample_ensemble};
use hgsim::nonlinear::{apply_absorber, apply_attenuator, harmonic_yields, split_counts};
use hgsim::rng::pulse_rng;
use hgsim::LightModel;
use proptest::prelude::*;

fn boot() -> Bootstrap {
    Bootstrap::default().with_seed(7, 0x6000)
}

#[test]
fn absorber_sweep_lowers_g2_monotonically() {
    let mean = 1e4;
    let base = sample_ensemble(&LightModel::bsv(mean).unwrap(), 200_000, 1, 1).unwrap();
    let mut previous = f64::INFINITY;
    for x in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let mut e = base.clone();
        apply_absorber(&mut e, x / mean).unwrap();
        let g = estimate_gn(&e.totals(), 2, &boot()).unwrap().value;
        assert!(g < previous, "kappa <N> = {x}: {g} !< {previous}");
        previous = g;
    }
}

#[test]
fn bsv_second_harmonic_efficiency() {
    let eta = 1e-6;
    let e = sample_ensemble(&LightModel::bsv(1e3).unwrap(), 1_000_000, 2, 1).unwrap();
    let sh = harmonic_yields(&e, 2, eta).unwrap();
    let xi = statistical_efficiency(&sh, &e.totals(), 2, &boot()).unwrap().scaled(1.0 / eta);
    assert!(xi.within(3.0, 3.0), "{xi:?}");
}

#[test]
fn binomial_tap_preserves_factorial_moments() {
    let e = sample_ensemble(&LightModel::thermal(1e5).unwrap(), 1_000_000, 3, 1).unwrap();
    let counts = poissonize(&e, 1.0, 3, 2).unwrap();
    let tapped: Vec<u64> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| split_counts(c, 0.006, &mut pulse_rng(3, 9, i as u64)).unwrap().0)
        .collect();
    let g = estimate_factorial_gn(&tapped, 2, &boot()).unwrap();
    assert!(g.within(2.0, 3.0), "{g:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn attenuation_leaves_gn_unchanged(seed in 0u64..1000, r in 0.0f64..=1.0, t in 1e-3f64..=1.0, n in 1u32..=4) {
        let base = sample_ensemble(&LightModel::gaussian(100.0, r).unwrap(), 500, seed, 1).unwrap();
        let mut att = base.clone();
        apply_attenuator(&mut att, t).unwrap();
        let b = Bootstrap { resamples: 0, ..boot() };
        let g0 = estimate_gn(&base.totals(), n, &b).unwrap().value;
        let g1 = estimate_gn(&att.totals(), n, &b).unwrap().value;
        prop_assert!((g0 - g1).abs() <= 1e-12 * g0);
    }
}
