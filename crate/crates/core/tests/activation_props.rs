use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ufa_core::activation::{check_invertible, ActivationSpec, InverseStrategy, Interval};

fn catalogue() -> Vec<ActivationSpec> {
    [
        "sigmoid",
        "tanh",
        "identity",
        "affine:2.0,-1.0",
        "affine:-0.5,3.0",
        "exp",
        "softplus",
        "scale:0.5,0.5:tanh",
        "scale:2.5,-0.25:sigmoid",
        "scale:-3.0,1.0:softplus",
        "sigmoid@-8.0,8.0",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect()
}

// Uniform draws strictly inside the range; unbounded sides are cut at ±1e3.
fn random_in_range(spec: &ActivationSpec, rng: &mut ChaCha8Rng) -> f64 {
    let r = spec.range();
    let lo = r.lo.max(-1e3);
    let hi = r.hi.min(1e3);
    loop {
        let y = rng.random_range(lo..hi);
        if r.admits(y) {
            return y;
        }
    }
}

#[test]
fn roundtrip_through_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in catalogue() {
        for strategy in [InverseStrategy::Analytic, InverseStrategy::Bisection] {
            let spec = spec.clone().with_inverse_strategy(strategy);
            for _ in 0..1000 {
                let y = random_in_range(&spec, &mut rng);
                let x = spec.invert(y).unwrap();
                assert!(spec.domain().contains(x));
                let back = spec.eval(x).unwrap();
                assert!(
                    (back - y).abs() <= 1e-10 * y.abs().max(1.0),
                    "{}: y={y} x={x} back={back}",
                    spec.name()
                );
            }
        }
    }
}

#[test]
fn analytic_and_bisection_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for spec in catalogue() {
        for _ in 0..1000 {
            let y = random_in_range(&spec, &mut rng);
            let a = spec.invert(y).unwrap();
            let b = spec.invert_by_bisection(y).unwrap();
            assert!((a - b).abs() <= 1e-10, "{}: y={y} analytic={a} bisection={b}", spec.name());
        }
    }
}

#[test]
fn derivative_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for spec in catalogue() {
        let d = spec.domain();
        let (lo, hi) = (d.lo().max(-5.0), d.hi().min(5.0));
        for _ in 0..100 {
            let x: f64 = rng.random_range(lo..hi);
            let h = 1e-6 * x.abs().max(1.0);
            let fd = (spec.eval(x + h).unwrap() - spec.eval(x - h).unwrap()) / (2.0 * h);
            let an = spec.derivative(x).unwrap();
            assert!(
                (an - fd).abs() <= 1e-5 * an.abs(),
                "{} at {x}: analytic {an} fd {fd}",
                spec.name()
            );
        }
    }
}

proptest! {
    #[test]
    fn certificate_implies_monotone_grid(
        which in 0usize..11,
        a in -10.0f64..10.0,
        w in 0.05f64..10.0,
        grid in 2usize..400,
    ) {
        let spec = &catalogue()[which];
        let d = spec.domain();
        let lo = d.clamp(a);
        let hi = d.clamp(a + w);
        prop_assume!(lo < hi);
        let interval = Interval::new(lo, hi).unwrap();
        let report = check_invertible(spec, &interval, grid).unwrap();
        prop_assert!(interval.contains(report.worst_point));
        if report.passed {
            let values: Vec<f64> = (0..grid).map(|i| spec.eval(interval.grid_point(i, grid)).unwrap()).collect();
            let up = values.windows(2).all(|p| p[0] < p[1]);
            let down = values.windows(2).all(|p| p[0] > p[1]);
            prop_assert!(up || down, "{} on {interval} with {grid} points", spec.name());
        }
    }

    #[test]
    fn string_form_round_trips(c in -5.0f64..5.0, d in -5.0f64..5.0, lo in -50.0f64..0.0, w in 0.001f64..50.0) {
        prop_assume!(c != 0.0);
        let base = ActivationSpec::tanh().with_domain(Interval::new(lo, lo + w).unwrap()).unwrap();
        let spec = ActivationSpec::scaled(c, d, &base);
        let parsed: ActivationSpec = spec.name().parse().unwrap();
        prop_assert_eq!(parsed, spec);
    }
}
