use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ufa_core::activation::{ActivationSpec, InverseStrategy};
use ufa_core::network::{
    architecture_counts, build_network, load_network, save_network, verify_reconstruction, DeltaPolicy, Routing,
    Sample, SampleSet, ShallowNetwork,
};
use ufa_core::validation::{check_hypotheses, suggest_rescale};

fn sigma_pool() -> Vec<ActivationSpec> {
    ["sigmoid", "tanh", "exp", "softplus", "identity", "scale:0.5,0.5:tanh", "scale:2.5,-0.25:sigmoid"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

fn inside(sigma: &ActivationSpec, u: f64) -> f64 {
    let r = sigma.range();
    let lo = r.lo.max(-10.0);
    let hi = r.hi.min(lo + 20.0);
    let margin = 1e-6 * (hi - lo);
    lo + margin + u * (hi - lo - 2.0 * margin)
}

fn random_task(seed: u64, n: usize, m: usize, p: usize) -> (SampleSet, Vec<ActivationSpec>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = sigma_pool();
    let sigmas: Vec<_> = (0..m).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect();
    let points = (0..p)
        .map(|_| Sample {
            x: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            y: sigmas.iter().map(|s| inside(s, rng.random_range(0.0..1.0))).collect(),
        })
        .collect();
    (SampleSet::from_points(n, m, points).unwrap(), sigmas)
}

fn outputs_at_anchors(net: &ShallowNetwork, samples: &SampleSet) -> Vec<Vec<f64>> {
    samples
        .points()
        .iter()
        .map(|s| net.forward(&s.x, Routing::AnchorExact).unwrap().outputs)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_loss_on_random_tasks(
        seed in any::<u64>(),
        n in 1usize..=5,
        m in 1usize..=5,
        p in 1usize..=200,
        bisect in any::<bool>(),
    ) {
        let (samples, sigmas) = random_task(seed, n, m, p);
        let strategy = if bisect { InverseStrategy::Bisection } else { InverseStrategy::Analytic };
        let sigmas: Vec<_> = sigmas.into_iter().map(|s| s.with_inverse_strategy(strategy)).collect();
        let g = ActivationSpec::sigmoid();
        let net = build_network(&samples, &g, &sigmas, &DeltaPolicy::Default).unwrap();
        let tol = if bisect { 1e-8 } else { 1e-9 };
        let report = verify_reconstruction(&net, &samples, tol).unwrap();
        prop_assert!(report.passed, "max residual {}", report.max_abs_residual);

        let counts = net.counts();
        prop_assert_eq!(counts, architecture_counts(n, m, samples.len()));
        prop_assert_eq!((counts.inputs, counts.hidden, counts.outputs), (n * samples.len(), samples.len(), m * samples.len()));
    }

    #[test]
    fn serialization_round_trip(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=3, p in 1usize..=40) {
        let (samples, sigmas) = random_task(seed, n, m, p);
        let net = build_network(&samples, &ActivationSpec::softplus(), &sigmas, &DeltaPolicy::Default).unwrap();
        let mut buf = Vec::new();
        save_network(&net, &mut buf).unwrap();
        let loaded = load_network(buf.as_slice()).unwrap();
        prop_assert_eq!(&loaded, &net);
        let a = verify_reconstruction(&net, &samples, 1e-9).unwrap();
        let b = verify_reconstruction(&loaded, &samples, 1e-9).unwrap();
        let bits = |r: &[f64]| r.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a.per_point_max_abs_residual), bits(&b.per_point_max_abs_residual));
    }

    #[test]
    fn nearest_anchor_at_an_anchor_picks_its_unit(seed in any::<u64>(), n in 1usize..=3, p in 1usize..=60) {
        let (samples, sigmas) = random_task(seed, n, 1, p);
        let net = build_network(&samples, &ActivationSpec::sigmoid(), &sigmas, &DeltaPolicy::Default).unwrap();
        for (i, s) in samples.points().iter().enumerate() {
            let nearest = net.forward(&s.x, Routing::NearestAnchor).unwrap();
            let exact = net.forward(&s.x, Routing::AnchorExact).unwrap();
            prop_assert_eq!(nearest.unit_index, i);
            prop_assert_eq!(&nearest, &exact);
        }
    }

    #[test]
    fn fixed_delta_leaves_anchor_outputs_unchanged(seed in any::<u64>(), n in 1usize..=4, p in 1usize..=50) {
        let (samples, sigmas) = random_task(seed, n, 2, p);
        let g = ActivationSpec::exp();
        let base = build_network(&samples, &g, &sigmas, &DeltaPolicy::Default).unwrap();
        let reference = outputs_at_anchors(&base, &samples);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let delta: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let other = build_network(&samples, &g, &sigmas, &DeltaPolicy::Fixed(delta)).unwrap();
        for (a, b) in reference.iter().zip(outputs_at_anchors(&other, &samples)) {
            for (ya, yb) in a.iter().zip(&b) {
                prop_assert!((ya - yb).abs() <= 1e-10 * ya.abs().max(1.0), "{} vs {}", ya, yb);
            }
        }
    }

    #[test]
    fn passing_check_means_build_succeeds(
        seed in any::<u64>(),
        n in 1usize..=3,
        m in 1usize..=2,
        p in 1usize..=30,
        spread in 0.5f64..3.0,
        gi in 0usize..3,
        fixed in any::<bool>(),
    ) {
        // Outputs are drawn from a window that sometimes leaves the σ ranges,
        // and identity g sometimes meets a zero preimage.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Sample> = (0..p)
            .map(|_| Sample {
                x: (0..n).map(|_| (rng.random_range(-2i32..=2) as f64) * 0.5).collect(),
                y: (0..m).map(|_| rng.random_range(-spread..spread)).collect(),
            })
            .collect();
        let Ok(samples) = SampleSet::from_points(n, m, points) else { return Ok(()) };
        let g: ActivationSpec = ["identity", "tanh", "sigmoid"][gi].parse().unwrap();
        let sigmas = vec![ActivationSpec::tanh(); m];
        let policy = if fixed { DeltaPolicy::Fixed(vec![1.0; n]) } else { DeltaPolicy::Default };
        let report = check_hypotheses(&samples, &g, &sigmas, &policy, 1001).unwrap();
        if report.overall_passed {
            if let Err(e) = build_network(&samples, &g, &sigmas, &policy) {
                prop_assert!(
                    !matches!(e.name(), "RangeViolation" | "WeightUndefined"),
                    "check passed but build failed: {}", e
                );
            }
        }
    }

    #[test]
    fn suggested_rescale_contains_outputs(
        ys in prop::collection::vec(-50.0f64..50.0, 1..40),
        si in 0usize..4,
        margin in 0.01f64..0.4,
    ) {
        let points: Vec<Sample> = ys.iter().enumerate().map(|(i, &y)| Sample { x: vec![i as f64], y: vec![y] }).collect();
        let samples = SampleSet::from_points(1, 1, points).unwrap();
        let sigma: ActivationSpec = ["sigmoid", "tanh", "exp", "softplus"][si].parse().unwrap();
        let Ok(rescaled) = suggest_rescale(&samples, 0, &sigma, margin) else {
            // Only half-bounded σ that already contain the outputs decline.
            prop_assert!(si >= 2);
            return Ok(());
        };
        let report = check_hypotheses(&samples, &ActivationSpec::sigmoid(), std::slice::from_ref(&rescaled), &DeltaPolicy::Default, 101).unwrap();
        prop_assert!(report.range_containment.passed, "{} does not contain {:?}", rescaled.name(), ys);
    }
}

#[test]
fn architecture_identity_over_random_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..1000 {
        let (n, m, p) = (rng.random_range(1..=64), rng.random_range(1..=64), rng.random_range(1..=100_000));
        let c = architecture_counts(n, m, p);
        assert_eq!((c.inputs, c.hidden, c.outputs), (n * p, p, m * p));
    }
}
