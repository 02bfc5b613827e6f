use mbcs::boost::{run_adaboost, BoostConfig};
use mbcs::datagen::{generate_instance, FeatureDistribution, GenSpec};
use mbcs::lpmargin::{dual_value, solve_max_margin, LpStatus};
use mbcs::margin::l1_margin;
use mbcs::matrix::l1_norm;
use mbcs::oracle::{brute_force_margin, exhaustive_sign_check};
use mbcs::rng::Stream;
use mbcs::Instance;
use proptest::prelude::*;

fn gaussian(n: usize, p: usize, seed: u64) -> Instance {
    generate_instance(&GenSpec::new(n, p, 5.min(p), 0, FeatureDistribution::Gaussian).seed(seed)).unwrap()
}

fn simplex_weights(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weak_duality_sandwich(
        seed in 0u64..1_000_000,
        n in 2usize..20,
        beta in prop::collection::vec(-1.0f64..1.0, 40),
        raw in prop::collection::vec(0.01f64..1.0, 20),
    ) {
        let inst = gaussian(n, 40, seed);
        let sol = solve_max_margin(&inst).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let gamma = sol.margin;
        prop_assume!(beta.iter().any(|b| *b != 0.0));
        prop_assert!(l1_margin(&inst, &beta).unwrap() <= gamma + 1e-6);
        let w = simplex_weights(&raw[..n]);
        prop_assert!(gamma <= dual_value(&inst, &w).unwrap() + 1e-6);
    }

    #[test]
    fn solution_invariants(seed in 0u64..1_000_000, n in 1usize..40) {
        let inst = gaussian(n, 10 * n, seed);
        let sol = solve_max_margin(&inst).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        for score in inst.signed_scores(&sol.beta_hat).unwrap() {
            prop_assert!(score >= 1.0 - 1e-8);
        }
        prop_assert!((sol.margin * l1_norm(&sol.beta_hat) - 1.0).abs() <= 1e-8);
        prop_assert!(sol.dual_weights.iter().all(|w| *w >= 0.0));
        prop_assert!((sol.dual_weights.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        prop_assert!(sol.duality_gap <= 1e-6 * sol.margin.max(1.0));
        prop_assert!(exhaustive_sign_check(&inst, &sol.beta_hat).unwrap());
    }

    #[test]
    fn permutation_equivariance(seed in 0u64..1_000_000, n in 2usize..30, shuffle in any::<u64>()) {
        let inst = gaussian(n, 10 * n, seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut s = Stream::new(shuffle);
        for i in (1..n).rev() {
            order.swap(i, s.below(i as u64 + 1) as usize);
        }
        let a = solve_max_margin(&inst).unwrap();
        let b = solve_max_margin(&inst.permuted(&order).unwrap()).unwrap();
        prop_assert!((a.margin - b.margin).abs() <= 1e-9);
        for (x, y) in a.beta_hat.iter().zip(&b.beta_hat) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        for (k, &i) in order.iter().enumerate() {
            prop_assert!((b.dual_weights[k] - a.dual_weights[i]).abs() <= 1e-9);
        }
    }
}

#[test]
fn homogeneity_at_seven() {
    for seed in 0..10 {
        let inst = gaussian(25, 250, seed);
        let a = solve_max_margin(&inst).unwrap();
        let b = solve_max_margin(&inst.scaled(7.0).unwrap()).unwrap();
        assert!((b.margin - 7.0 * a.margin).abs() <= 1e-9 * b.margin);
        for (x, y) in a.beta_hat.iter().zip(&b.beta_hat) {
            assert!((y - x / 7.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn agrees_with_brute_force_in_two_dimensions() {
    let dists = [
        FeatureDistribution::Gaussian,
        FeatureDistribution::StudentT { dof: 3 },
        FeatureDistribution::Uniform,
        FeatureDistribution::Laplace,
    ];
    for seed in 0..40u64 {
        let n = 1 + (seed % 3) as usize;
        let spec = GenSpec::new(n, 2, 1 + (seed % 2) as usize, 0, dists[seed as usize % 4]).seed(seed);
        let inst = generate_instance(&spec).unwrap();
        let sol = solve_max_margin(&inst).unwrap();
        let brute = brute_force_margin(&inst, 100_000).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(brute <= sol.margin + 1e-6);
        assert!((sol.margin - brute).abs() <= 1e-3, "seed {seed}: {} vs {brute}", sol.margin);
    }
}

#[test]
fn stepsizes_dominate_rescaled_margin() {
    for seed in 0..4 {
        let inst = gaussian(30, 300, seed);
        let gamma = solve_max_margin(&inst).unwrap().margin;
        let (model, traj) = run_adaboost(&inst, &BoostConfig::new(1.0 / 6.0, 2000)).unwrap();
        let bound = gamma / model.feature_scale;
        for r in &traj.records {
            assert!(r.stepsize.abs() >= bound - 1e-12, "t={} |α|={} < {bound}", r.t, r.stepsize.abs());
        }
    }
}
