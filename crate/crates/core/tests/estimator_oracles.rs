use bhatt_core::{
    bayes_b1, bayes_b2, estimator_table, posterior_risk, posterior_update, top_eigenpair, DirichletPosterior,
    EstimatorKind, LossKind, ParticlePosterior, PosteriorMoments, ProbVector,
};
use proptest::prelude::*;

/// First component minimizing the exact posterior risk over an even grid.
fn grid_argmin(post: &DirichletPosterior, loss: LossKind, points: usize) -> f64 {
    let mut best = (0.0, f64::INFINITY);
    for i in 0..points {
        let q0 = i as f64 / (points - 1) as f64;
        let r = posterior_risk(post, &ProbVector::binary(q0).unwrap(), loss).unwrap();
        if r < best.1 {
            best = (q0, r);
        }
    }
    best.0
}

#[test]
fn bayes_estimators_minimize_posterior_risk_on_fine_grid() {
    for beta in [0.5, 1.0] {
        for n in 0..=10 {
            let post = posterior_update(beta, 10, n).unwrap();
            let b2 = bayes_b2(&post).unwrap()[0];
            let b1 = bayes_b1(&post).unwrap()[0];
            assert!((b2 - grid_argmin(&post, LossKind::OneMinusBSquared, 10_000)).abs() < 1e-3, "b2 beta={beta} n={n}");
            assert!((b1 - grid_argmin(&post, LossKind::OneMinusB, 10_000)).abs() < 1e-3, "b1 beta={beta} n={n}");
        }
    }
}

#[test]
fn multinomial_b1_beats_perturbations() {
    let post = DirichletPosterior::new(vec![1.5, 0.5, 3.0, 2.0]).unwrap();
    for (loss, est) in
        [(LossKind::OneMinusB, bayes_b1(&post).unwrap()), (LossKind::OneMinusBSquared, bayes_b2(&post).unwrap())]
    {
        let base = posterior_risk(&post, &est, loss).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let mut q = est.as_slice().to_vec();
                let d = 1e-3_f64.min(q[j]);
                q[i] += d;
                q[j] -= d;
                let r = posterior_risk(&post, &ProbVector::new(q).unwrap(), loss).unwrap();
                assert!(r >= base - 1e-15, "{loss} move {i}->{j}");
            }
        }
    }
}

#[test]
fn hedging_ordering() {
    // MLE < b2 < mean below the midpoint, reversed above it
    let (mle, mean, b2) = (
        estimator_table(EstimatorKind::Mle, 10).unwrap(),
        estimator_table(EstimatorKind::PosteriorMean { prior_beta: 1.0 }, 10).unwrap(),
        estimator_table(EstimatorKind::BayesB2 { prior_beta: 1.0 }, 10).unwrap(),
    );
    assert_eq!(mle.row(0)[0], 0.0);
    assert!(b2.row(0)[0] > 0.0 && b2.row(0)[0] < 1.0 / 12.0);
    assert!((mean.row(0)[0] - 1.0 / 12.0).abs() < 1e-15);
    assert!((b2.row(5)[0] - 0.5).abs() < 1e-12);
    let b1 = estimator_table(EstimatorKind::BayesB1 { prior_beta: 1.0 }, 10).unwrap();
    assert!((b1.row(5)[0] - 0.5).abs() < 1e-12);
}

fn particle_posterior(k: usize) -> impl Strategy<Value = ParticlePosterior> {
    (1..6usize)
        .prop_flat_map(move |m| {
            (prop::collection::vec(prop::collection::vec(0.0f64..1.0, k), m), prop::collection::vec(0.01f64..1.0, m))
        })
        .prop_filter_map("degenerate point", |(pts, w)| {
            let points = pts
                .into_iter()
                .map(|v| {
                    let s: f64 = v.iter().sum();
                    ProbVector::new(v.iter().map(|x| x / s).collect()).ok()
                })
                .collect::<Option<Vec<_>>>()?;
            ParticlePosterior::from_unnormalized(points, w).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn estimates_lie_in_the_simplex(post in (2..=8usize).prop_flat_map(particle_posterior)) {
        for est in [bayes_b1(&post).unwrap(), bayes_b2(&post).unwrap(), post.posterior_mean()] {
            let s: f64 = est.as_slice().iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-14, "sum {}", s);
            prop_assert!(est.as_slice().iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn dirichlet_estimates_lie_in_the_simplex(alpha in prop::collection::vec(0.05f64..30.0, 2..=8)) {
        let post = DirichletPosterior::new(alpha).unwrap();
        for est in [bayes_b1(&post).unwrap(), bayes_b2(&post).unwrap()] {
            let s: f64 = est.as_slice().iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-14);
            prop_assert!(est.as_slice().iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn perron_vector_is_nonnegative_with_small_residual(post in (2..=8usize).prop_flat_map(particle_posterior)) {
        let m = post.moment_matrix();
        let k = m.dim();
        let top = top_eigenpair(m.as_slice(), k).unwrap();
        prop_assert!(top.vector.iter().all(|x| *x >= 0.0), "{:?}", top.vector);
        let norm: f64 = top.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        for i in 0..k {
            let mv: f64 = (0..k).map(|j| m.get(i, j) * top.vector[j]).sum();
            prop_assert!((mv - top.value * top.vector[i]).abs() <= 1e-11);
        }
    }

    #[test]
    fn bayes_b2_is_never_beaten_by_b1_under_its_loss(alpha in prop::collection::vec(0.05f64..30.0, 2..=5)) {
        let post = DirichletPosterior::new(alpha).unwrap();
        let (b1, b2) = (bayes_b1(&post).unwrap(), bayes_b2(&post).unwrap());
        let r = |q: &ProbVector, l| posterior_risk(&post, q, l).unwrap();
        prop_assert!(r(&b2, LossKind::OneMinusBSquared) <= r(&b1, LossKind::OneMinusBSquared) + 1e-13);
        prop_assert!(r(&b1, LossKind::OneMinusB) <= r(&b2, LossKind::OneMinusB) + 1e-13);
        prop_assert!(r(&b2, LossKind::OneMinusBSquared) <= r(&post.posterior_mean(), LossKind::OneMinusBSquared) + 1e-13);
    }
}
