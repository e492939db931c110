use idpoint::diagnostics::{
    estimate_ad1_gap, estimate_ad2, estimate_ad3, estimate_an, estimate_an_prime, estimate_incremental_gap,
    estimate_kallenberg, ks_two_sample, poissonity_check, Clamp, Pairing,
};
use idpoint::mc::{mean_var, replicate};
use idpoint::{ArrayModel, Seed, TestFunction};
use rand_distr::{Distribution, Gamma, Poisson};

/// `∫ g dν` for `ν(x, ∞) = x^{-α}` via `t = x^{-α}`, composite Simpson on
/// `(0, lo^{-α}]` split at the images of `kinks`.
fn power_integral<G: Fn(f64) -> f64>(alpha: f64, g: G, lo: f64, kinks: &[f64]) -> f64 {
    let mut cuts: Vec<f64> = kinks.iter().filter(|k| k.is_finite() && **k >= lo).map(|k| k.powf(-alpha)).collect();
    cuts.push(0.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let steps = 20_000;
        let h = (b - a) / steps as f64;
        let eval = |t: f64| if t <= 0.0 { g(f64::INFINITY) } else { g(t.powf(-1.0 / alpha)) };
        let mut s = eval(a) + eval(b);
        for i in 1..steps {
            s += eval(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        total += s * h / 3.0;
    }
    total
}

fn iid(alpha: f64) -> ArrayModel {
    ArrayModel::IidHeavyTail { alpha }
}

fn plateau() -> TestFunction {
    TestFunction::smoothed_indicator(1.0, f64::INFINITY, 1.0, 0.05).unwrap()
}

fn laplace_mass(alpha: f64, f: &TestFunction) -> f64 {
    power_integral(alpha, |x| 1.0 - (-f.eval(x)).exp(), f.lo, &f.kinks())
}

#[test]
fn integral_helper_matches_closed_form() {
    let f = TestFunction::hat(1.0, 3.0, 1.0).unwrap();
    let v = power_integral(1.0, |x| f.eval(x), 1.0, &f.kinks());
    assert!((v - (4.0f64 / 3.0).ln()).abs() < 1e-9, "{v}");
}

#[test]
fn an_targets() {
    let model = iid(0.5);
    for c in [1.0, 4.0] {
        let e = estimate_an(&model, 1000, c, f64::INFINITY, 4000, Seed(1)).unwrap();
        let e = e.with_target(c.powf(-0.5), "n P(Z > a_n c)", 0.0);
        assert!(e.passed(), "{e:?}");
    }
}

#[test]
fn an_prime_finite_n() {
    let n = 1000;
    let e = estimate_an_prime(&iid(0.5), n, 0.25, 4000, Seed(2)).unwrap();
    // n/a_n = 1e-3 for α = 1/2
    let exact = 0.5 - 1.0 / n as f64;
    assert!(e.clone().with_target(exact, "truncated Pareto mean", 0.0).passed(), "{e:?}");
}

#[test]
fn iid_kallenberg_and_incremental_gap() {
    let (n, r) = (1000, 50);
    let f = plateau().scaled(2.0);
    let mass = laplace_mass(0.5, &f);
    let p = 1.0 - mass / n as f64;
    let k = (n / r) as f64;
    let e = estimate_kallenberg(&iid(0.5), n, r, &f, 4000, Seed(3)).unwrap();
    assert!(e.clone().with_target(k * (1.0 - p.powi(r as i32)), "i.i.d. factorization", 0.0).passed(), "{e:?}");
    let doubled = estimate_kallenberg(&iid(0.5), n, 2 * r, &f, 4000, Seed(4)).unwrap();
    assert!((doubled.estimate - e.estimate).abs() < 3.0 * (e.se.powi(2) + doubled.se.powi(2)).sqrt());

    let g = estimate_incremental_gap(&iid(0.5), n, 1, &f, Pairing::Paired, 4000, Seed(5)).unwrap();
    assert!(g.clone().with_target(mass, "n(1 - E e^{-f})", 0.0).passed(), "{g:?}");
    // a middle lag factorizes the same way for i.i.d. rows
    let g = estimate_incremental_gap(&iid(0.5), n, 5, &f, Pairing::Paired, 4000, Seed(6)).unwrap();
    assert!(g.with_target(mass * p.powi(4), "i.i.d. factorization", 0.0).passed());
}

#[test]
fn iid_ad1_gap_oracle() {
    let (n, r) = (1000, 300);
    let f = plateau();
    let p = 1.0 - laplace_mass(0.5, &f) / n as f64;
    let e = estimate_ad1_gap(&iid(0.5), n, r, &f, 20_000, Seed(7)).unwrap();
    assert_eq!(e.k, 3);
    let exact = p.powi(n as i32) - p.powi(900);
    assert!(e.gap.clone().with_target(exact, "i.i.d. factorization", 0.0).passed(), "{:?} vs {exact}", e.gap);
    assert!(e.remainder <= e.remainder_bound);
    assert!(e.gap.warnings.is_empty());
}

#[test]
fn ad2_iid_oracle_and_indicator() {
    let (n, r) = (1000, 40);
    let f = plateau();
    let mass = power_integral(0.5, |x| f.eval(x), 1.0, &f.kinks());
    let e = estimate_ad2(&iid(0.5), n, r, 1, &f, 20_000, Seed(8)).unwrap();
    let target = (r - 1) as f64 / n as f64 * mass * mass;
    assert!(e.smooth.clone().with_target(target, "independence", 0.0).passed(), "{:?}", e.smooth);
    let ind = (r - 1) as f64 / n as f64;
    assert!(e.indicator.clone().with_target(ind, "independence", 0.0).passed(), "{:?}", e.indicator);
}

#[test]
fn ad2_decays_for_moving_sums() {
    let model = ArrayModel::MDependentMovingSum { alpha: 0.7, m: 2 };
    let f = plateau();
    let values: Vec<f64> = [(500, 22), (4000, 63)]
        .iter()
        .map(|(n, r)| estimate_ad2(&model, *n, *r, 2, &f, 2000, Seed(9)).unwrap().smooth.estimate)
        .collect();
    assert!(values[1] < values[0], "{values:?}");
}

#[test]
fn incremental_gap_stabilizes_past_dependence_order() {
    let model = ArrayModel::MDependentMovingSum { alpha: 0.7, m: 2 };
    let f = plateau();
    let at = |m| estimate_incremental_gap(&model, 2000, m, &f, Pairing::Paired, 4000, Seed(10)).unwrap();
    let (three, four) = (at(3), at(4));
    assert!((three.estimate - four.estimate).abs() < 3.0 * (three.se.powi(2) + four.se.powi(2)).sqrt());
}

#[test]
fn common_random_numbers_cut_variance() {
    let models = [
        iid(0.5),
        ArrayModel::MDependentMovingSum { alpha: 0.7, m: 2 },
        ArrayModel::AssociatedGaussian { alpha: 0.8, r: 0.5 },
    ];
    let f = plateau();
    for model in &models {
        let spread = |pairing| {
            let values: Vec<f64> = (0..100u64)
                .map(|k| {
                    estimate_incremental_gap(model, 500, 3, &f, pairing, 100, Seed(1000 + k))
                        .unwrap()
                        .estimate
                })
                .collect();
            mean_var(&values).1
        };
        let (paired, unpaired) = (spread(Pairing::Paired), spread(Pairing::Unpaired));
        assert!(paired < unpaired, "{model:?}: {paired} vs {unpaired}");
    }
}

#[test]
fn ad3_examples() {
    let g = Clamp::new(0.5, 5.0).unwrap();
    let indep = ArrayModel::AssociatedGaussian { alpha: 0.8, r: 0.0 };
    let e = estimate_ad3(&indep, 1000, 1, g, 4000, Seed(11)).unwrap();
    assert!(e.clone().with_target(0.0, "independence", 0.0).passed(), "{e:?}");

    let assoc = ArrayModel::AssociatedGaussian { alpha: 0.8, r: 0.5 };
    let values: Vec<f64> = [1, 2, 4, 8]
        .iter()
        .map(|m| estimate_ad3(&assoc, 1000, *m, g, 4000, Seed(12)).unwrap().estimate)
        .collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
    assert!(values[0] > 0.0);
}

#[test]
fn ks_calibration() {
    let gamma = Gamma::new(2.0, 1.0).unwrap();
    let rejections = replicate(Seed(13), 200, |_, rng| {
        let a: Vec<f64> = (0..10_000).map(|_| gamma.sample(rng)).collect();
        let b: Vec<f64> = (0..10_000).map(|_| gamma.sample(rng)).collect();
        ks_two_sample(&a, &b, 0.05).unwrap().reject as u32
    })
    .into_iter()
    .sum::<u32>();
    // Binomial(200, 0.05): mean 10, sd ≈ 3.1
    assert!(rejections <= 20, "{rejections}");
}

#[test]
fn poissonity_calibration() {
    let pois = Poisson::new(3.0).unwrap();
    let passes = replicate(Seed(14), 100, |_, rng| {
        let counts: Vec<u64> = (0..2000).map(|_| pois.sample(rng) as u64).collect();
        poissonity_check(&counts, 0.01).unwrap().pass as u32
    })
    .into_iter()
    .sum::<u32>();
    assert!(passes >= 94, "{passes}");
}
