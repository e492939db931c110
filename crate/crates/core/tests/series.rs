use idpoint::levy::{Extrapolation, TabulatedTail};
use idpoint::mc::{iid_estimate, mean_var, replicate};
use idpoint::series::{
    fk_path, poisson_arrivals, StopReason, TimeLaw,
};
use idpoint::diagnostics::hill_tail_index;
use idpoint::{FkSampler, LevyMeasure, Seed, Truncation};
use num_complex::Complex;

fn sums(sampler: &FkSampler, replicates: usize, seed: Seed) -> Vec<f64> {
    replicate(seed, replicates, |_, rng| sampler.sum(rng).unwrap())
}

#[test]
fn arrival_moments() {
    let ten: Vec<f64> = replicate(Seed(10), 100_000, |_, rng| *poisson_arrivals::<f64, _>(rng, 10).last().unwrap());
    assert!(iid_estimate(&ten).within(10.0, 3.0));
    let one: Vec<f64> = replicate(Seed(11), 100_000, |_, rng| poisson_arrivals::<f64, _>(rng, 1)[0]);
    let (m, v) = mean_var(&one);
    assert!((m - 1.0).abs() < 0.01 && (v - 1.0).abs() < 0.03, "{m} {v}");
}

#[test]
fn gamma_two_matches_gamma_law() {
    use statrs::distribution::{ContinuousCDF, Gamma};
    let m = LevyMeasure::gamma(2.0).unwrap();
    let s = FkSampler::new(&m, Truncation::default()).unwrap();
    let x = sums(&s, 100_000, Seed(20));
    let law = Gamma::new(2.0, 1.0).unwrap();
    let ks = idpoint::diagnostics::ks_one_sample(&x, |t| law.cdf(t), 0.01).unwrap();
    assert!(ks.statistic < 0.01, "{ks:?}");
    assert!(iid_estimate(&x).within(2.0, 3.0));
}

#[test]
fn finite_measure_gives_poisson_number_of_jumps() {
    // H = 1 on (0, 1], linear down to 0 at 2: total mass 1 spread over (1, 2)
    let table = TabulatedTail::new(vec![1.0, 2.0, 3.0], vec![1.0, 0.0, 0.0])
        .unwrap()
        .with_extrapolation(Extrapolation::Constant, Extrapolation::Constant)
        .unwrap();
    let m = LevyMeasure::tabulated(table).unwrap();
    let s = FkSampler::new(&m, Truncation::default()).unwrap();
    let counts: Vec<f64> = replicate(Seed(30), 50_000, |_, rng| {
        let p = s.points(rng).unwrap();
        assert_eq!(p.stop, StopReason::Exhausted);
        assert!(p.points.iter().all(|u| (1.0..=2.0).contains(u)));
        p.points.len() as f64
    });
    let (mean, var) = mean_var(&counts);
    assert!((mean - 1.0).abs() < 0.02 && (var - 1.0).abs() < 0.04, "{mean} {var}");

    // direct construction: Poisson(1) many uniforms on (1, 2)
    let direct: Vec<f64> = replicate(Seed(31), 50_000, |_, rng| {
        let arrivals = poisson_arrivals::<f64, _>(rng, 20);
        arrivals.iter().take_while(|g| **g < 1.0).count() as f64
    });
    let ks = idpoint::diagnostics::ks_two_sample(&counts, &direct, 0.01).unwrap();
    assert!(!ks.reject, "{ks:?}");
}

#[test]
fn empty_measure_sums_to_zero() {
    let table = TabulatedTail::new(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
    let m = LevyMeasure::tabulated(table).unwrap();
    let s = FkSampler::new(&m, Truncation::default()).unwrap();
    assert!(sums(&s, 100, Seed(1)).iter().all(|x| *x == 0.0));
}

#[test]
fn stable_tail_index() {
    let m = LevyMeasure::stable(0.7, 1.0).unwrap();
    let trunc = Truncation {
        max_terms: 1000,
        ..Truncation::default()
    };
    let s = FkSampler::new(&m, trunc).unwrap();
    let x = sums(&s, 100_000, Seed(40));
    let h = hill_tail_index(&x, 0.01).unwrap();
    assert!((0.6..=0.8).contains(&h), "{h}");
}

#[test]
fn stable_points_nonincreasing() {
    let m = LevyMeasure::stable(0.5, 1.0).unwrap();
    let s = FkSampler::new(&m, Truncation::default()).unwrap();
    replicate(Seed(41), 200, |_, rng| {
        let p = s.points(rng).unwrap();
        assert!(p.points.windows(2).all(|w| w[1] <= w[0]));
        assert!(p.truncation_bound >= 0.0);
    });
}

#[test]
fn path_halfway_mean_and_additivity() {
    let m = LevyMeasure::gamma(1.5).unwrap();
    let trunc = Truncation::default();
    let pairs: Vec<(f64, f64)> = replicate(Seed(50), 50_000, |r, _| {
        let p = fk_path(&m, TimeLaw::Uniform, Seed(50).derive(r), trunc).unwrap();
        let half = p.value(0.5);
        let one = p.value(1.0);
        assert!((half + p.increment(0.5, 1.0) - one).abs() <= 1e-12 * one.max(1.0));
        let grid = p.grid(16);
        assert!(grid.windows(2).all(|w| w[1].1 >= w[0].1));
        (half, one)
    });
    let diff: Vec<f64> = pairs.iter().map(|(h, o)| h - 0.5 * o).collect();
    assert!(iid_estimate(&diff).within(0.0, 3.0));

    let p = fk_path(&m, TimeLaw::PointMass { at: 1.0 }, Seed(51), trunc).unwrap();
    assert_eq!(p.value(0.999), 0.0);
    let total: f64 = p.sizes.iter().sum();
    assert_eq!(p.value(1.0), total);
}

#[test]
fn centered_stable_half_recovers_plain_mean() {
    let m = LevyMeasure::stable(0.5, 1.0).unwrap();
    // light truncation keeps the variance of the sum finite
    let trunc = Truncation {
        max_terms: 2000,
        ..Truncation::default()
    };
    let plain = FkSampler::new(&m, trunc).unwrap();
    let centered = FkSampler::centered(&m, trunc).unwrap();
    let gamma = m.centering_total().unwrap();
    let retained = centered.centering_sum().unwrap();
    assert!(retained < gamma && gamma - retained < 0.01);
    // on a shared stream the two sums differ by the retained centering only
    replicate(Seed(60), 2000, |_, rng| {
        let mut other = rng.clone();
        let x = plain.sum(rng).unwrap();
        let y = centered.centered_sum(&mut other).unwrap();
        assert!((x - y - retained).abs() <= 1e-9 * x.max(1.0));
    });

    // truncated plain sums and centered sums plus γ share a mean
    let x: Vec<f64> = replicate(Seed(61), 20_000, |_, rng| plain.sum(rng).unwrap().min(1e3));
    let y: Vec<f64> = replicate(Seed(62), 20_000, |_, rng| (centered.centered_sum(rng).unwrap() + gamma).min(1e3));
    let (ex, ey) = (iid_estimate(&x), iid_estimate(&y));
    assert!((ex.mean - ey.mean).abs() <= 3.0 * (ex.se.powi(2) + ey.se.powi(2)).sqrt());
}

#[test]
fn centered_cauchy_regime_stabilizes() {
    // α = 1.5: plain sums diverge, centered partial sums converge in L²
    let m = LevyMeasure::stable(1.5, 1.0).unwrap();
    assert!(FkSampler::new(&m, Truncation::default()).is_err());
    let at = |terms: usize| -> Vec<f64> {
        let s = FkSampler::centered(
            &m,
            Truncation {
                max_terms: terms,
                point_floor: 0.0,
                compensate: false,
            },
        )
        .unwrap();
        replicate(Seed(70), 4000, |_, rng| s.centered_sum(rng).unwrap())
    };
    let runs: Vec<Vec<f64>> = [100, 1000, 2000].iter().map(|t| at(*t)).collect();
    assert!(runs.iter().flatten().all(|x| x.is_finite()));
    let increment_var = |a: &[f64], b: &[f64]| {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        mean_var(&d).1
    };
    // U_i = Γ_i^{-2/3}; linearizing in Γ_i - i gives
    // Var(Σ_{N1<i≤N2} U_i) ≈ Σ_j (Σ_{i≥j, N1<i≤N2} (2/3) i^{-5/3})²
    let linearized = |n1: usize, n2: usize| -> f64 {
        let a: Vec<f64> = (n1 + 1..=n2).map(|i| 2.0 / 3.0 * (i as f64).powf(-5.0 / 3.0)).collect();
        let total: f64 = a.iter().sum();
        let mut tail = total;
        let mut var = n1 as f64 * total * total;
        for v in &a {
            var += tail * tail;
            tail -= v;
        }
        var
    };
    let v1 = increment_var(&runs[0], &runs[1]);
    let v2 = increment_var(&runs[1], &runs[2]);
    let t1 = linearized(100, 1000);
    assert!((v1 - t1).abs() < 0.1 * t1, "{v1} vs {t1}");
    assert!(v2 < v1);
    let t2 = linearized(1000, 2000);
    assert!((v2 - t2).abs() < 0.1 * t2, "{v2} vs {t2}");
}

#[test]
fn empirical_characteristic_function() {
    let m = LevyMeasure::gamma(1.5).unwrap();
    let s = FkSampler::new(&m, Truncation::default()).unwrap();
    let x = sums(&s, 100_000, Seed(80));
    for u in [0.5, 1.0, 2.0] {
        let re: Vec<f64> = x.iter().map(|v| (u * v).cos()).collect();
        let im: Vec<f64> = x.iter().map(|v| (u * v).sin()).collect();
        let phi: Complex<f64> = idpoint::series::id_char_function(&m, u).unwrap();
        assert!(phi.norm() <= 1.0 + 1e-12);
        assert!(iid_estimate(&re).within(phi.re, 3.5), "u={u}");
        assert!(iid_estimate(&im).within(phi.im, 3.5), "u={u}");
    }
}

#[test]
fn tighter_floor_retains_more_mass() {
    let m = LevyMeasure::gamma(1.0).unwrap();
    for r in 0..50u64 {
        let mut last = 0.0;
        for floor in [1e-2, 1e-4, 1e-8] {
            let s = FkSampler::new(
                &m,
                Truncation {
                    point_floor: floor,
                    ..Truncation::default()
                },
            )
            .unwrap();
            let total = s.sum(&mut Seed(90).stream(r)).unwrap();
            assert!(total >= last);
            last = total;
        }
    }
}
