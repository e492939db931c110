use idpoint::cluster::{cluster_sample, laplace_mc, laplace_mc_bank, poisson_sample, sum_points, ClusterLaw};
use idpoint::diagnostics::{ks_two_sample, poissonity_check};
use idpoint::mc::{iid_estimate, mean_var, replicate, variance_se};
use idpoint::testfn::standard_bank;
use idpoint::{ClusterModel, MarkDistribution, ProcessModel, ProductModel, RadonIntensity, Seed, TestFunction};

fn power(alpha: f64) -> RadonIntensity {
    RadonIntensity::power_tail(alpha).unwrap()
}

#[test]
fn poisson_counts_and_disjoint_windows() {
    let nu = power(1.0);
    let counts: Vec<(f64, f64, f64)> = replicate(Seed(1), 100_000, |_, rng| {
        let c = poisson_sample(&nu, 1.0, rng).unwrap();
        (c.len() as f64, c.count(1.0, 2.0) as f64, c.count(2.0, f64::INFINITY) as f64)
    });
    let total: Vec<f64> = counts.iter().map(|c| c.0).collect();
    let (mean, var) = mean_var(&total);
    assert!(iid_estimate(&total).within(1.0, 3.0));
    assert!((var - 1.0).abs() <= 3.0 * variance_se(&total), "{mean} {var}");

    let a: Vec<f64> = counts.iter().map(|c| c.1).collect();
    let b: Vec<f64> = counts.iter().map(|c| c.2).collect();
    let (ma, _) = mean_var(&a);
    let (mb, _) = mean_var(&b);
    let products: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    assert!(iid_estimate(&products).within(0.0, 3.0));
}

#[test]
fn unit_cluster_matches_poisson() {
    let nu = power(0.8);
    let model = ClusterModel::new(nu.clone(), ClusterLaw::Deterministic { points: vec![1.0] }).unwrap();
    let a: Vec<f64> = replicate(Seed(2), 20_000, |_, rng| cluster_sample(&model, 0.5, rng).unwrap().len() as f64);
    let b: Vec<f64> = replicate(Seed(3), 20_000, |_, rng| poisson_sample(&nu, 0.5, rng).unwrap().len() as f64);
    assert!(!ks_two_sample(&a, &b, 0.01).unwrap().reject);
}

#[test]
fn doubled_cluster_has_dispersion_two() {
    let model = ClusterModel::new(power(1.0), ClusterLaw::Deterministic { points: vec![1.0, 1.0] }).unwrap();
    let counts: Vec<u64> = replicate(Seed(4), 20_000, |_, rng| cluster_sample(&model, 1.0, rng).unwrap().len() as u64);
    assert!(counts.iter().all(|c| c % 2 == 0));
    let r = poissonity_check(&counts, 0.01).unwrap();
    assert!((r.mean - 2.0).abs() < 0.06, "{r:?}");
    assert!((r.dispersion - 2.0).abs() < 0.1, "{r:?}");
    assert!(!r.pass);

    let empty = ClusterModel::new(power(1.0), ClusterLaw::Deterministic { points: vec![] }).unwrap();
    assert!(cluster_sample(&empty, 0.1, &mut Seed(5).rng()).unwrap().is_empty());
}

#[test]
fn product_tail_and_poissonity() {
    let model = ProductModel::new(power(0.5), MarkDistribution::PointMass { w: 2.0 }).unwrap();
    let sums: Vec<Vec<f64>> = replicate(Seed(6), 20_000, |_, rng| model.sample_summed(1e-2, rng).unwrap().points);
    for x in [1.0, 4.0, 25.0] {
        let counts: Vec<u64> = sums.iter().map(|p| p.iter().filter(|u| **u > x).count() as u64).collect();
        let c: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
        let target = 2f64.sqrt() * x.powf(-0.5);
        assert!(iid_estimate(&c).within(target, 3.0), "x={x}");
        let r = poissonity_check(&counts, 0.01).unwrap();
        assert!((r.dispersion - 1.0).abs() < 0.05, "{r:?}");
    }
}

#[test]
fn summed_points_of_unit_marks_are_centers() {
    let model = ProductModel::new(power(0.7), MarkDistribution::PointMass { w: 1.0 }).unwrap();
    let r = model.realize(0.1, &mut Seed(7).rng()).unwrap();
    assert_eq!(sum_points(&r).unwrap().points, r.centers);
}

#[test]
fn geometric_cluster_laplace_identity() {
    let model = ClusterModel::new(power(0.8), ClusterLaw::Geometric { theta: 0.5 }).unwrap();
    let process = ProcessModel::Cluster { model, floor: 0.05 };
    let bank = standard_bank::<f64>();
    let est = laplace_mc_bank(&process, &bank, 40_000, Seed(8)).unwrap();
    for (f, e) in bank.iter().zip(&est) {
        let exact = process.laplace_analytic(f).unwrap();
        assert!((e.mean - exact).abs() < 3.5 * e.se, "{} {e:?} vs {exact}", f.name);
    }
}

#[test]
fn superposition_of_thinned_copies() {
    let k = 4;
    let whole = ProcessModel::Product {
        model: ProductModel::new(power(0.6), MarkDistribution::LogNormal { mu: 0.0, sigma: 0.4 }).unwrap(),
        floor: 0.05,
    };
    let part = ProcessModel::Product {
        model: ProductModel::new(
            RadonIntensity::scaled_power_tail(0.6, 1.0 / k as f64).unwrap(),
            MarkDistribution::LogNormal { mu: 0.0, sigma: 0.4 },
        )
        .unwrap(),
        floor: 0.05,
    };
    let pieces = ProcessModel::Superposition { parts: vec![part.clone(); k] };
    let bank = standard_bank::<f64>();
    let a = laplace_mc_bank(&whole, &bank, 40_000, Seed(9)).unwrap();
    let b = laplace_mc_bank(&pieces, &bank, 40_000, Seed(10)).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.mean - y.mean).abs() < 3.0 * (x.se.powi(2) + y.se.powi(2)).sqrt());
    }
    // and the product of the parts' transforms
    let f = &bank[0];
    let single = laplace_mc(&part, f, 40_000, Seed(11)).unwrap();
    let joint = laplace_mc(&pieces, f, 40_000, Seed(12)).unwrap();
    let product = single.mean.powi(k as i32);
    let product_se = k as f64 * single.mean.powi(k as i32 - 1) * single.se;
    assert!((joint.mean - product).abs() < 3.0 * (joint.se.powi(2) + product_se.powi(2)).sqrt());
}

#[test]
fn poisson_indicator_laplace() {
    let process = ProcessModel::Poisson { intensity: power(0.5), floor: 0.5 };
    let f = TestFunction::indicator(1.0, f64::INFINITY, 1.0).unwrap();
    let e = laplace_mc(&process, &f, 100_000, Seed(13)).unwrap();
    let exact = (-(1.0 - (-1f64).exp())).exp();
    assert!(e.within(exact, 3.0), "{e:?}");
    assert!((0.0..=1.0).contains(&e.mean));
}
