mod common;

use fieldnav::localization::*;
use fieldnav::mapping::SensorModel;
use fieldnav::simworld::{simulate_scan, LidarConfig};
use fieldnav::{OdomDelta, Pose};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn cloud(n: usize, spread: f64, rng: &mut ChaCha8Rng) -> Vec<McParticle> {
    let mut ps: Vec<McParticle> = (0..n)
        .map(|_| McParticle {
            pose: Pose::new(
                rng.random_range(-spread..=spread),
                rng.random_range(-spread..=spread),
                rng.random_range(-3.0..3.0),
            ),
            weight: rng.random_range(0.01..1.0),
        })
        .collect();
    let s: f64 = ps.iter().map(|p| p.weight).sum();
    for p in &mut ps {
        p.weight /= s;
    }
    ps
}

#[test]
fn kld_size_matches_the_chi_square_quantile_for_large_k() {
    // Wilson-Hilferty is an approximation to the exact quantile; at large
    // k they agree to well under a percent
    let cfg = KldConfig {
        n_max: usize::MAX,
        n_min: 1,
        ..KldConfig::default()
    };
    for k in [100usize, 1000] {
        let exact = ChiSquared::new((k - 1) as f64).unwrap().inverse_cdf(1.0 - cfg.delta) / (2.0 * cfg.epsilon);
        let n = kld_sample_size(k, &cfg) as f64;
        assert!((n - exact).abs() / exact < 0.005, "k {k}: {n} vs {exact}");
    }
}

#[test]
fn kld_two_bins_pre_clamp() {
    let cfg = KldConfig {
        n_min: 1,
        ..KldConfig::default()
    };
    assert_eq!(kld_sample_size(2, &cfg), 66);
}

#[test]
fn identical_particles_resample_to_n_min() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = McParticle {
        pose: Pose::new(1.1, 2.2, 0.3),
        weight: 0.1,
    };
    let out = kld_resample(&[p; 10], &KldConfig::default(), &mut rng);
    assert_eq!(out.len(), 100);
    assert!(out.iter().all(|q| q.pose == p.pose && (q.weight - 0.01).abs() < 1e-15));
}

#[test]
fn spread_particles_resample_to_more() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let spread = cloud(2000, 5.0, &mut rng);
    let out = kld_resample(&spread, &KldConfig::default(), &mut rng);
    assert!(out.len() > 100, "{}", out.len());
}

#[test]
fn heavy_particle_dominates_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ps = [
        McParticle {
            pose: Pose::new(0.0, 0.0, 0.0),
            weight: 0.999,
        },
        McParticle {
            pose: Pose::new(20.0, 0.0, 0.0),
            weight: 0.001,
        },
    ];
    let cfg = KldConfig {
        n_min: 10_000,
        n_max: 10_000,
        ..KldConfig::default()
    };
    let out = kld_resample(&ps, &cfg, &mut rng);
    let heavy = out.iter().filter(|p| p.pose.x == 0.0).count();
    assert!(heavy as f64 >= 0.99 * out.len() as f64, "{heavy}");
}

#[test]
fn resampling_preserves_the_weighted_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ps = cloud(50, 3.0, &mut rng);
    let mean: f64 = ps.iter().map(|p| p.weight * p.pose.x).sum();
    let var: f64 = ps.iter().map(|p| p.weight * (p.pose.x - mean).powi(2)).sum();
    let cfg = KldConfig::default();
    let trials = 1000;
    let mut total = 0.0;
    let mut draws = 0usize;
    for _ in 0..trials {
        let out = kld_resample(&ps, &cfg, &mut rng);
        total += out.iter().map(|p| p.pose.x).sum::<f64>() / out.len() as f64;
        draws += out.len();
    }
    let got = total / trials as f64;
    // each trial mean has variance var / n; the average of trials shrinks it further
    let n_avg = draws as f64 / trials as f64;
    let se = (var / n_avg / trials as f64).sqrt();
    assert!((got - mean).abs() < 3.0 * se, "{got} vs {mean}, se {se}");
}

#[test]
fn noiseless_motion_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ps = vec![
        McParticle {
            pose: Pose::new(0.0, 0.0, 0.0),
            weight: 0.5
        };
        4
    ];
    motion_update(&mut ps, &OdomDelta::new(0.0, 1.0, 0.0), &OdomAlphas::ZERO, &mut rng);
    assert!(ps.iter().all(|p| p.pose == Pose::new(1.0, 0.0, 0.0) && p.weight == 0.5));
    motion_update(&mut ps, &OdomDelta::new(std::f64::consts::FRAC_PI_2, 0.0, 0.0), &OdomAlphas::ZERO, &mut rng);
    assert!(ps.iter().all(|p| (p.pose.yaw - std::f64::consts::FRAC_PI_2).abs() < 1e-15));
}

#[test]
fn translation_noise_matches_the_model_sigma() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let alphas = OdomAlphas([0.0, 0.0, 0.1, 0.0]);
    let delta = OdomDelta::new(0.0, 1.0, 0.0);
    let n = 100_000;
    let mut ps = vec![
        McParticle {
            pose: Pose::new(0.0, 0.0, 0.0),
            weight: 1.0 / n as f64
        };
        n
    ];
    motion_update(&mut ps, &delta, &alphas, &mut rng);
    let xs: Vec<f64> = ps.iter().map(|p| p.pose.x).collect();
    let m = xs.iter().sum::<f64>() / n as f64;
    let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let want = alphas.sigmas(&delta).1;
    assert!((want - 0.1f64.sqrt()).abs() < 1e-12);
    assert!((sd - want).abs() / want < 0.02, "{sd} vs {want}");
}

#[test]
fn true_pose_outweighs_a_displaced_one() {
    let world = common::bundled_world("corridor");
    let model = SensorModel::default();
    let map = common::truth_grid(&world, &model);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let truth = Pose::new(10.0, 2.5, 0.0);
    let scan = simulate_scan(&world, &truth, &LidarConfig::default(), 0, &mut rng).unwrap();
    let mut ps = vec![
        McParticle { pose: truth, weight: 0.5 },
        McParticle {
            pose: Pose::new(12.0, 2.5, 0.0),
            weight: 0.5,
        },
    ];
    assert!(measurement_update(&mut ps, &map, &scan, &model));
    assert!(ps[0].weight > ps[1].weight);
}

#[test]
fn colocated_particles_keep_uniform_weights() {
    let world = common::bundled_world("corridor");
    let model = SensorModel::default();
    let map = common::truth_grid(&world, &model);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let truth = Pose::new(6.0, 2.0, 0.4);
    let scan = simulate_scan(&world, &truth, &LidarConfig::default(), 0, &mut rng).unwrap();
    let mut ps = vec![McParticle { pose: truth, weight: 0.25 }; 4];
    measurement_update(&mut ps, &map, &scan, &model);
    assert!(ps.iter().all(|p| (p.weight - 0.25).abs() < 1e-12));
}

#[test]
fn no_return_scan_on_unknown_map_changes_nothing() {
    use fieldnav::mapping::OccupancyGrid;
    use fieldnav::raycast::GridGeometry;
    let model = SensorModel::default();
    let map = OccupancyGrid::new(GridGeometry::new(20, 20, 0.25, 0.0, 0.0), &model);
    let world = common::random_world(20, 20, 0.25, 0.0, &mut ChaCha8Rng::seed_from_u64(0));
    let mut scan = simulate_scan(&world, &Pose::new(2.5, 2.5, 0.0), &LidarConfig::default(), 0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    scan.ranges.fill(f64::INFINITY);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ps: Vec<McParticle> = cloud(10, 1.0, &mut rng)
        .into_iter()
        .map(|p| McParticle {
            pose: Pose::new(p.pose.x + 2.5, p.pose.y + 2.5, p.pose.yaw),
            weight: 0.1,
        })
        .collect();
    measurement_update(&mut ps, &map, &scan, &model);
    assert!(ps.iter().all(|p| (p.weight - 0.1).abs() < 1e-12));
}

#[test]
fn circular_mean_and_identical_estimate() {
    let d = 175f64.to_radians();
    let ps = [
        McParticle {
            pose: Pose::new(1.0, 1.0, d),
            weight: 0.5,
        },
        McParticle {
            pose: Pose::new(1.0, 1.0, -d),
            weight: 0.5,
        },
    ];
    let (m, cov) = estimate(&ps);
    assert!((m.yaw.abs() - std::f64::consts::PI).abs() < 1e-9);
    assert!((cov[2][2] - 5f64.to_radians().powi(2)).abs() < 1e-12);
    let (m, cov) = estimate(&[ps[0]; 3]);
    assert_eq!((m.x, m.y), (1.0, 1.0));
    assert!((m.yaw - d).abs() < 1e-12);
    assert!(cov.iter().flatten().all(|c| c.abs() < 1e-20));
}

#[test]
fn recovered_covariance_matches_the_sampling_law() {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    // Σ = L Lᵀ with a lower-triangular L
    let l = [[0.5, 0.0, 0.0], [0.2, 0.3, 0.0], [-0.05, 0.1, 0.2]];
    let mut sigma = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            sigma[i][j] = (0..3).map(|k| l[i][k] * l[j][k]).sum();
        }
    }
    let n = 100_000;
    let ps: Vec<McParticle> = (0..n)
        .map(|_| {
            let z: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            let r: [f64; 3] = std::array::from_fn(|i| (0..3).map(|k| l[i][k] * z[k]).sum());
            McParticle {
                pose: Pose::new(2.0 + r[0], -1.0 + r[1], 0.5 + r[2]),
                weight: 1.0,
            }
        })
        .collect();
    let (_, cov) = estimate(&ps);
    let diff: f64 = (0..9).map(|k| (cov[k / 3][k % 3] - sigma[k / 3][k % 3]).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = sigma.iter().flatten().map(|s| s * s).sum::<f64>().sqrt();
    assert!(diff / norm < 0.05, "{}", diff / norm);
}

#[test]
fn condensation_sample_seeds() {
    let world = common::bundled_world("corridor");
    for seed in 0..5 {
        let c = common::condensation(&world, seed);
        assert!(c.trace_after * 10.0 <= c.trace_before, "seed {seed}: {} -> {}", c.trace_before, c.trace_after);
        assert!(c.error < 0.2, "seed {seed}: {}", c.error);
        assert!(c.min_count >= 100 && c.max_count <= 5000);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kld_size_monotone_in_k_and_inverse_epsilon(k in 0usize..3000, e1 in 0.01f64..0.5, e2 in 0.01f64..0.5) {
        let cfg = KldConfig::default();
        let n = kld_sample_size(k, &cfg);
        prop_assert!(n >= cfg.n_min && n <= cfg.n_max);
        prop_assert!(kld_sample_size(k + 1, &cfg) >= n);
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let tight = KldConfig { epsilon: lo, ..cfg };
        let loose = KldConfig { epsilon: hi, ..cfg };
        prop_assert!(kld_sample_size(k, &tight) >= kld_sample_size(k, &loose));
    }

    #[test]
    fn resample_count_within_bounds(seed in any::<u64>(), n in 1usize..300, spread in 0.0f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ps = cloud(n, spread, &mut rng);
        let cfg = KldConfig::default();
        let out = kld_resample(&ps, &cfg, &mut rng);
        prop_assert!(out.len() >= cfg.n_min && out.len() <= cfg.n_max);
        let s: f64 = out.iter().map(|p| p.weight).sum();
        prop_assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn measurement_weights_finite_and_positive(seed in any::<u64>(), x in 1.0f64..29.0, y in 0.8f64..4.2, yaw in -3.1f64..3.1) {
        let world = common::bundled_world("corridor");
        let model = SensorModel::default();
        let map = common::truth_grid(&world, &model);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = world.geometry();
        let (ix, iy) = g.cell_of(x, y).unwrap();
        prop_assume!(!world.is_obstacle(ix, iy));
        let scan = simulate_scan(&world, &Pose::new(x, y, yaw), &LidarConfig::default(), 0, &mut rng).unwrap();
        let mut ps: Vec<McParticle> = cloud(200, 1.0, &mut rng)
            .into_iter()
            .map(|p| McParticle { pose: Pose::new(x + 10.0 * p.pose.x, y + p.pose.y, p.pose.yaw), weight: p.weight })
            .collect();
        measurement_update(&mut ps, &map, &scan, &model);
        prop_assert!(ps.iter().all(|p| p.weight.is_finite() && p.weight > 0.0));
        let s: f64 = ps.iter().map(|p| p.weight).sum();
        prop_assert!((s - 1.0).abs() < 1e-9);
    }
}
