use lesion_core::fcm::FcmConfig;
use lesion_core::imaging::{dice, normalize, ImageGrid, ScalarField, SegMask};
use lesion_core::levelset::{
    curvature, edge_indicator, evolve, evolve_with, fuzzy_level_set_segment, zero_level_mask, EdgeIndicator,
    LevelSetField, LevelSetOverrides, LevelSetParams, SegmentOptions,
};
use lesion_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const N: usize = 128;
const CENTER: f64 = 64.0;

fn radius_at(x: usize, y: usize) -> f64 {
    let (dx, dy) = (x as f64 - CENTER, y as f64 - CENTER);
    (dx * dx + dy * dy).sqrt()
}

/// Signed distance to a circle, positive outside.
fn outside_positive_circle(r: f64) -> LevelSetField {
    LevelSetField::from_fn(N, N, |x, y| radius_at(x, y) - r)
}

/// Signed distance to a circle, positive inside (the evolution convention).
fn inside_positive_circle(r: f64) -> LevelSetField {
    LevelSetField::from_fn(N, N, |x, y| r - radius_at(x, y))
}

fn check_circle_curvature(r: f64) -> (f64, f64) {
    let k = curvature(&outside_positive_circle(r)).unwrap();
    let (mut worst_band, mut worst_ring) = (0.0f64, 0.0f64);
    for y in 0..N {
        for x in 0..N {
            let rho = radius_at(x, y);
            let d = rho - r;
            if (2.0..=5.0).contains(&d) {
                // level line through the pixel is a circle of radius rho
                worst_band = worst_band.max((k.get(x, y) - 1.0 / rho).abs() * rho);
            }
            if d.abs() <= 0.25 {
                worst_ring = worst_ring.max((k.get(x, y) - 1.0 / r).abs() * r);
            }
        }
    }
    (worst_band, worst_ring)
}

#[test]
fn curvature_of_signed_distance_circles() {
    for r in [20.0, 40.0] {
        let (band, ring) = check_circle_curvature(r);
        assert!(band < 0.02, "r={r}: band relative error {band}");
        assert!(ring < 0.02, "r={r}: interface relative error {ring}");
    }
}

#[test]
fn curvature_flow_shrinks_circle_like_analytic_solution() {
    let r0 = 30.0;
    let eps = 1.5;
    // lambda * delta(0) = 1 makes the interface move with unit-speed mean curvature flow
    let params = LevelSetParams { lambda: eps, dirac_eps: eps, tau: 0.1, iterations: 500, reg_mu: 0.0, ..Default::default() };
    let t = params.tau * params.iterations as f64;
    let phi = evolve(
        &inside_positive_circle(r0),
        &EdgeIndicator::uniform(N, N),
        &ScalarField::filled(N, N, 0.0),
        &params,
    )
    .unwrap();
    let measured = (zero_level_mask(&phi).area() as f64 / std::f64::consts::PI).sqrt();
    let expected = (r0 * r0 - 2.0 * t).sqrt();
    assert!((measured - expected).abs() / expected < 0.05, "measured {measured}, expected {expected}");
    assert!(measured < r0);
}

#[test]
fn pure_balloon_expansion_is_monotone() {
    let target = |x: usize, y: usize| radius_at(x, y) <= 25.0;
    let balloon = ScalarField::from_fn(N, N, |x, y| if target(x, y) { 1.0 } else { -1.0 });
    for reg_mu in [0.0, 2.0] {
        let params = LevelSetParams { lambda: 0.0, reg_mu, iterations: 300, ..Default::default() };
        let start = inside_positive_circle(8.0);
        let mut areas = vec![zero_level_mask(&start).area()];
        evolve_with(&start, &EdgeIndicator::uniform(N, N), &balloon, &params, |_, phi| {
            areas.push(zero_level_mask(phi).area())
        })
        .unwrap();
        assert!(areas.windows(2).all(|w| w[1] >= w[0]), "reg_mu={reg_mu}: area decreased");
        assert!(areas.last() > areas.first());
    }
}

fn step_image(height: f64) -> ImageGrid {
    ImageGrid::from_fn(32, 8, |x, _| if x >= 16 { height } else { 0.0 })
}

/// 1-D oracle: smooth a unit step with the sampled Gaussian, then take the
/// central difference across the step.
fn step_gradient_oracle(height: f64, sigma: f64) -> f64 {
    let radius = (3.0 * sigma).ceil() as i64;
    let w: Vec<f64> = (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = w.iter().sum();
    let smoothed = |x: i64| -> f64 {
        (-radius..=radius)
            .map(|i| w[(i + radius) as usize] / total * if x + i >= 16 { height } else { 0.0 })
            .sum()
    };
    0.5 * (smoothed(16) - smoothed(14))
}

#[test]
fn edge_indicator_on_steps() {
    let g1 = edge_indicator(&step_image(1.0), 1.0).unwrap();
    let g_half = edge_indicator(&step_image(0.5), 1.0).unwrap();
    let d = step_gradient_oracle(1.0, 1.0);
    let expected = 1.0 / (1.0 + d * d);
    assert!((g1.field().get(15, 4) - expected).abs() < 1e-12);
    assert!(g1.field().get(15, 4) < 1.0);
    // stronger contrast, stronger stopping
    assert!(g1.field().get(15, 4) < g_half.field().get(15, 4));
    assert!(g1.field().values().iter().all(|&v| v > 0.0 && v <= 1.0));
    // far from the edge the field is flat
    assert_eq!(g1.field().get(2, 4), 1.0);
}

fn phantom(noise: f64, seed: u64) -> (ImageGrid, SegMask) {
    let truth = SegMask::from_fn(N, N, |x, y| radius_at(x, y) <= 15.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).unwrap();
    let img = ImageGrid::from_fn(N, N, |x, y| {
        let base = if truth.get(x, y) { 0.85 } else { 0.2 };
        let n = if noise > 0.0 { normal.sample(&mut rng) } else { 0.0 };
        (base + n).clamp(0.0, 1.0)
    });
    (normalize(&img), truth)
}

#[test]
fn phantom_segmentation_matches_ground_truth() {
    let opts = SegmentOptions::default();
    let (clean, truth) = phantom(0.0, 0);
    let seg = fuzzy_level_set_segment(&clean, &opts).unwrap();
    let d_clean = dice(&seg.mask, &truth).unwrap();
    assert!(d_clean >= 0.99, "noise-free dice {d_clean}");

    let (noisy, truth) = phantom(0.05, 42);
    let seg = fuzzy_level_set_segment(&noisy, &opts).unwrap();
    let d_noisy = dice(&seg.mask, &truth).unwrap();
    assert!(d_noisy >= 0.95, "noisy dice {d_noisy}");
}

#[test]
fn zero_iteration_override_returns_cluster_mask() {
    let (img, _) = phantom(0.05, 3);
    let opts = SegmentOptions {
        overrides: LevelSetOverrides { iterations: Some(0), ..Default::default() },
        ..Default::default()
    };
    let seg = fuzzy_level_set_segment(&img, &opts).unwrap();
    assert_eq!(seg.mask, seg.initial_mask);
    assert_eq!(seg.params.iterations, 0);
}

#[test]
fn uniform_image_reports_no_lesion() {
    let img = ImageGrid::filled(N, N, 0.0);
    assert_eq!(fuzzy_level_set_segment(&img, &SegmentOptions::default()).unwrap_err(), Error::NoLesionRegion);
}

#[test]
fn forced_cluster_out_of_range_is_rejected() {
    let (img, _) = phantom(0.0, 0);
    let opts = SegmentOptions { lesion_cluster: Some(7), fcm: FcmConfig { clusters: 2, ..Default::default() }, ..Default::default() };
    assert!(matches!(fuzzy_level_set_segment(&img, &opts), Err(Error::InvalidCluster { .. })));
}

#[test]
fn planes_have_zero_curvature() {
    for (a, b) in [(1.0, 0.0), (0.3, -0.7), (-2.0, 5.0)] {
        let k = curvature(&LevelSetField::from_fn(32, 24, |x, y| a * x as f64 + b * y as f64 + 1.0)).unwrap();
        for y in 1..23 {
            for x in 1..31 {
                assert!(k.get(x, y).abs() < 1e-6);
            }
        }
    }
}
