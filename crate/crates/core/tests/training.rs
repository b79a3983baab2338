mod common;

use rso_splat::camera::{Intrinsics, PinholeCamera, Pose};
use rso_splat::image::ImageRGB;
use rso_splat::ingest::{PosedView, SfmPoint};
use rso_splat::linalg::sym_eigenvalues;
use rso_splat::scene::{bounding_radius, init_from_points, write_ply, GaussianCloud};
use rso_splat::train::{loss, train_views, TrainConfig, Trainer};
use rso_splat::Error;

fn ply_bytes(cloud: &GaussianCloud) -> Vec<u8> {
    let mut out = Vec::new();
    write_ply(cloud, &mut out).unwrap();
    out
}

fn tiny_parts() -> (GaussianCloud, Vec<PosedView>, f64) {
    let data = common::tiny_dataset(2);
    let cloud = init_from_points(&data.bundle.points).unwrap();
    let pos: Vec<_> = data.bundle.points.iter().map(|p| p.position).collect();
    (cloud, data.train_views().unwrap(), bounding_radius(&pos))
}

fn assert_invariants(t: &Trainer) {
    let c = &t.cloud;
    c.validate().unwrap();
    for i in 0..c.len() {
        let a = c.opacity(i);
        assert!(a > 0.0 && a < 1.0);
        let ev = sym_eigenvalues(&c.covariance(i));
        assert!(ev.iter().all(|&e| e > 0.0), "covariance {i} not PD: {ev:?}");
    }
    let a = &t.state.adam;
    let n = c.len();
    assert_eq!(
        [a.means.len(), a.log_scales.len(), a.rotations.len(), a.opacity.len(), a.sh.len()],
        [n; 5]
    );
    assert_eq!(t.state.stats.len(), n);
}

#[test]
fn zero_iterations_return_the_initial_cloud() {
    let (cloud, views, extent) = tiny_parts();
    let out = train_views(cloud.clone(), views, extent, &common::tiny_train_config(0), None).unwrap();
    assert_eq!(out.cloud, cloud);
    assert!(out.state.history.is_empty());
}

#[test]
fn pure_l1_and_pure_dssim_smoke() {
    for lambda in [0.0, 1.0] {
        let (cloud, views, extent) = tiny_parts();
        let cfg = TrainConfig {
            lambda_dssim: lambda,
            ..common::tiny_train_config(10)
        };
        let out = train_views(cloud, views, extent, &cfg, None).unwrap();
        assert_eq!(out.state.history.len(), 10);
        for r in &out.state.history {
            assert!(r.total.is_finite());
            let expect = if lambda == 0.0 { r.l1 } else { r.dssim };
            assert!((r.total - expect).abs() < 1e-15);
        }
    }
}

#[test]
fn invariants_hold_after_every_step_through_densification() {
    let (cloud, views, extent) = tiny_parts();
    let cfg = TrainConfig {
        densify_grad_threshold: 1e-5,
        opacity_reset_interval: 60,
        densify_until: Some(120),
        ..common::tiny_train_config(130)
    };
    let mut t = Trainer::new(cloud, views, extent, cfg).unwrap();
    while t.state.iteration < 130 {
        t.step().unwrap();
        assert_invariants(&t);
    }
    assert!(t.state.densify_log.len() >= 10);
    assert!(t.state.densify_log.iter().any(|(_, r)| r.cloned + r.split > 0));
}

#[test]
fn same_seed_gives_identical_ply() {
    let cfg = common::tiny_train_config(60);
    let run = || {
        let (cloud, views, extent) = tiny_parts();
        ply_bytes(&train_views(cloud, views, extent, &cfg, None).unwrap().cloud)
    };
    assert_eq!(run(), run());
    let other = TrainConfig { seed: 99, ..cfg.clone() };
    let (cloud, views, extent) = tiny_parts();
    assert_ne!(run(), ply_bytes(&train_views(cloud, views, extent, &other, None).unwrap().cloud));
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = common::tiny_train_config(40);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let (cloud, views, extent) = tiny_parts();
            ply_bytes(&train_views(cloud, views, extent, &cfg, None).unwrap().cloud)
        })
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn too_few_views_and_empty_cloud_are_rejected() {
    let (cloud, views, extent) = tiny_parts();
    let cfg = common::tiny_train_config(5);
    assert!(matches!(
        Trainer::new(cloud.clone(), views[..1].to_vec(), extent, cfg.clone()),
        Err(Error::TooFewTrainViews(1))
    ));
    assert!(matches!(
        Trainer::new(GaussianCloud::new(), views, extent, cfg),
        Err(Error::EmptyCloud)
    ));
}

/// Flat orange wall filling every view, seeded with gray points.
fn wall() -> (GaussianCloud, Vec<PosedView>, PosedView) {
    let color = [0.8, 0.45, 0.2];
    let k = Intrinsics::centered(1, 32, 24);
    let view = |i: usize, t: [f64; 3]| PosedView {
        name: format!("wall_{i}"),
        camera: PinholeCamera::new(
            k,
            Pose {
                rotation: [1.0, 0.0, 0.0, 0.0],
                translation: t,
            },
        )
        .unwrap(),
        image: ImageRGB::filled(32, 24, color),
    };
    let train = vec![
        view(0, [0.0, 0.0, 0.0]),
        view(1, [0.2, 0.0, 0.0]),
        view(2, [0.0, 0.15, 0.0]),
        view(3, [-0.2, -0.1, 0.1]),
    ];
    let held = view(9, [0.1, -0.05, 0.05]);
    let mut points = Vec::new();
    for i in 0..15 {
        for j in 0..15 {
            points.push(SfmPoint {
                id: (i * 15 + j) as u64,
                position: [-2.8 + 0.4 * i as f64, -2.2 + 0.32 * j as f64, 3.0],
                color: [0.5; 3],
                error: 0.0,
                track_len: 2,
            });
        }
    }
    (init_from_points(&points).unwrap(), train, held)
}

#[test]
fn held_out_wall_loss_decreases_per_window() {
    let (cloud, train, held) = wall();
    let extent = cloud.extent();
    let cfg = common::tiny_train_config(400);
    let cfg = TrainConfig {
        densify_from: 500,
        ..cfg
    };
    let mut t = Trainer::new(cloud, train, extent, cfg.clone()).unwrap();
    let held_loss = |c: &GaussianCloud| {
        let r = rso_splat::raster::render(c, &held.camera, cfg.background);
        loss(&r.image, &held.image, cfg.lambda_dssim).unwrap().0.total
    };
    let mut losses = vec![held_loss(&t.cloud)];
    for _ in 0..4 {
        for _ in 0..100 {
            t.step().unwrap();
        }
        losses.push(held_loss(&t.cloud));
    }
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    assert!(losses[4] < 0.25 * losses[0], "{losses:?}");
}
