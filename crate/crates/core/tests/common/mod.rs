#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rso_splat::camera::{Intrinsics, PinholeCamera, Pose};
use rso_splat::linalg::{logit, quat_normalize};
use rso_splat::scene::sh::{coeff_count, rgb_to_dc};
use rso_splat::scene::{Gaussian, GaussianCloud, SH_LEN};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Camera at the origin looking down +z.
pub fn camera(width: usize, height: usize, focal: f64) -> PinholeCamera {
    let k = Intrinsics {
        camera_id: 1,
        width,
        height,
        fx: focal,
        fy: focal,
        cx: width as f64 / 2.0,
        cy: height as f64 / 2.0,
    };
    PinholeCamera::new(k, Pose::IDENTITY).unwrap()
}

pub fn random_quat<R: Rng>(rng: &mut R) -> [f64; 4] {
    quat_normalize([
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ])
}

/// Random anisotropic Gaussians in front of an identity camera, with
/// small higher-order SH terms.
pub fn random_scene<R: Rng>(rng: &mut R, n: usize, sh_degree: usize) -> GaussianCloud {
    let mut cloud = GaussianCloud::new();
    cloud.sh_degree = sh_degree;
    for _ in 0..n {
        let z = rng.gen_range(1.5..6.0);
        let mut sh = [0.0; SH_LEN];
        for c in 0..3 {
            sh[c] = rgb_to_dc(rng.gen_range(0.0..1.0));
        }
        for v in sh.iter_mut().take(coeff_count(sh_degree) * 3).skip(3) {
            *v = rng.gen_range(-0.1..0.1);
        }
        cloud.push(Gaussian {
            mean: [rng.gen_range(-0.6..0.6) * z, rng.gen_range(-0.6..0.6) * z, z],
            log_scale: [
                rng.gen_range(-3.5f64..-1.0),
                rng.gen_range(-3.5f64..-1.0),
                rng.gen_range(-3.5f64..-1.0),
            ],
            rotation: random_quat(rng),
            opacity_logit: logit(rng.gen_range(0.05..0.99)),
            sh,
        });
    }
    cloud
}

/// Small mock-up dataset that trains in well under a second per iteration.
pub fn tiny_dataset(seed: u64) -> rso_splat::ingest::Dataset {
    let cfg = rso_splat::synth::SynthConfig {
        views: 8,
        width: 48,
        image_height: 36,
        holdout_every: 4,
        points: 300,
        seed,
        ..rso_splat::synth::SynthConfig::default()
    };
    let ds = rso_splat::synth::make_dataset(&rso_splat::synth::PrimitiveScene::mockup(), &cfg).unwrap();
    rso_splat::ingest::Dataset {
        bundle: ds.bundle,
        split: ds.split,
    }
}

pub fn tiny_train_config(iterations: usize) -> rso_splat::train::TrainConfig {
    rso_splat::train::TrainConfig {
        iterations,
        densify_from: 10,
        densify_interval: 10,
        ..rso_splat::train::TrainConfig::default()
    }
}
