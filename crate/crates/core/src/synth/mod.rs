//! Analytic ground truth: ray-traced sphere/box scenes, camera rings and
//! fabricated sparse point clouds.

mod raytrace;

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::camera::{Intrinsics, PinholeCamera, Pose};
use crate::error::{Error, Result};
use crate::image::{ImageRGB, Rgb};
use crate::ingest::{
    split_train_test, DatasetManifest, Format, Preprocessing, SfmBundle, SfmPoint, Split, View,
};
use crate::linalg::{self, Vec3};

pub use raytrace::{intersect, raytrace, Hit};

pub const WORLD_UP: Vec3 = [0.0, 0.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
    pub albedo: Rgb,
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub min: Vec3,
    pub max: Vec3,
    pub albedo: Rgb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalLight {
    /// Unit vector pointing from the surface toward the light.
    pub direction: Vec3,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveScene {
    pub spheres: Vec<Sphere>,
    pub boxes: Vec<Cuboid>,
    pub light: DirectionalLight,
    pub ambient: f64,
    pub background: Rgb,
}

impl PrimitiveScene {
    pub fn empty() -> Self {
        Self {
            spheres: Vec::new(),
            boxes: Vec::new(),
            light: DirectionalLight {
                direction: WORLD_UP,
                intensity: 0.75,
            },
            ambient: 0.25,
            background: [0.0; 3],
        }
    }

    /// Satellite-like mock-up: a box body, two lateral solar panels and a
    /// spherical antenna on top, centered at the origin with +z up.
    pub fn mockup() -> Self {
        let body = [0.8, 0.62, 0.25];
        let panel = [0.15, 0.22, 0.65];
        Self {
            spheres: vec![Sphere {
                center: [0.0, 0.0, 0.42],
                radius: 0.12,
                albedo: [0.92, 0.92, 0.9],
            }],
            boxes: vec![
                Cuboid {
                    min: [-0.2, -0.2, -0.3],
                    max: [0.2, 0.2, 0.3],
                    albedo: body,
                },
                Cuboid {
                    min: [0.2, -0.01, -0.15],
                    max: [0.8, 0.01, 0.15],
                    albedo: panel,
                },
                Cuboid {
                    min: [-0.8, -0.01, -0.15],
                    max: [-0.2, 0.01, 0.15],
                    albedo: panel,
                },
            ],
            light: DirectionalLight {
                direction: linalg::normalize([0.45, -0.6, 0.66]),
                intensity: 0.75,
            },
            ambient: 0.25,
            background: [0.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |c: &Rgb| c.iter().all(|v| (0.0..=1.0).contains(v));
        for s in &self.spheres {
            if !(s.radius > 0.0) || !unit(&s.albedo) {
                return Err(Error::InvalidConfig("sphere needs radius > 0 and albedo in [0, 1]".into()));
            }
        }
        for b in &self.boxes {
            if (0..3).any(|k| !(b.min[k] < b.max[k])) || !unit(&b.albedo) {
                return Err(Error::InvalidConfig("box needs min < max and albedo in [0, 1]".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.light.intensity)
            || !(0.0..=1.0).contains(&self.ambient)
            || !unit(&self.background)
            || (linalg::norm(self.light.direction) - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidConfig(
                "light needs a unit direction; intensity, ambient and background in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Largest distance from the origin to any primitive point.
    pub fn extent(&self) -> f64 {
        let mut r: f64 = 0.0;
        for s in &self.spheres {
            r = r.max(linalg::norm(s.center) + s.radius);
        }
        for b in &self.boxes {
            for k in 0..8 {
                let c = [
                    if k & 1 == 0 { b.min[0] } else { b.max[0] },
                    if k & 2 == 0 { b.min[1] } else { b.max[1] },
                    if k & 4 == 0 { b.min[2] } else { b.max[2] },
                ];
                r = r.max(linalg::norm(c));
            }
        }
        r
    }

    /// Unsigned distance from `p` to the nearest primitive surface.
    pub fn surface_distance(&self, p: Vec3) -> f64 {
        let mut best = f64::INFINITY;
        for s in &self.spheres {
            best = best.min((linalg::norm(linalg::sub(p, s.center)) - s.radius).abs());
        }
        for b in &self.boxes {
            let inside = (0..3).all(|k| p[k] >= b.min[k] && p[k] <= b.max[k]);
            let d = if inside {
                (0..3)
                    .map(|k| (p[k] - b.min[k]).min(b.max[k] - p[k]))
                    .fold(f64::INFINITY, f64::min)
            } else {
                let q: Vec3 = std::array::from_fn(|k| (b.min[k] - p[k]).max(0.0).max(p[k] - b.max[k]));
                linalg::norm(q)
            };
            best = best.min(d);
        }
        best
    }
}

/// Camera `k` of an `n`-camera ring; `k` wraps modulo `n`.
pub fn ring_camera(k: usize, n: usize, radius: f64, height: f64, target: Vec3, intrinsics: Intrinsics) -> PinholeCamera {
    let theta = 2.0 * std::f64::consts::PI * (k % n) as f64 / n as f64;
    let eye = [
        target[0] + radius * theta.cos(),
        target[1] + radius * theta.sin(),
        target[2] + height,
    ];
    PinholeCamera {
        intrinsics,
        pose: Pose::look_at(eye, target, WORLD_UP),
    }
}

/// `n` cameras evenly spaced on a horizontal circle around `target`.
pub fn ring_cameras(n: usize, radius: f64, height: f64, target: Vec3, intrinsics: Intrinsics) -> Result<Vec<PinholeCamera>> {
    if n < 2 {
        return Err(Error::InvalidConfig("a camera ring needs at least 2 cameras".into()));
    }
    intrinsics.validate()?;
    Ok((0..n)
        .map(|k| ring_camera(k, n, radius, height, target, intrinsics))
        .collect())
}

/// Capture rig and fabrication parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub views: usize,
    pub radius: f64,
    pub height: f64,
    pub width: usize,
    pub image_height: usize,
    pub holdout_every: usize,
    pub points: usize,
    /// Position noise standard deviation as a fraction of the scene extent.
    pub noise_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            views: 36,
            radius: 2.5,
            height: 0.6,
            width: 256,
            image_height: 192,
            holdout_every: 6,
            points: 4000,
            noise_fraction: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub bundle: SfmBundle,
    pub split: Split,
    pub holdout_every: usize,
}

impl SynthDataset {
    /// Writes `sparse/0/*.txt`, `images/*.png` and `manifest.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.bundle.write_sparse(&dir.join("sparse").join("0"), Format::Text)?;
        let images = dir.join("images");
        std::fs::create_dir_all(&images)?;
        for v in &self.bundle.views {
            if let Some(img) = &v.image {
                img.save_png(&images.join(&v.name))?;
            }
        }
        DatasetManifest::new(
            "synthetic",
            &self.bundle.views,
            &self.split,
            self.holdout_every,
            Preprocessing::default(),
        )
        .save(&dir.join(crate::ingest::manifest::MANIFEST_FILE))
    }
}

/// Quantizes to 8-bit levels so in-memory truth equals what PNG stores.
fn quantize(img: ImageRGB) -> ImageRGB {
    let (w, h) = (img.width(), img.height());
    let data = img
        .into_data()
        .into_iter()
        .map(|v| (v * 255.0).round() / 255.0)
        .collect();
    ImageRGB::from_raw(w, h, data)
}

fn sample_sphere<R: Rng>(s: &Sphere, rng: &mut R) -> (Vec3, Vec3) {
    loop {
        let d: Vec3 = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = linalg::norm(d);
        if n > 1e-9 {
            let u = linalg::scale(d, 1.0 / n);
            return (linalg::add(s.center, linalg::scale(u, s.radius)), u);
        }
    }
}

fn box_face_areas(b: &Cuboid) -> [f64; 3] {
    let e = linalg::sub(b.max, b.min);
    [e[1] * e[2], e[0] * e[2], e[0] * e[1]]
}

fn sample_box<R: Rng>(b: &Cuboid, rng: &mut R) -> (Vec3, Vec3) {
    let a = box_face_areas(b);
    let total = 2.0 * (a[0] + a[1] + a[2]);
    let mut pick = rng.gen::<f64>() * total;
    let mut axis = 2;
    for k in 0..3 {
        if pick < 2.0 * a[k] {
            axis = k;
            break;
        }
        pick -= 2.0 * a[k];
    }
    let high = rng.gen::<bool>();
    let mut p: Vec3 = std::array::from_fn(|k| b.min[k] + rng.gen::<f64>() * (b.max[k] - b.min[k]));
    p[axis] = if high { b.max[axis] } else { b.min[axis] };
    let mut n = [0.0; 3];
    n[axis] = if high { 1.0 } else { -1.0 };
    (p, n)
}

fn visible_from_any(scene: &PrimitiveScene, p: Vec3, normal: Vec3, cams: &[PinholeCamera]) -> bool {
    cams.iter().any(|c| {
        let o = c.center();
        let to = linalg::sub(p, o);
        let dist = linalg::norm(to);
        let d = linalg::scale(to, 1.0 / dist);
        if linalg::dot(d, normal) >= 0.0 {
            return false;
        }
        let Some(px) = c.project_point(p) else {
            return false;
        };
        if px[0] < 0.0 || px[1] < 0.0 || px[0] >= c.width() as f64 || px[1] >= c.height() as f64 {
            return false;
        }
        match intersect(scene, o, d) {
            Some(hit) => hit.t >= dist - 1e-6,
            None => true,
        }
    })
}

/// Samples `n` visible surface points, stratified over primitives by area.
/// Colors are the 8-bit-quantized albedo.
pub fn fabricate_points<R: Rng>(
    scene: &PrimitiveScene,
    cams: &[PinholeCamera],
    n: usize,
    noise_sigma: f64,
    rng: &mut R,
) -> Vec<SfmPoint> {
    enum Prim<'a> {
        S(&'a Sphere),
        B(&'a Cuboid),
    }
    let mut prims: Vec<(Prim, f64)> = Vec::new();
    for s in &scene.spheres {
        prims.push((Prim::S(s), 4.0 * std::f64::consts::PI * s.radius * s.radius));
    }
    for b in &scene.boxes {
        let a = box_face_areas(b);
        prims.push((Prim::B(b), 2.0 * (a[0] + a[1] + a[2])));
    }
    let total: f64 = prims.iter().map(|p| p.1).sum();
    let mut points = Vec::with_capacity(n);
    if prims.is_empty() {
        return points;
    }
    for (k, (prim, area)) in prims.iter().enumerate() {
        let quota = if k + 1 == prims.len() {
            n - points.len()
        } else {
            (((area / total) * n as f64).round() as usize).min(n - points.len())
        };
        let mut made = 0;
        let mut attempts = 0;
        while made < quota && attempts < quota * 50 {
            attempts += 1;
            let ((p, normal), albedo) = match prim {
                Prim::S(s) => (sample_sphere(s, rng), s.albedo),
                Prim::B(b) => (sample_box(b, rng), b.albedo),
            };
            if !visible_from_any(scene, p, normal, cams) {
                continue;
            }
            let p = if noise_sigma > 0.0 {
                std::array::from_fn(|k| p[k] + noise_sigma * rng.sample::<f64, _>(StandardNormal))
            } else {
                p
            };
            points.push(SfmPoint {
                id: points.len() as u64 + 1,
                position: p,
                color: albedo.map(|c| (c * 255.0).round() / 255.0),
                error: 0.0,
                track_len: 2,
            });
            made += 1;
        }
    }
    points
}

/// Renders the ring, fabricates the sparse cloud and assigns the split.
pub fn make_dataset(scene: &PrimitiveScene, cfg: &SynthConfig) -> Result<SynthDataset> {
    scene.validate()?;
    let k = Intrinsics::centered(1, cfg.width, cfg.image_height);
    let cams = ring_cameras(cfg.views, cfg.radius, cfg.height, [0.0; 3], k)?;
    let split = split_train_test(cfg.views, cfg.holdout_every)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points = fabricate_points(scene, &cams, cfg.points, cfg.noise_fraction * scene.extent(), &mut rng);
    let views = cams
        .iter()
        .enumerate()
        .map(|(i, c)| View {
            image_id: i as u32 + 1,
            name: format!("view_{i:03}.png"),
            camera_id: 1,
            pose: c.pose,
            image: Some(quantize(raytrace(scene, c))),
        })
        .collect();
    let bundle = SfmBundle {
        cameras: BTreeMap::from([(1, k)]),
        views,
        points,
    };
    bundle.validate()?;
    Ok(SynthDataset {
        bundle,
        split,
        holdout_every: cfg.holdout_every,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_spacing_and_radius() {
        let k = Intrinsics::centered(1, 64, 48);
        let cams = ring_cameras(36, 2.5, 0.0, [0.0; 3], k).unwrap();
        assert_eq!(cams.len(), 36);
        for (i, c) in cams.iter().enumerate() {
            let p = c.center();
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 2.5).abs() < 1e-12);
            let ang = p[1].atan2(p[0]).to_degrees().rem_euclid(360.0);
            assert!((ang - 10.0 * i as f64).abs() < 1e-9 || (ang - 10.0 * i as f64).abs() > 359.99);
            let r = c.pose.rotation_matrix();
            let rtr = linalg::mat_mul(&linalg::transpose(&r), &r);
            for a in 0..3 {
                for b in 0..3 {
                    assert!((rtr[a][b] - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
            assert!((linalg::det3(&r) - 1.0).abs() < 1e-12);
            let pp = c.project_point([0.0; 3]).unwrap();
            assert!((pp[0] - 32.0).abs() < 1e-9 && (pp[1] - 24.0).abs() < 1e-9);
        }
        assert_eq!(ring_camera(36, 36, 2.5, 0.0, [0.0; 3], k), cams[0]);
        assert!(ring_cameras(1, 2.5, 0.0, [0.0; 3], k).is_err());
    }

    #[test]
    fn zero_noise_points_lie_on_surfaces() {
        let scene = PrimitiveScene::mockup();
        let k = Intrinsics::centered(1, 64, 48);
        let cams = ring_cameras(8, 2.5, 0.6, [0.0; 3], k).unwrap();
        let pts = fabricate_points(&scene, &cams, 500, 0.0, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(pts.len(), 500);
        for p in &pts {
            assert!(scene.surface_distance(p.position) < 1e-9);
        }
    }

    #[test]
    fn dataset_shape() {
        let cfg = SynthConfig {
            views: 12,
            width: 32,
            image_height: 24,
            points: 200,
            ..SynthConfig::default()
        };
        let ds = make_dataset(&PrimitiveScene::mockup(), &cfg).unwrap();
        assert_eq!(ds.bundle.views.len(), 12);
        assert_eq!(ds.split.test, vec![0, 6]);
        assert_eq!(ds.bundle.points.len(), 200);
        assert_eq!(make_dataset(&PrimitiveScene::mockup(), &cfg).unwrap(), ds);
    }
}
