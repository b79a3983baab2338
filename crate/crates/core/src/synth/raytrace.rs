use rayon::prelude::*;

use crate::camera::PinholeCamera;
use crate::image::{ImageRGB, Rgb};
use crate::linalg::{self, Vec3};
use crate::synth::{Cuboid, PrimitiveScene, Sphere};

const T_MIN: f64 = 1e-9;

/// Nearest intersection along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    pub normal: Vec3,
    pub albedo: Rgb,
}

/// Smallest root above `T_MIN` of `|o + t·d - c|² = r²` for unit `d`,
/// using the cancellation-free form of the quadratic.
fn hit_sphere(s: &Sphere, o: Vec3, d: Vec3) -> Option<f64> {
    let oc = linalg::sub(o, s.center);
    let b = linalg::dot(oc, d);
    let c = linalg::dot(oc, oc) - s.radius * s.radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let q = -b - b.signum() * disc.sqrt();
    let (t0, t1) = if q == 0.0 { (0.0, 0.0) } else { (q, c / q) };
    let (near, far) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
    if near > T_MIN {
        Some(near)
    } else if far > T_MIN {
        Some(far)
    } else {
        None
    }
}

/// Slab test; returns the entry distance and the axis of the hit face.
fn hit_box(b: &Cuboid, o: Vec3, d: Vec3) -> Option<(f64, Vec3)> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut near_axis = 0;
    let mut far_axis = 0;
    for k in 0..3 {
        if d[k] == 0.0 {
            if o[k] < b.min[k] || o[k] > b.max[k] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[k];
        let (mut t0, mut t1) = ((b.min[k] - o[k]) * inv, (b.max[k] - o[k]) * inv);
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        if t0 > t_near {
            t_near = t0;
            near_axis = k;
        }
        if t1 < t_far {
            t_far = t1;
            far_axis = k;
        }
    }
    if t_near > t_far {
        return None;
    }
    let (t, axis) = if t_near > T_MIN {
        (t_near, near_axis)
    } else if t_far > T_MIN {
        (t_far, far_axis)
    } else {
        return None;
    };
    let mut n = [0.0; 3];
    n[axis] = -d[axis].signum();
    Some((t, n))
}

/// Nearest primitive hit by the ray `o + t·d` (`d` unit length).
pub fn intersect(scene: &PrimitiveScene, o: Vec3, d: Vec3) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for s in &scene.spheres {
        if let Some(t) = hit_sphere(s, o, d) {
            if best.map_or(true, |h| t < h.t) {
                let point = linalg::add(o, linalg::scale(d, t));
                best = Some(Hit {
                    t,
                    point,
                    normal: linalg::normalize(linalg::sub(point, s.center)),
                    albedo: s.albedo,
                });
            }
        }
    }
    for b in &scene.boxes {
        if let Some((t, normal)) = hit_box(b, o, d) {
            if best.map_or(true, |h| t < h.t) {
                best = Some(Hit {
                    t,
                    point: linalg::add(o, linalg::scale(d, t)),
                    normal,
                    albedo: b.albedo,
                });
            }
        }
    }
    best
}

fn shade(scene: &PrimitiveScene, hit: &Hit) -> Rgb {
    let lambert = linalg::dot(hit.normal, scene.light.direction).max(0.0);
    let k = scene.ambient + lambert * scene.light.intensity;
    hit.albedo.map(|a| (a * k).clamp(0.0, 1.0))
}

/// Ground-truth image: one ray per pixel center, Lambertian plus ambient.
pub fn raytrace(scene: &PrimitiveScene, cam: &PinholeCamera) -> ImageRGB {
    let (w, h) = (cam.width(), cam.height());
    let data: Vec<f64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..w).flat_map(move |x| {
                let (o, d) = cam.ray(x as f64 + 0.5, y as f64 + 0.5);
                match intersect(scene, o, d) {
                    Some(hit) => shade(scene, &hit),
                    None => scene.background,
                }
            })
        })
        .collect();
    ImageRGB::from_raw(w, h, data)
}
