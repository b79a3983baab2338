mod common;

use std::collections::BTreeMap;
use std::path::Path;

use proptest::prelude::*;

use rso_splat::camera::{Intrinsics, Pose};
use rso_splat::ingest::{chroma_key, ChromaKeyConfig, Dataset, Format, SfmBundle, SfmPoint, View};
use rso_splat::image::ImageRGB;
use rso_splat::linalg::quat_normalize;
use rso_splat::synth::{make_dataset, PrimitiveScene, SynthConfig};

fn intrinsics() -> impl Strategy<Value = Intrinsics> {
    (1u32..4000, 1u32..3000, 1.0f64..5000.0, 1.0f64..5000.0, 0.0f64..1.0, 0.0f64..1.0, any::<bool>()).prop_map(
        |(w, h, fx, fy, u, v, simple)| Intrinsics {
            camera_id: 0,
            width: w as usize,
            height: h as usize,
            fx,
            fy: if simple { fx } else { fy },
            cx: u * w as f64,
            cy: v * h as f64,
        },
    )
}

fn bundle() -> impl Strategy<Value = SfmBundle> {
    let cams = prop::collection::vec(intrinsics(), 1..4);
    let views = prop::collection::vec(
        (prop::array::uniform4(-1.0f64..1.0), prop::array::uniform3(-50.0f64..50.0), any::<u16>()),
        0..6,
    );
    let points = prop::collection::vec(
        (prop::array::uniform3(-1e3f64..1e3), prop::array::uniform3(0u8..=255), 0.0f64..4.0, 0usize..6),
        0..40,
    );
    (cams, views, points).prop_map(|(cams, views, points)| {
        let cameras: BTreeMap<u32, Intrinsics> = cams
            .into_iter()
            .enumerate()
            .map(|(i, mut k)| {
                k.camera_id = i as u32 + 1;
                (k.camera_id, k)
            })
            .collect();
        let n_cams = cameras.len() as u32;
        let views = views
            .into_iter()
            .enumerate()
            .map(|(i, (q, t, salt))| {
                let q = if q.iter().all(|v| v.abs() < 1e-3) { [1.0, 0.0, 0.0, 0.0] } else { q };
                View {
                    image_id: i as u32 + 1,
                    name: format!("img_{salt}_{i}.png"),
                    camera_id: (salt as u32 % n_cams) + 1,
                    pose: Pose {
                        rotation: quat_normalize(q),
                        translation: t,
                    },
                    image: None,
                }
            })
            .collect();
        let points = points
            .into_iter()
            .enumerate()
            .map(|(i, (p, c, e, track))| SfmPoint {
                id: i as u64 + 1,
                position: p,
                color: c.map(|b| b as f64 / 255.0),
                error: e,
                track_len: track,
            })
            .collect();
        SfmBundle { cameras, views, points }
    })
}

fn write_and_load(b: &SfmBundle, dir: &Path, fmt: Format) -> SfmBundle {
    b.write_sparse(dir, fmt).unwrap();
    SfmBundle::load_sparse(dir).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_and_binary_round_trip(b in bundle()) {
        let dir = tempfile::tempdir().unwrap();
        let text = dir.path().join("text");
        let bin = dir.path().join("bin");

        let a = write_and_load(&b, &text, Format::Text);
        let again = write_and_load(&a, &dir.path().join("text2"), Format::Text);
        prop_assert_eq!(&a, &again);

        let c = write_and_load(&b, &bin, Format::Binary);
        let again = write_and_load(&c, &dir.path().join("bin2"), Format::Binary);
        prop_assert_eq!(&c, &again);

        prop_assert_eq!(&a, &c);
        prop_assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            prop_assert_eq!(p.position, q.position);
            prop_assert_eq!(p.color, q.color);
            prop_assert_eq!(p.track_len, q.track_len);
        }
    }
}

#[test]
fn binary_matches_text_on_a_fixed_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let sparse = dir.path().join("sparse").join("0");
    std::fs::create_dir_all(&sparse).unwrap();
    std::fs::write(
        sparse.join("cameras.txt"),
        "1 PINHOLE 640 480 500 510 320 240\n2 SIMPLE_PINHOLE 320 240 250 160 120\n",
    )
    .unwrap();
    std::fs::write(
        sparse.join("images.txt"),
        "1 0.7071068 0 0.7071068 0 0 0 2 1 a.png\n10 20 1 30 40 2\n2 1 0 0 0 0.5 -0.5 3 2 b.png\n\n",
    )
    .unwrap();
    std::fs::write(
        sparse.join("points3D.txt"),
        "1 0.5 -1.25 3 255 0 0 0.5 1 0 2 1\n7 1 2 3 0 128 255 0.1\n",
    )
    .unwrap();
    let text = SfmBundle::load_sparse(dir.path()).unwrap();
    assert_eq!(text.views.len(), 2);
    assert_eq!(text.points[0].color, [1.0, 0.0, 0.0]);
    assert_eq!(text.points[0].track_len, 2);
    assert_eq!(text.points[1].track_len, 0);
    assert_eq!(text.cameras[&2].fx, text.cameras[&2].fy);

    let bin_dir = dir.path().join("binary");
    text.write_sparse(&bin_dir, Format::Binary).unwrap();
    assert_eq!(SfmBundle::load_sparse(&bin_dir).unwrap(), text);
}

#[test]
fn camera_center_matches_matrix_oracle() {
    let q = [0.7071068, 0.0, 0.7071068, 0.0];
    let pose = Pose {
        rotation: quat_normalize(q),
        translation: [0.0, 0.0, 2.0],
    };
    let r = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
    let c = -(r.to_rotation_matrix().matrix().transpose() * nalgebra::Vector3::new(0.0, 0.0, 2.0));
    let got = pose.center();
    for k in 0..3 {
        assert!((got[k] - c[k]).abs() < 1e-12, "{got:?} vs {c:?}");
    }
    // rotation by +90 degrees about y: center at (2, 0, 0)
    assert!((got[0] - 2.0).abs() < 1e-6 && got[1].abs() < 1e-12 && got[2].abs() < 1e-6);
}

#[test]
fn synth_to_colmap_text_to_ingest_is_lossless() {
    let cfg = SynthConfig {
        views: 8,
        width: 48,
        image_height: 36,
        holdout_every: 4,
        points: 300,
        ..SynthConfig::default()
    };
    let ds = make_dataset(&PrimitiveScene::mockup(), &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    ds.write(dir.path()).unwrap();
    assert!(dir.path().join("sparse/0/cameras.txt").is_file());

    let loaded = Dataset::load(dir.path()).unwrap();
    assert_eq!(loaded.bundle, ds.bundle);
    assert_eq!(loaded.split, ds.split);
}

#[test]
fn chroma_key_clears_every_green_pixel() {
    let mut img = ImageRGB::filled(16, 16, [0.1, 0.9, 0.1]);
    img.set_pixel(3, 3, [0.8, 0.2, 0.1]);
    img.set_pixel(4, 4, [0.3, 0.4, 0.3]);
    let cfg = ChromaKeyConfig::default();
    let out = chroma_key(&img, &cfg);
    for y in 0..16 {
        for x in 0..16 {
            assert!(!cfg.is_green(out.pixel(x, y)));
        }
    }
    assert_eq!(out.pixel(0, 0), [0.0; 3]);
    assert_eq!(out.pixel(3, 3), [0.8, 0.2, 0.1]);
    assert_eq!(out.pixel(4, 4), [0.3, 0.4, 0.3]);
}
