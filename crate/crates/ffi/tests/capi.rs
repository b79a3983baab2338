use std::ffi::{CStr, CString};
use std::ptr;

use rso_splat::scene::{save_ply, Gaussian, GaussianCloud};
use rso_splat_ffi::*;

fn camera() -> RsoCamera {
    RsoCamera {
        width: 24,
        height: 16,
        fx: 30.0,
        fy: 30.0,
        cx: 12.0,
        cy: 8.0,
        rotation: [1.0, 0.0, 0.0, 0.0],
        translation: [0.0, 0.0, 0.0],
    }
}

fn write_cloud(dir: &std::path::Path) -> CString {
    let cloud = GaussianCloud::from_gaussians(
        [
            Gaussian::isotropic([0.0, 0.0, 2.0], 0.2, 0.9, [0.9, 0.3, 0.1]),
            Gaussian::isotropic([0.3, 0.1, 3.0], 0.3, 0.6, [0.1, 0.5, 0.9]),
        ],
        0,
    );
    let p = dir.join("c.ply");
    save_ply(&cloud, &p).unwrap();
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(rso_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn load_render_copy_free() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_cloud(dir.path());
    unsafe {
        let mut cloud = ptr::null_mut();
        assert_eq!(rso_cloud_load_ply(path.as_ptr(), &mut cloud), RsoStatus::Ok);
        assert_eq!(rso_cloud_len(cloud), 2);

        let mut img = ptr::null_mut();
        let bg = [0.0f64; 3];
        assert_eq!(rso_render(cloud, &camera(), bg.as_ptr(), &mut img), RsoStatus::Ok);
        assert_eq!((rso_image_width(img), rso_image_height(img)), (24, 16));
        let mut rgb = vec![0f32; 24 * 16 * 3];
        assert_eq!(rso_image_copy(img, 0, rgb.as_mut_ptr(), rgb.len()), RsoStatus::Ok);
        let center = &rgb[(8 * 24 + 12) * 3..(8 * 24 + 12) * 3 + 3];
        assert!(center[0] > center[2]);
        let mut alpha = vec![0f32; 24 * 16];
        assert_eq!(rso_image_copy(img, 1, alpha.as_mut_ptr(), alpha.len()), RsoStatus::Ok);
        assert!(alpha[8 * 24 + 12] > 0.5);
        assert_eq!(rso_image_copy(img, 0, rgb.as_mut_ptr(), 5), RsoStatus::InvalidArgument);

        let mut score = 0.0;
        assert_eq!(
            rso_image_metric(RsoMetric::Psnr, rgb.as_ptr(), rgb.as_ptr(), 24, 16, &mut score),
            RsoStatus::Ok
        );
        assert_eq!(score, 100.0);
        assert_eq!(
            rso_image_metric(RsoMetric::Ssim, rgb.as_ptr(), rgb.as_ptr(), 24, 16, &mut score),
            RsoStatus::Ok
        );
        assert_eq!(score, 1.0);

        let copy = CString::new(dir.path().join("copy.ply").to_str().unwrap()).unwrap();
        assert_eq!(rso_cloud_save_ply(cloud, copy.as_ptr()), RsoStatus::Ok);
        assert_eq!(
            std::fs::read(dir.path().join("copy.ply")).unwrap(),
            std::fs::read(dir.path().join("c.ply")).unwrap()
        );
        rso_image_free(img);
        rso_cloud_free(cloud);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut cloud = ptr::null_mut();
        let missing = CString::new("/nonexistent/model.ply").unwrap();
        assert_eq!(rso_cloud_load_ply(missing.as_ptr(), &mut cloud), RsoStatus::InputError);
        assert!(cloud.is_null());
        assert!(last_error().starts_with("IoError"));

        assert_eq!(rso_cloud_load_ply(ptr::null(), &mut cloud), RsoStatus::NullPointer);
        assert_eq!(rso_cloud_len(ptr::null()), 0);
        rso_cloud_free(ptr::null_mut());
        rso_image_free(ptr::null_mut());

        let mut img = ptr::null_mut();
        let bg = [0.0f64; 3];
        assert_eq!(rso_render(ptr::null(), &camera(), bg.as_ptr(), &mut img), RsoStatus::NullPointer);

        let a = vec![0.5f32; 8 * 8 * 3];
        let mut s = 0.0;
        assert_eq!(
            rso_image_metric(RsoMetric::Ssim, a.as_ptr(), a.as_ptr(), 8, 8, &mut s),
            RsoStatus::InputError
        );
        assert!(last_error().starts_with("TooSmall"));
        let v = CStr::from_ptr(rso_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn bad_camera_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_cloud(dir.path());
    unsafe {
        let mut cloud = ptr::null_mut();
        assert_eq!(rso_cloud_load_ply(path.as_ptr(), &mut cloud), RsoStatus::Ok);
        let mut cam = camera();
        cam.rotation = [2.0, 0.0, 0.0, 0.0];
        let mut img = ptr::null_mut();
        let bg = [0.0f64; 3];
        assert_eq!(rso_render(cloud, &cam, bg.as_ptr(), &mut img), RsoStatus::InputError);
        assert!(img.is_null());
        rso_cloud_free(cloud);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/rso_splat.h")).unwrap();
    for name in [
        "rso_cloud_load_ply",
        "rso_cloud_save_ply",
        "rso_cloud_len",
        "rso_cloud_free",
        "rso_render",
        "rso_image_copy",
        "rso_image_free",
        "rso_image_metric",
        "rso_last_error",
        "typedef struct RsoCloud RsoCloud",
        "RSO_STATUS_OK",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = std::process::Command::new("cc").arg("--version").output() else {
        return;
    };
    if !cc.status.success() {
        return;
    }
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(
        &src,
        "#include \"rso_splat.h\"\nint main(void) { RsoCloud *c = 0; return (int)rso_cloud_len(c); }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include])
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}
