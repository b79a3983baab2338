//! Reader and writer for COLMAP sparse reconstructions
//! (`cameras`, `images`, `points3D`, text or binary).
//!
//! Binary files are little-endian with fixed-width fields. Text files use `#`
//! comment lines; in `images.txt` every pose line is followed by exactly one
//! 2D-feature line (possibly empty), which is consumed and discarded.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::camera::{Intrinsics, Pose};
use crate::error::{Error, Result};
use crate::ingest::{SfmPoint, View};
use crate::linalg;

const SIMPLE_PINHOLE: i32 = 0;
const PINHOLE: i32 = 1;

/// Quaternions further than this from unit norm are rejected; closer ones
/// are renormalized.
pub const QUATERNION_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Binary,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Binary => "bin",
        }
    }

    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "txt" => Some(Format::Text),
            "bin" => Some(Format::Binary),
            _ => None,
        }
    }
}

fn model_name(id: i32) -> &'static str {
    match id {
        0 => "SIMPLE_PINHOLE",
        1 => "PINHOLE",
        2 => "SIMPLE_RADIAL",
        3 => "RADIAL",
        4 => "OPENCV",
        5 => "OPENCV_FISHEYE",
        6 => "FULL_OPENCV",
        7 => "FOV",
        8 => "SIMPLE_RADIAL_FISHEYE",
        9 => "RADIAL_FISHEYE",
        10 => "THIN_PRISM_FISHEYE",
        _ => "UNKNOWN",
    }
}

fn intrinsics_from_params(
    camera_id: u32,
    model: &str,
    width: usize,
    height: usize,
    params: &[f64],
) -> Result<Intrinsics> {
    let (fx, fy, cx, cy) = match (model, params) {
        ("SIMPLE_PINHOLE", &[f, cx, cy]) => (f, f, cx, cy),
        ("PINHOLE", &[fx, fy, cx, cy]) => (fx, fy, cx, cy),
        ("SIMPLE_PINHOLE", _) | ("PINHOLE", _) => {
            return Err(Error::InvalidConfig(format!(
                "camera {camera_id}: wrong parameter count {} for {model}",
                params.len()
            )))
        }
        _ => return Err(Error::UnsupportedCameraModel(model.to_string())),
    };
    let k = Intrinsics {
        camera_id,
        width,
        height,
        fx,
        fy,
        cx,
        cy,
    };
    k.validate()?;
    Ok(k)
}

fn normalized_pose(image_id: u32, q: [f64; 4], t: [f64; 3]) -> Result<Pose> {
    let n = linalg::quat_norm(q);
    if !n.is_finite() || (n - 1.0).abs() > QUATERNION_TOLERANCE {
        return Err(Error::NonUnitQuaternion { image_id, norm: n });
    }
    let rotation = if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
        q
    } else {
        linalg::quat_normalize(q)
    };
    Ok(Pose {
        rotation,
        translation: t,
    })
}

// ---------------------------------------------------------------------------
// text

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.starts_with('#'))
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: usize, tok: Option<&str>) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::malformed(path, format!("line {line}: missing field")))?;
    tok.parse()
        .map_err(|_| Error::malformed(path, format!("line {line}: cannot parse `{tok}`")))
}

fn parse_cameras_text(path: &Path, text: &str) -> Result<BTreeMap<u32, Intrinsics>> {
    let mut out = BTreeMap::new();
    for (ln, line) in content_lines(text).filter(|(_, l)| !l.is_empty()) {
        let mut toks = line.split_whitespace();
        let id: u32 = parse_num(path, ln, toks.next())?;
        let model = toks
            .next()
            .ok_or_else(|| Error::malformed(path, format!("line {ln}: missing model")))?;
        let width: usize = parse_num(path, ln, toks.next())?;
        let height: usize = parse_num(path, ln, toks.next())?;
        let params = toks
            .map(|t| parse_num::<f64>(path, ln, Some(t)))
            .collect::<Result<Vec<_>>>()?;
        let k = intrinsics_from_params(id, model, width, height, &params)?;
        if out.insert(id, k).is_some() {
            return Err(Error::DuplicateCameraId(id));
        }
    }
    Ok(out)
}

fn parse_views_text(path: &Path, text: &str) -> Result<Vec<View>> {
    let mut out = Vec::new();
    let mut lines = content_lines(text);
    while let Some((ln, line)) = lines.next() {
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let image_id: u32 = parse_num(path, ln, toks.next())?;
        let mut q = [0.0; 4];
        for v in q.iter_mut() {
            *v = parse_num(path, ln, toks.next())?;
        }
        let mut t = [0.0; 3];
        for v in t.iter_mut() {
            *v = parse_num(path, ln, toks.next())?;
        }
        let camera_id: u32 = parse_num(path, ln, toks.next())?;
        let name = toks.collect::<Vec<_>>().join(" ");
        if name.is_empty() {
            return Err(Error::malformed(path, format!("line {ln}: missing image name")));
        }
        // feature line: validated for shape, not stored
        if let Some((fl, feats)) = lines.next() {
            let n = feats.split_whitespace().count();
            if n % 3 != 0 {
                return Err(Error::malformed(
                    path,
                    format!("line {fl}: 2D feature row has {n} fields, expected triples"),
                ));
            }
        }
        out.push(View {
            image_id,
            name,
            camera_id,
            pose: normalized_pose(image_id, q, t)?,
            image: None,
        });
    }
    Ok(out)
}

fn parse_points_text(path: &Path, text: &str) -> Result<Vec<SfmPoint>> {
    let mut out = Vec::new();
    for (ln, line) in content_lines(text).filter(|(_, l)| !l.is_empty()) {
        let mut toks = line.split_whitespace();
        let id: u64 = parse_num(path, ln, toks.next())?;
        let mut position = [0.0; 3];
        for v in position.iter_mut() {
            *v = parse_num(path, ln, toks.next())?;
        }
        let mut rgb = [0u8; 3];
        for v in rgb.iter_mut() {
            *v = parse_num(path, ln, toks.next())?;
        }
        let error: f64 = parse_num(path, ln, toks.next())?;
        let rest = toks.count();
        if rest % 2 != 0 {
            return Err(Error::malformed(
                path,
                format!("line {ln}: track has an odd number of fields"),
            ));
        }
        out.push(SfmPoint {
            id,
            position,
            color: rgb.map(|b| b as f64 / 255.0),
            error,
            track_len: rest / 2,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// binary

struct Reader<'a> {
    path: &'a Path,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(path: &'a Path, buf: &'a [u8]) -> Self {
        Self { path, buf, pos: 0 }
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let bytes = self.buf.get(self.pos..end).ok_or_else(|| {
            Error::malformed(self.path, format!("truncated at byte {}", self.pos))
        })?;
        self.pos = end;
        Ok(bytes.try_into().expect("slice length"))
    }

    fn skip(&mut self, n: usize) -> Result<()> {
        if self.buf.len() - self.pos < n {
            return Err(Error::malformed(
                self.path,
                format!("truncated at byte {}", self.pos),
            ));
        }
        self.pos += n;
        Ok(())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }
    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn cstring(&mut self) -> Result<String> {
        let rest = &self.buf[self.pos..];
        let len = rest
            .iter()
            .position(|&b| b == 0)
            .ok_or_else(|| Error::malformed(self.path, "unterminated image name"))?;
        let s = std::str::from_utf8(&rest[..len])
            .map_err(|_| Error::malformed(self.path, "image name is not UTF-8"))?
            .to_string();
        self.pos += len + 1;
        Ok(s)
    }

    /// Element count that cannot exceed what the remaining bytes could hold.
    fn count(&mut self, min_elem_size: usize) -> Result<usize> {
        let n = self.u64()?;
        let remaining = (self.buf.len() - self.pos) as u64;
        if n.saturating_mul(min_elem_size as u64) > remaining {
            return Err(Error::malformed(
                self.path,
                format!("count {n} exceeds remaining {remaining} bytes"),
            ));
        }
        Ok(n as usize)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::malformed(
                self.path,
                format!("{} trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}

fn parse_cameras_binary(path: &Path, buf: &[u8]) -> Result<BTreeMap<u32, Intrinsics>> {
    let mut r = Reader::new(path, buf);
    let n = r.count(24)?;
    let mut out = BTreeMap::new();
    for _ in 0..n {
        let id = r.u32()?;
        let model = r.i32()?;
        let width = r.u64()? as usize;
        let height = r.u64()? as usize;
        let n_params = match model {
            SIMPLE_PINHOLE => 3,
            PINHOLE => 4,
            other => return Err(Error::UnsupportedCameraModel(model_name(other).to_string())),
        };
        let params = (0..n_params)
            .map(|_| r.f64())
            .collect::<Result<Vec<_>>>()?;
        let k = intrinsics_from_params(id, model_name(model), width, height, &params)?;
        if out.insert(id, k).is_some() {
            return Err(Error::DuplicateCameraId(id));
        }
    }
    r.finish()?;
    Ok(out)
}

fn parse_views_binary(path: &Path, buf: &[u8]) -> Result<Vec<View>> {
    let mut r = Reader::new(path, buf);
    let n = r.count(64)?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let image_id = r.u32()?;
        let mut q = [0.0; 4];
        for v in q.iter_mut() {
            *v = r.f64()?;
        }
        let mut t = [0.0; 3];
        for v in t.iter_mut() {
            *v = r.f64()?;
        }
        let camera_id = r.u32()?;
        let name = r.cstring()?;
        let n_feats = r.count(24)?;
        r.skip(n_feats * 24)?;
        out.push(View {
            image_id,
            name,
            camera_id,
            pose: normalized_pose(image_id, q, t)?,
            image: None,
        });
    }
    r.finish()?;
    Ok(out)
}

fn parse_points_binary(path: &Path, buf: &[u8]) -> Result<Vec<SfmPoint>> {
    let mut r = Reader::new(path, buf);
    let n = r.count(43)?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let id = r.u64()?;
        let mut position = [0.0; 3];
        for v in position.iter_mut() {
            *v = r.f64()?;
        }
        let rgb = [r.u8()?, r.u8()?, r.u8()?];
        let error = r.f64()?;
        let track_len = r.count(8)?;
        r.skip(track_len * 8)?;
        out.push(SfmPoint {
            id,
            position,
            color: rgb.map(|b| b as f64 / 255.0),
            error,
            track_len,
        });
    }
    r.finish()?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// public parse entry points

fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    String::from_utf8(bytes).map_err(|_| Error::malformed(path, "not UTF-8 text"))
}

pub fn parse_cameras(path: &Path, format: Format) -> Result<BTreeMap<u32, Intrinsics>> {
    match format {
        Format::Text => parse_cameras_text(path, &read_text(path)?),
        Format::Binary => parse_cameras_binary(path, &std::fs::read(path)?),
    }
}

pub fn parse_views(path: &Path, format: Format) -> Result<Vec<View>> {
    match format {
        Format::Text => parse_views_text(path, &read_text(path)?),
        Format::Binary => parse_views_binary(path, &std::fs::read(path)?),
    }
}

pub fn parse_points(path: &Path, format: Format) -> Result<Vec<SfmPoint>> {
    match format {
        Format::Text => parse_points_text(path, &read_text(path)?),
        Format::Binary => parse_points_binary(path, &std::fs::read(path)?),
    }
}

// ---------------------------------------------------------------------------
// writers

fn pinhole_params(k: &Intrinsics) -> (i32, Vec<f64>) {
    if k.fx == k.fy {
        (SIMPLE_PINHOLE, vec![k.fx, k.cx, k.cy])
    } else {
        (PINHOLE, vec![k.fx, k.fy, k.cx, k.cy])
    }
}

fn join(vals: &[f64]) -> String {
    vals.iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn write_cameras(path: &Path, cameras: &BTreeMap<u32, Intrinsics>, format: Format) -> Result<()> {
    match format {
        Format::Text => {
            let mut s = String::from("# Camera list with one line of data per camera:\n");
            s.push_str("#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n");
            for k in cameras.values() {
                let (model, params) = pinhole_params(k);
                writeln!(
                    s,
                    "{} {} {} {} {}",
                    k.camera_id,
                    model_name(model),
                    k.width,
                    k.height,
                    join(&params)
                )
                .unwrap();
            }
            std::fs::write(path, s)?;
        }
        Format::Binary => {
            let mut b = Vec::new();
            b.extend_from_slice(&(cameras.len() as u64).to_le_bytes());
            for k in cameras.values() {
                let (model, params) = pinhole_params(k);
                b.extend_from_slice(&k.camera_id.to_le_bytes());
                b.extend_from_slice(&model.to_le_bytes());
                b.extend_from_slice(&(k.width as u64).to_le_bytes());
                b.extend_from_slice(&(k.height as u64).to_le_bytes());
                for p in params {
                    b.extend_from_slice(&p.to_le_bytes());
                }
            }
            std::fs::write(path, b)?;
        }
    }
    Ok(())
}

/// Writes poses; 2D feature rows are written empty.
pub fn write_views(path: &Path, views: &[View], format: Format) -> Result<()> {
    match format {
        Format::Text => {
            let mut s = String::from("# Image list with two lines of data per image:\n");
            s.push_str("#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n");
            s.push_str("#   POINTS2D[] as (X, Y, POINT3D_ID)\n");
            for v in views {
                writeln!(
                    s,
                    "{} {} {} {} {}\n",
                    v.image_id,
                    join(&v.pose.rotation),
                    join(&v.pose.translation),
                    v.camera_id,
                    v.name
                )
                .unwrap();
            }
            std::fs::write(path, s)?;
        }
        Format::Binary => {
            let mut b = Vec::new();
            b.extend_from_slice(&(views.len() as u64).to_le_bytes());
            for v in views {
                b.extend_from_slice(&v.image_id.to_le_bytes());
                for x in v.pose.rotation.iter().chain(v.pose.translation.iter()) {
                    b.extend_from_slice(&x.to_le_bytes());
                }
                b.extend_from_slice(&v.camera_id.to_le_bytes());
                b.extend_from_slice(v.name.as_bytes());
                b.push(0);
                b.extend_from_slice(&0u64.to_le_bytes());
            }
            std::fs::write(path, b)?;
        }
    }
    Ok(())
}

fn color_byte(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes points. Track entries are not retained by the parser, so the
/// writer emits `track_len` placeholder `(image_id 0, index k)` pairs.
pub fn write_points(path: &Path, points: &[SfmPoint], format: Format) -> Result<()> {
    match format {
        Format::Text => {
            let mut s = String::from("# 3D point list with one line of data per point:\n");
            s.push_str("#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n");
            for p in points {
                write!(
                    s,
                    "{} {} {} {} {} {:?}",
                    p.id,
                    join(&p.position),
                    color_byte(p.color[0]),
                    color_byte(p.color[1]),
                    color_byte(p.color[2]),
                    p.error
                )
                .unwrap();
                for k in 0..p.track_len {
                    write!(s, " 0 {k}").unwrap();
                }
                s.push('\n');
            }
            std::fs::write(path, s)?;
        }
        Format::Binary => {
            let mut b = Vec::new();
            b.extend_from_slice(&(points.len() as u64).to_le_bytes());
            for p in points {
                b.extend_from_slice(&p.id.to_le_bytes());
                for x in p.position {
                    b.extend_from_slice(&x.to_le_bytes());
                }
                b.extend(p.color.map(color_byte));
                b.extend_from_slice(&p.error.to_le_bytes());
                b.extend_from_slice(&(p.track_len as u64).to_le_bytes());
                for k in 0..p.track_len {
                    b.extend_from_slice(&0i32.to_le_bytes());
                    b.extend_from_slice(&(k as i32).to_le_bytes());
                }
            }
            std::fs::write(path, b)?;
        }
    }
    Ok(())
}

/// Locates `cameras.*`, `images.*`, `points3D.*` under `dir`, `dir/sparse/0`
/// or `dir/sparse`, preferring binary when both formats exist.
pub fn locate_sparse(dir: &Path) -> Result<(PathBuf, Format)> {
    let candidates = [
        dir.to_path_buf(),
        dir.join("sparse").join("0"),
        dir.join("sparse"),
    ];
    for c in &candidates {
        for fmt in [Format::Binary, Format::Text] {
            if c.join(format!("cameras.{}", fmt.extension())).is_file() {
                return Ok((c.clone(), fmt));
            }
        }
    }
    Err(Error::MissingCamerasFile(dir.to_path_buf()))
}
