//! Binary little-endian PLY in the common splat layout:
//! `x y z nx ny nz f_dc_0..2 f_rest_0..44 opacity scale_0..2 rot_0..3`,
//! all `float`. Opacity is stored as a logit and scales as logs.
//! `f_rest` is channel-major: `f_rest[c * 15 + (j - 1)]` for SH index `j`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scene::cloud::{GaussianCloud, SH_LEN};
use crate::scene::sh::{MAX_COEFFS, MAX_DEGREE};

const REST: usize = MAX_COEFFS - 1;

fn property_names() -> Vec<String> {
    let mut names: Vec<String> = ["x", "y", "z", "nx", "ny", "nz"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..3).map(|i| format!("f_dc_{i}")));
    names.extend((0..3 * REST).map(|i| format!("f_rest_{i}")));
    names.push("opacity".into());
    names.extend((0..3).map(|i| format!("scale_{i}")));
    names.extend((0..4).map(|i| format!("rot_{i}")));
    names
}

pub fn write_ply<W: Write>(cloud: &GaussianCloud, mut w: W) -> Result<()> {
    let names = property_names();
    let mut header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n",
        cloud.len()
    );
    for n in &names {
        header.push_str(&format!("property float {n}\n"));
    }
    header.push_str("end_header\n");
    w.write_all(header.as_bytes())?;

    let mut row = Vec::with_capacity(names.len() * 4);
    for i in 0..cloud.len() {
        row.clear();
        let mut put = |v: f64| row.extend_from_slice(&(v as f32).to_le_bytes());
        cloud.means[i].iter().for_each(|&v| put(v));
        (0..3).for_each(|_| put(0.0));
        let sh = &cloud.sh[i];
        (0..3).for_each(|c| put(sh[c]));
        for c in 0..3 {
            for j in 1..MAX_COEFFS {
                put(sh[j * 3 + c]);
            }
        }
        put(cloud.opacity_logits[i]);
        cloud.log_scales[i].iter().for_each(|&v| put(v));
        cloud.rotations[i].iter().for_each(|&v| put(v));
        w.write_all(&row)?;
    }
    Ok(())
}

pub fn save_ply(cloud: &GaussianCloud, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_ply(cloud, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_ply<R: Read>(r: R) -> Result<GaussianCloud> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    let mut next_line = |r: &mut BufReader<R>| -> Result<String> {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Ply("unexpected end of header".into()));
        }
        Ok(line.trim_end().to_string())
    };
    if next_line(&mut r)? != "ply" {
        return Err(Error::Ply("missing `ply` magic".into()));
    }
    let mut count: Option<usize> = None;
    let mut props: Vec<String> = Vec::new();
    loop {
        let l = next_line(&mut r)?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "binary_little_endian", _] => {}
            ["format", other, ..] => return Err(Error::Ply(format!("unsupported format {other}"))),
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", "vertex", n] => {
                count = Some(n.parse().map_err(|_| Error::Ply(format!("bad vertex count {n}")))?)
            }
            ["element", other, ..] => return Err(Error::Ply(format!("unexpected element {other}"))),
            ["property", "float", name] => props.push(name.to_string()),
            ["property", ty, ..] => return Err(Error::Ply(format!("unsupported property type {ty}"))),
            ["end_header"] => break,
            _ => return Err(Error::Ply(format!("unrecognized header line `{l}`"))),
        }
    }
    let n = count.ok_or_else(|| Error::Ply("no vertex element".into()))?;
    let idx = |name: &str| -> Result<usize> {
        props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| Error::Ply(format!("missing property {name}")))
    };
    let pos = [idx("x")?, idx("y")?, idx("z")?];
    let dc = [idx("f_dc_0")?, idx("f_dc_1")?, idx("f_dc_2")?];
    let n_rest = props.iter().filter(|p| p.starts_with("f_rest_")).count();
    let per_channel = n_rest / 3;
    let degree = match per_channel {
        0 => 0,
        3 => 1,
        8 => 2,
        15 => 3,
        _ => return Err(Error::Ply(format!("unexpected f_rest count {n_rest}"))),
    };
    let rest = (0..n_rest)
        .map(|i| idx(&format!("f_rest_{i}")))
        .collect::<Result<Vec<_>>>()?;
    let opacity = idx("opacity")?;
    let scale = [idx("scale_0")?, idx("scale_1")?, idx("scale_2")?];
    let rot = [idx("rot_0")?, idx("rot_1")?, idx("rot_2")?, idx("rot_3")?];

    let stride = props.len() * 4;
    let mut buf = vec![0u8; stride];
    let mut cloud = GaussianCloud::new();
    cloud.sh_degree = if n_rest == 0 { 0 } else { MAX_DEGREE.min(degree) };
    for _ in 0..n {
        r.read_exact(&mut buf)
            .map_err(|_| Error::Ply("truncated vertex data".into()))?;
        let f = |k: usize| f32::from_le_bytes(buf[k * 4..k * 4 + 4].try_into().unwrap()) as f64;
        let mut sh = [0.0; SH_LEN];
        for c in 0..3 {
            sh[c] = f(dc[c]);
            for j in 1..=per_channel {
                sh[j * 3 + c] = f(rest[c * per_channel + j - 1]);
            }
        }
        cloud.means.push(pos.map(f));
        cloud.log_scales.push(scale.map(f));
        cloud.rotations.push(rot.map(f));
        cloud.opacity_logits.push(f(opacity));
        cloud.sh.push(sh);
    }
    Ok(cloud)
}

pub fn load_ply(path: &Path) -> Result<GaussianCloud> {
    read_ply(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cloud_from_seed(vals: &[f32]) -> GaussianCloud {
        let mut c = GaussianCloud::new();
        c.sh_degree = 3;
        for chunk in vals.chunks_exact(8) {
            let f = |k: usize| chunk[k] as f64;
            let mut sh = [0.0; SH_LEN];
            for (j, s) in sh.iter_mut().enumerate() {
                *s = f(j % 8) * (j as f64 + 1.0) as f32 as f64;
            }
            c.means.push([f(0), f(1), f(2)]);
            c.log_scales.push([f(3), f(4), f(5)]);
            c.rotations.push([f(6), f(7), f(0), f(1)]);
            c.opacity_logits.push(f(2));
            c.sh.push(sh.map(|v| v as f32 as f64));
        }
        c
    }

    #[test]
    fn header_lists_62_float_properties() {
        let c = cloud_from_seed(&[0.5; 16]);
        let mut bytes = Vec::new();
        write_ply(&c, &mut bytes).unwrap();
        let text = String::from_utf8_lossy(&bytes);
        assert_eq!(text.matches("property float").count(), 62);
        assert!(text.contains("property float f_rest_44\nproperty float opacity\n"));
        let header_len = text.find("end_header\n").unwrap() + "end_header\n".len();
        assert_eq!(bytes.len() - header_len, 2 * 62 * 4);
    }

    #[test]
    fn rejects_ascii_and_truncation() {
        let bad = b"ply\nformat ascii 1.0\nelement vertex 0\nend_header\n";
        assert!(read_ply(&bad[..]).is_err());
        let c = cloud_from_seed(&[0.25; 8]);
        let mut bytes = Vec::new();
        write_ply(&c, &mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(read_ply(&bytes[..]).is_err());
    }

    proptest! {
        #[test]
        fn byte_exact_round_trip(vals in proptest::collection::vec(-10.0f32..10.0, 8..80)) {
            let c = cloud_from_seed(&vals);
            let mut a = Vec::new();
            write_ply(&c, &mut a).unwrap();
            let back = read_ply(&a[..]).unwrap();
            prop_assert_eq!(&back, &c);
            let mut b = Vec::new();
            write_ply(&back, &mut b).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
