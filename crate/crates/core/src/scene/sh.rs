//! Real spherical harmonics up to degree 3, in the coefficient order used by
//! the common splat PLY layout.

use crate::linalg::Vec3;

pub const MAX_DEGREE: usize = 3;
/// `(MAX_DEGREE + 1)²`
pub const MAX_COEFFS: usize = 16;

pub const Y00: f64 = 0.282_094_791_773_878_14;
const C1: f64 = 0.488_602_511_902_919_9;
const C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Offset added to the SH sum so that all-zero coefficients give mid-gray.
pub const COLOR_OFFSET: f64 = 0.5;

pub fn coeff_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// Basis values at a unit direction. Entries beyond `coeff_count(degree)`
/// are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShBasis {
    pub degree: usize,
    pub values: [f64; MAX_COEFFS],
}

impl ShBasis {
    pub fn eval(degree: usize, dir: Vec3) -> Self {
        let mut v = [0.0; MAX_COEFFS];
        let [x, y, z] = dir;
        v[0] = Y00;
        if degree >= 1 {
            v[1] = -C1 * y;
            v[2] = C1 * z;
            v[3] = -C1 * x;
        }
        if degree >= 2 {
            let (xx, yy, zz) = (x * x, y * y, z * z);
            v[4] = C2[0] * x * y;
            v[5] = C2[1] * y * z;
            v[6] = C2[2] * (2.0 * zz - xx - yy);
            v[7] = C2[3] * x * z;
            v[8] = C2[4] * (xx - yy);
            if degree >= 3 {
                v[9] = C3[0] * y * (3.0 * xx - yy);
                v[10] = C3[1] * x * y * z;
                v[11] = C3[2] * y * (4.0 * zz - xx - yy);
                v[12] = C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
                v[13] = C3[4] * x * (4.0 * zz - xx - yy);
                v[14] = C3[5] * z * (xx - yy);
                v[15] = C3[6] * x * (xx - 3.0 * yy);
            }
        }
        Self { degree, values: v }
    }

    /// Partial derivatives of each basis polynomial with respect to the raw
    /// direction components (no unit-norm projection).
    pub fn gradient(degree: usize, dir: Vec3) -> [Vec3; MAX_COEFFS] {
        let mut g = [[0.0; 3]; MAX_COEFFS];
        let [x, y, z] = dir;
        if degree >= 1 {
            g[1] = [0.0, -C1, 0.0];
            g[2] = [0.0, 0.0, C1];
            g[3] = [-C1, 0.0, 0.0];
        }
        if degree >= 2 {
            g[4] = [C2[0] * y, C2[0] * x, 0.0];
            g[5] = [0.0, C2[1] * z, C2[1] * y];
            g[6] = [-2.0 * C2[2] * x, -2.0 * C2[2] * y, 4.0 * C2[2] * z];
            g[7] = [C2[3] * z, 0.0, C2[3] * x];
            g[8] = [2.0 * C2[4] * x, -2.0 * C2[4] * y, 0.0];
        }
        if degree >= 3 {
            let (xx, yy, zz) = (x * x, y * y, z * z);
            g[9] = [
                C3[0] * 6.0 * x * y,
                C3[0] * (3.0 * xx - 3.0 * yy),
                0.0,
            ];
            g[10] = [C3[1] * y * z, C3[1] * x * z, C3[1] * x * y];
            g[11] = [
                C3[2] * (-2.0 * x * y),
                C3[2] * (4.0 * zz - xx - 3.0 * yy),
                C3[2] * 8.0 * y * z,
            ];
            g[12] = [
                C3[3] * (-6.0 * x * z),
                C3[3] * (-6.0 * y * z),
                C3[3] * (6.0 * zz - 3.0 * xx - 3.0 * yy),
            ];
            g[13] = [
                C3[4] * (4.0 * zz - 3.0 * xx - yy),
                C3[4] * (-2.0 * x * y),
                C3[4] * 8.0 * x * z,
            ];
            g[14] = [C3[5] * 2.0 * x * z, C3[5] * (-2.0 * y * z), C3[5] * (xx - yy)];
            g[15] = [
                C3[6] * (3.0 * xx - 3.0 * yy),
                C3[6] * (-6.0 * x * y),
                0.0,
            ];
        }
        g
    }
}

/// Raw (unclamped) color `Σ k·Y + 0.5` per channel. `coeffs` is laid out
/// coefficient-major: `coeffs[j * 3 + channel]`.
pub fn sh_color_raw(coeffs: &[f64], basis: &ShBasis) -> [f64; 3] {
    let mut c = [COLOR_OFFSET; 3];
    for j in 0..coeff_count(basis.degree) {
        let y = basis.values[j];
        for ch in 0..3 {
            c[ch] += coeffs[j * 3 + ch] * y;
        }
    }
    c
}

/// View-dependent color clamped to `[0, 1]`.
pub fn sh_to_rgb(coeffs: &[f64], dir: Vec3, degree: usize) -> [f64; 3] {
    sh_color_raw(coeffs, &ShBasis::eval(degree, dir)).map(|v| v.clamp(0.0, 1.0))
}

/// DC coefficient producing `color` at degree 0.
pub fn rgb_to_dc(color: f64) -> f64 {
    (color - COLOR_OFFSET) / Y00
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::normalize;

    #[test]
    fn zero_coefficients_are_mid_gray() {
        let coeffs = [0.0; 48];
        for d in [[1.0, 0.0, 0.0], normalize([0.3, -0.4, 0.8])] {
            assert_eq!(sh_to_rgb(&coeffs, d, 3), [0.5; 3]);
        }
    }

    #[test]
    fn dc_for_white() {
        assert!((rgb_to_dc(1.0) - 1.772_453_850_905_516).abs() < 1e-12);
        let mut coeffs = [0.0; 48];
        coeffs[..3].fill(rgb_to_dc(1.0));
        for d in [[0.0, 0.0, 1.0], normalize([-0.3, 0.9, 0.1])] {
            let c = sh_to_rgb(&coeffs, d, 0);
            for v in c {
                assert!((v - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn degree_one_matches_hand_polynomials() {
        // Y_1,-1 = -sqrt(3/(4π)) y, Y_1,0 = sqrt(3/(4π)) z, Y_1,1 = -sqrt(3/(4π)) x
        let k = (3.0 / (4.0 * std::f64::consts::PI)).sqrt();
        let d = normalize([0.2, -0.5, 0.7]);
        let mut coeffs = [0.0; 48];
        coeffs[3] = 0.3; // red, j=1
        coeffs[7] = -0.2; // green, j=2
        coeffs[11] = 0.1; // blue, j=3
        let c = sh_to_rgb(&coeffs, d, 1);
        let expect = [
            0.5 + 0.3 * (-k * d[1]),
            0.5 - 0.2 * (k * d[2]),
            0.5 + 0.1 * (-k * d[0]),
        ];
        for ch in 0..3 {
            assert!((c[ch] - expect[ch]).abs() < 1e-10);
        }
        let other = sh_to_rgb(&coeffs, normalize([-0.6, 0.1, 0.2]), 1);
        assert!((other[0] - c[0]).abs() > 1e-3);
    }

    #[test]
    fn degree_two_and_three_normalization_constants() {
        // closed forms of the first basis function of each band
        let pi = std::f64::consts::PI;
        assert!((C2[0] - 0.5 * (15.0 / pi).sqrt()).abs() < 1e-15);
        assert!((C2[2] - 0.25 * (5.0 / pi).sqrt()).abs() < 1e-15);
        assert!((C3[1] - 0.5 * (105.0 / pi).sqrt()).abs() < 1e-14);
        assert!((C3[3] - 0.25 * (7.0 / pi).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn basis_gradient_matches_finite_differences() {
        let d = [0.31, -0.52, 0.44];
        let g = ShBasis::gradient(3, d);
        let h = 1e-6;
        for axis in 0..3 {
            let mut dp = d;
            let mut dm = d;
            dp[axis] += h;
            dm[axis] -= h;
            let fp = ShBasis::eval(3, dp).values;
            let fm = ShBasis::eval(3, dm).values;
            for j in 0..MAX_COEFFS {
                let fd = (fp[j] - fm[j]) / (2.0 * h);
                assert!((fd - g[j][axis]).abs() < 1e-8, "j={j} axis={axis}");
            }
        }
    }
}
