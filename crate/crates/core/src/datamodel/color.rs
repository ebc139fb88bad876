//! 8-bit sRGB to CIELAB conversion (D65 reference white).

use crate::scalar::Scalar;

const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

// linear sRGB -> XYZ
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

/// Inverse sRGB companding of one 8-bit channel.
#[inline]
pub fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

/// Convert one sRGB pixel to `(L, a, b)`.
///
/// `L` is clamped to `[0, 100]`; the matrix rounding puts pure white a few
/// millionths above 100.
pub fn srgb_to_lab<T: Scalar>(rgb: [u8; 3]) -> [T; 3] {
    let lin = rgb.map(srgb_to_linear);
    let mut xyz = [0.0f64; 3];
    for (row, out) in RGB_TO_XYZ.iter().zip(xyz.iter_mut()) {
        *out = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    }
    let fx = lab_f(xyz[0] / WHITE[0]);
    let fy = lab_f(xyz[1] / WHITE[1]);
    let fz = lab_f(xyz[2] / WHITE[2]);
    let l = (116.0 * fy - 16.0).clamp(0.0, 100.0);
    let a = 500.0 * (fx - fy);
    let b = 200.0 * (fy - fz);
    [T::lit(l), T::lit(a), T::lit(b)]
}
