//! Fourier transforms of a Gaussian envelope truncated to an interval.
//!
//! Everything in the imaging and reconstruction modules reduces to the 1D
//! integral
//!
//! ```text
//! J(ω; lo, hi, a) = ∫_lo^hi e^{-a t²} e^{-iωt} dt
//!                 = (√π / 2√a) [E(√a·hi, y) − E(√a·lo, y)],   y = ω / 2√a,
//! ```
//!
//! with `E(x, y) = e^{-y²} erf(x + iy)`. Written through the Faddeeva function
//! `w`, `E(x, y) = e^{-y²} − e^{-x² − 2ixy} w(−y + ix)` for `x ≥ 0`, which never
//! overflows, and `E(−x, y) = −conj E(x, y)` covers negative `x`.

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64;

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// `e^{-y²} erf(x + iy)`, finite for all real `x`, `y` (infinite `x` allowed).
pub fn scaled_erf(x: f64, y: f64) -> Complex64 {
    if x.is_infinite() {
        let v = (-y * y).exp();
        return Complex64::new(v.copysign(x), 0.0);
    }
    if x < 0.0 {
        return -scaled_erf(-x, y).conj();
    }
    let w = Complex64::new(-y, x).w();
    let phase = Complex64::from_polar((-x * x).exp(), -2.0 * x * y);
    Complex64::new((-y * y).exp(), 0.0) - phase * w
}

/// `∫_lo^hi e^{-a t²} e^{-iωt} dt` for `a > 0`; limits may be infinite.
pub fn segment_transform(a: f64, lo: f64, hi: f64, omega: f64) -> Complex64 {
    let s = a.sqrt();
    let y = omega / (2.0 * s);
    (scaled_erf(s * hi, y) - scaled_erf(s * lo, y)) * (SQRT_PI / (2.0 * s))
}

/// Transform over a symmetric interval `[-half, half]`; real by symmetry.
pub fn symmetric_transform(a: f64, half: f64, omega: f64) -> f64 {
    let s = a.sqrt();
    SQRT_PI / s * scaled_erf(s * half, omega / (2.0 * s)).re
}

/// Transform over the whole line: `√(π/a) e^{-ω²/4a}`.
pub fn line_transform(a: f64, omega: f64) -> f64 {
    (std::f64::consts::PI / a).sqrt() * (-omega * omega / (4.0 * a)).exp()
}
