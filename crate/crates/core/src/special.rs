//! Complex log-gamma function.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{ModelError, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `log Γ(z)` for complex `z`, via the Lanczos approximation (g = 7,
/// nine coefficients) and the reflection formula for `Re z < 1/2`.
///
/// The result is a logarithm of `Γ(z)`; its imaginary part may differ from
/// the principal value by a multiple of `2π`, which is immaterial wherever
/// the value is exponentiated.
pub fn complex_log_gamma(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(ModelError::GammaPole(z.re));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(ModelError::Numerical(format!("log-gamma of non-finite argument {z}")));
    }
    if z.re < 0.5 {
        let one_minus = Complex64::new(1.0, 0.0) - z;
        Ok(Complex64::new(PI.ln(), 0.0) - log_sin_pi(z) - lanczos(one_minus))
    } else {
        Ok(lanczos(z))
    }
}

/// `Γ(z)` for complex `z`.
pub fn complex_gamma(z: Complex64) -> Result<Complex64> {
    complex_log_gamma(z).map(|l| l.exp())
}

fn lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut sum = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
}

/// A logarithm of `sin(πz)`, written so that the dominant exponential is
/// factored out analytically and nothing overflows for large `|Im z|`.
fn log_sin_pi(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    let log_2i = Complex64::new(2.0f64.ln(), PI / 2.0);
    if z.im >= 0.0 {
        // sin(πz) = e^{-iπz} (1 - e^{2iπz}) / (-2i)
        -i * PI * z - log_2i.conj() + (Complex64::new(1.0, 0.0) - (2.0 * PI * i * z).exp()).ln()
    } else {
        // sin(πz) = e^{iπz} (1 - e^{-2iπz}) / (2i)
        i * PI * z - log_2i + (Complex64::new(1.0, 0.0) - (-2.0 * PI * i * z).exp()).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Distance of `d` from the nearest multiple of `2πi`.
    fn mod_two_pi_i(d: Complex64) -> f64 {
        let k = (d.im / (2.0 * PI)).round();
        Complex64::new(d.re, d.im - 2.0 * PI * k).norm()
    }

    #[test]
    fn known_values() {
        assert!(complex_log_gamma(c(1.0, 0.0)).unwrap().norm() < 1e-15);
        assert!(complex_log_gamma(c(2.0, 0.0)).unwrap().norm() < 1e-15);
        let half = complex_log_gamma(c(0.5, 0.0)).unwrap();
        assert_relative_eq!(half.re, 0.5 * PI.ln(), max_relative = 1e-14);
        assert_relative_eq!(half.re, 0.5723649429, max_relative = 1e-10);
        assert!(half.im.abs() < 1e-15);
        // Γ(-1/2) = -2√π
        let g = complex_gamma(c(-0.5, 0.0)).unwrap();
        assert_relative_eq!(g.re, -2.0 * PI.sqrt(), max_relative = 1e-13);
        // log Γ(11) = log 10!
        assert_relative_eq!(complex_log_gamma(c(11.0, 0.0)).unwrap().re, 3_628_800f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn poles_are_rejected() {
        for z in [0.0, -1.0, -7.0] {
            assert!(matches!(complex_log_gamma(c(z, 0.0)), Err(ModelError::GammaPole(_))));
        }
    }

    #[test]
    fn reflection_matches_direct_evaluation() {
        // Both branches of the implementation agree with |Γ(iy)|² = π/(y sinh πy).
        for y in [0.1, 1.0, 10.0, 150.0] {
            let l = complex_log_gamma(c(0.0, y)).unwrap();
            let expected = 0.5 * (PI / (y * (PI * y).sinh())).ln();
            assert_relative_eq!(l.re, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn recurrence_on_grid() {
        for re in [-19.7, -3.3, -0.4, 0.2, 0.7, 4.1, 19.6] {
            for im in [-200.0, -35.0, -1.0, 0.3, 12.0, 199.0] {
                let z = c(re, im);
                let lhs = complex_log_gamma(z + 1.0).unwrap() - complex_log_gamma(z).unwrap() - z.ln();
                let scale = complex_log_gamma(z).unwrap().norm().max(1.0);
                assert!(mod_two_pi_i(lhs) <= 1e-12 * scale, "z = {z}: {lhs}");
            }
        }
    }
}
