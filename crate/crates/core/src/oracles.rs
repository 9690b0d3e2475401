//! Closed-form reference functions used by the verification suites. These
//! stay independent of the quadrature path they check.

use num_complex::Complex64;

/// erf(e^{−iπ/4}·s) for s ≥ 0, the error function along the Fresnel ray.
///
/// Power series for s ≤ 4 (worst-case cancellation amplifies roundoff by
/// e^{s²} ≈ 9·10⁶, still well under 1e−8 relative); asymptotic series for
/// s ≥ 8. The gap (4, 8) is not used by any suite and is rejected.
pub fn erf_ray(s: f64) -> Complex64 {
    assert!(s >= 0.0, "erf_ray takes s ≥ 0");
    let z = Complex64::from_polar(s, -std::f64::consts::FRAC_PI_4);
    if s <= 4.0 {
        // erf(z) = 2/√π Σ (−1)^n z^{2n+1} / (n!(2n+1))
        let z2 = z * z;
        let mut term = z;
        let mut sum = Complex64::ZERO;
        for n in 0..200 {
            sum += term / (2.0 * n as f64 + 1.0);
            term = -term * z2 / (n as f64 + 1.0);
            if term.norm() < 1e-20 * sum.norm().max(1e-20) {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    } else {
        assert!(s >= 8.0, "erf_ray gap (4, 8) is outside the supported range");
        // erf(z) = 1 − e^{−z²}/(z√π) · Σ (−1)^j (2j−1)!!/(2z²)^j
        let z2 = z * z;
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::ZERO;
        let mut best = f64::INFINITY;
        for j in 0..60 {
            if term.norm() > best {
                break; // asymptotic series started diverging
            }
            best = term.norm();
            sum += term;
            term = -term * (2.0 * j as f64 + 1.0) / (2.0 * z2);
            if term.norm() < 1e-18 {
                sum += term;
                break;
            }
        }
        Complex64::new(1.0, 0.0)
            - (-z2).exp() / (z * std::f64::consts::PI.sqrt()) * sum
    }
}

/// Closed form of the Fresnel box integral
/// ∫_{−a}^{a} e^{ikx²} dx = √(π/k)·e^{iπ/4}·erf(e^{−iπ/4}·a√k).
pub fn fresnel_box(k: f64, a: f64) -> Complex64 {
    let s = a * k.sqrt();
    (std::f64::consts::PI / k).sqrt()
        * Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)
        * erf_ray(s)
}
