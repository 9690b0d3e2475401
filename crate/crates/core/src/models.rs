//! Concrete phase models with exact oracles.
//!
//! The CP¹ rotation model quantizes the rotation z ↦ e^{it}z of the Riemann
//! sphere with the Fubini-Study structure. In the affine chart the Kähler
//! potential is Φ(z) = log(1 + |z|²), its preferred analytic extension is
//! Φ̃(z, w) = log(1 + z·w̄), and
//!
//! ```text
//! χ(z, w) = log(1 + z w̄) − ½·[log(1 + |z|²) + log(1 + |w|²)]
//! ```
//!
//! has Re χ ≤ 0 with equality exactly on the diagonal (Cauchy-Schwarz). The
//! phase of the trace integral in the chart around the fixed point z = 0 is
//! P(z) = iθ₀ + χ(z, e^{it}z) with the convention θ₀ = 0; the chart around
//! z = ∞ carries the companion phase with constant −t, which is forced once
//! θ₀ = 0 is chosen (lifts differ by one overall constant). With that
//! convention the quantized trace is Σ_{j=0}^{k} e^{−ijt}, i.e. the exact
//! character evaluated at −t.
//!
//! The golden registry holds degenerate model phases with known expansions,
//! addressable by stable string identifiers.

use num_complex::Complex64;
use thiserror::Error;

use crate::charvar::Condition;
use crate::oscint::{
    self, eval_integral, quad, Domain, EvalOptions, Integrand, KSweep, QuadValue,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("1 + z·w̄ = {0} lies on the branch cut of the principal logarithm")]
    BranchCut(Complex64),
    #[error("rotation angle {0} is 0 mod 2π; the model needs isolated fixed points")]
    AngleZero(f64),
    #[error("trace quadrature needs k ≥ 10, got {0}")]
    KTooSmall(u32),
    #[error("quadrature failure: {0}")]
    Quadrature(#[from] oscint::OscintError),
}

/// The smooth profile exp(1 − 1/(1 − u²)) on |u| < 1, zero outside; equals 1
/// at u = 0.
pub fn bump_profile(u: f64) -> f64 {
    let u2 = u * u;
    if u2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u2)).exp()
    }
}

/// C^∞ bump in |x|: identically 1 for |x| ≤ plateau, 0 for |x| ≥ support.
pub fn plateau_bump(x: f64, plateau: f64, support: f64) -> f64 {
    let a = x.abs();
    if a <= plateau {
        1.0
    } else if a >= support {
        0.0
    } else {
        bump_profile((a - plateau) / (support - plateau))
    }
}

/// The bump exp(1 − 1/(1 − (x/ρ)²)) of the quadrature design notes: no
/// plateau, value 1 at the center, support |x| < ρ.
pub fn pure_bump(x: f64, rho: f64) -> f64 {
    bump_profile(x / rho)
}

/// χ(z, w) = Φ̃(z, w) − ½(Φ(z) + Φ(w)) with the principal logarithm. Errors
/// on the branch cut (1 + z·w̄ a nonpositive real).
pub fn fs_chi(z: Complex64, w: Complex64) -> Result<Complex64, ModelError> {
    let v = Complex64::new(1.0, 0.0) + z * w.conj();
    let scale = 1.0 + z.norm() * w.norm();
    if v.norm() <= 1e-14 * scale || (v.re <= 0.0 && v.im.abs() <= 1e-14 * scale) {
        return Err(ModelError::BranchCut(v));
    }
    let phi_z = (1.0 + z.norm_sqr()).ln();
    let phi_w = (1.0 + w.norm_sqr()).ln();
    Ok(v.ln() - 0.5 * (phi_z + phi_w))
}

/// Classical character of the rotation action on degree-k polynomials:
/// Σ_{j=0}^{k} e^{ijt} = (e^{i(k+1)t} − 1)/(e^{it} − 1).
pub fn exact_character(k: u32, t: f64) -> Result<Complex64, ModelError> {
    let denom = Complex64::from_polar(1.0, t) - 1.0;
    if denom.norm() < 1e-9 {
        return Err(ModelError::AngleZero(t));
    }
    let num = Complex64::from_polar(1.0, (k as f64 + 1.0) * t) - 1.0;
    Ok(num / denom)
}

/// Affine charts covering the two fixed points of the rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// Coordinate z around the fixed point 0.
    Zero,
    /// Coordinate w = 1/z around the fixed point ∞.
    Infinity,
}

/// The CP¹ rotation toy quantization with angle t ≠ 0 mod 2π.
#[derive(Debug, Clone, Copy)]
pub struct CP1Model {
    pub t: f64,
}

impl CP1Model {
    pub fn new(t: f64) -> Result<Self, ModelError> {
        if (Complex64::from_polar(1.0, t) - 1.0).norm() < 1e-9 {
            return Err(ModelError::AngleZero(t));
        }
        Ok(Self { t })
    }

    /// The chart constant θ_w of the phase: 0 in the zero chart by the θ₀
    /// convention, −t at infinity (forced by consistency of the lift).
    pub fn phase_theta(&self, chart: Chart) -> f64 {
        match chart {
            Chart::Zero => 0.0,
            Chart::Infinity => -self.t,
        }
    }

    /// P_w(ζ) = iθ_w + χ(ζ, e^{±it}ζ); the rotation acts by e^{it} in the
    /// zero chart and by e^{−it} at infinity. Re P ≤ 0 with equality exactly
    /// at the chart's fixed point ζ = 0.
    pub fn phase(&self, chart: Chart, zeta: Complex64) -> Complex64 {
        let (angle, theta) = match chart {
            Chart::Zero => (-self.t, 0.0),
            Chart::Infinity => (self.t, -self.t),
        };
        let r2 = zeta.norm_sqr();
        let chi = (Complex64::new(1.0, 0.0) + Complex64::from_polar(r2, angle)).ln()
            - (1.0 + r2).ln();
        Complex64::new(0.0, theta) + chi
    }

    /// The phase of the zero chart, P(z) = iθ₀ + χ(z, e^{it}z) with θ₀ = 0.
    pub fn rotation_phase(&self, z: Complex64) -> Complex64 {
        self.phase(Chart::Zero, z)
    }

    /// Partition-of-unity factor of a chart at chart radius r: a smooth bump
    /// equal to 1 on |z| ≤ 1 and 0 on |z| ≥ 2 around each fixed point, the
    /// two factors summing to 1 on the sphere.
    pub fn partition(&self, chart: Chart, r: f64) -> f64 {
        match chart {
            Chart::Zero => plateau_bump(r, 1.0, 2.0),
            Chart::Infinity => {
                if r == 0.0 {
                    1.0
                } else {
                    1.0 - plateau_bump(1.0 / r, 1.0, 2.0)
                }
            }
        }
    }

    /// The trace integral k̃·Σ_w ∫ e^{kP_w} ρ_w Ω over both charts, with
    /// k̃ = k + 1 (the curvature shift of the sphere) and the Fubini-Study
    /// area form normalized so each fixed point contributes at order k⁰.
    /// The integrand is exactly radial, so each chart reduces to a line
    /// integral in the chart radius.
    pub fn trace_quadrature(&self, k: u32, rel_tol: f64) -> Result<QuadValue, ModelError> {
        if k < 10 {
            return Err(ModelError::KTooSmall(k));
        }
        let kf = k as f64;
        let opts = quad::QuadOptions { rel_tol, abs_tol: 1e-300, max_cells: 400_000 };
        let mut total = Complex64::ZERO;
        let mut err = 0.0;
        for (chart, r_max) in [(Chart::Zero, 2.0), (Chart::Infinity, 1.0)] {
            let mut f = |r: f64| {
                let chi = self.phase(chart, Complex64::new(r, 0.0))
                    - Complex64::new(0.0, self.phase_theta(chart));
                let weight = self.partition(chart, r) * r / (1.0 + r * r).powi(2);
                (chi * kf).exp() * weight
            };
            // The phase is Laplace-type along the radius; a modest initial
            // grid plus the Gaussian-width hint at r ~ k^{-1/2} suffices.
            let width = (1.0 / kf).sqrt();
            let bp = quad::breakpoints_for(0.0, r_max, &[width, 2.0 * width, 1.0], 16.0);
            let res = quad::integrate_1d(&mut f, &bp, &opts);
            let osc = Complex64::from_polar(1.0, kf * self.phase_theta(chart));
            total += osc * res.value;
            err += res.error;
        }
        let prefactor = kf + 1.0;
        Ok(QuadValue {
            value: 2.0 * prefactor * total,
            error: 2.0 * prefactor * err,
            converged: true,
        })
    }
}

/// Expected leading behavior of a golden phase: c·k^α·log(k)^β.
#[derive(Debug, Clone, Copy)]
pub struct ExpectedLeading {
    pub alpha: f64,
    pub beta: usize,
    pub coeff: Complex64,
}

#[derive(Debug, Clone, Copy)]
enum PhaseKind {
    /// f = −x²
    Gaussian1D,
    /// f = −y⁴
    Quartic1D,
    /// f = −(x² + y⁴)
    Mixed2D,
    /// f = −x²y²
    XySquared2D,
    /// f = i y³ − y⁴
    CubicComplex1D,
}

#[derive(Debug, Clone, Copy)]
enum AmplitudeKind {
    /// Product of plateau bumps per axis.
    PlateauBump { plateau: f64, support: f64 },
    /// Sharp indicator of the box [−h, h]^dim; used where the maximum set
    /// reaches the boundary and a closed two-term expansion is wanted.
    BoxIndicator { half_width: f64 },
}

/// A registry phase with its amplitude, expected exponent lattice A, log
/// bound B, and classification tag.
#[derive(Debug, Clone)]
pub struct GoldenPhase {
    pub id: &'static str,
    pub dim: usize,
    kind: PhaseKind,
    amplitude: AmplitudeKind,
    /// Candidate exponents for the series fit (descending).
    pub lattice: Vec<f64>,
    /// Upper bound on log powers from q = n − m − 1.
    pub max_log: usize,
    /// Classification tag in the sense of the fixed-point conditions; the
    /// kernel dimension is that of the phase Hessian at the maximum.
    pub condition: Condition,
    pub kernel_dim: usize,
    pub expected_leading: Option<ExpectedLeading>,
    /// Default sweep range (1D sweeps reach 10⁶, 2D stop at 10⁴).
    pub default_k_range: (f64, f64),
}

impl GoldenPhase {
    pub fn phase_at(&self, x: &[f64]) -> Complex64 {
        match self.kind {
            PhaseKind::Gaussian1D => Complex64::new(-x[0] * x[0], 0.0),
            PhaseKind::Quartic1D => Complex64::new(-x[0].powi(4), 0.0),
            PhaseKind::Mixed2D => Complex64::new(-(x[0] * x[0] + x[1].powi(4)), 0.0),
            PhaseKind::XySquared2D => Complex64::new(-(x[0] * x[0] * x[1] * x[1]), 0.0),
            PhaseKind::CubicComplex1D => Complex64::new(-x[0].powi(4), x[0].powi(3)),
        }
    }

    pub fn amplitude_at(&self, x: &[f64]) -> f64 {
        match self.amplitude {
            AmplitudeKind::PlateauBump { plateau, support } => x
                .iter()
                .map(|&c| plateau_bump(c, plateau, support))
                .product(),
            AmplitudeKind::BoxIndicator { half_width } => {
                if x.iter().all(|&c| c.abs() <= half_width) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn domain(&self) -> Domain {
        let half = match self.amplitude {
            AmplitudeKind::PlateauBump { support, .. } => support,
            AmplitudeKind::BoxIndicator { half_width } => half_width,
        };
        if self.dim == 1 {
            Domain::Line { a: -half, b: half }
        } else {
            Domain::Rect { x: (-half, half), y: (-half, half) }
        }
    }

    fn hints(&self) -> [Vec<f64>; 2] {
        let mut h = vec![0.0];
        if let AmplitudeKind::PlateauBump { plateau, .. } = self.amplitude {
            h.push(-plateau);
            h.push(plateau);
        }
        [h.clone(), h]
    }

    /// ∫ e^{k f} φ by adaptive quadrature.
    pub fn eval(&self, k: f64, opts: &EvalOptions) -> Result<QuadValue, oscint::OscintError> {
        let phase = |x: &[f64]| self.phase_at(x);
        let amplitude = |x: &[f64]| self.amplitude_at(x);
        let ig = Integrand {
            phase: &phase,
            amplitude: &amplitude,
            domain: self.domain(),
            hints: self.hints(),
        };
        eval_integral(&ig, k, opts)
    }

    /// Sweeps the integral over a k-grid (phase value at the maximum is 0
    /// for every registry phase).
    pub fn sweep(&self, ks: &[f64], opts: &EvalOptions) -> Result<KSweep, oscint::OscintError> {
        oscint::run_sweep(|k| self.eval(k, opts), ks, Complex64::ZERO)
    }

    pub fn structure_input(&self) -> oscint::StructureInput {
        oscint::StructureInput {
            condition: self.condition,
            kernel_dim_real: self.kernel_dim,
            ambient_real_dim: self.dim,
        }
    }
}

/// √π, the Gaussian integral constant.
pub const SQRT_PI: f64 = 1.7724538509055159;
/// Γ(1/4)/2, the quartic model's leading coefficient.
pub const GAMMA_QUARTER_HALF: f64 = 1.8128049541109542;
/// ∫ e^{iu³} du = 2·Γ(4/3)·cos(π/6), the cubic model's leading coefficient.
pub const CUBIC_LEADING: f64 = 1.5466858841559797;

/// The golden registry, addressable by stable identifiers.
pub fn golden_registry() -> Vec<GoldenPhase> {
    vec![
        GoldenPhase {
            id: "gaussian-1d",
            dim: 1,
            kind: PhaseKind::Gaussian1D,
            amplitude: AmplitudeKind::PlateauBump { plateau: 2.0, support: 4.0 },
            lattice: vec![-0.5, -1.5, -2.5],
            max_log: 0,
            condition: Condition::TransverseSmooth,
            kernel_dim: 0,
            expected_leading: Some(ExpectedLeading {
                alpha: -0.5,
                beta: 0,
                coeff: Complex64::new(SQRT_PI, 0.0),
            }),
            default_k_range: (1e2, 1e6),
        },
        GoldenPhase {
            id: "quartic-1d",
            dim: 1,
            kind: PhaseKind::Quartic1D,
            amplitude: AmplitudeKind::PlateauBump { plateau: 1.0, support: 2.0 },
            lattice: vec![-0.25, -0.5, -0.75, -1.0, -1.25],
            max_log: 0,
            condition: Condition::KernelDimLe1,
            kernel_dim: 1,
            expected_leading: Some(ExpectedLeading {
                alpha: -0.25,
                beta: 0,
                coeff: Complex64::new(GAMMA_QUARTER_HALF, 0.0),
            }),
            default_k_range: (1e2, 1e6),
        },
        GoldenPhase {
            id: "mixed-2d",
            dim: 2,
            kind: PhaseKind::Mixed2D,
            amplitude: AmplitudeKind::PlateauBump { plateau: 1.0, support: 2.0 },
            lattice: vec![-0.75, -1.0, -1.25, -1.5, -1.75],
            max_log: 0,
            condition: Condition::KernelDimLe1,
            kernel_dim: 1,
            expected_leading: Some(ExpectedLeading {
                alpha: -0.75,
                beta: 0,
                coeff: Complex64::new(SQRT_PI * GAMMA_QUARTER_HALF, 0.0),
            }),
            default_k_range: (1e2, 1e4),
        },
        GoldenPhase {
            id: "xy-squared-2d",
            dim: 2,
            kind: PhaseKind::XySquared2D,
            amplitude: AmplitudeKind::BoxIndicator { half_width: 1.0 },
            lattice: vec![-0.5, -1.0],
            max_log: 1,
            condition: Condition::Unclassified,
            kernel_dim: 2,
            expected_leading: Some(ExpectedLeading {
                alpha: -0.5,
                beta: 1,
                coeff: Complex64::new(SQRT_PI, 0.0),
            }),
            default_k_range: (1e2, 1e4),
        },
        GoldenPhase {
            id: "cubic-complex-1d",
            dim: 1,
            kind: PhaseKind::CubicComplex1D,
            amplitude: AmplitudeKind::PlateauBump { plateau: 1.0, support: 2.0 },
            lattice: vec![
                -1.0 / 3.0,
                -2.0 / 3.0,
                -1.0,
                -4.0 / 3.0,
            ],
            max_log: 0,
            condition: Condition::KernelDimLe1,
            kernel_dim: 1,
            expected_leading: Some(ExpectedLeading {
                alpha: -1.0 / 3.0,
                beta: 0,
                coeff: Complex64::new(CUBIC_LEADING, 0.0),
            }),
            default_k_range: (1e2, 1e6),
        },
    ]
}

pub fn golden_by_id(id: &str) -> Option<GoldenPhase> {
    golden_registry().into_iter().find(|g| g.id == id)
}

/// The (z, z̄) Hessian of a complex function of (x, y), in the quadratic-form
/// convention matching `phase::hessian_p`: half the raw second-derivative
/// matrix, transformed to ∂z = ½(∂x − i∂y), ∂z̄ = ½(∂x + i∂y).
pub fn complex_hessian_from_real(h_xy: &[Vec<Complex64>]) -> [[Complex64; 2]; 2] {
    let (pxx, pxy, pyy) = (h_xy[0][0], h_xy[0][1], h_xy[1][1]);
    let i = Complex64::new(0.0, 1.0);
    let pzz = 0.25 * (pxx - pyy - 2.0 * i * pxy);
    let pzzbar = 0.25 * (pxx + pyy);
    let pzbzb = 0.25 * (pxx - pyy + 2.0 * i * pxy);
    [
        [0.5 * pzz, 0.5 * pzzbar],
        [0.5 * pzzbar, 0.5 * pzbzb],
    ]
}
