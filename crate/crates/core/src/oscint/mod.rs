//! Numerical evaluation of oscillatory and Laplace integrals
//! ∫ e^{k·f(x)} φ(x) dx over k-grids, the stationary-phase leading term, the
//! parameter reduction of the transversal case, and asymptotic-series fitting
//! against bases {k^α log(k)^β} with log detection.

pub mod quad;

use num_complex::Complex64;
use rayon::prelude::*;
use std::cell::Cell;
use thiserror::Error;

use crate::charvar::Condition;
pub use quad::{QuadOptions, QuadResult};

#[derive(Debug, Error)]
pub enum OscintError {
    #[error("quadrature tolerance not met: achieved {error:.3e} on |I| = {value_norm:.3e}")]
    ToleranceNotMet { value: Complex64, error: f64, value_norm: f64 },
    #[error("Re f > 0 detected on a sample at x = {0:?}; not a valid Laplace phase")]
    InvalidPhase(Vec<f64>),
    #[error("Hessian is degenerate at the stationary point (|det| = {0:.3e}); use fit_series")]
    DegenerateHessian(f64),
    #[error("stationarity audit failed: |df(p)| = {0:.3e} > 1e-10")]
    NotStationary(f64),
    #[error("critical set is not {{u = 0}}: max |∂F/∂u(0, v)| = {0:.3e}")]
    CriticalSetNotUAxis(f64),
    #[error("∂²F/∂u² degenerates along {{u = 0}}: min |F_uu| = {0:.3e}")]
    DegenerateAlongSlice(f64),
    #[error("design matrix ill-conditioned (cond = {0:.3e}); widen the sweep or prune the lattice")]
    IllConditioned(f64),
    #[error("k-grid must be strictly increasing with at least 8 points")]
    BadGrid,
    #[error("sweep must span at least two decades of k (has {0:.2})")]
    SweepTooNarrow(f64),
    #[error("unsupported dimension {0} (only 1 and 2)")]
    UnsupportedDimension(usize),
    #[error("least-squares solve failed")]
    SolveFailed,
}

/// A quadrature value with its achieved error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadValue {
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
}

impl QuadValue {
    /// True when the estimate misses the sweep confidence bound
    /// |error| ≤ 1e−10·|value|.
    pub fn low_confidence(&self) -> bool {
        self.error > 1e-10 * self.value.norm()
    }
}

/// Integration domain: a segment or an axis-aligned rectangle.
#[derive(Debug, Clone, Copy)]
pub enum Domain {
    Line { a: f64, b: f64 },
    Rect { x: (f64, f64), y: (f64, f64) },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Line { .. } => 1,
            Domain::Rect { .. } => 2,
        }
    }
}

/// The integrand of ∫ e^{k f} φ: phase, amplitude, domain, and interior
/// breakpoint hints (stationary points, plateau edges) per axis.
pub struct Integrand<'a> {
    pub phase: &'a (dyn Fn(&[f64]) -> Complex64 + Sync),
    pub amplitude: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    pub domain: Domain,
    pub hints: [Vec<f64>; 2],
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// Relative quadrature tolerance.
    pub rel_tol: f64,
    /// Truncation threshold: contributions with k·Re f < −truncation are
    /// dropped (exponentially small; halving the threshold is a soundness
    /// test, not a behavior change).
    pub truncation: f64,
    /// Abort the phase-validity check when Re f exceeds this.
    pub phase_positivity_tol: f64,
    pub max_cells: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            truncation: 40.0,
            phase_positivity_tol: 1e-12,
            max_cells: 2_000_000,
        }
    }
}

/// Sampled variation of k·f along a segment of the axis, used to size the
/// initial subdivision so oscillations start resolved.
fn phase_variation_1d(
    phase: &dyn Fn(&[f64]) -> Complex64,
    k: f64,
    a: f64,
    b: f64,
    fixed: Option<(usize, f64)>,
    truncation: f64,
) -> f64 {
    let n = 256;
    let mut var = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let t = a + (b - a) * i as f64 / n as f64;
        let x = match fixed {
            None => vec![t],
            Some((axis, v)) => {
                if axis == 0 {
                    vec![v, t]
                } else {
                    vec![t, v]
                }
            }
        };
        let f = phase(&x);
        let im = k * f.im;
        let re = (k * f.re).max(-truncation - 10.0);
        if let Some((pim, pre)) = prev {
            var += (im - pim).abs() + (re - pre).abs();
        }
        prev = Some((im, re));
    }
    var
}

/// ∫ e^{k f(x)} φ(x) dx by adaptive quadrature over the amplitude support,
/// with domain truncation to {k·Re f ≥ −truncation} and a running validity
/// check that Re f ≤ 0 on samples.
pub fn eval_integral(ig: &Integrand, k: f64, opts: &EvalOptions) -> Result<QuadValue, OscintError> {
    let bad_at: Cell<Option<[f64; 2]>> = Cell::new(None);
    let qopts = QuadOptions {
        rel_tol: opts.rel_tol,
        abs_tol: 1e-300,
        max_cells: opts.max_cells,
    };

    let result = match ig.domain {
        Domain::Line { a, b } => {
            let mut f = |x: f64| {
                let fx = (ig.phase)(&[x]);
                if fx.re > opts.phase_positivity_tol {
                    bad_at.set(Some([x, 0.0]));
                }
                let kf = fx * k;
                if kf.re < -opts.truncation {
                    Complex64::ZERO
                } else {
                    (ig.amplitude)(&[x]) * kf.exp()
                }
            };
            let var = phase_variation_1d(ig.phase, k, a, b, None, opts.truncation);
            let bp = quad::breakpoints_for(a, b, &ig.hints[0], var);
            quad::integrate_1d(&mut f, &bp, &qopts)
        }
        Domain::Rect { x: (xa, xb), y: (ya, yb) } => {
            let inner_opts = QuadOptions {
                rel_tol: opts.rel_tol * 0.1,
                abs_tol: 1e-300,
                max_cells: opts.max_cells,
            };
            let max_inner_rel: Cell<f64> = Cell::new(0.0);
            let mut outer = |y: f64| {
                let mut f = |x: f64| {
                    let fx = (ig.phase)(&[x, y]);
                    if fx.re > opts.phase_positivity_tol {
                        bad_at.set(Some([x, y]));
                    }
                    let kf = fx * k;
                    if kf.re < -opts.truncation {
                        Complex64::ZERO
                    } else {
                        (ig.amplitude)(&[x, y]) * kf.exp()
                    }
                };
                let var = phase_variation_1d(ig.phase, k, xa, xb, Some((1, y)), opts.truncation);
                let bp = quad::breakpoints_for(xa, xb, &ig.hints[0], var);
                let inner = quad::integrate_1d(&mut f, &bp, &inner_opts);
                if inner.value.norm() > 0.0 {
                    let rel = inner.error / inner.value.norm().max(1e-300);
                    if rel > max_inner_rel.get() {
                        max_inner_rel.set(rel);
                    }
                }
                inner.value
            };
            let var_y = phase_variation_1d(ig.phase, k, ya, yb, Some((0, 0.5 * (xa + xb))), opts.truncation);
            let bp_y = quad::breakpoints_for(ya, yb, &ig.hints[1], var_y);
            let mut r = quad::integrate_1d(&mut outer, &bp_y, &qopts);
            r.error += max_inner_rel.get() * r.value.norm();
            r
        }
    };

    if let Some(at) = bad_at.get() {
        return Err(OscintError::InvalidPhase(at[..ig.domain.dim()].to_vec()));
    }
    let value = QuadValue {
        value: result.value,
        error: result.error,
        converged: result.converged,
    };
    if !result.converged {
        return Err(OscintError::ToleranceNotMet {
            value: result.value,
            error: result.error,
            value_norm: result.value.norm(),
        });
    }
    Ok(value)
}

/// Principal-branch square root of 2π/(−k·λ) for one Hessian eigenvalue.
/// Taking the branch per eigenvalue keeps the factor continuous around
/// negative-definite Hessians and reproduces the Gaussian (√(π/k)) and
/// Fresnel (√(π/k)·e^{iπ/4}) closed forms.
fn eigen_factor(lambda: Complex64, k: f64) -> Complex64 {
    (Complex64::new(2.0 * std::f64::consts::PI, 0.0) / (-lambda * k)).sqrt()
}

/// Five-point central gradient of a complex phase.
fn fd_gradient(phase: &dyn Fn(&[f64]) -> Complex64, p: &[f64], h: f64) -> Vec<Complex64> {
    let dim = p.len();
    let mut g = Vec::with_capacity(dim);
    for i in 0..dim {
        let eval = |s: f64| {
            let mut x = p.to_vec();
            x[i] += s;
            phase(&x)
        };
        let d = (-eval(2.0 * h) + 8.0 * eval(h) - 8.0 * eval(-h) + eval(-2.0 * h)) / (12.0 * h);
        g.push(d);
    }
    g
}

/// Raw second-derivative matrix of a complex phase by central differences
/// with one Richardson step.
pub fn fd_hessian(phase: &dyn Fn(&[f64]) -> Complex64, p: &[f64], h: f64) -> Vec<Vec<Complex64>> {
    let dim = p.len();
    let f0 = phase(p);
    let eval = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut x = p.to_vec();
        x[di] += si;
        x[dj] += sj;
        phase(&x)
    };
    let second = |i: usize, j: usize, step: f64| -> Complex64 {
        if i == j {
            (eval(i, step, i, 0.0) - 2.0 * f0 + eval(i, -step, i, 0.0)) / (step * step)
        } else {
            (eval(i, step, j, step) - eval(i, step, j, -step) - eval(i, -step, j, step)
                + eval(i, -step, j, -step))
                / (4.0 * step * step)
        }
    };
    let mut m = vec![vec![Complex64::ZERO; dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let d_h = second(i, j, h);
            let d_h2 = second(i, j, h / 2.0);
            let v = (4.0 * d_h2 - d_h) / 3.0;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

fn hessian_eigenvalues(m: &[Vec<Complex64>]) -> Vec<Complex64> {
    match m.len() {
        1 => vec![m[0][0]],
        2 => {
            let tr = m[0][0] + m[1][1];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let disc = (tr * tr - 4.0 * det).sqrt();
            vec![(tr + disc) * 0.5, (tr - disc) * 0.5]
        }
        n => panic!("hessian eigenvalues implemented for n ≤ 2, got {n}"),
    }
}

/// Stationary-phase leading term
/// e^{k f(p)} · ∏_j √(2π/(−k λ_j)) · φ(p)
/// over the eigenvalues λ_j of the (non-degenerate) Hessian of f at p.
/// Audits stationarity by finite differences and refuses degenerate
/// Hessians (route those to `fit_series`).
pub fn leading_term(
    phase: &dyn Fn(&[f64]) -> Complex64,
    p: &[f64],
    k: f64,
    amplitude_at_p: f64,
) -> Result<Complex64, OscintError> {
    if p.len() > 2 {
        return Err(OscintError::UnsupportedDimension(p.len()));
    }
    let grad = fd_gradient(phase, p, 1e-3);
    let gnorm = grad.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if gnorm > 1e-10 {
        return Err(OscintError::NotStationary(gnorm));
    }
    let hess = fd_hessian(phase, p, 1e-4);
    let eigs = hessian_eigenvalues(&hess);
    let det_norm: f64 = eigs.iter().map(|l| l.norm()).product();
    if det_norm < 1e-8 {
        return Err(OscintError::DegenerateHessian(det_norm));
    }
    let mut out = (phase(p) * k).exp() * amplitude_at_p;
    for l in eigs {
        out *= eigen_factor(l, k);
    }
    Ok(out)
}

/// The transversal-case parameter reduction for a phase F(u, v) on R×R whose
/// critical set in u is {u = 0}: the reduced phase is g(v) = F(0, v) and the
/// order-0 reduced amplitude is φ(0, v)·√(2π/(−F_uu(0, v))), so that
/// k^{−1/2}·∫ e^{k g(v)}·(reduced amplitude) dv approximates the full 2D
/// integral to O(k⁻¹) relative to its leading order.
pub struct ParameterReduction<'a> {
    phase: &'a (dyn Fn(&[f64]) -> Complex64 + Sync),
    amplitude: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    u_domain: (f64, f64),
    v_domain: (f64, f64),
    v_hints: Vec<f64>,
}

impl<'a> ParameterReduction<'a> {
    /// Validates the preconditions on a v-grid: ∂F/∂u(0, v) = 0 and
    /// ∂²F/∂u²(0, v) nondegenerate.
    pub fn new(
        phase: &'a (dyn Fn(&[f64]) -> Complex64 + Sync),
        amplitude: &'a (dyn Fn(&[f64]) -> f64 + Sync),
        u_domain: (f64, f64),
        v_domain: (f64, f64),
        v_hints: Vec<f64>,
    ) -> Result<Self, OscintError> {
        let n = 40;
        let mut max_grad = 0.0f64;
        let mut min_huu = f64::INFINITY;
        for i in 0..=n {
            let v = v_domain.0 + (v_domain.1 - v_domain.0) * i as f64 / n as f64;
            let fu = |u: f64| phase(&[u, v]);
            let h = 1e-3;
            let du = (-fu(2.0 * h) + 8.0 * fu(h) - 8.0 * fu(-h) + fu(-2.0 * h)) / (12.0 * h);
            max_grad = max_grad.max(du.norm());
            let h2 = 1e-4;
            let uu = (fu(h2) - 2.0 * fu(0.0) + fu(-h2)) / (h2 * h2);
            min_huu = min_huu.min(uu.norm());
        }
        if max_grad > 1e-8 {
            return Err(OscintError::CriticalSetNotUAxis(max_grad));
        }
        if min_huu < 1e-8 {
            return Err(OscintError::DegenerateAlongSlice(min_huu));
        }
        Ok(Self { phase, amplitude, u_domain, v_domain, v_hints })
    }

    pub fn reduced_phase(&self, v: f64) -> Complex64 {
        (self.phase)(&[0.0, v])
    }

    /// Order-0 reduced amplitude (complex: carries the Hessian branch factor
    /// without the k-power).
    pub fn reduced_amplitude(&self, v: f64) -> Complex64 {
        let h = 1e-4;
        let fu = |u: f64| (self.phase)(&[u, v]);
        let uu_h = (fu(h) - 2.0 * fu(0.0) + fu(-h)) / (h * h);
        let uu_h2 = (fu(h / 2.0) - 2.0 * fu(0.0) + fu(-h / 2.0)) / (h * h / 4.0);
        let uu = (4.0 * uu_h2 - uu_h) / 3.0;
        (self.amplitude)(&[0.0, v])
            * (Complex64::new(2.0 * std::f64::consts::PI, 0.0) / (-uu)).sqrt()
    }

    /// Iterated evaluation k^{−1/2}·∫ e^{k g(v)} ψ(v) dv.
    pub fn eval_iterated(&self, k: f64, opts: &EvalOptions) -> Result<QuadValue, OscintError> {
        let qopts = QuadOptions { rel_tol: opts.rel_tol, abs_tol: 1e-300, max_cells: opts.max_cells };
        let mut f = |v: f64| {
            let g = self.reduced_phase(v) * k;
            if g.re < -opts.truncation {
                Complex64::ZERO
            } else {
                self.reduced_amplitude(v) * g.exp()
            }
        };
        let var = phase_variation_1d(
            &|x: &[f64]| (self.phase)(&[0.0, x[0]]),
            k,
            self.v_domain.0,
            self.v_domain.1,
            None,
            opts.truncation,
        );
        let bp = quad::breakpoints_for(self.v_domain.0, self.v_domain.1, &self.v_hints, var);
        let r = quad::integrate_1d(&mut f, &bp, &qopts);
        let scale = k.sqrt().recip();
        Ok(QuadValue {
            value: r.value * scale,
            error: r.error * scale,
            converged: r.converged,
        })
    }

    /// Full 2D evaluation of ∫∫ e^{k F} φ for comparison.
    pub fn eval_full(&self, k: f64, opts: &EvalOptions) -> Result<QuadValue, OscintError> {
        let ig = Integrand {
            phase: self.phase,
            amplitude: self.amplitude,
            domain: Domain::Rect { x: self.u_domain, y: self.v_domain },
            hints: [vec![0.0], self.v_hints.clone()],
        };
        eval_integral(&ig, k, opts)
    }
}

/// Sampled integral values over a strictly increasing k-grid, with the phase
/// value at the maximum peeled before fitting.
#[derive(Debug, Clone)]
pub struct KSweep {
    pub ks: Vec<f64>,
    pub values: Vec<Complex64>,
    pub errors: Vec<f64>,
    pub low_confidence: Vec<bool>,
    pub phase_value_at_max: Complex64,
}

impl KSweep {
    pub fn new(
        ks: Vec<f64>,
        values: Vec<Complex64>,
        errors: Vec<f64>,
        phase_value_at_max: Complex64,
    ) -> Result<Self, OscintError> {
        if ks.len() < 8 || ks.len() != values.len() || ks.len() != errors.len() {
            return Err(OscintError::BadGrid);
        }
        if !ks.windows(2).all(|w| w[1] > w[0]) {
            return Err(OscintError::BadGrid);
        }
        let low_confidence = values
            .iter()
            .zip(errors.iter())
            .map(|(v, e)| *e > 1e-10 * v.norm())
            .collect();
        Ok(Self { ks, values, errors, low_confidence, phase_value_at_max })
    }

    pub fn decades(&self) -> f64 {
        (self.ks[self.ks.len() - 1] / self.ks[0]).log10()
    }
}

/// Geometric k-grid with the given points per decade, endpoints included.
pub fn geometric_grid(k_min: f64, k_max: f64, per_decade: usize) -> Vec<f64> {
    assert!(k_max > k_min && k_min > 0.0 && per_decade > 0);
    let decades = (k_max / k_min).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    let mut ks: Vec<f64> = (0..=n)
        .map(|i| k_min * 10f64.powf(decades * i as f64 / n as f64))
        .collect();
    if let Some(last) = ks.last_mut() {
        *last = k_max;
    }
    ks
}

/// Evaluates an integral over the grid (in parallel; output order is keyed
/// by k, hence deterministic). Points that fail with a tolerance report are
/// kept at their best value and flagged low-confidence by the sweep.
pub fn run_sweep<F>(
    eval: F,
    ks: &[f64],
    phase_value_at_max: Complex64,
) -> Result<KSweep, OscintError>
where
    F: Fn(f64) -> Result<QuadValue, OscintError> + Sync,
{
    let results: Vec<Result<QuadValue, OscintError>> =
        ks.par_iter().map(|&k| eval(k)).collect();
    let mut values = Vec::with_capacity(ks.len());
    let mut errors = Vec::with_capacity(ks.len());
    for r in results {
        match r {
            Ok(q) => {
                values.push(q.value);
                errors.push(q.error);
            }
            Err(OscintError::ToleranceNotMet { value, error, .. }) => {
                values.push(value);
                errors.push(error);
            }
            Err(e) => return Err(e),
        }
    }
    KSweep::new(ks.to_vec(), values, errors, phase_value_at_max)
}

/// One fitted term c·e^{ikθ}·k^α·log(k)^β.
#[derive(Debug, Clone, Copy)]
pub struct SeriesTerm {
    pub theta: f64,
    pub alpha: f64,
    pub beta: usize,
    pub coeff: Complex64,
    pub stderr: f64,
}

/// A fitted asymptotic series Σ c_{α,β} k^α log(k)^β (optionally with
/// oscillatory prefactors e^{ikθ_j}).
#[derive(Debug, Clone)]
pub struct AsymptoticSeries {
    /// Terms ordered by asymptotic dominance (α descending, then β descending).
    pub terms: Vec<SeriesTerm>,
    pub exponent_lattice: Vec<f64>,
    pub log_bound: usize,
    /// RMS residual of the fit relative to the data norm.
    pub residual: f64,
    pub condition_number: f64,
}

impl AsymptoticSeries {
    pub fn leading(&self) -> Option<&SeriesTerm> {
        self.terms.first()
    }

    pub fn has_log_terms(&self) -> bool {
        self.terms.iter().any(|t| t.beta >= 1)
    }

    pub fn eval(&self, k: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * Complex64::new(0.0, k * t.theta).exp()
                    * k.powf(t.alpha)
                    * k.ln().powi(t.beta as i32)
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Terms contributing less than this, relative to |I(k_max)|, are pruned.
    pub prune_rel: f64,
    /// Condition-number bound on the (column-scaled) design matrix.
    pub cond_max: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { prune_rel: 1e-3, cond_max: 1e12 }
    }
}

/// Linear least squares of the peeled sweep against the basis
/// {e^{ikθ}·k^α·log(k)^β : θ ∈ thetas, α ∈ lattice, 0 ≤ β ≤ max_log},
/// followed by pruning of negligible terms and a refit.
pub fn fit_series_with_phases(
    sweep: &KSweep,
    thetas: &[f64],
    lattice: &[f64],
    max_log: usize,
    opts: &FitOptions,
) -> Result<AsymptoticSeries, OscintError> {
    // Separating nearby powers of k (or a log factor) needs range; a pure
    // oscillation fit with a single exponent does not.
    if (lattice.len() > 1 || max_log > 0) && sweep.decades() < 2.0 - 1e-9 {
        return Err(OscintError::SweepTooNarrow(sweep.decades()));
    }
    let mut cols: Vec<(f64, f64, usize)> = Vec::new();
    for &theta in thetas {
        for &alpha in lattice {
            for beta in 0..=max_log {
                cols.push((theta, alpha, beta));
            }
        }
    }
    // Peel e^{k f(p)}.
    let peeled: Vec<Complex64> = sweep
        .values
        .iter()
        .zip(sweep.ks.iter())
        .map(|(v, &k)| v * (-sweep.phase_value_at_max * k).exp())
        .collect();

    let (coeffs, stderrs, cond, residual) = solve_ls(&sweep.ks, &peeled, &cols, opts.cond_max)?;

    // Prune terms below the relative-contribution threshold at the largest k.
    let k_max = *sweep.ks.last().unwrap();
    let scale = peeled.last().unwrap().norm().max(1e-300);
    let kept: Vec<(f64, f64, usize)> = cols
        .iter()
        .zip(coeffs.iter())
        .filter(|((_, alpha, beta), c)| {
            c.norm() * k_max.powf(*alpha) * k_max.ln().powi(*beta as i32) >= opts.prune_rel * scale
        })
        .map(|(col, _)| *col)
        .collect();

    let (coeffs, stderrs, cond, residual) = if kept.len() == cols.len() || kept.is_empty() {
        (coeffs, stderrs, cond, residual)
    } else {
        let refit = solve_ls(&sweep.ks, &peeled, &kept, opts.cond_max)?;
        cols = kept;
        refit
    };

    let mut terms: Vec<SeriesTerm> = cols
        .iter()
        .zip(coeffs.iter().zip(stderrs.iter()))
        .map(|(&(theta, alpha, beta), (&coeff, &stderr))| SeriesTerm {
            theta,
            alpha,
            beta,
            coeff,
            stderr,
        })
        .collect();
    terms.sort_by(|a, b| {
        b.alpha
            .partial_cmp(&a.alpha)
            .unwrap()
            .then(b.beta.cmp(&a.beta))
            .then(a.theta.partial_cmp(&b.theta).unwrap())
    });

    let mut lattice_sorted = lattice.to_vec();
    lattice_sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(AsymptoticSeries {
        terms,
        exponent_lattice: lattice_sorted,
        log_bound: max_log,
        residual,
        condition_number: cond,
    })
}

/// Single-phase fit (θ = 0 basis).
pub fn fit_series(
    sweep: &KSweep,
    lattice: &[f64],
    max_log: usize,
    opts: &FitOptions,
) -> Result<AsymptoticSeries, OscintError> {
    fit_series_with_phases(sweep, &[0.0], lattice, max_log, opts)
}

/// Column-scaled complex least squares. Returns (coefficients, standard
/// errors, condition number, relative residual).
fn solve_ls(
    ks: &[f64],
    rhs: &[Complex64],
    cols: &[(f64, f64, usize)],
    cond_max: f64,
) -> Result<(Vec<Complex64>, Vec<f64>, f64, f64), OscintError> {
    use nalgebra::{DMatrix, DVector};
    let m = ks.len();
    let p = cols.len();
    if p == 0 || m < p + 1 {
        return Err(OscintError::SolveFailed);
    }
    let mut design = DMatrix::<Complex64>::zeros(m, p);
    for (i, &k) in ks.iter().enumerate() {
        for (j, &(theta, alpha, beta)) in cols.iter().enumerate() {
            let osc = Complex64::new(0.0, k * theta).exp();
            design[(i, j)] = osc * k.powf(alpha) * k.ln().powi(beta as i32);
        }
    }
    // Scale columns to unit norm.
    let mut scales = vec![0.0f64; p];
    for j in 0..p {
        let s = design.column(j).norm();
        scales[j] = if s > 0.0 { s } else { 1.0 };
        for i in 0..m {
            design[(i, j)] /= Complex64::new(scales[j], 0.0);
        }
    }
    let y = DVector::<Complex64>::from_iterator(m, rhs.iter().cloned());
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = smax / smin.max(1e-300);
    if cond > cond_max {
        return Err(OscintError::IllConditioned(cond));
    }
    let c_scaled = svd
        .solve(&y, 0.0)
        .map_err(|_| OscintError::SolveFailed)?;
    let fitted = &design * &c_scaled;
    let res_vec = &y - &fitted;
    let residual = res_vec.norm() / y.norm().max(1e-300);

    // Standard errors from the pseudo-inverse diagonal of (AᴴA)⁻¹.
    let dof = (m.saturating_sub(p)).max(1) as f64;
    let sigma2 = res_vec.norm_squared() / dof;
    let v_t = svd.v_t.as_ref().expect("svd with V");
    let mut stderrs = vec![0.0f64; p];
    for j in 0..p {
        let mut acc = 0.0;
        for (kk, &s) in svd.singular_values.iter().enumerate() {
            let vjk = v_t[(kk, j)].conj();
            acc += vjk.norm_sqr() / (s * s).max(1e-300);
        }
        stderrs[j] = (sigma2 * acc).sqrt() / scales[j];
    }
    let coeffs: Vec<Complex64> = (0..p)
        .map(|j| c_scaled[j] / Complex64::new(scales[j], 0.0))
        .collect();
    Ok((coeffs, stderrs, cond, residual))
}

/// Model-free estimate of the leading exponent from successive-pair slopes
/// of log|I| against log k, with a drift test for a log(k) factor. A sweep
/// whose modulus is not monotone gets a modulus-envelope estimate and a
/// warning flag.
#[derive(Debug, Clone, Copy)]
pub struct ExponentEstimate {
    pub alpha: f64,
    pub log_flag: bool,
    /// Regression coefficient of slope against 1/log(k); ≈ β for data
    /// k^α·log(k)^β.
    pub beta_hat: f64,
    pub oscillatory_warning: bool,
}

pub fn detect_exponent(sweep: &KSweep) -> Result<ExponentEstimate, OscintError> {
    let n = sweep.ks.len();
    if n < 8 {
        return Err(OscintError::BadGrid);
    }
    let mags: Vec<f64> = sweep.values.iter().map(|v| v.norm()).collect();
    if mags.iter().any(|&m| m == 0.0) {
        return Err(OscintError::BadGrid);
    }
    let monotone = mags.windows(2).all(|w| w[1] <= w[0]) || mags.windows(2).all(|w| w[1] >= w[0]);

    if !monotone {
        // Envelope fallback: global least-squares line through log|I|.
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for (k, m) in sweep.ks.iter().zip(mags.iter()) {
            let x = k.ln();
            let y = m.ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let nn = n as f64;
        let slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
        return Ok(ExponentEstimate {
            alpha: slope,
            log_flag: false,
            beta_hat: 0.0,
            oscillatory_warning: true,
        });
    }

    // Successive-pair slopes and their drift in 1/log k.
    let mut xs = Vec::with_capacity(n - 1);
    let mut ss = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let s = (mags[i + 1] / mags[i]).ln() / (sweep.ks[i + 1] / sweep.ks[i]).ln();
        let kbar = (sweep.ks[i + 1] * sweep.ks[i]).sqrt();
        ss.push(s);
        xs.push(1.0 / kbar.ln());
    }
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ss.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ss.iter()).map(|(x, s)| x * s).sum();
    let beta_hat = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let alpha = (sy - beta_hat * sx) / m;
    Ok(ExponentEstimate {
        alpha,
        log_flag: beta_hat > 0.4,
        beta_hat,
        oscillatory_warning: false,
    })
}

/// Classification data a fitted series is checked against.
#[derive(Debug, Clone, Copy)]
pub struct StructureInput {
    pub condition: Condition,
    /// Real dimension of Ker(dφ − I) (the Hessian kernel for model phases).
    pub kernel_dim_real: usize,
    /// Real dimension of the integration space.
    pub ambient_real_dim: usize,
}

/// Result of checking the fitted series against the structural constraints:
/// no log terms under the transversality/kernel conditions, and (in the
/// transverse case) leading exponent −(n − kernel_dim)/2.
#[derive(Debug, Clone)]
pub struct StructureReport {
    pub log_constraint_applies: bool,
    pub log_ok: bool,
    pub leading_constraint_applies: bool,
    pub leading_ok: bool,
    pub expected_leading: Option<f64>,
    pub messages: Vec<String>,
}

impl StructureReport {
    pub fn passes(&self) -> bool {
        (!self.log_constraint_applies || self.log_ok)
            && (!self.leading_constraint_applies || self.leading_ok)
    }
}

pub fn verify_structure(series: &AsymptoticSeries, input: &StructureInput) -> StructureReport {
    let mut messages = Vec::new();
    let log_constraint_applies = matches!(
        input.condition,
        Condition::TransverseSmooth | Condition::KernelDimLe1
    );
    let log_ok = !series.has_log_terms();
    if log_constraint_applies && !log_ok {
        messages.push(format!(
            "log terms present under condition {} (B must be {{0}})",
            input.condition.as_str()
        ));
    }
    let leading_constraint_applies = input.condition == Condition::TransverseSmooth;
    let expected = -((input.ambient_real_dim as f64 - input.kernel_dim_real as f64) / 2.0);
    let leading_ok = match series.leading() {
        Some(t) if leading_constraint_applies => (t.alpha - expected).abs() < 1e-9,
        Some(_) => true,
        None => false,
    };
    if leading_constraint_applies && !leading_ok {
        messages.push(format!(
            "leading exponent {:?} differs from -(n - kernel)/2 = {expected}",
            series.leading().map(|t| t.alpha)
        ));
    }
    StructureReport {
        log_constraint_applies,
        log_ok,
        leading_constraint_applies,
        leading_ok,
        expected_leading: leading_constraint_applies.then_some(expected),
        messages,
    }
}
