//! Linear algebra of the phase function at a fixed point.
//!
//! A real linear map A on R^{2n} is identified with the pair (H, K) of
//! complex n×n matrices acting by ξ ↦ Hξ + Kξ̄ under the complex structure
//! z_j = x_j + i·x_{n+j}. When A is symplectic the blocks satisfy
//!
//! ```text
//! Hᵗ H̄ − K̄ᵗ K = I,      Hᵗ K̄ − K̄ᵗ H = 0,
//! ```
//!
//! and the Hessian of the phase at the fixed point, with respect to the
//! (∂z, ∂z̄) basis, is the complex symmetric 2n×2n matrix
//!
//! ```text
//! Hess(P) = ¼ · dRᵗ C dR,   dR = [I 0; H K; 0 I; K̄ H̄],
//! C = [0 0 −I 2I; 0 0 0 −I; −I 0 0 0; 2I −I 0 0].
//! ```
//!
//! Hessians here are quadratic-form matrices: Q(p+v) ≈ Q(p) + vᵗ·Hess·v, so
//! they carry half of the raw second-derivative matrix. The radical of the
//! associated bilinear form Ψ equals Ker(dφ − I) on the complexified tangent
//! space, and −4·Re Ψ(η, η̄) = |v′−w′|² + |v″−w″|² where dR(η) = (v′,w′,v″,w″).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

type CMat = DMatrix<Complex64>;
type CVec = DVector<Complex64>;

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("real matrix must act on R^(2n); got odd dimension {0}")]
    OddDimension(usize),
    #[error("matrix must be square; got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("blocks H and K must have equal square shape")]
    BlockShapeMismatch,
    #[error("dimension mismatch: Hess is {0}x{0} but dR has {1} rows")]
    ChainRuleDims(usize, usize),
    #[error("input Hessian is not symmetric (deviation {0:.3e})")]
    NotSymmetric(f64),
}

/// Relative singular-value threshold for rank and radical computations.
pub const RANK_TOL: f64 = 1e-8;

/// The (H, K) blocks of a real linear map in complex coordinates.
#[derive(Debug, Clone)]
pub struct LinearBlocks {
    pub h: CMat,
    pub k: CMat,
}

impl LinearBlocks {
    pub fn new(h: CMat, k: CMat) -> Result<Self, PhaseError> {
        if h.nrows() != h.ncols() {
            return Err(PhaseError::NotSquare(h.nrows(), h.ncols()));
        }
        if h.shape() != k.shape() {
            return Err(PhaseError::BlockShapeMismatch);
        }
        Ok(Self { h, k })
    }

    /// Scalar blocks for n = 1.
    pub fn scalar(h: Complex64, k: Complex64) -> Self {
        Self {
            h: CMat::from_element(1, 1, h),
            k: CMat::from_element(1, 1, k),
        }
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    /// Deviation from the symplectic block constraints; zero for blocks of a
    /// symplectic map.
    pub fn symplectic_defect(&self) -> f64 {
        let n = self.n();
        let id = CMat::identity(n, n);
        let hbar = self.h.map(|c| c.conj());
        let kbar = self.k.map(|c| c.conj());
        let c1 = self.h.transpose() * &hbar - kbar.transpose() * &self.k - id;
        let c2 = self.h.transpose() * &kbar - kbar.transpose() * &self.h;
        c1.norm().hypot(c2.norm())
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        self.symplectic_defect() <= tol
    }

    /// Reconstructs the real 2n×2n matrix acting on (x; y) with z = x + iy.
    pub fn to_real(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let h = self.h[(i, j)];
                let k = self.k[(i, j)];
                a[(i, j)] = h.re + k.re;
                a[(i, n + j)] = k.im - h.im;
                a[(n + i, j)] = h.im + k.im;
                a[(n + i, n + j)] = h.re - k.re;
            }
        }
        a
    }

    /// The complex-linear extension on C^{2n} in the (∂z, ∂z̄) basis:
    /// [[H, K], [K̄, H̄]].
    pub fn complexified(&self) -> CMat {
        let n = self.n();
        let mut m = CMat::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.h[(i, j)];
                m[(i, n + j)] = self.k[(i, j)];
                m[(n + i, j)] = self.k[(i, j)].conj();
                m[(n + i, n + j)] = self.h[(i, j)].conj();
            }
        }
        m
    }
}

/// Splits a real linear map on R^{2n} into the unique blocks (H, K) with
/// A(ξ) = Hξ + Kξ̄ under z_j = x_j + i·x_{n+j}.
pub fn decompose_linear(a: &DMatrix<f64>) -> Result<LinearBlocks, PhaseError> {
    if a.nrows() != a.ncols() {
        return Err(PhaseError::NotSquare(a.nrows(), a.ncols()));
    }
    if a.nrows() % 2 != 0 {
        return Err(PhaseError::OddDimension(a.nrows()));
    }
    let n = a.nrows() / 2;
    let mut h = CMat::zeros(n, n);
    let mut k = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let a11 = a[(i, j)];
            let a12 = a[(i, n + j)];
            let a21 = a[(n + i, j)];
            let a22 = a[(n + i, n + j)];
            h[(i, j)] = Complex64::new((a11 + a22) / 2.0, (a21 - a12) / 2.0);
            k[(i, j)] = Complex64::new((a11 - a22) / 2.0, (a21 + a12) / 2.0);
        }
    }
    let blocks = LinearBlocks { h, k };
    debug_assert!((blocks.to_real() - a).norm() <= 1e-12 * (1.0 + a.norm()));
    Ok(blocks)
}

/// Hess(χ) at the diagonal with respect to (∂y₁, ∂y₂, ∂ȳ₁, ∂ȳ₂): the block
/// matrix ¼·[0 0 −I 2I; 0 0 0 −I; −I 0 0 0; 2I −I 0 0].
pub fn hess_chi(n: usize) -> CMat {
    let mut c = CMat::zeros(4 * n, 4 * n);
    let quarter = Complex64::new(0.25, 0.0);
    for i in 0..n {
        // (y1, ȳ1) block: −I, (y1, ȳ2): 2I
        c[(i, 2 * n + i)] = -quarter;
        c[(2 * n + i, i)] = -quarter;
        c[(i, 3 * n + i)] = 2.0 * quarter;
        c[(3 * n + i, i)] = 2.0 * quarter;
        // (y2, ȳ2) block: −I
        c[(n + i, 3 * n + i)] = -quarter;
        c[(3 * n + i, n + i)] = -quarter;
    }
    c
}

/// dR for R(z) = (z, φ(z)) at the fixed point: the 4n×2n block matrix
/// [I 0; H K; 0 I; K̄ H̄] mapping (∂z, ∂z̄) to (∂y₁, ∂y₂, ∂ȳ₁, ∂ȳ₂).
pub fn dr_matrix(b: &LinearBlocks) -> CMat {
    let n = b.n();
    let mut dr = CMat::zeros(4 * n, 2 * n);
    for i in 0..n {
        dr[(i, i)] = Complex64::new(1.0, 0.0);
        dr[(2 * n + i, n + i)] = Complex64::new(1.0, 0.0);
        for j in 0..n {
            dr[(n + i, j)] = b.h[(i, j)];
            dr[(n + i, n + j)] = b.k[(i, j)];
            dr[(3 * n + i, j)] = b.k[(i, j)].conj();
            dr[(3 * n + i, n + j)] = b.h[(i, j)].conj();
        }
    }
    dr
}

/// Chain rule for Hessians at a stationary value: Hess(Q∘R) = dRᵗ·Hess(Q)·dR.
pub fn chain_rule_hessian(hess_q: &CMat, dr: &CMat) -> Result<CMat, PhaseError> {
    if hess_q.nrows() != hess_q.ncols() {
        return Err(PhaseError::NotSquare(hess_q.nrows(), hess_q.ncols()));
    }
    if hess_q.nrows() != dr.nrows() {
        return Err(PhaseError::ChainRuleDims(hess_q.nrows(), dr.nrows()));
    }
    let defect = (hess_q - hess_q.transpose()).norm();
    if defect > 1e-10 * (1.0 + hess_q.norm()) {
        return Err(PhaseError::NotSymmetric(defect));
    }
    Ok(dr.transpose() * hess_q * dr)
}

/// A complex symmetric 2n×2n phase Hessian together with the dimension of
/// its radical (complex nullity by singular-value rank test).
#[derive(Debug, Clone)]
pub struct PhaseHessian {
    pub matrix: CMat,
    pub radical_dim: usize,
}

impl PhaseHessian {
    pub fn new(matrix: CMat) -> Self {
        // Symmetrize away roundoff; the construction is symmetric exactly.
        let sym = (&matrix + matrix.transpose()).map(|c| 0.5 * c);
        let radical_dim = null_space(&sym, RANK_TOL).len();
        Self { matrix: sym, radical_dim }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// Ψ(u, v) = uᵗ · matrix · v (bilinear, not sesquilinear).
    pub fn form(&self, u: &CVec, v: &CVec) -> Complex64 {
        (u.transpose() * &self.matrix * v)[(0, 0)]
    }
}

/// Hessian of the phase at a fixed point with differential blocks (H, K);
/// factors through the chain rule with Hess(χ).
pub fn hessian_p(b: &LinearBlocks) -> PhaseHessian {
    let dr = dr_matrix(b);
    let m = chain_rule_hessian(&hess_chi(b.n()), &dr).expect("shapes agree by construction");
    PhaseHessian::new(m)
}

/// Orthonormal basis of the null space of a complex matrix, by SVD with a
/// relative singular-value threshold.
pub fn null_space(m: &CMat, rel_tol: f64) -> Vec<CVec> {
    let svd = m.clone().svd(false, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let v_t = svd.v_t.expect("svd computed with V");
    let mut basis = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= rel_tol * smax.max(1e-300) {
            basis.push(v_t.row(i).map(|c| c.conj()).transpose());
        }
    }
    basis
}

/// Orthonormal basis of the radical {ξ : Ψ(ξ, η) = 0 ∀η}.
pub fn radical(h: &PhaseHessian) -> Vec<CVec> {
    null_space(&h.matrix, RANK_TOL)
}

/// Complex kernel of (dφ − I) on the complexified tangent space, from the
/// blocks of dφ.
pub fn complexified_kernel(b: &LinearBlocks) -> Vec<CVec> {
    let n = b.n();
    let m = b.complexified() - CMat::identity(2 * n, 2 * n);
    null_space(&m, RANK_TOL)
}

/// Sines of the principal angles between two subspaces given by orthonormal
/// bases. Accurate near zero (the regime the radical theorem tests live in).
/// Returns one sine per dimension of the first subspace; dimension mismatch
/// yields a 1.0 entry.
pub fn principal_angle_sines(u: &[CVec], w: &[CVec]) -> Vec<f64> {
    if u.is_empty() && w.is_empty() {
        return Vec::new();
    }
    if u.len() != w.len() {
        return vec![1.0];
    }
    let dim = u[0].len();
    let um = CMat::from_fn(dim, u.len(), |i, j| u[j][i]);
    let wm = CMat::from_fn(dim, w.len(), |i, j| w[j][i]);
    // Residual of projecting U onto span(W): singular values are the sines.
    let proj = &wm * (wm.adjoint() * &um);
    let resid = &um - proj;
    let svd = resid.svd(false, false);
    let mut sines: Vec<f64> = svd.singular_values.iter().cloned().collect();
    sines.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sines
}

/// The conjugate of a tangent vector in (∂z, ∂z̄) coordinates: blocks swap
/// and conjugate.
pub fn conjugate_tangent(eta: &CVec) -> CVec {
    let n = eta.len() / 2;
    CVec::from_fn(eta.len(), |i, _| {
        if i < n {
            eta[n + i].conj()
        } else {
            eta[i - n].conj()
        }
    })
}

/// Outcome of the negativity probe on a phase Hessian.
#[derive(Debug, Clone)]
pub struct NegativityReport {
    pub samples: usize,
    /// Max relative error of −4ReΨ(η,η̄) = |v′−w′|² + |v″−w″|².
    pub max_identity_error: f64,
    /// Min of −4ReΨ(η,η̄)/|η|² over samples kept away from the radical.
    pub min_margin: f64,
    /// Samples where ReΨ(η,η̄) ≥ 0 despite a non-radical direction.
    pub violations: usize,
}

/// Checks, on random complexified directions, that Re Ψ(η, η̄) < 0 away from
/// the radical and that the defect identity holds:
/// −4·Re Ψ(η, η̄) = |v′−w′|² + |v″−w″|² with dR(η) = (v′, w′, v″, w″).
pub fn negativity_check<R: Rng>(
    h: &PhaseHessian,
    b: &LinearBlocks,
    samples: usize,
    rng: &mut R,
) -> NegativityReport {
    let n = b.n();
    let dr = dr_matrix(b);
    let rad = radical(h);
    let mut max_err = 0.0f64;
    let mut min_margin = f64::INFINITY;
    let mut violations = 0usize;
    for _ in 0..samples {
        let eta = CVec::from_fn(2 * n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let eta_bar = conjugate_tangent(&eta);
        let psi = h.form(&eta, &eta_bar);
        let image = &dr * &eta;
        let mut rhs = 0.0;
        for i in 0..n {
            rhs += (image[i] - image[n + i]).norm_sqr();
            rhs += (image[2 * n + i] - image[3 * n + i]).norm_sqr();
        }
        let lhs = -4.0 * psi.re;
        let err = (lhs - rhs).abs() / rhs.max(1e-30);
        max_err = max_err.max(err);

        // Distance to the radical: skip near-radical samples for the strict
        // negativity margin.
        let mut residual = eta.clone();
        for r in &rad {
            let coeff = r.adjoint() * &residual;
            residual -= r * coeff[(0, 0)];
        }
        if residual.norm() > 1e-3 * eta.norm() {
            let margin = lhs / eta.norm_squared();
            min_margin = min_margin.min(margin);
            if psi.re >= 0.0 {
                violations += 1;
            }
        }
    }
    NegativityReport { samples, max_identity_error: max_err, min_margin, violations }
}

/// Matrix exponential by scaling and squaring with a Taylor kernel; inputs
/// here are O(1) Hamiltonian matrices, well inside the stable regime.
pub fn real_matrix_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.norm();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = m.map(|x| x / 2f64.powi(s as i32));
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut acc = DMatrix::<f64>::identity(n, n);
    for j in 1..=24 {
        term = (&term * &scaled).map(|x| x / j as f64);
        acc += &term;
        if term.norm() < 1e-18 * acc.norm() {
            break;
        }
    }
    for _ in 0..s {
        acc = &acc * &acc;
    }
    acc
}

/// The symplectic structure matrix Ω = [0 I; −I 0] on R^{2n} in the (x; y)
/// block ordering.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        w[(i, n + i)] = 1.0;
        w[(n + i, i)] = -1.0;
    }
    w
}

/// A random symplectic matrix exp(Ω⁻¹ S) with S symmetric; exactly
/// symplectic up to roundoff and generically with trivial fixed space.
pub fn random_symplectic<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..2 * n {
        for j in i..2 * n {
            let v = rng.gen_range(-0.7..0.7);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let x = -omega(n) * s; // Ω⁻¹ = −Ω
    real_matrix_exp(&x)
}

/// Embeds two symplectic matrices as a direct sum respecting the (x; y)
/// block ordering of the ambient R^{2(a+b)}.
pub fn symplectic_direct_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let na = a.nrows() / 2;
    let nb = b.nrows() / 2;
    let n = na + nb;
    let map_a = |i: usize| if i < na { i } else { n + (i - na) };
    let map_b = |i: usize| if i < nb { na + i } else { n + na + (i - nb) };
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..2 * na {
        for j in 0..2 * na {
            out[(map_a(i), map_a(j))] = a[(i, j)];
        }
    }
    for i in 0..2 * nb {
        for j in 0..2 * nb {
            out[(map_b(i), map_b(j))] = b[(i, j)];
        }
    }
    out
}

/// A random symplectic matrix with a planted fixed subspace: the direct sum
/// of a shear (or identity) 2×2 block with a generic factor, conjugated by a
/// random symplectic change of frame.
pub fn random_symplectic_with_kernel<R: Rng>(
    n: usize,
    planted: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    assert!(planted >= 1 && planted <= n);
    let mut core = if planted == n && rng.gen_bool(0.3) {
        DMatrix::identity(2 * n, 2 * n)
    } else {
        let mut block = {
            let c = rng.gen_range(0.5..2.0);
            let mut m = DMatrix::identity(2, 2);
            m[(0, 1)] = c; // shear fixes one direction
            m
        };
        for _ in 1..planted {
            block = symplectic_direct_sum(&block, &DMatrix::identity(2, 2));
        }
        if planted < n {
            block = symplectic_direct_sum(&block, &random_symplectic(n - planted, rng));
        }
        block
    };
    let t = random_symplectic(n, rng);
    let t_inv = t.clone().try_inverse().expect("symplectic matrices are invertible");
    core = &t_inv * core * &t;
    core
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn decompose_identity() {
        let a = DMatrix::<f64>::identity(4, 4);
        let b = decompose_linear(&a).unwrap();
        assert!((b.h.clone() - CMat::identity(2, 2)).norm() < 1e-15);
        assert!(b.k.norm() < 1e-15);
    }

    #[test]
    fn decompose_rotation_is_complex_scalar() {
        let t = 0.7f64;
        let a = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        let b = decompose_linear(&a).unwrap();
        assert!((b.h[(0, 0)] - c(t.cos(), t.sin())).norm() < 1e-15);
        assert!(b.k[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn decompose_hyperbolic_stretch() {
        // A = diag(λ, 1/λ) → H = (λ+1/λ)/2, K = (λ−1/λ)/2.
        let l = 1.8f64;
        let a = DMatrix::from_row_slice(2, 2, &[l, 0.0, 0.0, 1.0 / l]);
        let b = decompose_linear(&a).unwrap();
        assert!((b.h[(0, 0)] - c((l + 1.0 / l) / 2.0, 0.0)).norm() < 1e-15);
        assert!((b.k[(0, 0)] - c((l - 1.0 / l) / 2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn decompose_rejects_odd_dimension() {
        let a = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(decompose_linear(&a), Err(PhaseError::OddDimension(3))));
    }

    #[test]
    fn roundtrip_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for _ in 0..20 {
                let a = DMatrix::from_fn(2 * n, 2 * n, |_, _| rng.gen_range(-2.0..2.0));
                let b = decompose_linear(&a).unwrap();
                assert!((b.to_real() - &a).norm() < 1e-13 * (1.0 + a.norm()));
            }
        }
    }

    #[test]
    fn generated_symplectics_satisfy_block_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=3 {
            for _ in 0..25 {
                let a = random_symplectic(n, &mut rng);
                let b = decompose_linear(&a).unwrap();
                assert!(b.is_symplectic(1e-10), "defect {}", b.symplectic_defect());
                let k = random_symplectic_with_kernel(n, 1, &mut rng);
                let bk = decompose_linear(&k).unwrap();
                assert!(bk.is_symplectic(1e-9), "defect {}", bk.symplectic_defect());
            }
        }
    }

    #[test]
    fn hessian_of_identity_blocks_is_zero() {
        let b = LinearBlocks::scalar(c(1.0, 0.0), c(0.0, 0.0));
        let h = hessian_p(&b);
        assert!(h.matrix.norm() < 1e-15);
        assert_eq!(h.radical_dim, 2);
        assert_eq!(radical(&h).len(), 2);
    }

    #[test]
    fn hessian_of_rotation_closed_form() {
        // (H, K) = (e^{it}, 0) → Hess = ½(e^{−it} − 1)·[[0,1],[1,0]].
        for t in [0.4, std::f64::consts::FRAC_PI_3, 2.9] {
            let b = LinearBlocks::scalar(Complex64::from_polar(1.0, t), c(0.0, 0.0));
            let h = hessian_p(&b);
            let w = 0.5 * (Complex64::from_polar(1.0, -t) - 1.0);
            assert!((h.matrix[(0, 0)]).norm() < 1e-15);
            assert!((h.matrix[(1, 1)]).norm() < 1e-15);
            assert!((h.matrix[(0, 1)] - w).norm() < 1e-15);
            assert!((h.matrix[(1, 0)] - w).norm() < 1e-15);
            assert_eq!(h.radical_dim, 0, "nondegenerate for t ≠ 0");
        }
    }

    #[test]
    fn rotation_negativity_closed_form() {
        // η = ∂z: Re Ψ(η, η̄) = ½(cos t − 1) < 0.
        let t = 1.1f64;
        let b = LinearBlocks::scalar(Complex64::from_polar(1.0, t), c(0.0, 0.0));
        let h = hessian_p(&b);
        let eta = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let psi = h.form(&eta, &conjugate_tangent(&eta));
        assert!((psi.re - 0.5 * (t.cos() - 1.0)).abs() < 1e-15);
        assert!(psi.re < 0.0);
    }

    #[test]
    fn hessian_factors_through_chain_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=3 {
            for _ in 0..17 {
                let a = random_symplectic(n, &mut rng);
                let b = decompose_linear(&a).unwrap();
                let direct = hessian_p(&b);
                let via_chain =
                    chain_rule_hessian(&hess_chi(n), &dr_matrix(&b)).unwrap();
                assert!((direct.matrix.clone() - via_chain).norm() < 1e-12);
                // Symmetry is exact up to roundoff.
                let defect = (direct.matrix.clone() - direct.matrix.transpose()).norm();
                assert!(defect < 1e-14);
            }
        }
    }

    #[test]
    fn chain_rule_scalar_and_identity_cases() {
        let hq = CMat::from_element(1, 1, c(1.0, 0.0));
        let dr = CMat::from_element(1, 1, c(2.0, 0.0));
        let out = chain_rule_hessian(&hq, &dr).unwrap();
        assert!((out[(0, 0)] - c(4.0, 0.0)).norm() < 1e-15);

        let hq = hess_chi(2);
        let id = CMat::identity(8, 8);
        let out = chain_rule_hessian(&hq, &id).unwrap();
        assert!((out - hq).norm() < 1e-15);
    }

    #[test]
    fn chain_rule_rejects_dimension_mismatch() {
        let hq = CMat::identity(4, 4);
        let dr = CMat::identity(6, 6);
        assert!(matches!(
            chain_rule_hessian(&hq, &dr),
            Err(PhaseError::ChainRuleDims(4, 6))
        ));
    }

    #[test]
    fn radical_theorem_random_symplectic() {
        // radical(Hess(P)) = Ker(dφ − I) on the complexified tangent space,
        // compared as subspaces; exercised with planted kernels as well as
        // generic (trivial-kernel) draws.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in 1..=3usize {
            for trial in 0..40 {
                let a = if trial % 3 == 0 {
                    random_symplectic(n, &mut rng)
                } else {
                    let planted = 1 + (trial % n.max(1)).min(n - 1);
                    random_symplectic_with_kernel(n, planted, &mut rng)
                };
                let b = decompose_linear(&a).unwrap();
                let h = hessian_p(&b);
                let rad = radical(&h);
                let ker = complexified_kernel(&b);
                assert_eq!(
                    rad.len(),
                    ker.len(),
                    "radical dim {} vs kernel dim {} (n={n}, trial={trial})",
                    rad.len(),
                    ker.len()
                );
                for s in principal_angle_sines(&rad, &ker) {
                    assert!(s <= 1e-8, "principal angle sine {s}");
                }
            }
        }
    }

    #[test]
    fn negativity_identity_random_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=3usize {
            for _ in 0..30 {
                let a = random_symplectic(n, &mut rng);
                let b = decompose_linear(&a).unwrap();
                let h = hessian_p(&b);
                let rep = negativity_check(&h, &b, 10, &mut rng);
                assert!(rep.max_identity_error <= 1e-10, "{:?}", rep);
                assert_eq!(rep.violations, 0, "{:?}", rep);
            }
        }
    }

    #[test]
    fn negativity_zero_form_for_identity() {
        let b = LinearBlocks::scalar(c(1.0, 0.0), c(0.0, 0.0));
        let h = hessian_p(&b);
        let eta = CVec::from_vec(vec![c(0.3, -0.2), c(0.8, 0.1)]);
        let psi = h.form(&eta, &conjugate_tangent(&eta));
        assert!(psi.norm() < 1e-15);
    }

    #[test]
    fn cross_module_radical_dim_equals_charvar_kernel_dim() {
        // dφ restricted to the level-set tangent plane at an appendix fixed
        // point, read through an orthonormal frame with the standard complex
        // structure, has radical dimension equal to the real kernel
        // dimension of (dφ − I): 0 for φ, 1 for φ² (the complexified kernel
        // doubles only the real dimension, not the complex one).
        use crate::charvar::{
            classify_fixed_point, CharVarPoint, Level, MappingClassWord, SolverOptions,
        };
        let l = Level::new(-0.25).unwrap();
        let p = CharVarPoint::new(0.5, -1.0, -1.0).unwrap();
        let opts = SolverOptions::default();
        for (reps, expected) in [(1usize, 0usize), (2, 1)] {
            let w = MappingClassWord::parse("B^-1 A").unwrap().repeat(reps);
            let rec = classify_fixed_point(&w, p, l, &opts).unwrap();
            assert_eq!(rec.kernel_dim, expected);
            let rm = rec.reduced_map;
            let a = DMatrix::from_row_slice(
                2,
                2,
                &[rm[(0, 0)], rm[(0, 1)], rm[(1, 0)], rm[(1, 1)]],
            );
            let b = decompose_linear(&a).unwrap();
            assert!(
                b.is_symplectic(1e-9),
                "restricted twist map should be area preserving: defect {}",
                b.symplectic_defect()
            );
            let h = hessian_p(&b);
            assert_eq!(h.radical_dim, expected);
        }
    }
}
