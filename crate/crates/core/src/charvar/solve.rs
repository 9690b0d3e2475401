//! Grid-seeded fixed-point solving on a level set, duplicate merging, and
//! transversality classification.
//!
//! Fixed points of a word w on the level l solve the overdetermined system
//! {w(p) − p = 0, L(p) − l = 0} (4 equations, 3 unknowns). Seeds are taken
//! from a dense grid over [−2, 2]³ intersected with a band |L − l| < 0.2
//! (trace coordinates of SU(2) characters lie in [−2, 2]³, so the box is
//! exact), then polished by Gauss-Newton least-squares steps.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Matrix4x3, Vector2, Vector3, Vector4};
use rayon::prelude::*;

use super::{
    casimir, casimir_gradient, tangent_space_unchecked, CharVarError, CharVarPoint, Level,
    MappingClassWord,
};

/// Tolerances and knobs for the fixed-point machinery. Defaults follow the
/// exact-rational scale of the appendix data.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Grid spacing over [−2, 2]³ for seeding.
    pub grid_step: f64,
    /// Seeds must satisfy |L(p) − l| < level_band.
    pub level_band: f64,
    /// Gauss-Newton convergence tolerance on the step and residual.
    pub newton_tol: f64,
    /// Maximum Gauss-Newton iterations per seed.
    pub max_iterations: usize,
    /// Residual bound for a polished point to count as converged.
    pub residual_accept: f64,
    /// Cluster radius for duplicate merging.
    pub merge_radius: f64,
    /// Singular values below rank_tol · σ_max count as zero in rank tests.
    pub rank_tol: f64,
    /// Merged cluster count above which the fixed set is reported as a
    /// positive-dimensional family rather than a point list.
    pub non_isolated_threshold: usize,
    /// Probe radius for the local solution-set sampling in classification.
    pub probe_radius: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_step: 0.05,
            level_band: 0.2,
            newton_tol: 1e-12,
            max_iterations: 60,
            residual_accept: 1e-10,
            merge_radius: 1e-6,
            rank_tol: 1e-8,
            non_isolated_threshold: 24,
            probe_radius: 1e-3,
        }
    }
}

/// Theorem-style classification of a fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// The fixed set near the point is a manifold of dimension equal to
    /// dim Ker(dφ − I) on the tangent plane.
    TransverseSmooth,
    /// dim Ker(dφ − I) ≤ 1 on the tangent plane.
    KernelDimLe1,
    /// Isolated stationary point of the holomorphic phase germ. Assignable
    /// only by callers that construct the phase model; the solver never
    /// produces it.
    IsolatedHolomorphic,
    Unclassified,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::TransverseSmooth => "TRANSVERSE_SMOOTH",
            Condition::KernelDimLe1 => "KERNEL_DIM_LE_1",
            Condition::IsolatedHolomorphic => "ISOLATED_HOLOMORPHIC",
            Condition::Unclassified => "UNCLASSIFIED",
        }
    }
}

/// A classified fixed point.
#[derive(Debug, Clone)]
pub struct FixedPointRecord {
    pub point: CharVarPoint,
    pub level: Level,
    /// Orthonormal basis of the level-set tangent plane at the point.
    pub tangent_basis: [Vector3<f64>; 2],
    /// dim Ker(reduced_map − I) by singular-value rank test.
    pub kernel_dim: usize,
    pub condition: Condition,
    /// dφ restricted to the tangent plane, in the tangent basis.
    pub reduced_map: Matrix2<f64>,
    /// Joint residual |w(p) − p| + |L(p) − l| at the polished point.
    pub residual: f64,
}

/// Census of isolated fixed points, plus any level-set-singular solutions
/// that could not be classified.
#[derive(Debug, Clone)]
pub struct Census {
    pub records: Vec<FixedPointRecord>,
    pub singular_points: Vec<CharVarPoint>,
    pub seeds_tried: usize,
    pub seeds_converged: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonIsolatedReason {
    IdentityWord,
    CurveDetected,
}

/// Structured report for words whose fixed set is not a finite point list.
#[derive(Debug, Clone)]
pub struct NonIsolatedReport {
    pub reason: NonIsolatedReason,
    pub cluster_count: usize,
    /// A deterministic sample of the detected family.
    pub sample_points: Vec<CharVarPoint>,
}

#[derive(Debug, Clone)]
pub enum CensusOutcome {
    Isolated(Census),
    NonIsolated(NonIsolatedReport),
}

fn residual(w: &MappingClassWord, l: f64, p: CharVarPoint) -> Vector4<f64> {
    let q = w.apply(p);
    Vector4::new(q.x - p.x, q.y - p.y, q.z - p.z, casimir(p) - l)
}

/// One Gauss-Newton polish from a seed. Returns the converged point when the
/// joint residual drops below the acceptance bound.
fn newton_polish(
    w: &MappingClassWord,
    l: f64,
    seed: CharVarPoint,
    opts: &SolverOptions,
) -> Option<(CharVarPoint, f64)> {
    let mut p = seed.to_vector();
    for _ in 0..opts.max_iterations {
        let pt = CharVarPoint::from_vector(p);
        let r = residual(w, l, pt);
        let jw = w.jacobian(pt) - Matrix3::identity();
        let g = casimir_gradient(pt);
        let j = Matrix4x3::from_rows(&[
            jw.row(0).into_owned(),
            jw.row(1).into_owned(),
            jw.row(2).into_owned(),
            g.transpose(),
        ]);
        // Least-squares step via normal equations; the 3×3 system is tiny and
        // well scaled near simple roots.
        let jtj = j.transpose() * j;
        let jtr = j.transpose() * r;
        let step = match jtj.lu().solve(&jtr) {
            Some(s) => -s,
            None => return None,
        };
        p += step;
        if !p.iter().all(|c| c.is_finite()) || p.norm() > 20.0 {
            return None;
        }
        if step.norm() < opts.newton_tol {
            break;
        }
    }
    let pt = CharVarPoint::from_vector(p);
    let res = residual(w, l, pt).norm();
    (res <= opts.residual_accept).then_some((pt, res))
}

fn grid_seeds(l: f64, opts: &SolverOptions) -> Vec<CharVarPoint> {
    let n = (4.0 / opts.grid_step).round() as usize;
    let coord = |i: usize| -2.0 + 4.0 * i as f64 / n as f64;
    let mut seeds = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let p = CharVarPoint { x: coord(i), y: coord(j), z: coord(k) };
                if (casimir(p) - l).abs() < opts.level_band {
                    seeds.push(p);
                }
            }
        }
    }
    seeds
}

/// Canonical sort + cluster merge. Sorting first makes the result independent
/// of seed evaluation order.
fn merge_points(mut pts: Vec<(CharVarPoint, f64)>, radius: f64) -> Vec<(CharVarPoint, f64)> {
    pts.sort_by(|a, b| {
        (a.0.x, a.0.y, a.0.z)
            .partial_cmp(&(b.0.x, b.0.y, b.0.z))
            .unwrap()
    });
    let mut reps: Vec<(CharVarPoint, f64)> = Vec::new();
    for (p, r) in pts {
        if let Some(existing) = reps.iter_mut().find(|(q, _)| q.dist(p) <= radius) {
            if r < existing.1 {
                *existing = (p, r);
            }
        } else {
            reps.push((p, r));
        }
    }
    reps
}

/// All isolated solutions of {w(p) = p, L(p) = l}, classified; or a
/// structured non-isolated report when the solutions form a family.
pub fn fixed_points(
    w: &MappingClassWord,
    level: Level,
    opts: &SolverOptions,
) -> Result<CensusOutcome, CharVarError> {
    if w.is_identity() {
        return Err(CharVarError::IdentityWord);
    }
    let l = level.value();
    let seeds = grid_seeds(l, opts);
    let seeds_tried = seeds.len();
    let converged: Vec<(CharVarPoint, f64)> = seeds
        .par_iter()
        .filter_map(|&s| newton_polish(w, l, s, opts))
        .collect();
    let seeds_converged = converged.len();
    let merged = merge_points(converged, opts.merge_radius);

    if merged.len() > opts.non_isolated_threshold {
        let sample: Vec<CharVarPoint> = merged.iter().take(16).map(|(p, _)| *p).collect();
        return Ok(CensusOutcome::NonIsolated(NonIsolatedReport {
            reason: NonIsolatedReason::CurveDetected,
            cluster_count: merged.len(),
            sample_points: sample,
        }));
    }

    let mut records = Vec::new();
    let mut singular = Vec::new();
    for (p, _res) in &merged {
        match classify_fixed_point(w, *p, level, opts) {
            Ok(rec) => records.push(rec),
            Err(CharVarError::SingularLevelPoint(..)) => singular.push(*p),
            Err(e) => return Err(e),
        }
    }
    Ok(CensusOutcome::Isolated(Census {
        records,
        singular_points: singular,
        seeds_tried,
        seeds_converged,
    }))
}

/// dφ restricted to the span of a (not necessarily orthonormal) basis,
/// expressed in that basis: solves B · R = J · B in the least-squares sense,
/// which is exact when the span is J-invariant.
pub fn reduced_map_in_basis(j: &Matrix3<f64>, basis: &[Vector3<f64>; 2]) -> Matrix2<f64> {
    let b = Matrix3x2::from_columns(&[basis[0], basis[1]]);
    let jb = j * b;
    let btb = b.transpose() * b;
    let inv = btb.try_inverse().expect("tangent basis must be independent");
    inv * (b.transpose() * jb)
}

/// Probes the local solution set near a fixed point along given directions;
/// returns polished solutions at distance within [r/10, 10r] of p.
fn probe_solutions(
    w: &MappingClassWord,
    l: f64,
    p: CharVarPoint,
    dirs: &[Vector3<f64>],
    opts: &SolverOptions,
) -> Vec<CharVarPoint> {
    let r = opts.probe_radius;
    let mut found = Vec::new();
    for d in dirs {
        let seed = CharVarPoint::from_vector(p.to_vector() + d * r);
        if let Some((q, _)) = newton_polish(w, l, seed, opts) {
            let dist = q.dist(p);
            if dist >= r / 10.0 && dist <= 10.0 * r {
                found.push(q);
            }
        }
    }
    found
}

/// Classifies a validated fixed point: tangent basis, reduced differential,
/// kernel dimension, and the transversality tag.
///
/// The tag is `TRANSVERSE_SMOOTH` when local probing finds the fixed set to
/// be a manifold of dimension kernel_dim near p, `KERNEL_DIM_LE_1` when the
/// kernel dimension is at most one, else `UNCLASSIFIED`. The
/// `ISOLATED_HOLOMORPHIC` tag needs the holomorphic phase germ and is never
/// assigned here.
pub fn classify_fixed_point(
    w: &MappingClassWord,
    p: CharVarPoint,
    level: Level,
    opts: &SolverOptions,
) -> Result<FixedPointRecord, CharVarError> {
    let l = level.value();
    let res = residual(w, l, p).norm();
    if res > 1e-6 {
        return Err(CharVarError::NotAFixedPoint(res));
    }
    let basis = tangent_space_unchecked(p)?;
    let j = w.jacobian(p);
    let reduced = reduced_map_in_basis(&j, &basis);

    let shifted = reduced - Matrix2::identity();
    let svd = shifted.svd(true, true);
    let smax = svd.singular_values.max();
    let kernel_dim = svd
        .singular_values
        .iter()
        .filter(|&&s| s <= opts.rank_tol * smax.max(1.0))
        .count();

    // Local solution-set sampling: a manifold of dimension kernel_dim must
    // continue in the kernel directions; an isolated point must not.
    let condition = {
        let probe_dirs: Vec<Vector3<f64>> = match kernel_dim {
            0 => {
                // Nothing to continue along; probe a few tangent directions to
                // confirm isolation.
                let diag = (basis[0] + basis[1]).normalize();
                vec![basis[0], -basis[0], basis[1], -basis[1], diag, -diag]
            }
            1 => {
                // Kernel direction of (reduced − I) lifted to R³.
                let v_t = svd.v_t.as_ref().expect("svd with v requested");
                let kv: Vector2<f64> = v_t.row(1).transpose();
                let k3 = (basis[0] * kv[0] + basis[1] * kv[1]).normalize();
                vec![k3, -k3]
            }
            _ => {
                let diag = (basis[0] + basis[1]).normalize();
                vec![basis[0], -basis[0], basis[1], -basis[1], diag, -diag]
            }
        };
        let nearby = probe_solutions(w, l, p, &probe_dirs, opts);
        match kernel_dim {
            0 => {
                if nearby.is_empty() {
                    Condition::TransverseSmooth
                } else {
                    // Unexpected neighbors with zero kernel: fall back to the
                    // kernel-dimension condition, which still applies.
                    Condition::KernelDimLe1
                }
            }
            1 => {
                if nearby.len() == 2 {
                    Condition::TransverseSmooth
                } else {
                    Condition::KernelDimLe1
                }
            }
            _ => {
                if nearby.len() >= probe_dirs.len() {
                    Condition::TransverseSmooth
                } else {
                    Condition::Unclassified
                }
            }
        }
    };

    Ok(FixedPointRecord {
        point: p,
        level,
        tangent_basis: basis,
        kernel_dim,
        condition,
        reduced_map: reduced,
        residual: res,
    })
}
