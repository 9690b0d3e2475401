//! The SU(2) character variety of the once-punctured torus in trace
//! coordinates, and the mapping-class action on it.
//!
//! A point is a triple (x, y, z) of holonomy traces. The level function
//!
//! ```text
//! L(x, y, z) = x² + y² + z² − 2 − xyz
//! ```
//!
//! cuts out the relative moduli space `M_l` as the level set `L = l`,
//! `l ∈ [−2, 2]`. The Dehn twists about the two core curves act by the
//! polynomial maps
//!
//! ```text
//! t_a(x, y, z) = (x, z, xz − y),     t_b(x, y, z) = (xy − z, y, x),
//! ```
//!
//! and `L` is invariant under both. Words in `A = t_a`, `B = t_b` and their
//! inverses compose to polynomial maps with exact Jacobians; fixed points on
//! a level set are found by grid-seeded Gauss-Newton iteration and classified
//! by the kernel dimension of the restricted differential.

mod poly;
mod solve;

pub use poly::{Poly3, PolyMap3};
pub use solve::{
    fixed_points, classify_fixed_point, reduced_map_in_basis, Census, CensusOutcome, Condition,
    FixedPointRecord, NonIsolatedReason, NonIsolatedReport, SolverOptions,
};

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CharVarError {
    #[error("point has non-finite coordinates: ({0}, {1}, {2})")]
    NonFinitePoint(f64, f64, f64),
    #[error("level {0} outside [-2, 2]")]
    LevelOutOfRange(f64),
    #[error("unknown token '{0}' in word")]
    UnknownToken(String),
    #[error("malformed exponent in token '{0}'")]
    MalformedExponent(String),
    #[error("the identity word fixes all of M_l; no isolated fixed-point census exists")]
    IdentityWord,
    #[error("({0}, {1}, {2}) is a singular point of the level set (|dL| below tolerance)")]
    SingularLevelPoint(f64, f64, f64),
    #[error("point is not on the requested level set: |L(p) - l| = {0:.3e}")]
    NotOnLevelSet(f64),
    #[error("point is not a fixed point of the word: |w(p) - p| = {0:.3e}")]
    NotAFixedPoint(f64),
    #[error("compiled polynomial exceeds the term budget ({0} terms)")]
    PolynomialTooLarge(usize),
}

/// A point of the trace-coordinate ambient space R³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharVarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CharVarPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, CharVarError> {
        if x.is_finite() && y.is_finite() && z.is_finite() {
            Ok(Self { x, y, z })
        } else {
            Err(CharVarError::NonFinitePoint(x, y, z))
        }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self { x: v.x, y: v.y, z: v.z }
    }

    pub fn dist(self, other: Self) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }
}

/// A level l ∈ [−2, 2] of the Casimir; the moduli space is empty or
/// degenerate outside that interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level(f64);

impl Level {
    pub fn new(l: f64) -> Result<Self, CharVarError> {
        if l.is_finite() && (-2.0..=2.0).contains(&l) {
            Ok(Self(l))
        } else {
            Err(CharVarError::LevelOutOfRange(l))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// The level function L(x,y,z) = x² + y² + z² − 2 − xyz whose level sets are
/// the relative moduli spaces. Invariant under every word action.
pub fn casimir(p: CharVarPoint) -> f64 {
    p.x * p.x + p.y * p.y + p.z * p.z - 2.0 - p.x * p.y * p.z
}

/// dL = (2x − yz, 2y − xz, 2z − xy).
pub fn casimir_gradient(p: CharVarPoint) -> Vector3<f64> {
    Vector3::new(
        2.0 * p.x - p.y * p.z,
        2.0 * p.y - p.x * p.z,
        2.0 * p.z - p.x * p.y,
    )
}

/// Generator letters of the mapping-class words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    /// t_a
    A,
    /// t_a⁻¹
    AInv,
    /// t_b
    B,
    /// t_b⁻¹
    BInv,
}

impl Letter {
    pub fn inverse(self) -> Self {
        match self {
            Letter::A => Letter::AInv,
            Letter::AInv => Letter::A,
            Letter::B => Letter::BInv,
            Letter::BInv => Letter::B,
        }
    }

    /// The polynomial action of this letter on trace coordinates.
    pub fn apply(self, p: CharVarPoint) -> CharVarPoint {
        let (x, y, z) = (p.x, p.y, p.z);
        let (nx, ny, nz) = match self {
            Letter::A => (x, z, x * z - y),
            // t_a⁻¹(x,y,z) = (x, xy − z, y): inverts t_a componentwise.
            Letter::AInv => (x, x * y - z, y),
            Letter::B => (x * y - z, y, x),
            Letter::BInv => (z, y, z * y - x),
        };
        CharVarPoint { x: nx, y: ny, z: nz }
    }

    /// Exact Jacobian of the letter map at p.
    pub fn jacobian(self, p: CharVarPoint) -> Matrix3<f64> {
        let (x, y, z) = (p.x, p.y, p.z);
        match self {
            Letter::A => Matrix3::new(
                1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, //
                z, -1.0, x,
            ),
            Letter::AInv => Matrix3::new(
                1.0, 0.0, 0.0, //
                y, x, -1.0, //
                0.0, 1.0, 0.0,
            ),
            Letter::B => Matrix3::new(
                y, x, -1.0, //
                0.0, 1.0, 0.0, //
                1.0, 0.0, 0.0,
            ),
            Letter::BInv => Matrix3::new(
                0.0, 0.0, 1.0, //
                0.0, 1.0, 0.0, //
                -1.0, z, y,
            ),
        }
    }

    fn token(self) -> &'static str {
        match self {
            Letter::A => "A",
            Letter::AInv => "A^-1",
            Letter::B => "B",
            Letter::BInv => "B^-1",
        }
    }
}

/// A freely reduced word in the twist generators. Letters are stored in
/// composition-notation order: the word "B^-1 A" denotes t_b⁻¹ ∘ t_a, so the
/// rightmost letter acts first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingClassWord {
    letters: Vec<Letter>,
}

impl MappingClassWord {
    /// Builds a word from letters in notation order, cancelling adjacent
    /// inverse pairs until the word is freely reduced.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut reduced: Vec<Letter> = Vec::new();
        for l in letters {
            if reduced.last() == Some(&l.inverse()) {
                reduced.pop();
            } else {
                reduced.push(l);
            }
        }
        Self { letters: reduced }
    }

    pub fn identity() -> Self {
        Self { letters: Vec::new() }
    }

    /// Parses a generator string such as `"B^-1 A"` or `"A^3 B"`. Tokens are
    /// whitespace separated; an optional `^n` exponent (n a nonzero integer)
    /// expands into |n| letters.
    pub fn parse(text: &str) -> Result<Self, CharVarError> {
        let mut letters = Vec::new();
        for token in text.split_whitespace() {
            let (base, exp) = match token.split_once('^') {
                Some((b, e)) => {
                    let exp: i64 = e
                        .parse()
                        .map_err(|_| CharVarError::MalformedExponent(token.to_string()))?;
                    if exp == 0 {
                        return Err(CharVarError::MalformedExponent(token.to_string()));
                    }
                    (b, exp)
                }
                None => (token, 1),
            };
            let letter = match base {
                "A" | "a" => Letter::A,
                "B" | "b" => Letter::B,
                _ => return Err(CharVarError::UnknownToken(token.to_string())),
            };
            let letter = if exp < 0 { letter.inverse() } else { letter };
            for _ in 0..exp.unsigned_abs() {
                letters.push(letter);
            }
        }
        Ok(Self::from_letters(letters))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    /// Concatenation `self ∘ other` (self acts after other).
    pub fn compose(&self, other: &Self) -> Self {
        Self::from_letters(self.letters.iter().chain(other.letters.iter()).copied())
    }

    pub fn repeat(&self, n: usize) -> Self {
        let mut letters = Vec::with_capacity(self.letters.len() * n);
        for _ in 0..n {
            letters.extend_from_slice(&self.letters);
        }
        Self::from_letters(letters)
    }

    /// Applies the word as a composition of letter maps; the rightmost letter
    /// acts first, so `apply` realizes the map the notation denotes.
    pub fn apply(&self, p: CharVarPoint) -> CharVarPoint {
        let mut q = p;
        for l in self.letters.iter().rev() {
            q = l.apply(q);
        }
        q
    }

    /// Exact Jacobian of the word map at p, by the chain rule over letters.
    pub fn jacobian(&self, p: CharVarPoint) -> Matrix3<f64> {
        let mut q = p;
        let mut j = Matrix3::identity();
        for l in self.letters.iter().rev() {
            j = l.jacobian(q) * j;
            q = l.apply(q);
        }
        j
    }

    /// Compiles the word into explicit polynomial components with exact
    /// symbolic Jacobian. Fails when the expansion exceeds the term budget
    /// (degrees grow exponentially with word length).
    pub fn compile(&self, max_terms: usize) -> Result<PolyMap3, CharVarError> {
        PolyMap3::compile(self, max_terms)
    }
}

impl std::fmt::Display for MappingClassWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "(identity)");
        }
        let parts: Vec<&str> = self.letters.iter().map(|l| l.token()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Convenience wrapper matching the word action signature used by the CLI.
pub fn apply_word(w: &MappingClassWord, p: CharVarPoint) -> CharVarPoint {
    w.apply(p)
}

/// Exact Jacobian of the word action at p.
pub fn word_jacobian(w: &MappingClassWord, p: CharVarPoint) -> Matrix3<f64> {
    w.jacobian(p)
}

/// Tolerance below which |dL| marks a singular point of the level set.
pub const SINGULAR_GRADIENT_TOL: f64 = 1e-8;

/// Orthonormal basis of the tangent plane Ker(dL_p) of the level set through
/// p. Validates that p actually lies on the requested level and that p is a
/// smooth point (|dL_p| above tolerance; fails at the l = ±2 special points).
pub fn tangent_space(p: CharVarPoint, level: Level) -> Result<[Vector3<f64>; 2], CharVarError> {
    let mismatch = (casimir(p) - level.value()).abs();
    if mismatch > 1e-6 {
        return Err(CharVarError::NotOnLevelSet(mismatch));
    }
    tangent_space_unchecked(p)
}

/// Tangent basis without the level-membership check.
pub fn tangent_space_unchecked(p: CharVarPoint) -> Result<[Vector3<f64>; 2], CharVarError> {
    let g = casimir_gradient(p);
    let gn = g.norm();
    if gn < SINGULAR_GRADIENT_TOL {
        return Err(CharVarError::SingularLevelPoint(p.x, p.y, p.z));
    }
    let n = g / gn;
    // Deterministic choice: project the coordinate axis least aligned with n.
    let mut axis = 0;
    for i in 1..3 {
        if n[i].abs() < n[axis].abs() {
            axis = i;
        }
    }
    let mut e = Vector3::zeros();
    e[axis] = 1.0;
    let v1 = (e - n * n[axis]).normalize();
    let v2 = n.cross(&v1);
    Ok([v1, v2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P_APPENDIX: CharVarPoint = CharVarPoint { x: -1.0, y: 0.5, z: 0.5 };
    const Q_APPENDIX: CharVarPoint = CharVarPoint { x: 0.5, y: -1.0, z: -1.0 };

    fn phi() -> MappingClassWord {
        MappingClassWord::parse("B^-1 A").unwrap()
    }

    #[test]
    fn parse_single_generator() {
        let w = MappingClassWord::parse("A").unwrap();
        assert_eq!(w.letters(), &[Letter::A]);
    }

    #[test]
    fn parse_inverse_and_order() {
        let w = phi();
        assert_eq!(w.letters(), &[Letter::BInv, Letter::A]);
    }

    #[test]
    fn parse_free_reduction() {
        let w = MappingClassWord::parse("A A^-1 B").unwrap();
        assert_eq!(w.letters(), &[Letter::B]);
        let idw = MappingClassWord::parse("B^-2 B A A^-1 B").unwrap();
        assert!(idw.is_identity());
    }

    #[test]
    fn parse_exponent_expansion() {
        let w = MappingClassWord::parse("A^3 B^-2").unwrap();
        assert_eq!(
            w.letters(),
            &[Letter::A, Letter::A, Letter::A, Letter::BInv, Letter::BInv]
        );
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            MappingClassWord::parse("C"),
            Err(CharVarError::UnknownToken(_))
        ));
        assert!(matches!(
            MappingClassWord::parse("A^x"),
            Err(CharVarError::MalformedExponent(_))
        ));
        assert!(matches!(
            MappingClassWord::parse("A^0"),
            Err(CharVarError::MalformedExponent(_))
        ));
    }

    #[test]
    fn apply_single_twist_hand_value() {
        // t_a(1,2,3) = (1, 3, 1·3 − 2) = (1, 3, 1)
        let w = MappingClassWord::parse("A").unwrap();
        let q = w.apply(CharVarPoint::new(1.0, 2.0, 3.0).unwrap());
        assert_eq!((q.x, q.y, q.z), (1.0, 3.0, 1.0));
    }

    #[test]
    fn appendix_points_are_fixed_by_phi() {
        let w = phi();
        for p in [P_APPENDIX, Q_APPENDIX] {
            let q = w.apply(p);
            assert!(p.dist(q) < 1e-15, "phi should fix {:?}, got {:?}", p, q);
        }
    }

    #[test]
    fn identity_word_is_identity_map() {
        let w = MappingClassWord::identity();
        let p = CharVarPoint::new(0.3, -1.7, 0.9).unwrap();
        assert_eq!(w.apply(p), p);
        assert_eq!(w.jacobian(p), Matrix3::identity());
    }

    #[test]
    fn inverse_pair_reduces_to_identity_action() {
        let w = MappingClassWord::parse("A A^-1").unwrap();
        assert!(w.is_identity());
        let p = CharVarPoint::new(1.25, -0.5, 0.75).unwrap();
        assert_eq!(w.apply(p), p);
    }

    #[test]
    fn casimir_appendix_values() {
        assert!((casimir(P_APPENDIX) - (-0.25)).abs() < 1e-15);
        assert!((casimir(Q_APPENDIX) - (-0.25)).abs() < 1e-15);
        assert!((casimir(CharVarPoint::new(2.0, 2.0, 2.0).unwrap()) - 2.0).abs() < 1e-15);
        // L(t_a(1,2,3)) = L(1,3,1) = 6 = L(1,2,3)
        let p = CharVarPoint::new(1.0, 2.0, 3.0).unwrap();
        assert_eq!(casimir(p), 6.0);
        assert_eq!(casimir(Letter::A.apply(p)), 6.0);
    }

    #[test]
    fn phi_jacobian_matches_closed_form() {
        // dφ = [[z, −1, x], [0, 0, 1], [z²−1, −z, 2xz−y]]
        let w = phi();
        for (x, y, z) in [(0.3, -0.7, 1.1), (-1.0, 0.5, 0.5), (0.5, -1.0, -1.0)] {
            let p = CharVarPoint::new(x, y, z).unwrap();
            let j = w.jacobian(p);
            let expect = Matrix3::new(
                z, -1.0, x, //
                0.0, 0.0, 1.0, //
                z * z - 1.0, -z, 2.0 * x * z - y,
            );
            assert!((j - expect).norm() < 1e-14, "at ({x},{y},{z}): {j}");
        }
    }

    #[test]
    fn phi_jacobian_at_q_is_the_paper_p_matrix() {
        // Direct evaluation of the closed form at q = (1/2, −1, −1) yields the
        // matrix the paper's appendix lists under the label p; the appendix
        // labels for dφ_p / dφ_q are swapped relative to direct evaluation,
        // and direct evaluation is treated as ground truth here.
        let j = phi().jacobian(Q_APPENDIX);
        let expect = Matrix3::new(
            -1.0, -1.0, 0.5, //
            0.0, 0.0, 1.0, //
            0.0, 1.0, 0.0,
        );
        assert!((j - expect).norm() < 1e-15);
    }

    #[test]
    fn gradient_at_appendix_points() {
        // Direct evaluation: dL at q = (1/2,−1,−1) is (0, −3/2, −3/2) and dL
        // at p = (−1,1/2,1/2) is (−9/4, 3/2, 3/2); the appendix reports these
        // under swapped labels (see the label-swap note above).
        let gq = casimir_gradient(Q_APPENDIX);
        assert!((gq - Vector3::new(0.0, -1.5, -1.5)).norm() < 1e-15);
        let gp = casimir_gradient(P_APPENDIX);
        assert!((gp - Vector3::new(-2.25, 1.5, 1.5)).norm() < 1e-15);
    }

    #[test]
    fn tangent_space_at_singular_point_errors() {
        let p = CharVarPoint::new(2.0, 2.0, 2.0).unwrap();
        let l = Level::new(2.0).unwrap();
        assert!(matches!(
            tangent_space(p, l),
            Err(CharVarError::SingularLevelPoint(..))
        ));
    }

    #[test]
    fn tangent_space_is_orthonormal_kernel_of_dl() {
        let l = Level::new(-0.25).unwrap();
        for p in [P_APPENDIX, Q_APPENDIX] {
            let [v1, v2] = tangent_space(p, l).unwrap();
            let g = casimir_gradient(p);
            assert!(g.dot(&v1).abs() < 1e-13);
            assert!(g.dot(&v2).abs() < 1e-13);
            assert!((v1.norm() - 1.0).abs() < 1e-14);
            assert!((v2.norm() - 1.0).abs() < 1e-14);
            assert!(v1.dot(&v2).abs() < 1e-14);
        }
    }

    #[test]
    fn level_rejects_out_of_range() {
        assert!(Level::new(2.5).is_err());
        assert!(Level::new(-2.0001).is_err());
        assert!(Level::new(f64::NAN).is_err());
        assert!(Level::new(2.0).is_ok());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        // Central differences at step 1e−5, relative error ≤ 1e−6.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for _ in 0..200 {
            let len = rng.gen_range(1..=10);
            let letters: Vec<Letter> = (0..len)
                .map(|_| match rng.gen_range(0..4) {
                    0 => Letter::A,
                    1 => Letter::AInv,
                    2 => Letter::B,
                    _ => Letter::BInv,
                })
                .collect();
            let w = MappingClassWord::from_letters(letters);
            let p = sample_on_level(&mut rng);
            let j = w.jacobian(p);
            let mut fd = Matrix3::zeros();
            for col in 0..3 {
                let mut hi = p.to_vector();
                let mut lo = p.to_vector();
                hi[col] += h;
                lo[col] -= h;
                let f_hi = w.apply(CharVarPoint::from_vector(hi)).to_vector();
                let f_lo = w.apply(CharVarPoint::from_vector(lo)).to_vector();
                fd.set_column(col, &((f_hi - f_lo) / (2.0 * h)));
            }
            let scale = j.norm().max(1.0);
            assert!(
                (j - fd).norm() / scale < 1e-6,
                "word {w}: exact {j} vs fd {fd}"
            );
        }
    }

    /// Samples a point exactly on a level set with l ∈ (−2, 2) so that word
    /// orbits stay in the compact region [−2, 2]³.
    pub(crate) fn sample_on_level<R: rand::Rng>(rng: &mut R) -> CharVarPoint {
        loop {
            let l: f64 = rng.gen_range(-1.9..1.9);
            let x: f64 = rng.gen_range(-1.9..1.9);
            let y: f64 = rng.gen_range(-1.9..1.9);
            // Solve z² − xyz + (x² + y² − 2 − l) = 0.
            let b = -x * y;
            let c = x * x + y * y - 2.0 - l;
            let disc = b * b - 4.0 * c;
            if disc >= 0.0 {
                let z = (-b + disc.sqrt()) / 2.0;
                if z.abs() <= 2.0 {
                    return CharVarPoint { x, y, z };
                }
            }
        }
    }

    proptest! {
        // Casimir invariance under random words up to length 20, sampled on
        // compact level sets so orbits stay bounded.
        #[test]
        fn casimir_invariant_under_words(seed in 0u64..5000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let len = rng.gen_range(1..=20usize);
            let letters: Vec<Letter> = (0..len).map(|_| match rng.gen_range(0..4) {
                0 => Letter::A, 1 => Letter::AInv, 2 => Letter::B, _ => Letter::BInv,
            }).collect();
            let w = MappingClassWord::from_letters(letters);
            let p = sample_on_level(&mut rng);
            let l0 = casimir(p);
            let l1 = casimir(w.apply(p));
            prop_assert!((l1 - l0).abs() <= 1e-9 * (1.0 + l0.abs()));
        }

        // Inverse words undo the action on exactly representable points.
        #[test]
        fn inverse_word_roundtrip(seed in 0u64..2000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let len = rng.gen_range(1..=5usize);
            let letters: Vec<Letter> = (0..len).map(|_| match rng.gen_range(0..4) {
                0 => Letter::A, 1 => Letter::AInv, 2 => Letter::B, _ => Letter::BInv,
            }).collect();
            let w = MappingClassWord::from_letters(letters);
            // Quarter-integer coordinates are exactly representable.
            let p = CharVarPoint {
                x: rng.gen_range(-8..=8i32) as f64 / 4.0,
                y: rng.gen_range(-8..=8i32) as f64 / 4.0,
                z: rng.gen_range(-8..=8i32) as f64 / 4.0,
            };
            let q = w.inverse().apply(w.apply(p));
            let scale = 1.0 + p.to_vector().norm();
            prop_assert!(p.dist(q) <= 1e-12 * scale, "word {} p {:?} q {:?}", w, p, q);
        }

        // dφ preserves the level-set tangent plane at fixed points of the
        // level function flow: dL_p · (J v) vanishes for tangent v. Checked
        // at the appendix fixed points for powers of φ.
        #[test]
        fn differential_preserves_tangent_plane(n in 1usize..4) {
            let w = MappingClassWord::parse("B^-1 A").unwrap().repeat(n);
            for p in [P_APPENDIX, Q_APPENDIX] {
                let j = w.jacobian(p);
                let g = casimir_gradient(p);
                let basis = tangent_space_unchecked(p).unwrap();
                for v in basis {
                    prop_assert!(g.dot(&(j * v)).abs() < 1e-12 * j.norm());
                }
            }
        }
    }
}
