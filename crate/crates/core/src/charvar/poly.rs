//! Sparse trivariate polynomials and compiled word maps.
//!
//! Letter maps have integer coefficients, so compiled words stay exact in f64
//! as long as coefficients remain below 2⁵³. Degrees grow exponentially with
//! word length; `PolyMap3::compile` enforces a term budget and longer words
//! fall back to pointwise composition (`MappingClassWord::apply`).

use std::collections::BTreeMap;

use nalgebra::Matrix3;

use super::{CharVarError, CharVarPoint, Letter, MappingClassWord};

/// A polynomial in (x, y, z) stored as exponent-triple → coefficient.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly3 {
    terms: BTreeMap<(u32, u32, u32), f64>,
}

impl Poly3 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::default();
        if c != 0.0 {
            p.terms.insert((0, 0, 0), c);
        }
        p
    }

    /// The coordinate variable with the given index (0 = x, 1 = y, 2 = z).
    pub fn var(i: usize) -> Self {
        let mut p = Self::default();
        let key = match i {
            0 => (1, 0, 0),
            1 => (0, 1, 0),
            2 => (0, 0, 1),
            _ => panic!("variable index out of range"),
        };
        p.terms.insert(key, 1.0);
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32, u32), &f64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, key: (u32, u32, u32), c: f64) {
        let entry = self.terms.entry(key).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&k, &c) in &other.terms {
            out.add_term(k, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&k, &c) in &other.terms {
            out.add_term(k, -c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (&(a1, b1, c1), &u) in &self.terms {
            for (&(a2, b2, c2), &v) in &other.terms {
                out.add_term((a1 + a2, b1 + b2, c1 + c2), u * v);
            }
        }
        out
    }

    pub fn eval(&self, p: CharVarPoint) -> f64 {
        let mut acc = 0.0;
        for (&(a, b, c), &coef) in &self.terms {
            acc += coef * p.x.powi(a as i32) * p.y.powi(b as i32) * p.z.powi(c as i32);
        }
        acc
    }

    /// Exact partial derivative with respect to variable i.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::default();
        for (&(a, b, c), &coef) in &self.terms {
            let (e, key) = match i {
                0 if a > 0 => (a, (a - 1, b, c)),
                1 if b > 0 => (b, (a, b - 1, c)),
                2 if c > 0 => (c, (a, b, c - 1)),
                _ => continue,
            };
            out.add_term(key, coef * e as f64);
        }
        out
    }

    /// Substitutes the three polynomials for (x, y, z).
    fn compose(&self, subs: &[Poly3; 3], max_terms: usize) -> Result<Self, CharVarError> {
        // Powers are built incrementally and memoized per variable.
        let mut pow_cache: [Vec<Poly3>; 3] =
            [vec![Poly3::constant(1.0)], vec![Poly3::constant(1.0)], vec![Poly3::constant(1.0)]];
        let mut out = Poly3::default();
        for (&(a, b, c), &coef) in &self.terms {
            let mut term = Poly3::constant(coef);
            for (vi, &e) in [a, b, c].iter().enumerate() {
                while pow_cache[vi].len() <= e as usize {
                    let next = pow_cache[vi].last().unwrap().mul(&subs[vi]);
                    if next.num_terms() > max_terms {
                        return Err(CharVarError::PolynomialTooLarge(next.num_terms()));
                    }
                    pow_cache[vi].push(next);
                }
                term = term.mul(&pow_cache[vi][e as usize]);
                if term.num_terms() > max_terms {
                    return Err(CharVarError::PolynomialTooLarge(term.num_terms()));
                }
            }
            out = out.add(&term);
            if out.num_terms() > max_terms {
                return Err(CharVarError::PolynomialTooLarge(out.num_terms()));
            }
        }
        Ok(out)
    }
}

/// A word compiled to explicit polynomial components together with the exact
/// symbolic Jacobian.
#[derive(Debug, Clone)]
pub struct PolyMap3 {
    pub components: [Poly3; 3],
    pub jacobian: [[Poly3; 3]; 3],
}

impl PolyMap3 {
    fn letter_components(l: Letter) -> [Poly3; 3] {
        let x = Poly3::var(0);
        let y = Poly3::var(1);
        let z = Poly3::var(2);
        match l {
            Letter::A => [x.clone(), z.clone(), x.mul(&z).sub(&y)],
            Letter::AInv => [x.clone(), x.mul(&y).sub(&z), y.clone()],
            Letter::B => [x.mul(&y).sub(&z), y.clone(), x.clone()],
            Letter::BInv => [z.clone(), y.clone(), z.mul(&y).sub(&x)],
        }
    }

    /// Compiles the word by successive substitution, rightmost letter first.
    pub fn compile(w: &MappingClassWord, max_terms: usize) -> Result<Self, CharVarError> {
        let mut comps = [Poly3::var(0), Poly3::var(1), Poly3::var(2)];
        for l in w.letters().iter().rev() {
            let outer = Self::letter_components(*l);
            let mut next: [Poly3; 3] = [Poly3::zero(), Poly3::zero(), Poly3::zero()];
            for (i, o) in outer.iter().enumerate() {
                next[i] = o.compose(&comps, max_terms)?;
            }
            comps = next;
        }
        let jacobian = std::array::from_fn(|i| std::array::from_fn(|j| comps[i].partial(j)));
        Ok(Self { components: comps, jacobian })
    }

    pub fn eval(&self, p: CharVarPoint) -> CharVarPoint {
        CharVarPoint {
            x: self.components[0].eval(p),
            y: self.components[1].eval(p),
            z: self.components[2].eval(p),
        }
    }

    pub fn eval_jacobian(&self, p: CharVarPoint) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.jacobian[i][j].eval(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compiled_phi_matches_closed_form() {
        // φ(x,y,z) = (xz − y, z, z(xz − y) − x) = (xz − y, z, xz² − yz − x)
        let w = MappingClassWord::parse("B^-1 A").unwrap();
        let m = w.compile(1000).unwrap();
        let x = Poly3::var(0);
        let y = Poly3::var(1);
        let z = Poly3::var(2);
        let c0 = x.mul(&z).sub(&y);
        let c2 = x.mul(&z).mul(&z).sub(&y.mul(&z)).sub(&x);
        assert_eq!(m.components[0], c0);
        assert_eq!(m.components[1], z);
        assert_eq!(m.components[2], c2);
    }

    #[test]
    fn compiled_map_matches_composition_pointwise() {
        let w = MappingClassWord::parse("A B^-1 A A B").unwrap();
        let m = w.compile(100_000).unwrap();
        for (x, y, z) in [(0.5, -0.25, 1.0), (1.5, 0.75, -0.5), (-1.0, 0.5, 0.5)] {
            let p = CharVarPoint::new(x, y, z).unwrap();
            let a = w.apply(p);
            let b = m.eval(p);
            assert!(a.dist(b) < 1e-10 * (1.0 + a.to_vector().norm()));
            let ja = w.jacobian(p);
            let jb = m.eval_jacobian(p);
            assert!((ja - jb).norm() < 1e-9 * (1.0 + ja.norm()));
        }
    }

    #[test]
    fn compile_rejects_oversized_words() {
        let w = MappingClassWord::parse("A B A B A B A B A B A B A B A B A B A B").unwrap();
        assert!(matches!(
            w.compile(2000),
            Err(CharVarError::PolynomialTooLarge(_))
        ));
    }
}
