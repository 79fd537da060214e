//! Affine maps that move every root (or eigenvalue) into `[0, 1/2]`.
//!
//! For roots bounded by `a` in absolute value, `q(y) = p(4a (y - 1/4)) / (4a)^n`
//! sends a root `l` of `p` to `l / (4a) + 1/4`. For a symmetric matrix with
//! `s >= ||A||_F`, `B = I/4 + A/(4s)` does the same to the spectrum.

use rug::ops::Pow;
use rug::{Complete, Integer, Rational};

use crate::detpoly::SymmetricMatrix;
use crate::error::{invalid, Result};
use crate::oracle::PolynomialOracle;
use crate::scalar::Fraction;

/// `original = scale * normalized + shift`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineRootMap {
    pub scale: Rational,
    pub shift: Rational,
    pub degree: usize,
}

impl AffineRootMap {
    fn for_bound(bound: &Rational, degree: usize) -> Self {
        let scale = Rational::from(bound * 4u32);
        AffineRootMap { scale, shift: Rational::from(-bound), degree }
    }

    /// Maps a root of the normalized polynomial back to the original.
    pub fn denormalize(&self, mu: &Rational) -> Rational {
        Rational::from(&self.scale * mu) + &self.shift
    }

    /// Inverse of [`denormalize`](Self::denormalize).
    pub fn normalize(&self, lambda: &Rational) -> Rational {
        Rational::from(lambda - &self.shift) / &self.scale
    }

    /// Normalized error that maps back to at most `eps`.
    pub fn normalized_error(&self, eps: &Rational) -> Rational {
        Rational::from(eps / &self.scale)
    }
}

pub fn denormalize_root(mu: &Rational, map: &AffineRootMap) -> Rational {
    map.denormalize(mu)
}

/// Oracle for `p(4a (y - 1/4)) / (4a)^n`.
#[derive(Clone, Debug)]
pub struct NormalizedOracle<O> {
    inner: O,
    bound: Rational,
}

impl<O> NormalizedOracle<O> {
    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: PolynomialOracle> PolynomialOracle for NormalizedOracle<O> {
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn eval(&self, x: &Fraction) -> Fraction {
        // a (4y - l) / l with a = pa/qa
        let (y, l) = (x.numer(), x.denom());
        let (pa, qa) = (self.bound.numer(), self.bound.denom());
        let num = (y * 4u32).complete() - l;
        let point = Fraction::new(num * pa, (l * qa).complete());
        let (v_num, v_den) = self.inner.eval(&point).into_parts();
        // divide by (4a)^n = (4 pa / qa)^n
        let n = self.inner.degree() as u32;
        let num = v_num * Integer::from(qa.pow(n));
        let den = v_den * Integer::from((pa * 4u32).complete().pow(n));
        Fraction::new(num, den)
    }
}

/// Normalizes `p`, whose roots the caller promises lie in `[-a, a]`.
pub fn normalize_poly<O: PolynomialOracle>(
    p: O,
    root_bound: &Rational,
) -> Result<(NormalizedOracle<O>, AffineRootMap)> {
    if *root_bound <= 0 {
        return Err(invalid(format!("root bound must be positive, got {root_bound}")));
    }
    let map = AffineRootMap::for_bound(root_bound, p.degree());
    Ok((NormalizedOracle { inner: p, bound: root_bound.clone() }, map))
}

/// `B = I/4 + A/(4s)` for `s >= ||A||_F`, with the eigenvalue back-map.
pub fn normalize_matrix(
    a: &SymmetricMatrix,
    s: &Rational,
) -> Result<(SymmetricMatrix, AffineRootMap)> {
    if *s <= 0 {
        return Err(invalid(format!("norm bound must be positive, got {s}")));
    }
    let four_s = Rational::from(s * 4u32);
    let b = a.map(|e| Rational::from(e / &four_s)).shifted(&Rational::from((1, 4)));
    Ok((b, AffineRootMap::for_bound(s, a.dim())))
}
