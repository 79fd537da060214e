//! Plain Newton iteration with a forward-difference derivative.

use rug::ops::DivRounding;
use rug::{Complete, Integer, Rational};

use crate::error::{invalid, Error, Result};
use crate::oracle::{with_counter, PolynomialOracle};
use crate::scalar::{ceil_log2_recip, ln_recip_upper, Fraction};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonResult {
    pub root_estimate: Rational,
    pub iterations: u64,
    pub queries: u64,
    pub max_query_bits: u64,
    /// `x^0, x^1, ...`; the last entry is the estimate.
    pub iterates: Vec<Rational>,
}

/// Iteration cap `2n * bitlen(ceil(1/eps)) + ceil(log2(1/eps))`.
pub fn iteration_cap(n: usize, eps: &Rational) -> u64 {
    2 * n as u64 * u64::from(ln_recip_upper(eps)) + u64::from(ceil_log2_recip(eps))
}

/// `x <- x - (d/2) p(x) / (p(x + d) - p(x))` with `d = eps^2`, from `x = 1`.
///
/// Steps are rounded down to multiples of `d / (16 n)` so iterates keep a
/// bounded denominator; the iteration stops once a step drops below
/// `eps / (4n)`.
pub fn classic_newton<O: PolynomialOracle + ?Sized>(p: &O, eps: &Rational) -> Result<NewtonResult> {
    if *eps <= 0 || *eps > Rational::from((1, 2)) {
        return Err(invalid(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    let n = p.degree();
    let (oracle, log) = with_counter(p);
    let delta = Rational::from(eps.square_ref());
    let half_delta = Rational::from(&delta / 2u32);
    let grid = Rational::from(&delta / (16 * n as u64));
    let min_step = Rational::from(eps / (4 * n as u64));
    let cap = iteration_cap(n, eps);

    let mut x = Rational::from(1);
    let mut iterates = vec![x.clone()];
    let mut iterations = 0;
    while iterations < cap {
        iterations += 1;
        let l = x.denom().clone().lcm(delta.denom());
        let y = Integer::from(x.numer() * Integer::from(l.div_exact_ref(x.denom())));
        let d = Integer::from(delta.numer() * Integer::from(l.div_exact_ref(delta.denom())));
        let px = oracle.eval(&Fraction::new(y.clone(), l.clone()));
        if px.is_zero() {
            break;
        }
        let pxd = oracle.eval(&Fraction::new(y + d, l));
        let diff = &pxd - &px;
        if diff.is_zero() {
            return Err(Error::DegenerateOracle { point: x, reason: "flat forward difference" });
        }
        // step = (d/2) * px / diff = num / den
        let ratio = &px / &diff;
        let num = (ratio.numer() * half_delta.numer()).complete();
        let den = (ratio.denom() * half_delta.denom()).complete();
        if num.cmp0().is_le() {
            return Err(Error::DegenerateOracle { point: x, reason: "step is not positive" });
        }
        let below = (&num * min_step.denom()).complete() < (&den * min_step.numer()).complete();
        if below {
            break;
        }
        let m = (num * grid.denom()).div_floor(den * grid.numer());
        x -= Rational::from(&grid * m);
        iterates.push(x.clone());
    }
    let stats = log.snapshot();
    Ok(NewtonResult {
        root_estimate: x,
        iterations,
        queries: stats.count,
        max_query_bits: stats.max_query_bits,
        iterates,
    })
}

/// True iff every consecutive pair of iterates stays at or above `lambda1`
/// and shrinks the gap by at least a factor `1 - 1/(4n)`.
pub fn contraction_check(iterates: &[Rational], lambda1: &Rational, n: usize) -> bool {
    let factor = Rational::from(1) - Rational::from((1, 4 * n as u64));
    iterates.windows(2).all(|w| {
        let before = Rational::from(&w[0] - lambda1);
        let after = Rational::from(&w[1] - lambda1);
        after >= 0 && after <= Rational::from(&factor * &before)
    })
}
