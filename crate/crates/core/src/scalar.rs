//! Exact rational arithmetic helpers.
//!
//! Every quantity in the root finder is an exact [`Rational`] (always stored
//! in lowest terms with a positive denominator). The irrational constants the
//! parameter schedule needs, `n^(1/k)` and `2e`, are replaced by rational
//! upper bounds.
//!
//! [`Fraction`] is the unreduced companion type used on hot paths: oracle
//! values and finite-difference sums are formed without gcd reductions,
//! which dominate the cost once numbers reach millions of bits.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::ops::{DivRounding, Pow};
use rug::{Complete, Integer, Rational};

use crate::error::{invalid, Result};

/// Bit length of the numerator plus bit length of the denominator.
pub fn bit_size(x: &Rational) -> u64 {
    u64::from(x.numer().significant_bits()) + u64::from(x.denom().significant_bits())
}

/// Largest integer multiple of `grid` that is `<= x`.
pub fn round_down_to_grid(x: &Rational, grid: &Rational) -> Result<Rational> {
    if *grid <= 0 {
        return Err(invalid(format!("grid must be positive, got {grid}")));
    }
    let steps = (x / grid).complete().floor();
    Ok(steps * grid)
}

/// Rational `r` with `n^(1/k) <= r <= n^(1/k) * (1 + 2^-slack)`.
///
/// Exact integer roots come back exactly.
pub fn nth_root_upper_bound(n: u64, k: u32, slack: u32) -> Result<Rational> {
    if n == 0 || k == 0 {
        return Err(invalid(format!("nth_root_upper_bound needs n, k >= 1 (n={n}, k={k})")));
    }
    let shift = u64::from(k) * u64::from(slack);
    let shift = u32::try_from(shift).map_err(|_| invalid("slack too large"))?;
    let scaled = Integer::from(n) << shift;
    let mut root = scaled.clone().root(k);
    if Integer::from((&root).pow(k)) < scaled {
        root += 1;
    }
    Ok(Rational::from((root, Integer::from(1) << slack)))
}

/// Rational `s` with `sqrt(x) <= s <= sqrt(x) * (1 + 2^-slack)` for `x > 0`;
/// zero for `x = 0`.
pub fn sqrt_upper_bound(x: &Rational, slack: u32) -> Result<Rational> {
    if *x < 0 {
        return Err(invalid(format!("square root of negative value {x}")));
    }
    if *x == 0 {
        return Ok(Rational::new());
    }
    // sqrt(p/q) = sqrt(p*q)/q; pick a dyadic scale 2^m so that one unit in the
    // last place is below the relative tolerance.
    let pq = Integer::from(x.numer() * x.denom());
    let floor_root_bits = pq.clone().sqrt().significant_bits();
    let m = (slack + 1).saturating_sub(floor_root_bits);
    let scaled = pq << (2 * m);
    let mut root = scaled.clone().sqrt();
    if Integer::from(root.square_ref()) < scaled {
        root += 1;
    }
    let den = Integer::from(x.denom() << m);
    Ok(Rational::from((root, den)))
}

/// Fixed rational upper bound on `2e`: `136/25 = 5.44`.
pub fn two_e_upper_bound() -> Rational {
    Rational::from((136, 25))
}

/// Smallest `L >= 0` with `2^L >= 1/eps`, for `0 < eps <= 1`.
pub fn ceil_log2_recip(eps: &Rational) -> u32 {
    debug_assert!(*eps > 0);
    let num_bits = eps.numer().significant_bits();
    let den_bits = eps.denom().significant_bits();
    let mut l = den_bits.saturating_sub(num_bits).saturating_sub(1);
    while Rational::from(eps << l) < 1 {
        l += 1;
    }
    l
}

/// `bitlength(ceil(1/eps))`, an integer upper bound on `ln(1/eps)`.
pub fn ln_recip_upper(eps: &Rational) -> u32 {
    let recip = Rational::from(eps.recip_ref());
    recip.ceil().numer().significant_bits()
}

/// Parses `p/q`, `p` or `-p/q` in base 10.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || invalid(format!("malformed rational {text:?}"));
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (body, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(num) || den.is_some_and(|d| !digits(d)) {
        return Err(bad());
    }
    let mut n = Integer::from(Integer::parse(num).map_err(|_| bad())?);
    let d = match den {
        Some(d) => Integer::from(Integer::parse(d).map_err(|_| bad())?),
        None => Integer::from(1),
    };
    if d == 0 {
        return Err(invalid(format!("zero denominator in {text:?}")));
    }
    if neg {
        n = -n;
    }
    Ok(Rational::from((n, d)))
}

/// Decimal rendering with `digits` fractional digits, rounded to nearest
/// with ties to even.
pub fn to_decimal(x: &Rational, digits: u32) -> String {
    let scale = Integer::from(10).pow(digits);
    let num = Integer::from(x.numer().abs_ref()) * &scale;
    let (mut q, r) = num.div_rem_floor(x.denom().clone());
    match (r * 2u32).cmp(x.denom()) {
        Ordering::Greater => q += 1,
        Ordering::Equal if q.is_odd() => q += 1,
        _ => {}
    }
    let mut body = q.to_string();
    let width = digits as usize + 1;
    if body.len() < width {
        body = format!("{}{body}", "0".repeat(width - body.len()));
    }
    let split = body.len() - digits as usize;
    let sign = if *x < 0 && body.bytes().any(|b| b != b'0') { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{body}")
    } else {
        format!("{sign}{}.{}", &body[..split], &body[split..])
    }
}

/// Product of all factors, multiplied as a balanced tree.
pub fn product_tree(mut factors: Vec<Integer>) -> Integer {
    if factors.is_empty() {
        return Integer::from(1);
    }
    while factors.len() > 1 {
        let mut next = Vec::with_capacity(factors.len().div_ceil(2));
        let mut it = factors.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a * b),
                None => next.push(a),
            }
        }
        factors = next;
    }
    factors.pop().unwrap()
}

/// Exact quotient `num/den` kept without gcd reduction; `den > 0`.
///
/// Arithmetic takes a shortcut when both operands share a denominator, which
/// is the common case for oracle values at points over one common grid.
#[derive(Clone, Debug)]
pub struct Fraction {
    num: Integer,
    den: Integer,
}

impl Fraction {
    /// Panics if `den` is zero.
    pub fn new(num: Integer, den: Integer) -> Self {
        assert!(den != 0, "fraction with zero denominator");
        if den < 0 {
            Fraction { num: -num, den: -den }
        } else {
            Fraction { num, den }
        }
    }

    pub fn from_integer(num: Integer) -> Self {
        Fraction { num, den: Integer::from(1) }
    }

    pub fn numer(&self) -> &Integer {
        &self.num
    }

    pub fn denom(&self) -> &Integer {
        &self.den
    }

    pub fn into_parts(self) -> (Integer, Integer) {
        (self.num, self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn signum(&self) -> Ordering {
        self.num.cmp0()
    }

    /// Canonical (gcd-reduced) value.
    pub fn to_rational(&self) -> Rational {
        Rational::from((self.num.clone(), self.den.clone()))
    }

    pub fn into_rational(self) -> Rational {
        Rational::from((self.num, self.den))
    }

    pub fn reduced_bit_size(&self) -> u64 {
        let g = Integer::from(self.num.gcd_ref(&self.den));
        let n = Integer::from(self.num.div_exact_ref(&g));
        let d = Integer::from(self.den.div_exact_ref(&g));
        u64::from(n.significant_bits()) + u64::from(d.significant_bits())
    }

    pub fn recip(&self) -> Fraction {
        Fraction::new(self.den.clone(), self.num.clone())
    }

    pub fn floor(&self) -> Integer {
        Integer::from((&self.num).div_floor(&self.den))
    }

    pub fn mul_integer(&self, k: &Integer) -> Fraction {
        Fraction { num: (&self.num * k).complete(), den: self.den.clone() }
    }

    pub fn cmp_rational(&self, r: &Rational) -> Ordering {
        let lhs = (&self.num * r.denom()).complete();
        let rhs = (r.numer() * &self.den).complete();
        lhs.cmp(&rhs)
    }
}

impl From<&Rational> for Fraction {
    fn from(r: &Rational) -> Self {
        Fraction { num: r.numer().clone(), den: r.denom().clone() }
    }
}

impl From<Rational> for Fraction {
    fn from(r: Rational) -> Self {
        let (num, den) = r.into_numer_denom();
        Fraction { num, den }
    }
}

impl PartialEq for Fraction {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Fraction {}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.den == other.den {
            return self.num.cmp(&other.num);
        }
        let lhs = (&self.num * &other.den).complete();
        let rhs = (&other.num * &self.den).complete();
        lhs.cmp(&rhs)
    }
}

impl Add for &Fraction {
    type Output = Fraction;
    fn add(self, rhs: &Fraction) -> Fraction {
        if self.den == rhs.den {
            return Fraction { num: (&self.num + &rhs.num).complete(), den: self.den.clone() };
        }
        let num = (&self.num * &rhs.den).complete() + (&rhs.num * &self.den).complete();
        Fraction { num, den: (&self.den * &rhs.den).complete() }
    }
}

impl Sub for &Fraction {
    type Output = Fraction;
    fn sub(self, rhs: &Fraction) -> Fraction {
        if self.den == rhs.den {
            return Fraction { num: (&self.num - &rhs.num).complete(), den: self.den.clone() };
        }
        let num = (&self.num * &rhs.den).complete() - (&rhs.num * &self.den).complete();
        Fraction { num, den: (&self.den * &rhs.den).complete() }
    }
}

impl Mul for &Fraction {
    type Output = Fraction;
    fn mul(self, rhs: &Fraction) -> Fraction {
        Fraction {
            num: (&self.num * &rhs.num).complete(),
            den: (&self.den * &rhs.den).complete(),
        }
    }
}

impl Div for &Fraction {
    type Output = Fraction;
    /// Panics when dividing by zero.
    fn div(self, rhs: &Fraction) -> Fraction {
        assert!(!rhs.is_zero(), "fraction division by zero");
        if self.den == rhs.den {
            return Fraction::new(self.num.clone(), rhs.num.clone());
        }
        Fraction::new((&self.num * &rhs.den).complete(), (&self.den * &rhs.num).complete())
    }
}

impl Neg for Fraction {
    type Output = Fraction;
    fn neg(self) -> Fraction {
        Fraction { num: -self.num, den: self.den }
    }
}
