//! Black-box polynomial evaluation with query accounting.
//!
//! An oracle evaluates a monic polynomial exactly at rational points. Points
//! and values travel as [`Fraction`]s so that callers can hand over a batch
//! of points sharing one denominator and get values sharing one denominator
//! back.

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rug::ops::Pow;
use rug::{Complete, Integer, Rational};

use crate::error::{invalid, Error, Result};
use crate::scalar::{parse_rational, product_tree, Fraction};

/// Exact evaluation access to a monic real-rooted polynomial.
pub trait PolynomialOracle: Send + Sync {
    fn degree(&self) -> usize;

    /// Exact value at `x`; need not be in lowest terms.
    fn eval(&self, x: &Fraction) -> Fraction;

    fn eval_rational(&self, x: &Rational) -> Rational {
        self.eval(&Fraction::from(x)).into_rational()
    }
}

impl<T: PolynomialOracle + ?Sized> PolynomialOracle for &T {
    fn degree(&self) -> usize {
        (**self).degree()
    }
    fn eval(&self, x: &Fraction) -> Fraction {
        (**self).eval(x)
    }
}

impl<T: PolynomialOracle + ?Sized> PolynomialOracle for Box<T> {
    fn degree(&self) -> usize {
        (**self).degree()
    }
    fn eval(&self, x: &Fraction) -> Fraction {
        (**self).eval(x)
    }
}

impl<T: PolynomialOracle + ?Sized> PolynomialOracle for Arc<T> {
    fn degree(&self) -> usize {
        (**self).degree()
    }
    fn eval(&self, x: &Fraction) -> Fraction {
        (**self).eval(x)
    }
}

/// Polynomial given by its coefficients, highest degree first.
#[derive(Clone, Debug)]
pub struct ExplicitPolynomial {
    coefficients: Vec<Rational>,
    // coefficients * common_den, all integers
    scaled: Vec<Integer>,
    common_den: Integer,
}

/// Builds an oracle from monic coefficients, highest degree first.
pub fn explicit_oracle(coefficients: Vec<Rational>) -> Result<ExplicitPolynomial> {
    if coefficients.len() < 2 {
        return Err(invalid("polynomial needs degree at least 1"));
    }
    if coefficients[0] != 1 {
        return Err(invalid(format!("leading coefficient must be 1, got {}", coefficients[0])));
    }
    let common_den = coefficients
        .iter()
        .fold(Integer::from(1), |acc, c| acc.lcm(c.denom()));
    let scaled = coefficients
        .iter()
        .map(|c| Integer::from(c.numer() * Integer::from(common_den.div_exact_ref(c.denom()))))
        .collect();
    Ok(ExplicitPolynomial { coefficients, scaled, common_den })
}

impl ExplicitPolynomial {
    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }
}

impl PolynomialOracle for ExplicitPolynomial {
    fn degree(&self) -> usize {
        self.scaled.len() - 1
    }

    fn eval(&self, x: &Fraction) -> Fraction {
        let n = self.degree() as u32;
        let h = homogeneous_eval(&self.scaled, x.numer(), x.denom());
        let den = Integer::from(x.denom().pow(n)) * &self.common_den;
        Fraction::new(h, den)
    }
}

const HORNER_LEAF: usize = 24;

/// `sum_i c[i] * y^(d-i) * l^i` with `d = c.len() - 1`.
///
/// Horner's rule on short runs; longer runs split into halves joined by
/// `y^(len-h) * H(lo) + l^h * H(hi)` so that big multiplications stay balanced.
fn homogeneous_eval(c: &[Integer], y: &Integer, l: &Integer) -> Integer {
    if c.len() <= HORNER_LEAF {
        let mut acc = c[0].clone();
        let mut lpow = Integer::from(1);
        for ci in &c[1..] {
            lpow *= l;
            acc *= y;
            if *ci != 0 {
                acc += (ci * &lpow).complete();
            }
        }
        return acc;
    }
    let h = c.len() / 2;
    let lo = homogeneous_eval(&c[..h], y, l);
    let hi = homogeneous_eval(&c[h..], y, l);
    let ypow = Integer::from(y.pow((c.len() - h) as u32));
    let lpow = Integer::from(l.pow(h as u32));
    lo * ypow + hi * lpow
}

/// `prod (x - root)` over a fixed list of rational roots.
#[derive(Clone, Debug)]
pub struct RootProduct {
    roots: Vec<Rational>,
    den_product: Integer,
    max_root: Rational,
}

/// Builds the oracle `prod (x - r)` for a nonempty list of roots.
pub fn from_roots(roots: Vec<Rational>) -> Result<RootProduct> {
    let max_root = roots
        .iter()
        .max()
        .cloned()
        .ok_or_else(|| invalid("from_roots needs at least one root"))?;
    let den_product = product_tree(roots.iter().map(|r| r.denom().clone()).collect());
    Ok(RootProduct { roots, den_product, max_root })
}

impl RootProduct {
    pub fn roots(&self) -> &[Rational] {
        &self.roots
    }

    /// Largest root, the ground truth for tests.
    pub fn max_root(&self) -> &Rational {
        &self.max_root
    }
}

impl PolynomialOracle for RootProduct {
    fn degree(&self) -> usize {
        self.roots.len()
    }

    fn eval(&self, x: &Fraction) -> Fraction {
        // (y/l - r/q) = (y q - r l) / (l q)
        let (y, l) = (x.numer(), x.denom());
        let factors = self
            .roots
            .iter()
            .map(|r| (y * r.denom()).complete() - (r.numer() * l).complete())
            .collect();
        let den = Integer::from(l.pow(self.roots.len() as u32)) * &self.den_product;
        Fraction::new(product_tree(factors), den)
    }
}

/// Coefficients of `prod (x - r)`, highest degree first.
pub fn expand_roots(roots: &[Rational]) -> Vec<Rational> {
    // integer polynomial prod (q x - p), then divide through by prod q
    let mut polys: Vec<Vec<Integer>> = roots
        .iter()
        .map(|r| vec![r.denom().clone(), Integer::from(-r.numer())])
        .collect();
    if polys.is_empty() {
        return vec![Rational::from(1)];
    }
    while polys.len() > 1 {
        let mut next = Vec::with_capacity(polys.len().div_ceil(2));
        let mut it = polys.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(convolve(&a, &b)),
                None => next.push(a),
            }
        }
        polys = next;
    }
    let coeffs = polys.pop().unwrap();
    let lead = coeffs[0].clone();
    coeffs.into_iter().map(|c| Rational::from((c, lead.clone()))).collect()
}

fn convolve(a: &[Integer], b: &[Integer]) -> Vec<Integer> {
    let mut out = vec![Integer::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += (x * y).complete();
        }
    }
    out
}

#[derive(Debug, Default)]
struct LogState {
    count: AtomicU64,
    max_bits: AtomicU64,
    points: Option<Mutex<Vec<Rational>>>,
}

/// Shared handle to the query counters of a [`Counted`] oracle.
#[derive(Clone, Debug, Default)]
pub struct QueryLog {
    state: Arc<LogState>,
}

/// Point-in-time copy of a [`QueryLog`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct QueryStats {
    pub count: u64,
    pub max_query_bits: u64,
}

impl QueryLog {
    pub fn count(&self) -> u64 {
        self.state.count.load(Ordering::Relaxed)
    }

    /// Largest bit size (reduced numerator plus denominator) of any queried point.
    pub fn max_query_bits(&self) -> u64 {
        self.state.max_bits.load(Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> QueryStats {
        QueryStats { count: self.count(), max_query_bits: self.max_query_bits() }
    }

    /// Queried points in order, when recording was enabled.
    pub fn points(&self) -> Option<Vec<Rational>> {
        self.state.points.as_ref().map(|p| p.lock().unwrap().clone())
    }

    fn record(&self, x: &Fraction) {
        self.state.count.fetch_add(1, Ordering::Relaxed);
        match &self.state.points {
            Some(points) => {
                let r = x.to_rational();
                let bits = crate::scalar::bit_size(&r);
                self.state.max_bits.fetch_max(bits, Ordering::Relaxed);
                points.lock().unwrap().push(r);
            }
            None => {
                self.state.max_bits.fetch_max(x.reduced_bit_size(), Ordering::Relaxed);
            }
        }
    }
}

/// Oracle wrapper that counts queries and tracks their precision.
#[derive(Clone, Debug)]
pub struct Counted<O> {
    inner: O,
    log: QueryLog,
}

/// Wraps `oracle` with a fresh query log.
pub fn with_counter<O: PolynomialOracle>(oracle: O) -> (Counted<O>, QueryLog) {
    let log = QueryLog::default();
    (Counted { inner: oracle, log: log.clone() }, log)
}

/// Like [`with_counter`], additionally keeping every queried point.
pub fn with_recording_counter<O: PolynomialOracle>(oracle: O) -> (Counted<O>, QueryLog) {
    let log = QueryLog {
        state: Arc::new(LogState { points: Some(Mutex::new(Vec::new())), ..LogState::default() }),
    };
    (Counted { inner: oracle, log: log.clone() }, log)
}

impl<O> Counted<O> {
    pub fn log(&self) -> &QueryLog {
        &self.log
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: PolynomialOracle> PolynomialOracle for Counted<O> {
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn eval(&self, x: &Fraction) -> Fraction {
        self.log.record(x);
        self.inner.eval(x)
    }
}

/// Parses a polynomial file: one rational per line, highest degree first.
/// Blank lines and text after `#` are ignored.
pub fn parse_polynomial(text: &str) -> Result<Vec<Rational>> {
    let mut coeffs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let c = parse_rational(line)
            .map_err(|e| Error::Parse { line: idx + 1, message: e.to_string() })?;
        coeffs.push(c);
    }
    if coeffs.is_empty() {
        return Err(Error::Parse { line: 0, message: "no coefficients found".into() });
    }
    Ok(coeffs)
}

pub fn read_polynomial_file(path: impl AsRef<Path>) -> Result<ExplicitPolynomial> {
    let text = fs::read_to_string(path)?;
    explicit_oracle(parse_polynomial(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn qs(items: &[&str]) -> Vec<Rational> {
        items.iter().map(|s| q(s)).collect()
    }

    #[test]
    fn explicit_examples() {
        let p = explicit_oracle(qs(&["1", "-3", "2"])).unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.eval_rational(&q("0")), 2);
        assert_eq!(p.eval_rational(&q("3")), 2);
        assert_eq!(p.eval_rational(&q("1")), 0);
        assert!(explicit_oracle(qs(&["1"])).is_err());
        assert!(explicit_oracle(qs(&["2", "1"])).is_err());
    }

    #[test]
    fn root_product_examples() {
        let p = from_roots(qs(&["1/2", "1/4"])).unwrap();
        assert_eq!(p.eval_rational(&q("1")), q("3/8"));
        assert_eq!(p.max_root(), &q("1/2"));
        let p = from_roots(qs(&["0"])).unwrap();
        assert_eq!(p.eval_rational(&q("0")), 0);
        let p = from_roots(qs(&["1/4", "1/4", "1/4"])).unwrap();
        assert_eq!(p.eval_rational(&q("1/2")), q("1/64"));
        assert!(from_roots(vec![]).is_err());
    }

    #[test]
    fn long_explicit_uses_split_path() {
        let roots: Vec<Rational> = (0..70).map(|i| Rational::from((i, 141))).collect();
        let rp = from_roots(roots.clone()).unwrap();
        let ep = explicit_oracle(expand_roots(&roots)).unwrap();
        for x in ["1", "7/13", "-2/3", "1/2"] {
            assert_eq!(rp.eval_rational(&q(x)), ep.eval_rational(&q(x)), "x = {x}");
        }
    }

    #[test]
    fn shared_denominator_points_give_shared_denominator_values() {
        let p = from_roots(qs(&["1/3", "1/5"])).unwrap();
        let a = p.eval(&Fraction::new(Integer::from(4), Integer::from(8)));
        let b = p.eval(&Fraction::new(Integer::from(6), Integer::from(8)));
        assert_eq!(a.denom(), b.denom());
        assert_eq!(a.to_rational(), q("1/2") * q("1/2") - q("1/2") * q("8/15") + q("1/15"));
    }

    #[test]
    fn counter_tracks_calls_and_bits() {
        let (p, log) = with_counter(from_roots(qs(&["1/4"])).unwrap());
        assert_eq!(log.count(), 0);
        for x in ["1", "1/2", "1/3"] {
            p.eval_rational(&q(x));
        }
        assert_eq!(log.count(), 3);
        p.eval_rational(&q("1/1024"));
        assert!(log.max_query_bits() >= 11);
        assert!(log.points().is_none());

        let (p, log) = with_recording_counter(from_roots(qs(&["1/4"])).unwrap());
        // unreduced 2/4 is recorded as 1/2
        p.eval(&Fraction::new(Integer::from(2), Integer::from(4)));
        assert_eq!(log.points().unwrap(), vec![q("1/2")]);
        assert_eq!(log.max_query_bits(), 3);
    }

    #[test]
    fn polynomial_file_parsing() {
        let text = "# x^2 - 3x + 2\n1\n\n-3   # linear\n2\n";
        assert_eq!(parse_polynomial(text).unwrap(), qs(&["1", "-3", "2"]));
        match parse_polynomial("1\nx\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_polynomial("# nothing\n").is_err());
    }
}
