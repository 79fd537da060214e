//! Higher-order Newton iteration driven by finite-difference estimates of the
//! inverse-power sums `mom_m(x) = sum_i 1/(x - l_i)^m`.
//!
//! Starting from `x = 1`, each step estimates `mom_{k-1}` and `mom_k` from `k`
//! equally spaced points, moves left by `mom_{k-1} / (4 n^(1/k) mom_k)` rounded
//! down to the grid `eps'/n`, and stops once that move is at most `eps'`.

use std::io::{self, Write};

use rug::ops::{DivRounding, Pow};
use rug::{Complete, Integer, Rational};

use crate::error::{invalid, Error, Result};
use crate::oracle::{with_counter, PolynomialOracle, QueryStats};
use crate::scalar::{
    bit_size, ceil_log2_recip, nth_root_upper_bound, round_down_to_grid, two_e_upper_bound,
    Fraction,
};

/// Relative slack of the `n^(1/k)` upper bound.
const ROOT_SLACK: u32 = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccelConfig {
    pub n: usize,
    pub k: u32,
    pub eps: Rational,
    /// Stop threshold `eps / (8 nroot_k)`.
    pub eps_prime: Rational,
    pub delta: Rational,
    pub delta_prime: Rational,
    pub alpha: Rational,
    /// Rational upper bound on `n^(1/k)`.
    pub nroot_k: Rational,
    pub max_iters: u64,
}

impl AccelConfig {
    /// Spacing of the lattice every iterate lies on, `eps' / n`.
    pub fn grid(&self) -> Rational {
        Rational::from(&self.eps_prime / self.n as u64)
    }

    /// Upper bound on the number of oracle queries of a full run.
    pub fn query_budget(&self) -> u64 {
        2 * (u64::from(self.k) + 1) * self.max_iters
    }
}

pub fn make_config(n: usize, eps: &Rational, k: u32) -> Result<AccelConfig> {
    if n == 0 {
        return Err(invalid("degree must be positive"));
    }
    if k == 0 || k as usize > n {
        return Err(invalid(format!("k must satisfy 1 <= k <= n (k={k}, n={n})")));
    }
    check_eps(eps)?;
    let nroot_k = nth_root_upper_bound(n as u64, k, ROOT_SLACK)?;
    let eps_prime = Rational::from(eps / Rational::from(&nroot_k * 8u32));
    let two_e_k = two_e_upper_bound().pow(k);
    let delta = Rational::from(&eps_prime / (two_e_k * 16u32 * k));
    let delta_prime = Rational::from((&delta).pow(k + 1));
    let n2 = Rational::from(n as u64).pow(2u32);
    let alpha = Rational::from(eps_prime.square_ref()) * &delta_prime / (n2 * 2u32);
    let log_term = ceil_log2_recip(eps);
    let max_iters = Rational::from(&nroot_k * (16 * log_term))
        .ceil()
        .numer()
        .to_u64()
        .ok_or_else(|| invalid("iteration cap overflows"))?;
    Ok(AccelConfig { n, k, eps: eps.clone(), eps_prime, delta, delta_prime, alpha, nroot_k, max_iters })
}

fn check_eps(eps: &Rational) -> Result<()> {
    if *eps <= 0 || *eps > Rational::from((1, 2)) {
        return Err(invalid(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    Ok(())
}

/// `max(1, ceil(log2 n))`.
pub fn choose_k(n: usize) -> u32 {
    assert!(n >= 1);
    let k = usize::BITS - (n - 1).leading_zeros();
    k.max(1)
}

/// `(p(x + a) - p(x)) / (a p(x))`, two queries.
pub fn g1_tilde<O: PolynomialOracle + ?Sized>(p: &O, x: &Rational, alpha: &Rational) -> Result<Rational> {
    let px = p.eval_rational(x);
    if px == 0 {
        return Err(Error::ExactRoot { point: x.clone() });
    }
    let shifted = p.eval_rational(&Rational::from(x + alpha));
    Ok((shifted - &px) / (px * alpha))
}

/// Estimate of `mom_{m+1}(x)` from the `m`-th forward difference of
/// [`g1_tilde`] at `x, x + d, ..., x + m d`. Uses `2(m + 1)` queries.
pub fn gk_tilde<O: PolynomialOracle + ?Sized>(
    p: &O,
    x: &Rational,
    m: u32,
    delta: &Rational,
    alpha: &Rational,
) -> Result<Rational> {
    let mut sum = Rational::new();
    for j in 0..=m {
        let y = Rational::from(delta * j) + x;
        let term = g1_tilde(p, &y, alpha)? * binomial(m, j);
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let scale = Rational::from(Integer::factorial(m).complete()) * Rational::from(delta.pow(m));
    Ok(sum / scale)
}

/// Estimate of `mom_order(x)`; order zero is `n` exactly and costs nothing.
pub fn g_tilde<O: PolynomialOracle + ?Sized>(
    p: &O,
    x: &Rational,
    order: u32,
    delta: &Rational,
    alpha: &Rational,
) -> Result<Rational> {
    if order == 0 {
        return Ok(Rational::from(p.degree() as u64));
    }
    gk_tilde(p, x, order - 1, delta, alpha)
}

/// `sum_i 1/(x - r_i)^m` for `x` above every root.
pub fn mom_exact(roots: &[Rational], x: &Rational, m: u32) -> Result<Rational> {
    let mut sum = Rational::new();
    for r in roots {
        let gap = Rational::from(x - r);
        if gap <= 0 {
            return Err(invalid(format!("point {x} is not above root {r}")));
        }
        sum += gap.recip().pow(m);
    }
    Ok(sum)
}

/// `sum_{i=0}^{k} (-1)^i C(k, i) i^j`.
pub fn sj_sum(k: u32, j: u32) -> Integer {
    let mut sum = Integer::new();
    for i in 0..=k {
        let term = binomial(k, i) * Integer::from(Integer::u_pow_u(i, j));
        if i % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum
}

fn binomial(n: u32, k: u32) -> Integer {
    Integer::binomial_u(n, k).complete()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub t: u64,
    pub x: Rational,
    /// Exact update `u`; absent when the run was asked not to keep it.
    pub update: Option<Rational>,
    /// Update after rounding to the grid; absent on the stopping step.
    pub update_rounded: Option<Rational>,
    pub stopped: bool,
    pub queries_cumulative: u64,
    pub max_query_bits: u64,
}

#[derive(Clone, Debug)]
pub struct IterationTrace {
    pub config: AccelConfig,
    pub steps: Vec<TraceStep>,
    pub final_estimate: Rational,
    pub queries: QueryStats,
    pub iterations: u64,
    /// Set when some query point was an exact root.
    pub exact_root_hit: bool,
}

impl IterationTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x,u,u_rounded,queries_cumulative,max_query_bits")?;
        let opt = |v: &Option<Rational>| v.as_ref().map(|r| r.to_string()).unwrap_or_default();
        for s in &self.steps {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                s.t,
                s.x,
                opt(&s.update),
                opt(&s.update_rounded),
                s.queries_cumulative,
                s.max_query_bits
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("writing to a Vec cannot fail");
        String::from_utf8(out).expect("csv is ascii")
    }
}

#[derive(Clone, Debug)]
pub struct AccelOptions {
    /// Keep the exact `u` of every step in the trace. Reducing it costs a gcd
    /// on numbers the size of the oracle values.
    pub exact_updates: bool,
}

impl Default for AccelOptions {
    fn default() -> Self {
        AccelOptions { exact_updates: true }
    }
}

pub fn accel_root<O: PolynomialOracle + ?Sized>(
    p: &O,
    eps: &Rational,
    k: u32,
) -> Result<(Rational, IterationTrace)> {
    let config = make_config(p.degree(), eps, k)?;
    accel_root_with(p, &config, &AccelOptions::default())
}

/// Runs the iteration for a prepared configuration. The oracle must be monic
/// with every root in `[0, 1/2]`.
pub fn accel_root_with<O: PolynomialOracle + ?Sized>(
    p: &O,
    config: &AccelConfig,
    options: &AccelOptions,
) -> Result<(Rational, IterationTrace)> {
    if p.degree() != config.n {
        return Err(invalid(format!(
            "config is for degree {} but the oracle has degree {}",
            config.n,
            p.degree()
        )));
    }
    let (oracle, log) = with_counter(p);
    let k = config.k;
    let grid = config.grid();
    let w1: Vec<Integer> = (0..k).map(|j| signed_binomial(k.saturating_sub(2), j, k >= 2)).collect();
    let w2: Vec<Integer> = (0..k).map(|j| signed_binomial(k - 1, j, true)).collect();
    let c = update_scale(config);

    let mut x = Rational::from(1);
    let mut steps = Vec::new();
    let mut exact_root_hit = false;
    let mut iterations = 0;
    for t in 0..config.max_iters {
        iterations = t + 1;
        let (s1, s2) = match difference_sums(&oracle, &x, config, &w1, &w2) {
            Ok(v) => v,
            Err(Error::ExactRoot { point }) => {
                exact_root_hit = true;
                if point < x {
                    x = point;
                }
                steps.push(TraceStep {
                    t,
                    x: x.clone(),
                    update: None,
                    update_rounded: None,
                    stopped: true,
                    queries_cumulative: log.count(),
                    max_query_bits: log.max_query_bits(),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        if s1.cmp0().is_le() || s2.cmp0().is_le() {
            return Err(Error::DegenerateOracle {
                point: x,
                reason: "difference estimate is not positive",
            });
        }
        // u = (cn s1) / (cd s2)
        let num = s1 * c.numer();
        let den = s2 * c.denom();
        let stop = (&num * config.eps_prime.denom()).complete() <= (&den * config.eps_prime.numer()).complete();
        let update_rounded = if stop {
            None
        } else {
            let m = (&num * grid.denom()).complete().div_floor((&den * grid.numer()).complete());
            Some(Rational::from(&grid * m))
        };
        let update = options.exact_updates.then(|| Rational::from((num, den)));
        steps.push(TraceStep {
            t,
            x: x.clone(),
            update,
            update_rounded: update_rounded.clone(),
            stopped: stop,
            queries_cumulative: log.count(),
            max_query_bits: log.max_query_bits(),
        });
        match update_rounded {
            None => break,
            Some(step) => x -= step,
        }
    }
    if steps.last().map_or(true, |s| !s.stopped) {
        // cap reached; the current iterate is the answer
        steps.push(TraceStep {
            t: iterations,
            x: x.clone(),
            update: None,
            update_rounded: None,
            stopped: false,
            queries_cumulative: log.count(),
            max_query_bits: log.max_query_bits(),
        });
    }
    let trace = IterationTrace {
        config: config.clone(),
        steps,
        final_estimate: x.clone(),
        queries: log.snapshot(),
        iterations,
        exact_root_hit,
    };
    Ok((x, trace))
}

/// `u = c * S1 / S2` for the sums of [`difference_sums`]: `(k-1) delta / (4 nroot)`
/// for `k >= 2`, and `n alpha / (4 nroot)` for `k = 1` where `S2 / S1 = alpha G_0`.
fn update_scale(config: &AccelConfig) -> Rational {
    let four_root = Rational::from(&config.nroot_k * 4u32);
    if config.k == 1 {
        Rational::from(&config.alpha * config.n as u64) / four_root
    } else {
        Rational::from(&config.delta * (config.k - 1)) / four_root
    }
}

fn signed_binomial(n: u32, j: u32, present: bool) -> Integer {
    if !present || j > n {
        return Integer::new();
    }
    let b = binomial(n, j);
    if j % 2 == 0 {
        b
    } else {
        -b
    }
}

/// Numerators of the two weighted sums `sum_j w_j G_j` over a shared
/// denominator, where `G_j = g1_tilde(x + j delta)` for `j < k`. For `k = 1`
/// returns `(1, G_0)` in the same form.
fn difference_sums<O: PolynomialOracle>(
    p: &O,
    x: &Rational,
    config: &AccelConfig,
    w1: &[Integer],
    w2: &[Integer],
) -> Result<(Integer, Integer)> {
    let (delta, alpha) = (&config.delta, &config.alpha);
    let l = x.denom().clone().lcm(delta.denom()).lcm(alpha.denom());
    let scaled = |r: &Rational| Integer::from(r.numer() * Integer::from(l.div_exact_ref(r.denom())));
    let (x_num, d_num, a_num) = (scaled(x), scaled(delta), scaled(alpha));

    let mut leaves = Vec::with_capacity(config.k as usize);
    for j in 0..config.k {
        let y = (&d_num * j).complete() + &x_num;
        let at = Fraction::new(y.clone(), l.clone());
        let px = p.eval(&at);
        if px.is_zero() {
            return Err(Error::ExactRoot { point: at.into_rational() });
        }
        let py = p.eval(&Fraction::new(y + &a_num, l.clone()));
        // G_j = (py - px) / (alpha px); the common factor 1/alpha is dropped
        let g = &(&py - &px) / &px;
        let (num, den) = g.into_parts();
        if config.k == 1 {
            return Ok((den, num));
        }
        leaves.push(Leaf {
            s1: (&num * &w1[j as usize]).complete(),
            s2: num * &w2[j as usize],
            den,
        });
    }
    Ok(tree_sum(leaves))
}

struct Leaf {
    s1: Integer,
    s2: Integer,
    den: Integer,
}

/// Pairwise sum of fractions sharing two numerators; the root's denominator
/// cancels in `s1 / s2` and is never formed.
fn tree_sum(mut level: Vec<Leaf>) -> (Integer, Integer) {
    while level.len() > 1 {
        let last = level.len() == 2;
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                None => next.push(a),
                Some(b) => {
                    let cross = |sa: &Integer, sb: &Integer| -> Integer {
                        let mut v = Integer::new();
                        if *sa != 0 {
                            v += (sa * &b.den).complete();
                        }
                        if *sb != 0 {
                            v += (sb * &a.den).complete();
                        }
                        v
                    };
                    let s1 = cross(&a.s1, &b.s1);
                    let s2 = cross(&a.s2, &b.s2);
                    let den = if last { Integer::new() } else { a.den * b.den };
                    next.push(Leaf { s1, s2, den });
                }
            }
        }
        level = next;
    }
    let root = level.pop().expect("at least one leaf");
    (root.s1, root.s2)
}

/// Exact `u` at `x` from the generic estimators, for cross-checking the
/// shared-denominator path.
pub fn update_reference<O: PolynomialOracle + ?Sized>(
    p: &O,
    x: &Rational,
    config: &AccelConfig,
) -> Result<Rational> {
    let lo = g_tilde(p, x, config.k - 1, &config.delta, &config.alpha)?;
    let hi = g_tilde(p, x, config.k, &config.delta, &config.alpha)?;
    Ok(lo / hi / Rational::from(&config.nroot_k * 4u32))
}

/// True iff `x` equals `1 - m * grid` for a nonnegative integer `m`.
pub fn on_grid(x: &Rational, grid: &Rational) -> bool {
    let m = Rational::from(1 - x) / grid;
    m >= 0 && *m.denom() == 1
}

/// Rounding of `u` used by the iteration, exposed for tests.
pub fn round_update(u: &Rational, config: &AccelConfig) -> Rational {
    round_down_to_grid(u, &config.grid()).expect("grid is positive")
}

/// Largest reduced bit size among the iterates of a trace.
pub fn max_iterate_bits(trace: &IterationTrace) -> u64 {
    trace.steps.iter().map(|s| bit_size(&s.x)).max().unwrap_or(0)
}
