//! Query-count sweeps comparing the plain and accelerated iterations.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Complete, Integer, Rational};
use serde_json::{json, Value};

use crate::accel::{accel_root_with, choose_k, make_config, AccelOptions};
use crate::detpoly::{charpoly_oracle, frobenius_upper_bound, SymmetricMatrix};
use crate::eigen::{scaled_eps, top_eigenvalue_with};
use crate::error::{invalid, Error, Result};
use crate::newton::classic_newton;
use crate::normalize::normalize_matrix;
use crate::oracle::{explicit_oracle, expand_roots, from_roots, PolynomialOracle};

/// Largest denominator of a generated root.
const MAX_ROOT_DEN: u32 = 1 << 16;

/// Distance between the top two roots of the clustered family: `2^-21`.
pub fn cluster_gap() -> Rational {
    Rational::from((1, 1u32 << 21))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Family {
    RandomRoots,
    ClusteredTopRoots,
    CompleteGraph,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::RandomRoots => "random-roots",
            Family::ClusteredTopRoots => "clustered-top-roots",
            Family::CompleteGraph => "complete-graph",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-roots" => Ok(Family::RandomRoots),
            "clustered-top-roots" => Ok(Family::ClusteredTopRoots),
            "complete-graph" => Ok(Family::CompleteGraph),
            _ => Err(invalid(format!(
                "unknown family {s:?} (expected random-roots, clustered-top-roots or complete-graph)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Classic,
    Accel(u32),
    Power,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Classic => "classic",
            Method::Accel(_) => "accel",
            Method::Power => "power",
        }
    }

    pub fn k(self) -> Option<u32> {
        match self {
            Method::Accel(k) => Some(k),
            _ => None,
        }
    }
}

/// A requested depth: a fixed `k` or `choose_k(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KChoice {
    Fixed(u32),
    Auto,
}

impl KChoice {
    pub fn resolve(self, n: usize) -> u32 {
        match self {
            KChoice::Fixed(k) => k,
            KChoice::Auto => choose_k(n),
        }
    }
}

impl FromStr for KChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(KChoice::Auto);
        }
        match s.parse::<u32>() {
            Ok(k) if k >= 1 => Ok(KChoice::Fixed(k)),
            _ => Err(invalid(format!("bad k {s:?} (expected a positive integer or auto)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRecord {
    pub family: Family,
    pub method: Method,
    pub n: usize,
    pub eps: Rational,
    /// Seed of this particular instance.
    pub seed: u64,
    pub queries: u64,
    pub iterations: u64,
    pub max_query_bits: u64,
    /// `estimate - lambda_1`.
    pub final_gap: Option<Rational>,
}

pub const CSV_HEADER: &str =
    "family,method,k,n,eps,seed,queries,iterations,max_query_bits,final_gap";

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.family,
            self.method.name(),
            self.method.k().map(|k| k.to_string()).unwrap_or_default(),
            self.n,
            self.eps,
            self.seed,
            self.queries,
            self.iterations,
            self.max_query_bits,
            self.final_gap.as_ref().map(|g| g.to_string()).unwrap_or_default()
        )
    }
}

pub fn write_csv<W: Write>(records: &[BenchRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// One summary row per (family, method, k, n, eps).
pub fn summary_json(records: &[BenchRecord]) -> Value {
    let mut groups: BTreeMap<(Family, Method, usize, Rational), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.family, r.method, r.n, r.eps.clone())).or_default().push(r);
    }
    let rows: Vec<Value> = groups
        .into_iter()
        .map(|((family, method, n, eps), rs)| {
            let count = rs.len() as u64;
            let total: u64 = rs.iter().map(|r| r.queries).sum();
            let iters: u64 = rs.iter().map(|r| r.iterations).sum();
            let worst_gap = rs.iter().filter_map(|r| r.final_gap.clone()).max();
            json!({
                "family": family.name(),
                "method": method.name(),
                "k": method.k(),
                "n": n,
                "eps": eps.to_string(),
                "instances": count,
                "queries_mean": total as f64 / count as f64,
                "queries_min": rs.iter().map(|r| r.queries).min(),
                "queries_max": rs.iter().map(|r| r.queries).max(),
                "iterations_mean": iters as f64 / count as f64,
                "max_query_bits": rs.iter().map(|r| r.max_query_bits).max(),
                "worst_gap": worst_gap.map(|g| g.to_string()),
            })
        })
        .collect();
    json!({ "groups": rows })
}

/// `count` roots `r/q` with `q` uniform in `[1, 2^16]` and `r` uniform in
/// `[0, floor(q/2)]`, so every root lies in `[0, 1/2]`.
pub fn random_roots<R: Rng>(count: usize, rng: &mut R) -> Vec<Rational> {
    (0..count)
        .map(|_| {
            let q = rng.gen_range(1..=MAX_ROOT_DEN);
            let r = rng.gen_range(0..=q / 2);
            Rational::from((r, q))
        })
        .collect()
}

/// Roots in `[0, 1/2]` whose top two are exactly [`cluster_gap`] apart.
pub fn clustered_roots<R: Rng>(count: usize, rng: &mut R) -> Vec<Rational> {
    assert!(count >= 2);
    let top = Rational::from((rng.gen_range(1u32 << 14..=1u32 << 15), 1u32 << 16));
    let second = Rational::from(&top - cluster_gap());
    let mut roots = vec![top, second.clone()];
    // the rest are scaled into [0, second]
    let two_second = Rational::from(&second * 2u32);
    roots.extend(random_roots(count - 2, rng).into_iter().map(|r| r * &two_second));
    roots
}

/// Generator for instance `index` of a sweep with base seed `seed`.
pub fn instance_rng(seed: u64, n: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    rng
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub family: Family,
    pub ns: Vec<usize>,
    pub epss: Vec<Rational>,
    pub ks: Vec<KChoice>,
    pub seed: u64,
    /// Instances per degree; instance `i` uses seed `seed + i`.
    pub instances: usize,
    pub classic: bool,
    /// Power-iteration rows (matrix families only).
    pub power: bool,
    /// Evaluate root families through expanded coefficients instead of the
    /// product form.
    pub explicit: bool,
}

impl SweepSpec {
    pub fn new(family: Family, ns: Vec<usize>, epss: Vec<Rational>, ks: Vec<KChoice>, seed: u64) -> Self {
        SweepSpec { family, ns, epss, ks, seed, instances: 1, classic: true, power: false, explicit: false }
    }
}

/// Runs every configured method on every instance. Deterministic in the spec.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<BenchRecord>> {
    if spec.ns.is_empty() || spec.epss.is_empty() {
        return Err(invalid("sweep needs at least one n and one eps"));
    }
    if spec.ns.contains(&0) {
        return Err(invalid("degrees must be positive"));
    }
    let mut records = Vec::new();
    for &n in &spec.ns {
        for i in 0..spec.instances {
            let seed = spec.seed.wrapping_add(i as u64);
            match spec.family {
                Family::RandomRoots | Family::ClusteredTopRoots => {
                    let mut rng = instance_rng(seed, n);
                    let roots = if spec.family == Family::RandomRoots || n < 2 {
                        random_roots(n, &mut rng)
                    } else {
                        clustered_roots(n, &mut rng)
                    };
                    let truth = roots.iter().max().cloned().expect("n >= 1");
                    if spec.explicit {
                        let p = explicit_oracle(expand_roots(&roots))?;
                        root_family_cell(spec, n, seed, &p, &truth, &mut records)?;
                    } else {
                        let p = from_roots(roots)?;
                        root_family_cell(spec, n, seed, &p, &truth, &mut records)?;
                    }
                }
                Family::CompleteGraph => graph_cell(spec, n, seed, &mut records)?,
            }
        }
    }
    Ok(records)
}

fn root_family_cell<O: PolynomialOracle>(
    spec: &SweepSpec,
    n: usize,
    seed: u64,
    p: &O,
    truth: &Rational,
    out: &mut Vec<BenchRecord>,
) -> Result<()> {
    let options = AccelOptions { exact_updates: false };
    for eps in &spec.epss {
        let record = |method, queries, iterations, bits, estimate: &Rational| BenchRecord {
            family: spec.family,
            method,
            n,
            eps: eps.clone(),
            seed,
            queries,
            iterations,
            max_query_bits: bits,
            final_gap: Some(Rational::from(estimate - truth)),
        };
        if spec.classic {
            let r = classic_newton(p, eps)?;
            out.push(record(Method::Classic, r.queries, r.iterations, r.max_query_bits, &r.root_estimate));
        }
        for kc in &spec.ks {
            let k = kc.resolve(n).min(n as u32);
            let config = make_config(n, eps, k)?;
            let (x, t) = accel_root_with(p, &config, &options)?;
            out.push(record(Method::Accel(k), t.queries.count, t.iterations, t.queries.max_query_bits, &x));
        }
    }
    Ok(())
}

fn graph_cell(spec: &SweepSpec, n: usize, seed: u64, out: &mut Vec<BenchRecord>) -> Result<()> {
    let a = SymmetricMatrix::complete_graph(n);
    let truth = Rational::from(n as u64 - 1);
    let options = AccelOptions { exact_updates: false };
    for eps in &spec.epss {
        let record = |method, queries, iterations, bits, estimate: &Rational| BenchRecord {
            family: spec.family,
            method,
            n,
            eps: eps.clone(),
            seed,
            queries,
            iterations,
            max_query_bits: bits,
            final_gap: Some(Rational::from(estimate - &truth)),
        };
        if spec.classic {
            let s = frobenius_upper_bound(&a, 20);
            let (b, map) = normalize_matrix(&a, &s)?;
            let r = classic_newton(&charpoly_oracle(&b), &scaled_eps(eps, &s))?;
            let estimate = map.denormalize(&r.root_estimate);
            out.push(record(Method::Classic, r.queries, r.iterations, r.max_query_bits, &estimate));
        }
        for kc in &spec.ks {
            let k = kc.resolve(n).min(n as u32);
            let r = eig_with_k(&a, eps, k, &options)?;
            out.push(record(Method::Accel(k), r.0, r.1, r.2, &r.3));
        }
        if spec.power {
            let iterations = power_iterations_for(n, eps);
            let estimate = power_iteration(&a, iterations, seed)?;
            out.push(record(Method::Power, iterations, iterations, 0, &estimate));
        }
    }
    Ok(())
}

fn eig_with_k(
    a: &SymmetricMatrix,
    eps: &Rational,
    k: u32,
    options: &AccelOptions,
) -> Result<(u64, u64, u64, Rational)> {
    if k == choose_k(a.dim()) {
        let r = top_eigenvalue_with(a, eps, options)?;
        let t = &r.trace;
        return Ok((t.queries.count, t.iterations, t.queries.max_query_bits, r.lambda_max));
    }
    let s = frobenius_upper_bound(a, 20);
    let (b, map) = normalize_matrix(a, &s)?;
    let config = make_config(a.dim(), &scaled_eps(eps, &s), k)?;
    let (mu, t) = accel_root_with(&charpoly_oracle(&b), &config, options)?;
    Ok((t.queries.count, t.iterations, t.queries.max_query_bits, map.denormalize(&mu)))
}

/// Matrix-vector products given to the power-iteration comparator:
/// `n * ceil(log2(1/eps))`.
pub fn power_iterations_for(n: usize, eps: &Rational) -> u64 {
    let bits = Rational::from(eps.recip_ref()).ceil().numer().significant_bits();
    n as u64 * u64::from(bits.max(1))
}

/// Rayleigh quotient after `iterations` exact power-iteration steps from a
/// seeded random integer start vector.
pub fn power_iteration(a: &SymmetricMatrix, iterations: u64, seed: u64) -> Result<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..2 {
        let start: Vec<Rational> = (0..a.dim())
            .map(|_| Rational::from(rng.gen_range(-(1i32 << 16)..=1i32 << 16)))
            .collect();
        if start.iter().any(|v| *v != 0) {
            return power_iteration_from(a, &start, iterations);
        }
    }
    Err(invalid("power iteration drew a zero start vector twice"))
}

/// Rayleigh quotient after `iterations` steps of `X <- A X` from `start`.
///
/// The vector is kept as integers over a common denominator; each step
/// strips the shared power-of-two factor, which leaves the direction and the
/// quotient unchanged.
pub fn power_iteration_from(a: &SymmetricMatrix, start: &[Rational], iterations: u64) -> Result<Rational> {
    let n = a.dim();
    if start.len() != n {
        return Err(invalid(format!("start vector has length {}, expected {n}", start.len())));
    }
    if start.iter().all(|v| *v == 0) {
        return Err(invalid("start vector is zero"));
    }
    if a.rows().iter().flatten().all(|v| *v == 0) {
        return Err(invalid("power iteration needs a nonzero matrix"));
    }
    // A = M / d with M integer
    let d = a.rows().iter().flatten().fold(Integer::from(1), |acc, e| acc.lcm(e.denom()));
    let m: Vec<Vec<Integer>> = a
        .rows()
        .iter()
        .map(|r| r.iter().map(|e| Integer::from(e.numer() * Integer::from(d.div_exact_ref(e.denom())))).collect())
        .collect();
    let sd = start.iter().fold(Integer::from(1), |acc, e| acc.lcm(e.denom()));
    let mut v: Vec<Integer> =
        start.iter().map(|e| Integer::from(e.numer() * Integer::from(sd.div_exact_ref(e.denom())))).collect();
    let matvec = |v: &[Integer]| -> Vec<Integer> {
        m.iter()
            .map(|row| row.iter().zip(v).fold(Integer::new(), |acc, (a, b)| acc + (a * b).complete()))
            .collect()
    };
    for _ in 0..iterations {
        let next = matvec(&v);
        if next.iter().all(|x| *x == 0) {
            break;
        }
        let shift = next.iter().filter(|x| **x != 0).filter_map(|x| x.find_one(0)).min().unwrap_or(0);
        v = next.into_iter().map(|x| x >> shift).collect();
    }
    let mv = matvec(&v);
    let num = v.iter().zip(&mv).fold(Integer::new(), |acc, (a, b)| acc + (a * b).complete());
    let den = v.iter().fold(Integer::new(), |acc, a| acc + a.square_ref().complete());
    Ok(Rational::from((num, den * d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_rational;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn power_examples() {
        let a = SymmetricMatrix::diagonal(vec![q("2"), q("1")]);
        let r = power_iteration(&a, 50, 7).unwrap();
        assert!(Rational::from(&r - 2u32).abs() <= Rational::from((1, 1u32 << 20)));
        assert_eq!(power_iteration(&SymmetricMatrix::identity(3), 1, 1).unwrap(), 1);
        let swap = SymmetricMatrix::from_rows(vec![vec![q("0"), q("1")], vec![q("1"), q("0")]]).unwrap();
        assert_eq!(power_iteration_from(&swap, &[q("1"), q("1")], 10).unwrap(), 1);
        assert!(power_iteration_from(&swap, &[q("0"), q("0")], 10).is_err());
        assert!(power_iteration(&SymmetricMatrix::zeros(2), 3, 1).is_err());
        let half = SymmetricMatrix::diagonal(vec![q("1/2"), q("1/3")]);
        assert_eq!(power_iteration_from(&half, &[q("1"), q("0")], 4).unwrap(), q("1/2"));
    }

    #[test]
    fn generated_roots_stay_in_range() {
        let mut rng = instance_rng(3, 50);
        for r in random_roots(200, &mut rng) {
            assert!(r >= 0 && r <= q("1/2"));
            assert!(*r.denom() <= MAX_ROOT_DEN);
        }
        let roots = clustered_roots(30, &mut rng);
        let mut sorted = roots.clone();
        sorted.sort();
        sorted.reverse();
        assert_eq!(Rational::from(&sorted[0] - &sorted[1]), cluster_gap());
        assert!(sorted.iter().all(|r| *r >= 0 && *r <= q("1/2")));
    }

    #[test]
    fn parse_names() {
        assert_eq!("random-roots".parse::<Family>().unwrap(), Family::RandomRoots);
        assert_eq!("complete-graph".parse::<Family>().unwrap(), Family::CompleteGraph);
        assert!("nope".parse::<Family>().is_err());
        assert_eq!("auto".parse::<KChoice>().unwrap(), KChoice::Auto);
        assert_eq!("3".parse::<KChoice>().unwrap(), KChoice::Fixed(3));
        assert!("0".parse::<KChoice>().is_err());
    }

    #[test]
    fn small_sweep_is_deterministic_and_accurate() {
        let eps = q("1/1024");
        let mut spec = SweepSpec::new(Family::RandomRoots, vec![8, 16], vec![eps.clone()], vec![KChoice::Fixed(1), KChoice::Auto], 11);
        spec.instances = 2;
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2 * 2 * 3);
        for r in &a {
            let gap = r.final_gap.clone().unwrap();
            assert!(gap >= 0 && gap <= eps, "{}", r.csv_row());
        }
        let mut csv = Vec::new();
        write_csv(&a, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert!(text.contains("random-roots,accel,4,16,1/1024,11,"));
        let summary = summary_json(&a);
        assert_eq!(summary["groups"].as_array().unwrap().len(), 2 * 3);
    }

    #[test]
    fn graph_and_cluster_sweeps() {
        let eps = q("1/100");
        let mut spec = SweepSpec::new(Family::CompleteGraph, vec![4, 6], vec![eps.clone()], vec![KChoice::Auto], 1);
        spec.power = true;
        let recs = run_sweep(&spec).unwrap();
        assert_eq!(recs.len(), 2 * 3);
        for r in recs.iter().filter(|r| r.method != Method::Power) {
            let gap = r.final_gap.clone().unwrap();
            assert!(gap >= 0 && gap <= eps, "{}", r.csv_row());
        }
        let spec = SweepSpec::new(Family::ClusteredTopRoots, vec![12], vec![q("1/4096")], vec![KChoice::Auto], 5);
        for r in run_sweep(&spec).unwrap() {
            let gap = r.final_gap.clone().unwrap();
            assert!(gap >= 0 && gap <= q("1/4096"), "{}", r.csv_row());
        }
        assert!(run_sweep(&SweepSpec::new(Family::RandomRoots, vec![], vec![eps], vec![], 0)).is_err());
    }
}
