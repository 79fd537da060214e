use hdnewton::accel::{
    accel_root, accel_root_with, g1_tilde, g_tilde, make_config, mom_exact, on_grid, sj_sum, update_reference, AccelOptions,
};
use hdnewton::detpoly::{bareiss_det, charpoly_oracle, SymmetricMatrix};
use hdnewton::eigen::{is_approx_psd, top_eigenvalue};
use hdnewton::newton::{classic_newton, contraction_check};
use hdnewton::normalize::{normalize_matrix, normalize_poly};
use hdnewton::oracle::{expand_roots, explicit_oracle, from_roots, with_counter, PolynomialOracle};
use hdnewton::scalar::{round_down_to_grid, Fraction};
use hdnewton::{Integer, Rational};
use proptest::prelude::*;

fn rat(num: i64, den: u64) -> Rational {
    Rational::from((num, den))
}

fn root_list(max_len: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((1u32..=4096).prop_flat_map(|q| (0..=q / 2, Just(q))), 1..=max_len)
        .prop_map(|v| v.into_iter().map(|(r, q)| Rational::from((r, q))).collect())
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-200i64..=200, 1u64..=30).prop_map(|(a, b)| rat(a, b))
}

fn lambda1(roots: &[Rational]) -> Rational {
    roots.iter().max().unwrap().clone()
}

/// Dense polynomial with rational coefficients, lowest degree first.
#[derive(Clone)]
struct Poly(Vec<Rational>);

impl Poly {
    fn linear(root: &Rational) -> Poly {
        Poly(vec![Rational::from(-root), Rational::from(1)])
    }
    fn one() -> Poly {
        Poly(vec![Rational::from(1)])
    }
    fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![Rational::new(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += Rational::from(a * b);
            }
        }
        Poly(out)
    }
    fn add(&self, o: &Poly) -> Poly {
        let len = self.0.len().max(o.0.len());
        Poly(
            (0..len)
                .map(|i| {
                    let a = self.0.get(i).cloned().unwrap_or_default();
                    a + o.0.get(i).cloned().unwrap_or_default()
                })
                .collect(),
        )
    }
    fn derivative(&self) -> Poly {
        if self.0.len() == 1 {
            return Poly(vec![Rational::new()]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(i, c)| Rational::from(c * i as u64)).collect())
    }
    fn eval(&self, x: &Rational) -> Rational {
        self.0.iter().rev().fold(Rational::new(), |acc, c| acc * x + c)
    }
    fn pow(&self, e: u32) -> Poly {
        (0..e).fold(Poly::one(), |acc, _| acc.mul(self))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_rounding_is_floor(x in small_rational(), g in (1i64..=50, 1u64..=50)) {
        let grid = rat(g.0, g.1);
        let r = round_down_to_grid(&x, &grid).unwrap();
        prop_assert!(r <= x);
        prop_assert!(Rational::from(&x - &r) < grid);
        let steps = Rational::from(&r / &grid);
        prop_assert_eq!(steps.denom(), &Integer::from(1));
    }

    #[test]
    fn fraction_arithmetic_matches_rational(a in small_rational(), b in small_rational(), s in 1u32..20) {
        let fa = Fraction::new(Integer::from(a.numer() * s), Integer::from(a.denom() * s));
        let fb = Fraction::from(&b);
        prop_assert_eq!((&fa + &fb).into_rational(), Rational::from(&a + &b));
        prop_assert_eq!((&fa - &fb).into_rational(), Rational::from(&a - &b));
        prop_assert_eq!((&fa * &fb).into_rational(), Rational::from(&a * &b));
        if b != 0 {
            prop_assert_eq!((&fa / &fb).into_rational(), Rational::from(&a / &b));
        }
        prop_assert_eq!(fa.cmp(&fb), a.cmp(&b));
    }

    #[test]
    fn explicit_and_product_forms_agree(roots in root_list(12), x in small_rational()) {
        let product = from_roots(roots.clone()).unwrap();
        let explicit = explicit_oracle(expand_roots(&roots)).unwrap();
        prop_assert_eq!(product.eval_rational(&x), explicit.eval_rational(&x));
    }

    #[test]
    fn normalized_roots_land_in_half_interval(roots in prop::collection::vec(small_rational(), 1..6)) {
        let bound = roots.iter().map(|r| Rational::from(r.abs_ref())).max().unwrap() + Rational::from(1);
        let (q, map) = normalize_poly(from_roots(roots.clone()).unwrap(), &bound).unwrap();
        for r in &roots {
            let mu = map.normalize(r);
            prop_assert!(mu >= 0 && mu <= rat(1, 2));
            prop_assert_eq!(q.eval_rational(&mu), 0);
            prop_assert_eq!(&map.denormalize(&mu), r);
        }
    }

    #[test]
    fn charpoly_of_diagonal_is_root_product(diag in prop::collection::vec(small_rational(), 1..6), x in small_rational()) {
        let p = charpoly_oracle(&SymmetricMatrix::diagonal(diag.clone()));
        let expect = from_roots(diag).unwrap().eval_rational(&x);
        prop_assert_eq!(p.eval_rational(&x), expect);
    }

    #[test]
    fn determinant_is_multiplicative(a in prop::collection::vec(small_rational(), 9), b in prop::collection::vec(small_rational(), 9)) {
        let rows = |v: &[Rational]| -> Vec<Vec<Rational>> { v.chunks(3).map(|c| c.to_vec()).collect() };
        let (ma, mb) = (rows(&a), rows(&b));
        let prod: Vec<Vec<Rational>> = (0..3)
            .map(|i| (0..3).map(|j| (0..3).map(|l| Rational::from(&ma[i][l] * &mb[l][j])).sum()).collect())
            .collect();
        let lhs = bareiss_det(&prod).unwrap();
        prop_assert_eq!(lhs, bareiss_det(&ma).unwrap() * bareiss_det(&mb).unwrap());
    }

    #[test]
    fn first_estimator_brackets_first_moment(roots in root_list(24), k in 1u32..=5, e in 1u32..=16, t in 0u32..=1000) {
        let n = roots.len();
        let k = k.min(n as u32);
        let eps = Rational::from((1, 1u64 << e));
        let c = make_config(n, &eps, k).unwrap();
        let lo = lambda1(&roots) + &c.eps_prime;
        let x = Rational::from(1 - &lo) * rat(t as i64, 1000) + &lo;
        let p = from_roots(roots.clone()).unwrap();
        let g1 = g1_tilde(&p, &x, &c.alpha).unwrap();
        let mom1 = mom_exact(&roots, &x, 1).unwrap();
        prop_assert!(g1 >= mom1);
        prop_assert!(g1 <= mom1 + &c.delta_prime);
    }

    #[test]
    fn higher_estimators_within_quarter(roots in root_list(16), k in 1u32..=5, e in 1u32..=16, t in 0u32..=1000) {
        let n = roots.len();
        let k = k.min(n as u32);
        let eps = Rational::from((1, 1u64 << e));
        let c = make_config(n, &eps, k).unwrap();
        let lo = lambda1(&roots) + &c.eps_prime;
        let x = Rational::from(1 - &lo) * rat(t as i64, 1000) + &lo;
        let p = from_roots(roots.clone()).unwrap();
        for order in k.saturating_sub(1)..=k {
            let est = g_tilde(&p, &x, order, &c.delta, &c.alpha).unwrap();
            let exact = mom_exact(&roots, &x, order).unwrap();
            prop_assert!(Rational::from(&est - &exact).abs() <= exact / 4u32);
        }
    }

    #[test]
    fn accel_invariants(roots in root_list(12), k in 1u32..=4, e in 4u32..=16) {
        let n = roots.len();
        let k = k.min(n as u32);
        let eps = Rational::from((1, 1u64 << e));
        let truth = lambda1(&roots);
        let p = from_roots(roots).unwrap();
        let (x, trace) = accel_root(&p, &eps, k).unwrap();
        let gap = Rational::from(&x - &truth);
        prop_assert!(gap >= 0 && gap <= eps);
        let grid = trace.config.grid();
        let eight_root = Rational::from(&trace.config.nroot_k * 8u32);
        for w in trace.steps.windows(2) {
            prop_assert!(w[1].x < w[0].x);
            // the gap at most halves per step and never drops below eps'
            let before = Rational::from(&w[0].x - &truth);
            let after = Rational::from(&w[1].x - &truth);
            prop_assert!(after >= Rational::from(&before / 2u32));
            prop_assert!(before >= trace.config.eps_prime);
        }
        for s in &trace.steps {
            prop_assert!(on_grid(&s.x, &grid));
            if let Some(u) = &s.update {
                let gap = Rational::from(&s.x - &truth);
                prop_assert!(*u <= Rational::from(&gap / 2u32));
                prop_assert!(*u >= Rational::from(&gap / &eight_root));
            }
        }
        prop_assert!(trace.queries.count <= 2 * u64::from(k) * trace.iterations);
        prop_assert!(trace.queries.count <= trace.config.query_budget());
    }

    #[test]
    fn recorded_updates_match_generic_estimators(roots in root_list(10), k in 1u32..=4) {
        let n = roots.len();
        let k = k.min(n as u32);
        let c = make_config(n, &rat(1, 1024), k).unwrap();
        let p = from_roots(roots).unwrap();
        let (_, trace) = accel_root_with(&p, &c, &AccelOptions::default()).unwrap();
        for s in trace.steps.iter().filter(|s| s.update.is_some()) {
            prop_assert_eq!(s.update.clone().unwrap(), update_reference(&p, &s.x, &c).unwrap());
        }
    }

    #[test]
    fn classic_newton_is_one_sided_and_contracts(roots in root_list(10), e in 4u32..=14) {
        let n = roots.len();
        let eps = Rational::from((1, 1u64 << e));
        let truth = lambda1(&roots);
        let p = from_roots(roots).unwrap();
        let r = classic_newton(&p, &eps).unwrap();
        let gap = Rational::from(&r.root_estimate - &truth);
        prop_assert!(gap >= 0 && gap <= eps);
        prop_assert!(r.iterates.iter().all(|x| *x >= truth));
        prop_assert!(contraction_check(&r.iterates, &truth, n));
        prop_assert!(r.queries <= 2 * r.iterations);
    }

    #[test]
    fn counter_counts_every_call(roots in root_list(6), xs in prop::collection::vec(small_rational(), 0..20)) {
        let (p, log) = with_counter(from_roots(roots).unwrap());
        for x in &xs {
            p.eval_rational(x);
        }
        prop_assert_eq!(log.count(), xs.len() as u64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eigen_shift_equivariance(diag in prop::collection::vec(small_rational(), 1..5), c in small_rational()) {
        let eps = rat(1, 50);
        let a = SymmetricMatrix::diagonal(diag.clone());
        let base = top_eigenvalue(&a, &eps).unwrap().lambda_max;
        let shifted = top_eigenvalue(&a.shifted(&c), &eps).unwrap().lambda_max;
        let truth = diag.iter().max().unwrap().clone();
        prop_assert!(base >= truth && base <= Rational::from(&truth + &eps));
        let diff = shifted - base - &c;
        prop_assert!(diff.abs() <= eps);
    }

    #[test]
    fn psd_matrices_pass(diag in prop::collection::vec((0i64..=100, 1u64..=9), 1..5), e in 1u64..=20) {
        let a = SymmetricMatrix::diagonal(diag.into_iter().map(|(a, b)| rat(a, b)).collect());
        prop_assert!(is_approx_psd(&a, &rat(1, e)).unwrap());
    }

    #[test]
    fn normalized_spectrum_in_half_interval(diag in prop::collection::vec(small_rational(), 1..6)) {
        let a = SymmetricMatrix::diagonal(diag.clone());
        let s = hdnewton::detpoly::frobenius_upper_bound(&a, 20);
        let (b, map) = normalize_matrix(&a, &s).unwrap();
        for (i, d) in diag.iter().enumerate() {
            let mu = b.get(i, i);
            prop_assert!(*mu >= 0 && *mu <= rat(1, 2));
            prop_assert_eq!(&map.denormalize(mu), d);
        }
    }
}

#[test]
fn alternating_power_sums() {
    for k in 0..=12u32 {
        for j in 0..k {
            assert_eq!(sj_sum(k, j), 0, "k={k} j={j}");
        }
        let sign = if k % 2 == 0 { 1 } else { -1 };
        assert_eq!(sj_sum(k, k), Integer::from(Integer::factorial(k)) * sign);
    }
}

#[test]
fn moment_derivative_identity() {
    // mom_m = N / D with D = prod (x - r)^m; differentiate the quotient exactly
    let root_sets = [
        vec![rat(1, 2)],
        vec![rat(1, 3), rat(-2, 5)],
        vec![rat(0, 1), rat(1, 7), rat(3, 11)],
        vec![rat(1, 2), rat(1, 2), rat(-1, 4), rat(2, 9)],
    ];
    for roots in &root_sets {
        for m in 1..=4u32 {
            let factors: Vec<Poly> = roots.iter().map(|r| Poly::linear(r).pow(m)).collect();
            let den = factors.iter().fold(Poly::one(), |acc, f| acc.mul(f));
            let num = (0..roots.len()).fold(Poly(vec![Rational::new()]), |acc, i| {
                let others = factors
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .fold(Poly::one(), |acc, (_, f)| acc.mul(f));
                acc.add(&others)
            });
            for x in [rat(1, 1), rat(3, 2), rat(7, 3)] {
                assert_eq!(num.eval(&x) / den.eval(&x), mom_exact(roots, &x, m).unwrap());
                let (n0, n1, d0, d1) = (num.eval(&x), num.derivative().eval(&x), den.eval(&x), den.derivative().eval(&x));
                let derivative = (n1 * &d0 - n0 * d1) / Rational::from(d0.square_ref());
                let expect = mom_exact(roots, &x, m + 1).unwrap() * -(m as i64);
                assert_eq!(derivative, expect, "roots={roots:?} m={m} x={x}");
            }
        }
    }
}

#[test]
fn explicit_and_product_oracles_cost_the_same_queries() {
    let roots = hdnewton::bench::random_roots(48, &mut hdnewton::bench::instance_rng(9, 48));
    let eps = rat(1, 1 << 12);
    let (a, ta) = accel_root(&from_roots(roots.clone()).unwrap(), &eps, 6).unwrap();
    let (b, tb) = accel_root(&explicit_oracle(expand_roots(&roots)).unwrap(), &eps, 6).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta.queries, tb.queries);
}
