//! Largest eigenvalue of a symmetric rational matrix and the approximate PSD test.

use rug::Rational;

use crate::accel::{accel_root_with, choose_k, make_config, AccelOptions, IterationTrace};
use crate::detpoly::{charpoly_oracle, frobenius_upper_bound, SymmetricMatrix};
use crate::error::{invalid, Result};
use crate::normalize::normalize_matrix;

/// Bits of relative slack in the Frobenius norm bound.
const NORM_SLACK: u32 = 20;

#[derive(Clone, Debug)]
pub struct EigResult {
    pub lambda_max: Rational,
    /// Determinant evaluations.
    pub queries: u64,
    /// Error target handed to the root finder after normalization.
    pub eps_scaled: Rational,
    pub trace: IterationTrace,
}

/// `min(1/2, eps / (4s))`.
pub fn scaled_eps(eps: &Rational, s: &Rational) -> Rational {
    let scaled = Rational::from(eps / Rational::from(s * 4u32));
    scaled.min(Rational::from((1, 2)))
}

/// Returns `l` with `lambda_1(A) <= l <= lambda_1(A) + eps`.
pub fn top_eigenvalue(a: &SymmetricMatrix, eps: &Rational) -> Result<EigResult> {
    top_eigenvalue_with(a, eps, &AccelOptions::default())
}

pub fn top_eigenvalue_with(
    a: &SymmetricMatrix,
    eps: &Rational,
    options: &AccelOptions,
) -> Result<EigResult> {
    if a.dim() == 0 {
        return Err(invalid("matrix must be nonempty"));
    }
    if *eps <= 0 {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    let s = frobenius_upper_bound(a, NORM_SLACK);
    let (b, map) = normalize_matrix(a, &s)?;
    let oracle = charpoly_oracle(&b);
    let eps_scaled = scaled_eps(eps, &s);
    let config = make_config(a.dim(), &eps_scaled, choose_k(a.dim()))?;
    let (mu, trace) = accel_root_with(&oracle, &config, options)?;
    Ok(EigResult {
        lambda_max: map.denormalize(&mu),
        queries: trace.queries.count,
        eps_scaled,
        trace,
    })
}

/// Decides `A >= -eps I` up to a factor two gap: `true` guarantees every
/// eigenvalue is at least `-eps`, `false` guarantees one is below `-eps/2`.
pub fn is_approx_psd(a: &SymmetricMatrix, eps: &Rational) -> Result<bool> {
    Ok(approx_psd(a, eps)?.0)
}

/// [`is_approx_psd`] together with the underlying run on `-A`.
pub fn approx_psd(a: &SymmetricMatrix, eps: &Rational) -> Result<(bool, EigResult)> {
    if *eps <= 0 {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    let half = Rational::from(eps / 2u32);
    let run = top_eigenvalue(&a.neg(), &half)?;
    Ok((run.lambda_max <= *eps, run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_rational;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn within(x: &Rational, lo: &Rational, eps: &Rational) -> bool {
        x >= lo && *x <= Rational::from(lo + eps)
    }

    #[test]
    fn diagonal() {
        let a = SymmetricMatrix::diagonal(vec![q("3"), q("1"), q("-2")]);
        let eps = q("1/100");
        let r = top_eigenvalue(&a, &eps).unwrap();
        assert!(within(&r.lambda_max, &q("3"), &eps), "{}", r.lambda_max);
    }

    #[test]
    fn complete_graph_k4() {
        let eps = q("1/100");
        let r = top_eigenvalue(&SymmetricMatrix::complete_graph(4), &eps).unwrap();
        assert!(within(&r.lambda_max, &q("3"), &eps), "{}", r.lambda_max);
    }

    #[test]
    fn zero_matrix() {
        let eps = q("1/8");
        let r = top_eigenvalue(&SymmetricMatrix::zeros(3), &eps).unwrap();
        assert!(within(&r.lambda_max, &q("0"), &eps));
    }

    #[test]
    fn large_eps_is_clamped() {
        let a = SymmetricMatrix::diagonal(vec![q("1/3"), q("-1/5")]);
        let r = top_eigenvalue(&a, &q("100")).unwrap();
        assert_eq!(r.eps_scaled, q("1/2"));
        assert!(within(&r.lambda_max, &q("1/3"), &q("100")));
    }

    #[test]
    fn psd_examples() {
        let eps = q("1/10");
        assert!(is_approx_psd(&SymmetricMatrix::identity(3), &eps).unwrap());
        let neg = SymmetricMatrix::identity(2).neg();
        assert!(!is_approx_psd(&neg, &eps).unwrap());
        let slight = SymmetricMatrix::identity(2).map(|_| Rational::new()).shifted(&q("-1/40"));
        assert!(is_approx_psd(&slight, &eps).unwrap());
        assert!(is_approx_psd(&SymmetricMatrix::identity(2), &q("0")).is_err());
    }
}
