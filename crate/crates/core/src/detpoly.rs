//! Exact determinants and the characteristic-polynomial oracle.

use std::fmt;
use std::fs;
use std::path::Path;

use rug::ops::Pow;
use rug::{Complete, Integer, Rational};

use crate::error::{invalid, Error, Result};
use crate::oracle::PolynomialOracle;
use crate::scalar::{parse_rational, sqrt_upper_bound, Fraction};

/// Dense symmetric matrix with rational entries, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    entries: Vec<Rational>,
}

impl SymmetricMatrix {
    /// Checks shape and exact symmetry.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(invalid("matrix must have at least one row"));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(invalid(format!("row {bad} has {} entries, expected {n}", rows[bad].len())));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(SymmetricMatrix { n, entries: rows.into_iter().flatten().collect() })
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0);
        SymmetricMatrix { n, entries: vec![Rational::new(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(vec![Rational::from(1); n])
    }

    pub fn diagonal(diag: Vec<Rational>) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.into_iter().enumerate() {
            m.entries[i * m.n + i] = d;
        }
        m
    }

    /// Adjacency matrix of the complete graph on `n` vertices.
    pub fn complete_graph(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.entries[i * n + j] = Rational::from(1);
                }
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn map(&self, f: impl Fn(&Rational) -> Rational) -> Self {
        SymmetricMatrix { n: self.n, entries: self.entries.iter().map(f).collect() }
    }

    pub fn neg(&self) -> Self {
        self.map(|a| Rational::from(-a))
    }

    /// `A + c I`.
    pub fn shifted(&self, c: &Rational) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m.entries[i * self.n + i] += c;
        }
        m
    }

    /// Sum of squared entries, `||A||_F^2`.
    pub fn frobenius_squared(&self) -> Rational {
        self.entries.iter().map(|a| Rational::from(a.square_ref())).sum()
    }

    /// Parses the text format: first line `n`, then `n` lines of `n`
    /// whitespace-separated rationals. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (first, header) =
            lines.next().ok_or(Error::Parse { line: 0, message: "empty matrix file".into() })?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::Parse { line: first, message: format!("bad dimension {header:?}") })?;
        if n == 0 {
            return Err(Error::Parse { line: first, message: "dimension must be positive".into() });
        }
        let mut rows = Vec::with_capacity(n);
        for (line, text) in lines {
            let row = text
                .split_whitespace()
                .map(parse_rational)
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Parse { line, message: e.to_string() })?;
            if row.len() != n {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {n} entries, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::Parse {
                line: 0,
                message: format!("expected {n} rows, found {}", rows.len()),
            });
        }
        Self::from_rows(rows)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

impl fmt::Display for SymmetricMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n)?;
        for row in self.entries.chunks(self.n) {
            let cells: Vec<String> = row.iter().map(|a| a.to_string()).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Determinant of an integer matrix by single-step fraction-free elimination.
///
/// Every division in the inner update is exact. Zero pivots are handled by a
/// row swap with a sign flip.
pub fn bareiss_det_integer(mut m: Vec<Vec<Integer>>) -> Integer {
    let n = m.len();
    if n == 0 {
        return Integer::from(1);
    }
    let mut negate = false;
    let mut prev = Integer::from(1);
    for k in 0..n {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    negate = !negate;
                }
                None => return Integer::new(),
            }
        }
        let (top, rest) = m.split_at_mut(k + 1);
        let pivot_row = &top[k];
        let pivot = &pivot_row[k];
        for row in rest.iter_mut() {
            let lead = row[k].clone();
            for j in (k + 1)..n {
                let mut v = (&row[j] * pivot).complete();
                if lead != 0 {
                    v -= (&lead * &pivot_row[j]).complete();
                }
                v.div_exact_mut(&prev);
                row[j] = v;
            }
            row[k] = Integer::new();
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if negate {
        -det
    } else {
        det
    }
}

/// Exact determinant of a square rational matrix.
///
/// Each column is scaled by the lcm of its denominators, the integer
/// determinant is taken by [`bareiss_det_integer`], and the scale divided out.
pub fn bareiss_det(rows: &[Vec<Rational>]) -> Result<Rational> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(invalid("determinant needs a square matrix"));
    }
    let col_scale: Vec<Integer> = (0..n)
        .map(|j| rows.iter().fold(Integer::from(1), |acc, r| acc.lcm(r[j].denom())))
        .collect();
    let ints = rows
        .iter()
        .map(|r| {
            r.iter()
                .zip(&col_scale)
                .map(|(a, s)| Integer::from(a.numer() * Integer::from(s.div_exact_ref(a.denom()))))
                .collect()
        })
        .collect();
    let det = bareiss_det_integer(ints);
    let scale = col_scale.into_iter().fold(Integer::from(1), |acc, s| acc * s);
    Ok(Rational::from((det, scale)))
}

/// Oracle for `det(xI - A)`.
#[derive(Clone, Debug)]
pub struct CharPolyOracle {
    n: usize,
    // A * den, integer entries
    scaled: Vec<Vec<Integer>>,
    den: Integer,
}

pub fn charpoly_oracle(a: &SymmetricMatrix) -> CharPolyOracle {
    let n = a.dim();
    let den = a.entries.iter().fold(Integer::from(1), |acc, e| acc.lcm(e.denom()));
    let scaled = a
        .rows()
        .iter()
        .map(|r| {
            r.iter()
                .map(|e| Integer::from(e.numer() * Integer::from(den.div_exact_ref(e.denom()))))
                .collect()
        })
        .collect();
    CharPolyOracle { n, scaled, den }
}

impl PolynomialOracle for CharPolyOracle {
    fn degree(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &Fraction) -> Fraction {
        // (y/l) I - S/q = (y q I - l S) / (l q)
        let (y, l) = (x.numer(), x.denom());
        let diag = (y * &self.den).complete();
        let m = self
            .scaled
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, s)| {
                        let off = -(l * s).complete();
                        if i == j {
                            off + &diag
                        } else {
                            off
                        }
                    })
                    .collect()
            })
            .collect();
        let det = bareiss_det_integer(m);
        let den = Integer::from((l * &self.den).complete().pow(self.n as u32));
        Fraction::new(det, den)
    }
}

/// Rational `s` with `||A||_F <= s <= ||A||_F (1 + 2^-slack)`; `1` for the
/// zero matrix.
pub fn frobenius_upper_bound(a: &SymmetricMatrix, slack: u32) -> Rational {
    let sq = a.frobenius_squared();
    if sq == 0 {
        return Rational::from(1);
    }
    sqrt_upper_bound(&sq, slack).expect("sum of squares is nonnegative")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn mat(rows: &[&[&str]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|s| q(s)).collect()).collect()
    }

    fn sym(rows: &[&[&str]]) -> SymmetricMatrix {
        SymmetricMatrix::from_rows(mat(rows)).unwrap()
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(bareiss_det(&SymmetricMatrix::identity(3).rows()).unwrap(), 1);
        assert_eq!(bareiss_det(&mat(&[&["2", "1"], &["1", "2"]])).unwrap(), 3);
        assert_eq!(bareiss_det(&mat(&[&["1", "1"], &["1", "1"]])).unwrap(), 0);
        // needs a row swap
        assert_eq!(bareiss_det(&mat(&[&["0", "1"], &["1", "0"]])).unwrap(), -1);
        assert_eq!(
            bareiss_det(&mat(&[&["1/2", "1/3"], &["1/5", "1/7"]])).unwrap(),
            q("1/14") - q("1/15")
        );
        assert_eq!(bareiss_det(&mat(&[&["0", "0"], &["0", "1"]])).unwrap(), 0);
        assert!(bareiss_det(&mat(&[&["1", "2"]])).is_err());
    }

    #[test]
    fn charpoly_examples() {
        let a = SymmetricMatrix::diagonal(vec![q("1"), q("2")]);
        assert_eq!(charpoly_oracle(&a).eval_rational(&q("3")), 2);
        let z = SymmetricMatrix::zeros(2);
        assert_eq!(charpoly_oracle(&z).eval_rational(&q("5")), 25);
        let swap = sym(&[&["0", "1"], &["1", "0"]]);
        assert_eq!(charpoly_oracle(&swap).eval_rational(&q("0")), -1);
        let b = sym(&[&["1/2", "1/3"], &["1/3", "1/4"]]);
        // x^2 - (3/4) x + (1/8 - 1/9)
        let x = q("5/7");
        let expect = Rational::from(x.square_ref()) - q("3/4") * &x + q("1/8") - q("1/9");
        assert_eq!(charpoly_oracle(&b).eval_rational(&x), expect);
    }

    #[test]
    fn frobenius_examples() {
        let tol = Rational::from(1) + Rational::from((1, 1u64 << 20));
        let s = frobenius_upper_bound(&SymmetricMatrix::diagonal(vec![q("1"), q("-1")]), 20);
        assert!(Rational::from(s.square_ref()) >= 2);
        assert!(Rational::from(Rational::from(&s / &tol).square_ref()) <= 2);
        assert_eq!(frobenius_upper_bound(&SymmetricMatrix::zeros(3), 20), 1);
        let s = frobenius_upper_bound(&sym(&[&["3", "4"], &["4", "3"]]), 20);
        assert!(Rational::from(s.square_ref()) >= 50);
        assert!(Rational::from(Rational::from(&s / &tol).square_ref()) <= 50);
    }

    #[test]
    fn symmetry_and_parsing() {
        assert!(matches!(
            SymmetricMatrix::from_rows(mat(&[&["1", "2"], &["3", "1"]])),
            Err(Error::NotSymmetric { row: 0, col: 1 })
        ));
        assert!(SymmetricMatrix::from_rows(vec![]).is_err());
        let m = SymmetricMatrix::parse("2\n1 1/2\n1/2 -3\n").unwrap();
        assert_eq!(m.get(1, 0), &q("1/2"));
        assert_eq!(SymmetricMatrix::parse(&m.to_string()).unwrap(), m);
        assert!(SymmetricMatrix::parse("2\n1 2\n3 4\n").is_err());
        assert!(matches!(SymmetricMatrix::parse("2\n1 2\n"), Err(Error::Parse { .. })));
        assert!(matches!(SymmetricMatrix::parse("2\n1 2 3\n2 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(SymmetricMatrix::parse("x\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn complete_graph_charpoly_factors() {
        // det(xI - K4) = (x - 3)(x + 1)^3
        let p = charpoly_oracle(&SymmetricMatrix::complete_graph(4));
        for x in ["0", "2", "7/3", "-5"] {
            let x = q(x);
            let expect = Rational::from(&x - 3u32) * Rational::from(&x + 1u32).pow(3);
            assert_eq!(p.eval_rational(&x), expect);
        }
    }
}
