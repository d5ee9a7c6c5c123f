//! Closed-form expectations and per-position probabilities under the uniform
//! measure on tableaux of size `n`, in exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::enumerate::IdentityCheck;
use crate::error::{check_cap, Error, Result};

fn int(v: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn frac(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn need(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min {
        return Err(Error::Domain(format!("{what} requires n >= {min}, got {n}")));
    }
    Ok(())
}

fn check_index(n: usize, k: usize, min_k: usize) -> Result<()> {
    if k < min_k || k > n {
        return Err(Error::IndexOutOfRange { k, n });
    }
    Ok(())
}

/// `(n+1)/4`.
pub fn expected_rows(n: usize) -> Result<BigRational> {
    need(n, 1, "expected_rows")?;
    Ok(int(n + 1) / int(4))
}

/// The harmonic number `H_n`.
pub fn expected_unrestricted(n: usize) -> Result<BigRational> {
    need(n, 1, "expected_unrestricted")?;
    Ok((1..=n).fold(BigRational::zero(), |acc, i| acc + frac(1, i as i64)))
}

/// `n/2`.
pub fn expected_diag_ones(n: usize) -> BigRational {
    int(n) / int(2)
}

/// `(2n-1)/24`, for `n >= 2`.
pub fn expected_ss(n: usize) -> Result<BigRational> {
    need(n, 2, "expected_ss")?;
    Ok(int(2 * n - 1) / int(24))
}

/// `(14n-25)/24 + 1/(2n)`, for `n >= 2`.
pub fn expected_ww(n: usize) -> Result<BigRational> {
    need(n, 2, "expected_ww")?;
    let n_i = n as i64;
    Ok(frac(14 * n_i - 25, 24) + frac(1, 2 * n_i))
}

/// Probability of a south step at position `k`: `(1/2)(1 - (k-1)/n)`.
pub fn p_south(n: usize, k: usize) -> Result<BigRational> {
    check_index(n, k, 1)?;
    Ok(frac(1, 2) * (BigRational::one() - int(k - 1) / int(n)))
}

/// The variant `(1/2)(1 - (k+1)/n)` that does not match enumeration; kept
/// so the verification report can show the mismatch.
pub fn p_south_shifted(n: usize, k: usize) -> Result<BigRational> {
    check_index(n, k, 1)?;
    Ok(frac(1, 2) * (BigRational::one() - int(k + 1) / int(n)))
}

/// Probability that steps `k-1` and `k` are both south.
pub fn p_ss(n: usize, k: usize) -> Result<BigRational> {
    check_index(n, k, 2)?;
    Ok(int((n - k + 1).pow(2)) / int(4 * n * (n - 1)))
}

/// Probability that steps `k-1` and `k` are both west.
pub fn p_ww(n: usize, k: usize) -> Result<BigRational> {
    check_index(n, k, 2)?;
    let n_i = n as i64;
    Ok(int(k) / int(n) - frac(3, 2 * n_i) + p_ss(n, k)?)
}

/// Probability that step `k` puts a 1 in its diagonal cell.
pub fn p_g1(n: usize, k: usize) -> Result<BigRational> {
    check_index(n, k, 1)?;
    Ok(frac(1, 2))
}

/// `E_m[a^{U_m}] = a(a+1)...(a+m-1) / m!`.
pub fn u_moment(m: usize, a: &BigRational) -> Result<BigRational> {
    need(m, 1, "u_moment")?;
    if !a.is_positive() {
        return Err(Error::Domain(format!("u_moment needs a > 0, got {a}")));
    }
    let mut acc = BigRational::one();
    for i in 0..m {
        acc = acc * (a + int(i)) / int(i + 1);
    }
    Ok(acc)
}

/// `Gamma(m+a-1) / (m! Gamma(a-1))` for integer `a >= 1`, i.e.
/// `(a-1)a...(a+m-2) / m!`; zero at the pole `a = 1`. This is one shift off
/// [`u_moment`] and is kept only to report that it disagrees with
/// enumeration.
pub fn u_moment_gamma_form(m: usize, a: u64) -> Result<BigRational> {
    need(m, 1, "u_moment_gamma_form")?;
    if a == 0 {
        return Err(Error::Domain("gamma form needs integer a >= 1".into()));
    }
    let mut acc = BigRational::one();
    for i in 0..m {
        acc = acc * (int(a as usize - 1) + int(i)) / int(i + 1);
    }
    Ok(acc)
}

/// Checks `E[1{G=1} a^{G + Bin(m-G)}] = (a/(a+1)) ((a+1)/2)^m` by summing
/// over all `2^m` outcomes of `m` fair coins, `G` being the position of the
/// first success.
pub fn binomial_identity_check(m: usize, a: &BigRational) -> Result<IdentityCheck> {
    need(m, 1, "binomial_identity_check")?;
    check_cap("coin count m", m, 20)?;
    if !a.is_positive() {
        return Err(Error::Domain(format!("needs a > 0, got {a}")));
    }
    // Coin 1 is the most significant bit; G = 1 iff it is set, and then the
    // exponent is 1 plus the successes among the other m - 1 coins.
    let half = 1u32 << (m - 1);
    let mut lhs = BigRational::zero();
    for outcome in half..(1u32 << m) {
        lhs += pow(a, outcome.count_ones());
    }
    lhs /= BigRational::from_integer(BigInt::from(1u64 << m));

    let one = BigRational::one();
    let a1 = a + &one;
    let rhs = a / &a1 * pow(&(a1 / int(2)), m as u32);
    Ok(IdentityCheck { lhs, rhs })
}

fn pow(base: &BigRational, exp: u32) -> BigRational {
    (0..exp).fold(BigRational::one(), |acc, _| acc * base)
}

/// Per-position vectors and aggregates for one size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaTable {
    pub n: usize,
    pub rows: BigRational,
    pub unrestricted: BigRational,
    pub diag_ones: BigRational,
    pub ss: Option<BigRational>,
    pub ww: Option<BigRational>,
    /// Indexed by `k - 1`.
    pub p_south: Vec<BigRational>,
    /// Indexed by `k - 2`; empty for `n < 2`.
    pub p_ss: Vec<BigRational>,
    pub p_ww: Vec<BigRational>,
    /// Indexed by `k - 1`.
    pub p_g1: Vec<BigRational>,
}

impl FormulaTable {
    pub fn new(n: usize) -> Result<Self> {
        need(n, 1, "FormulaTable")?;
        let pair = |f: fn(usize, usize) -> Result<BigRational>| -> Result<Vec<BigRational>> {
            (2..=n).map(|k| f(n, k)).collect()
        };
        Ok(FormulaTable {
            n,
            rows: expected_rows(n)?,
            unrestricted: expected_unrestricted(n)?,
            diag_ones: expected_diag_ones(n),
            ss: expected_ss(n).ok(),
            ww: expected_ww(n).ok(),
            p_south: (1..=n).map(|k| p_south(n, k)).collect::<Result<_>>()?,
            p_ss: pair(p_ss)?,
            p_ww: pair(p_ww)?,
            p_g1: (1..=n).map(|k| p_g1(n, k)).collect::<Result<_>>()?,
        })
    }

    /// Whether every per-position vector sums to its aggregate.
    pub fn sums_consistent(&self) -> bool {
        let sum = |v: &[BigRational]| v.iter().fold(BigRational::zero(), |a, b| a + b);
        let pairs_ok = match (&self.ss, &self.ww) {
            (Some(ss), Some(ww)) => &sum(&self.p_ss) == ss && &sum(&self.p_ww) == ww,
            (None, None) => self.p_ss.is_empty() && self.p_ww.is_empty(),
            _ => false,
        };
        sum(&self.p_south) == self.rows && sum(&self.p_g1) == self.diag_ones && pairs_ok
    }

    /// Flat records for CSV/JSON export.
    pub fn records(&self) -> Vec<FractionRecord> {
        let mut out = vec![
            FractionRecord::new(self.n, "rows", None, &self.rows),
            FractionRecord::new(self.n, "unrestricted", None, &self.unrestricted),
            FractionRecord::new(self.n, "diag_ones", None, &self.diag_ones),
        ];
        if let Some(ss) = &self.ss {
            out.push(FractionRecord::new(self.n, "ss", None, ss));
        }
        if let Some(ww) = &self.ww {
            out.push(FractionRecord::new(self.n, "ww", None, ww));
        }
        let vectors: [(&str, &[BigRational], usize); 4] = [
            ("p_south", &self.p_south, 1),
            ("p_ss", &self.p_ss, 2),
            ("p_ww", &self.p_ww, 2),
            ("p_g1", &self.p_g1, 1),
        ];
        for (name, values, first_k) in vectors {
            for (i, v) in values.iter().enumerate() {
                out.push(FractionRecord::new(self.n, name, Some(first_k + i), v));
            }
        }
        out
    }
}

/// An exact value with a decimal convenience column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionRecord {
    pub n: usize,
    pub statistic: String,
    pub k: Option<usize>,
    pub numerator: String,
    pub denominator: String,
    pub decimal: f64,
}

impl FractionRecord {
    pub fn new(n: usize, statistic: &str, k: Option<usize>, value: &BigRational) -> Self {
        FractionRecord {
            n,
            statistic: statistic.to_string(),
            k,
            numerator: value.numer().to_string(),
            denominator: value.denom().to_string(),
            decimal: to_f64(value),
        }
    }
}

pub fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(num: i64, den: i64) -> BigRational {
        frac(num, den)
    }

    #[test]
    fn aggregate_values() {
        assert_eq!(expected_rows(1).unwrap(), q(1, 2));
        assert_eq!(expected_rows(2).unwrap(), q(3, 4));
        assert_eq!(expected_rows(3).unwrap(), q(1, 1));
        assert_eq!(expected_unrestricted(1).unwrap(), q(1, 1));
        assert_eq!(expected_unrestricted(2).unwrap(), q(3, 2));
        assert_eq!(expected_unrestricted(4).unwrap(), q(25, 12));
        assert_eq!(expected_diag_ones(0), q(0, 1));
        assert_eq!(expected_diag_ones(2), q(1, 1));
        assert_eq!(expected_diag_ones(5), q(5, 2));
        assert_eq!(expected_ss(2).unwrap(), q(1, 8));
        assert_eq!(expected_ww(2).unwrap(), q(3, 8));
        assert_eq!(expected_ss(5).unwrap(), q(3, 8));
    }

    #[test]
    fn domains() {
        assert!(matches!(expected_rows(0), Err(Error::Domain(_))));
        assert!(matches!(expected_unrestricted(0), Err(Error::Domain(_))));
        assert!(matches!(expected_ss(1), Err(Error::Domain(_))));
        assert!(matches!(expected_ww(1), Err(Error::Domain(_))));
        assert!(matches!(p_south(3, 0), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(p_south(3, 4), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(p_ss(3, 1), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(p_ww(3, 1), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(u_moment(0, &q(2, 1)), Err(Error::Domain(_))));
        assert!(matches!(u_moment(2, &q(0, 1)), Err(Error::Domain(_))));
        assert!(matches!(
            binomial_identity_check(21, &q(1, 1)),
            Err(Error::ResourceCap { .. })
        ));
    }

    #[test]
    fn position_values() {
        assert_eq!(p_south(2, 1).unwrap(), q(1, 2));
        assert_eq!(p_south(2, 2).unwrap(), q(1, 4));
        for n in 1..20 {
            assert_eq!(p_south(n, 1).unwrap(), q(1, 2));
        }
        assert_eq!(p_ss(2, 2).unwrap(), q(1, 8));
        assert_eq!(p_ww(2, 2).unwrap(), q(3, 8));
        let sum = (2..=5).fold(q(0, 1), |acc, k| acc + p_ss(5, k).unwrap());
        assert_eq!(sum, q(3, 8));
    }

    #[test]
    fn u_moment_values() {
        for m in 1..10 {
            assert_eq!(u_moment(m, &q(1, 1)).unwrap(), q(1, 1));
        }
        assert_eq!(u_moment(1, &q(7, 3)).unwrap(), q(7, 3));
        assert_eq!(u_moment(2, &q(2, 1)).unwrap(), q(3, 1));
        // The shifted form disagrees already at m = 1.
        assert_eq!(u_moment_gamma_form(1, 2).unwrap(), q(1, 1));
        assert_eq!(u_moment_gamma_form(3, 1).unwrap(), q(0, 1));
    }

    #[test]
    fn binomial_identity_examples() {
        let c = binomial_identity_check(1, &q(5, 1)).unwrap();
        assert_eq!((c.lhs.clone(), c.rhs.clone()), (q(5, 2), q(5, 2)));
        let c = binomial_identity_check(3, &q(2, 1)).unwrap();
        assert_eq!((c.lhs.clone(), c.rhs.clone()), (q(9, 4), q(9, 4)));
        let c = binomial_identity_check(5, &q(1, 1)).unwrap();
        assert_eq!((c.lhs.clone(), c.rhs.clone()), (q(1, 2), q(1, 2)));
    }

    #[test]
    fn formula_table_sums_up_to_200() {
        for n in 1..=200 {
            assert!(FormulaTable::new(n).unwrap().sums_consistent(), "n = {n}");
        }
    }

    #[test]
    fn formula_records() {
        let table = FormulaTable::new(2).unwrap();
        let recs = table.records();
        let ww = recs.iter().find(|r| r.statistic == "ww").unwrap();
        assert_eq!((ww.numerator.as_str(), ww.denominator.as_str()), ("3", "8"));
        assert_eq!(ww.decimal, 0.375);
        assert_eq!(recs.iter().filter(|r| r.statistic == "p_south").count(), 2);
        assert!(FormulaTable::new(1).unwrap().ss.is_none());
    }
}
