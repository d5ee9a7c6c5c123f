//! Closed forms checked against exhaustive enumeration, one row per value.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::enumerate::{
    brute_expectation, brute_u_moment, check_enumeration_size, measure_identity_check,
    position_table, PositionEvent, PrefixStatistic,
};
use crate::error::{Error, Result};
use crate::expect::{self, binomial_identity_check, to_f64};
use crate::stats::Statistic;

/// Parameters used for the moment and identity checks.
const MOMENT_BASES: [u64; 5] = [1, 2, 3, 4, 5];
const MEASURE_BASES: [u64; 4] = [1, 2, 3, 4];
const MEASURE_MAX_M: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Rows,
    Unrestricted,
    DiagOnes,
    Ss,
    Ww,
    PSouth,
    PSs,
    PWw,
    PG1,
    UMoment,
    MeasureLemma,
    BinomIdentity,
}

impl Check {
    pub const ALL: [Check; 12] = [
        Check::Rows,
        Check::Unrestricted,
        Check::DiagOnes,
        Check::Ss,
        Check::Ww,
        Check::PSouth,
        Check::PSs,
        Check::PWw,
        Check::PG1,
        Check::UMoment,
        Check::MeasureLemma,
        Check::BinomIdentity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Rows => "rows",
            Check::Unrestricted => "unrestricted",
            Check::DiagOnes => "diag_ones",
            Check::Ss => "ss",
            Check::Ww => "ww",
            Check::PSouth => "p_south",
            Check::PSs => "p_ss",
            Check::PWw => "p_ww",
            Check::PG1 => "p_g1",
            Check::UMoment => "u_moment",
            Check::MeasureLemma => "measure_lemma",
            Check::BinomIdentity => "binom_identity",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse {
                position: 0,
                message: format!("unknown check {s:?}"),
            })
    }
}

/// One comparison. `expected_match` is false for the variant formulas that
/// are listed only to show that they disagree with enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyRow {
    pub statistic: String,
    pub n: usize,
    pub k: Option<usize>,
    pub param: Option<String>,
    pub closed_form: BigRational,
    pub brute: BigRational,
    pub matches: bool,
    pub expected_match: bool,
}

impl VerifyRow {
    fn new(
        statistic: &str,
        n: usize,
        k: Option<usize>,
        param: Option<String>,
        closed_form: BigRational,
        brute: BigRational,
        expected_match: bool,
    ) -> Self {
        VerifyRow {
            statistic: statistic.to_string(),
            n,
            k,
            param,
            matches: closed_form == brute,
            closed_form,
            brute,
            expected_match,
        }
    }

    /// Whether the row came out as expected.
    pub fn ok(&self) -> bool {
        self.matches == self.expected_match
    }

    pub fn record(&self) -> VerifyRecord {
        VerifyRecord {
            statistic: self.statistic.clone(),
            n: self.n,
            k: self.k,
            param: self.param.clone(),
            closed_form: fraction(&self.closed_form),
            brute: fraction(&self.brute),
            closed_form_decimal: to_f64(&self.closed_form),
            brute_decimal: to_f64(&self.brute),
            matches: self.matches,
            expected_match: self.expected_match,
            ok: self.ok(),
        }
    }
}

/// Flat, serializable form of a [`VerifyRow`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRecord {
    pub statistic: String,
    pub n: usize,
    pub k: Option<usize>,
    pub param: Option<String>,
    pub closed_form: String,
    pub brute: String,
    pub closed_form_decimal: f64,
    pub brute_decimal: f64,
    pub matches: bool,
    pub expected_match: bool,
    pub ok: bool,
}

/// `num/den` in lowest terms; integers get denominator 1.
pub fn fraction(v: &BigRational) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Runs the selected checks for every `n` in `1..=n_max`, in the order given.
pub fn run(n_max: usize, which: &[Check]) -> Result<Vec<VerifyRow>> {
    check_enumeration_size(n_max)?;
    let mut rows = Vec::new();
    for &check in which {
        for n in 1..=n_max {
            run_one(check, n, &mut rows)?;
        }
    }
    Ok(rows)
}

fn run_one(check: Check, n: usize, out: &mut Vec<VerifyRow>) -> Result<()> {
    let aggregate = |stat: Statistic, closed: BigRational, out: &mut Vec<VerifyRow>| -> Result<()> {
        let brute = brute_expectation(n, stat)?.mean;
        out.push(VerifyRow::new(check.name(), n, None, None, closed, brute, true));
        Ok(())
    };
    let positional = |event: PositionEvent,
                      name: &str,
                      f: fn(usize, usize) -> Result<BigRational>,
                      expected_match: bool,
                      out: &mut Vec<VerifyRow>|
     -> Result<()> {
        let table = position_table(n)?;
        for k in event.min_k()..=n {
            let closed = f(n, k)?;
            let brute = table.probability(event, k)?;
            out.push(VerifyRow::new(name, n, Some(k), None, closed, brute, expected_match));
        }
        Ok(())
    };

    match check {
        Check::Rows => aggregate(Statistic::Rows, expect::expected_rows(n)?, out)?,
        Check::Unrestricted => {
            aggregate(Statistic::Unrestricted, expect::expected_unrestricted(n)?, out)?
        }
        Check::DiagOnes => aggregate(Statistic::DiagonalOnes, expect::expected_diag_ones(n), out)?,
        Check::Ss if n >= 2 => aggregate(Statistic::SsPairs, expect::expected_ss(n)?, out)?,
        Check::Ww if n >= 2 => aggregate(Statistic::WwPairs, expect::expected_ww(n)?, out)?,
        Check::Ss | Check::Ww => {}
        Check::PSouth => {
            positional(PositionEvent::South, "p_south", expect::p_south, true, out)?;
            positional(
                PositionEvent::South,
                "p_south_shifted",
                expect::p_south_shifted,
                false,
                out,
            )?;
        }
        Check::PSs => positional(PositionEvent::SouthPair, "p_ss", expect::p_ss, true, out)?,
        Check::PWw => positional(PositionEvent::WestPair, "p_ww", expect::p_ww, true, out)?,
        Check::PG1 => positional(PositionEvent::TopmostOneFirst, "p_g1", expect::p_g1, true, out)?,
        Check::UMoment => {
            for a in MOMENT_BASES {
                let brute = brute_u_moment(n, a)?;
                let param = Some(format!("a={a}"));
                out.push(VerifyRow::new(
                    "u_moment",
                    n,
                    None,
                    param.clone(),
                    expect::u_moment(n, &int(a))?,
                    brute.clone(),
                    true,
                ));
                out.push(VerifyRow::new(
                    "u_moment_gamma_form",
                    n,
                    None,
                    param,
                    expect::u_moment_gamma_form(n, a)?,
                    brute,
                    false,
                ));
            }
        }
        Check::MeasureLemma if n <= MEASURE_MAX_M => {
            for a in MEASURE_BASES {
                for x in PrefixStatistic::ALL {
                    let c = measure_identity_check(n, a, x)?;
                    out.push(VerifyRow::new(
                        "measure_lemma",
                        n,
                        None,
                        Some(format!("a={a},x={}", x.name())),
                        c.rhs,
                        c.lhs,
                        true,
                    ));
                }
            }
        }
        Check::MeasureLemma => {}
        Check::BinomIdentity => {
            let bases = [int(1), int(2), int(3), BigRational::new(1.into(), 2.into())];
            for a in &bases {
                let c = binomial_identity_check(n, a)?;
                out.push(VerifyRow::new(
                    "binom_identity",
                    n,
                    None,
                    Some(format!("a={a}")),
                    c.rhs,
                    c.lhs,
                    true,
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(num: i64, den: i64) -> BigRational {
        BigRational::new(num.into(), den.into())
    }

    #[test]
    fn rows_up_to_four_all_match() {
        let rows = run(4, &[Check::Rows]).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.matches && r.ok()));
    }

    #[test]
    fn ww_at_two() {
        let rows = run(2, &[Check::Ww]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].closed_form, q(3, 8));
        assert_eq!(rows[0].brute, q(3, 8));
    }

    #[test]
    fn zero_gives_empty_table() {
        assert!(run(0, &Check::ALL).unwrap().is_empty());
    }

    #[test]
    fn shifted_variant_mismatches_as_expected() {
        let rows = run(3, &[Check::PSouth]).unwrap();
        let (plain, shifted): (Vec<_>, Vec<_>) =
            rows.iter().partition(|r| r.statistic == "p_south");
        assert_eq!(plain.len(), 6);
        assert!(plain.iter().all(|r| r.matches));
        assert!(shifted.iter().all(|r| !r.matches && r.ok()));
    }

    #[test]
    fn everything_ok_at_four() {
        let rows = run(4, &Check::ALL).unwrap();
        assert!(rows.iter().all(VerifyRow::ok), "{:?}", rows.iter().find(|r| !r.ok()));
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(run(9, &[Check::Rows]), Err(Error::ResourceCap { .. })));
    }

    #[test]
    fn names_round_trip() {
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), c);
        }
        assert!("nope".parse::<Check>().is_err());
    }

    #[test]
    fn fraction_format() {
        assert_eq!(fraction(&q(3, 8)), "3/8");
        assert_eq!(fraction(&q(4, 2)), "2/1");
        assert_eq!(VerifyRow::new("x", 1, None, None, q(1, 2), q(1, 2), true).record().closed_form, "1/2");
    }
}
