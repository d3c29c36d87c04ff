//! Balance-sheet primitives: equity, per-edge exposure, the single-hit
//! cutoff and the active-node test.
//!
//! Everything here is exact. When `C - 1` is an integer the single-hit
//! boundary sits exactly at `L/d = E`, so a floating-point comparison would
//! decide defaults by rounding noise.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Exact rational number.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        Rational(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_integer(value: i64) -> Self {
        Rational(BigRational::from_integer(value.into()))
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    pub fn into_inner(self) -> BigRational {
        self.0
    }

    pub fn floor_to_u64(&self) -> Option<u64> {
        self.0.floor().to_integer().to_u64()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }
}

impl From<BigRational> for Rational {
    fn from(value: BigRational) -> Self {
        Rational(value)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// Accepts `p/q`, integers and decimals such as `2.5`, `-0.125` or `1e-3`,
/// all parsed exactly.
impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |reason| Error::RationalParse { input: s.to_string(), reason };
        let t = s.trim();
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| err("numerator is not an integer"))?;
            let q: BigInt = q.trim().parse().map_err(|_| err("denominator is not an integer"))?;
            if q.is_zero() {
                return Err(err("zero denominator"));
            }
            return Ok(Rational(BigRational::new(p, q)));
        }
        let (mantissa, exponent) = match t.find(['e', 'E']) {
            Some(i) => {
                let e: i32 = t[i + 1..].parse().map_err(|_| err("bad exponent"))?;
                (&t[..i], e)
            }
            None => (t, 0),
        };
        let (negative, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err("no digits"));
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(err("unexpected character"));
        }
        let all_digits = format!("{int_part}{frac_part}");
        let mut numer: BigInt = all_digits.parse().map_err(|_| err("no digits"))?;
        if negative {
            numer = -numer;
        }
        let scale = exponent - frac_part.len() as i32;
        let ten = BigInt::from(10);
        let value = if scale >= 0 {
            BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
        };
        Ok(Rational(value))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Int(i64),
            Float(f64),
        }
        let text = match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s,
            Repr::Int(i) => i.to_string(),
            // Shortest round-trip form, which is what was written in the file.
            Repr::Float(x) => format!("{x:?}"),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Equity `E = L / (C - 1)`.
pub fn equity(liabilities: &Rational, leverage: &Rational) -> Result<Rational> {
    check_inputs(liabilities, leverage)?;
    let one = BigRational::one();
    Ok(Rational(&liabilities.0 / (&leverage.0 - one)))
}

/// Single-hit cutoff `max{d >= 1 : L/d >= E} = floor(C - 1)`, or 0 when no
/// `d >= 1` qualifies (`C < 2`). Independent of `L`.
pub fn d_star(liabilities: &Rational, leverage: &Rational) -> Result<usize> {
    check_inputs(liabilities, leverage)?;
    let cutoff = (&leverage.0 - BigRational::one()).floor().to_integer();
    cutoff
        .to_usize()
        .ok_or_else(|| invalid(format!("C = {leverage} gives a cutoff that does not fit in usize")))
}

/// Exposure `L / d_out` carried by each out-edge of a sender with out-degree
/// `d_out`. Senders with no out-edges owe everything to the external sector
/// and carry no interbank exposure.
pub fn edge_exposure(liabilities: &Rational, d_out: usize) -> Result<Rational> {
    if d_out == 0 {
        return Err(invalid("a sender with out-degree 0 has no interbank exposures"));
    }
    Ok(Rational(&liabilities.0 / BigRational::from_integer(d_out.into())))
}

fn check_inputs(liabilities: &Rational, leverage: &Rational) -> Result<()> {
    if !liabilities.0.is_positive() {
        return Err(invalid(format!("liabilities must be positive, got L = {liabilities}")));
    }
    if leverage.0 <= BigRational::one() {
        return Err(invalid(format!("leverage must exceed 1, got C = {leverage}")));
    }
    Ok(())
}

/// Homogeneous balance sheet shared by every institution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceSheet {
    liabilities: Rational,
    leverage: Rational,
    equity: Rational,
    d_star: usize,
}

impl BalanceSheet {
    pub fn new(liabilities: Rational, leverage: Rational) -> Result<Self> {
        let equity = equity(&liabilities, &leverage)?;
        let d_star = d_star(&liabilities, &leverage)?;
        Ok(BalanceSheet { liabilities, leverage, equity, d_star })
    }

    /// Balance sheet with the default `L = 1`.
    pub fn with_leverage(leverage: Rational) -> Result<Self> {
        Self::new(Rational::from_integer(1), leverage)
    }

    pub fn liabilities(&self) -> &Rational {
        &self.liabilities
    }

    pub fn leverage(&self) -> &Rational {
        &self.leverage
    }

    pub fn equity(&self) -> &Rational {
        &self.equity
    }

    pub fn d_star(&self) -> usize {
        self.d_star
    }

    pub fn edge_exposure(&self, d_out: usize) -> Result<Rational> {
        edge_exposure(&self.liabilities, d_out)
    }

    pub fn is_active(&self, d_out: usize) -> bool {
        is_active(d_out, self)
    }

    /// Exposure of one out-edge as a plain `BigRational`, for accumulation.
    pub(crate) fn exposure_raw(&self, d_out: usize) -> BigRational {
        debug_assert!(d_out > 0);
        let d: BigInt = d_out.into();
        let l = self.liabilities.inner();
        let g = l.numer().gcd(&d);
        BigRational::new_raw(l.numer() / &g, l.denom() * (d / g))
    }
}

/// A node is active when `d_out <= d*`. Nodes without out-edges are
/// trivially active and contribute no single-hit edges.
pub fn is_active(d_out: usize, bs: &BalanceSheet) -> bool {
    d_out <= bs.d_star
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn equity_examples() {
        assert_eq!(equity(&r("1"), &r("3")).unwrap(), r("1/2"));
        assert_eq!(equity(&r("100"), &r("2")).unwrap(), r("100"));
        assert_eq!(equity(&r("1"), &r("3/2")).unwrap(), r("2"));
        assert!(equity(&r("1"), &r("1")).is_err());
        assert!(equity(&r("0"), &r("2")).is_err());
    }

    #[test]
    fn d_star_examples() {
        assert_eq!(d_star(&r("1"), &r("5/2")).unwrap(), 1);
        assert_eq!(d_star(&r("1"), &r("4")).unwrap(), 3);
        assert_eq!(d_star(&r("1"), &r("3/2")).unwrap(), 0);
        assert!(d_star(&r("1"), &r("1/2")).is_err());
    }

    #[test]
    fn d_star_matches_defining_maximum() {
        for (num, den) in [(5, 2), (4, 1), (3, 2), (7, 3), (21, 1), (201, 10)] {
            let c = Rational::new(num, den);
            let l = r("1");
            let e = equity(&l, &c).unwrap();
            let brute = (1..=40usize)
                .filter(|&d| edge_exposure(&l, d).unwrap() >= e)
                .max()
                .unwrap_or(0);
            assert_eq!(d_star(&l, &c).unwrap(), brute, "C = {c}");
        }
    }

    #[test]
    fn edge_exposure_examples() {
        assert_eq!(edge_exposure(&r("1"), 4).unwrap(), r("1/4"));
        assert_eq!(edge_exposure(&r("1"), 1).unwrap(), r("1"));
        assert_eq!(edge_exposure(&r("3"), 2).unwrap(), r("3/2"));
        assert!(edge_exposure(&r("1"), 0).is_err());
    }

    #[test]
    fn is_active_examples() {
        let c4 = BalanceSheet::with_leverage(r("4")).unwrap();
        let c52 = BalanceSheet::with_leverage(r("5/2")).unwrap();
        assert!(is_active(0, &c52));
        assert!(is_active(3, &c4));
        assert!(!is_active(2, &c52));
    }

    #[test]
    fn exposure_raw_matches_public_exposure() {
        let bs = BalanceSheet::new(r("6/5"), r("7/3")).unwrap();
        for d in 1..30 {
            assert_eq!(Rational(bs.exposure_raw(d)), bs.edge_exposure(d).unwrap());
        }
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(r("2.5"), r("5/2"));
        assert_eq!(r("-0.125"), r("-1/8"));
        assert_eq!(r("1e-3"), r("1/1000"));
        assert_eq!(r("1.5E2"), r("150"));
        assert_eq!(r(".5"), r("1/2"));
        assert_eq!(r("4"), Rational::from_integer(4));
        assert_eq!(r(" 10/4 "), r("5/2"));
        for bad in ["", "1/0", "abc", "1.2.3", "e5", "1/x"] {
            assert!(bad.parse::<Rational>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["5/2", "4", "-7/3", "0"] {
            assert_eq!(r(s).to_string(), s);
        }
    }

    #[test]
    fn deserializes_strings_and_numbers() {
        let v: Vec<Rational> = serde_json::from_str(r#"["5/2", 4, 2.5, 0.1]"#).unwrap();
        assert_eq!(v, vec![r("5/2"), r("4"), r("5/2"), r("1/10")]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cutoff_threshold_equivalence(num in 11i64..=200, den in 1i64..=10, d in 1usize..=64, l_num in 1i64..50, l_den in 1i64..50) {
                let c = Rational::new(num, den);
                prop_assume!(c > Rational::from_integer(1) && c <= Rational::from_integer(20));
                let l = Rational::new(l_num, l_den);
                let e = equity(&l, &c).unwrap();
                let ds = d_star(&l, &c).unwrap();
                prop_assert_eq!(edge_exposure(&l, d).unwrap() >= e, d <= ds);
            }

            #[test]
            fn cutoff_is_scale_free_and_monotone(num in 11i64..=200, den in 1i64..=10, bump in 0i64..20, l_num in 1i64..1000) {
                let c = Rational::new(num, den);
                prop_assume!(c > Rational::from_integer(1));
                let base = d_star(&Rational::from_integer(1), &c).unwrap();
                prop_assert_eq!(d_star(&Rational::new(l_num, 7), &c).unwrap(), base);
                let bigger = Rational::new(num + bump, den);
                prop_assert!(d_star(&Rational::from_integer(1), &bigger).unwrap() >= base);
            }
        }
    }
}
