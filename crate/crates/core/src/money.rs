//! Fixed-point money with a resolution of one hundredth of a unit.
//!
//! Every cost term is rounded to cents when it is produced, so sums are
//! associative and two routes to the same total agree exactly.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_cents(cents: i64) -> Self {
        Money(cents)
    }

    pub const fn cents(self) -> i64 {
        self.0
    }

    /// Rounds half away from zero.
    pub fn from_f64(value: f64) -> Self {
        Money((value * 100.0).round() as i64)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn abs(self) -> Self {
        Money(self.0.abs())
    }

    /// Arithmetic mean rounded to cents (half away from zero). `None` for an
    /// empty slice.
    pub fn mean(values: &[Money]) -> Option<Money> {
        if values.is_empty() {
            return None;
        }
        let sum: i128 = values.iter().map(|m| m.0 as i128).sum();
        let n = values.len() as i128;
        let q = sum / n;
        let r = sum % n;
        let rounded = if 2 * r.abs() >= n { q + sum.signum() } else { q };
        Some(Money(rounded as i64))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid money literal `{0}`")]
pub struct ParseMoneyError(String);

impl FromStr for Money {
    type Err = ParseMoneyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cleaned: String = s.trim().chars().filter(|c| *c != ',').collect();
        let value: f64 = cleaned
            .parse()
            .map_err(|_| ParseMoneyError(s.to_string()))?;
        if !value.is_finite() {
            return Err(ParseMoneyError(s.to_string()));
        }
        Ok(Money::from_f64(value))
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl Mul<i64> for Money {
    type Output = Money;
    fn mul(self, rhs: i64) -> Money {
        Money(self.0 * rhs)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse() {
        assert_eq!(Money::from_cents(4034001).to_string(), "40340.01");
        assert_eq!(Money::from_cents(-26).to_string(), "-0.26");
        assert_eq!(Money::from_cents(5).to_string(), "0.05");
        assert_eq!("40,446.00".parse::<Money>().unwrap(), Money::from_cents(4044600));
        assert_eq!("-0.26".parse::<Money>().unwrap(), Money::from_cents(-26));
        assert!("abc".parse::<Money>().is_err());
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(Money::from_f64(0.125), Money::from_cents(13));
        assert_eq!(Money::from_f64(-0.125), Money::from_cents(-13));
    }

    #[test]
    fn mean_rounds_to_cents() {
        let v = [Money::from_cents(1), Money::from_cents(2)];
        assert_eq!(Money::mean(&v), Some(Money::from_cents(2)));
        let v = [Money::from_cents(1), Money::from_cents(1), Money::from_cents(2)];
        assert_eq!(Money::mean(&v), Some(Money::from_cents(1)));
        assert_eq!(Money::mean(&[]), None);
    }
}
