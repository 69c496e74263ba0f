//! Nonnegative rationals extended with a single infinite element.
//!
//! Arithmetic follows the cost-function conventions: `inf + c = inf`,
//! `inf * c = inf` for `c > 0`, and `inf * 0 = 0`. Subtraction and division
//! are deliberately absent; signed arithmetic lives inside the LP solver.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

/// A nonnegative rational number or infinity, kept in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExtRat {
    Finite(BigRational),
    Infinity,
}

impl ExtRat {
    pub fn zero() -> Self {
        ExtRat::Finite(BigRational::zero())
    }

    pub fn one() -> Self {
        ExtRat::Finite(BigRational::one())
    }

    pub fn infinity() -> Self {
        ExtRat::Infinity
    }

    /// Builds a finite value `num/den`. Fails on a zero denominator.
    pub fn from_parts(num: u64, den: u64) -> Result<Self, Error> {
        if den == 0 {
            return Err(Error::ZeroDenominator(format!("{num}/{den}")));
        }
        Ok(ExtRat::Finite(BigRational::new(
            BigInt::from(num),
            BigInt::from(den),
        )))
    }

    pub fn from_int(n: u64) -> Self {
        ExtRat::Finite(BigRational::from_integer(BigInt::from(n)))
    }

    /// Wraps a signed rational, rejecting negative values.
    pub fn from_rational(r: BigRational) -> Result<Self, Error> {
        if r.is_negative() {
            return Err(Error::MalformedRational(r.to_string()));
        }
        Ok(ExtRat::Finite(r))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtRat::Finite(r) if r.is_zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRat::Finite(_))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtRat::Infinity)
    }

    pub fn is_positive(&self) -> bool {
        !self.is_zero()
    }

    /// The underlying rational, if finite.
    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            ExtRat::Finite(r) => Some(r),
            ExtRat::Infinity => None,
        }
    }
}

impl Add for ExtRat {
    type Output = ExtRat;
    fn add(self, rhs: ExtRat) -> ExtRat {
        match (self, rhs) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => ExtRat::Finite(a + b),
            _ => ExtRat::Infinity,
        }
    }
}

impl Add for &ExtRat {
    type Output = ExtRat;
    fn add(self, rhs: &ExtRat) -> ExtRat {
        match (self, rhs) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => ExtRat::Finite(a + b),
            _ => ExtRat::Infinity,
        }
    }
}

impl AddAssign for ExtRat {
    fn add_assign(&mut self, rhs: ExtRat) {
        let lhs = std::mem::replace(self, ExtRat::Infinity);
        *self = lhs + rhs;
    }
}

impl Mul for ExtRat {
    type Output = ExtRat;
    fn mul(self, rhs: ExtRat) -> ExtRat {
        (&self).mul(&rhs)
    }
}

impl Mul for &ExtRat {
    type Output = ExtRat;
    fn mul(self, rhs: &ExtRat) -> ExtRat {
        match (self, rhs) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => ExtRat::Finite(a * b),
            // inf * 0 = 0 * inf = 0
            (ExtRat::Infinity, b) if b.is_zero() => ExtRat::zero(),
            (a, ExtRat::Infinity) if a.is_zero() => ExtRat::zero(),
            _ => ExtRat::Infinity,
        }
    }
}

impl Sum for ExtRat {
    fn sum<I: Iterator<Item = ExtRat>>(iter: I) -> ExtRat {
        iter.fold(ExtRat::zero(), |acc, x| acc + x)
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => a.cmp(b),
            (ExtRat::Finite(_), ExtRat::Infinity) => Ordering::Less,
            (ExtRat::Infinity, ExtRat::Finite(_)) => Ordering::Greater,
            (ExtRat::Infinity, ExtRat::Infinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Infinity => write!(f, "inf"),
            ExtRat::Finite(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

impl FromStr for ExtRat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        if s == "inf" {
            return Ok(ExtRat::Infinity);
        }
        let parse_uint = |t: &str| -> Result<BigInt, Error> {
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::MalformedRational(s.to_string()));
            }
            t.parse::<BigInt>()
                .map_err(|_| Error::MalformedRational(s.to_string()))
        };
        match s.split_once('/') {
            None => Ok(ExtRat::Finite(BigRational::from_integer(parse_uint(s)?))),
            Some((p, q)) => {
                let num = parse_uint(p)?;
                let den = parse_uint(q)?;
                if den.is_zero() {
                    return Err(Error::ZeroDenominator(s.to_string()));
                }
                Ok(ExtRat::Finite(BigRational::new(num, den)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: u64, d: u64) -> ExtRat {
        ExtRat::from_parts(n, d).unwrap()
    }

    #[test]
    fn basic_arithmetic() {
        assert_eq!(q(1, 2) + q(1, 3), q(5, 6));
        assert_eq!(q(2, 3) * q(3, 4), q(1, 2));
        assert_eq!(ExtRat::Infinity + q(7, 1), ExtRat::Infinity);
        assert_eq!(ExtRat::Infinity + ExtRat::Infinity, ExtRat::Infinity);
        assert_eq!(ExtRat::Infinity * q(3, 2), ExtRat::Infinity);
        assert_eq!(ExtRat::Infinity * ExtRat::zero(), ExtRat::zero());
        assert_eq!(ExtRat::zero() * ExtRat::Infinity, ExtRat::zero());
    }

    #[test]
    fn lowest_terms_and_equality() {
        assert_eq!(q(2, 4), q(1, 2));
        assert_eq!(q(6, 3), ExtRat::from_int(2));
    }

    #[test]
    fn total_order() {
        assert!(q(1, 3) < q(1, 2));
        assert!(q(1000000, 1) < ExtRat::Infinity);
        assert!(ExtRat::Infinity <= ExtRat::Infinity);
        assert!(ExtRat::zero() < q(1, 1000000));
    }

    #[test]
    fn parse_and_format() {
        assert_eq!("1/2".parse::<ExtRat>().unwrap(), q(1, 2));
        assert_eq!("7".parse::<ExtRat>().unwrap(), ExtRat::from_int(7));
        assert_eq!("inf".parse::<ExtRat>().unwrap(), ExtRat::Infinity);
        assert_eq!(q(4, 6).to_string(), "2/3");
        assert_eq!(ExtRat::from_int(5).to_string(), "5");
        assert_eq!(ExtRat::Infinity.to_string(), "inf");
        assert!(matches!(
            "1/0".parse::<ExtRat>(),
            Err(Error::ZeroDenominator(_))
        ));
        assert!(matches!(
            "-1/2".parse::<ExtRat>(),
            Err(Error::MalformedRational(_))
        ));
        assert!(matches!(
            "a/2".parse::<ExtRat>(),
            Err(Error::MalformedRational(_))
        ));
        assert!(matches!("".parse::<ExtRat>(), Err(Error::MalformedRational(_))));
    }

    #[test]
    fn zero_denominator_rejected_in_constructor() {
        assert!(matches!(
            ExtRat::from_parts(1, 0),
            Err(Error::ZeroDenominator(_))
        ));
    }

    #[test]
    fn sum_folds_through_infinity() {
        let total: ExtRat = vec![q(1, 2), ExtRat::Infinity, q(1, 3)].into_iter().sum();
        assert_eq!(total, ExtRat::Infinity);
        let total: ExtRat = vec![q(1, 2), q(1, 3), q(1, 6)].into_iter().sum();
        assert_eq!(total, ExtRat::one());
    }
}
