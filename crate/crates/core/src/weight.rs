//! Numeric backends for the exact DP: `f64` for production runs and
//! `BigRational` for oracle comparisons.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

pub trait Weight: Num + Clone + PartialOrd + Debug + Send + Sync + 'static {
    fn to_f64(&self) -> f64;

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }
}

impl Weight for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Weight for BigRational {
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Parses `"p/q"`, an integer, or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    if let Ok(int) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(int));
    }
    // decimal literal: exact base-10 value, not the nearest double
    let (int_part, frac_part) = s.split_once('.')?;
    let negative = int_part.starts_with('-');
    let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = BigRational::new(num, den);
    Some(if negative { -value } else { value })
}

pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite probability")
}
