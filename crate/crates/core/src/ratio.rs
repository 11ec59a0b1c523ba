//! Exact non-negative rationals for consensus-relevant factors.
//!
//! Growth and decay factors, slash splits and similar parameters are stored as
//! reduced `num/den` pairs so that thresholds and durations are computed
//! without floating-point drift. Decimal literals such as `0.7` map to `7/10`
//! exactly, including when they arrive as an `f64` from a config file.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RatioError {
    #[error("denominator must be non-zero")]
    ZeroDenominator,
    #[error("`{0}` is not a non-negative decimal or `num/den` fraction")]
    Malformed(String),
    #[error("`{0}` needs more precision than a 64-bit fraction provides")]
    TooPrecise(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self, RatioError> {
        if den == 0 {
            return Err(RatioError::ZeroDenominator);
        }
        let g = gcd(num, den).max(1);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub const fn integer(n: u64) -> Self {
        Self { num: n, den: 1 }
    }

    /// Converts through the shortest decimal representation of `x`, so `0.7`
    /// becomes exactly `7/10` rather than the nearest binary fraction.
    pub fn from_f64(x: f64) -> Result<Self, RatioError> {
        if !x.is_finite() || x < 0.0 {
            return Err(RatioError::Malformed(x.to_string()));
        }
        format!("{x}").parse()
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    /// `floor(amount * self)`, exact.
    pub fn floor_mul(&self, amount: u64) -> u128 {
        (amount as u128 * self.num as u128) / self.den as u128
    }

    /// `1 - self` for ratios in `[0, 1]`.
    pub fn complement(&self) -> Option<Ratio> {
        (self.num <= self.den).then(|| Ratio {
            num: self.den - self.num,
            den: self.den,
        })
        .map(|r| Ratio::new(r.num, r.den).expect("den non-zero"))
    }

    pub fn is_unit_interval(&self) -> bool {
        self.num <= self.den
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl FromStr for Ratio {
    type Err = RatioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let malformed = || RatioError::Malformed(s.to_string());
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse::<u64>().map_err(|_| malformed())?;
            let d = d.trim().parse::<u64>().map_err(|_| malformed())?;
            return Ratio::new(n, d);
        }
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(malformed());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(malformed());
        }
        let frac_part = frac_part.trim_end_matches('0');
        let too_precise = || RatioError::TooPrecise(s.to_string());
        let den = 10u64
            .checked_pow(frac_part.len() as u32)
            .ok_or_else(too_precise)?;
        let int_val: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| too_precise())?
        };
        let frac_val: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| too_precise())?
        };
        let num = int_val
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(too_precise)?;
        Ratio::new(num, den)
    }
}

impl fmt::Debug for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}", self.to_f64())
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.den == 1 {
            serializer.serialize_u64(self.num)
        } else {
            serializer.serialize_f64(self.to_f64())
        }
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RatioVisitor;

        impl Visitor<'_> for RatioVisitor {
            type Value = Ratio;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative number or a \"num/den\" string")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Ratio, E> {
                Ok(Ratio::integer(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Ratio, E> {
                u64::try_from(v)
                    .map(Ratio::integer)
                    .map_err(|_| E::custom(RatioError::Malformed(v.to_string())))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Ratio, E> {
                Ratio::from_f64(v).map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Ratio, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(RatioVisitor)
    }
}
