//! Exact arithmetic on rational angles under the doubling map.
//!
//! Angles are reduced fractions `p/q ∈ [0, 1)` stored in machine words. The
//! doubling orbit of a rational angle is eventually periodic; its minimal
//! preperiod `l` and period `q` drive the case split in the landing solvers.
//! Keeping the arithmetic exact matters: a floating representation of the
//! angle breaks the minimality of `(l, q)`.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Reduced rational angle `numerator/denominator ∈ [0, 1) (mod 1)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalAngle {
    num: u64,
    den: u64,
}

/// Errors from constructing or parsing angles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AngleError {
    ZeroDenominator,
    /// Numerator or denominator does not fit in a machine word.
    Overflow(String),
    Parse(String),
}

impl fmt::Display for AngleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngleError::ZeroDenominator => write!(f, "angle denominator must be positive"),
            AngleError::Overflow(s) => write!(f, "angle arithmetic overflow: {s}"),
            AngleError::Parse(s) => write!(f, "cannot parse angle: {s}"),
        }
    }
}

impl std::error::Error for AngleError {}

impl RationalAngle {
    /// The angle `0/1`.
    pub const ZERO: Self = Self { num: 0, den: 1 };

    /// Build `num/den` reduced modulo 1.
    pub fn new(num: u64, den: u64) -> Result<Self, AngleError> {
        if den == 0 {
            return Err(AngleError::ZeroDenominator);
        }
        let num = num % den;
        let g = num.gcd(&den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn denominator(self) -> u64 {
        self.den
    }

    /// Value in `[0, 1)` as a double.
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// The image `2θ mod 1` under the doubling map, reduced.
    ///
    /// `num < den` makes the fold-back form overflow-free on the full word
    /// range.
    pub fn double(self) -> Self {
        let num2 = if self.num >= self.den - self.num {
            self.num - (self.den - self.num)
        } else {
            2 * self.num
        };
        Self::new(num2, self.den).expect("denominator preserved")
    }

    /// The image `2^k θ mod 1`.
    pub fn double_k(self, k: u32) -> Self {
        let mut a = self;
        for _ in 0..k {
            a = a.double();
        }
        a
    }

    /// Minimal `(l, q)` with `2^{l+q} θ ≡ 2^l θ (mod 1)`.
    ///
    /// `l` is the 2-adic valuation of the denominator and `q` the
    /// multiplicative order of 2 modulo its odd part (with `q = 1` for odd
    /// part 1).
    pub fn preperiod_period(self) -> (u32, u32) {
        let mut odd = self.den;
        let mut l = 0u32;
        while odd % 2 == 0 {
            odd /= 2;
            l += 1;
        }
        (l, order_of_two(odd))
    }

    /// Preperiod `l` of the doubling orbit.
    pub fn preperiod(self) -> u32 {
        self.preperiod_period().0
    }

    /// Exact period `q` of the doubling orbit.
    pub fn period(self) -> u32 {
        self.preperiod_period().1
    }
}

/// Multiplicative order of 2 modulo an odd integer (`1` maps to order 1).
fn order_of_two(odd: u64) -> u32 {
    debug_assert!(odd % 2 == 1);
    if odd == 1 {
        return 1;
    }
    let mut pow = 2u64 % odd;
    let mut k = 1u32;
    while pow != 1 {
        // doubling mod odd without overflow, same fold-back as `double`
        pow = if pow >= odd - pow {
            pow - (odd - pow)
        } else {
            2 * pow
        };
        k = k
            .checked_add(1)
            .expect("doubling-orbit period exceeds u32 range");
    }
    k
}

impl fmt::Display for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for RationalAngle {
    type Err = AngleError;

    /// Parse `"p/q"`, reducing on construction.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| AngleError::Parse(format!("expected p/q, got {s:?}")))?;
        let num: u64 = p
            .trim()
            .parse()
            .map_err(|_| AngleError::Overflow(format!("numerator {p:?}")))?;
        let den: u64 = q
            .trim()
            .parse()
            .map_err(|_| AngleError::Overflow(format!("denominator {q:?}")))?;
        Self::new(num, den)
    }
}

impl Serialize for RationalAngle {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RationalAngle {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Distance between two angle values on the circle `ℝ/ℤ`.
pub fn circle_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ang(n: u64, d: u64) -> RationalAngle {
        RationalAngle::new(n, d).unwrap()
    }

    #[test]
    fn doubling_map() {
        assert_eq!(ang(1, 3).double(), ang(2, 3));
        assert_eq!(ang(2, 3).double(), ang(1, 3));
        assert_eq!(ang(1, 2).double(), RationalAngle::ZERO);
    }

    #[test]
    fn preperiod_and_period() {
        assert_eq!(RationalAngle::ZERO.preperiod_period(), (0, 1));
        assert_eq!(ang(1, 3).preperiod_period(), (0, 2));
        assert_eq!(ang(1, 2).preperiod_period(), (1, 1));
        assert_eq!(ang(1, 6).preperiod_period(), (1, 2));
        assert_eq!(ang(1, 4).preperiod_period(), (2, 1));
    }

    #[test]
    fn reduction_mod_one() {
        assert_eq!(ang(5, 3), ang(2, 3));
        assert_eq!(ang(4, 6), ang(2, 3));
        assert_eq!(RationalAngle::new(7, 0), Err(AngleError::ZeroDenominator));
    }

    #[test]
    fn parse_and_display_round_trip() {
        let a: RationalAngle = "3/ 7".parse().unwrap();
        assert_eq!(a, ang(3, 7));
        assert_eq!(a.to_string(), "3/7");
        assert!("0.5".parse::<RationalAngle>().is_err());
        assert!("1/0".parse::<RationalAngle>().is_err());
        assert!("x/7".parse::<RationalAngle>().is_err());
    }

    #[test]
    fn doubling_shifts_preperiod() {
        for den in 1..400u64 {
            for num in 0..den {
                if num.gcd(&den) != 1 {
                    continue;
                }
                let a = ang(num, den);
                let (l, q) = a.preperiod_period();
                let (l2, q2) = a.double().preperiod_period();
                assert_eq!(q2, q, "period preserved under doubling at {a}");
                assert_eq!(l2, l.saturating_sub(1), "preperiod drops at {a}");
            }
        }
    }
}
