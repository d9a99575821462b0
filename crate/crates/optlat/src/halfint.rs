//! Half-integer angular-momentum bookkeeping.
//!
//! Spin quantum numbers of alkali atoms come in both integer and
//! half-integer flavors (electronic J = 1/2, nuclear I = 7/2, total F = 3,
//! 4, ...).  Storing twice the value as an `i32` keeps every allowed j and m
//! exact, hashable, and order-comparable, with no floating-point fuzz in
//! selection rules.

use std::fmt;
use std::ops::{Add, Neg, Sub};

/// An integer or half-integer, stored as twice its value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct HalfInt {
    twice: i32,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };

    /// Build from twice the desired value: `from_doubled(3)` is 3/2.
    pub const fn from_doubled(twice: i32) -> Self {
        HalfInt { twice }
    }

    /// Build from an ordinary integer.
    pub const fn from_int(n: i32) -> Self {
        HalfInt { twice: 2 * n }
    }

    /// Twice the value (always exact).
    pub const fn doubled(self) -> i32 {
        self.twice
    }

    /// True when the value is a whole integer.
    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    pub const fn abs(self) -> Self {
        HalfInt { twice: self.twice.abs() }
    }

    /// Number of magnetic sublevels, 2j + 1.  Panics for negative j.
    pub fn multiplicity(self) -> usize {
        assert!(self.twice >= 0, "multiplicity of negative angular momentum");
        (self.twice + 1) as usize
    }

    /// The projections m = -j, -j+1, ..., +j in ascending order.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        let j = self.twice;
        (0..=j.max(0)).map(move |i| HalfInt { twice: -j + 2 * i }).take_while(move |_| j >= 0)
    }
}

/// Triangle rule |a - b| <= c <= a + b with integral perimeter: the
/// condition for three angular momenta to couple.
pub fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (da, db, dc) = (a.doubled(), b.doubled(), c.doubled());
    dc >= (da - db).abs() && dc <= da + db && (da + db + dc) % 2 == 0
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice + rhs.twice }
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice - rhs.twice }
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt { twice: -self.twice }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubled_round_trip() {
        let j = HalfInt::from_doubled(7);
        assert_eq!(j.doubled(), 7);
        assert!(!j.is_integer());
        assert_eq!(j.as_f64(), 3.5);
        assert_eq!(format!("{j}"), "7/2");
        assert_eq!(format!("{}", HalfInt::from_int(4)), "4");
    }

    #[test]
    fn projections_ascend() {
        let ms: Vec<i32> = HalfInt::from_doubled(3).projections().map(|m| m.doubled()).collect();
        assert_eq!(ms, vec![-3, -1, 1, 3]);
        assert_eq!(HalfInt::from_int(4).multiplicity(), 9);
        assert_eq!(HalfInt::ZERO.projections().count(), 1);
    }

    #[test]
    fn triangle_rule() {
        let h = HalfInt::from_doubled(1);
        let one = HalfInt::from_int(1);
        assert!(triangle(h, h, one));
        assert!(!triangle(h, h, HalfInt::from_int(2)));
        // Half-integer perimeter can never couple.
        assert!(!triangle(h, one, one));
    }
}
