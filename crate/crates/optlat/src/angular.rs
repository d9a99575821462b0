//! Exact angular-momentum coupling coefficients.
//!
//! Clebsch–Gordan coefficients and Wigner 6-j symbols evaluated in exact
//! integer arithmetic.  Every coefficient is of the form sign · √(rational);
//! the rational is assembled from big-integer factorials, so results are
//! reproducible to the last bit and immune to the catastrophic cancellation
//! that plagues floating-point evaluation of the alternating Racah sums.
//!
//! All public entry points take angular momenta as [`HalfInt`] so that
//! half-integer spins are exact.  Selection-rule violations return zero
//! rather than erroring: a vanishing coefficient is a physical statement,
//! not a failure.

use crate::halfint::{triangle, HalfInt};
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use std::sync::OnceLock;

/// Largest argument the shared factorial table supports.  Coupling sums for
/// the spins in this crate stay far below the bound; hitting it indicates a
/// logic error, hence the internal assert.
const FACTORIAL_TABLE_LEN: usize = 256;

fn factorials() -> &'static Vec<BigInt> {
    static TABLE: OnceLock<Vec<BigInt>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(FACTORIAL_TABLE_LEN);
        table.push(BigInt::one());
        for n in 1..FACTORIAL_TABLE_LEN {
            let next = &table[n - 1] * BigInt::from(n);
            table.push(next);
        }
        table
    })
}

fn fact(n: i32) -> BigInt {
    assert!(n >= 0, "factorial of negative integer");
    assert!((n as usize) < FACTORIAL_TABLE_LEN, "factorial table exhausted");
    factorials()[n as usize].clone()
}

/// Exact value sign(q) · √|q|.  Squares of coupling coefficients are
/// rational, so this representation is closed under the Racah formulas.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedSqrtRational {
    signed_square: BigRational,
}

impl SignedSqrtRational {
    pub fn zero() -> Self {
        SignedSqrtRational { signed_square: BigRational::zero() }
    }

    /// Wrap a rational q, interpreted as the signed square of the value.
    pub fn from_signed_square(q: BigRational) -> Self {
        SignedSqrtRational { signed_square: q }
    }

    /// The signed square q with value = sign(q)·√|q|.
    pub fn signed_square(&self) -> &BigRational {
        &self.signed_square
    }

    pub fn is_zero(&self) -> bool {
        self.signed_square.is_zero()
    }

    /// Convert to floating point (the only lossy step).
    pub fn as_f64(&self) -> f64 {
        let q = self.signed_square.to_f64().unwrap_or(f64::NAN);
        q.signum() * q.abs().sqrt()
    }
}

fn valid_jm(dj: i32, dm: i32) -> bool {
    dj >= 0 && dm.abs() <= dj && (dj + dm) % 2 == 0
}

/// Triangle coefficient Δ(abc) = (a+b-c)!(a-b+c)!(-a+b+c)! / (a+b+c+1)!
/// for doubled arguments that already satisfy the triangle rule.
fn triangle_coefficient(da: i32, db: i32, dc: i32) -> BigRational {
    let numer = fact((da + db - dc) / 2) * fact((da - db + dc) / 2) * fact((-da + db + dc) / 2);
    let denom = fact((da + db + dc) / 2 + 1);
    BigRational::new(numer, denom)
}

/// Exact Clebsch–Gordan coefficient ⟨j1 m1; j2 m2 | j3 m3⟩ in the
/// Condon–Shortley phase convention.
pub fn clebsch_gordan_exact(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j3: HalfInt,
    m3: HalfInt,
) -> SignedSqrtRational {
    let (dj1, dm1) = (j1.doubled(), m1.doubled());
    let (dj2, dm2) = (j2.doubled(), m2.doubled());
    let (dj3, dm3) = (j3.doubled(), m3.doubled());

    if !valid_jm(dj1, dm1) || !valid_jm(dj2, dm2) || !valid_jm(dj3, dm3) {
        return SignedSqrtRational::zero();
    }
    if dm1 + dm2 != dm3 || !triangle(j1, j2, j3) {
        return SignedSqrtRational::zero();
    }

    // Racah's single-sum formula.  All the variables below are true
    // integers once the selection rules hold.
    let kmin = 0.max((dj2 - dj3 - dm1) / 2).max((dj1 - dj3 + dm2) / 2);
    let kmax = ((dj1 + dj2 - dj3) / 2)
        .min((dj1 - dm1) / 2)
        .min((dj2 + dm2) / 2);

    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let denom = fact(k)
            * fact((dj1 + dj2 - dj3) / 2 - k)
            * fact((dj1 - dm1) / 2 - k)
            * fact((dj2 + dm2) / 2 - k)
            * fact((dj3 - dj2 + dm1) / 2 + k)
            * fact((dj3 - dj1 - dm2) / 2 + k);
        let term = BigRational::new(BigInt::one(), denom);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return SignedSqrtRational::zero();
    }

    let prefactor = BigRational::from(BigInt::from(dj3 + 1))
        * triangle_coefficient(dj1, dj2, dj3)
        * BigRational::from(
            fact((dj3 + dm3) / 2)
                * fact((dj3 - dm3) / 2)
                * fact((dj1 - dm1) / 2)
                * fact((dj1 + dm1) / 2)
                * fact((dj2 - dm2) / 2)
                * fact((dj2 + dm2) / 2),
        );

    let signed_square = if sum.is_negative() {
        -(&sum * &sum * prefactor)
    } else {
        &sum * &sum * prefactor
    };
    SignedSqrtRational::from_signed_square(signed_square)
}

/// Floating-point Clebsch–Gordan coefficient ⟨j1 m1; j2 m2 | j3 m3⟩.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j3: HalfInt,
    m3: HalfInt,
) -> f64 {
    clebsch_gordan_exact(j1, m1, j2, m2, j3, m3).as_f64()
}

/// Exact Wigner 6-j symbol {j1 j2 j3; j4 j5 j6}.
pub fn wigner_6j_exact(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> SignedSqrtRational {
    let (d1, d2, d3) = (j1.doubled(), j2.doubled(), j3.doubled());
    let (d4, d5, d6) = (j4.doubled(), j5.doubled(), j6.doubled());
    if d1 < 0 || d2 < 0 || d3 < 0 || d4 < 0 || d5 < 0 || d6 < 0 {
        return SignedSqrtRational::zero();
    }
    // The four triads that must each close into a triangle.
    if !triangle(j1, j2, j3)
        || !triangle(j1, j5, j6)
        || !triangle(j4, j2, j6)
        || !triangle(j4, j5, j3)
    {
        return SignedSqrtRational::zero();
    }

    let t1 = (d1 + d2 + d3) / 2;
    let t2 = (d1 + d5 + d6) / 2;
    let t3 = (d4 + d2 + d6) / 2;
    let t4 = (d4 + d5 + d3) / 2;
    let q1 = (d1 + d2 + d4 + d5) / 2;
    let q2 = (d2 + d3 + d5 + d6) / 2;
    let q3 = (d1 + d3 + d4 + d6) / 2;

    let tmin = t1.max(t2).max(t3).max(t4);
    let tmax = q1.min(q2).min(q3);

    let mut sum = BigRational::zero();
    for t in tmin..=tmax {
        let denom = fact(t - t1)
            * fact(t - t2)
            * fact(t - t3)
            * fact(t - t4)
            * fact(q1 - t)
            * fact(q2 - t)
            * fact(q3 - t);
        let term = BigRational::new(fact(t + 1), denom);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return SignedSqrtRational::zero();
    }

    let deltas = triangle_coefficient(d1, d2, d3)
        * triangle_coefficient(d1, d5, d6)
        * triangle_coefficient(d4, d2, d6)
        * triangle_coefficient(d4, d5, d3);

    let signed_square = if sum.is_negative() {
        -(&sum * &sum * deltas)
    } else {
        &sum * &sum * deltas
    };
    SignedSqrtRational::from_signed_square(signed_square)
}

/// Floating-point Wigner 6-j symbol {j1 j2 j3; j4 j5 j6}.
pub fn wigner_6j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> f64 {
    wigner_6j_exact(j1, j2, j3, j4, j5, j6).as_f64()
}

/// Relative line strength of the hyperfine transition F (ground, electronic
/// angular momentum `j_ground`) ↔ F' (excited, `j_excited`) for nuclear spin
/// `i`:
///
/// w = (2J' + 1)(2F + 1) {F' I J'; J 1 F}²
///
/// Normalized so that the strengths out of a given excited F' sum to one
/// over the ground manifolds, which makes the far-detuned rank-0 limit of
/// the light shift carry unit weight on the strongest (stretched) line.
pub fn branching_weight(
    f_excited: HalfInt,
    f_ground: HalfInt,
    i: HalfInt,
    j_ground: HalfInt,
    j_excited: HalfInt,
) -> f64 {
    let one = HalfInt::from_int(1);
    let sixj = wigner_6j(f_excited, i, j_excited, j_ground, one, f_ground);
    let deg = f64::from(j_excited.doubled() + 1) * f64::from(f_ground.doubled() + 1);
    deg * sixj * sixj
}
