//! Arithmetic in the prime field GF(q).
//!
//! Elements are bare canonical residues; the modulus lives in a
//! [`FieldModulus`] context that every operation goes through. Matrices carry
//! one context for all their entries, which keeps storage at one word per
//! entry.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// The Mersenne prime 2^31 - 1.
pub const DEFAULT_Q: u64 = 2_147_483_647;

/// Largest modulus accepted (exclusive).
pub const MAX_Q: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is out of range (need 2 <= q < 2^63)")]
    ModulusOutOfRange(u64),
    #[error("value {value} is not a canonical residue mod {q}")]
    NotCanonical { value: u64, q: u64 },
    #[error("division by zero in GF({0})")]
    DivisionByZero(u64),
}

/// A canonical residue in `[0, q)`.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
#[repr(transparent)]
pub struct FieldElement(u64);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Arithmetic context for GF(q), q prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct FieldModulus {
    q: u64,
}

impl TryFrom<u64> for FieldModulus {
    type Error = FieldError;

    fn try_from(q: u64) -> Result<Self, Self::Error> {
        FieldModulus::new(q)
    }
}

impl From<FieldModulus> for u64 {
    fn from(m: FieldModulus) -> u64 {
        m.q
    }
}

impl Default for FieldModulus {
    fn default() -> Self {
        FieldModulus { q: DEFAULT_Q }
    }
}

impl fmt::Display for FieldModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)
    }
}

impl FieldModulus {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        if !(2..MAX_Q).contains(&q) {
            return Err(FieldError::ModulusOutOfRange(q));
        }
        if !is_prime(q) {
            return Err(FieldError::NotPrime(q));
        }
        Ok(FieldModulus { q })
    }

    #[inline]
    pub fn q(self) -> u64 {
        self.q
    }

    /// Checked constructor: rejects values outside `[0, q)`.
    pub fn element(self, value: u64) -> Result<FieldElement, FieldError> {
        if value < self.q {
            Ok(FieldElement(value))
        } else {
            Err(FieldError::NotCanonical { value, q: self.q })
        }
    }

    #[inline]
    pub fn from_u64(self, value: u64) -> FieldElement {
        FieldElement(value % self.q)
    }

    /// Canonical representative of `z mod q`, so `-5` maps to `q - 5`.
    #[inline]
    pub fn from_signed(self, z: i64) -> FieldElement {
        FieldElement((z as i128).rem_euclid(self.q as i128) as u64)
    }

    /// Symmetric lift into `(-q/2, q/2]`; handy for printing small signed
    /// coefficients.
    pub fn to_signed(self, a: FieldElement) -> i64 {
        self.check(a);
        if a.0 > self.q / 2 {
            -((self.q - a.0) as i64)
        } else {
            a.0 as i64
        }
    }

    #[inline]
    fn check(self, a: FieldElement) {
        debug_assert!(a.0 < self.q, "element {} used with modulus {}", a.0, self.q);
    }

    #[inline]
    pub fn add(self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.check(a);
        self.check(b);
        // q < 2^63 so the sum cannot overflow.
        let s = a.0 + b.0;
        FieldElement(if s >= self.q { s - self.q } else { s })
    }

    #[inline]
    pub fn sub(self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.check(a);
        self.check(b);
        FieldElement(if a.0 >= b.0 {
            a.0 - b.0
        } else {
            a.0 + self.q - b.0
        })
    }

    #[inline]
    pub fn neg(self, a: FieldElement) -> FieldElement {
        self.check(a);
        FieldElement(if a.0 == 0 { 0 } else { self.q - a.0 })
    }

    #[inline]
    pub fn mul(self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.check(a);
        self.check(b);
        FieldElement(mul_mod(a.0, b.0, self.q))
    }

    /// `acc + a * b`, the inner step of every dot product.
    #[inline]
    pub fn mul_add(self, acc: FieldElement, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(acc, self.mul(a, b))
    }

    pub fn pow(self, a: FieldElement, mut e: u64) -> FieldElement {
        self.check(a);
        let mut base = a.0;
        let mut acc = 1 % self.q;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_mod(acc, base, self.q);
            }
            base = mul_mod(base, base, self.q);
            e >>= 1;
        }
        FieldElement(acc)
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inv(self, a: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a);
        if a.0 == 0 {
            return Err(FieldError::DivisionByZero(self.q));
        }
        let (mut r0, mut r1) = (self.q as i128, a.0 as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(FieldElement(t0.rem_euclid(self.q as i128) as u64))
    }

    pub fn div(self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Uniform draw from `[0, q)`. `random_range` rejects the biased tail, so
    /// no residue is favoured.
    #[inline]
    pub fn rand_uniform<R: Rng + ?Sized>(self, rng: &mut R) -> FieldElement {
        FieldElement(rng.random_range(0..self.q))
    }

    /// Uniform draw from `[1, q)`.
    #[inline]
    pub fn rand_nonzero<R: Rng + ?Sized>(self, rng: &mut R) -> FieldElement {
        FieldElement(rng.random_range(1..self.q))
    }

    pub fn rand_vector<R: Rng + ?Sized>(self, len: usize, rng: &mut R) -> Vec<FieldElement> {
        (0..len).map(|_| self.rand_uniform(rng)).collect()
    }

    pub fn dot(self, a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
        debug_assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .fold(FieldElement::ZERO, |acc, (&x, &y)| self.mul_add(acc, x, y))
    }

    pub fn signed_vector(self, values: &[i64]) -> Vec<FieldElement> {
        values.iter().map(|&z| self.from_signed(z)).collect()
    }
}

#[inline]
fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    if q <= u32::MAX as u64 {
        (a * b) % q
    } else {
        ((a as u128 * b as u128) % q as u128) as u64
    }
}

fn pow_mod(mut base: u64, mut e: u64, q: u64) -> u64 {
    let mut acc = 1u64;
    base %= q;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, q);
        }
        base = mul_mod(base, base, q);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the first twelve prime bases are exact for
/// every n < 3.3 * 10^24.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
