//! Arithmetic in the binary quotient rings used by the array codes.
//!
//! Two moduli are supported:
//!
//! * `EvenoddRing(p)`: `F2[x] / (1 + x + ... + x^(p-1))` for a prime `p`. Elements
//!   are kept as length-`p` bit vectors modulo `x^p + 1`; the canonical
//!   representative has a zero coefficient at `x^(p-1)`. Because `x^p = 1`,
//!   multiplying by `x^e` is a cyclic rotation followed by canonicalization.
//! * `Circulant(n)`: `F2[x] / (x^n + 1)`. Elements are never reduced; `x^n = 1`
//!   only wraps indices.
//!
//! Coefficients are packed into a single `u128`, so both `p` and `n` are
//! limited to [`MAX_MODULUS_BITS`].

use std::fmt;
use std::ops::{Add, AddAssign, Mul};

use rand::Rng;
use thiserror::Error;

/// Largest supported `p` (or `n`).
pub const MAX_MODULUS_BITS: u32 = 127;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("{0} is not an odd prime")]
    NotPrime(u32),
    #[error("modulus size {0} is out of range 1..={MAX_MODULUS_BITS}")]
    ModulusOutOfRange(u32),
    #[error("operands live in different rings ({0} vs {1})")]
    ModulusMismatch(Modulus, Modulus),
    #[error("{0} is not invertible in {1}")]
    NotInvertible(String, Modulus),
}

/// Primality by trial division; inputs are tiny.
pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut i = 3;
    while i * i <= n {
        if n.is_multiple_of(i) {
            return false;
        }
        i += 2;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulus {
    EvenoddRing { p: u32 },
    Circulant { n: u32 },
}

impl Modulus {
    pub fn evenodd(p: u32) -> Result<Self, RingError> {
        if p > MAX_MODULUS_BITS {
            return Err(RingError::ModulusOutOfRange(p));
        }
        if p < 3 || !is_prime(p) {
            return Err(RingError::NotPrime(p));
        }
        Ok(Modulus::EvenoddRing { p })
    }

    pub fn circulant(n: u32) -> Result<Self, RingError> {
        if n == 0 || n > MAX_MODULUS_BITS {
            return Err(RingError::ModulusOutOfRange(n));
        }
        Ok(Modulus::Circulant { n })
    }

    /// Length of the internal bit vector (`p` or `n`).
    pub fn width(self) -> u32 {
        match self {
            Modulus::EvenoddRing { p } => p,
            Modulus::Circulant { n } => n,
        }
    }

    /// Number of free coefficients of a canonical element (`p - 1` or `n`).
    pub fn dimension(self) -> u32 {
        match self {
            Modulus::EvenoddRing { p } => p - 1,
            Modulus::Circulant { n } => n,
        }
    }

    fn mask(self) -> u128 {
        low_mask(self.width())
    }

    /// The modulus polynomial itself, as a packed coefficient vector.
    fn polynomial(self) -> u128 {
        match self {
            Modulus::EvenoddRing { p } => low_mask(p),
            Modulus::Circulant { n } => (1u128 << n) | 1,
        }
    }

    fn canonicalize(self, bits: u128) -> u128 {
        let bits = bits & self.mask();
        match self {
            Modulus::EvenoddRing { p } => {
                if bits >> (p - 1) & 1 == 1 {
                    bits ^ self.mask()
                } else {
                    bits
                }
            }
            Modulus::Circulant { .. } => bits,
        }
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulus::EvenoddRing { p } => write!(f, "R_{p}"),
            Modulus::Circulant { n } => write!(f, "F2[x]/(x^{n}+1)"),
        }
    }
}

fn low_mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

fn rotate(bits: u128, shift: u32, width: u32) -> u128 {
    let shift = shift % width;
    if shift == 0 {
        return bits;
    }
    ((bits << shift) | (bits >> (width - shift))) & low_mask(width)
}

fn degree(bits: u128) -> Option<u32> {
    if bits == 0 {
        None
    } else {
        Some(127 - bits.leading_zeros())
    }
}

/// Carry-less product; callers guarantee the result fits in 128 bits.
fn clmul(a: u128, b: u128) -> u128 {
    let mut acc = 0u128;
    let mut b = b;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a << shift;
        }
        b >>= 1;
        shift += 1;
    }
    acc
}

fn poly_divmod(mut num: u128, den: u128) -> (u128, u128) {
    let dd = degree(den).expect("division by zero polynomial");
    let mut quot = 0u128;
    while let Some(dn) = degree(num) {
        if dn < dd {
            break;
        }
        let s = dn - dd;
        quot |= 1u128 << s;
        num ^= den << s;
    }
    (quot, num)
}

/// An element of `F2[x]/M(x)` carrying its modulus.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingElement {
    bits: u128,
    modulus: Modulus,
}

impl RingElement {
    pub fn zero(modulus: Modulus) -> Self {
        RingElement { bits: 0, modulus }
    }

    pub fn one(modulus: Modulus) -> Self {
        RingElement { bits: 1, modulus }
    }

    /// `x^e`, reduced.
    pub fn monomial(modulus: Modulus, e: u32) -> Self {
        Self::one(modulus).shift_mul(e)
    }

    /// Builds an element from packed coefficients; bits at or above the
    /// modulus width are discarded, the rest is canonicalized.
    pub fn from_bits(modulus: Modulus, bits: u128) -> Self {
        RingElement {
            bits: modulus.canonicalize(bits),
            modulus,
        }
    }

    /// Builds `sum x^e` over the given exponents (taken modulo the width).
    pub fn from_exponents(modulus: Modulus, exponents: &[u32]) -> Self {
        let bits = exponents
            .iter()
            .fold(0u128, |acc, &e| acc ^ (1u128 << (e % modulus.width())));
        Self::from_bits(modulus, bits)
    }

    pub fn random<R: Rng + ?Sized>(modulus: Modulus, rng: &mut R) -> Self {
        Self::from_bits(modulus, rng.gen::<u128>() & low_mask(modulus.dimension()))
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    /// Packed canonical coefficients.
    pub fn bits(&self) -> u128 {
        self.bits
    }

    pub fn coeff(&self, i: u32) -> bool {
        i < 128 && (self.bits >> i) & 1 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn is_one(&self) -> bool {
        self.bits == 1
    }

    fn same_ring(&self, other: &Self) -> Result<(), RingError> {
        if self.modulus == other.modulus {
            Ok(())
        } else {
            Err(RingError::ModulusMismatch(self.modulus, other.modulus))
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, RingError> {
        self.same_ring(other)?;
        Ok(RingElement {
            bits: self.bits ^ other.bits,
            modulus: self.modulus,
        })
    }

    /// Multiplication by `x^e`: a cyclic rotation of the width-`p` (or `n`)
    /// vector, then canonicalization.
    pub fn shift_mul(&self, e: u32) -> Self {
        let w = self.modulus.width();
        RingElement {
            bits: self.modulus.canonicalize(rotate(self.bits, e % w, w)),
            modulus: self.modulus,
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, RingError> {
        self.same_ring(other)?;
        let w = self.modulus.width();
        let mut acc = 0u128;
        let mut rest = self.bits;
        while rest != 0 {
            let i = rest.trailing_zeros();
            acc ^= rotate(other.bits, i, w);
            rest &= rest - 1;
        }
        Ok(RingElement {
            bits: self.modulus.canonicalize(acc),
            modulus: self.modulus,
        })
    }

    /// Multiplicative inverse by the extended Euclidean algorithm against the
    /// modulus polynomial.
    pub fn inverse(&self) -> Result<Self, RingError> {
        let m = self.modulus.polynomial();
        let (mut r0, mut r1) = (m, self.bits);
        let (mut s0, mut s1) = (0u128, 1u128);
        while r1 != 0 {
            let (q, r) = poly_divmod(r0, r1);
            let s = s0 ^ clmul(q, s1);
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        if r0 != 1 {
            return Err(RingError::NotInvertible(self.to_string(), self.modulus));
        }
        let (_, s) = poly_divmod(s0, m);
        Ok(RingElement::from_bits(self.modulus, s))
    }

    /// `self / divisor`.
    pub fn solve_scaled(&self, divisor: &Self) -> Result<Self, RingError> {
        self.same_ring(divisor)?;
        self.try_mul(&divisor.inverse()?)
    }
}

impl Add for RingElement {
    type Output = RingElement;

    /// # Panics
    /// On operands from different rings; use [`RingElement::try_add`] to get
    /// an error instead.
    fn add(self, rhs: Self) -> Self {
        self.try_add(&rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl AddAssign for RingElement {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Mul for RingElement {
    type Output = RingElement;

    /// # Panics
    /// On operands from different rings; see [`RingElement::try_mul`].
    fn mul(self, rhs: Self) -> Self {
        self.try_mul(&rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits == 0 {
            return write!(f, "0");
        }
        let mut first = true;
        for i in 0..self.modulus.width() {
            if self.coeff(i) {
                if !first {
                    write!(f, "+")?;
                }
                first = false;
                match i {
                    0 => write!(f, "1")?,
                    1 => write!(f, "x")?,
                    _ => write!(f, "x^{i}")?,
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} in {}", self.modulus)
    }
}
