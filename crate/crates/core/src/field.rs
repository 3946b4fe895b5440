//! Arithmetic in GF(2^n) for payloads and coding coefficients.
//!
//! Elements are stored as the integer whose binary expansion gives the
//! polynomial coefficients, so field addition is XOR and the bit-vector view
//! of an element is the value itself.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WatchdogError};

/// Largest supported payload width. Dense enumeration of the field must stay cheap.
pub const MAX_FIELD_BITS: u32 = 20;

/// Degree of a polynomial over GF(2) stored as an integer, `None` for zero.
fn degree(poly: u64) -> Option<u32> {
    (poly != 0).then(|| 63 - poly.leading_zeros())
}

/// Remainder of `a` divided by `b` over GF(2)[x].
fn poly_rem(mut a: u64, b: u64) -> u64 {
    let db = degree(b).expect("division by the zero polynomial");
    while let Some(da) = degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Exhaustive trial division by every polynomial of degree `1..=deg/2`.
pub fn is_irreducible(poly: u32) -> bool {
    let Some(deg) = degree(poly as u64) else {
        return false;
    };
    if deg == 0 {
        return false;
    }
    for d in 1..=deg / 2 {
        for divisor in (1u64 << d)..(1u64 << (d + 1)) {
            if poly_rem(poly as u64, divisor) == 0 {
                return false;
            }
        }
    }
    true
}

/// Smallest (by integer value) irreducible polynomial of degree `n`.
pub fn default_reduction_poly(n: u32) -> Result<u32> {
    if n == 0 || n > MAX_FIELD_BITS {
        return Err(WatchdogError::FieldWidth(n));
    }
    ((1u32 << n)..(1u32 << (n + 1))).find(|&p| is_irreducible(p)).ok_or(WatchdogError::FieldWidth(n))
}

/// Parameters of GF(2^n): the width and the reduction polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldParams {
    n: u32,
    reduction_poly: u32,
}

impl FieldParams {
    /// Field of width `n` using the smallest irreducible polynomial of that degree.
    pub fn new(n: u32) -> Result<Self> {
        let reduction_poly = default_reduction_poly(n)?;
        Ok(Self { n, reduction_poly })
    }

    pub fn with_poly(n: u32, reduction_poly: u32) -> Result<Self> {
        if n == 0 || n > MAX_FIELD_BITS {
            return Err(WatchdogError::FieldWidth(n));
        }
        if degree(reduction_poly as u64) != Some(n) || !is_irreducible(reduction_poly) {
            return Err(WatchdogError::NotIrreducible { n, poly: reduction_poly });
        }
        Ok(Self { n, reduction_poly })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn reduction_poly(&self) -> u32 {
        self.reduction_poly
    }

    /// Number of field elements, `2^n`.
    pub fn order(&self) -> u32 {
        1 << self.n
    }

    pub fn mask(&self) -> u32 {
        self.order() - 1
    }

    pub fn element(&self, value: u32) -> Result<FieldElement> {
        if value > self.mask() {
            return Err(WatchdogError::ValueOutOfRange { value, n: self.n });
        }
        Ok(FieldElement { value, params: *self })
    }

    /// Carry-less product of two in-range values reduced modulo the field polynomial.
    ///
    /// Callers guarantee both operands are below `2^n`.
    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        debug_assert!(a <= self.mask() && b <= self.mask());
        let (mut a, mut b) = (a as u64, b as u64);
        let mut product = 0u64;
        while b != 0 {
            if b & 1 == 1 {
                product ^= a;
            }
            a <<= 1;
            b >>= 1;
        }
        let n = self.n;
        let poly = self.reduction_poly as u64;
        for bit in (n..2 * n).rev() {
            if product >> bit & 1 == 1 {
                product ^= poly << (bit - n);
            }
        }
        product as u32
    }

    /// Multiplicative inverse by exponentiation, `a^(2^n - 2)`. Zero maps to zero.
    pub fn inv(&self, a: u32) -> u32 {
        let mut result = 1;
        let mut base = a;
        let mut e = self.order() - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        if a == 0 {
            0
        } else {
            result
        }
    }
}

/// An element of GF(2^n).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    params: FieldParams,
}

impl FieldElement {
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn params(&self) -> FieldParams {
        self.params
    }

    /// The `n`-bit representation of this element.
    pub fn bits(&self) -> Word {
        Word { bits: self.value, width: self.params.n }
    }
}

pub fn gf_add(a: FieldElement, b: FieldElement) -> Result<FieldElement> {
    if a.params != b.params {
        return Err(WatchdogError::FieldMismatch);
    }
    Ok(FieldElement { value: a.value ^ b.value, params: a.params })
}

pub fn gf_mul(a: FieldElement, b: FieldElement) -> Result<FieldElement> {
    if a.params != b.params {
        return Err(WatchdogError::FieldMismatch);
    }
    Ok(FieldElement { value: a.params.mul(a.value, b.value), params: a.params })
}

/// `Σ coeffs[j] · payloads[j]` in GF(2^n).
pub fn linear_combination(coeffs: &[FieldElement], payloads: &[FieldElement]) -> Result<FieldElement> {
    if coeffs.is_empty() || coeffs.len() != payloads.len() {
        return Err(WatchdogError::BadCombination { coeffs: coeffs.len(), payloads: payloads.len() });
    }
    let params = coeffs[0].params;
    let mut acc = params.element(0)?;
    for (&alpha, &x) in coeffs.iter().zip(payloads) {
        if alpha.params != params {
            return Err(WatchdogError::FieldMismatch);
        }
        acc = gf_add(acc, gf_mul(alpha, x)?)?;
    }
    Ok(acc)
}

/// A fixed-width bit-vector of at most 32 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    bits: u32,
    width: u32,
}

impl Word {
    /// Builds a word, masking `bits` to `width`.
    pub fn new(bits: u32, width: u32) -> Self {
        assert!(width <= 32, "word width {width} exceeds 32 bits");
        let mask = if width == 32 { u32::MAX } else { (1u32 << width) - 1 };
        Self { bits: bits & mask, width }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// XOR an error pattern of the same width onto this word.
    pub fn apply_error(&self, error: Word) -> Result<Word> {
        if self.width != error.width {
            return Err(WatchdogError::WidthMismatch(self.width, error.width));
        }
        Ok(Word { bits: self.bits ^ error.bits, width: self.width })
    }
}

/// Hamming distance between two equal-width words.
pub fn hamming(a: Word, b: Word) -> Result<u32> {
    if a.width != b.width {
        return Err(WatchdogError::WidthMismatch(a.width, b.width));
    }
    Ok((a.bits ^ b.bits).count_ones())
}
