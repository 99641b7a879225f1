//! Polynomials over `Z_m`.
//!
//! Image patches become polynomials over `Z_256` (one coefficient per
//! flattened pixel) and token sequences become polynomials over `Z_|V|`.
//! Coefficient index `k` holds the degree-`k` coefficient. Lengths are
//! positional: trailing zeros are kept so encoders can emit a fixed width.

use crate::error::{Error, Result};

/// Modulus used for 8-bit pixel intensities.
pub const PIXEL_MODULUS: u64 = 256;

/// A polynomial with coefficients in `[0, modulus)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingPoly {
    modulus: u64,
    coeffs: Vec<u64>,
}

impl RingPoly {
    /// Builds a polynomial, rejecting coefficients outside `[0, modulus)`.
    pub fn new(modulus: u64, coeffs: Vec<u64>) -> Result<Self> {
        check_modulus(modulus)?;
        if let Some((idx, c)) = coeffs.iter().enumerate().find(|(_, &c)| c >= modulus) {
            return Err(Error::domain(format!(
                "coefficient {c} at index {idx} is outside Z_{modulus}"
            )));
        }
        Ok(Self { modulus, coeffs })
    }

    /// The zero polynomial (empty coefficient sequence).
    pub fn zero(modulus: u64) -> Result<Self> {
        Self::new(modulus, Vec::new())
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Zero-pads to exactly `len` coefficients. Longer inputs are an error
    /// rather than being truncated.
    pub fn pad_to(&self, len: usize) -> Result<Self> {
        if self.coeffs.len() > len {
            return Err(Error::domain(format!(
                "polynomial has {} coefficients, degree bound allows {len}",
                self.coeffs.len()
            )));
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(len, 0);
        Ok(Self {
            modulus: self.modulus,
            coeffs,
        })
    }
}

fn check_modulus(modulus: u64) -> Result<()> {
    if modulus < 2 {
        return Err(Error::domain(format!("modulus must be >= 2, got {modulus}")));
    }
    Ok(())
}

/// Encodes a flattened patch of pixel intensities as a polynomial over `Z_256`.
pub fn encode_patch(pixels: &[i64]) -> Result<RingPoly> {
    if pixels.is_empty() {
        return Err(Error::domain("patch must contain at least one pixel"));
    }
    let coeffs = pixels
        .iter()
        .enumerate()
        .map(|(idx, &p)| {
            if (0..PIXEL_MODULUS as i64).contains(&p) {
                Ok(p as u64)
            } else {
                Err(Error::domain(format!(
                    "pixel {p} at index {idx} is outside [0, 255]"
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RingPoly {
        modulus: PIXEL_MODULUS,
        coeffs,
    })
}

/// Encodes a token-id sequence as a polynomial over `Z_vocab_size`.
pub fn encode_tokens(tokens: &[i64], vocab_size: u64) -> Result<RingPoly> {
    check_modulus(vocab_size)?;
    let coeffs = tokens
        .iter()
        .enumerate()
        .map(|(idx, &t)| {
            if t >= 0 && (t as u64) < vocab_size {
                Ok(t as u64)
            } else {
                Err(Error::domain(format!(
                    "token {t} at index {idx} is outside [0, {}]",
                    vocab_size - 1
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RingPoly {
        modulus: vocab_size,
        coeffs,
    })
}

/// Returns the coefficients verbatim.
pub fn decode(p: &RingPoly) -> Vec<u64> {
    p.coeffs.clone()
}

fn same_ring(a: &RingPoly, b: &RingPoly) -> Result<u64> {
    if a.modulus != b.modulus {
        return Err(Error::domain(format!(
            "modulus mismatch: Z_{} vs Z_{}",
            a.modulus, b.modulus
        )));
    }
    Ok(a.modulus)
}

/// Coefficient-wise sum mod `m`; the shorter operand is zero-padded.
pub fn ring_add(a: &RingPoly, b: &RingPoly) -> Result<RingPoly> {
    let m = same_ring(a, b)?;
    let len = a.len().max(b.len());
    let coeffs = (0..len)
        .map(|k| {
            let x = a.coeffs.get(k).copied().unwrap_or(0);
            let y = b.coeffs.get(k).copied().unwrap_or(0);
            ((u128::from(x) + u128::from(y)) % u128::from(m)) as u64
        })
        .collect();
    Ok(RingPoly { modulus: m, coeffs })
}

/// Polynomial product mod `m`. Either operand empty yields the empty polynomial.
pub fn ring_mul(a: &RingPoly, b: &RingPoly) -> Result<RingPoly> {
    let m = same_ring(a, b)?;
    if a.is_empty() || b.is_empty() {
        return Ok(RingPoly {
            modulus: m,
            coeffs: Vec::new(),
        });
    }
    let m128 = u128::from(m);
    let mut acc = vec![0u128; a.len() + b.len() - 1];
    for (i, &x) in a.coeffs.iter().enumerate() {
        for (j, &y) in b.coeffs.iter().enumerate() {
            // both factors < m < 2^64, so the product fits before reduction
            acc[i + j] = (acc[i + j] + u128::from(x) * u128::from(y) % m128) % m128;
        }
    }
    Ok(RingPoly {
        modulus: m,
        coeffs: acc.into_iter().map(|c| c as u64).collect(),
    })
}
