//! Index-to-polynomial encoding over `F_q`.
//!
//! An index is written in base `radix = (q - 1) / 2`; its digits, least
//! significant first, are the coefficients of the *base polynomial*. Each of
//! the `2^c` *variants* picks a subset of the `c` low digit positions, adds
//! `radix` to those coefficients and borrows one from the next higher
//! coefficient, which is the shape a carry leaves behind when two base
//! polynomials are added. The integer value of every variant is therefore
//! still the origin index.

use alloc::vec;
use alloc::vec::Vec;

use crate::prime::is_prime;
use crate::sparse::Index;

/// Largest supported degree bound.
pub const MAX_DEGREE: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("modulus {0} must be a prime with 5 <= q < 2^32")]
    BadModulus(u64),
    #[error("degree bound {0} must lie in 1..={MAX_DEGREE}")]
    BadDegree(u32),
    #[error("index {index} needs more than {digits} digits in base {radix}")]
    NotEncodable { index: Index, digits: u32, radix: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodingParams {
    q: u64,
    c: u32,
    radix: u64,
}

impl EncodingParams {
    pub fn new(q: u64, c: u32) -> Result<Self, EncodeError> {
        if !(5..1 << 32).contains(&q) || !is_prime(q) {
            return Err(EncodeError::BadModulus(q));
        }
        if !(1..=MAX_DEGREE).contains(&c) {
            return Err(EncodeError::BadDegree(c));
        }
        Ok(Self {
            q,
            c,
            radix: (q - 1) / 2,
        })
    }

    /// The prime modulus and the length of every reduced vector.
    pub fn q(&self) -> u64 {
        self.q
    }

    /// Degree bound: polynomials carry `c + 1` coefficients.
    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn radix(&self) -> u64 {
        self.radix
    }

    /// Number of variants per index, `2^c`.
    pub fn variant_count(&self) -> usize {
        1 << self.c
    }

    /// `radix^(c+1)`, saturating. Every index strictly below it is encodable.
    pub fn capacity(&self) -> u128 {
        let mut cap: u128 = 1;
        for _ in 0..=self.c {
            cap = cap.saturating_mul(self.radix as u128);
        }
        cap
    }

    pub fn can_encode(&self, index: Index) -> bool {
        (index as u128) < self.capacity()
    }
}

/// A polynomial of degree at most `c` derived from an index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexPolynomial {
    /// Residues in `[0, q)`, coefficient of `X^0` first; always `c + 1` long.
    pub coefficients: Vec<u64>,
    pub origin_index: Index,
    /// Bit `k` set: coefficient `k` gained `radix` and coefficient `k + 1` lost one.
    pub variant_mask: u32,
}

impl IndexPolynomial {
    /// Coefficients as integers before reduction mod `q`.
    ///
    /// Variant coefficients lie in `[-1, q - 2]`, so the residue `q - 1` can
    /// only stand for `-1`.
    pub fn integer_coefficients(&self, params: &EncodingParams) -> Vec<i64> {
        self.coefficients
            .iter()
            .map(|&r| if r == params.q - 1 { -1 } else { r as i64 })
            .collect()
    }

    /// `Σ coefficient_k · radix^k` over the integers.
    pub fn decode(&self, params: &EncodingParams) -> i128 {
        self.integer_coefficients(params)
            .iter()
            .rev()
            .fold(0i128, |acc, &k| acc * params.radix as i128 + k as i128)
    }
}

/// Base-`radix` digits of `index`, least significant first, padded to `c + 1`.
pub fn digits(index: Index, params: &EncodingParams) -> Result<Vec<u64>, EncodeError> {
    if !params.can_encode(index) {
        return Err(EncodeError::NotEncodable {
            index,
            digits: params.c + 1,
            radix: params.radix,
        });
    }
    let mut out = Vec::with_capacity(params.c as usize + 1);
    let mut rest = index;
    for _ in 0..=params.c {
        out.push(rest % params.radix);
        rest /= params.radix;
    }
    Ok(out)
}

pub fn encode_base(index: Index, params: &EncodingParams) -> Result<IndexPolynomial, EncodeError> {
    Ok(IndexPolynomial {
        coefficients: digits(index, params)?,
        origin_index: index,
        variant_mask: 0,
    })
}

/// All `2^c` variants of a base polynomial, ordered by mask (mask 0 is the base).
pub fn make_variants(base: &IndexPolynomial, params: &EncodingParams) -> Vec<IndexPolynomial> {
    debug_assert_eq!(base.variant_mask, 0);
    let q = params.q;
    (0..params.variant_count() as u32)
        .map(|mask| {
            let mut coefficients = base.coefficients.clone();
            for k in 0..params.c as usize {
                if mask >> k & 1 == 1 {
                    coefficients[k] = (coefficients[k] + params.radix) % q;
                    coefficients[k + 1] = (coefficients[k + 1] + q - 1) % q;
                }
            }
            IndexPolynomial {
                coefficients,
                origin_index: base.origin_index,
                variant_mask: mask,
            }
        })
        .collect()
}

/// Horner evaluation at `a` in `F_q`.
pub fn evaluate(p: &IndexPolynomial, a: u64, params: &EncodingParams) -> u64 {
    eval_coefficients(&p.coefficients, a, params.q)
}

pub(crate) fn eval_coefficients(coefficients: &[u64], a: u64, q: u64) -> u64 {
    coefficients
        .iter()
        .rev()
        .fold(0u64, |acc, &k| (acc * a + k) % q)
}

/// Evaluation of the base polynomial of `index` at `a`, without materializing it.
pub fn evaluate_index(index: Index, a: u64, params: &EncodingParams) -> Result<u64, EncodeError> {
    Ok(eval_coefficients(&digits(index, params)?, a, params.q))
}

/// Per-mask shift of a variant's value relative to its base polynomial at `a`.
///
/// The shift is `(radix - a) · Σ_{k in mask} a^k`, which does not depend on
/// the origin index: variant `m` of any index lands at
/// `base(a) + offsets[m] mod q`.
pub fn variant_offsets(a: u64, params: &EncodingParams) -> Vec<u64> {
    let q = params.q;
    let factor = (params.radix + q - a % q) % q;
    let mut powers = Vec::with_capacity(params.c as usize);
    let mut pw = 1u64;
    for _ in 0..params.c {
        powers.push(pw);
        pw = pw * (a % q) % q;
    }
    let mut offsets = vec![0u64; params.variant_count()];
    for mask in 1..offsets.len() {
        let low = mask.trailing_zeros() as usize;
        let sum = (offsets[mask & (mask - 1)] + factor * powers[low]) % q;
        offsets[mask] = sum;
    }
    offsets
}

/// The variant of `i + j` that equals `base(i) + base(j)` coefficient-wise.
///
/// Its set bits are the digit positions where base-`radix` addition of `i`
/// and `j` produces a carry.
pub fn aligned_variant_of_sum(
    i: Index,
    j: Index,
    params: &EncodingParams,
) -> Result<u32, EncodeError> {
    let sum = i.checked_add(j).ok_or(EncodeError::NotEncodable {
        index: Index::MAX,
        digits: params.c + 1,
        radix: params.radix,
    })?;
    let di = digits(i, params)?;
    let dj = digits(j, params)?;
    digits(sum, params)?;
    let mut mask = 0u32;
    let mut carry = 0u64;
    for k in 0..params.c as usize {
        carry = u64::from(di[k] + dj[k] + carry >= params.radix);
        mask |= (carry as u32) << k;
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p13() -> EncodingParams {
        EncodingParams::new(13, 2).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(EncodingParams::new(12, 2).is_err());
        assert!(EncodingParams::new(3, 2).is_err());
        assert!(EncodingParams::new(13, 0).is_err());
        let p = p13();
        assert_eq!(p.radix(), 6);
        assert_eq!(p.capacity(), 216);
        assert!(p.can_encode(215));
        assert!(!p.can_encode(216));
    }

    #[test]
    fn base_encoding() {
        let p = p13();
        assert_eq!(encode_base(95, &p).unwrap().coefficients, [5, 3, 2]);
        assert_eq!(encode_base(0, &p).unwrap().coefficients, [0, 0, 0]);
        assert_eq!(encode_base(11, &p).unwrap().coefficients, [5, 1, 0]);
        assert!(matches!(
            encode_base(216, &p),
            Err(EncodeError::NotEncodable { index: 216, .. })
        ));
    }

    #[test]
    fn variants_of_95() {
        let p = p13();
        let vs = make_variants(&encode_base(95, &p).unwrap(), &p);
        let coeffs: Vec<_> = vs.iter().map(|v| v.coefficients.clone()).collect();
        assert_eq!(
            coeffs,
            [vec![5, 3, 2], vec![11, 2, 2], vec![5, 9, 1], vec![11, 8, 1]]
        );
        for v in &vs {
            assert_eq!(v.decode(&p), 95);
        }
    }

    #[test]
    fn variants_of_zero_wrap() {
        let p = p13();
        let vs = make_variants(&encode_base(0, &p).unwrap(), &p);
        let coeffs: Vec<_> = vs.iter().map(|v| v.coefficients.clone()).collect();
        assert_eq!(
            coeffs,
            [vec![0, 0, 0], vec![6, 12, 0], vec![0, 6, 12], vec![6, 5, 12]]
        );
        assert_eq!(vs[3].integer_coefficients(&p), [6, 5, -1]);
        for v in &vs {
            assert_eq!(v.decode(&p), 0);
        }
    }

    #[test]
    fn horner() {
        let p = p13();
        let base = encode_base(95, &p).unwrap();
        assert_eq!(evaluate(&base, 0, &p), 5);
        assert_eq!(evaluate(&base, 1, &p), 10);
        assert_eq!(evaluate(&base, 2, &p), 6);
    }

    #[test]
    fn offsets_match_variants() {
        let p = p13();
        for index in [0, 1, 95, 215] {
            let base = encode_base(index, &p).unwrap();
            let vs = make_variants(&base, &p);
            for a in 0..13 {
                let off = variant_offsets(a, &p);
                let b = evaluate(&base, a, &p);
                for (m, v) in vs.iter().enumerate() {
                    assert_eq!(evaluate(v, a, &p), (b + off[m]) % 13);
                }
            }
        }
    }

    #[test]
    fn aligned_variant_examples() {
        let p = p13();
        assert_eq!(aligned_variant_of_sum(0, 0, &p).unwrap(), 0);
        assert_eq!(aligned_variant_of_sum(5, 5, &p).unwrap(), 0b01);
        let vs = make_variants(&encode_base(10, &p).unwrap(), &p);
        assert_eq!(vs[1].coefficients, [10, 0, 0]);
        assert!(aligned_variant_of_sum(200, 100, &p).is_err());
    }
}
