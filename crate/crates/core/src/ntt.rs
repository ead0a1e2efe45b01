//! Exact integer correlation through number-theoretic transforms.
//!
//! Inputs are reduced modulo up to three 62-bit NTT-friendly primes, the
//! products are transformed back and the result is rebuilt by mixed-radix
//! CRT. The number of primes is picked from an `l1`-norm bound so that every
//! output is recovered exactly as a signed 128-bit integer.

use alloc::vec;
use alloc::vec::Vec;

/// Primes `k·2^32 + 1` below `2^62`, with a generator of the multiplicative group.
const PRIMES: [(u64, u64); 3] = [
    (4_611_685_941_117_976_577, 3),
    (4_611_685_692_009_873_409, 19),
    (4_611_685_606_110_527_489, 3),
];

/// Transform sizes up to `2^MAX_LOG_LEN` are supported by every prime.
pub const MAX_LOG_LEN: u32 = 32;

/// Outputs must stay strictly below this in magnitude.
pub const MAGNITUDE_LIMIT: u128 = 1 << 126;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorrelationError {
    #[error("correlation magnitude bound {0} exceeds the exact range")]
    MagnitudeExceeded(u128),
    #[error("input lengths {0} and {1} do not match")]
    LengthMismatch(usize, usize),
    #[error("transform length 2^{0} is not supported")]
    TooLong(u32),
}

#[derive(Debug, Clone, Copy)]
struct Montgomery {
    p: u64,
    neg_inv: u64,
    r2: u64,
}

impl Montgomery {
    fn new(p: u64) -> Self {
        let mut inv = p;
        for _ in 0..5 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r = ((1u128 << 64) % p as u128) as u64;
        let r2 = ((r as u128 * r as u128) % p as u128) as u64;
        Self {
            p,
            neg_inv: inv.wrapping_neg(),
            r2,
        }
    }

    #[inline(always)]
    fn reduce(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline(always)]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a as u128 * b as u128)
    }

    #[inline(always)]
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline(always)]
    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    fn mont(&self, x: u64) -> u64 {
        self.mul(x, self.r2)
    }

    fn unmont(&self, x: u64) -> u64 {
        self.reduce(x as u128)
    }

    fn pow(&self, base: u64, mut exp: u64) -> u64 {
        let mut acc = self.mont(1);
        let mut b = self.mont(base);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    fn residue(&self, x: i128) -> u64 {
        self.mont(x.rem_euclid(self.p as i128) as u64)
    }
}

/// Transform tables for one prime and one length.
#[derive(Debug, Clone)]
struct PrimePlan {
    m: Montgomery,
    /// `roots[h + j] = w_{2h}^j` in Montgomery form.
    roots: Vec<u64>,
    n_inv: u64,
}

impl PrimePlan {
    fn new(p: u64, generator: u64, log_n: u32) -> Self {
        let m = Montgomery::new(p);
        let n = 1usize << log_n;
        let mut roots = vec![0u64; n.max(2)];
        let mut h = 1usize;
        while h < n {
            let w = m.pow(generator, (p - 1) / (2 * h as u64));
            let mut cur = m.mont(1);
            for j in 0..h {
                roots[h + j] = cur;
                cur = m.mul(cur, w);
            }
            h *= 2;
        }
        let n_inv = m.mont(pow_plain(n as u64 % p, p - 2, p));
        Self { m, roots, n_inv }
    }

    fn forward(&self, a: &mut [u64]) {
        let n = a.len();
        bit_reverse(a);
        let m = &self.m;
        let mut h = 1;
        while h < n {
            for block in a.chunks_exact_mut(2 * h) {
                let (lo, hi) = block.split_at_mut(h);
                for ((u, v), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(&self.roots[h..2 * h]) {
                    let t = m.mul(*v, w);
                    let x = *u;
                    *u = m.add(x, t);
                    *v = m.sub(x, t);
                }
            }
            h *= 2;
        }
    }

    /// Inverse transform, scaled by `1/n`, leaving plain (non-Montgomery) residues.
    fn inverse(&self, a: &mut [u64]) {
        self.forward(a);
        a[1..].reverse();
        for x in a.iter_mut() {
            *x = self.m.unmont(self.m.mul(*x, self.n_inv));
        }
    }
}

fn pow_plain(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * b as u128) % p as u128) as u64;
        }
        b = ((b as u128 * b as u128) % p as u128) as u64;
        e >>= 1;
    }
    acc
}

fn bit_reverse(a: &mut [u64]) {
    let n = a.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
}

/// Number of primes whose product exceeds `4 · bound`, or `None` past the exact range.
pub fn primes_for_bound(bound: u128) -> Option<usize> {
    if bound >= MAGNITUDE_LIMIT {
        return None;
    }
    // each prime exceeds 2^61
    Some(match bound {
        b if b < 1 << 59 => 1,
        b if b < 1 << 120 => 2,
        _ => 3,
    })
}

/// Sum of absolute values, saturating.
pub fn l1_norm(a: &[i128]) -> u128 {
    a.iter()
        .fold(0u128, |acc, x| acc.saturating_add(x.unsigned_abs()))
}

/// Transformed input ready for pointwise products.
#[derive(Debug, Clone)]
pub struct Spectrum {
    per_prime: Vec<Vec<u64>>,
    l1: u128,
}

/// Reusable transform plan for correlations of a fixed shape.
#[derive(Debug, Clone)]
pub struct Correlator {
    plans: Vec<PrimePlan>,
    log_n: u32,
    a_len: usize,
    b_len: usize,
}

impl Correlator {
    /// Plan for `L[j] = Σ_i a[j+i]·b[i]` with `a` of length `a_len` and `b` of
    /// length `b_len`, using `primes` moduli (1 to 3).
    pub fn new(a_len: usize, b_len: usize, primes: usize) -> Result<Self, CorrelationError> {
        let conv_len = (a_len + b_len).saturating_sub(1).max(1);
        let log_n = conv_len.next_power_of_two().trailing_zeros();
        if log_n > MAX_LOG_LEN {
            return Err(CorrelationError::TooLong(log_n));
        }
        let plans = PRIMES[..primes.clamp(1, 3)]
            .iter()
            .map(|&(p, g)| PrimePlan::new(p, g, log_n))
            .collect();
        Ok(Self {
            plans,
            log_n,
            a_len,
            b_len,
        })
    }

    pub fn prime_count(&self) -> usize {
        self.plans.len()
    }

    fn transform(&self, values: impl Iterator<Item = i128> + Clone, l1: u128) -> Spectrum {
        let n = 1usize << self.log_n;
        let per_prime = self
            .plans
            .iter()
            .map(|plan| {
                let mut buf = vec![0u64; n];
                for (slot, x) in buf.iter_mut().zip(values.clone()) {
                    *slot = plan.m.residue(x);
                }
                plan.forward(&mut buf);
                buf
            })
            .collect();
        Spectrum { per_prime, l1 }
    }

    /// Spectrum of the sliding operand.
    pub fn spectrum_a(&self, a: &[i128]) -> Result<Spectrum, CorrelationError> {
        if a.len() != self.a_len {
            return Err(CorrelationError::LengthMismatch(a.len(), self.a_len));
        }
        Ok(self.transform(a.iter().copied(), l1_norm(a)))
    }

    /// Spectrum of the fixed operand (stored reversed).
    pub fn spectrum_b(&self, b: &[i128]) -> Result<Spectrum, CorrelationError> {
        if b.len() != self.b_len {
            return Err(CorrelationError::LengthMismatch(b.len(), self.b_len));
        }
        Ok(self.transform(b.iter().rev().copied(), l1_norm(b)))
    }

    /// `Σ sign · corr(a, b)` over the terms, as the raw linear convolution of
    /// length `a_len + b_len - 1` (before index shifting).
    fn combined_conv(
        &self,
        terms: &[(i8, &Spectrum, &Spectrum)],
    ) -> Result<(Vec<Vec<u64>>, u128), CorrelationError> {
        let bound = terms.iter().fold(0u128, |acc, (_, a, b)| {
            acc.saturating_add(a.l1.saturating_mul(b.l1))
        });
        let needed = primes_for_bound(bound).ok_or(CorrelationError::MagnitudeExceeded(bound))?;
        if needed > self.plans.len() {
            return Err(CorrelationError::MagnitudeExceeded(bound));
        }
        let n = 1usize << self.log_n;
        let residues = self
            .plans
            .iter()
            .enumerate()
            .map(|(k, plan)| {
                let m = &plan.m;
                let mut acc = vec![0u64; n];
                for &(sign, a, b) in terms {
                    for ((slot, &x), &y) in acc.iter_mut().zip(&a.per_prime[k]).zip(&b.per_prime[k]) {
                        let prod = m.mul(x, y);
                        *slot = if sign >= 0 { m.add(*slot, prod) } else { m.sub(*slot, prod) };
                    }
                }
                plan.inverse(&mut acc);
                acc
            })
            .collect();
        Ok((residues, bound))
    }

    /// Signed sum of linear correlations: `out[j] = Σ sign · Σ_i a[j+i]·b[i]`
    /// for `j` in `0..a_len`.
    pub fn linear(&self, terms: &[(i8, &Spectrum, &Spectrum)]) -> Result<Vec<i128>, CorrelationError> {
        let (residues, _) = self.combined_conv(terms)?;
        let shift = self.b_len.saturating_sub(1);
        let crt = Crt::new(residues.len());
        Ok((0..self.a_len)
            .map(|j| crt.signed(residues.iter().map(|r| r[j + shift])))
            .collect())
    }

    /// Signed sum of cyclic correlations `out[s] = Σ sign · Σ_m a[(s+m) mod q]·b[m]`.
    /// Requires `a_len == b_len == q`.
    pub fn cyclic(&self, terms: &[(i8, &Spectrum, &Spectrum)]) -> Result<Vec<i128>, CorrelationError> {
        if self.a_len != self.b_len {
            return Err(CorrelationError::LengthMismatch(self.a_len, self.b_len));
        }
        let q = self.a_len;
        let (residues, _) = self.combined_conv(terms)?;
        let crt = Crt::new(residues.len());
        let primes: Vec<u64> = self.plans.iter().map(|p| p.m.p).collect();
        Ok((0..q)
            .map(|s| {
                crt.signed(residues.iter().zip(&primes).map(|(r, &p)| {
                    let hi = r[q - 1 + s];
                    if s == 0 {
                        hi
                    } else {
                        let sum = hi + r[s - 1];
                        if sum >= p {
                            sum - p
                        } else {
                            sum
                        }
                    }
                }))
            })
            .collect())
    }
}

/// Mixed-radix reconstruction of a signed value from its residues.
struct Crt {
    k: usize,
    m: [u64; 3],
    inv_m1_mod_m2: u64,
    inv_m1m2_mod_m3: u64,
}

impl Crt {
    fn new(k: usize) -> Self {
        let m = [PRIMES[0].0, PRIMES[1].0, PRIMES[2].0];
        let inv_m1_mod_m2 = pow_plain(m[0] % m[1], m[1] - 2, m[1]);
        let m1m2_mod_m3 = ((m[0] as u128 * m[1] as u128) % m[2] as u128) as u64;
        let inv_m1m2_mod_m3 = pow_plain(m1m2_mod_m3, m[2] - 2, m[2]);
        Self {
            k,
            m,
            inv_m1_mod_m2,
            inv_m1m2_mod_m3,
        }
    }

    fn signed(&self, mut r: impl Iterator<Item = u64>) -> i128 {
        let m = &self.m;
        let mulmod = |a: u64, b: u64, p: u64| ((a as u128 * b as u128) % p as u128) as u64;
        let x1 = r.next().unwrap_or(0);
        if self.k == 1 {
            return if x1 > m[0] / 2 {
                x1 as i128 - m[0] as i128
            } else {
                x1 as i128
            };
        }
        let r2 = r.next().unwrap_or(0);
        let a2 = mulmod((r2 + m[1] - x1 % m[1]) % m[1], self.inv_m1_mod_m2, m[1]);
        let low = x1 as u128 + m[0] as u128 * a2 as u128;
        if self.k == 2 {
            let modulus = m[0] as u128 * m[1] as u128;
            return if a2 > m[1] / 2 {
                low.wrapping_sub(modulus) as i128
            } else {
                low as i128
            };
        }
        let r3 = r.next().unwrap_or(0);
        let low_mod = (low % m[2] as u128) as u64;
        let a3 = mulmod((r3 + m[2] - low_mod) % m[2], self.inv_m1m2_mod_m3, m[2]);
        let m12 = m[0] as u128 * m[1] as u128;
        let value = low.wrapping_add(m12.wrapping_mul(a3 as u128));
        if a3 > m[2] / 2 {
            value.wrapping_sub(m12.wrapping_mul(m[2] as u128)) as i128
        } else {
            value as i128
        }
    }
}

/// Exact cyclic correlation `C[s] = Σ_m a[(s+m) mod q]·b[m]`.
pub fn cyclic_correlation(a: &[i128], b: &[i128]) -> Result<Vec<i128>, CorrelationError> {
    if a.len() != b.len() {
        return Err(CorrelationError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let bound = l1_norm(a).saturating_mul(l1_norm(b));
    let k = primes_for_bound(bound).ok_or(CorrelationError::MagnitudeExceeded(bound))?;
    let plan = Correlator::new(a.len(), b.len(), k)?;
    let (sa, sb) = (plan.spectrum_a(a)?, plan.spectrum_b(b)?);
    plan.cyclic(&[(1, &sa, &sb)])
}

/// Exact linear correlation `L[j] = Σ_i a[j+i]·b[i]` for `j` in `0..a.len()`,
/// with `a` treated as zero past its end.
pub fn linear_correlation(a: &[i128], b: &[i128]) -> Result<Vec<i128>, CorrelationError> {
    if a.is_empty() || b.is_empty() {
        return Ok(vec![0; a.len()]);
    }
    let bound = l1_norm(a).saturating_mul(l1_norm(b));
    let k = primes_for_bound(bound).ok_or(CorrelationError::MagnitudeExceeded(bound))?;
    let plan = Correlator::new(a.len(), b.len(), k)?;
    let (sa, sb) = (plan.spectrum_a(a)?, plan.spectrum_b(b)?);
    plan.linear(&[(1, &sa, &sb)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn direct_cyclic(a: &[i128], b: &[i128]) -> Vec<i128> {
        let q = a.len();
        (0..q)
            .map(|s| (0..q).map(|m| a[(s + m) % q] * b[m]).sum())
            .collect()
    }

    fn delta(q: usize, at: usize) -> Vec<i128> {
        let mut v = vec![0; q];
        v[at] = 1;
        v
    }

    #[test]
    fn montgomery_roundtrip() {
        for &(p, _) in &PRIMES {
            let m = Montgomery::new(p);
            for x in [0u64, 1, 2, p - 1, 12345678901234567] {
                assert_eq!(m.unmont(m.mont(x)), x % p);
            }
            let (a, b) = (p - 2, 987654321987654321 % p);
            assert_eq!(
                m.unmont(m.mul(m.mont(a), m.mont(b))),
                ((a as u128 * b as u128) % p as u128) as u64
            );
            // generator order check: g^((p-1)/2) = -1
            let g = PRIMES.iter().find(|e| e.0 == p).unwrap().1;
            assert_eq!(pow_plain(g, (p - 1) / 2, p), p - 1);
        }
    }

    #[test]
    fn deltas() {
        assert_eq!(cyclic_correlation(&delta(1, 0), &delta(1, 0)).unwrap(), [1]);
        assert_eq!(cyclic_correlation(&delta(7, 0), &delta(7, 0)).unwrap(), delta(7, 0));
        assert_eq!(cyclic_correlation(&delta(5, 3), &delta(5, 1)).unwrap(), delta(5, 2));
        assert_eq!(cyclic_correlation(&delta(5, 1), &delta(5, 3)).unwrap(), delta(5, 3));
    }

    #[test]
    fn random_q101_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a: Vec<i128> = (0..101).map(|_| rng.gen_range(-1000..=1000)).collect();
            let b: Vec<i128> = (0..101).map(|_| rng.gen_range(-1000..=1000)).collect();
            assert_eq!(cyclic_correlation(&a, &b).unwrap(), direct_cyclic(&a, &b));
        }
    }

    #[test]
    fn every_prime_count_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // magnitudes chosen to need one, two and three primes
        for &mag in &[1i128 << 20, 1i128 << 50, 1i128 << 58] {
            let q = 37;
            let a: Vec<i128> = (0..q).map(|_| rng.gen_range(-mag..=mag)).collect();
            let b: Vec<i128> = (0..q).map(|_| rng.gen_range(-mag..=mag)).collect();
            assert_eq!(cyclic_correlation(&a, &b).unwrap(), direct_cyclic(&a, &b));
            for k in 1..=3 {
                let plan = Correlator::new(q, q, k).unwrap();
                let (sa, sb) = (plan.spectrum_a(&a).unwrap(), plan.spectrum_b(&b).unwrap());
                let bound = l1_norm(&a) * l1_norm(&b);
                match plan.cyclic(&[(1, &sa, &sb)]) {
                    Ok(out) => {
                        assert!(primes_for_bound(bound).unwrap() <= k);
                        assert_eq!(out, direct_cyclic(&a, &b));
                    }
                    Err(e) => assert_eq!(e, CorrelationError::MagnitudeExceeded(bound)),
                }
            }
        }
    }

    #[test]
    fn signed_combination() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = 29;
        let v: Vec<Vec<i128>> = (0..4)
            .map(|_| (0..q).map(|_| rng.gen_range(-50..=50)).collect())
            .collect();
        let plan = Correlator::new(q, q, 1).unwrap();
        let s: Vec<Spectrum> = v
            .iter()
            .enumerate()
            .map(|(i, x)| if i % 2 == 0 { plan.spectrum_a(x).unwrap() } else { plan.spectrum_b(x).unwrap() })
            .collect();
        let got = plan.cyclic(&[(1, &s[0], &s[1]), (-1, &s[2], &s[3])]).unwrap();
        let (x, y) = (direct_cyclic(&v[0], &v[1]), direct_cyclic(&v[2], &v[3]));
        let want: Vec<i128> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn linear_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<i128> = (0..300).map(|_| rng.gen_range(-9..=9)).collect();
        let b: Vec<i128> = (0..77).map(|_| rng.gen_range(-9..=9)).collect();
        let want: Vec<i128> = (0..a.len())
            .map(|j| (0..b.len()).filter(|i| j + i < a.len()).map(|i| a[j + i] * b[i]).sum())
            .collect();
        assert_eq!(linear_correlation(&a, &b).unwrap(), want);
    }

    #[test]
    fn bound_checks() {
        let big = vec![1i128 << 100; 4];
        assert!(matches!(
            cyclic_correlation(&big, &big),
            Err(CorrelationError::MagnitudeExceeded(_))
        ));
        assert!(matches!(
            cyclic_correlation(&[1, 2], &[1]),
            Err(CorrelationError::LengthMismatch(2, 1))
        ));
    }
}
