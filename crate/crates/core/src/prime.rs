//! Deterministic 64-bit primality and prime generation.

use alloc::vec;
use alloc::vec::Vec;

/// Miller-Rabin witnesses that are sufficient for every `n < 2^64`.
const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Exact primality test for any `u64`. `0` and `1` are not prime.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
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

/// Smallest prime `>= n`, if one fits in 64 bits.
pub fn next_prime(n: u64) -> Option<u64> {
    if n <= 2 {
        return Some(2);
    }
    let mut k = n | 1;
    loop {
        if is_prime(k) {
            return Some(k);
        }
        k = k.checked_add(2)?;
    }
}

/// Primes up to `limit` inclusive by the sieve of Eratosthenes.
pub(crate) fn small_primes(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

pub(crate) fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut x = 1u64 << (64 - n.leading_zeros()).div_ceil(2);
    loop {
        let y = (x + n / x) / 2;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// The first `count` primes `>= lower_bound`, ascending.
///
/// Candidates come from a segmented sieve and each survivor is confirmed
/// with [`is_prime`]. Returns fewer primes only if the 64-bit range runs out.
pub fn gen_primes(count: usize, lower_bound: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let ln = (64 - lower_bound.max(2).leading_zeros()) as u64 * 7 / 10 + 1;
    let window = (count as u64).saturating_mul(ln).saturating_mul(2).clamp(1 << 10, 1 << 24);
    let mut lo = lower_bound;
    while out.len() < count {
        let hi = lo.saturating_add(window);
        let sieve_primes = small_primes(isqrt(hi));
        let mut composite = vec![false; (hi - lo) as usize];
        for &p in &sieve_primes {
            let Some(first) = lo.div_ceil(p).checked_mul(p) else {
                continue;
            };
            let mut m = first.max(p * p);
            while m < hi {
                composite[(m - lo) as usize] = true;
                match m.checked_add(p) {
                    Some(next) => m = next,
                    None => break,
                }
            }
        }
        for (offset, &is_comp) in composite.iter().enumerate() {
            let n = lo + offset as u64;
            if !is_comp && n >= 2 && is_prime(n) {
                out.push(n);
                if out.len() == count {
                    return out;
                }
            }
        }
        if hi == u64::MAX {
            break;
        }
        lo = hi;
    }
    out
}
