// Exact integer convolution by number-theoretic transforms over three
// NTT-friendly primes, recombined with Garner's CRT. The product of the
// primes exceeds 2^86, so every result below 2^62 is recovered exactly.

const PRIMES: [u64; 3] = [998_244_353, 167_772_161, 469_762_049];
const PRIMITIVE_ROOT: u64 = 3;
/// Smallest two-adicity among the primes (998244353 - 1 = 119 * 2^23).
pub const MAX_LOG_LEN: u32 = 23;

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

fn inv_mod(x: u64, p: u64) -> u64 {
    pow_mod(x, p - 2, p)
}

fn transform(a: &mut [u64], p: u64, invert: bool) {
    let n = a.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j ^= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w_len = pow_mod(PRIMITIVE_ROOT, (p - 1) / len as u64, p);
        if invert {
            w_len = inv_mod(w_len, p);
        }
        let half = len / 2;
        // Twiddles for this stage, reused by every block.
        let mut twiddles = Vec::with_capacity(half);
        let mut w = 1u64;
        for _ in 0..half {
            twiddles.push(w);
            w = w * w_len % p;
        }
        for block in a.chunks_exact_mut(len) {
            let (lo, hi) = block.split_at_mut(half);
            for ((x, y), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                let u = *x;
                let v = *y * w % p;
                *x = if u + v >= p { u + v - p } else { u + v };
                *y = if u >= v { u - v } else { u + p - v };
            }
        }
        len <<= 1;
    }
    if invert {
        let n_inv = inv_mod(n as u64, p);
        for x in a.iter_mut() {
            *x = *x * n_inv % p;
        }
    }
}

fn convolve_mod(u: &[u64], v: &[u64], p: u64, size: usize) -> Vec<u64> {
    let mut fa: Vec<u64> = u.iter().map(|&x| x % p).collect();
    let mut fb: Vec<u64> = v.iter().map(|&x| x % p).collect();
    fa.resize(size, 0);
    fb.resize(size, 0);
    transform(&mut fa, p, false);
    transform(&mut fb, p, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = *x * y % p;
    }
    transform(&mut fa, p, true);
    fa
}

/// Cyclic-free product of `u` and `v`. Caller guarantees every true entry
/// is below the CRT modulus and the output length fits the transform.
pub fn convolve(u: &[u64], v: &[u64]) -> Vec<u64> {
    let out_len = u.len() + v.len() - 1;
    let size = out_len.next_power_of_two();
    assert!(size <= 1 << MAX_LOG_LEN, "transform length {size} too large");
    let [p0, p1, p2] = PRIMES;
    let r0 = convolve_mod(u, v, p0, size);
    let r1 = convolve_mod(u, v, p1, size);
    let r2 = convolve_mod(u, v, p2, size);
    let inv_p0_mod_p1 = inv_mod(p0 % p1, p1);
    let inv_p0p1_mod_p2 = inv_mod(p0 * p1 % p2, p2);
    (0..out_len)
        .map(|i| {
            let (a0, a1, a2) = (r0[i], r1[i], r2[i]);
            let t1 = (a1 + p1 - a0 % p1) % p1 * inv_p0_mod_p1 % p1;
            let x01 = a0 as u128 + p0 as u128 * t1 as u128;
            let x01_mod_p2 = (x01 % p2 as u128) as u64;
            let t2 = (a2 + p2 - x01_mod_p2) % p2 * inv_p0p1_mod_p2 % p2;
            let x = x01 + (p0 as u128 * p1 as u128) * t2 as u128;
            x as u64
        })
        .collect()
}
