//! Seedable randomness with no hidden state.
//!
//! Two sources back the partitioner:
//! - [`draw`], a counter-based mixer: a pure function of
//!   `(seed, domain, key, counter)`.
//! - [`PolyHash`], random degree-5 polynomials over GF(2⁶¹ − 1). Evaluations
//!   at any six distinct keys are jointly uniform over the choice of
//!   coefficients.

use thiserror::Error;

pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Number of coefficients, so the family is 6-wise independent.
pub const HASH_DEGREE_PLUS_ONE: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RandomError {
    #[error("range {0} must be in [1, 2^32]")]
    BadRange(u64),
}

/// Purpose of a draw; separates streams that share a seed and key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    VertexLabel = 1,
    EdgeChoice = 2,
    HashCoefficients = 3,
    EdgeDigest = 4,
    Generator = 5,
    Baseline = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub domain: Domain,
    pub key: u64,
}

impl StreamKey {
    pub fn new(seed: u64, domain: Domain, key: u64) -> Self {
        Self { seed, domain, key }
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn absorb(state: u64, word: u64) -> u64 {
    mix64(state ^ mix64(word.wrapping_add(GOLDEN)))
}

/// The `counter`-th 64-bit value of the stream named by `sk`.
#[inline]
pub fn draw(sk: StreamKey, counter: u64) -> u64 {
    let h = mix64(sk.seed.wrapping_add(GOLDEN));
    let h = absorb(h, sk.domain as u64);
    let h = absorb(h, sk.key);
    absorb(h, counter)
}

/// Order-sensitive 64-bit digest of an edge's endpoints.
#[inline]
pub fn edge_digest(src: u64, dst: u64) -> u64 {
    absorb(absorb(Domain::EdgeDigest as u64, src), dst)
}

#[inline]
fn mul_mod_m61(a: u64, b: u64) -> u64 {
    let x = a as u128 * b as u128;
    let folded = (x as u64 & MERSENNE_61) + (x >> 61) as u64;
    reduce_m61(folded)
}

#[inline]
fn reduce_m61(x: u64) -> u64 {
    let y = (x & MERSENNE_61) + (x >> 61);
    if y >= MERSENNE_61 {
        y - MERSENNE_61
    } else {
        y
    }
}

/// `⌊value · m / modulus⌋`. Each bucket's probability differs from `1/m` by
/// at most `m / modulus`.
pub fn scale_to_range(value: u64, m: u64, modulus: u64) -> Result<u64, RandomError> {
    if m == 0 || m > 1 << 32 {
        return Err(RandomError::BadRange(m));
    }
    Ok(((value as u128 * m as u128) / modulus as u128) as u64)
}

/// [`scale_to_range`] for values of the default field.
pub fn to_range(value: u64, m: u64) -> Result<u64, RandomError> {
    scale_to_range(value, m, MERSENNE_61)
}

/// A degree-5 polynomial over a prime field; coefficients in ascending
/// order of power.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolyHash {
    modulus: u64,
    coeffs: [u64; HASH_DEGREE_PLUS_ONE],
}

impl PolyHash {
    /// Over GF(2⁶¹ − 1). Coefficients are reduced into the field.
    pub fn new(coeffs: [u64; HASH_DEGREE_PLUS_ONE]) -> Self {
        Self {
            modulus: MERSENNE_61,
            coeffs: coeffs.map(reduce_m61),
        }
    }

    /// Over an arbitrary prime field; used to check independence
    /// exhaustively on small moduli.
    pub fn with_modulus(modulus: u64, coeffs: [u64; HASH_DEGREE_PLUS_ONE]) -> Self {
        debug_assert!(crate::finite_plane::is_prime(modulus));
        Self {
            modulus,
            coeffs: coeffs.map(|c| c % modulus),
        }
    }

    /// Coefficients derived from `(seed, index)`.
    pub fn from_seed(seed: u64, index: u64) -> Self {
        let sk = StreamKey::new(seed, Domain::HashCoefficients, index);
        let mut coeffs = [0u64; HASH_DEGREE_PLUS_ONE];
        for (c, slot) in coeffs.iter_mut().enumerate() {
            // reject the few values ≥ P so coefficients are exactly uniform
            let mut counter = (c as u64) << 32;
            let value = loop {
                let v = draw(sk, counter) >> 3;
                if v < MERSENNE_61 {
                    break v;
                }
                counter += 1;
            };
            *slot = value;
        }
        Self::new(coeffs)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coeffs(&self) -> &[u64; HASH_DEGREE_PLUS_ONE] {
        &self.coeffs
    }

    /// Horner evaluation at `key mod P`.
    #[inline]
    pub fn eval(&self, key: u64) -> u64 {
        if self.modulus == MERSENNE_61 {
            let x = reduce_m61(key);
            self.coeffs
                .iter()
                .rev()
                .fold(0u64, |acc, &c| reduce_m61(mul_mod_m61(acc, x) + c))
        } else {
            let p = self.modulus as u128;
            let x = key as u128 % p;
            self.coeffs
                .iter()
                .rev()
                .fold(0u128, |acc, &c| (acc * x + c as u128) % p) as u64
        }
    }

    pub fn to_range(&self, value: u64, m: u64) -> Result<u64, RandomError> {
        scale_to_range(value, m, self.modulus)
    }
}

/// A stream of uniform draws.
pub trait RandomSource {
    /// Uniform integer in `[0, m)`, `m ≥ 1`.
    fn below(&mut self, m: usize) -> usize;
    /// Uniform real in `[0, 1)`.
    fn unit(&mut self) -> f64;
}

/// Successive counters of one [`draw`] stream.
#[derive(Debug, Clone)]
pub struct CounterStream {
    key: StreamKey,
    counter: u64,
}

impl CounterStream {
    pub fn new(key: StreamKey) -> Self {
        Self { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = draw(self.key, self.counter);
        self.counter += 1;
        v
    }
}

impl RandomSource for CounterStream {
    fn below(&mut self, m: usize) -> usize {
        ((self.next_u64() as u128 * m as u128) >> 64) as usize
    }

    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// The `k`-th draw is the `k`-th hash of the family evaluated at one key.
#[derive(Debug, Clone)]
pub struct HashStream<'a> {
    hashes: &'a [PolyHash],
    key: u64,
    next: usize,
}

impl<'a> HashStream<'a> {
    pub fn new(hashes: &'a [PolyHash], key: u64) -> Self {
        Self {
            hashes,
            key,
            next: 0,
        }
    }

    fn next_value(&mut self) -> (u64, u64) {
        let h = self
            .hashes
            .get(self.next)
            .expect("hash stream drew more values than its family provides");
        self.next += 1;
        (h.eval(self.key), h.modulus())
    }
}

impl RandomSource for HashStream<'_> {
    fn below(&mut self, m: usize) -> usize {
        let (v, p) = self.next_value();
        scale_to_range(v, m as u64, p).expect("range fits in 32 bits") as usize
    }

    fn unit(&mut self) -> f64 {
        let (v, p) = self.next_value();
        v as f64 / p as f64
    }
}

/// Independent hashes `from_seed(seed, base + k)` for `k < count`.
pub fn hash_family(seed: u64, base: u64, count: usize) -> Vec<PolyHash> {
    (0..count as u64)
        .map(|k| PolyHash::from_seed(seed, base + k))
        .collect()
}
