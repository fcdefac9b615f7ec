//! Keyed random streams and the bit-sliced Bernoulli word fill.
//!
//! Every random quantity in a trial is drawn from a generator keyed by
//! `(seed, stream_id, domain, coordinate)`. Keys are hashed with SplitMix64
//! and seed a xoshiro256++ state, so two coordinates never share a stream and
//! the output does not depend on which thread fills which row.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// The generator type handed to samplers and solvers.
pub type StreamRng = Xoshiro256PlusPlus;

/// Identifies one independent trial: a base seed plus a stream index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub stream_id: u64,
}

/// Separates the uses of randomness inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    HiddenBit = 0,
    X = 1,
    Y = 2,
    Solver = 3,
    Permutation = 4,
    Pair = 5,
    /// Fresh draws made by reductions that build synthetic sample sets.
    Auxiliary = 6,
    /// Instance generators that need randomness (hard draws).
    Generator = 7,
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl StreamKey {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        StreamKey { seed, stream_id }
    }

    /// Chained hash of the full key. Each component passes through the mixer
    /// before the next is folded in, so nearby keys land far apart.
    pub fn derive(&self, domain: Domain, coordinate: u64) -> u64 {
        let mut h = splitmix64(self.seed);
        h = splitmix64(h ^ self.stream_id);
        h = splitmix64(h ^ domain as u64);
        splitmix64(h ^ coordinate)
    }

    pub fn rng(&self, domain: Domain, coordinate: u64) -> StreamRng {
        StreamRng::seed_from_u64(self.derive(domain, coordinate))
    }
}

/// Fixed-point threshold for a probability: `round(p * 2^32)`.
#[inline]
pub fn threshold(p: f64) -> u64 {
    (p * 4_294_967_296.0).round() as u64
}

/// Returns a word whose 64 lanes are independent Bernoulli draws with
/// success probability `t / 2^32`.
///
/// Each lane compares a 32-bit uniform against `t`, most significant bit
/// first. One random word supplies the current bit of all 64 uniforms, and
/// the loop stops as soon as every lane is decided, which takes about
/// `log2(64) + 2` words on average and a single word when `p = 1/2`.
#[inline]
pub fn bernoulli_word<R: RngCore + ?Sized>(rng: &mut R, t: u64) -> u64 {
    if t == 0 {
        return 0;
    }
    if t >= 1 << 32 {
        return !0;
    }
    let mut result = 0u64;
    let mut undecided = !0u64;
    let mut level = 31i32;
    while level >= 0 && undecided != 0 {
        // Lanes still tied with t on every remaining bit compare equal or
        // greater once only zero bits of t are left.
        if t & ((1u64 << (level + 1)) - 1) == 0 {
            break;
        }
        let u = rng.next_u64();
        if (t >> level) & 1 == 1 {
            result |= undecided & !u;
            undecided &= u;
        } else {
            undecided &= !u;
        }
        level -= 1;
    }
    result
}

/// Fills `words` with Bernoulli(p) bits, masking anything past `bits`.
pub fn fill_bernoulli<R: RngCore + ?Sized>(rng: &mut R, p: f64, words: &mut [u64], bits: usize) {
    let t = threshold(p);
    for w in words.iter_mut() {
        *w = bernoulli_word(rng, t);
    }
    mask_tail(words, bits);
}

/// Fills `words` with fair coin bits, masking anything past `bits`.
pub fn fill_fair<R: RngCore + ?Sized>(rng: &mut R, words: &mut [u64], bits: usize) {
    for w in words.iter_mut() {
        *w = rng.next_u64();
    }
    mask_tail(words, bits);
}

#[inline]
pub fn mask_tail(words: &mut [u64], bits: usize) {
    let rem = bits % 64;
    if rem != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << rem) - 1;
        }
    }
}

/// One fair coin.
#[inline]
pub fn coin<R: RngCore + ?Sized>(rng: &mut R) -> bool {
    rng.next_u64() >> 63 == 1
}
