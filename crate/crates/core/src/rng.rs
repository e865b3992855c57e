//! Counter-based splittable random streams.
//!
//! A [`Stream`] is a `(key, counter)` pair. The `n`-th output is
//! `mix64(key + n * GAMMA)`, where `mix64` is the SplitMix64 finalizer
//! (Steele, Lea and Flood, "Fast splittable pseudorandom number generators").
//! Splitting hashes a label into the key, so child streams depend only on the
//! parent key and the label, never on how many draws the parent has made.
//! Every operation is integer arithmetic except the normal sampler, which uses
//! `ln`, `sqrt` and `cos`; outputs are therefore bit-identical everywhere for
//! integer and uniform draws.
//!
//! Bounded integers use the multiply-high reduction without rejection, so
//! every draw consumes exactly one 64-bit output. The bias is below
//! `n / 2^64` and is irrelevant for the bounds used here (at most 15625).

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const SPLIT_SALT: u64 = 0xD1B5_4A32_D192_ED03;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ GAMMA),
            counter: 0,
        }
    }

    /// Independent child stream identified by `label`. Does not advance `self`.
    pub fn split(&self, label: u64) -> Stream {
        let k = mix64(self.key ^ mix64(label.wrapping_add(SPLIT_SALT)));
        Stream {
            key: mix64(k.wrapping_add(GAMMA)),
            counter: 0,
        }
    }

    /// Number of 64-bit outputs consumed so far.
    pub fn draws(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform integer in `0..n`. `n` must be nonzero.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller; consumes two outputs per call.
    pub fn normal(&mut self) -> f64 {
        // 1 - u lies in (0, 1], so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
