//! Seedable, counter-based random streams.
//!
//! Every stream is a ChaCha20 keystream (RFC 8439 block function, 64-bit
//! block counter, stream id 0). A stream is identified by one 64-bit seed;
//! the 256-bit key is the first four outputs of SplitMix64 started at that
//! seed, each written little-endian. Words are consumed as little-endian
//! `u64`s in keystream order.
//!
//! Seeds for independent purposes are split from a master seed with
//! [`derive_seed`], so generation parallelizes without shared state.
//!
//! Variates, all built only from [`Stream::next_u64`]:
//!
//! * uniform `[0, 1)`: `(x >> 11) * 2^-53`
//! * uniform `(0, 1)`: `((x >> 11) + 0.5) * 2^-53`
//! * integer below `bound`: Lemire's multiply-shift with rejection
//! * sign: `+1` if the top bit of `x` is clear, else `-1`
//! * standard normal: Box–Muller on two open uniforms `u1, u2`, returning
//!   `r cos θ` and caching `r sin θ` for the next call, where
//!   `r = sqrt(-2 ln u1)`, `θ = 2π u2`. Transcendentals come from `libm`
//!   so streams are bit-identical across platforms.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Purpose tags mixed into derived seeds.
pub mod purpose {
    pub const FEATURES: u64 = 1;
    pub const GROUND_TRUTH: u64 = 2;
    pub const CORRUPTIONS: u64 = 3;
    pub const EVALUATION: u64 = 4;
    pub const CELL: u64 = 5;
}

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `mix64(mix64(master ^ mix64(tag + γ)) ^ mix64(index + 2γ))` with
/// wrapping arithmetic and `γ` = [`GOLDEN_GAMMA`].
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let tagged = mix64(master ^ mix64(tag.wrapping_add(GOLDEN_GAMMA)));
    mix64(tagged ^ mix64(index.wrapping_add(GOLDEN_GAMMA.wrapping_mul(2))))
}

/// 64-bit FNV-1a, used to hash textual cell keys into seeds.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

fn splitmix64_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    mix64(*state)
}

#[derive(Clone, Debug)]
pub struct Stream {
    inner: ChaCha20Rng,
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64_next(&mut sm).to_le_bytes());
        }
        Self::from_key(key)
    }

    pub fn from_key(key: [u8; 32]) -> Self {
        Self {
            inner: ChaCha20Rng::from_seed(key),
            spare_normal: None,
        }
    }

    pub fn derived(master: u64, tag: u64, index: u64) -> Self {
        Self::new(derive_seed(master, tag, index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn open_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`. `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(bound);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.open_uniform();
        let u2 = self.open_uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }
}
