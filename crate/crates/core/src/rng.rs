//! Deterministic random streams for the Monte Carlo oracle and the
//! experiment harness.
//!
//! The generator is splitmix64: a 64-bit counter advanced by a fixed odd
//! increment and passed through an avalanche finalizer. It is trivially
//! seedable, platform-independent, and splittable by hashing (seed, index)
//! pairs, which is exactly what per-trajectory reproducibility needs. Not
//! cryptographic, and not meant to be.

/// Golden-ratio increment of the splitmix64 counter.
pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer; bijective on u64.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the i-th child stream of a master seed: one finalizer application
/// on the jumped counter, identical to the i-th raw output of the master
/// stream.
pub fn derive_stream_seed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA)))
}

/// One independent random stream.
#[derive(Clone, Debug)]
pub struct SplitMix {
    state: u64,
    /// Box–Muller produces normals in pairs; the second waits here.
    spare: Option<f64>,
}

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self { state: seed, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in (0, 1]: the top 53 bits shifted into the mantissa,
    /// plus one ulp so that 0 is excluded and log() downstream is safe.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via Box–Muller (cosine branch first, sine branch
    /// cached as the spare).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * t.sin());
        r * t.cos()
    }
}
