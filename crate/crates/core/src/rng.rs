//! Counter-based random numbers.
//!
//! Every variate is a pure function of `(seed, stream, index)`, so ensembles
//! are reproducible bit for bit no matter how the index space is split
//! across threads, and draw `k` never depends on how many draws were made
//! before it.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps 64 random bits to the open interval (0, 1).
#[inline]
fn to_open01(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// A named random stream derived from a seed.
///
/// Distinct `(seed, stream)` pairs give statistically independent sequences;
/// within a stream, `uniform(k)` is random access by counter.
#[derive(Debug, Clone, Copy)]
pub struct Stream {
    base: u64,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let b = mix64(seed ^ 0x5851_F42D_4C95_7F2D);
        Stream {
            base: mix64(b.wrapping_add(stream.wrapping_mul(GOLDEN))),
        }
    }

    /// Uniform variate in (0, 1) for counter `k`.
    #[inline]
    pub fn uniform(&self, k: u64) -> f64 {
        to_open01(mix64(
            self.base
                .wrapping_add(k.wrapping_add(1).wrapping_mul(GOLDEN)),
        ))
    }

    /// Two independent standard normal variates for pair counter `p`
    /// (Box-Muller; the two branches of one radius/angle draw are exactly
    /// i.i.d.). Internally consumes the uniform counters (2p, 2p+1);
    /// normal and uniform draws from the same stream should not be mixed.
    #[inline]
    pub fn normal_pair(&self, p: u64) -> (f64, f64) {
        let u1 = self.uniform(2 * p);
        let u2 = self.uniform(2 * p + 1);
        let r = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        (r * angle.cos(), r * angle.sin())
    }

    /// Standard normal variate for counter `k`; random access into the
    /// pair sequence of [`Stream::normal_pair`].
    ///
    /// May differ from [`NormalSeq`] in the final bit: when only one branch
    /// of a pair is live the compiler lowers sin/cos separately instead of
    /// as a fused sincos. Path ensembles therefore always consume noise
    /// through [`NormalSeq`], which is exactly reproducible on its own.
    #[inline]
    pub fn normal(&self, k: u64) -> f64 {
        let pair = self.normal_pair(k >> 1);
        if k & 1 == 0 {
            pair.0
        } else {
            pair.1
        }
    }
}

/// Sequential reader of a stream's normal sequence. Produces exactly the
/// values of `stream.normal(0), normal(1), ...` while computing each
/// Box-Muller pair once.
pub struct NormalSeq {
    stream: Stream,
    next_k: u64,
    pending: f64,
}

impl NormalSeq {
    pub fn new(stream: Stream) -> Self {
        NormalSeq {
            stream,
            next_k: 0,
            pending: 0.0,
        }
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> f64 {
        let k = self.next_k;
        self.next_k += 1;
        if k & 1 == 0 {
            let (a, b) = self.stream.normal_pair(k >> 1);
            self.pending = b;
            a
        } else {
            self.pending
        }
    }
}

/// Stream ids used across the crate, kept in one place so purposes never
/// collide.
pub mod streams {
    /// Coefficient draws for Monte Carlo marginals.
    pub const COEFFICIENT: u64 = 0x11;
    /// Extra coefficient terms of an N-term forcing model; add the term index.
    pub const COEFFICIENT_TERM: u64 = 0x1000;
    /// Wiener increments; add the path index.
    pub const WIENER_PATH: u64 = 0x2000_0000;
    /// Multiplicative noise for synthetic data generation.
    pub const SYNTHETIC_NOISE: u64 = 0x31;
}
