//! Counter-based deterministic random streams.
//!
//! Every random draw in this crate comes from a [`Stream`] keyed by
//! `(master seed, purpose tag, extra coordinates...)`. A stream is a pure
//! function of its key and an internal draw counter, so:
//!
//! * generation order is reproducible regardless of thread scheduling
//!   (each parallel unit of work derives its own stream from the master seed),
//! * a value tied to a coordinate (for example the oracle noise at iteration
//!   `t`, slot `s`) can be re-derived at any time by rebuilding the stream for
//!   that coordinate, which is how per-iteration noise freezing works.
//!
//! The generator is the splitmix64 finalizer applied to `key + GOLDEN * ctr`,
//! a standard counter-mode construction: the output at counter `i` is a
//! strong 64-bit hash of the key and `i`, and distinct keys give independent
//! streams for practical purposes.

/// Odd constant (2^64 / phi) used to space counters; same role as in
/// splitmix64.
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Finalizer from splitmix64 (Stafford variant 13): a bijective avalanche
/// mix on 64 bits.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Purpose tags keep streams for unrelated uses disjoint even when the other
/// key coordinates collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Design-matrix entries during synthetic generation.
    DataMatrix,
    /// Support positions of the ground-truth vector.
    DataSupport,
    /// Nonzero values of the ground-truth vector.
    DataValues,
    /// Additive observation noise.
    DataNoise,
    /// Initial Frank-Wolfe vertex (shared by every fitter so equal seeds
    /// start from the same iterate).
    InitVertex,
    /// Frozen oracle noise, keyed additionally by `(t, s mod d)`.
    OracleNoise,
    /// Per-preparation oracle failure coin.
    OracleFailure,
    /// Minimum-finding run outcomes.
    MinFind,
    /// Rejection-sampler proposals.
    Proposal,
    /// Laplace noise of the classical private baseline.
    CdpNoise,
    /// Audit helpers (test iterates, Monte Carlo draws).
    Audit,
    /// Per-cell seed fan-out in experiment drivers.
    CellSeed,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::DataMatrix => 0x01,
            Purpose::DataSupport => 0x02,
            Purpose::DataValues => 0x03,
            Purpose::DataNoise => 0x04,
            Purpose::InitVertex => 0x05,
            Purpose::OracleNoise => 0x06,
            Purpose::OracleFailure => 0x07,
            Purpose::MinFind => 0x08,
            Purpose::Proposal => 0x09,
            Purpose::CdpNoise => 0x0a,
            Purpose::Audit => 0x0b,
            Purpose::CellSeed => 0x0c,
        }
    }
}

/// A deterministic stream of draws identified by its key.
#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    ctr: u64,
}

impl Stream {
    /// Stream for `(seed, purpose)`.
    pub fn new(seed: u64, purpose: Purpose) -> Self {
        Self::keyed(seed, purpose, &[])
    }

    /// Stream for `(seed, purpose, extra...)`; use the extras to pin a stream
    /// to a coordinate such as `(iteration, slot)`.
    pub fn keyed(seed: u64, purpose: Purpose, extra: &[u64]) -> Self {
        let mut key = mix64(seed ^ mix64(purpose.tag().wrapping_mul(GOLDEN)));
        for (i, part) in extra.iter().enumerate() {
            // Position-dependent fold so keyed(a, [x, y]) != keyed(a, [y, x]).
            key = mix64(key ^ mix64(part.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN))));
        }
        Stream { key, ctr: 0 }
    }

    /// Derives a child seed; used to fan the master seed out to experiment
    /// cells before each cell builds its own streams.
    pub fn fork_seed(seed: u64, purpose: Purpose, extra: &[u64]) -> u64 {
        Stream::keyed(seed, purpose, extra).next_u64()
    }

    /// Next raw 64-bit value.
    pub fn next_u64(&mut self) -> u64 {
        let v = mix64(self.key.wrapping_add(GOLDEN.wrapping_mul(self.ctr)));
        self.ctr += 1;
        v
    }

    /// Uniform in `[0, 1)` with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)` by rejection, so all residues are
    /// equally likely.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Bernoulli with success probability `p`.
    pub fn coin(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        // next_f64 can return exactly 0; flip to (0, 1] for the log.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Centered Laplace draw with the given scale (inverse CDF).
    pub fn laplace(&mut self, scale: f64) -> f64 {
        // u in (-1/2, 1/2]; sign(u) * ln(1 - 2|u|) inverts the Laplace CDF.
        let u = 0.5 - self.next_f64();
        -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
    }
}
