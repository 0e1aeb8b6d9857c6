//! Stateless keyed randomness.
//!
//! Every uniform the model consumes is a pure function of
//! `(seed, stream tag, key)`, where the key always starts with the
//! origin site of the particle (or the site itself for site-keyed
//! streams). Two processes can therefore share randomness exactly on a
//! chosen region of origins and be independent elsewhere, which is what
//! the coupling constructions require. Sequential generators cannot do
//! this: two processes consume draws in different orders.
//!
//! The generator is counter-based and documented bit-exactly so runs
//! reproduce across platforms:
//!
//! * state starts as `mix64(seed ^ tag domain constant)`;
//! * each key word `w` is absorbed as `state = mix64(state ^ w * GAMMA)`;
//! * the output is `mix64(state)`;
//! * key words are, in order: the three origin coordinates as 64-bit
//!   two's complement, then the stream-specific indices (particle index
//!   `j`, jump count `n`, attempt `k`, ...);
//! * a uniform in [0,1) takes the top 53 bits: `(out >> 11) * 2^-53`;
//! * a walk step in dimension d is `floor(u * 2d)` into the direction
//!   table `[+e1, -e1, +e2, -e2, +e3, -e3]`, computed in integer
//!   arithmetic as `(mantissa * 2d) >> 53`.
//!
//! Delay variables live on [0,1) rather than the closed interval; the
//! endpoint has probability zero and the half-open convention keeps the
//! jump rule `L <= p` unambiguous at p = 1, where a particle must jump
//! every step.

use crate::lattice::{mix64, mix_absorb, Site, SiteSet};
use std::sync::Arc;

/// Domain constants separating the streams. Part of the reproducibility
/// contract; do not reorder or renumber.
const WALK_DOMAIN: u64 = 0x77a3_5e1b_90c4_2d17;
const DELAY_DOMAIN: u64 = 0x4cf0_9ad3_6b21_88e5;
const ETA_DOMAIN: u64 = 0xd1c8_02f7_53ae_4b69;
const INIT_DOMAIN: u64 = 0x2be4_71c9_0d5f_a633;
const TIE_DOMAIN: u64 = 0x9f56_3d82_eb07_c1a1;

/// Independent randomness streams. `Walk` drives where particles move,
/// `Delay` drives when, `Eta` the sleeping counts, `Init` is reserved
/// for randomized initial configurations, and `Tie` feeds the coin-flip
/// tie-breaker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Walk,
    Delay,
    Eta,
    Init,
    Tie,
}

impl StreamTag {
    fn domain(self) -> u64 {
        match self {
            StreamTag::Walk => WALK_DOMAIN,
            StreamTag::Delay => DELAY_DOMAIN,
            StreamTag::Eta => ETA_DOMAIN,
            StreamTag::Init => INIT_DOMAIN,
            StreamTag::Tie => TIE_DOMAIN,
        }
    }
}

/// Identity of a particle: `j`-th particle originating at `origin`.
/// This pair keys all of the particle's randomness for the lifetime of
/// a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParticleId {
    pub origin: Site,
    pub index: u32,
}

impl ParticleId {
    pub fn new(origin: Site, index: u32) -> Self {
        debug_assert!(index >= 1, "particle indices start at 1");
        ParticleId { origin, index }
    }
}

/// A single walk step: one of the 2d signed basis vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub axis: usize,
    pub sign: i32,
}

/// A pure map from (stream tag, key) to uniforms. Optionally overrides
/// the seed for keys whose origin lies in a region, which is the
/// primitive behind the region-split couplings.
#[derive(Debug, Clone)]
pub struct RandomField {
    seed: u64,
    split: Option<Arc<RegionSplit>>,
}

#[derive(Debug)]
struct RegionSplit {
    region: SiteSet,
    region_seed: u64,
}

impl RandomField {
    pub fn new(seed: u64) -> Self {
        RandomField { seed, split: None }
    }

    /// Field that answers keys with origin in `region` from
    /// `region_seed` and every other key from `seed`.
    pub fn with_override(seed: u64, region: SiteSet, region_seed: u64) -> Self {
        RandomField {
            seed,
            split: Some(Arc::new(RegionSplit {
                region,
                region_seed,
            })),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn override_region(&self) -> Option<&SiteSet> {
        self.split.as_deref().map(|s| &s.region)
    }

    #[inline]
    fn seed_for(&self, origin: &Site) -> u64 {
        match &self.split {
            Some(s) if s.region.contains(origin) => s.region_seed,
            _ => self.seed,
        }
    }

    /// Raw 64-bit output for a key. Exposed so audits can compare
    /// bit-identity across coupled fields.
    pub fn raw_u64(&self, tag: StreamTag, origin: Site, words: &[u64]) -> u64 {
        let mut h = mix64(self.seed_for(&origin) ^ tag.domain());
        for c in &origin.coords {
            h = mix_absorb(h, *c as i64 as u64);
        }
        for &w in words {
            h = mix_absorb(h, w);
        }
        mix64(h)
    }

    /// Uniform on [0,1), deterministic in the full key.
    pub fn uniform(&self, tag: StreamTag, origin: Site, words: &[u64]) -> f64 {
        u64_to_unit(self.raw_u64(tag, origin, words))
    }

    /// Direction of the `n`-th jump of particle `p` in dimension `dim`:
    /// uniform over the 2d neighbors.
    pub fn walk_step(&self, p: ParticleId, n: u64, dim: usize) -> Step {
        let raw = self.raw_u64(StreamTag::Walk, p.origin, &[p.index as u64, n]);
        let mantissa = raw >> 11;
        // exact floor(u * 2d) with u = mantissa / 2^53
        let idx = ((mantissa * (2 * dim as u64)) >> 53) as usize;
        Step {
            axis: idx / 2,
            sign: if idx % 2 == 0 { 1 } else { -1 },
        }
    }

    /// The delay variable L^{x,j}_{n,k}: the k-th attempt to leave the
    /// position reached after n jumps. The induced holding time at
    /// threshold p is geometric(p).
    pub fn delay(&self, p: ParticleId, n: u64, k: u64) -> f64 {
        self.uniform(StreamTag::Delay, p.origin, &[p.index as u64, n, k])
    }
}

#[inline]
pub(crate) fn u64_to_unit(raw: u64) -> f64 {
    (raw >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Two fields that agree bit-for-bit on every key whose origin lies
/// outside `sigma` and are statistically independent on keys whose
/// origin lies inside. The two region seeds are derived from
/// `independent_seed` so the pair is also independent of the shared
/// stream.
pub fn make_coupled_pair(
    shared_seed: u64,
    independent_seed: u64,
    sigma: &SiteSet,
) -> (RandomField, RandomField) {
    if sigma.is_empty() {
        return (RandomField::new(shared_seed), RandomField::new(shared_seed));
    }
    let sa = mix64(independent_seed ^ 0x5157_a5d1_0c3e_9b71);
    let sb = mix64(independent_seed ^ 0xc2f6_3310_8ed9_4f05);
    (
        RandomField::with_override(shared_seed, sigma.clone(), sa),
        RandomField::with_override(shared_seed, sigma.clone(), sb),
    )
}
