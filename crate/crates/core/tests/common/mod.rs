//! Shared helpers for the integration suites: a deterministic scenario
//! generator and chi-square critical values.

use frogsim::lattice::Site;
use frogsim::scenario::{
    EtaDistribution, InitEntry, InitTag, InitialConfig, Mode, Scenario, TieRule,
};

/// Chi-square critical values at significance 1e-3 by degrees of
/// freedom (standard tables).
pub fn chi2_crit_1e3(dof: usize) -> f64 {
    match dof {
        1 => 10.828,
        2 => 13.816,
        3 => 16.266,
        4 => 18.467,
        5 => 20.515,
        15 => 37.697,
        _ => panic!("no tabulated critical value for {dof} dof"),
    }
}

pub fn chi2_statistic(observed: &[u64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected.iter())
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}

/// Small deterministic generator for test-side choices, independent of
/// the library's keyed field.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.wrapping_add(0x9E37_79B9_7F4A_7C15))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

pub fn random_eta(rng: &mut TestRng) -> EtaDistribution {
    match rng.below(6) {
        0 => EtaDistribution::Constant(rng.below(3)),
        1 => EtaDistribution::Constant(1),
        2 => EtaDistribution::Bernoulli(0.2 + 0.8 * rng.unit()),
        3 => EtaDistribution::Poisson(0.3 + 1.2 * rng.unit()),
        4 => EtaDistribution::Geometric(0.4 + 0.6 * rng.unit()),
        _ => EtaDistribution::Zeta(2.5 + rng.unit()),
    }
}

fn random_tie(rng: &mut TestRng) -> TieRule {
    match rng.below(4) {
        0 => TieRule::Type1Wins,
        1 => TieRule::Type2Wins,
        2 => TieRule::Parity,
        _ => TieRule::CoinFlip,
    }
}

fn site_in_box(rng: &mut TestRng, dim: usize, half: i64) -> Site {
    let span = 2 * half + 1;
    let mut c = [0i32; 3];
    for coord in c.iter_mut().take(dim) {
        *coord = (rng.below(span as u64) as i64 - half) as i32;
    }
    Site::new(c)
}

/// A random valid scenario: d in {1,2}, mixed eta, p thresholds in
/// [0.15, 1], one- or two-type, small distinct initial sets.
pub fn random_scenario(seed: u64, horizon: u32, force_two_type: bool) -> Scenario {
    let mut rng = TestRng::new(seed);
    let dimension = 1 + rng.below(2) as usize;
    let two_type = force_two_type || rng.below(2) == 0;
    let p_a = 0.15 + 0.85 * rng.unit();
    let p_b = 0.15 + 0.85 * rng.unit();
    let (p1, p2) = if p_a <= p_b { (p_a, p_b) } else { (p_b, p_a) };

    let mut entries: Vec<InitEntry> = Vec::new();
    let mut used = std::collections::BTreeSet::new();
    let n_a = 1 + rng.below(2) as usize;
    let n_b = if two_type { 1 + rng.below(2) as usize } else { 0 };
    while entries.len() < n_a + n_b {
        let site = site_in_box(&mut rng, dimension, 3);
        if !used.insert(site) {
            continue;
        }
        let tag = if entries.len() < n_a {
            InitTag::One
        } else {
            InitTag::Two
        };
        entries.push(InitEntry {
            site,
            count: 1 + rng.below(2) as u32,
            tag,
        });
    }

    let sc = Scenario {
        dimension,
        mode: if two_type { Mode::TwoType } else { Mode::OneType },
        p1,
        p2: if two_type { Some(p2) } else { None },
        eta: random_eta(&mut rng),
        init: InitialConfig::new(entries),
        tie_rule: random_tie(&mut rng),
        horizon,
        seed: rng.next_u64(),
    };
    sc.validate().expect("generator yields valid scenarios");
    sc
}
