//! Empirical validation of the limit statements: shape estimation and
//! comparison, coexistence-proxy statistics, moderate-deviation and
//! discovery-lifetime checks.

use crate::engine::{EngineState, Snapshot};
use crate::lattice::{hausdorff, sphere_count, ScaledSet, Site, SiteSet};
use crate::randomfield::{ParticleId, RandomField};
use crate::scenario::Scenario;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("snapshot must be non-empty")]
    EmptySnapshot,
    #[error("scale must be at least 1")]
    ZeroScale,
    #[error("activation threshold K must be at least 1")]
    ZeroThreshold,
    #[error("alpha must lie in (0.5, 1), got {0}")]
    BadAlpha(f64),
    #[error("estimates have different dimensions")]
    DimensionMismatch,
}

/// Empirical stand-in for the asymptotic shape: the discovered set at
/// time n scaled by 1/n, with its extremal L1 radii and symmetry
/// defect.
#[derive(Debug, Clone)]
pub struct ShapeEstimate {
    pub scaled: ScaledSet,
    /// Largest r such that every lattice point of the L1 ball of radius
    /// r*n belongs to the set; reported as a multiple of 1/n.
    pub inner_radius: f64,
    /// Smallest r with the scaled set inside the L1 ball of radius r.
    pub outer_radius: f64,
    pub sym_defect: f64,
}

#[derive(Debug, Serialize)]
pub struct ShapeReport {
    pub n: u32,
    pub sites: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub sym_defect: f64,
}

impl ShapeEstimate {
    pub fn report(&self) -> ShapeReport {
        ShapeReport {
            n: self.scaled.scale(),
            sites: self.scaled.len(),
            inner_radius: self.inner_radius,
            outer_radius: self.outer_radius,
            sym_defect: self.sym_defect,
        }
    }
}

/// Computes the shape estimate of a discovered set at time `n`.
pub fn shape_estimate(sites: &SiteSet, n: u32) -> Result<ShapeEstimate, MeasureError> {
    if sites.is_empty() {
        return Err(MeasureError::EmptySnapshot);
    }
    if n == 0 {
        return Err(MeasureError::ZeroScale);
    }
    let dim = sites.dim();

    // norm histogram; the inner radius is the largest integer R whose
    // full ball is present, checked shell by shell against the exact
    // shell cardinalities
    let max_norm = sites.iter().map(|s| s.l1_norm()).max().unwrap_or(0);
    let mut shell_counts = vec![0u64; max_norm as usize + 1];
    for s in sites.iter() {
        shell_counts[s.l1_norm() as usize] += 1;
    }
    let mut inner = 0u32;
    for m in 0..=max_norm {
        if shell_counts[m as usize] == sphere_count(m, dim) {
            inner = m;
        } else {
            break;
        }
    }

    let scaled = ScaledSet::new(sites, n);
    let sym_defect = crate::lattice::symmetry_defect(&scaled).expect("set checked non-empty");
    Ok(ShapeEstimate {
        inner_radius: inner as f64 / n as f64,
        outer_radius: max_norm as f64 / n as f64,
        scaled,
        sym_defect,
    })
}

pub fn shape_estimate_from_snapshot(snap: &Snapshot, dim: usize) -> Result<ShapeEstimate, MeasureError> {
    shape_estimate(&snap.site_set(dim), snap.time)
}

/// Hausdorff distance between two shape estimates (L1 ground metric,
/// exact on the unscaled lattices).
pub fn compare_shapes(a: &ShapeEstimate, b: &ShapeEstimate) -> Result<f64, MeasureError> {
    if a.scaled.dim() != b.scaled.dim() {
        return Err(MeasureError::DimensionMismatch);
    }
    hausdorff(&a.scaled, &b.scaled).map_err(|_| MeasureError::EmptySnapshot)
}

/// Outcome of one two-type replica under the coexistence proxy.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoexistenceOutcome {
    pub count_type1: u64,
    pub count_type2: u64,
    pub coexists: bool,
}

/// Aggregate coexistence-proxy frequency over replicas, with a 95%
/// Wilson interval. The proxy for "activates infinitely many" is
/// "activates at least K particles by the horizon"; K and the horizon
/// are part of the statistic and must be reported with it.
#[derive(Debug, Clone, Serialize)]
pub struct CoexistenceStat {
    pub k_threshold: u64,
    pub horizon: u32,
    pub replicas: usize,
    pub coexist_count: usize,
    pub frequency: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub outcomes: Vec<CoexistenceOutcome>,
}

/// 95% Wilson score interval for a binomial proportion. With zero
/// successes the lower bound is exactly 0 (and symmetrically at the
/// top), so `lower > 0` is equivalent to "at least one success".
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 {
        0.0
    } else {
        ((center - spread) / denom).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        ((center + spread) / denom).min(1.0)
    };
    (lo, hi)
}

/// Builds the coexistence statistic from per-replica activation totals
/// (type 1, type 2) at the horizon.
pub fn coexistence_stat(
    replica_counts: &[(u64, u64)],
    k_threshold: u64,
    horizon: u32,
) -> Result<CoexistenceStat, MeasureError> {
    if k_threshold < 1 {
        return Err(MeasureError::ZeroThreshold);
    }
    let outcomes: Vec<CoexistenceOutcome> = replica_counts
        .iter()
        .map(|&(a, b)| CoexistenceOutcome {
            count_type1: a,
            count_type2: b,
            coexists: a >= k_threshold && b >= k_threshold,
        })
        .collect();
    let coexist_count = outcomes.iter().filter(|o| o.coexists).count();
    let replicas = outcomes.len();
    let frequency = if replicas == 0 {
        0.0
    } else {
        coexist_count as f64 / replicas as f64
    };
    let (wilson_low, wilson_high) = wilson_interval(coexist_count, replicas);
    Ok(CoexistenceStat {
        k_threshold,
        horizon,
        replicas,
        coexist_count,
        frequency,
        wilson_low,
        wilson_high,
        outcomes,
    })
}

/// Fraction of `trials` independent n-step simple random walks whose
/// endpoint lies outside the L1 ball of radius n^alpha. Walks are keyed
/// by particle index, so the check is deterministic in the field.
pub fn mod_dev_check(
    field: &RandomField,
    alpha: f64,
    n: u32,
    trials: u32,
    dim: usize,
) -> Result<f64, MeasureError> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(MeasureError::BadAlpha(alpha));
    }
    let radius = (n as f64).powf(alpha);
    let mut outside = 0u32;
    for j in 1..=trials {
        let id = ParticleId::new(Site::ORIGIN, j);
        let mut pos = Site::ORIGIN;
        for step_idx in 0..n as u64 {
            let s = field.walk_step(id, step_idx, dim);
            pos = pos.offset(s.axis, s.sign);
        }
        if pos.l1_norm() as f64 > radius {
            outside += 1;
        }
    }
    Ok(outside as f64 / trials.max(1) as f64)
}

/// Histogram of per-particle discovery lifetimes (time of last
/// discovery minus activation time) plus the staleness fraction: the
/// share of particles whose most recent discovery event fell in the
/// final quarter of the run. Particles that never discovered anything
/// have lifetime 0 and never count as stale.
#[derive(Debug, Clone, Serialize)]
pub struct LifetimeStats {
    /// histogram[l] = number of particles with lifetime l
    pub histogram: Vec<u64>,
    pub particles: usize,
    pub stale_count: usize,
    pub staleness_fraction: f64,
}

pub fn discovery_lifetimes(state: &EngineState, horizon: u32) -> LifetimeStats {
    let cutoff = 3 * horizon as u64;
    let mut histogram = vec![0u64; horizon as usize + 1];
    let mut stale = 0usize;
    for p in state.particles() {
        let lifetime = p.last_discovery - p.activated_at;
        histogram[lifetime as usize] += 1;
        let discovered_something = p.last_discovery > p.activated_at;
        if discovered_something && 4 * p.last_discovery as u64 > cutoff {
            stale += 1;
        }
    }
    let particles = state.particles().len();
    LifetimeStats {
        histogram,
        particles,
        stale_count: stale,
        staleness_fraction: if particles == 0 {
            0.0
        } else {
            stale as f64 / particles as f64
        },
    }
}

/// Medians of the Hausdorff distance between shapes grown from two
/// scenarios, across seed pairs, at each requested time. Used to watch
/// the distance decay as n grows.
pub fn shape_comparison_medians(
    sc_a: &Scenario,
    sc_b: &Scenario,
    seed_pairs: &[(u64, u64)],
    times: &[u32],
) -> Result<Vec<f64>, MeasureError> {
    let mut per_time: Vec<Vec<f64>> = vec![Vec::new(); times.len()];
    for &(sa, sb) in seed_pairs {
        let run_a = crate::engine::run(
            &sc_a.with_seed(sa),
            &RandomField::new(sa),
            times,
            Default::default(),
        )
        .expect("checkpoints within horizon");
        let run_b = crate::engine::run(
            &sc_b.with_seed(sb),
            &RandomField::new(sb),
            times,
            Default::default(),
        )
        .expect("checkpoints within horizon");
        for (i, _) in times.iter().enumerate() {
            let ea = shape_estimate_from_snapshot(&run_a.snapshots[i], sc_a.dimension)?;
            let eb = shape_estimate_from_snapshot(&run_b.snapshots[i], sc_b.dimension)?;
            per_time[i].push(compare_shapes(&ea, &eb)?);
        }
    }
    Ok(per_time.into_iter().map(|v| median(&v)).collect())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaNs in medians"));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// CSV of a scaled point set: integer site coordinates plus the scale,
/// so consumers can divide exactly.
pub fn scaled_set_csv(s: &ScaledSet) -> String {
    let dim = s.dim();
    let mut out = String::new();
    out.push_str(&["x", "x,y", "x,y,z"][dim - 1]);
    out.push_str(",scale\n");
    for site in s.sites() {
        out.push_str(&format!("{},{}\n", site.display(dim), s.scale()));
    }
    out
}

/// CSV of a lifetime histogram: `lifetime,count` rows.
pub fn lifetime_histogram_csv(stats: &LifetimeStats) -> String {
    let mut out = String::from("lifetime,count\n");
    for (l, c) in stats.histogram.iter().enumerate() {
        if *c > 0 {
            out.push_str(&format!("{l},{c}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::l1_ball;

    #[test]
    fn shape_of_exact_ball() {
        let n = 40;
        let ball = l1_ball(n as f64, 2).unwrap();
        let est = shape_estimate(&ball, n).unwrap();
        assert!(est.inner_radius >= 1.0);
        assert!(est.outer_radius <= 1.0 + 2.0 / n as f64);
        assert_eq!(est.sym_defect, 0.0);
    }

    #[test]
    fn shape_of_singleton() {
        let s = SiteSet::from_sites(2, [Site::ORIGIN]);
        let est = shape_estimate(&s, 10).unwrap();
        assert_eq!(est.inner_radius, 0.0);
        assert_eq!(est.outer_radius, 0.0);
        assert_eq!(est.sym_defect, 0.0);
    }

    #[test]
    fn empty_snapshot_rejected() {
        let s = SiteSet::new(2);
        assert_eq!(shape_estimate(&s, 5).unwrap_err(), MeasureError::EmptySnapshot);
    }

    #[test]
    fn inner_radius_drops_when_shell_is_incomplete() {
        let mut ball = l1_ball(5.0, 2).unwrap();
        let mut pruned = SiteSet::new(2);
        for s in ball.sorted() {
            if s != Site::d2(3, 0) {
                pruned.insert(s);
            }
        }
        ball = pruned;
        let est = shape_estimate(&ball, 5).unwrap();
        assert_eq!(est.inner_radius, 2.0 / 5.0);
        assert_eq!(est.outer_radius, 1.0);
    }

    #[test]
    fn compare_exact_balls() {
        let n = 30;
        let a = shape_estimate(&l1_ball(n as f64, 2).unwrap(), n).unwrap();
        let b = shape_estimate(&l1_ball((n - 1) as f64, 2).unwrap(), n).unwrap();
        let d = compare_shapes(&a, &b).unwrap();
        assert!(d <= 1.0 / n as f64 + 1e-12, "distance {d}");
        assert_eq!(compare_shapes(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn coexistence_thresholds() {
        let stat = coexistence_stat(&[(1000, 3)], 10, 100).unwrap();
        assert!(!stat.outcomes[0].coexists);
        let stat = coexistence_stat(&[(50, 50)], 50, 100).unwrap();
        assert!(stat.outcomes[0].coexists);
        assert_eq!(coexistence_stat(&[], 0, 100).unwrap_err(), MeasureError::ZeroThreshold);
    }

    #[test]
    fn wilson_interval_sane() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(100, 100);
        assert!(lo > 0.95);
        assert_eq!(hi, 1.0);
        let (lo, hi) = wilson_interval(1, 200);
        assert!(lo > 0.0, "one success forces a positive lower bound");
        assert!(hi < 0.04);
    }

    #[test]
    fn mod_dev_single_step_never_escapes() {
        let f = RandomField::new(3);
        let frac = mod_dev_check(&f, 0.75, 1, 500, 2).unwrap();
        assert_eq!(frac, 0.0);
    }

    #[test]
    fn mod_dev_is_deterministic() {
        let f = RandomField::new(17);
        let a = mod_dev_check(&f, 0.6, 100, 200, 2).unwrap();
        let b = mod_dev_check(&f, 0.6, 100, 200, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mod_dev_alpha_validated() {
        let f = RandomField::new(1);
        assert!(mod_dev_check(&f, 0.5, 10, 10, 2).is_err());
        assert!(mod_dev_check(&f, 1.0, 10, 10, 2).is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    use crate::engine::{run, EngineState, RunConfig};
    use crate::scenario::{
        EtaDistribution, InitEntry, InitTag, InitialConfig, Mode, Scenario, TieRule,
    };

    fn lone_walker(eta: EtaDistribution, horizon: u32, seed: u64) -> Scenario {
        Scenario {
            dimension: 2,
            mode: Mode::OneType,
            p1: 1.0,
            p2: None,
            eta,
            init: InitialConfig::new(vec![InitEntry {
                site: Site::ORIGIN,
                count: 1,
                tag: InitTag::One,
            }]),
            tie_rule: TieRule::CoinFlip,
            horizon,
            seed,
        }
    }

    #[test]
    fn lifetime_of_single_walker_is_its_last_new_site() {
        let sc = lone_walker(EtaDistribution::Constant(0), 40, 1312);
        let f = RandomField::new(sc.seed);
        let traj = run(&sc, &f, &[], RunConfig::default()).unwrap();
        // independent replay: last step at which the walk entered a
        // site it had never visited before
        let id = ParticleId::new(Site::ORIGIN, 1);
        let mut pos = Site::ORIGIN;
        let mut visited = SiteSet::from_sites(2, [pos]);
        let mut last_new = 0u32;
        for n in 0..40u64 {
            let s = f.walk_step(id, n, 2);
            pos = pos.offset(s.axis, s.sign);
            if visited.insert(pos) {
                last_new = n as u32 + 1;
            }
        }
        let stats = discovery_lifetimes(&traj.final_state, 40);
        assert_eq!(stats.particles, 1);
        assert_eq!(stats.histogram[last_new as usize], 1);
        assert!(last_new > 0, "a 40-step walk discovers something");
    }

    #[test]
    fn zero_lifetime_exactly_for_non_discoverers() {
        let sc = lone_walker(EtaDistribution::Constant(1), 30, 77);
        let f = RandomField::new(sc.seed);
        let traj = run(&sc, &f, &[], RunConfig::default()).unwrap();
        let st = &traj.final_state;
        // a particle has lifetime 0 iff it appears nowhere in the log
        // as a by-visitation discoverer (t=0 entries are construction)
        let discoverers: std::collections::HashSet<_> = st
            .discovery_log()
            .iter()
            .filter(|d| d.time > 0)
            .map(|d| d.discoverer)
            .collect();
        let mut zero = 0usize;
        for p in st.particles() {
            let lifetime = p.last_discovery - p.activated_at;
            if lifetime == 0 {
                zero += 1;
                assert!(!discoverers.contains(&p.id));
            } else {
                assert!(discoverers.contains(&p.id));
            }
        }
        let stats = discovery_lifetimes(st, 30);
        assert_eq!(stats.histogram[0] as usize, zero);
        assert!(zero > 0, "bulk particles exist at T=30");
    }

    #[test]
    fn staleness_fraction_within_pilot_band() {
        // pilot-calibrated: the literal fraction (share of particles
        // whose latest discovery event falls in the final quarter)
        // sits near 0.23 for this configuration
        let sc = lone_walker(EtaDistribution::Constant(1), 300, 9);
        let f = RandomField::new(sc.seed);
        let traj = run(&sc, &f, &[], RunConfig::default()).unwrap();
        let stats = discovery_lifetimes(&traj.final_state, 300);
        assert!(
            stats.staleness_fraction > 0.1 && stats.staleness_fraction < 0.35,
            "staleness {}",
            stats.staleness_fraction
        );
        let total: u64 = stats.histogram.iter().sum();
        assert_eq!(total as usize, stats.particles);
    }
}
