//! Step-synchronous dynamics of the one- and two-type lazy frog model.
//!
//! Each step resolves in two phases against the pre-step state: first
//! every active particle makes one delay-driven move attempt, then
//! every undiscovered site that received at least one arrival becomes
//! discovered at the new clock and its sleeping particles are activated
//! with the discovering type. A particle activated at time t makes its
//! first move attempt in the step leading to t+1; discovery happens by
//! arrival only, never by traversal.

use crate::lattice::{mix64, mix_absorb, Site, SiteHashBuilder, SiteSet};
use crate::randomfield::{ParticleId, RandomField, StreamTag};
use crate::scenario::{sample_eta, InitTag, ParticleType, Scenario, TieRule};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("checkpoint {0} exceeds horizon {1}")]
    CheckpointBeyondHorizon(u32, u32),
}

/// One active particle. `position` always equals the origin displaced
/// by the first `jumps_made` steps of the particle's walk;
/// `attempts_at_site` counts failed attempts since the last jump and
/// resets to zero on every jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParticleState {
    pub id: ParticleId,
    pub position: Site,
    pub jumps_made: u32,
    pub attempts_at_site: u32,
    pub type_tag: ParticleType,
    pub activated_at: u32,
    /// Time of this particle's most recent discovery; equals
    /// `activated_at` while it has not discovered anything.
    pub last_discovery: u32,
    pub retired: bool,
}

/// Record of a discovered site. Sleeping particles are activated in
/// full at discovery, so a materialized site never holds sleepers; the
/// activated count is kept for conservation audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteRecord {
    pub discovered_at: u32,
    pub site_type: ParticleType,
    /// Sleeping particles the site held before discovery (the
    /// configured count on initial sites, a sampled eta count
    /// elsewhere).
    pub initial_count: u32,
    pub discoverer: ParticleId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Discovery {
    pub time: u32,
    pub site: Site,
    pub site_type: ParticleType,
    pub discoverer: ParticleId,
}

/// Full mutable state of one run.
#[derive(Debug, Clone)]
pub struct EngineState {
    dim: usize,
    clock: u32,
    particles: Vec<ParticleState>,
    sites: HashMap<Site, SiteRecord, SiteHashBuilder>,
    /// Particles activated per type, including the initial
    /// configuration.
    totals: [u64; 2],
    discovery_log: Vec<Discovery>,
    retired_count: u64,
    // scratch buffer reused across steps: (arrival site, particle index)
    arrivals: Vec<(Site, u32)>,
}

impl EngineState {
    /// State at time 0: the configured particles are active at their
    /// origins with their types, their sites discovered at time 0, and
    /// nothing else materialized. Sites off the initial sets are
    /// sampled lazily on first visit, so materialization order can
    /// never influence their counts.
    pub fn initial(sc: &Scenario, _field: &RandomField) -> EngineState {
        let mut st = EngineState {
            dim: sc.dimension,
            clock: 0,
            particles: Vec::new(),
            sites: HashMap::default(),
            totals: [0, 0],
            discovery_log: Vec::new(),
            retired_count: 0,
            arrivals: Vec::new(),
        };
        for e in sc.init.entries() {
            let ptype = match e.tag {
                InitTag::Two => ParticleType::Two,
                InitTag::One | InitTag::Untyped => ParticleType::One,
            };
            let discoverer = ParticleId::new(e.site, 1);
            st.sites.insert(
                e.site,
                SiteRecord {
                    discovered_at: 0,
                    site_type: ptype,
                    initial_count: e.count,
                    discoverer,
                },
            );
            st.discovery_log.push(Discovery {
                time: 0,
                site: e.site,
                site_type: ptype,
                discoverer,
            });
            st.totals[ptype.index()] += e.count as u64;
            for j in 1..=e.count {
                st.particles.push(ParticleState {
                    id: ParticleId::new(e.site, j),
                    position: e.site,
                    jumps_made: 0,
                    attempts_at_site: 0,
                    type_tag: ptype,
                    activated_at: 0,
                    last_discovery: 0,
                    retired: false,
                });
            }
        }
        st
    }

    pub fn clock(&self) -> u32 {
        self.clock
    }

    pub fn particles(&self) -> &[ParticleState] {
        &self.particles
    }

    pub fn discovery_log(&self) -> &[Discovery] {
        &self.discovery_log
    }

    pub fn discovered_count(&self) -> usize {
        self.sites.len()
    }

    pub fn is_discovered(&self, x: &Site) -> bool {
        self.sites.contains_key(x)
    }

    pub fn site_record(&self, x: &Site) -> Option<&SiteRecord> {
        self.sites.get(x)
    }

    pub fn sites(&self) -> impl Iterator<Item = (&Site, &SiteRecord)> {
        self.sites.iter()
    }

    /// Activated particles per type, initial configuration included.
    pub fn totals(&self) -> [u64; 2] {
        self.totals
    }

    pub fn active_count(&self) -> u64 {
        self.particles.len() as u64 - self.retired_count
    }

    pub fn retired_count(&self) -> u64 {
        self.retired_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The discovered set as a site set.
    pub fn discovered_set(&self) -> SiteSet {
        let mut s = SiteSet::new(self.dim);
        for x in self.sites.keys() {
            s.insert(*x);
        }
        s
    }

    /// Advances the state by one time step.
    pub fn step(&mut self, sc: &Scenario, field: &RandomField) {
        let t_new = self.clock + 1;
        let dim = sc.dimension;
        let thresholds = [
            sc.threshold(ParticleType::One),
            sc.threshold(ParticleType::Two),
        ];
        let mut arrivals = std::mem::take(&mut self.arrivals);
        arrivals.clear();

        let existing = self.particles.len();
        for i in 0..existing {
            let p = &mut self.particles[i];
            if p.retired {
                continue;
            }
            let thr = thresholds[p.type_tag.index()];
            let k = p.attempts_at_site + 1;
            // threshold 1 jumps unconditionally; the delay draw is
            // skipped, which is observationally identical because
            // delays live on [0,1) and the draw perturbs nothing else
            let jumps = thr >= 1.0 || field.delay(p.id, p.jumps_made as u64, k as u64) <= thr;
            if jumps {
                let step = field.walk_step(p.id, p.jumps_made as u64, dim);
                p.position = p.position.offset(step.axis, step.sign);
                p.jumps_made += 1;
                p.attempts_at_site = 0;
                if !self.sites.contains_key(&p.position) {
                    arrivals.push((p.position, i as u32));
                }
            } else {
                p.attempts_at_site = k;
            }
        }

        // Resolve discoveries. Sorting by (site, particle id) makes the
        // whole step independent of traversal order and picks the
        // smallest arriving id per type as the recorded discoverer.
        arrivals.sort_unstable_by_key(|&(s, i)| (s, self.particles[i as usize].id));
        let mut i = 0;
        while i < arrivals.len() {
            let site = arrivals[i].0;
            let mut end = i + 1;
            while end < arrivals.len() && arrivals[end].0 == site {
                end += 1;
            }
            let mut first_of: [Option<u32>; 2] = [None, None];
            for &(_, pi) in &arrivals[i..end] {
                let t = self.particles[pi as usize].type_tag.index();
                first_of[t].get_or_insert(pi);
            }
            let winner = match (first_of[0], first_of[1]) {
                (Some(_), None) => ParticleType::One,
                (None, Some(_)) => ParticleType::Two,
                (Some(_), Some(_)) => match sc.tie_rule {
                    TieRule::Type1Wins => ParticleType::One,
                    TieRule::Type2Wins => ParticleType::Two,
                    TieRule::Parity => {
                        let sum: i64 = site.coords.iter().map(|c| *c as i64).sum();
                        if sum.rem_euclid(2) == 0 {
                            ParticleType::One
                        } else {
                            ParticleType::Two
                        }
                    }
                    TieRule::CoinFlip => {
                        if field.uniform(StreamTag::Tie, site, &[t_new as u64]) < 0.5 {
                            ParticleType::One
                        } else {
                            ParticleType::Two
                        }
                    }
                },
                (None, None) => unreachable!("arrival group is non-empty"),
            };
            let discoverer_idx = first_of[winner.index()].expect("winner type arrived") as usize;
            let discoverer = self.particles[discoverer_idx].id;
            self.particles[discoverer_idx].last_discovery = t_new;

            let count = sample_eta(field, &sc.eta, site);
            let count = u32::try_from(count).unwrap_or(u32::MAX);
            self.sites.insert(
                site,
                SiteRecord {
                    discovered_at: t_new,
                    site_type: winner,
                    initial_count: count,
                    discoverer,
                },
            );
            self.discovery_log.push(Discovery {
                time: t_new,
                site,
                site_type: winner,
                discoverer,
            });
            self.totals[winner.index()] += count as u64;
            for j in 1..=count {
                self.particles.push(ParticleState {
                    id: ParticleId::new(site, j),
                    position: site,
                    jumps_made: 0,
                    attempts_at_site: 0,
                    type_tag: winner,
                    activated_at: t_new,
                    last_discovery: t_new,
                    retired: false,
                });
            }
            i = end;
        }

        self.arrivals = arrivals;
        self.clock = t_new;
    }

    /// Marks particles idle for longer than `window` as retired so the
    /// step loop skips them. Retired particles can no longer discover,
    /// so the discovered set MAY differ from an unretired run; callers
    /// opt in for speed only.
    pub fn retire_idle(&mut self, window: u32) {
        for p in &mut self.particles {
            if !p.retired && self.clock - p.last_discovery > window {
                p.retired = true;
                self.retired_count += 1;
            }
        }
    }

    /// Order-independent digest over the full state. Equal states give
    /// equal digests regardless of internal table traversal order.
    pub fn state_digest(&self) -> u64 {
        const P_DOMAIN: u64 = 0x70a1_77c5_1e88_340b;
        const S_DOMAIN: u64 = 0x51fe_c6b9_2ad0_9d37;
        let mut acc: u64 = 0;
        for p in &self.particles {
            let mut h = mix64(P_DOMAIN);
            for c in &p.id.origin.coords {
                h = mix_absorb(h, *c as i64 as u64);
            }
            h = mix_absorb(h, p.id.index as u64);
            for c in &p.position.coords {
                h = mix_absorb(h, *c as i64 as u64);
            }
            h = mix_absorb(h, p.jumps_made as u64);
            h = mix_absorb(h, p.attempts_at_site as u64);
            h = mix_absorb(h, p.type_tag.index() as u64);
            h = mix_absorb(h, p.activated_at as u64);
            h = mix_absorb(h, p.last_discovery as u64);
            h = mix_absorb(h, p.retired as u64);
            acc = acc.wrapping_add(mix64(h));
        }
        for (s, r) in &self.sites {
            let mut h = mix64(S_DOMAIN);
            for c in &s.coords {
                h = mix_absorb(h, *c as i64 as u64);
            }
            h = mix_absorb(h, r.discovered_at as u64);
            h = mix_absorb(h, r.site_type.index() as u64);
            h = mix_absorb(h, r.initial_count as u64);
            acc = acc.wrapping_add(mix64(h));
        }
        let mut out = mix_absorb(acc, self.clock as u64);
        out = mix_absorb(out, self.totals[0]);
        out = mix_absorb(out, self.totals[1]);
        out = mix_absorb(out, self.particles.len() as u64);
        mix64(out)
    }

    /// Recomputes every deterministic invariant from scratch: the
    /// discovery log and site table must agree entry for entry, sites
    /// cannot be discovered faster than the L1 speed bound from the
    /// initial sets, per-site activation counts must match the particle
    /// table, and every particle's activation time and type must match
    /// its origin's record. With `replay_walks` each particle's
    /// position is re-derived from its walk prefix.
    pub fn verify_invariants(
        &self,
        sc: &Scenario,
        field: &RandomField,
        replay_walks: bool,
    ) -> Result<(), InvariantViolation> {
        if self.sites.len() != self.discovery_log.len() {
            return Err(InvariantViolation::LogTableMismatch(format!(
                "{} sites vs {} log entries",
                self.sites.len(),
                self.discovery_log.len()
            )));
        }
        let mut prev_time = 0u32;
        for (i, d) in self.discovery_log.iter().enumerate() {
            if d.time < prev_time {
                return Err(InvariantViolation::NonMonotoneLog { index: i });
            }
            prev_time = d.time;
            if d.time > self.clock {
                return Err(InvariantViolation::LogTableMismatch(format!(
                    "log entry at t={} beyond clock {}",
                    d.time, self.clock
                )));
            }
            let rec = self.sites.get(&d.site).ok_or_else(|| {
                InvariantViolation::LogTableMismatch(format!(
                    "logged site {} missing from table",
                    d.site.display(sc.dimension)
                ))
            })?;
            if rec.discovered_at != d.time
                || rec.site_type != d.site_type
                || rec.discoverer != d.discoverer
            {
                return Err(InvariantViolation::LogTableMismatch(format!(
                    "site {} record disagrees with log",
                    d.site.display(sc.dimension)
                )));
            }
        }

        let init_sites = sc.init_sites();
        for (site, rec) in &self.sites {
            let dist = init_sites
                .min_l1_dist(site)
                .expect("initial set is non-empty");
            if dist > rec.discovered_at {
                return Err(InvariantViolation::SpeedBound {
                    site: site.display(sc.dimension),
                    discovered_at: rec.discovered_at,
                    dist,
                });
            }
        }

        let mut by_origin: HashMap<Site, u32, SiteHashBuilder> = HashMap::default();
        let mut type_totals = [0u64; 2];
        for p in &self.particles {
            *by_origin.entry(p.id.origin).or_insert(0) += 1;
            type_totals[p.type_tag.index()] += 1;
            let rec = self.sites.get(&p.id.origin).ok_or_else(|| {
                InvariantViolation::Causality(format!(
                    "particle origin {} not discovered",
                    p.id.origin.display(sc.dimension)
                ))
            })?;
            if p.activated_at != rec.discovered_at {
                return Err(InvariantViolation::Causality(format!(
                    "particle ({},{}) activated at {} but origin discovered at {}",
                    p.id.origin.display(sc.dimension),
                    p.id.index,
                    p.activated_at,
                    rec.discovered_at
                )));
            }
            if p.type_tag != rec.site_type {
                return Err(InvariantViolation::Causality(format!(
                    "particle ({},{}) type disagrees with origin site type",
                    p.id.origin.display(sc.dimension),
                    p.id.index
                )));
            }
            if replay_walks {
                let mut pos = p.id.origin;
                for n in 0..p.jumps_made {
                    let s = field.walk_step(p.id, n as u64, sc.dimension);
                    pos = pos.offset(s.axis, s.sign);
                }
                if pos != p.position {
                    return Err(InvariantViolation::WalkPrefix(format!(
                        "particle ({},{}) position off its walk",
                        p.id.origin.display(sc.dimension),
                        p.id.index
                    )));
                }
            }
        }
        for (site, rec) in &self.sites {
            let have = by_origin.get(site).copied().unwrap_or(0);
            if have != rec.initial_count {
                return Err(InvariantViolation::Conservation {
                    site: site.display(sc.dimension),
                    expected: rec.initial_count,
                    actual: have,
                });
            }
        }
        if type_totals != self.totals {
            return Err(InvariantViolation::Conservation {
                site: "<totals>".into(),
                expected: self.totals[0] as u32,
                actual: type_totals[0] as u32,
            });
        }
        Ok(())
    }

    /// Sorted per-site view for snapshots and exports.
    fn snapshot_sites(&self) -> Vec<SnapshotSite> {
        let mut v: Vec<SnapshotSite> = self
            .sites
            .iter()
            .map(|(s, r)| SnapshotSite {
                site: *s,
                discovered_at: r.discovered_at,
                site_type: r.site_type,
            })
            .collect();
        v.sort_unstable_by_key(|e| e.site);
        v
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            time: self.clock,
            sites: self.snapshot_sites(),
            totals: self.totals,
            active: self.active_count(),
            digest: self.state_digest(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum InvariantViolation {
    #[error("discovery log and site table disagree: {0}")]
    LogTableMismatch(String),
    #[error("discovery log times decrease at index {index}")]
    NonMonotoneLog { index: usize },
    #[error("site {site} discovered at {discovered_at} but lies {dist} from the initial sets")]
    SpeedBound {
        site: String,
        discovered_at: u32,
        dist: u32,
    },
    #[error("conservation failed at {site}: activated {expected}, found {actual}")]
    Conservation {
        site: String,
        expected: u32,
        actual: u32,
    },
    #[error("activation causality failed: {0}")]
    Causality(String),
    #[error("walk prefix mismatch: {0}")]
    WalkPrefix(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SnapshotSite {
    pub site: Site,
    pub discovered_at: u32,
    pub site_type: ParticleType,
}

/// The discovered set and aggregate counters at one checkpoint, sorted
/// and digested for deterministic export.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: u32,
    pub sites: Vec<SnapshotSite>,
    pub totals: [u64; 2],
    pub active: u64,
    pub digest: u64,
}

impl Snapshot {
    pub fn site_set(&self, dim: usize) -> SiteSet {
        SiteSet::from_sites(dim, self.sites.iter().map(|e| e.site))
    }

    /// CSV with one row per discovered site:
    /// `t,x[,y[,z]],discovered_at,site_type`.
    pub fn to_csv(&self, dim: usize) -> String {
        let mut out = String::new();
        out.push_str("t,");
        out.push_str(&["x", "x,y", "x,y,z"][dim - 1]);
        out.push_str(",discovered_at,site_type\n");
        for e in &self.sites {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.time,
                e.site.display(dim),
                e.discovered_at,
                e.site_type.label()
            ));
        }
        out
    }
}

/// Per-run knobs that are not part of the model itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunConfig {
    /// Retire particles that have not discovered for this many steps.
    /// Off by default: retirement is a speed device and may change the
    /// discovered set.
    pub retirement_window: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub final_state: EngineState,
}

/// Runs a scenario to its horizon, snapshotting at the requested times
/// (which must not exceed the horizon).
pub fn run(
    sc: &Scenario,
    field: &RandomField,
    checkpoints: &[u32],
    cfg: RunConfig,
) -> Result<Trajectory, EngineError> {
    for &c in checkpoints {
        if c > sc.horizon {
            return Err(EngineError::CheckpointBeyondHorizon(c, sc.horizon));
        }
    }
    let mut marks: Vec<u32> = checkpoints.to_vec();
    marks.sort_unstable();
    marks.dedup();
    let mut st = EngineState::initial(sc, field);
    let mut snapshots = Vec::with_capacity(marks.len());
    if marks.first() == Some(&0) {
        snapshots.push(st.snapshot());
    }
    for t in 1..=sc.horizon {
        st.step(sc, field);
        if marks.binary_search(&t).is_ok() {
            snapshots.push(st.snapshot());
        }
        if let Some(w) = cfg.retirement_window {
            st.retire_idle(w);
        }
    }
    Ok(Trajectory {
        snapshots,
        final_state: st,
    })
}
