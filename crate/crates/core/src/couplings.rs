//! Coupled process pairs on shared keyed randomness, with the pathwise
//! inclusions between their discovered sets checked at runtime.
//!
//! Two couplings are provided. The domination coupling runs a one-type
//! process with the slower jump probability next to a two-type process
//! on the same randomness and identical initial configuration; the
//! one-type discovered set must stay inside the two-type one at every
//! step, deterministically. The region-split coupling runs two one-type
//! processes that share randomness for every particle originating
//! outside a finite region and are independent inside it; after a
//! data-dependent shift N the earlier process's discovered set must fit
//! inside the later one's, provided the shift estimate can be trusted
//! within the horizon.

use crate::engine::{EngineState, ParticleState};
use crate::lattice::{Site, SiteSet};
use crate::randomfield::{make_coupled_pair, ParticleId, RandomField, StreamTag};
use crate::scenario::{Mode, Scenario};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CouplingError {
    #[error("domination requires p1 <= p2, got p1={p1} p2={p2}")]
    ThresholdOrder { p1: f64, p2: f64 },
    #[error("domination coupling needs a two-type scenario")]
    NotTwoType,
    #[error("scenarios incompatible for coupling: {0}")]
    Mismatch(String),
}

/// Result of the domination coupling. `violations` holds every (time,
/// site) where the one-type set escaped the two-type set; it must be
/// empty.
#[derive(Debug)]
pub struct DominatedRun {
    pub violations: Vec<(u32, Site)>,
    pub steps_checked: u32,
    /// Discovered-set sizes per time step, index = t. With p1 = p2 the
    /// two sequences must be identical.
    pub counts_one: Vec<usize>,
    pub counts_two: Vec<usize>,
    pub state_one: EngineState,
    pub state_two: EngineState,
}

impl DominatedRun {
    pub fn sets_equal_throughout(&self) -> bool {
        self.violations.is_empty() && self.counts_one == self.counts_two
    }

    pub fn report(&self, dim: usize) -> CouplingReport {
        CouplingReport {
            sharing: "full".into(),
            n_sigma: None,
            n: None,
            trusted: true,
            violations: format_violations(&self.violations, dim),
            steps_checked: self.steps_checked,
            guard_fraction: None,
        }
    }
}

/// Runs the one-type process on A union B with threshold p1 in lockstep
/// with the two-type process on the identical randomness, asserting the
/// inclusion of discovered sets after every step.
pub fn run_dominated(sc: &Scenario, field: &RandomField) -> Result<DominatedRun, CouplingError> {
    if sc.mode != Mode::TwoType {
        return Err(CouplingError::NotTwoType);
    }
    let p2 = sc.p2.expect("two-type scenario carries p2");
    if sc.p1 > p2 {
        return Err(CouplingError::ThresholdOrder { p1: sc.p1, p2 });
    }
    let one_sc = sc.one_type_union();

    let mut one = EngineState::initial(&one_sc, field);
    let mut two = EngineState::initial(sc, field);
    let mut violations = Vec::new();
    let mut counts_one = vec![one.discovered_count()];
    let mut counts_two = vec![two.discovered_count()];
    let mut checked_upto = one.discovery_log().len();

    for t in 1..=sc.horizon {
        one.step(&one_sc, field);
        two.step(sc, field);
        for d in &one.discovery_log()[checked_upto..] {
            if !two.is_discovered(&d.site) {
                violations.push((t, d.site));
            }
        }
        checked_upto = one.discovery_log().len();
        counts_one.push(one.discovered_count());
        counts_two.push(two.discovered_count());
    }
    Ok(DominatedRun {
        violations,
        steps_checked: sc.horizon,
        counts_one,
        counts_two,
        state_one: one,
        state_two: two,
    })
}

/// How the randomness of the two member runs is tied together.
#[derive(Debug, Clone)]
pub enum SigmaSharing {
    /// One field drives both runs. Only meaningful when the two
    /// scenarios have identical initial configurations; the processes
    /// are then the same process.
    Full,
    /// Keys with origin inside `sigma` come from seeds derived from
    /// `independent_seed`, one per member; everything else is shared.
    Split {
        sigma: SiteSet,
        independent_seed: u64,
    },
}

/// Result of the region-split coupling between a base and an alternate
/// one-type process.
#[derive(Debug)]
pub struct SigmaCoupledRun {
    pub sharing: SigmaSharing,
    /// Last time a sigma-origin particle of the base process discovered
    /// a new site, pushed up to the time the whole region was
    /// discovered. None when the region was not fully discovered in
    /// the horizon.
    pub n_sigma: Option<u32>,
    /// N = first time the alternate process covers the base process's
    /// discovered set at `n_sigma`. None when coverage never happens.
    pub shift: Option<u32>,
    /// Whether the n_sigma estimate deserves trust: the region was
    /// fully discovered, no sigma-origin discovery happened in the
    /// final `trust_window` steps, and the shift exists.
    pub trusted: bool,
    pub trust_window: u32,
    pub last_sigma_origin_discovery: u32,
    /// Violations of the shifted inclusion; (n, site) means the site
    /// was in the base set at n - shift but absent from the alternate
    /// set at n.
    pub violations: Vec<(u32, Site)>,
    pub steps_checked: u32,
    /// Fraction of the base process's sigma-origin particles that ended
    /// outside the L1 ball of radius horizon^(3/4); small values back
    /// the trust margin empirically.
    pub guard_fraction: f64,
    /// Shared jump probability of both member processes.
    pub threshold: f64,
    pub state_base: EngineState,
    pub state_alt: EngineState,
    pub field_base: RandomField,
    pub field_alt: RandomField,
}

#[derive(Debug, Serialize)]
pub struct CouplingReport {
    pub sharing: String,
    pub n_sigma: Option<u32>,
    pub n: Option<u32>,
    pub trusted: bool,
    pub violations: Vec<(u32, String)>,
    pub steps_checked: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guard_fraction: Option<f64>,
}

fn format_violations(violations: &[(u32, Site)], dim: usize) -> Vec<(u32, String)> {
    violations
        .iter()
        .map(|(t, s)| (*t, s.display(dim)))
        .collect()
}

impl SigmaCoupledRun {
    pub fn report(&self, dim: usize) -> CouplingReport {
        CouplingReport {
            sharing: match self.sharing {
                SigmaSharing::Full => "full".into(),
                SigmaSharing::Split { .. } => "sigma_split".into(),
            },
            n_sigma: self.n_sigma,
            n: self.shift,
            trusted: self.trusted,
            violations: format_violations(&self.violations, dim),
            steps_checked: self.steps_checked,
            guard_fraction: Some(self.guard_fraction),
        }
    }
}

fn check_compatible(base: &Scenario, alt: &Scenario) -> Result<(), CouplingError> {
    if base.mode != Mode::OneType || alt.mode != Mode::OneType {
        return Err(CouplingError::Mismatch(
            "both member scenarios must be one-type".into(),
        ));
    }
    if base.dimension != alt.dimension {
        return Err(CouplingError::Mismatch("dimensions differ".into()));
    }
    if base.p1 != alt.p1 {
        return Err(CouplingError::Mismatch("jump probabilities differ".into()));
    }
    if base.eta != alt.eta {
        return Err(CouplingError::Mismatch("eta distributions differ".into()));
    }
    if base.horizon != alt.horizon {
        return Err(CouplingError::Mismatch("horizons differ".into()));
    }
    Ok(())
}

/// Runs the base process and the alternate process on a region-split
/// pair of fields, estimates N_sigma and the shift N from the base
/// run's log, and verifies the shifted inclusion for every checkable
/// step. `trust_window` defaults to a quarter of the horizon.
pub fn run_sigma_coupled(
    base_sc: &Scenario,
    alt_sc: &Scenario,
    sharing: SigmaSharing,
    trust_window: Option<u32>,
) -> Result<SigmaCoupledRun, CouplingError> {
    check_compatible(base_sc, alt_sc)?;
    let horizon = base_sc.horizon;
    let window = trust_window.unwrap_or(horizon / 4);

    let (field_base, field_alt, sigma) = match &sharing {
        SigmaSharing::Full => {
            if base_sc.init != alt_sc.init {
                return Err(CouplingError::Mismatch(
                    "full sharing needs identical initial configurations".into(),
                ));
            }
            let f = RandomField::new(base_sc.seed);
            (f.clone(), f, SiteSet::new(base_sc.dimension))
        }
        SigmaSharing::Split {
            sigma,
            independent_seed,
        } => {
            let starts = base_sc.init_sites().union(&alt_sc.init_sites());
            if !starts.is_subset(sigma) {
                return Err(CouplingError::Mismatch(
                    "sigma must contain both initial sets".into(),
                ));
            }
            let (fa, fb) = make_coupled_pair(base_sc.seed, *independent_seed, sigma);
            (fa, fb, sigma.clone())
        }
    };

    // base run to the horizon
    let mut base = EngineState::initial(base_sc, &field_base);
    for _ in 0..horizon {
        base.step(base_sc, &field_base);
    }

    let last_sigma_origin_discovery = base
        .discovery_log()
        .iter()
        .filter(|d| sigma.contains(&d.discoverer.origin))
        .map(|d| d.time)
        .max()
        .unwrap_or(0);
    let sigma_done_at = sigma
        .iter()
        .map(|s| base.site_record(s).map(|r| r.discovered_at))
        .collect::<Option<Vec<u32>>>()
        .map(|times| times.into_iter().max().unwrap_or(0));
    let n_sigma = sigma_done_at.map(|done| done.max(last_sigma_origin_discovery));

    // alternate run to the horizon
    let mut alt = EngineState::initial(alt_sc, &field_alt);
    for _ in 0..horizon {
        alt.step(alt_sc, &field_alt);
    }

    // N = max over the base snapshot at n_sigma of the alternate
    // discovery time (None if some site stays uncovered)
    let shift = n_sigma.and_then(|ns| {
        let mut worst = 0u32;
        for d in base.discovery_log() {
            if d.time > ns {
                break;
            }
            match alt.site_record(&d.site) {
                Some(rec) => worst = worst.max(rec.discovered_at),
                None => return None,
            }
        }
        Some(worst)
    });

    let mut violations = Vec::new();
    let mut steps_checked = 0;
    if let Some(n) = shift {
        steps_checked = horizon - n;
        for d in base.discovery_log() {
            let deadline = d.time.saturating_add(n);
            if deadline > horizon {
                continue;
            }
            let ok = alt
                .site_record(&d.site)
                .map(|rec| rec.discovered_at <= deadline)
                .unwrap_or(false);
            if !ok {
                violations.push((deadline, d.site));
            }
        }
    }

    let guard_radius = (horizon as f64).powf(0.75);
    let sigma_particles: Vec<&ParticleState> = base
        .particles()
        .iter()
        .filter(|p| sigma.contains(&p.id.origin))
        .collect();
    let guard_fraction = if sigma_particles.is_empty() {
        0.0
    } else {
        let outside = sigma_particles
            .iter()
            .filter(|p| p.position.l1_norm() as f64 > guard_radius)
            .count();
        outside as f64 / sigma_particles.len() as f64
    };

    let trusted = n_sigma.is_some()
        && shift.is_some()
        && last_sigma_origin_discovery + window <= horizon;

    Ok(SigmaCoupledRun {
        sharing,
        n_sigma,
        shift,
        trusted,
        trust_window: window,
        last_sigma_origin_discovery,
        violations,
        steps_checked,
        guard_fraction,
        threshold: base_sc.p1,
        state_base: base,
        state_alt: alt,
        field_base,
        field_alt,
    })
}

#[derive(Debug, Error)]
#[error("shared key disagrees across the pair: {0}")]
pub struct SharedKeyViolation(String);

/// Exhaustively audits every WALK, DELAY and ETA key the two member
/// runs actually consumed: for keys with origin outside sigma the two
/// fields must answer bit-identically. The consumption set is replayed
/// from the final states, which is exact because the fields are pure.
/// Returns the number of keys compared.
pub fn audit_shared_keys(run: &SigmaCoupledRun) -> Result<u64, SharedKeyViolation> {
    let sigma = match &run.sharing {
        SigmaSharing::Full => SiteSet::new(run.state_base.dim()),
        SigmaSharing::Split { sigma, .. } => sigma.clone(),
    };
    let fa = &run.field_base;
    let fb = &run.field_alt;
    let mut checked = 0u64;

    let mut compare = |tag: StreamTag, origin: Site, words: &[u64]| {
        checked += 1;
        let a = fa.raw_u64(tag, origin, words);
        let b = fb.raw_u64(tag, origin, words);
        if a != b {
            return Err(SharedKeyViolation(format!(
                "{tag:?} key at origin ({},{},{}) words {words:?}",
                origin.coords[0], origin.coords[1], origin.coords[2]
            )));
        }
        Ok(())
    };

    for (state, field) in [(&run.state_base, fa), (&run.state_alt, fb)] {
        for p in state.particles() {
            if sigma.contains(&p.id.origin) {
                continue;
            }
            replay_particle_keys(p, field, run.threshold, &mut compare)?;
        }
        for (site, rec) in state.sites() {
            // eta keys are touched for every discovered site that is
            // not part of an initial configuration
            if rec.discovered_at > 0 && !sigma.contains(site) {
                compare(StreamTag::Eta, *site, &[])?;
            }
        }
    }
    Ok(checked)
}

/// Replays the exact (n, k) delay consumption and walk draws of one
/// particle and feeds every key to `visit`. Termination is guaranteed
/// because every replayed jump did happen within the horizon.
fn replay_particle_keys<F>(
    p: &ParticleState,
    field: &RandomField,
    threshold: f64,
    visit: &mut F,
) -> Result<(), SharedKeyViolation>
where
    F: FnMut(StreamTag, Site, &[u64]) -> Result<(), SharedKeyViolation>,
{
    let id: ParticleId = p.id;
    let j = id.index as u64;
    for n in 0..p.jumps_made as u64 {
        if threshold < 1.0 {
            let mut k = 1u64;
            loop {
                visit(StreamTag::Delay, id.origin, &[j, n, k])?;
                if field.delay(id, n, k) <= threshold {
                    break;
                }
                k += 1;
            }
        }
        visit(StreamTag::Walk, id.origin, &[j, n])?;
    }
    // failed attempts at the current position
    let n = p.jumps_made as u64;
    for k in 1..=p.attempts_at_site as u64 {
        visit(StreamTag::Delay, id.origin, &[j, n, k])?;
    }
    Ok(())
}
