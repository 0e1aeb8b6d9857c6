// Ad hoc pilot runs for calibrating acceptance tolerances and timing.

use frogsim::couplings::{run_sigma_coupled, SigmaSharing};
use frogsim::engine::{run, EngineState, RunConfig};
use frogsim::lattice::{Site, SiteSet};
use frogsim::measure::{
    coexistence_stat, discovery_lifetimes, shape_comparison_medians, shape_estimate,
};
use frogsim::randomfield::RandomField;
use frogsim::scenario::{
    EtaDistribution, InitEntry, InitTag, InitialConfig, Mode, Scenario, TieRule,
};
use std::time::Instant;

fn one_type(entries: Vec<(Site, u32)>, p: f64, horizon: u32, seed: u64) -> Scenario {
    Scenario {
        dimension: 2,
        mode: Mode::OneType,
        p1: p,
        p2: None,
        eta: EtaDistribution::Constant(1),
        init: InitialConfig::new(
            entries
                .into_iter()
                .map(|(site, count)| InitEntry {
                    site,
                    count,
                    tag: InitTag::One,
                })
                .collect(),
        ),
        tie_rule: TieRule::CoinFlip,
        horizon,
        seed,
    }
}

fn box_entries(half: i32, count: u32) -> Vec<(Site, u32)> {
    let mut v = Vec::new();
    for x in -half..=half {
        for y in -half..=half {
            v.push((Site::d2(x, y), count));
        }
    }
    v
}

fn box_sites(half: i32) -> SiteSet {
    SiteSet::from_sites(2, box_entries(half, 1).into_iter().map(|(s, _)| s))
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();

    if which == "fig1" || which.is_empty() {
        // criterion 5 pilot: one seed of the n=500 run
        let t0 = Instant::now();
        let sc = one_type(vec![(Site::ORIGIN, 1)], 1.0, 500, 1);
        let f = RandomField::new(sc.seed);
        let traj = run(&sc, &f, &[500], RunConfig::default()).unwrap();
        let snap = &traj.snapshots[0];
        println!(
            "fig1 run: {:?}, sites {}, particles {}",
            t0.elapsed(),
            snap.sites.len(),
            traj.final_state.particles().len()
        );
        let t1 = Instant::now();
        let est = shape_estimate(&snap.site_set(2), 500).unwrap();
        println!(
            "shape: {:?}, inner {} outer {} sym {}",
            t1.elapsed(),
            est.inner_radius,
            est.outer_radius,
            est.sym_defect
        );
        let lt = discovery_lifetimes(&traj.final_state, 500);
        println!("staleness at T=500: {}", lt.staleness_fraction);
    }

    if which == "stale" {
        let sc = one_type(vec![(Site::ORIGIN, 1)], 1.0, 300, 9);
        let f = RandomField::new(sc.seed);
        let traj = run(&sc, &f, &[], RunConfig::default()).unwrap();
        let lt = discovery_lifetimes(&traj.final_state, 300);
        println!(
            "T=300 staleness {} over {} particles, stale {}",
            lt.staleness_fraction, lt.particles, lt.stale_count
        );
    }

    if which == "prop1" {
        // criterion 6 pilot
        let t0 = Instant::now();
        let a = one_type(vec![(Site::ORIGIN, 1)], 0.8, 400, 0);
        let b = one_type(box_entries(2, 3), 0.8, 400, 0);
        let pairs: Vec<(u64, u64)> = (0..20u64).map(|i| (1000 + i, 5000 + i)).collect();
        let med = shape_comparison_medians(&a, &b, &pairs, &[100, 200, 400]).unwrap();
        println!("prop1 medians {med:?} in {:?}", t0.elapsed());
    }

    if which == "sigma" {
        // criterion 4 pilot
        let t0 = Instant::now();
        let sigma = box_sites(2);
        let mut trusted = 0;
        let mut violations = 0;
        let n_runs = 10u64;
        for seed in 0..n_runs {
            let base = one_type(vec![(Site::ORIGIN, 1)], 0.8, 400, seed * 7 + 1);
            let alt = one_type(box_entries(1, 1), 0.8, 400, seed * 7 + 1);
            let run = run_sigma_coupled(
                &base,
                &alt,
                SigmaSharing::Split {
                    sigma: sigma.clone(),
                    independent_seed: seed ^ 0xabcdef,
                },
                None,
            )
            .unwrap();
            if run.trusted {
                trusted += 1;
                violations += run.violations.len();
            }
            if seed == 0 {
                println!(
                    "first run: n_sigma {:?} shift {:?} trusted {} guard {} last_so {}",
                    run.n_sigma,
                    run.shift,
                    run.trusted,
                    run.guard_fraction,
                    run.last_sigma_origin_discovery
                );
            }
        }
        println!(
            "sigma pilot: {trusted}/{n_runs} trusted, {violations} violations, {:?}",
            t0.elapsed()
        );
    }

    if which == "coexist" {
        // criterion 7 pilot
        let t0 = Instant::now();
        let sc = Scenario {
            dimension: 2,
            mode: Mode::TwoType,
            p1: 0.5,
            p2: Some(0.5),
            eta: EtaDistribution::Constant(1),
            init: InitialConfig::new(vec![
                InitEntry {
                    site: Site::ORIGIN,
                    count: 1,
                    tag: InitTag::One,
                },
                InitEntry {
                    site: Site::d2(1, 0),
                    count: 1,
                    tag: InitTag::Two,
                },
            ]),
            tie_rule: TieRule::CoinFlip,
            horizon: 300,
            seed: 0,
        };
        let replicas = 50u64;
        let mut counts = Vec::new();
        for i in 0..replicas {
            let s = sc.with_seed(777 + i);
            let f = RandomField::new(s.seed);
            let mut st = EngineState::initial(&s, &f);
            for _ in 0..s.horizon {
                st.step(&s, &f);
            }
            counts.push((st.totals()[0], st.totals()[1]));
        }
        let stat = coexistence_stat(&counts, 50, 300).unwrap();
        println!(
            "coexist pilot: freq {} [{}, {}] in {:?}",
            stat.frequency, stat.wilson_low, stat.wilson_high, t0.elapsed()
        );
    }
}
