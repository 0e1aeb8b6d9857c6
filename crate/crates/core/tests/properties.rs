//! Property-based invariants for the geometric primitives and the
//! scenario text format.

use frogsim::lattice::{dilate, hausdorff, l1_ball, ScaledSet, Site, SiteSet};
use frogsim::scenario::{
    parse_scenario, EtaDistribution, InitEntry, InitTag, InitialConfig, Mode, Scenario, TieRule,
};
use proptest::prelude::*;

fn arb_site() -> impl Strategy<Value = Site> {
    (-8i32..=8, -8i32..=8).prop_map(|(x, y)| Site::d2(x, y))
}

fn arb_site_set() -> impl Strategy<Value = SiteSet> {
    proptest::collection::vec(arb_site(), 1..10)
        .prop_map(|v| SiteSet::from_sites(2, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hausdorff_is_a_metric_on_samples(a in arb_site_set(), b in arb_site_set(), c in arb_site_set()) {
        let sa = ScaledSet::new(&a, 2);
        let sb = ScaledSet::new(&b, 2);
        let sc = ScaledSet::new(&c, 2);
        let dab = hausdorff(&sa, &sb).unwrap();
        let dba = hausdorff(&sb, &sa).unwrap();
        prop_assert!((dab - dba).abs() < 1e-12);
        prop_assert!(dab >= 0.0);
        // identity of indiscernibles
        prop_assert_eq!(hausdorff(&sa, &sa).unwrap(), 0.0);
        if dab == 0.0 {
            prop_assert_eq!(&a, &b);
        }
        // triangle inequality
        let dac = hausdorff(&sa, &sc).unwrap();
        let dcb = hausdorff(&sc, &sb).unwrap();
        prop_assert!(dab <= dac + dcb + 1e-12);
    }

    #[test]
    fn dilation_composes_additively(s in arb_site_set(), a in 0u32..=3, b in 0u32..=3) {
        let left = dilate(&dilate(&s, a), b);
        let right = dilate(&s, a + b);
        prop_assert_eq!(left, right);
    }

    #[test]
    fn dilation_by_ball_radius_contains_ball(r in 0u32..=4) {
        let origin = SiteSet::from_sites(2, [Site::ORIGIN]);
        prop_assert_eq!(dilate(&origin, r), l1_ball(r as f64, 2).unwrap());
    }
}

fn arb_eta() -> impl Strategy<Value = EtaDistribution> {
    prop_oneof![
        (0u64..4).prop_map(EtaDistribution::Constant),
        (0.0f64..=1.0).prop_map(EtaDistribution::Bernoulli),
        (0.1f64..4.0).prop_map(EtaDistribution::Poisson),
        (0.2f64..=1.0).prop_map(EtaDistribution::Geometric),
        (1.5f64..4.0).prop_map(EtaDistribution::Zeta),
    ]
}

fn arb_scenario() -> impl Strategy<Value = Scenario> {
    (
        1usize..=3,
        any::<bool>(),
        0.01f64..=1.0,
        0.01f64..=1.0,
        arb_eta(),
        proptest::collection::btree_set((-5i32..=5, -5i32..=5), 2..6),
        1u32..=4,
        prop_oneof![
            Just(TieRule::Type1Wins),
            Just(TieRule::Type2Wins),
            Just(TieRule::CoinFlip),
            Just(TieRule::Parity)
        ],
        1u32..500,
        any::<u64>(),
    )
        .prop_map(
            |(dimension, two_type, p1, p2, eta, coords, count, tie_rule, horizon, seed)| {
                let sites: Vec<Site> = coords
                    .into_iter()
                    .map(|(x, y)| Site::from_slice(&[x, y][..dimension.min(2)]))
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let mode = if two_type && sites.len() >= 2 {
                    Mode::TwoType
                } else {
                    Mode::OneType
                };
                let entries: Vec<InitEntry> = sites
                    .iter()
                    .enumerate()
                    .map(|(i, site)| InitEntry {
                        site: *site,
                        count: count + (i as u32 % 2),
                        tag: if mode == Mode::TwoType && i % 2 == 1 {
                            InitTag::Two
                        } else {
                            InitTag::One
                        },
                    })
                    .collect();
                Scenario {
                    dimension,
                    mode,
                    p1,
                    p2: if mode == Mode::TwoType { Some(p2) } else { None },
                    eta,
                    init: InitialConfig::new(entries),
                    tie_rule,
                    horizon,
                    seed,
                }
            },
        )
        .prop_filter("valid scenario", |sc| sc.validate().is_ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scenario_text_round_trips(sc in arb_scenario()) {
        let text = sc.to_text();
        let back = parse_scenario(&text).unwrap();
        prop_assert_eq!(&back, &sc);
        prop_assert_eq!(back.to_text(), text);
    }
}
