use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use skipref::engine::{certificate_for, is_engine_valid, largest_sks, largest_sks_traced, MaxSkip, SimOptions};
use skipref::matching::{enumerate_lassos, Lasso, Matcher};
use skipref::random::{random_lts, Shape};
use skipref::wfsk::{check_rwfsk, CertificateFile};
use skipref::{Exec, Lts, Relation, StateId};

fn system(seed: u64, max_states: usize) -> Lts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_lts(&mut rng, Shape { max_states, ..Shape::default() })
}

fn label_equal(lts: &Lts) -> Relation {
    let pairs =
        lts.states().flat_map(|s| lts.states().map(move |w| (s, w))).filter(|&(s, w)| lts.label(s) == lts.label(w));
    Relation::from_pairs(lts.num_states(), pairs.collect::<Vec<_>>()).unwrap()
}

/// Greatest fixpoint of "every lasso from `s` is matched from `w`", taken
/// straight from the fullpath characterization of skipping simulation.
fn largest_by_matching(lts: &Lts) -> Relation {
    let n = lts.num_states();
    let mut b = label_equal(lts);
    loop {
        let matcher = Matcher::new(lts, &b);
        let doomed: Vec<(StateId, StateId)> = b
            .iter()
            .filter(|&(s, w)| {
                enumerate_lassos(lts, s, n, n)
                    .filter(Lasso::is_canonical)
                    .any(|sigma| !matcher.find_match(&sigma, w).unwrap().is_match())
            })
            .collect();
        if doomed.is_empty() {
            return b;
        }
        for (s, w) in doomed {
            b.remove(s, w);
        }
    }
}

#[test]
fn engine_agrees_with_matching_fixpoint() {
    for seed in 0..300 {
        let lts = system(seed, 5);
        let engine = largest_sks(&lts, &SimOptions::unbounded());
        assert_eq!(engine, largest_by_matching(&lts), "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn larger_skip_bounds_relate_more(seed in any::<u64>()) {
        let lts = system(seed, 6);
        let n = lts.num_states();
        let mut prev = Relation::empty(n);
        for k in 1..=n.max(2) {
            let b = largest_sks(&lts, &SimOptions::bounded(k));
            prop_assert!(prev.is_subset(&b));
            prev = b;
        }
        // Bounds at least the state count see every →⁺ successor.
        prop_assert_eq!(prev, largest_sks(&lts, &SimOptions::unbounded()));
    }

    #[test]
    fn result_is_a_valid_fixpoint(seed in any::<u64>(), k in 1usize..4) {
        let lts = system(seed, 6);
        for opts in [SimOptions::bounded(k), SimOptions::unbounded()] {
            let b = largest_sks(&lts, &opts);
            prop_assert!(is_engine_valid(&lts, &b, &opts));
            prop_assert!(b.is_subset(&label_equal(&lts)));
            prop_assert!(lts.states().all(|s| b.contains(s, s)));
        }
    }

    #[test]
    fn strategies_and_reruns_agree(seed in any::<u64>()) {
        let lts = system(seed, 6);
        let seq = largest_sks_traced(&lts, &SimOptions::unbounded().with_exec(Exec::Sequential));
        let par = largest_sks_traced(&lts, &SimOptions::unbounded().with_exec(Exec::Parallel));
        prop_assert_eq!(&seq.relation, &par.relation);
        prop_assert_eq!(&seq.pruned, &par.pruned);
        prop_assert_eq!(seq.relation, largest_sks(&lts, &SimOptions { max_skip: MaxSkip::Unbounded, exec: Exec::Sequential }));
    }

    #[test]
    fn certificates_survive_json(seed in any::<u64>()) {
        let lts = system(seed, 6);
        let b = largest_sks(&lts, &SimOptions::unbounded());
        let cert = certificate_for(&lts, &b).unwrap();
        let file = CertificateFile::from_json(&CertificateFile::from_rwfsk(&cert, None).to_json()).unwrap();
        prop_assert!(check_rwfsk(&lts, &b, &file.to_rwfsk()).unwrap().is_accepted());
        let rel = Relation::from_json(&b.to_json(), lts.num_states()).unwrap();
        prop_assert_eq!(&rel, &b);
        prop_assert_eq!(Lts::from_json(&lts.to_json()).unwrap(), lts);
    }
}
