//! Round-trip checks between the engine, the certificate checkers and the
//! fullpath-matching characterization, run over a seeded random corpus.
//!
//! For each system with `n` states and `B` the largest skipping simulation:
//! - the extracted reduced certificate for `B` must be accepted;
//! - converted to a full certificate with skip bound `max(n, 2)` it must be
//!   accepted again;
//! - every pair of `B` must match every lasso with stem and loop of at most
//!   `n` states;
//! - every excluded label-equal pair `(s, w)` must have a lasso from `s`
//!   that `w` does not match under `B ∪ {(s, w)}`.

use serde::Serialize;

use crate::engine::{certificate_for, largest_sks, SimOptions};
use crate::exec::{par_map, Exec};
use crate::lts::{Lts, ReachTable, StateId};
use crate::matching::{enumerate_lassos, Lasso, Matcher};
use crate::random::corpus;
use crate::relation::Relation;
use crate::wfsk::{check_rwfsk_with, check_wfsk_with, rwfsk_as_wfsk};
use crate::Result;

/// Findings for one system; all `None`/empty on success.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SystemOutcome {
    pub index: usize,
    pub states: usize,
    pub related: usize,
    pub lassos_checked: usize,
    /// Extracted reduced certificate rejected.
    pub certificate_rejected: Option<String>,
    /// Reduced certificate accepted but its full form rejected.
    pub conversion_rejected: Option<String>,
    /// A related pair and a lasso the pair fails to match.
    pub unmatched: Option<(StateId, StateId, Lasso)>,
    /// Excluded pairs with no refuting lasso within the search bound.
    pub unrefuted: Vec<(StateId, StateId)>,
    pub excluded: usize,
}

impl SystemOutcome {
    pub fn passed(&self) -> bool {
        self.certificate_rejected.is_none()
            && self.conversion_rejected.is_none()
            && self.unmatched.is_none()
            && self.unrefuted.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub systems: usize,
    pub certified: usize,
    pub converted: usize,
    pub sound: usize,
    pub complete: usize,
    pub lassos_checked: usize,
    pub excluded_pairs: usize,
    pub failures: Vec<SystemOutcome>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Lassos from `s` in canonical form, stem and loop of at most `bound` states.
fn lassos(lts: &Lts, s: StateId, bound: usize) -> impl Iterator<Item = Lasso> + '_ {
    enumerate_lassos(lts, s, bound, bound).filter(Lasso::is_canonical)
}

/// Runs every check on one system.
pub fn check_system(index: usize, lts: &Lts) -> Result<SystemOutcome> {
    let n = lts.num_states();
    let b = largest_sks(lts, &SimOptions::unbounded().with_exec(Exec::Sequential));
    let mut out = SystemOutcome { index, states: n, related: b.len(), ..Default::default() };

    let cert = certificate_for(lts, &b)?;
    match check_rwfsk_with(lts, &b, &cert, Exec::Sequential)?.violation() {
        Some(v) => out.certificate_rejected = Some(v.to_string()),
        None => {
            let full = rwfsk_as_wfsk(&cert, n.max(2))?;
            if let Some(v) = check_wfsk_with(lts, &b, &full, Exec::Sequential)?.violation() {
                out.conversion_rejected = Some(v.to_string());
            }
        }
    }

    let plus = ReachTable::compute(lts, None, Exec::Sequential);
    let matcher = Matcher::with_reach(lts, &b, plus.clone());
    'sound: for s in lts.states() {
        if b.row(s).is_empty() {
            continue;
        }
        for sigma in lassos(lts, s, n) {
            for &w in b.row(s) {
                out.lassos_checked += 1;
                if !matcher.find_match(&sigma, w)?.is_match() {
                    out.unmatched = Some((s, w, sigma));
                    break 'sound;
                }
            }
        }
    }

    for s in lts.states() {
        for w in lts.states() {
            if lts.label(s) != lts.label(w) || b.contains(s, w) {
                continue;
            }
            out.excluded += 1;
            if !refuted(lts, &b, &plus, s, w, n)? {
                out.unrefuted.push((s, w));
            }
        }
    }
    Ok(out)
}

/// Whether some lasso from `s` is not matched by `w` once `(s, w)` is added
/// to `b`.
fn refuted(lts: &Lts, b: &Relation, plus: &ReachTable, s: StateId, w: StateId, bound: usize) -> Result<bool> {
    let mut extended = b.clone();
    extended.insert(s, w);
    let matcher = Matcher::with_reach(lts, &extended, plus.clone());
    for sigma in lassos(lts, s, bound) {
        if !matcher.find_match(&sigma, w)?.is_match() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Runs [`check_system`] over `count` systems generated from `seed`.
pub fn run(seed: u64, count: usize, exec: Exec) -> Result<SelftestReport> {
    let systems = corpus(seed, count);
    let indexed: Vec<(usize, &Lts)> = systems.iter().enumerate().collect();
    let outcomes = par_map(exec, &indexed, |&(i, lts)| check_system(i, lts)).into_iter().collect::<Result<Vec<_>>>()?;
    let count_if = |f: &dyn Fn(&SystemOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
    Ok(SelftestReport {
        seed,
        systems: count,
        certified: count_if(&|o| o.certificate_rejected.is_none()),
        converted: count_if(&|o| o.certificate_rejected.is_none() && o.conversion_rejected.is_none()),
        sound: count_if(&|o| o.unmatched.is_none()),
        complete: count_if(&|o| o.unrefuted.is_empty()),
        lassos_checked: outcomes.iter().map(|o| o.lassos_checked).sum(),
        excluded_pairs: outcomes.iter().map(|o| o.excluded).sum(),
        failures: outcomes.iter().filter(|o| !o.passed()).cloned().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_corpus_passes() {
        let report = run(3, 40, Exec::Parallel).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        assert_eq!(report.systems, 40);
        assert!(report.lassos_checked > 0);
        assert!(report.excluded_pairs > 0);
    }
}
