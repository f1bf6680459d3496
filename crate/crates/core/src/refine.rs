//! Skipping refinement between a concrete and an abstract system under a
//! refinement map.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::{extract_rankt_with, largest_sks_traced, MaxSkip, PrunePass, PruneRecord, SimOptions};
use crate::error::{Error, Result};
use crate::lts::{distances_within, Lts, StateId};
use crate::relation::{Relation, RelationFile};
use crate::union::{disjoint_union, DisjointUnion, RefinementMap};
use crate::wfsk::{check_rwfsk_with, CertVerdict, CertificateFile, RanktTable, RwfskCertificate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Fails,
    UnknownBeyondBound,
}

/// Which concrete states must be related to their image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Reachable states when the concrete system declares initial states,
    /// all states otherwise.
    #[default]
    Auto,
    AllStates,
}

/// The semantics a verdict was computed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckedScope {
    ReachableFromInitial,
    AllStates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RefineOptions {
    pub sim: SimOptions,
    pub scope: Scope,
}

impl RefineOptions {
    pub fn new(sim: SimOptions) -> RefineOptions {
        RefineOptions { sim, scope: Scope::Auto }
    }

    pub fn all_states(mut self) -> RefineOptions {
        self.scope = Scope::AllStates;
        self
    }
}

/// Relation and ranks over the disjoint union: concrete states keep their
/// ids, abstract state `a` appears as `a + concrete_states`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub relation: Relation,
    pub certificate: RwfskCertificate,
}

/// How one abstract candidate fails to answer the offending step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    /// Abstract state id.
    pub state: StateId,
    /// Steps from the image of `s`; 0 for the stutter candidate.
    pub distance: usize,
    /// `"stutter"` (image stays put) or `"skip"` (image moves to `state`).
    pub case: String,
    pub label: Value,
    pub why: String,
}

/// A concrete run into a state that is not simulated by its image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterTrace {
    /// Concrete path ending in `s`.
    pub stem: Vec<StateId>,
    pub stem_labels: Vec<Value>,
    /// The offending concrete step `(s, u)`.
    pub step: (StateId, StateId),
    pub step_label: Value,
    /// Abstract image of `s`.
    pub image: StateId,
    pub pass: PrunePass,
    pub reason: String,
    pub candidates: Vec<Candidate>,
}

impl CounterTrace {
    /// Checks the trace against the concrete system: the stem is a path that
    /// starts in an initial state (when any are declared) and the offending
    /// step is a transition out of its last state.
    pub fn validate(&self, concrete: &Lts) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidLasso(m));
        let Some(&first) = self.stem.first() else {
            return bad("empty counterexample stem".into());
        };
        for &s in &self.stem {
            concrete.check_state(s)?;
        }
        if !concrete.initial().is_empty() && !concrete.initial().contains(&first) {
            return bad(format!("stem starts at {first}, which is not initial"));
        }
        for pair in self.stem.windows(2) {
            if !concrete.has_transition(pair[0], pair[1]) {
                return bad(format!("stem uses missing transition {} -> {}", pair[0], pair[1]));
            }
        }
        let (s, u) = self.step;
        if Some(&s) != self.stem.last() {
            return bad(format!("offending step starts at {s}, not at the end of the stem"));
        }
        if !concrete.has_transition(s, u) {
            return bad(format!("offending step {s} -> {u} is not a transition"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub scope: CheckedScope,
    pub max_skip: MaxSkip,
    pub concrete_states: usize,
    pub witness: Option<Witness>,
    pub counterexample: Option<CounterTrace>,
    /// Longest shortest skip used to answer a concrete step from its image,
    /// measured by the independent certificate check.
    pub max_skip_witness: Option<usize>,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn to_json_value(&self) -> Value {
        let witness = self.witness.as_ref().map(|w| WitnessJson {
            states: w.relation.universe(),
            relation: RelationFile::from(&w.relation),
            certificate: CertificateFile::from_rwfsk(&w.certificate, None),
        });
        serde_json::to_value(VerdictJson {
            status: self.status,
            scope: self.scope,
            max_skip: self.max_skip.to_string(),
            concrete_states: self.concrete_states,
            max_skip_witness: self.max_skip_witness,
            witness,
            counterexample: self.counterexample.clone(),
        })
        .expect("verdict serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("verdict serializes")
    }

    pub fn from_json(text: &str) -> Result<Verdict> {
        let v: VerdictJson = serde_json::from_str(text)?;
        let max_skip: MaxSkip = v.max_skip.parse()?;
        let witness = match v.witness {
            None => None,
            Some(w) => {
                Some(Witness { relation: w.relation.into_relation(w.states)?, certificate: w.certificate.to_rwfsk() })
            }
        };
        Ok(Verdict {
            status: v.status,
            scope: v.scope,
            max_skip,
            concrete_states: v.concrete_states,
            witness,
            counterexample: v.counterexample,
            max_skip_witness: v.max_skip_witness,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct WitnessJson {
    /// States of the disjoint union.
    states: usize,
    relation: RelationFile,
    certificate: CertificateFile,
}

#[derive(Serialize, Deserialize)]
struct VerdictJson {
    status: Status,
    scope: CheckedScope,
    max_skip: String,
    concrete_states: usize,
    #[serde(default)]
    max_skip_witness: Option<usize>,
    #[serde(default)]
    witness: Option<WitnessJson>,
    #[serde(default)]
    counterexample: Option<CounterTrace>,
}

/// Decides whether `concrete` skipping-refines `abstract_` under `r`.
pub fn check_skipping_refinement(
    concrete: &Lts,
    abstract_: &Lts,
    r: &RefinementMap,
    opts: &SimOptions,
) -> Result<Verdict> {
    check_skipping_refinement_with(concrete, abstract_, r, &RefineOptions::new(*opts))
}

pub fn check_skipping_refinement_with(
    concrete: &Lts,
    abstract_: &Lts,
    r: &RefinementMap,
    opts: &RefineOptions,
) -> Result<Verdict> {
    let union = disjoint_union(concrete, abstract_, r)?;
    let (scope, in_scope) = match opts.scope {
        Scope::Auto if !concrete.initial().is_empty() => {
            (CheckedScope::ReachableFromInitial, concrete.reachable_from_initial())
        }
        _ => {
            let mut all = fixedbitset::FixedBitSet::with_capacity(concrete.num_states());
            all.insert_range(..);
            (CheckedScope::AllStates, all)
        }
    };
    let sim = largest_sks_traced(&union.lts, &opts.sim);
    let b = &sim.relation;
    let image = |s: StateId| union.embed_abstract(r.apply(s));
    let failing: Vec<StateId> = in_scope.ones().map(StateId).filter(|&s| !b.contains(s, image(s))).collect();

    let base = Verdict {
        status: Status::Holds,
        scope,
        max_skip: opts.sim.max_skip,
        concrete_states: concrete.num_states(),
        witness: None,
        counterexample: None,
        max_skip_witness: None,
    };

    if failing.is_empty() {
        let rankt =
            extract_rankt_with(&union.lts, b, opts.sim.exec).map_err(|e| Error::CertificationFailed(e.to_string()))?;
        let certificate = RwfskCertificate { rankt };
        let stats = match check_rwfsk_with(&union.lts, b, &certificate, opts.sim.exec)? {
            CertVerdict::Accepted(stats) => stats,
            CertVerdict::Rejected(v) => return Err(Error::CertificationFailed(v.to_string())),
        };
        let max_skip_witness = in_scope
            .ones()
            .map(StateId)
            .filter_map(|s| stats.skip_witness.get(&(s, image(s))).copied())
            .max()
            .unwrap_or(0);
        return Ok(Verdict {
            witness: Some(Witness { relation: sim.relation, certificate }),
            max_skip_witness: Some(max_skip_witness),
            ..base
        });
    }

    let trace = counter_trace(concrete, &union, r, &sim.pruned, b, &failing, opts.sim.max_skip);
    let status = match opts.sim.max_skip {
        // Bound 1 is stuttering refinement, a notion in its own right.
        MaxSkip::Bounded(k) if k >= 2 => {
            let exact =
                RefineOptions { sim: SimOptions { max_skip: MaxSkip::Unbounded, ..opts.sim }, scope: opts.scope };
            if check_skipping_refinement_with(concrete, abstract_, r, &exact)?.holds() {
                Status::UnknownBeyondBound
            } else {
                Status::Fails
            }
        }
        _ => Status::Fails,
    };
    Ok(Verdict { status, counterexample: Some(trace), ..base })
}

/// Shortest run to a failing state, found breadth-first from the initial
/// states with ties going to smaller ids.
fn counter_trace(
    concrete: &Lts,
    union: &DisjointUnion,
    r: &RefinementMap,
    pruned: &std::collections::BTreeMap<(StateId, StateId), PruneRecord>,
    b: &Relation,
    failing: &[StateId],
    max_skip: MaxSkip,
) -> CounterTrace {
    let n = concrete.num_states();
    let mut is_failing = vec![false; n];
    for &s in failing {
        is_failing[s.0] = true;
    }
    let image = |s: StateId| union.embed_abstract(r.apply(s));
    let within = |w: StateId| distances_within(&union.lts, w, max_skip.bound());

    // Breadth-first from the initial states (ties to smaller ids), then any
    // remaining states on their own.
    let mut parent: Vec<Option<StateId>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut roots: Vec<StateId> = concrete.initial().to_vec();
    roots.sort_unstable();
    let mut queue: VecDeque<StateId> = VecDeque::new();
    for s in roots.into_iter().chain(concrete.states()) {
        if seen[s.0] {
            continue;
        }
        seen[s.0] = true;
        queue.push_back(s);
        while let Some(x) = queue.pop_front() {
            order.push(x);
            for &u in concrete.successors(x) {
                if !seen[u.0] {
                    seen[u.0] = true;
                    parent[u.0] = Some(x);
                    queue.push_back(u);
                }
            }
        }
    }

    // Prefer a root cause: a step from a failing state into a state that is
    // simulated by its own image, yet has no answer from the source's image.
    let root = order.iter().filter(|s| is_failing[s.0]).find_map(|&s| {
        let w = image(s);
        let dist = within(w);
        concrete
            .successors(s)
            .iter()
            .find(|&&u| b.contains(u, image(u)) && !b.contains(u, w) && !b.row(u).iter().any(|&v| dist.contains(v)))
            .map(|&u| (s, u, PrunePass::Local))
    });
    let (s, u, pass) = root.unwrap_or_else(|| {
        let s = *order.iter().find(|s| is_failing[s.0]).expect("some state fails");
        let rec = pruned[&(s, image(s))];
        (s, rec.successor, rec.pass)
    });
    let mut stem = vec![s];
    let mut x = s;
    while let Some(p) = parent[x.0] {
        stem.push(p);
        x = p;
    }
    stem.reverse();
    let w = image(s);
    let lts = &union.lts;
    let label = |x: StateId| lts.label(x).to_value();

    let mut candidates = Vec::new();
    let stutter_why = if lts.label(u) != lts.label(w) {
        format!("labels differ: {} vs {}", lts.label(u), lts.label(w))
    } else if b.contains(u, w) {
        "related, but the concrete side can keep stuttering here forever".to_string()
    } else {
        pruned_why(pruned, u, w)
    };
    candidates.push(Candidate {
        state: union.project(w).1,
        distance: 0,
        case: "stutter".into(),
        label: label(w),
        why: stutter_why,
    });
    let mut reachable: Vec<(usize, StateId)> = within(w).iter().map(|(v, d)| (d as usize, v)).collect();
    reachable.sort_unstable();
    for (d, v) in reachable {
        let why = if lts.label(u) != lts.label(v) {
            format!("labels differ: {} vs {}", lts.label(u), lts.label(v))
        } else if b.contains(u, v) {
            "related".to_string()
        } else {
            pruned_why(pruned, u, v)
        };
        candidates.push(Candidate {
            state: union.project(v).1,
            distance: d,
            case: "skip".into(),
            label: label(v),
            why,
        });
    }

    let a = r.apply(s);
    let reason = match pass {
        PrunePass::Local => format!(
            "concrete step {s} -> {u} cannot be answered from abstract state {a}: \
             {u} is related neither to {a} nor to any abstract state reachable from it"
        ),
        PrunePass::Divergence => format!(
            "from concrete state {s} a run of steps starting with {s} -> {u} stutters against \
             abstract state {a} forever without the abstract side making progress"
        ),
    };
    CounterTrace {
        stem_labels: stem.iter().map(|&x| label(x)).collect(),
        stem,
        step: (s, u),
        step_label: label(u),
        image: a,
        pass,
        reason,
        candidates,
    }
}

fn pruned_why(pruned: &std::collections::BTreeMap<(StateId, StateId), PruneRecord>, u: StateId, v: StateId) -> String {
    match pruned.get(&(u, v)) {
        Some(rec) => {
            let pass = match rec.pass {
                PrunePass::Local => "an unmatched step",
                PrunePass::Divergence => "unbounded stuttering",
            };
            format!("not related (removed in round {} for {pass})", rec.round)
        }
        None => "not related".to_string(),
    }
}

/// Human-readable report of a failing verdict.
pub fn explain_counterexample(verdict: &Verdict) -> Result<String> {
    let trace = match (&verdict.status, &verdict.counterexample) {
        (Status::Holds, _) | (_, None) => return Err(Error::NotAFailure),
        (_, Some(t)) => t,
    };
    let mut out = String::new();
    let _ = writeln!(out, "refinement check: {:?} (max skip {})", verdict.status, verdict.max_skip);
    let _ = writeln!(out, "trace:");
    for (i, (s, l)) in trace.stem.iter().zip(&trace.stem_labels).enumerate() {
        let _ = writeln!(out, "  {i:>3}  state {s:<6} {l}");
    }
    let (s, u) = trace.step;
    let _ = writeln!(out, "offending step: {s} -> {u}");
    let _ = writeln!(out, "  reaches       {}", trace.step_label);
    let _ = writeln!(out, "  abstract image of {s}: {}", trace.image);
    let _ = writeln!(out, "reason: {}", trace.reason);
    let _ = writeln!(out, "abstract candidates:");
    const SHOWN: usize = 16;
    for c in trace.candidates.iter().take(SHOWN) {
        let _ = writeln!(out, "  {} {} (+{}) {}: {}", c.case, c.state, c.distance, c.label, c.why);
    }
    if trace.candidates.len() > SHOWN {
        let _ = writeln!(out, "  ... and {} more", trace.candidates.len() - SHOWN);
    }
    if verdict.status == Status::UnknownBeyondBound {
        let _ = writeln!(out, "note: the check holds once longer skips are allowed");
    }
    Ok(out)
}

/// Rank table over a witness, for callers that only want the numbers.
pub fn witness_ranks(verdict: &Verdict) -> Option<&RanktTable> {
    verdict.witness.as_ref().map(|w| &w.certificate.rankt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lts::{build_lts, Label};

    fn l(s: &str) -> Label {
        Label::of(s)
    }

    #[test]
    fn identical_systems_hold() {
        let a = build_lts(3, &[(0, 1), (1, 2), (2, 0)], vec![l("a"), l("b"), l("c")], &[0]).unwrap();
        let v = check_skipping_refinement(&a, &a, &RefinementMap::identity(3), &SimOptions::default()).unwrap();
        assert_eq!(v.status, Status::Holds);
        assert_eq!(v.scope, CheckedScope::ReachableFromInitial);
        let w = v.witness.as_ref().unwrap();
        for s in 0..3 {
            assert!(w.relation.contains(StateId(s), StateId(s + 3)));
        }
        assert!(matches!(explain_counterexample(&v), Err(Error::NotAFailure)));
        let back = Verdict::from_json(&v.to_json()).unwrap();
        assert_eq!(back.status, Status::Holds);
        assert_eq!(back.witness.unwrap().relation.len(), w.relation.len());
    }

    #[test]
    fn skipping_needs_unbounded_steps() {
        // Concrete jumps a -> c, abstract goes a -> b -> c.
        let c = build_lts(2, &[(0, 1), (1, 1)], vec![l("-"), l("-")], &[0]).unwrap();
        let a = build_lts(3, &[(0, 1), (1, 2), (2, 2)], vec![l("a"), l("b"), l("c")], &[0]).unwrap();
        let r = RefinementMap::new(vec![StateId(0), StateId(2)]);
        let v = check_skipping_refinement(&c, &a, &r, &SimOptions::default()).unwrap();
        assert_eq!(v.status, Status::Holds);
        assert_eq!(v.max_skip_witness, Some(2));
        let v1 = check_skipping_refinement(&c, &a, &r, &SimOptions::bounded(1)).unwrap();
        assert_eq!(v1.status, Status::Fails);
        let t = v1.counterexample.as_ref().unwrap();
        t.validate(&c).unwrap();
        assert_eq!(t.stem, vec![StateId(0)]);
        assert_eq!(t.step, (StateId(0), StateId(1)));
        assert!(explain_counterexample(&v1).unwrap().contains("offending step: 0 -> 1"));
        let v2 = check_skipping_refinement(&c, &a, &r, &SimOptions::bounded(2)).unwrap();
        assert_eq!(v2.status, Status::Holds);
    }

    #[test]
    fn bounded_failure_that_exact_fixes_is_unknown() {
        let c = build_lts(2, &[(0, 1), (1, 1)], vec![l("-"), l("-")], &[0]).unwrap();
        let a = build_lts(4, &[(0, 1), (1, 2), (2, 3), (3, 3)], vec![l("a"), l("b"), l("c"), l("d")], &[0]).unwrap();
        let r = RefinementMap::new(vec![StateId(0), StateId(3)]);
        let v = check_skipping_refinement(&c, &a, &r, &SimOptions::bounded(2)).unwrap();
        assert_eq!(v.status, Status::UnknownBeyondBound);
        assert!(v.counterexample.is_some());
    }

    #[test]
    fn wrong_observation_fails_with_shortest_trace() {
        let c = build_lts(3, &[(0, 1), (1, 2), (2, 2)], vec![l("-"); 3], &[0]).unwrap();
        let a = build_lts(3, &[(0, 1), (1, 1), (2, 2)], vec![l("a"), l("b"), l("z")], &[0]).unwrap();
        let r = RefinementMap::new(vec![StateId(0), StateId(1), StateId(2)]);
        let v = check_skipping_refinement(&c, &a, &r, &SimOptions::default()).unwrap();
        assert_eq!(v.status, Status::Fails);
        let t = v.counterexample.unwrap();
        t.validate(&c).unwrap();
        // 0 fails too, but only because of what follows; the trace points
        // at 1 -> 2, which jumps to a label the abstract never reaches.
        assert_eq!(t.stem, vec![StateId(0), StateId(1)]);
        assert_eq!(t.step, (StateId(1), StateId(2)));
        assert_eq!(t.pass, PrunePass::Local);
    }

    #[test]
    fn unreachable_junk_only_matters_for_all_states() {
        let c = build_lts(2, &[(0, 0), (1, 0)], vec![l("-"); 2], &[0]).unwrap();
        let a = build_lts(2, &[(0, 0), (1, 1)], vec![l("a"), l("b")], &[0]).unwrap();
        // Junk state 1 maps to an abstract state that never reaches `a`.
        let r = RefinementMap::new(vec![StateId(0), StateId(1)]);
        let v = check_skipping_refinement(&c, &a, &r, &SimOptions::default()).unwrap();
        assert_eq!(v.status, Status::Holds);
        let opts = RefineOptions::new(SimOptions::default()).all_states();
        let v = check_skipping_refinement_with(&c, &a, &r, &opts).unwrap();
        assert_eq!(v.status, Status::Fails);
        assert_eq!(v.scope, CheckedScope::AllStates);
    }
}
