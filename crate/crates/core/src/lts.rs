//! Finite labeled transition systems.
//!
//! States are dense integer ids. Labels are stored in canonical JSON form
//! (object keys sorted), so two labels are equal exactly when their
//! canonical serializations are byte-equal.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exec::{par_map_range, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub usize);

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for StateId {
    fn from(i: usize) -> Self {
        StateId(i)
    }
}

/// Observable datum of a state, held in canonical serialized form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(String);

impl Label {
    pub fn from_value(v: &Value) -> Label {
        // serde_json's default map is a BTreeMap, so keys come out sorted.
        Label(serde_json::to_string(v).expect("JSON values always serialize"))
    }

    pub fn of<T: Serialize + ?Sized>(t: &T) -> Label {
        let v = serde_json::to_value(t).expect("label type must serialize to JSON");
        Label::from_value(&v)
    }

    pub fn canonical(&self) -> &str {
        &self.0
    }

    pub fn to_value(&self) -> Value {
        serde_json::from_str(&self.0).expect("canonical label is valid JSON")
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A finite labeled transition system with a left-total transition relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lts {
    succ: Vec<Vec<StateId>>,
    labels: Vec<Label>,
    initial: Vec<StateId>,
}

/// Validates and builds an [`Lts`].
///
/// Duplicate transitions are merged and successor lists are kept sorted.
pub fn build_lts(states: usize, transitions: &[(usize, usize)], labels: Vec<Label>, initial: &[usize]) -> Result<Lts> {
    if states == 0 {
        return Err(Error::EmptyStateSpace);
    }
    if labels.len() != states {
        return Err(Error::PartialLabeling { labels: labels.len(), states });
    }
    let mut succ = vec![Vec::new(); states];
    for &(s, u) in transitions {
        for id in [s, u] {
            if id >= states {
                return Err(Error::DanglingState { id, states });
            }
        }
        succ[s].push(StateId(u));
    }
    for list in &mut succ {
        list.sort_unstable();
        list.dedup();
    }
    if let Some(s) = succ.iter().position(Vec::is_empty) {
        return Err(Error::NotLeftTotal(StateId(s)));
    }
    let mut init = Vec::with_capacity(initial.len());
    for &i in initial {
        if i >= states {
            return Err(Error::DanglingState { id: i, states });
        }
        init.push(StateId(i));
    }
    init.sort_unstable();
    init.dedup();
    Ok(Lts { succ, labels, initial: init })
}

impl Lts {
    pub fn num_states(&self) -> usize {
        self.succ.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.succ.len()).map(StateId)
    }

    #[inline]
    pub fn successors(&self, s: StateId) -> &[StateId] {
        &self.succ[s.0]
    }

    #[inline]
    pub fn label(&self, s: StateId) -> &Label {
        &self.labels[s.0]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn initial(&self) -> &[StateId] {
        &self.initial
    }

    pub fn has_transition(&self, s: StateId, u: StateId) -> bool {
        self.succ[s.0].binary_search(&u).is_ok()
    }

    pub fn num_transitions(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn transitions(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        self.succ.iter().enumerate().flat_map(|(s, us)| us.iter().map(move |&u| (StateId(s), u)))
    }

    pub fn check_state(&self, s: StateId) -> Result<()> {
        if s.0 < self.succ.len() {
            Ok(())
        } else {
            Err(Error::InvalidState { id: s.0, states: self.succ.len() })
        }
    }

    /// Copy of this system with a different set of initial states.
    pub fn with_initial(&self, initial: &[StateId]) -> Result<Lts> {
        for &s in initial {
            self.check_state(s)?;
        }
        let mut init = initial.to_vec();
        init.sort_unstable();
        init.dedup();
        Ok(Lts { succ: self.succ.clone(), labels: self.labels.clone(), initial: init })
    }

    /// Set of states reachable from the initial states (all states when none
    /// are declared).
    pub fn reachable_from_initial(&self) -> FixedBitSet {
        let n = self.num_states();
        let mut seen = FixedBitSet::with_capacity(n);
        if self.initial.is_empty() {
            seen.insert_range(..);
            return seen;
        }
        let mut queue: VecDeque<StateId> = VecDeque::new();
        for &s in &self.initial {
            if !seen.put(s.0) {
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &u in self.successors(s) {
                if !seen.put(u.0) {
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    pub fn to_json_value(&self) -> Value {
        serde_json::to_value(LtsFile::from(self)).expect("LTS serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LtsFile::from(self)).expect("LTS serializes")
    }

    pub fn from_json(text: &str) -> Result<Lts> {
        let file: LtsFile = serde_json::from_str(text)?;
        file.into_lts()
    }

    pub fn from_json_value(v: Value) -> Result<Lts> {
        let file: LtsFile = serde_json::from_value(v)?;
        file.into_lts()
    }
}

/// On-disk form: `{"states": N, "labels": [..], "transitions": [[s,u],..], "initial": [..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LtsFile {
    pub states: usize,
    pub labels: Vec<Value>,
    pub transitions: Vec<[usize; 2]>,
    #[serde(default)]
    pub initial: Vec<usize>,
}

impl From<&Lts> for LtsFile {
    fn from(lts: &Lts) -> Self {
        LtsFile {
            states: lts.num_states(),
            labels: lts.labels.iter().map(Label::to_value).collect(),
            transitions: lts.transitions().map(|(s, u)| [s.0, u.0]).collect(),
            initial: lts.initial.iter().map(|s| s.0).collect(),
        }
    }
}

impl LtsFile {
    pub fn into_lts(self) -> Result<Lts> {
        let labels = self.labels.iter().map(Label::from_value).collect();
        let transitions: Vec<(usize, usize)> = self.transitions.iter().map(|t| (t[0], t[1])).collect();
        build_lts(self.states, &transitions, labels, &self.initial)
    }
}

/// Which composition of the transition relation a reach query ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachKind {
    /// `s R^i v`, i ≥ 1.
    Exactly(usize),
    /// `s R^+ v`.
    Plus,
    /// `s R^{≥k} v`, k ≥ 1.
    AtLeast(usize),
    /// `s R^i v` for some `1 ≤ i ≤ k`.
    Within(usize),
}

/// States reachable from `s` by the composition selected by `kind`.
pub fn reach(lts: &Lts, s: StateId, kind: ReachKind) -> Result<BTreeSet<StateId>> {
    lts.check_state(s)?;
    let set = match kind {
        ReachKind::Exactly(i) => {
            if i == 0 {
                return Err(Error::InvalidReachBound(i));
            }
            exact_layer(lts, s, i)
        }
        ReachKind::Plus => bounded_reach(lts, s, None),
        ReachKind::Within(k) => {
            if k == 0 {
                return Err(Error::InvalidReachBound(k));
            }
            bounded_reach(lts, s, Some(k))
        }
        ReachKind::AtLeast(k) => {
            if k == 0 {
                return Err(Error::InvalidReachBound(k));
            }
            at_least(lts, s, k)
        }
    };
    Ok(set.ones().map(StateId).collect())
}

fn step_set(lts: &Lts, from: &FixedBitSet) -> FixedBitSet {
    let mut next = FixedBitSet::with_capacity(lts.num_states());
    for s in from.ones() {
        for &u in lts.successors(StateId(s)) {
            next.insert(u.0);
        }
    }
    next
}

/// Exact-length layers are eventually periodic; once a layer repeats we can
/// jump straight to the requested index.
fn exact_layer(lts: &Lts, s: StateId, i: usize) -> FixedBitSet {
    let mut cur = FixedBitSet::with_capacity(lts.num_states());
    cur.insert(s.0);
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut history: Vec<FixedBitSet> = Vec::new();
    let mut step = 0;
    while step < i {
        let key: Vec<usize> = cur.ones().collect();
        if let Some(&first) = seen.get(&key) {
            let period = step - first;
            let idx = first + (i - first) % period;
            return history[idx].clone();
        }
        seen.insert(key, step);
        history.push(cur.clone());
        cur = step_set(lts, &cur);
        step += 1;
    }
    cur
}

fn at_least(lts: &Lts, s: StateId, k: usize) -> FixedBitSet {
    // Any walk longer than k + |S| has a removable cycle past step k, so the
    // union over lengths k..=k+|S| is exact.
    let n = lts.num_states();
    let mut layer = exact_layer(lts, s, k);
    let mut acc = layer.clone();
    for _ in 0..n {
        layer = step_set(lts, &layer);
        acc.union_with(&layer);
    }
    acc
}

/// States `v` with `s →^i v` for some `1 ≤ i ≤ bound` (any `i ≥ 1` when the
/// bound is absent).
pub(crate) fn bounded_reach(lts: &Lts, s: StateId, bound: Option<usize>) -> FixedBitSet {
    let n = lts.num_states();
    let mut seen = FixedBitSet::with_capacity(n);
    let mut frontier: Vec<StateId> = vec![s];
    let mut depth = 0;
    while !frontier.is_empty() {
        if bound.is_some_and(|b| depth >= b) {
            break;
        }
        depth += 1;
        let mut next = Vec::new();
        for &x in &frontier {
            for &u in lts.successors(x) {
                if !seen.put(u.0) {
                    next.push(u);
                }
            }
        }
        frontier = next;
    }
    seen
}

/// Shortest distances (at least one step) from a source, stored sparsely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distances {
    /// Sorted by state.
    entries: Vec<(StateId, u32)>,
}

impl Distances {
    #[inline]
    pub fn get(&self, v: StateId) -> Option<u32> {
        self.entries.binary_search_by_key(&v, |&(x, _)| x).ok().map(|i| self.entries[i].1)
    }

    #[inline]
    pub fn contains(&self, v: StateId) -> bool {
        self.get(v).is_some()
    }

    /// `(state, distance)` in ascending state order.
    pub fn iter(&self) -> impl Iterator<Item = (StateId, u32)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Minimum number of steps (at least one) from `s` to each reachable state.
pub fn distances_plus(lts: &Lts, s: StateId) -> Distances {
    distances_within(lts, s, None)
}

/// Like [`distances_plus`], keeping only distances up to `bound`.
pub fn distances_within(lts: &Lts, s: StateId, bound: Option<usize>) -> Distances {
    let mut dist: HashMap<StateId, u32> = HashMap::new();
    let mut frontier = vec![s];
    let mut d = 0u32;
    while !frontier.is_empty() && bound.is_none_or(|b| (d as usize) < b) {
        d += 1;
        let mut next = Vec::new();
        for &x in &frontier {
            for &u in lts.successors(x) {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(u) {
                    e.insert(d);
                    next.push(u);
                }
            }
        }
        frontier = next;
    }
    let mut entries: Vec<(StateId, u32)> = dist.into_iter().collect();
    entries.sort_unstable();
    Distances { entries }
}

/// A shortest path of at least one step from `from` to `to`, both endpoints
/// included. Successors are explored in ascending id order, so the result is
/// deterministic.
pub fn shortest_path_plus(lts: &Lts, from: StateId, to: StateId) -> Option<Vec<StateId>> {
    let n = lts.num_states();
    let mut parent: Vec<Option<StateId>> = vec![None; n];
    let mut queue = VecDeque::new();
    for &u in lts.successors(from) {
        if parent[u.0].is_none() {
            parent[u.0] = Some(from);
            queue.push_back(u);
        }
    }
    while let Some(x) = queue.pop_front() {
        if x == to {
            let mut path = vec![to];
            let mut cur = to;
            loop {
                let p = parent[cur.0].expect("BFS tree parent");
                path.push(p);
                if p == from {
                    break;
                }
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for &u in lts.successors(x) {
            if parent[u.0].is_none() {
                parent[u.0] = Some(x);
                queue.push_back(u);
            }
        }
    }
    None
}

/// Step-bounded reachability for every state, as sorted sparse rows.
#[derive(Debug, Clone)]
pub struct ReachTable {
    rows: Vec<Box<[StateId]>>,
}

impl ReachTable {
    /// `bound = None` gives `→⁺`; `Some(k)` gives `→^{1..k}`.
    pub fn compute(lts: &Lts, bound: Option<usize>, exec: Exec) -> ReachTable {
        let rows = par_map_range(exec, lts.num_states(), |s| {
            distances_within(lts, StateId(s), bound).iter().map(|(v, _)| v).collect()
        });
        ReachTable { rows }
    }

    #[inline]
    pub fn contains(&self, from: StateId, to: StateId) -> bool {
        self.rows[from.0].binary_search(&to).is_ok()
    }

    /// States reachable from `from`, ascending.
    pub fn row(&self, from: StateId) -> &[StateId] {
        &self.rows[from.0]
    }
}
