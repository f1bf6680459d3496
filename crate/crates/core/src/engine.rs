//! Largest skipping simulation of a finite system, and rank extraction.
//!
//! The engine starts from all label-equal pairs and removes pairs until two
//! pruning passes are simultaneously stable:
//!
//! * local: a step `s → u` of a pair `(s, w)` is unmatched when `u` is
//!   neither related to `w` nor to any `v` reachable from `w`;
//! * divergence: in the forced-stutter graph of `w` (steps that can only be
//!   matched by `w` standing still) every pair whose node can reach a cycle
//!   is removed, since no natural-valued rank can decrease forever.
//!
//! What survives is the greatest relation satisfying the reduced
//! well-founded rule, i.e. the largest skipping simulation. Ranks are then
//! longest paths in the (acyclic) forced-stutter graphs.

use std::collections::{BTreeMap, HashMap};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{par_map_range, Exec};
use crate::lts::{distances_plus, Distances, Label, Lts, ReachTable, StateId};
use crate::relation::Relation;
use crate::wfsk::{RanktTable, RwfskCertificate};

/// How far a single step may skip ahead on the matching side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxSkip {
    /// `→^{1..k}`; `k = 1` yields well-founded stuttering simulation.
    Bounded(usize),
    /// Exact `→⁺`.
    Unbounded,
}

impl MaxSkip {
    pub fn bound(self) -> Option<usize> {
        match self {
            MaxSkip::Bounded(k) => Some(k),
            MaxSkip::Unbounded => None,
        }
    }
}

impl std::fmt::Display for MaxSkip {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MaxSkip::Bounded(k) => write!(f, "{k}"),
            MaxSkip::Unbounded => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for MaxSkip {
    type Err = Error;

    /// `inf` or a bound of at least 1.
    fn from_str(s: &str) -> Result<MaxSkip> {
        match s.trim() {
            "inf" | "unbounded" => Ok(MaxSkip::Unbounded),
            k => match k.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(MaxSkip::Bounded(k)),
                _ => Err(Error::InvalidParams(format!("max skip must be a positive integer or `inf`, got `{s}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub max_skip: MaxSkip,
    pub exec: Exec,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { max_skip: MaxSkip::Unbounded, exec: Exec::default() }
    }
}

impl SimOptions {
    pub fn bounded(k: usize) -> SimOptions {
        SimOptions { max_skip: MaxSkip::Bounded(k.max(1)), ..Default::default() }
    }

    pub fn unbounded() -> SimOptions {
        SimOptions::default()
    }

    pub fn with_exec(mut self, exec: Exec) -> SimOptions {
        self.exec = exec;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrunePass {
    Local,
    Divergence,
}

/// Why and when a pair left the relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneRecord {
    pub pass: PrunePass,
    pub round: usize,
    /// The successor of `s` whose step could not be matched (local), or the
    /// first forced step on the way to a cycle (divergence).
    pub successor: StateId,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub relation: Relation,
    pub pruned: BTreeMap<(StateId, StateId), PruneRecord>,
    pub rounds: usize,
}

/// Order in which the two passes run within a round. Only used to show the
/// fixpoint does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PassOrder {
    LocalFirst,
    #[cfg_attr(not(test), allow(dead_code))]
    DivergenceFirst,
}

/// Pair universe: all label-equal pairs, indexed densely.
struct Pairs {
    /// Row of `s`: `(w, pair id)` sorted by `w`.
    rows: Vec<Vec<(StateId, usize)>>,
    /// Column of `w`: `(s, pair id)` sorted by `s`.
    cols: Vec<Vec<(StateId, usize)>>,
    list: Vec<(StateId, StateId)>,
}

impl Pairs {
    fn label_equal(lts: &Lts) -> Pairs {
        let n = lts.num_states();
        let mut classes: HashMap<&Label, Vec<StateId>> = HashMap::new();
        for s in lts.states() {
            classes.entry(lts.label(s)).or_default().push(s);
        }
        let mut rows = vec![Vec::new(); n];
        let mut class_of: Vec<&[StateId]> = vec![&[]; n];
        for members in classes.values() {
            for &s in members {
                class_of[s.0] = members;
            }
        }
        let mut list = Vec::new();
        for s in lts.states() {
            for &w in class_of[s.0] {
                rows[s.0].push((w, list.len()));
                list.push((s, w));
            }
        }
        Pairs::index(n, rows, list)
    }

    fn from_relation(b: &Relation) -> Pairs {
        let n = b.universe();
        let mut rows = vec![Vec::new(); n];
        let mut list = Vec::new();
        for (s, w) in b.iter() {
            rows[s.0].push((w, list.len()));
            list.push((s, w));
        }
        Pairs::index(n, rows, list)
    }

    fn index(n: usize, rows: Vec<Vec<(StateId, usize)>>, list: Vec<(StateId, StateId)>) -> Pairs {
        let mut cols = vec![Vec::new(); n];
        for (id, &(s, w)) in list.iter().enumerate() {
            cols[w.0].push((s, id));
        }
        Pairs { rows, cols, list }
    }

    #[inline]
    fn id(&self, s: StateId, w: StateId) -> Option<usize> {
        let row = &self.rows[s.0];
        row.binary_search_by_key(&w, |&(x, _)| x).ok().map(|i| row[i].1)
    }
}

struct State<'a> {
    lts: &'a Lts,
    pairs: Pairs,
    alive: FixedBitSet,
    reach: ReachTable,
    exec: Exec,
}

impl State<'_> {
    #[inline]
    fn related(&self, s: StateId, w: StateId) -> bool {
        self.pairs.id(s, w).is_some_and(|id| self.alive.contains(id))
    }

    /// Some `v` with `w → … → v` (per the skip bound) and `u B v`.
    #[inline]
    fn escapes(&self, u: StateId, w: StateId) -> bool {
        self.pairs.rows[u.0].iter().any(|&(v, id)| self.alive.contains(id) && self.reach.contains(w, v))
    }

    fn local_pass(&self) -> Vec<(usize, StateId)> {
        let chunks = par_map_range(self.exec, self.lts.num_states(), |s| {
            let s = StateId(s);
            let mut out = Vec::new();
            for &(w, id) in &self.pairs.rows[s.0] {
                if !self.alive.contains(id) {
                    continue;
                }
                if let Some(&u) = self.lts.successors(s).iter().find(|&&u| !self.related(u, w) && !self.escapes(u, w)) {
                    out.push((id, u));
                }
            }
            out
        });
        chunks.into_iter().flatten().collect()
    }

    /// Forced-stutter edges of column `w`: `s → u` with `u B w` and no escape.
    fn forced_edges(&self, w: StateId) -> Vec<(StateId, StateId)> {
        let mut edges = Vec::new();
        for &(s, id) in &self.pairs.cols[w.0] {
            if !self.alive.contains(id) {
                continue;
            }
            for &u in self.lts.successors(s) {
                if self.related(u, w) && !self.escapes(u, w) {
                    edges.push((s, u));
                }
            }
        }
        edges
    }

    fn divergence_pass(&self) -> Vec<(usize, StateId)> {
        let chunks = par_map_range(self.exec, self.lts.num_states(), |w| {
            let w = StateId(w);
            let edges = self.forced_edges(w);
            if edges.is_empty() {
                return Vec::new();
            }
            diverging_nodes(&edges)
                .into_iter()
                .map(|(s, next)| (self.pairs.id(s, w).expect("node is a live pair"), next))
                .collect()
        });
        chunks.into_iter().flatten().collect()
    }

    fn apply(
        &mut self,
        removals: &[(usize, StateId)],
        pass: PrunePass,
        round: usize,
        log: &mut BTreeMap<(StateId, StateId), PruneRecord>,
    ) -> bool {
        let mut changed = false;
        for &(id, successor) in removals {
            if self.alive.contains(id) {
                self.alive.set(id, false);
                log.insert(self.pairs.list[id], PruneRecord { pass, round, successor });
                changed = true;
            }
        }
        changed
    }

    fn relation(&self) -> Relation {
        Relation::from_pairs(self.lts.num_states(), self.alive.ones().map(|id| self.pairs.list[id]))
            .expect("pairs reference valid states")
    }
}

/// Nodes of a graph (given by its edge list) that can reach a cycle, each
/// with its first edge on some path toward that cycle.
fn diverging_nodes(edges: &[(StateId, StateId)]) -> Vec<(StateId, StateId)> {
    let mut ids: BTreeMap<StateId, usize> = BTreeMap::new();
    for &(a, b) in edges {
        let k = ids.len();
        ids.entry(a).or_insert(k);
        let k = ids.len();
        ids.entry(b).or_insert(k);
    }
    let nodes: Vec<StateId> = {
        let mut v = vec![StateId(0); ids.len()];
        for (&s, &i) in &ids {
            v[i] = s;
        }
        v
    };
    let m = nodes.len();
    let mut adj = vec![Vec::new(); m];
    let mut radj = vec![Vec::new(); m];
    for &(a, b) in edges {
        let (ia, ib) = (ids[&a], ids[&b]);
        adj[ia].push(ib);
        radj[ib].push(ia);
    }
    for l in adj.iter_mut().chain(radj.iter_mut()) {
        l.sort_unstable();
        l.dedup();
    }
    let comp = tarjan(&adj);
    let mut comp_size = vec![0usize; m];
    for &c in &comp {
        comp_size[c] += 1;
    }
    // `via[x]` = successor of x on a path to a cycle.
    let mut via: Vec<Option<usize>> = vec![None; m];
    let mut queue = std::collections::VecDeque::new();
    for x in 0..m {
        let cyclic = comp_size[comp[x]] > 1 || adj[x].contains(&x);
        if cyclic {
            via[x] = adj[x].iter().copied().find(|&y| comp[y] == comp[x]);
            queue.push_back(x);
        }
    }
    while let Some(y) = queue.pop_front() {
        for &x in &radj[y] {
            if via[x].is_none() {
                via[x] = Some(y);
                queue.push_back(x);
            }
        }
    }
    let mut out: Vec<(StateId, StateId)> = (0..m).filter_map(|x| via[x].map(|y| (nodes[x], nodes[y]))).collect();
    out.sort_unstable();
    out
}

/// Iterative Tarjan; returns the component index of each node.
pub(crate) fn tarjan(adj: &[Vec<usize>]) -> Vec<usize> {
    let m = adj.len();
    let mut index = vec![usize::MAX; m];
    let mut low = vec![0; m];
    let mut on_stack = vec![false; m];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; m];
    let (mut next_index, mut next_comp) = (0, 0);
    for root in 0..m {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let x = stack.pop().unwrap();
                        on_stack[x] = false;
                        comp[x] = next_comp;
                        if x == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// Largest skipping simulation of `lts` (largest stuttering-style relation
/// when `max_skip` is bounded).
pub fn largest_sks(lts: &Lts, opts: &SimOptions) -> Relation {
    largest_sks_traced(lts, opts).relation
}

/// [`largest_sks`] together with the pruning log.
pub fn largest_sks_traced(lts: &Lts, opts: &SimOptions) -> SimResult {
    run(lts, opts, PassOrder::LocalFirst)
}

pub(crate) fn run(lts: &Lts, opts: &SimOptions, order: PassOrder) -> SimResult {
    let pairs = Pairs::label_equal(lts);
    let mut alive = FixedBitSet::with_capacity(pairs.list.len());
    alive.insert_range(..);
    let mut st =
        State { lts, reach: ReachTable::compute(lts, opts.max_skip.bound(), opts.exec), pairs, alive, exec: opts.exec };
    let mut log = BTreeMap::new();
    let mut round = 0;
    loop {
        round += 1;
        let mut changed = false;
        let passes = match order {
            PassOrder::LocalFirst => [PrunePass::Local, PrunePass::Divergence],
            PassOrder::DivergenceFirst => [PrunePass::Divergence, PrunePass::Local],
        };
        for pass in passes {
            // Each pass is iterated to its own stability before switching.
            loop {
                let removals = match pass {
                    PrunePass::Local => st.local_pass(),
                    PrunePass::Divergence => st.divergence_pass(),
                };
                if !st.apply(&removals, pass, round, &mut log) {
                    break;
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    SimResult { relation: st.relation(), pruned: log, rounds: round }
}

/// Whether both passes leave `b` unchanged, i.e. `b` is a post-fixpoint.
pub fn is_engine_valid(lts: &Lts, b: &Relation, opts: &SimOptions) -> bool {
    let pairs = Pairs::from_relation(b);
    let mut alive = FixedBitSet::with_capacity(pairs.list.len());
    alive.insert_range(..);
    let st =
        State { lts, reach: ReachTable::compute(lts, opts.max_skip.bound(), opts.exec), pairs, alive, exec: opts.exec };
    let labels_ok = b.iter().all(|(s, w)| lts.label(s) == lts.label(w));
    labels_ok && st.local_pass().is_empty() && st.divergence_pass().is_empty()
}

/// Steps from column `w` that only a rank decrease can discharge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcedStutterGraph {
    pub w: StateId,
    pub nodes: Vec<StateId>,
    pub edges: Vec<(StateId, StateId)>,
}

/// Forced-stutter graph of `w` under `b`, with exact `→⁺` escapes.
pub fn forced_stutter_graph(lts: &Lts, b: &Relation, w: StateId) -> Result<ForcedStutterGraph> {
    lts.check_state(w)?;
    let nodes: Vec<StateId> = lts.states().filter(|&s| b.contains(s, w)).collect();
    Ok(forced_graph_with(lts, b, w, nodes, &distances_plus(lts, w)))
}

fn forced_graph_with(lts: &Lts, b: &Relation, w: StateId, nodes: Vec<StateId>, plus: &Distances) -> ForcedStutterGraph {
    let mut edges = Vec::new();
    for &s in &nodes {
        for &u in lts.successors(s) {
            if b.contains(u, w) && !b.row(u).iter().any(|&v| plus.contains(v)) {
                edges.push((s, u));
            }
        }
    }
    ForcedStutterGraph { w, nodes, edges }
}

/// `rankt(s, w)` = length of the longest path from `s` in the forced-stutter
/// graph of `w`.
pub fn extract_rankt(lts: &Lts, b: &Relation) -> Result<RanktTable> {
    extract_rankt_with(lts, b, Exec::default())
}

pub fn extract_rankt_with(lts: &Lts, b: &Relation, exec: Exec) -> Result<RanktTable> {
    let mut cols: Vec<Vec<StateId>> = vec![Vec::new(); lts.num_states()];
    for (s, w) in b.iter() {
        cols[w.0].push(s);
    }
    let per_w = par_map_range(exec, lts.num_states(), |w| -> Result<Vec<(StateId, StateId, u64)>> {
        let w = StateId(w);
        if cols[w.0].is_empty() {
            return Ok(Vec::new());
        }
        let g = forced_graph_with(lts, b, w, cols[w.0].clone(), &distances_plus(lts, w));
        let heights = longest_paths(&g)?;
        Ok(cols[w.0].iter().map(|&s| (s, w, heights.get(&s).copied().unwrap_or(0))).collect())
    });
    let mut table = RanktTable::new();
    for chunk in per_w {
        for (s, w, h) in chunk? {
            table.insert(s, w, h);
        }
    }
    Ok(table)
}

/// Convenience: engine relation plus its extracted certificate.
pub fn certificate_for(lts: &Lts, b: &Relation) -> Result<RwfskCertificate> {
    Ok(RwfskCertificate { rankt: extract_rankt(lts, b)? })
}

fn longest_paths(g: &ForcedStutterGraph) -> Result<HashMap<StateId, u64>> {
    let mut adj: HashMap<StateId, Vec<StateId>> = HashMap::new();
    for &(a, b) in &g.edges {
        adj.entry(a).or_default().push(b);
    }
    // 0 = unvisited, 1 = on stack, 2 = done.
    let mut mark: HashMap<StateId, u8> = HashMap::new();
    let mut height: HashMap<StateId, u64> = HashMap::new();
    let empty = Vec::new();
    for &root in &g.nodes {
        if mark.get(&root).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut stack: Vec<(StateId, usize)> = vec![(root, 0)];
        mark.insert(root, 1);
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            let succ = adj.get(&v).unwrap_or(&empty);
            if *i < succ.len() {
                let u = succ[*i];
                *i += 1;
                match mark.get(&u).copied().unwrap_or(0) {
                    0 => {
                        mark.insert(u, 1);
                        stack.push((u, 0));
                    }
                    1 => return Err(Error::CyclicForcedStutter { s: u, w: g.w }),
                    _ => {}
                }
            } else {
                let h = succ.iter().map(|u| height[u] + 1).max().unwrap_or(0);
                height.insert(v, h);
                mark.insert(v, 2);
                stack.pop();
            }
        }
    }
    Ok(height)
}
