//! Fullpath matching for lasso-shaped paths.
//!
//! A [`Lasso`] denotes the fullpath `stem · loop^ω`. [`find_match`] decides
//! whether such a path is matched, under a relation `B`, by some fullpath
//! from a given state, and reconstructs eventually periodic partitions and
//! the matching path when it is.
//!
//! The search runs on a product graph whose nodes are pairs
//! `(position class of σ, current head of δ's segment)`. A STAY edge extends
//! the current σ segment; an ADVANCE edge closes both segments, letting δ
//! take a finite non-empty path to the next head. A match exists iff some
//! reachable cycle contains an ADVANCE edge.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lts::{shortest_path_plus, Lts, ReachTable, StateId};
use crate::relation::Relation;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lasso {
    pub stem: Vec<StateId>,
    #[serde(rename = "loop")]
    pub cycle: Vec<StateId>,
}

impl Lasso {
    pub fn new(stem: Vec<StateId>, cycle: Vec<StateId>) -> Lasso {
        Lasso { stem, cycle }
    }

    /// Checks non-emptiness of the loop and that consecutive states,
    /// including stem→loop and the wrap-around, are transitions.
    pub fn validate(&self, lts: &Lts) -> Result<()> {
        if self.cycle.is_empty() {
            return Err(Error::InvalidLasso("loop is empty".into()));
        }
        for &s in self.stem.iter().chain(&self.cycle) {
            lts.check_state(s)?;
        }
        let total = self.stem.len() + self.cycle.len();
        for i in 0..total {
            let (a, b) = (self.at(i), self.at(i + 1));
            if !lts.has_transition(a, b) {
                return Err(Error::InvalidLasso(format!("{a} -> {b} at position {i} is not a transition")));
            }
        }
        Ok(())
    }

    pub fn start(&self) -> StateId {
        self.stem.first().copied().unwrap_or(self.cycle[0])
    }

    /// `σ(i)`.
    #[inline]
    pub fn at(&self, i: usize) -> StateId {
        let m = self.stem.len();
        if i < m {
            self.stem[i]
        } else {
            self.cycle[(i - m) % self.cycle.len()]
        }
    }

    /// Number of distinct position classes (`|stem| + |loop|`).
    pub fn classes(&self) -> usize {
        self.stem.len() + self.cycle.len()
    }

    #[inline]
    fn next_class(&self, k: usize) -> usize {
        if k + 1 < self.classes() {
            k + 1
        } else {
            self.stem.len()
        }
    }

    /// Whether this is the shortest description of its fullpath: the stem
    /// cannot be shortened by rotating the loop, and the loop is not a
    /// repetition of a shorter loop. Every fullpath with a lasso form has
    /// exactly one canonical lasso.
    pub fn is_canonical(&self) -> bool {
        let l = self.cycle.len();
        if self.stem.last().is_some_and(|x| Some(x) == self.cycle.last()) {
            return false;
        }
        !(1..l).any(|d| l.is_multiple_of(d) && (0..l).all(|i| self.cycle[i] == self.cycle[i % d]))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("lasso serializes")
    }

    pub fn from_json(text: &str) -> Result<Lasso> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Periodic continuation of a [`PartitionIndex`]: entries from
/// `period_start` onward repeat, shifted by `stride` each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tail {
    pub period_start: usize,
    pub stride: usize,
}

/// A strictly increasing sequence of naturals beginning at 0, given by an
/// explicit prefix and an optional periodic tail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PartitionFile", into = "PartitionFile")]
pub struct PartitionIndex {
    cuts: Vec<usize>,
    tail: Option<Tail>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PartitionFile {
    cuts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    period_start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stride: Option<usize>,
}

impl TryFrom<PartitionFile> for PartitionIndex {
    type Error = Error;

    fn try_from(f: PartitionFile) -> Result<Self> {
        let tail = match (f.period_start, f.stride) {
            (Some(period_start), Some(stride)) => Some(Tail { period_start, stride }),
            (None, None) => None,
            _ => return Err(Error::InvalidPartition("period_start and stride must be given together".into())),
        };
        PartitionIndex::new(f.cuts, tail)
    }
}

impl From<PartitionIndex> for PartitionFile {
    fn from(p: PartitionIndex) -> Self {
        PartitionFile { cuts: p.cuts, period_start: p.tail.map(|t| t.period_start), stride: p.tail.map(|t| t.stride) }
    }
}

impl PartitionIndex {
    pub fn new(cuts: Vec<usize>, tail: Option<Tail>) -> Result<PartitionIndex> {
        if cuts.first() != Some(&0) {
            return Err(Error::InvalidPartition("cuts must begin at 0".into()));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPartition("cuts must be strictly increasing".into()));
        }
        if let Some(t) = tail {
            if t.period_start >= cuts.len() {
                return Err(Error::InvalidPartition("period_start beyond explicit cuts".into()));
            }
            if t.stride == 0 {
                return Err(Error::InvalidPartition("stride must be at least 1".into()));
            }
            if cuts[t.period_start] + t.stride <= *cuts.last().unwrap() {
                return Err(Error::InvalidPartition("stride too small to keep the tail increasing".into()));
            }
        }
        Ok(PartitionIndex { cuts, tail })
    }

    /// `(0, 1, 2, ...)`: every segment is a singleton.
    pub fn unit() -> PartitionIndex {
        PartitionIndex { cuts: vec![0], tail: Some(Tail { period_start: 0, stride: 1 }) }
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    pub fn tail(&self) -> Option<Tail> {
        self.tail
    }

    /// `π.i`, if resolvable.
    pub fn get(&self, i: usize) -> Option<usize> {
        if i < self.cuts.len() {
            return Some(self.cuts[i]);
        }
        let t = self.tail?;
        let plen = self.cuts.len() - t.period_start;
        let j = i - t.period_start;
        Some(self.cuts[t.period_start + j % plen] + (j / plen) * t.stride)
    }

    fn period_len(&self) -> Option<usize> {
        self.tail.map(|t| self.cuts.len() - t.period_start)
    }
}

/// The `i`-th segment `⟨σ(π.i), …, σ(π.(i+1) − 1)⟩`.
pub fn segment_of(sigma: &Lasso, pi: &PartitionIndex, i: usize) -> Result<Vec<StateId>> {
    let lo = pi.get(i).ok_or(Error::IndexOutOfRange { index: i })?;
    let hi = pi.get(i + 1).ok_or(Error::IndexOutOfRange { index: i })?;
    Ok((lo..hi).map(|p| sigma.at(p)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchWitness {
    pub pi: PartitionIndex,
    pub xi: PartitionIndex,
    pub delta: Lasso,
}

/// Why no match exists: the product nodes reachable from the start node,
/// none of which lies on a cycle through an ADVANCE edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoMatch {
    pub frontier: Vec<(usize, StateId)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchOutcome {
    Matched(MatchWitness),
    NoMatch(NoMatch),
}

impl MatchOutcome {
    pub fn is_match(&self) -> bool {
        matches!(self, MatchOutcome::Matched(_))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Independent check of `corr(B, σ, π, δ, ξ)`.
///
/// Both partitions must carry periodic tails. Segments are checked up to the
/// point where every object involved (σ, δ, π and ξ) has returned to the
/// same phase, after which the pattern repeats.
pub fn corr_holds(
    b: &Relation,
    sigma: &Lasso,
    pi: &PartitionIndex,
    delta: &Lasso,
    xi: &PartitionIndex,
) -> Result<bool> {
    let (tp, tx) = match (pi.tail, xi.tail) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidPartition("corr needs infinite (periodic) partitions".into())),
    };
    let (lp, lx) = (pi.period_len().unwrap(), xi.period_len().unwrap());
    let block = lcm(lp, lx);
    let shift_sigma = tp.stride * (block / lp);
    let shift_delta = tx.stride * (block / lx);
    let ls = sigma.cycle.len();
    let ld = delta.cycle.len();
    let reps = lcm(ls / gcd(ls, shift_sigma), ld / gcd(ld, shift_delta));

    let mut start = pi.cuts.len().max(xi.cuts.len());
    while pi.get(start).unwrap() < sigma.stem.len() || xi.get(start).unwrap() < delta.stem.len() {
        start += 1;
    }
    let end = start + reps * block;
    for i in 0..end {
        let head = delta.at(xi.get(i).unwrap());
        let (lo, hi) = (pi.get(i).unwrap(), pi.get(i + 1).unwrap());
        if (lo..hi).any(|p| !b.contains(sigma.at(p), head)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks that `w` is `δ(0)`, that δ is a valid lasso and that corr holds.
pub fn verify_witness(lts: &Lts, b: &Relation, sigma: &Lasso, w: StateId, witness: &MatchWitness) -> Result<bool> {
    witness.delta.validate(lts)?;
    if witness.delta.start() != w {
        return Ok(false);
    }
    corr_holds(b, sigma, &witness.pi, &witness.delta, &witness.xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edge {
    Stay,
    Advance,
}

/// Reusable matcher: caches the `→⁺` closure of the system.
pub struct Matcher<'a> {
    lts: &'a Lts,
    b: &'a Relation,
    plus: ReachTable,
}

impl<'a> Matcher<'a> {
    pub fn new(lts: &'a Lts, b: &'a Relation) -> Matcher<'a> {
        Matcher { lts, b, plus: ReachTable::compute(lts, None, Exec::Sequential) }
    }

    pub fn with_reach(lts: &'a Lts, b: &'a Relation, plus: ReachTable) -> Matcher<'a> {
        Matcher { lts, b, plus }
    }

    fn successors(&self, sigma: &Lasso, node: (usize, StateId), out: &mut Vec<((usize, StateId), Edge)>) {
        out.clear();
        let (k, a) = node;
        let k2 = sigma.next_class(k);
        let next = sigma.at(k2);
        if self.b.contains(next, a) {
            out.push(((k2, a), Edge::Stay));
        }
        for &a2 in self.b.row(next) {
            if self.plus.contains(a, a2) {
                out.push(((k2, a2), Edge::Advance));
            }
        }
    }

    /// Decides whether `sigma` is matched from `w`, returning a verified
    /// witness when it is.
    pub fn find_match(&self, sigma: &Lasso, w: StateId) -> Result<MatchOutcome> {
        sigma.validate(self.lts)?;
        self.lts.check_state(w)?;
        let n = self.lts.num_states();
        let classes = sigma.classes();
        let idx = |(k, a): (usize, StateId)| k * n + a.0;
        let start = (0usize, w);
        if !self.b.contains(sigma.at(0), w) {
            return Ok(MatchOutcome::NoMatch(NoMatch { frontier: vec![] }));
        }

        // Reachable product nodes, in BFS order, with BFS parents.
        let total = classes * n;
        let mut parent: Vec<Option<(usize, Edge)>> = vec![None; total];
        let mut seen = FixedBitSet::with_capacity(total);
        let mut order: Vec<(usize, StateId)> = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(idx(start));
        queue.push_back(start);
        let mut buf = Vec::new();
        while let Some(node) = queue.pop_front() {
            order.push(node);
            self.successors(sigma, node, &mut buf);
            for &(nx, e) in &buf {
                if !seen.put(idx(nx)) {
                    parent[idx(nx)] = Some((idx(node), e));
                    queue.push_back(nx);
                }
            }
        }

        let pos: Vec<usize> = {
            let mut p = vec![usize::MAX; total];
            for (i, &nd) in order.iter().enumerate() {
                p[idx(nd)] = i;
            }
            p
        };
        let comp = self.sccs(sigma, &order, &pos, n);

        // First ADVANCE edge (in BFS order) whose endpoints share an SCC.
        let mut found = None;
        'outer: for &node in &order {
            self.successors(sigma, node, &mut buf);
            for &(nx, e) in &buf {
                if e == Edge::Advance && comp[pos[idx(node)]] == comp[pos[idx(nx)]] {
                    found = Some((node, nx));
                    break 'outer;
                }
            }
        }
        let Some((x, y)) = found else {
            return Ok(MatchOutcome::NoMatch(NoMatch { frontier: order }));
        };

        // Prefix: start ..= x.
        let mut prefix_edges: Vec<((usize, StateId), Edge)> = Vec::new();
        let mut cur = idx(x);
        while let Some((p, e)) = parent[cur] {
            prefix_edges.push(((cur / n, StateId(cur % n)), e));
            cur = p;
        }
        prefix_edges.reverse();

        // Cycle: x -ADVANCE-> y, then a shortest path back to x within the SCC.
        let target_comp = comp[pos[idx(x)]];
        let mut cyc_parent: Vec<Option<(usize, Edge)>> = vec![None; total];
        let mut cseen = FixedBitSet::with_capacity(total);
        let mut q = VecDeque::new();
        cseen.insert(idx(y));
        q.push_back(y);
        let mut reached = idx(y) == idx(x);
        while !reached {
            let Some(node) = q.pop_front() else { break };
            self.successors(sigma, node, &mut buf);
            for &(nx, e) in &buf {
                let i = idx(nx);
                if comp[pos[i]] != target_comp || cseen.put(i) {
                    continue;
                }
                cyc_parent[i] = Some((idx(node), e));
                if i == idx(x) {
                    reached = true;
                    break;
                }
                q.push_back(nx);
            }
        }
        let mut back_edges: Vec<((usize, StateId), Edge)> = Vec::new();
        if idx(y) != idx(x) {
            let mut cur = idx(x);
            while cur != idx(y) {
                let (p, e) = cyc_parent[cur].expect("x reachable from y inside its SCC");
                back_edges.push(((cur / n, StateId(cur % n)), e));
                cur = p;
            }
            back_edges.reverse();
        }
        let mut cycle_edges = vec![(y, Edge::Advance)];
        cycle_edges.extend(back_edges);

        let witness = self.build_witness(w, &prefix_edges, &cycle_edges);
        debug_assert!(verify_witness(self.lts, self.b, sigma, w, &witness).unwrap_or(false));
        if !verify_witness(self.lts, self.b, sigma, w, &witness)? {
            return Err(Error::InvalidLasso("internal: reconstructed witness failed verification".into()));
        }
        Ok(MatchOutcome::Matched(witness))
    }

    fn build_witness(
        &self,
        w: StateId,
        prefix: &[((usize, StateId), Edge)],
        cycle: &[((usize, StateId), Edge)],
    ) -> MatchWitness {
        let mut delta = vec![w];
        let mut head = w;
        let mut pi_cuts = vec![0];
        let mut xi_cuts = vec![0];
        let mut t = 0;
        let step = |(node, e): &((usize, StateId), Edge),
                    t: &mut usize,
                    delta: &mut Vec<StateId>,
                    head: &mut StateId,
                    pi: &mut Vec<usize>,
                    xi: &mut Vec<usize>| {
            *t += 1;
            if *e == Edge::Advance {
                let path = shortest_path_plus(self.lts, *head, node.1).expect("ADVANCE edge implies a path");
                delta.extend_from_slice(&path[1..]);
                *head = node.1;
                pi.push(*t);
                xi.push(delta.len() - 1);
            }
        };
        for e in prefix {
            step(e, &mut t, &mut delta, &mut head, &mut pi_cuts, &mut xi_cuts);
        }
        let head_at_cycle = delta.len() - 1;
        let pi_period = pi_cuts.len();
        let xi_period = xi_cuts.len();
        for e in cycle {
            step(e, &mut t, &mut delta, &mut head, &mut pi_cuts, &mut xi_cuts);
        }
        let stride_pi = cycle.len();
        let stride_xi = delta.len() - 1 - head_at_cycle;
        let stem = delta[..head_at_cycle].to_vec();
        let loop_part = delta[head_at_cycle..delta.len() - 1].to_vec();
        MatchWitness {
            pi: PartitionIndex::new(pi_cuts, Some(Tail { period_start: pi_period, stride: stride_pi }))
                .expect("constructed partition is increasing"),
            xi: PartitionIndex::new(xi_cuts, Some(Tail { period_start: xi_period, stride: stride_xi }))
                .expect("constructed partition is increasing"),
            delta: Lasso::new(stem, loop_part),
        }
    }

    /// Tarjan's SCC over the reachable product nodes (iterative).
    fn sccs(&self, sigma: &Lasso, order: &[(usize, StateId)], pos: &[usize], n: usize) -> Vec<usize> {
        let m = order.len();
        let idx = |(k, a): (usize, StateId)| k * n + a.0;
        let mut index = vec![usize::MAX; m];
        let mut low = vec![0; m];
        let mut on_stack = vec![false; m];
        let mut stack = Vec::new();
        let mut comp = vec![usize::MAX; m];
        let mut next_index = 0;
        let mut next_comp = 0;
        let succ_of = |v: usize| -> Vec<usize> {
            let mut buf = Vec::new();
            self.successors(sigma, order[v], &mut buf);
            buf.iter().map(|&(nx, _)| pos[idx(nx)]).collect()
        };
        for root in 0..m {
            if index[root] != usize::MAX {
                continue;
            }
            let mut call: Vec<(usize, Vec<usize>, usize)> = vec![(root, succ_of(root), 0)];
            index[root] = next_index;
            low[root] = next_index;
            next_index += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some((v, succs, i)) = call.last_mut() {
                if *i < succs.len() {
                    let wv = succs[*i];
                    *i += 1;
                    if index[wv] == usize::MAX {
                        index[wv] = next_index;
                        low[wv] = next_index;
                        next_index += 1;
                        stack.push(wv);
                        on_stack[wv] = true;
                        let s = succ_of(wv);
                        call.push((wv, s, 0));
                    } else if on_stack[wv] {
                        let v = *v;
                        low[v] = low[v].min(index[wv]);
                    }
                } else {
                    let v = *v;
                    call.pop();
                    if let Some((p, _, _)) = call.last() {
                        low[*p] = low[*p].min(low[v]);
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
}

/// Decides whether the fullpath denoted by `sigma` is matched under `b` by
/// some fullpath starting at `w`.
pub fn find_match(b: &Relation, sigma: &Lasso, w: StateId, lts: &Lts) -> Result<MatchOutcome> {
    Matcher::new(lts, b).find_match(sigma, w)
}

/// Every lasso from `s` with `|stem| ≤ max_stem` and `1 ≤ |loop| ≤ max_loop`,
/// ordered by stem length, then loop length, then state sequence.
pub fn enumerate_lassos(lts: &Lts, s: StateId, max_stem: usize, max_loop: usize) -> impl Iterator<Item = Lasso> + '_ {
    (0..=max_stem).flat_map(move |m| (1..=max_loop).flat_map(move |p| lassos_of_shape(lts, s, m, p)))
}

fn lassos_of_shape(lts: &Lts, s: StateId, m: usize, p: usize) -> Vec<Lasso> {
    let mut out = Vec::new();
    if s.0 >= lts.num_states() {
        return out;
    }
    let total = m + p;
    let mut seq = vec![s];
    fn rec(lts: &Lts, seq: &mut Vec<StateId>, total: usize, m: usize, out: &mut Vec<Lasso>) {
        if seq.len() == total {
            let last = *seq.last().unwrap();
            if lts.has_transition(last, seq[m]) {
                out.push(Lasso::new(seq[..m].to_vec(), seq[m..].to_vec()));
            }
            return;
        }
        let cur = *seq.last().unwrap();
        for &u in lts.successors(cur) {
            seq.push(u);
            rec(lts, seq, total, m, out);
            seq.pop();
        }
    }
    rec(lts, &mut seq, total, m, &mut out);
    out
}
