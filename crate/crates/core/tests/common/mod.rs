//! Parameter grids and an engine-independent refinement oracle shared by
//! the integration tests.

#![allow(dead_code)]

use skipref::models::des::DesParams;
use skipref::models::memc::{MemParams, Req};
use skipref::models::stk::{Instr, StkParams};
use skipref::union::RefinementMap;
use skipref::{Lts, StateId};

/// Events `0..k` at every combination of times within the bound, for
/// `k ≤ 3` and bounds `0..=4`. Each timing also appears with event 0
/// scheduling event 2 two ticks later.
pub fn des_grid() -> Vec<DesParams> {
    let mut out = Vec::new();
    for bound in 0..=4u32 {
        for k in 0..=3u32 {
            let combos = (bound + 1).pow(k);
            for mut code in 0..combos {
                let events: Vec<(u32, u32)> = (0..k)
                    .map(|id| {
                        let t = code % (bound + 1);
                        code /= bound + 1;
                        (id, t)
                    })
                    .collect();
                let p = DesParams::simple(&events, bound);
                if k == 3 {
                    let mut q = p.clone();
                    q.effects.get_mut(&0).unwrap().generates = vec![(2, 2)];
                    out.push(q);
                }
                out.push(p);
            }
        }
    }
    out
}

fn words<T: Clone>(alphabet: &[T], max_len: usize) -> Vec<Vec<T>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w: &Vec<T>| {
                alphabet.iter().map(move |x| {
                    let mut v = w.clone();
                    v.push(x.clone());
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Every program of length ≤ 4 over push 0, push 1, pop, top, nop, with
/// stack capacity 3 and buffer capacity 1, 2 or 3.
pub fn bstk_grid() -> Vec<StkParams> {
    let alphabet = [Instr::Push(0), Instr::Push(1), Instr::Pop, Instr::Top, Instr::Nop];
    let programs = words(&alphabet, 4);
    let mut out = Vec::new();
    for cap in 1..=3 {
        out.extend(programs.iter().map(|p| StkParams::new(p.clone(), 3, cap)));
    }
    out
}

/// Every request sequence of length ≤ 4 over two addresses and values
/// {0, 1}, with buffer capacity 1 or 2.
pub fn optmemc_grid() -> Vec<MemParams> {
    let mut alphabet = vec![Req::Read(0), Req::Read(1)];
    for a in 0..2 {
        for v in 0..2 {
            alphabet.push(Req::Write(a, v));
        }
    }
    let seqs = words(&alphabet, 4);
    let mut out = Vec::new();
    for cap in 1..=2 {
        out.extend(seqs.iter().map(|r| MemParams::new(r.clone(), 2, 2, cap)));
    }
    out
}

/// Only successor of `s`; panics on branching.
fn next(lts: &Lts, s: StateId) -> StateId {
    let succ = lts.successors(s);
    assert_eq!(succ.len(), 1, "oracle needs deterministic systems");
    succ[0]
}

/// Whether `to` lies on the run of `abstract_` from `from` (position 0
/// included).
fn ahead(abstract_: &Lts, from: StateId, to: StateId) -> bool {
    let mut cur = from;
    for _ in 0..=abstract_.num_states() {
        if cur == to {
            return true;
        }
        cur = next(abstract_, cur);
    }
    false
}

/// Refinement for deterministic systems whose labels identify abstract
/// states, decided from runs alone.
///
/// The single concrete run from the initial state refines iff every step
/// moves its image forward along the abstract run (or keeps it), and a
/// concrete cycle on which the image never moves sits on an abstract
/// self-loop.
pub fn refines_by_runs(concrete: &Lts, abstract_: &Lts, r: &RefinementMap) -> bool {
    let mut run = vec![concrete.initial()[0]];
    let loop_start = loop {
        let s = next(concrete, *run.last().unwrap());
        if let Some(i) = run.iter().position(|&x| x == s) {
            break i;
        }
        run.push(s);
    };
    let succ = |i: usize| if i + 1 < run.len() { run[i + 1] } else { run[loop_start] };
    for (i, &s) in run.iter().enumerate() {
        if !ahead(abstract_, r.apply(s), r.apply(succ(i))) {
            return false;
        }
    }
    let a = r.apply(run[loop_start]);
    let still = run[loop_start..].iter().all(|&s| r.apply(s) == a);
    !still || abstract_.has_transition(a, a)
}
