//! Basic-block vectorization of straight-line programs and translation
//! validation of each output by skipping refinement.
//!
//! The target program's states map back to the source state at the
//! corresponding program counter with the same store. A packed instruction
//! does the work of two source instructions in one step, which is exactly a
//! two-step skip.

pub mod corpus;
pub mod program;

use serde::{Deserialize, Serialize};

use crate::engine::{MaxSkip, SimOptions};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lts::{build_lts, Label, Lts, StateId};
use crate::refine::{check_skipping_refinement_with, RefineOptions, Verdict};
use crate::union::RefinementMap;
use program::{compile, exec_compiled, value_mask};
pub use program::{run_to_end, step, step_scalar, step_vector, Instr, MachineState, Op, Program};

/// Target pc to source pc. Entry `k` is the source position of target
/// instruction `k`; the final entry is the source position of the end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcMap {
    pub map: Vec<usize>,
}

impl PcMap {
    /// Prefix sums of instruction widths.
    pub fn prefix_sums(tgt: &Program) -> PcMap {
        let mut map = Vec::with_capacity(tgt.len() + 1);
        let mut acc = 0;
        map.push(0);
        for i in &tgt.instrs {
            acc += i.width();
            map.push(acc);
        }
        PcMap { map }
    }

    #[inline]
    pub fn apply(&self, pc: usize) -> usize {
        self.map[pc]
    }

    /// Starts at 0, advances by each target instruction's width, and stays
    /// within the source.
    pub fn check(&self, src: &Program, tgt: &Program) -> Result<()> {
        let bad = |m: String| Err(Error::PcMapInconsistent(m));
        if self.map.len() != tgt.len() + 1 {
            return bad(format!("{} entries for a target of {} instructions", self.map.len(), tgt.len()));
        }
        if self.map[0] != 0 {
            return bad(format!("entry 0 is {}", self.map[0]));
        }
        for (k, i) in tgt.instrs.iter().enumerate() {
            if self.map[k + 1] != self.map[k] + i.width() {
                return bad(format!(
                    "entry {} is {}, expected {} after a width-{} instruction",
                    k + 1,
                    self.map[k + 1],
                    self.map[k] + i.width(),
                    i.width()
                ));
            }
        }
        if *self.map.last().expect("non-empty") > src.len() {
            return bad(format!("map reaches {} past a source of {}", self.map.last().unwrap(), src.len()));
        }
        Ok(())
    }
}

/// Whether adjacent scalar instructions `a; b` may run as one packed op.
pub fn fusable(a: &Instr, b: &Instr) -> bool {
    match (a, b) {
        (Instr::Bin { dst: d0, op: o0, .. }, Instr::Bin { dst: d1, op: o1, lhs, rhs }) => {
            o0 == o1 && d0 != d1 && lhs != d0 && rhs != d0
        }
        _ => false,
    }
}

/// Greedy left-to-right pairing of adjacent independent same-operator
/// arithmetic instructions.
pub fn vectorize(src: &Program) -> (Program, PcMap) {
    let mut out = Vec::with_capacity(src.len());
    let mut i = 0;
    while i < src.len() {
        let a = &src.instrs[i];
        if let Some(b) = src.instrs.get(i + 1).filter(|b| fusable(a, b)) {
            if let (Instr::Bin { dst: d0, op, lhs: l0, rhs: r0 }, Instr::Bin { dst: d1, lhs: l1, rhs: r1, .. }) = (a, b)
            {
                out.push(Instr::Packed {
                    dst: [d0.clone(), d1.clone()],
                    op: *op,
                    lhs: [l0.clone(), l1.clone()],
                    rhs: [r0.clone(), r1.clone()],
                });
                i += 2;
                continue;
            }
        }
        out.push(a.clone());
        i += 1;
    }
    let tgt = Program::new(out);
    let map = PcMap::prefix_sums(&tgt);
    (tgt, map)
}

/// Each target instruction must be the source instruction(s) it claims to
/// replace; packed ones must split into an independent adjacent pair.
pub fn structural_check(src: &Program, tgt: &Program, pcmap: &PcMap) -> Vec<String> {
    let mut problems = Vec::new();
    for (k, i) in tgt.instrs.iter().enumerate() {
        let at = pcmap.apply(k);
        match i.lanes() {
            Some([a, b]) => {
                let found = (src.instrs.get(at), src.instrs.get(at + 1));
                if found != (Some(&a), Some(&b)) {
                    problems.push(format!("target {k} `{i}` does not split into source {at} and {}", at + 1));
                } else if !fusable(&a, &b) {
                    problems.push(format!("target {k} `{i}` packs dependent instructions"));
                }
            }
            None => {
                if src.instrs.get(at) != Some(i) {
                    problems.push(format!("target {k} `{i}` differs from source {at}"));
                }
            }
        }
    }
    problems
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TvOptions {
    pub domain_bits: u32,
    pub max_skip: MaxSkip,
    /// Largest per-program state space that will be enumerated.
    pub state_cap: usize,
    pub exec: Exec,
}

impl Default for TvOptions {
    fn default() -> Self {
        TvOptions { domain_bits: 2, max_skip: MaxSkip::Bounded(2), state_cap: 1 << 20, exec: Exec::default() }
    }
}

impl TvOptions {
    pub fn with_bits(domain_bits: u32) -> TvOptions {
        TvOptions { domain_bits, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct TvReport {
    pub verdict: Verdict,
    pub structural_problems: Vec<String>,
    pub max_skip_realized: Option<usize>,
}

impl TvReport {
    pub fn holds(&self) -> bool {
        self.verdict.holds() && self.structural_problems.is_empty()
    }
}

/// All `(pc, store)` pairs of `program` over `regs`, stepped
/// deterministically; initial states are every store at pc 0.
fn program_lts(program: &Program, regs: &[String], bits: u32, stores: usize) -> Result<Lts> {
    let code = compile(program, regs)?;
    let mask = value_mask(bits);
    let d = 1u64 << bits;
    let decode = |mut x: usize| -> Vec<u64> {
        (0..regs.len())
            .map(|_| {
                let v = x as u64 % d;
                x /= d as usize;
                v
            })
            .collect()
    };
    let encode = |vals: &[u64]| -> usize { vals.iter().rev().fold(0usize, |acc, &v| acc * d as usize + v as usize) };
    let n = code.len();
    let total = (n + 1) * stores;
    let mut transitions = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for pc in 0..=n {
        for x in 0..stores {
            let mut vals = decode(x);
            labels.push(Label::of(&(pc, &vals)));
            let id = pc * stores + x;
            match code.get(pc) {
                None => transitions.push((id, id)),
                Some(instr) => {
                    exec_compiled(instr, &mut vals, mask);
                    transitions.push((id, (pc + 1) * stores + encode(&vals)));
                }
            }
        }
    }
    let initial: Vec<usize> = (0..stores).collect();
    build_lts(total, &transitions, labels, &initial)
}

/// Validates that `tgt` implements `src` under `pcmap`, over every store in
/// the bounded domain.
pub fn tv_validate(src: &Program, tgt: &Program, pcmap: &PcMap, opts: &TvOptions) -> Result<TvReport> {
    if !src.is_scalar() {
        return Err(Error::InvalidParams("the source program contains packed instructions".into()));
    }
    pcmap.check(src, tgt)?;
    let mut regs: Vec<String> = src.registers().union(&tgt.registers()).cloned().collect();
    regs.sort();
    let stores = (1u128 << opts.domain_bits).checked_pow(regs.len() as u32);
    let longest = src.len().max(tgt.len()) as u128 + 1;
    let states = stores.map(|s| s.saturating_mul(longest)).unwrap_or(u128::MAX);
    if opts.domain_bits >= 32 || states > opts.state_cap as u128 {
        return Err(Error::DomainTooLarge { states, cap: opts.state_cap });
    }
    let stores = stores.expect("checked above") as usize;
    let a = program_lts(src, &regs, opts.domain_bits, stores)?;
    let c = program_lts(tgt, &regs, opts.domain_bits, stores)?;
    let r = RefinementMap::new(
        (0..c.num_states()).map(|id| StateId(pcmap.apply(id / stores) * stores + id % stores)).collect(),
    );
    let sim = SimOptions { max_skip: opts.max_skip, exec: opts.exec };
    let verdict = check_skipping_refinement_with(&c, &a, &r, &RefineOptions::new(sim))?;
    Ok(TvReport {
        max_skip_realized: verdict.max_skip_witness,
        verdict,
        structural_problems: structural_check(src, tgt, pcmap),
    })
}

/// Brute-force check that both programs end in the same store from every
/// store in the domain.
pub fn final_stores_agree(src: &Program, tgt: &Program, bits: u32) -> Result<bool> {
    let regs: Vec<String> = src.registers().union(&tgt.registers()).cloned().collect();
    let d = 1u64 << bits;
    let total = d.pow(regs.len() as u32);
    for x in 0..total {
        let mut y = x;
        let store: std::collections::BTreeMap<String, u64> = regs
            .iter()
            .map(|r| {
                let v = y % d;
                y /= d;
                (r.clone(), v)
            })
            .collect();
        if run_to_end(src, store.clone(), bits)? != run_to_end(tgt, store, bits)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refine::Status;

    fn example() -> Program {
        Program::parse("r1 = a + b\nr2 = c + d\nr3 = r1 * r2").unwrap()
    }

    #[test]
    fn packs_independent_pair() {
        let (tgt, map) = vectorize(&example());
        assert_eq!(tgt.to_string(), "pack (r1,r2) = (a,c) + (b,d)\nr3 = r1 * r2\n");
        assert_eq!(map.map, vec![0, 2, 3]);
        map.check(&example(), &tgt).unwrap();
    }

    #[test]
    fn dependence_blocks_packing() {
        let src = Program::parse("r1 = a + b\nr2 = r1 + c").unwrap();
        assert_eq!(vectorize(&src).0, src);
        let src = Program::parse("r1 = a + b\nr1 = c + d").unwrap();
        assert_eq!(vectorize(&src).0, src);
        let src = Program::parse("r1 = a + b\nr2 = c * d").unwrap();
        assert_eq!(vectorize(&src).0, src);
    }

    #[test]
    fn empty_program() {
        let (tgt, map) = vectorize(&Program::default());
        assert!(tgt.is_empty());
        assert_eq!(map.map, vec![0]);
    }

    #[test]
    fn validated_with_two_step_skip() {
        let src = example();
        let (tgt, map) = vectorize(&src);
        let rep = tv_validate(&src, &tgt, &map, &TvOptions::with_bits(2)).unwrap();
        assert!(rep.holds(), "{:?}", rep.verdict.counterexample);
        assert_eq!(rep.max_skip_realized, Some(2));
        let stutter = TvOptions { max_skip: MaxSkip::Bounded(1), ..TvOptions::with_bits(2) };
        assert_eq!(tv_validate(&src, &tgt, &map, &stutter).unwrap().verdict.status, Status::Fails);
    }

    #[test]
    fn lane_swap_fails() {
        let src = example();
        let tgt = Program::parse("pack (r1,r2) = (c,a) + (b,d)\nr3 = r1 * r2").unwrap();
        let map = PcMap::prefix_sums(&tgt);
        let rep = tv_validate(&src, &tgt, &map, &TvOptions::with_bits(2)).unwrap();
        assert_eq!(rep.verdict.status, Status::Fails);
        assert!(!rep.structural_problems.is_empty());
        assert!(!final_stores_agree(&src, &tgt, 2).unwrap());
    }

    #[test]
    fn bad_pc_maps_and_domains() {
        let src = example();
        let (tgt, _) = vectorize(&src);
        let wrong = PcMap { map: vec![0, 1, 2] };
        assert!(matches!(tv_validate(&src, &tgt, &wrong, &TvOptions::default()), Err(Error::PcMapInconsistent(_))));
        let (tgt, map) = vectorize(&src);
        let huge = TvOptions { domain_bits: 8, ..TvOptions::default() };
        assert!(matches!(tv_validate(&src, &tgt, &map, &huge), Err(Error::DomainTooLarge { .. })));
    }
}
