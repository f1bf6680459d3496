//! Random source programs and single-instruction mutations of targets.

use rand::seq::SliceRandom;
use rand::Rng;

use super::program::{Instr, Op, Program};
use super::PcMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Swap the lanes of one operand of a packed instruction.
    LaneSwap(usize),
    /// Remove one instruction.
    Drop(usize),
}

/// Lane swap of the instruction at `at`: first operands if they differ,
/// otherwise second operands. `None` when both lanes read the same names.
pub fn lane_swap(tgt: &Program, at: usize) -> Option<Program> {
    let Instr::Packed { dst, op, lhs, rhs } = tgt.instrs.get(at)? else {
        return None;
    };
    let swapped = |p: &[String; 2]| [p[1].clone(), p[0].clone()];
    let (lhs, rhs) = if lhs[0] != lhs[1] {
        (swapped(lhs), rhs.clone())
    } else if rhs[0] != rhs[1] {
        (lhs.clone(), swapped(rhs))
    } else {
        return None;
    };
    let mut out = tgt.clone();
    out.instrs[at] = Instr::Packed { dst: dst.clone(), op: *op, lhs, rhs };
    Some(out)
}

/// Every applicable lane swap and every single-instruction drop, each with
/// the pc map recomputed for the mutated target.
pub fn mutations(tgt: &Program) -> Vec<(Mutation, Program, PcMap)> {
    let mut out = Vec::new();
    for at in 0..tgt.len() {
        if let Some(p) = lane_swap(tgt, at) {
            let map = PcMap::prefix_sums(&p);
            out.push((Mutation::LaneSwap(at), p, map));
        }
    }
    for at in 0..tgt.len() {
        let mut p = tgt.clone();
        p.instrs.remove(at);
        let map = PcMap::prefix_sums(&p);
        out.push((Mutation::Drop(at), p, map));
    }
    out
}

/// A straight-line program of `1..=max_len` instructions over at most
/// `max_regs` names, weighted toward arithmetic so pairs can pack.
pub fn random_program<R: Rng>(rng: &mut R, max_len: usize, max_regs: usize) -> Program {
    let names: Vec<String> = (0..rng.gen_range(1..=max_regs.max(1))).map(|i| format!("r{i}")).collect();
    let pick = |rng: &mut R| names.choose(rng).expect("at least one name").clone();
    let len = rng.gen_range(1..=max_len.max(1));
    let ops = [Op::Add, Op::Sub, Op::Mul];
    let mut last = Op::Add;
    let mut instrs = Vec::with_capacity(len);
    for _ in 0..len {
        instrs.push(match rng.gen_range(0..10) {
            0 => Instr::Const { dst: pick(rng), value: rng.gen_range(0..4) },
            1 => Instr::Load { dst: pick(rng), src: pick(rng) },
            2 => Instr::Store { dst: pick(rng), src: pick(rng) },
            _ => {
                // Repeating the previous operator makes packable neighbors common.
                if rng.gen_bool(0.4) {
                    last = *ops.choose(rng).unwrap();
                }
                Instr::Bin { dst: pick(rng), op: last, lhs: pick(rng), rhs: pick(rng) }
            }
        });
    }
    Program::new(instrs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn lane_swap_prefers_first_operand() {
        let p = Program::parse("pack (r1,r2) = (a,c) + (b,d)").unwrap();
        assert_eq!(lane_swap(&p, 0).unwrap().to_string(), "pack (r1,r2) = (c,a) + (b,d)\n");
        let p = Program::parse("pack (r1,r2) = (a,a) + (b,d)").unwrap();
        assert_eq!(lane_swap(&p, 0).unwrap().to_string(), "pack (r1,r2) = (a,a) + (d,b)\n");
        let p = Program::parse("pack (r1,r2) = (a,a) + (b,b)").unwrap();
        assert!(lane_swap(&p, 0).is_none());
    }

    #[test]
    fn mutation_count() {
        let p = Program::parse("pack (r1,r2) = (a,c) + (b,d)\nr3 = r1 * r2").unwrap();
        let m = mutations(&p);
        assert_eq!(m.len(), 3);
        assert!(m.iter().all(|(_, p, map)| map.map.len() == p.len() + 1));
    }

    #[test]
    fn random_programs_are_bounded() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = random_program(&mut rng, 8, 4);
            assert!((1..=8).contains(&p.len()));
            assert!(p.registers().len() <= 4);
            assert!(p.is_scalar());
        }
    }
}
