//! Straight-line register programs with optional two-lane packed
//! arithmetic, their text format, and their semantics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Add,
    Sub,
    Mul,
}

impl Op {
    pub fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
        }
    }

    fn parse(s: &str) -> Option<Op> {
        match s {
            "+" => Some(Op::Add),
            "-" => Some(Op::Sub),
            "*" => Some(Op::Mul),
            _ => None,
        }
    }

    /// Modular arithmetic; `mask` is `2^bits - 1`.
    pub fn apply(self, x: u64, y: u64, mask: u64) -> u64 {
        let r = match self {
            Op::Add => x.wrapping_add(y),
            Op::Sub => x.wrapping_sub(y),
            Op::Mul => x.wrapping_mul(y),
        };
        r & mask
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instr {
    /// `dst = lhs op rhs`
    Bin { dst: String, op: Op, lhs: String, rhs: String },
    /// `dst = value`
    Const { dst: String, value: u64 },
    /// `dst = load src`
    Load { dst: String, src: String },
    /// `store dst src`
    Store { dst: String, src: String },
    /// `pack (d0,d1) = (l0,l1) op (r0,r1)`; both lanes read the pre-state.
    Packed { dst: [String; 2], op: Op, lhs: [String; 2], rhs: [String; 2] },
}

impl Instr {
    pub fn bin(dst: &str, lhs: &str, op: Op, rhs: &str) -> Instr {
        Instr::Bin { dst: dst.into(), op, lhs: lhs.into(), rhs: rhs.into() }
    }

    /// Number of scalar instructions this one stands for.
    pub fn width(&self) -> usize {
        match self {
            Instr::Packed { .. } => 2,
            _ => 1,
        }
    }

    pub fn writes(&self) -> Vec<&str> {
        match self {
            Instr::Bin { dst, .. } | Instr::Const { dst, .. } | Instr::Load { dst, .. } | Instr::Store { dst, .. } => {
                vec![dst]
            }
            Instr::Packed { dst, .. } => dst.iter().map(String::as_str).collect(),
        }
    }

    pub fn reads(&self) -> Vec<&str> {
        match self {
            Instr::Bin { lhs, rhs, .. } => vec![lhs, rhs],
            Instr::Const { .. } => vec![],
            Instr::Load { src, .. } | Instr::Store { src, .. } => vec![src],
            Instr::Packed { lhs, rhs, .. } => lhs.iter().chain(rhs).map(String::as_str).collect(),
        }
    }

    /// The two scalar instructions a packed instruction stands for.
    pub fn lanes(&self) -> Option<[Instr; 2]> {
        match self {
            Instr::Packed { dst, op, lhs, rhs } => Some([0, 1].map(|k| Instr::Bin {
                dst: dst[k].clone(),
                op: *op,
                lhs: lhs[k].clone(),
                rhs: rhs[k].clone(),
            })),
            _ => None,
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Bin { dst, op, lhs, rhs } => write!(f, "{dst} = {lhs} {} {rhs}", op.symbol()),
            Instr::Const { dst, value } => write!(f, "{dst} = {value}"),
            Instr::Load { dst, src } => write!(f, "{dst} = load {src}"),
            Instr::Store { dst, src } => write!(f, "store {dst} {src}"),
            Instr::Packed { dst, op, lhs, rhs } => write!(
                f,
                "pack ({},{}) = ({},{}) {} ({},{})",
                dst[0],
                dst[1],
                lhs[0],
                lhs[1],
                op.symbol(),
                rhs[0],
                rhs[1]
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Program {
    pub instrs: Vec<Instr>,
}

impl Program {
    pub fn new(instrs: Vec<Instr>) -> Program {
        Program { instrs }
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.instrs.iter().all(|i| i.width() == 1)
    }

    pub fn packed_count(&self) -> usize {
        self.instrs.iter().filter(|i| i.width() == 2).count()
    }

    /// Every name the program reads or writes, sorted.
    pub fn registers(&self) -> BTreeSet<String> {
        self.instrs.iter().flat_map(|i| i.reads().into_iter().chain(i.writes())).map(str::to_string).collect()
    }

    /// One instruction per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Program> {
        let mut instrs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            instrs.push(parse_line(line).map_err(|message| Error::Parse { line: n + 1, message })?);
        }
        Ok(Program { instrs })
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.instrs {
            writeln!(f, "{i}")?;
        }
        Ok(())
    }
}

fn name(s: &str) -> std::result::Result<String, String> {
    let s = s.trim();
    let mut chars = s.chars();
    let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(s.to_string())
    } else {
        Err(format!("`{s}` is not a register name"))
    }
}

fn pair(s: &str) -> std::result::Result<[String; 2], String> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| format!("expected `(x,y)`, got `{}`", s.trim()))?;
    let (a, b) = inner.split_once(',').ok_or_else(|| format!("expected two lanes in `{inner}`"))?;
    Ok([name(a)?, name(b)?])
}

fn parse_line(line: &str) -> std::result::Result<Instr, String> {
    if let Some(rest) = line.strip_prefix("pack ") {
        let (dst, rhs) = rest.split_once('=').ok_or("missing `=`")?;
        let rhs = rhs.trim();
        let close = rhs.find(')').ok_or("missing `)`")?;
        let (l, rest) = rhs.split_at(close + 1);
        let rest = rest.trim();
        let op = rest.get(..1).and_then(Op::parse).ok_or_else(|| format!("unknown operator in `{rest}`"))?;
        return Ok(Instr::Packed { dst: pair(dst)?, op, lhs: pair(l)?, rhs: pair(&rest[1..])? });
    }
    if let Some(rest) = line.strip_prefix("store ") {
        let words: Vec<&str> = rest.split_whitespace().collect();
        let [dst, src] = words.as_slice() else {
            return Err("expected `store <dst> <src>`".into());
        };
        return Ok(Instr::Store { dst: name(dst)?, src: name(src)? });
    }
    let (dst, rhs) = line.split_once('=').ok_or("missing `=`")?;
    let dst = name(dst)?;
    let words: Vec<&str> = rhs.split_whitespace().collect();
    match words.as_slice() {
        ["load", src] => Ok(Instr::Load { dst, src: name(src)? }),
        [v] if v.chars().all(|c| c.is_ascii_digit()) => {
            Ok(Instr::Const { dst, value: v.parse().map_err(|_| format!("constant `{v}` out of range"))? })
        }
        [l, op, r] => {
            let op = Op::parse(op).ok_or_else(|| format!("unknown operator `{op}`"))?;
            Ok(Instr::Bin { dst, op, lhs: name(l)?, rhs: name(r)? })
        }
        _ => Err(format!("cannot parse `{}`", rhs.trim())),
    }
}

/// Program counter plus a total store.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MachineState {
    pub pc: usize,
    pub store: BTreeMap<String, u64>,
}

fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// One step of `program`. At the end the state is returned unchanged.
pub fn step(program: &Program, state: &MachineState, bits: u32) -> Result<MachineState> {
    let Some(instr) = program.instrs.get(state.pc) else {
        return Ok(state.clone());
    };
    let m = mask(bits);
    let get = |r: &str| state.store.get(r).copied().ok_or_else(|| Error::UnknownRegister(r.to_string()));
    let mut next = state.clone();
    let mut set = |r: &str, v: u64| -> Result<()> {
        match next.store.get_mut(r) {
            Some(slot) => {
                *slot = v & m;
                Ok(())
            }
            None => Err(Error::UnknownRegister(r.to_string())),
        }
    };
    match instr {
        Instr::Bin { dst, op, lhs, rhs } => set(dst, op.apply(get(lhs)?, get(rhs)?, m))?,
        Instr::Const { dst, value } => set(dst, *value)?,
        Instr::Load { dst, src } | Instr::Store { dst, src } => set(dst, get(src)?)?,
        Instr::Packed { dst, op, lhs, rhs } => {
            let v0 = op.apply(get(&lhs[0])?, get(&rhs[0])?, m);
            let v1 = op.apply(get(&lhs[1])?, get(&rhs[1])?, m);
            set(&dst[0], v0)?;
            set(&dst[1], v1)?;
        }
    }
    next.pc += 1;
    Ok(next)
}

/// Steps a source program (no packed instructions expected).
pub fn step_scalar(program: &Program, state: &MachineState, bits: u32) -> Result<MachineState> {
    step(program, state, bits)
}

/// Steps a target program.
pub fn step_vector(program: &Program, state: &MachineState, bits: u32) -> Result<MachineState> {
    step(program, state, bits)
}

/// Runs to the end and returns the final store.
pub fn run_to_end(program: &Program, store: BTreeMap<String, u64>, bits: u32) -> Result<BTreeMap<String, u64>> {
    let mut s = MachineState { pc: 0, store };
    while s.pc < program.len() {
        s = step(program, &s, bits)?;
    }
    Ok(s.store)
}

/// Instructions over register indices, for fast enumeration.
#[derive(Debug, Clone)]
pub(crate) enum Compiled {
    Bin(usize, Op, usize, usize),
    Const(usize, u64),
    Copy(usize, usize),
    Packed([usize; 2], Op, [usize; 2], [usize; 2]),
}

pub(crate) fn compile(program: &Program, regs: &[String]) -> Result<Vec<Compiled>> {
    let idx = |r: &str| regs.binary_search_by(|x| x.as_str().cmp(r)).map_err(|_| Error::UnknownRegister(r.into()));
    program
        .instrs
        .iter()
        .map(|i| {
            Ok(match i {
                Instr::Bin { dst, op, lhs, rhs } => Compiled::Bin(idx(dst)?, *op, idx(lhs)?, idx(rhs)?),
                Instr::Const { dst, value } => Compiled::Const(idx(dst)?, *value),
                Instr::Load { dst, src } | Instr::Store { dst, src } => Compiled::Copy(idx(dst)?, idx(src)?),
                Instr::Packed { dst, op, lhs, rhs } => Compiled::Packed(
                    [idx(&dst[0])?, idx(&dst[1])?],
                    *op,
                    [idx(&lhs[0])?, idx(&lhs[1])?],
                    [idx(&rhs[0])?, idx(&rhs[1])?],
                ),
            })
        })
        .collect()
}

pub(crate) fn exec_compiled(i: &Compiled, vals: &mut [u64], mask: u64) {
    match *i {
        Compiled::Bin(d, op, l, r) => vals[d] = op.apply(vals[l], vals[r], mask),
        Compiled::Const(d, v) => vals[d] = v & mask,
        Compiled::Copy(d, s) => vals[d] = vals[s],
        Compiled::Packed(d, op, l, r) => {
            let v0 = op.apply(vals[l[0]], vals[r[0]], mask);
            let v1 = op.apply(vals[l[1]], vals[r[1]], mask);
            vals[d[0]] = v0;
            vals[d[1]] = v1;
        }
    }
}

pub(crate) fn value_mask(bits: u32) -> u64 {
    mask(bits)
}
