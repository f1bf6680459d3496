//! A small stack machine (STK) and its instruction-buffered variant (BSTK).
//!
//! BSTK fetches instructions into a buffer instead of executing them. When
//! the fetched instruction is `top` or the buffer is full, the buffer drains:
//! its instructions and (by default) the fetched one all execute in a single
//! step.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FaultKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Instr {
    Push(i64),
    Pop,
    Top,
    Nop,
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Push(c) => write!(f, "push {c}"),
            Instr::Pop => f.write_str("pop"),
            Instr::Top => f.write_str("top"),
            Instr::Nop => f.write_str("nop"),
        }
    }
}

impl FromStr for Instr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Instr> {
        let words: Vec<&str> = s.split_whitespace().collect();
        match words.as_slice() {
            ["push", c] => {
                c.parse().map(Instr::Push).map_err(|_| Error::InvalidParams(format!("bad push constant in `{s}`")))
            }
            ["pop"] => Ok(Instr::Pop),
            ["top"] => Ok(Instr::Top),
            ["nop"] => Ok(Instr::Nop),
            _ => Err(Error::InvalidParams(format!("unknown instruction `{s}`"))),
        }
    }
}

impl From<Instr> for String {
    fn from(i: Instr) -> String {
        i.to_string()
    }
}

impl TryFrom<String> for Instr {
    type Error = Error;

    fn try_from(s: String) -> Result<Instr> {
        s.parse()
    }
}

/// Parses `push 1; push 2; top`.
pub fn parse_program(text: &str) -> Result<Vec<Instr>> {
    text.split(';').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StkParams {
    pub imem: Vec<Instr>,
    pub stack_cap: usize,
    /// Buffer capacity (BSTK only).
    #[serde(default = "default_ibuf")]
    pub ibuf_cap: usize,
    /// Whether the fetched trigger executes in the draining step. When false
    /// the drain executes the buffer only and the trigger is fetched again.
    #[serde(default = "default_true")]
    pub drain_includes_trigger: bool,
}

fn default_ibuf() -> usize {
    1
}

impl StkParams {
    pub fn new(imem: Vec<Instr>, stack_cap: usize, ibuf_cap: usize) -> StkParams {
        StkParams { imem, stack_cap, ibuf_cap, drain_includes_trigger: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stack_cap == 0 || self.ibuf_cap == 0 {
            return Err(Error::InvalidParams("stack_cap and ibuf_cap must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StkConfig {
    pub pc: usize,
    /// Bottom first.
    pub stk: Vec<i64>,
    pub out: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BstkConfig {
    pub pc: usize,
    pub ibuf: Vec<Instr>,
    pub stk: Vec<i64>,
    pub out: Option<i64>,
}

impl BstkConfig {
    /// Forget the buffer and roll the pc back over it.
    pub fn image(&self) -> StkConfig {
        StkConfig { pc: self.pc - self.ibuf.len(), stk: self.stk.clone(), out: self.out }
    }
}

/// Executes one instruction on a stack and output register.
pub fn exec(i: Instr, stk: &mut Vec<i64>, out: &mut Option<i64>, cap: usize) {
    match i {
        Instr::Push(c) => {
            if stk.len() < cap {
                stk.push(c);
            }
        }
        Instr::Pop => {
            stk.pop();
        }
        Instr::Top => {
            if let Some(&t) = stk.last() {
                *out = Some(t);
            }
        }
        Instr::Nop => {}
    }
}

pub fn stk_initial() -> StkConfig {
    StkConfig { pc: 0, stk: Vec::new(), out: None }
}

pub fn stk_step(p: &StkParams, c: &StkConfig) -> StkConfig {
    let mut next = c.clone();
    if let Some(&i) = p.imem.get(c.pc) {
        exec(i, &mut next.stk, &mut next.out, p.stack_cap);
        next.pc += 1;
    }
    next
}

pub fn bstk_initial() -> BstkConfig {
    BstkConfig { pc: 0, ibuf: Vec::new(), stk: Vec::new(), out: None }
}

pub fn bstk_step(p: &StkParams, fault: Option<FaultKind>, c: &BstkConfig) -> BstkConfig {
    let mut next = c.clone();
    let drain = |next: &mut BstkConfig| {
        let mut buf = std::mem::take(&mut next.ibuf);
        if fault == Some(FaultKind::DropLastOnDrain) {
            buf.pop();
        }
        for i in buf {
            exec(i, &mut next.stk, &mut next.out, p.stack_cap);
        }
    };
    let Some(&x) = p.imem.get(c.pc) else {
        // Program exhausted: flush what is left, then stay put.
        if !c.ibuf.is_empty() {
            drain(&mut next);
        }
        return next;
    };
    let triggers = x == Instr::Top || c.ibuf.len() >= p.ibuf_cap;
    if !triggers {
        next.ibuf.push(x);
        next.pc += 1;
        return next;
    }
    if c.ibuf.is_empty() {
        exec(x, &mut next.stk, &mut next.out, p.stack_cap);
        next.pc += 1;
        return next;
    }
    drain(&mut next);
    if p.drain_includes_trigger {
        exec(x, &mut next.stk, &mut next.out, p.stack_cap);
        next.pc = match fault {
            Some(FaultKind::SkipPcIncrement) => c.pc,
            Some(FaultKind::OffByOnePointer) => (c.pc + 2).min(p.imem.len()),
            _ => c.pc + 1,
        };
    } else if fault == Some(FaultKind::OffByOnePointer) {
        next.pc = (c.pc + 1).min(p.imem.len());
    }
    next
}

/// Whether draining the buffer of `c` yields what STK computes in the same
/// number of steps from the image of `c`.
pub fn drain_agrees(p: &StkParams, c: &BstkConfig) -> bool {
    let mut stk = c.stk.clone();
    let mut out = c.out;
    for &i in &c.ibuf {
        exec(i, &mut stk, &mut out, p.stack_cap);
    }
    let mut a = c.image();
    for _ in 0..c.ibuf.len() {
        a = stk_step(p, &a);
    }
    a.stk == stk && a.out == out && a.pc == c.pc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog() -> StkParams {
        StkParams::new(parse_program("push 1; push 2; top").unwrap(), 3, 2)
    }

    #[test]
    fn parse_and_print() {
        let p = parse_program("push 1;pop; top ;nop").unwrap();
        assert_eq!(p, vec![Instr::Push(1), Instr::Pop, Instr::Top, Instr::Nop]);
        assert_eq!(p[0].to_string(), "push 1");
        assert!(parse_program("jump 3").is_err());
        assert!(parse_program("push x").is_err());
    }

    #[test]
    fn bstk_drains_on_top() {
        let p = prog();
        let mut c = bstk_initial();
        c = bstk_step(&p, None, &c);
        c = bstk_step(&p, None, &c);
        assert_eq!(c.ibuf, vec![Instr::Push(1), Instr::Push(2)]);
        assert_eq!(c.image(), stk_initial());
        c = bstk_step(&p, None, &c);
        assert_eq!(c, BstkConfig { pc: 3, ibuf: vec![], stk: vec![1, 2], out: Some(2) });
        assert_eq!(bstk_step(&p, None, &c), c);
    }

    #[test]
    fn drop_last_loses_push() {
        let p = prog();
        let mut c = bstk_initial();
        for _ in 0..3 {
            c = bstk_step(&p, Some(FaultKind::DropLastOnDrain), &c);
        }
        assert_eq!(c.stk, vec![1]);
        assert_eq!(c.out, Some(1));
    }

    #[test]
    fn edge_semantics() {
        let mut stk = vec![];
        let mut out = None;
        exec(Instr::Pop, &mut stk, &mut out, 1);
        exec(Instr::Top, &mut stk, &mut out, 1);
        assert_eq!((stk.clone(), out), (vec![], None));
        exec(Instr::Push(5), &mut stk, &mut out, 1);
        exec(Instr::Push(6), &mut stk, &mut out, 1);
        assert_eq!(stk, vec![5]);
    }

    #[test]
    fn trigger_left_out_of_drain() {
        let mut p = prog();
        p.drain_includes_trigger = false;
        let mut c = bstk_initial();
        c = bstk_step(&p, None, &c);
        c = bstk_step(&p, None, &c);
        c = bstk_step(&p, None, &c);
        assert_eq!(c, BstkConfig { pc: 2, ibuf: vec![], stk: vec![1, 2], out: None });
        c = bstk_step(&p, None, &c);
        assert_eq!(c.out, Some(2));
        assert_eq!(c.pc, 3);
    }
}
