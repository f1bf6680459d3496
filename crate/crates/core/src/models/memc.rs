//! A memory controller (MEMC) and its write-coalescing variant (OptMEMC).
//!
//! OptMEMC buffers writes. A read, or any request arriving at a full buffer,
//! drains it: older writes overwritten by a later write to the same address
//! are marked redundant and skipped, the rest execute in order, and the
//! arriving request executes last, all in one step.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FaultKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Req {
    Read(usize),
    Write(usize, u8),
}

impl fmt::Display for Req {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Req::Read(a) => write!(f, "read {a}"),
            Req::Write(a, v) => write!(f, "write {a} {v}"),
        }
    }
}

impl FromStr for Req {
    type Err = Error;

    fn from_str(s: &str) -> Result<Req> {
        let bad = || Error::InvalidParams(format!("bad request `{s}`"));
        let words: Vec<&str> = s.split_whitespace().collect();
        match words.as_slice() {
            ["read", a] => Ok(Req::Read(a.parse().map_err(|_| bad())?)),
            ["write", a, v] => Ok(Req::Write(a.parse().map_err(|_| bad())?, v.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl From<Req> for String {
    fn from(r: Req) -> String {
        r.to_string()
    }
}

impl TryFrom<String> for Req {
    type Error = Error;

    fn try_from(s: String) -> Result<Req> {
        s.parse()
    }
}

/// Parses `write 0 1; read 0`.
pub fn parse_requests(text: &str) -> Result<Vec<Req>> {
    text.split(';').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemParams {
    pub reqs: Vec<Req>,
    pub addr_count: usize,
    /// Values range over `0..values`.
    pub values: u8,
    /// Buffer capacity (OptMEMC only).
    #[serde(default = "default_rbuf")]
    pub rbuf_cap: usize,
}

fn default_rbuf() -> usize {
    1
}

impl MemParams {
    pub fn new(reqs: Vec<Req>, addr_count: usize, values: u8, rbuf_cap: usize) -> MemParams {
        MemParams { reqs, addr_count, values, rbuf_cap }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rbuf_cap == 0 || self.addr_count == 0 || self.values == 0 {
            return Err(Error::InvalidParams("rbuf_cap, addr_count and values must be at least 1".into()));
        }
        for r in &self.reqs {
            let (a, v) = match *r {
                Req::Read(a) => (a, 0),
                Req::Write(a, v) => (a, v),
            };
            if a >= self.addr_count || v >= self.values {
                return Err(Error::InvalidParams(format!("request `{r}` outside the address or value domain")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MemcConfig {
    pub pt: usize,
    pub mem: Vec<u8>,
    pub rdout: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OptMemcConfig {
    pub pt: usize,
    pub rbuf: Vec<Req>,
    pub mem: Vec<u8>,
    pub rdout: Option<u8>,
}

impl OptMemcConfig {
    pub fn image(&self) -> MemcConfig {
        MemcConfig { pt: self.pt - self.rbuf.len(), mem: self.mem.clone(), rdout: self.rdout }
    }
}

fn exec(r: Req, mem: &mut [u8], rdout: &mut Option<u8>) {
    match r {
        Req::Read(a) => *rdout = Some(mem[a]),
        Req::Write(a, v) => mem[a] = v,
    }
}

pub fn memc_initial(p: &MemParams) -> MemcConfig {
    MemcConfig { pt: 0, mem: vec![0; p.addr_count], rdout: None }
}

pub fn memc_step(p: &MemParams, c: &MemcConfig) -> MemcConfig {
    let mut next = c.clone();
    if let Some(&r) = p.reqs.get(c.pt) {
        exec(r, &mut next.mem, &mut next.rdout);
        next.pt += 1;
    }
    next
}

pub fn optmemc_initial(p: &MemParams) -> OptMemcConfig {
    OptMemcConfig { pt: 0, rbuf: Vec::new(), mem: vec![0; p.addr_count], rdout: None }
}

/// Marks writes that a later write to the same address makes redundant.
/// The faulty variant keeps the oldest write instead of the newest.
fn redundant(batch: &[Req], newest_marked: bool) -> Vec<bool> {
    let addr = |r: &Req| match *r {
        Req::Write(a, _) => Some(a),
        Req::Read(_) => None,
    };
    (0..batch.len())
        .map(|i| {
            let Some(a) = addr(&batch[i]) else { return false };
            if newest_marked {
                batch[..i].iter().any(|r| addr(r) == Some(a))
            } else {
                batch[i + 1..].iter().any(|r| addr(r) == Some(a))
            }
        })
        .collect()
}

pub fn optmemc_step(p: &MemParams, fault: Option<FaultKind>, c: &OptMemcConfig) -> OptMemcConfig {
    let mut next = c.clone();
    let drain = |next: &mut OptMemcConfig, trigger: Option<Req>| {
        let mut batch = std::mem::take(&mut next.rbuf);
        if fault == Some(FaultKind::DropLastOnDrain) {
            batch.pop();
        }
        batch.extend(trigger);
        let marked = redundant(&batch, fault == Some(FaultKind::MarkNewestRedundant));
        for (r, skip) in batch.into_iter().zip(marked) {
            if !skip {
                exec(r, &mut next.mem, &mut next.rdout);
            }
        }
    };
    let Some(&x) = p.reqs.get(c.pt) else {
        if !c.rbuf.is_empty() {
            drain(&mut next, None);
        }
        return next;
    };
    let triggers = matches!(x, Req::Read(_)) || c.rbuf.len() >= p.rbuf_cap;
    if !triggers {
        next.rbuf.push(x);
        next.pt += 1;
        return next;
    }
    if c.rbuf.is_empty() {
        exec(x, &mut next.mem, &mut next.rdout);
        next.pt += 1;
        return next;
    }
    drain(&mut next, Some(x));
    next.pt = match fault {
        Some(FaultKind::SkipPcIncrement) => c.pt,
        Some(FaultKind::OffByOnePointer) => (c.pt + 2).min(p.reqs.len()),
        _ => c.pt + 1,
    };
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MemParams {
        MemParams::new(parse_requests("write 0 1; write 0 2; read 0").unwrap(), 1, 3, 2)
    }

    fn run(p: &MemParams, fault: Option<FaultKind>) -> OptMemcConfig {
        let mut c = optmemc_initial(p);
        for _ in 0..p.reqs.len() + p.rbuf_cap + 1 {
            c = optmemc_step(p, fault, &c);
        }
        c
    }

    #[test]
    fn coalesced_writes_keep_newest() {
        let p = params();
        let mut c = optmemc_initial(&p);
        c = optmemc_step(&p, None, &c);
        c = optmemc_step(&p, None, &c);
        assert_eq!(c.image(), MemcConfig { pt: 0, mem: vec![0], rdout: None });
        let end = run(&p, None);
        assert_eq!(end.mem, vec![2]);
        assert_eq!(end.rdout, Some(2));
    }

    #[test]
    fn marking_the_newest_write_loses_it() {
        let end = run(&params(), Some(FaultKind::MarkNewestRedundant));
        assert_eq!(end.mem, vec![1]);
        assert_eq!(end.rdout, Some(1));
    }

    #[test]
    fn validation() {
        assert!(MemParams::new(vec![Req::Read(2)], 2, 2, 1).validate().is_err());
        assert!(MemParams::new(vec![Req::Write(0, 2)], 2, 2, 1).validate().is_err());
        assert!(parse_requests("read").is_err());
        assert_eq!(Req::Write(1, 0).to_string().parse::<Req>().unwrap(), Req::Write(1, 0));
    }
}
