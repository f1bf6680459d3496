//! Discrete-event simulation (DES) with a tick-by-tick abstract system and
//! an optimized system that jumps straight to the next scheduled event.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type EventId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Event {
    /// Ordered by time first so a sorted pending list starts with the
    /// earliest event.
    pub time: u32,
    pub id: EventId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effect {
    /// `(variable, amount)` increments.
    #[serde(default)]
    pub increments: Vec<(usize, i64)>,
    /// `(event, delay)`: schedule `event` at `t + delay`, `delay ≥ 1`.
    #[serde(default)]
    pub generates: Vec<(EventId, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesParams {
    pub events: Vec<Event>,
    #[serde(default)]
    pub effects: BTreeMap<EventId, Effect>,
    pub time_bound: u32,
    pub vars: usize,
}

impl DesParams {
    /// Event `i` increments variable `i` by one and generates nothing.
    pub fn simple(events: &[(EventId, u32)], time_bound: u32) -> DesParams {
        let vars = events.iter().map(|&(id, _)| id as usize + 1).max().unwrap_or(0);
        let effects = events
            .iter()
            .map(|&(id, _)| (id, Effect { increments: vec![(id as usize, 1)], generates: vec![] }))
            .collect();
        DesParams { events: events.iter().map(|&(id, time)| Event { id, time }).collect(), effects, time_bound, vars }
    }

    /// Parses `0@0,1@2` (event id `@` time).
    pub fn parse_events(text: &str) -> Result<Vec<(EventId, u32)>> {
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                let (id, t) =
                    s.split_once('@').ok_or_else(|| Error::InvalidParams(format!("expected id@time, got `{s}`")))?;
                let id = id.trim().parse().map_err(|_| Error::InvalidParams(format!("bad event id in `{s}`")))?;
                let t = t.trim().parse().map_err(|_| Error::InvalidParams(format!("bad time in `{s}`")))?;
                Ok((id, t))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.events.iter().find(|e| e.time > self.time_bound) {
            return Err(Error::InvalidParams(format!(
                "event {} at time {} is beyond the time bound {}",
                e.id, e.time, self.time_bound
            )));
        }
        for (id, eff) in &self.effects {
            if let Some(&(v, _)) = eff.increments.iter().find(|(v, _)| *v >= self.vars) {
                return Err(Error::InvalidParams(format!("event {id} increments unknown variable {v}")));
            }
            if eff.generates.iter().any(|&(_, d)| d == 0) {
                return Err(Error::InvalidParams(format!("event {id} generates an event with zero delay")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DesConfig {
    pub t: u32,
    /// Pending events, sorted; a multiset.
    pub events: Vec<Event>,
    pub vars: Vec<i64>,
}

pub fn initial(p: &DesParams) -> DesConfig {
    let mut events = p.events.clone();
    events.sort_unstable();
    DesConfig { t: 0, events, vars: vec![0; p.vars] }
}

/// Executes pending event `e` (at index `i`) at the current time.
fn fire(p: &DesParams, c: &DesConfig, i: usize) -> DesConfig {
    let mut next = c.clone();
    let e = next.events.remove(i);
    if let Some(eff) = p.effects.get(&e.id) {
        for &(v, k) in &eff.increments {
            next.vars[v] += k;
        }
        for &(id, d) in &eff.generates {
            let time = next.t + d;
            // Events past the horizon can never fire; drop them.
            if time <= p.time_bound {
                next.events.push(Event { id, time });
            }
        }
    }
    next.events.sort_unstable();
    next
}

fn tick(p: &DesParams, c: &DesConfig) -> DesConfig {
    let mut next = c.clone();
    if next.t < p.time_bound {
        next.t += 1;
    }
    next
}

/// Any due event may fire; with none due, time advances by one.
pub fn abs_step(p: &DesParams, c: &DesConfig) -> Vec<DesConfig> {
    let mut out = Vec::new();
    let mut last = None;
    for (i, e) in c.events.iter().enumerate() {
        if e.time == c.t && last != Some(*e) {
            out.push(fire(p, c, i));
            last = Some(*e);
        }
    }
    if out.is_empty() {
        out.push(tick(p, c));
    }
    out
}

/// Fires the earliest pending event, first moving time forward to it.
pub fn opt_step(p: &DesParams, c: &DesConfig) -> DesConfig {
    match c.events.first() {
        Some(e) => {
            let mut moved = c.clone();
            moved.t = e.time.max(c.t);
            fire(p, &moved, 0)
        }
        None => tick(p, c),
    }
}
