//! Breadth-first enumeration of a configuration space into an explicit Lts.

use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lts::{build_lts, Label, Lts};

pub(crate) struct Explored<C> {
    pub configs: Vec<C>,
    pub lts: Lts,
}

/// Enumerates everything reachable from `initial` and `extra` under `step`.
///
/// Ids are assigned in discovery order, closing over `initial` before
/// `extra`. Only `initial` is declared initial. A configuration without
/// successors gets a self-loop. Labels are the serialized configurations.
pub(crate) fn explore<C, F>(initial: &[C], extra: &[C], cap: usize, step: F) -> Result<Explored<C>>
where
    C: Clone + Eq + Hash + Serialize,
    F: Fn(&C) -> Vec<C>,
{
    let mut ids: HashMap<C, usize> = HashMap::new();
    let mut configs: Vec<C> = Vec::new();
    let mut transitions = Vec::new();
    let mut intern = |c: &C, configs: &mut Vec<C>| -> Result<usize> {
        if let Some(&id) = ids.get(c) {
            return Ok(id);
        }
        if configs.len() >= cap {
            return Err(Error::StateSpaceLimitExceeded(cap));
        }
        let id = configs.len();
        ids.insert(c.clone(), id);
        configs.push(c.clone());
        Ok(id)
    };
    let mut initial_ids = Vec::new();
    let mut next = 0;
    for (batch, is_initial) in [(initial, true), (extra, false)] {
        for c in batch {
            let id = intern(c, &mut configs)?;
            if is_initial {
                initial_ids.push(id);
            }
        }
        // Close over this batch before the next one claims ids.
        while next < configs.len() {
            let here = configs[next].clone();
            let succ = step(&here);
            if succ.is_empty() {
                transitions.push((next, next));
            }
            for u in &succ {
                let uid = intern(u, &mut configs)?;
                transitions.push((next, uid));
            }
            next += 1;
        }
    }
    let labels = configs.iter().map(Label::of).collect();
    let lts = build_lts(configs.len(), &transitions, labels, &initial_ids)?;
    Ok(Explored { configs, lts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lts::StateId;

    #[test]
    fn counter_with_terminal_self_loop() {
        let e = explore(&[0u8], &[], 10, |&c| if c < 3 { vec![c + 1] } else { vec![] }).unwrap();
        assert_eq!(e.configs, vec![0, 1, 2, 3]);
        assert_eq!(e.lts.successors(StateId(3)), &[StateId(3)]);
        assert_eq!(e.lts.initial(), &[StateId(0)]);
    }

    #[test]
    fn cap_is_enforced() {
        let err = explore(&[0u32], &[], 5, |&c| vec![c + 1]).err().unwrap();
        assert!(matches!(err, Error::StateSpaceLimitExceeded(5)));
    }

    #[test]
    fn extra_seeds_follow_initial_closure() {
        let e = explore(&[0u8], &[10], 10, |&c| if c % 10 < 1 { vec![c + 1] } else { vec![] }).unwrap();
        assert_eq!(e.configs, vec![0, 1, 10, 11]);
        assert_eq!(e.lts.initial(), &[StateId(0)]);
    }
}
