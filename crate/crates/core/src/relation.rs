//! Binary relations over the states of one transition system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lts::StateId;

/// A relation `B ⊆ S × S`, stored as sorted rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    rows: Vec<Vec<StateId>>,
    len: usize,
}

impl Relation {
    pub fn empty(states: usize) -> Relation {
        Relation { rows: vec![Vec::new(); states], len: 0 }
    }

    pub fn identity(states: usize) -> Relation {
        Relation { rows: (0..states).map(|s| vec![StateId(s)]).collect(), len: states }
    }

    pub fn from_pairs<I>(states: usize, pairs: I) -> Result<Relation>
    where
        I: IntoIterator<Item = (StateId, StateId)>,
    {
        let mut rows = vec![Vec::new(); states];
        for (s, w) in pairs {
            for id in [s, w] {
                if id.0 >= states {
                    return Err(Error::InvalidState { id: id.0, states });
                }
            }
            rows[s.0].push(w);
        }
        let mut len = 0;
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            len += r.len();
        }
        Ok(Relation { rows, len })
    }

    /// Number of states of the underlying system.
    pub fn universe(&self) -> usize {
        self.rows.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains(&self, s: StateId, w: StateId) -> bool {
        self.rows.get(s.0).is_some_and(|r| r.binary_search(&w).is_ok())
    }

    /// All `w` with `s B w`, ascending.
    #[inline]
    pub fn row(&self, s: StateId) -> &[StateId] {
        &self.rows[s.0]
    }

    /// Pairs in ascending `(s, w)` order.
    pub fn iter(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        self.rows.iter().enumerate().flat_map(|(s, ws)| ws.iter().map(move |&w| (StateId(s), w)))
    }

    pub fn insert(&mut self, s: StateId, w: StateId) -> bool {
        let row = &mut self.rows[s.0];
        match row.binary_search(&w) {
            Ok(_) => false,
            Err(i) => {
                row.insert(i, w);
                self.len += 1;
                true
            }
        }
    }

    pub fn remove(&mut self, s: StateId, w: StateId) -> bool {
        let row = &mut self.rows[s.0];
        match row.binary_search(&w) {
            Ok(i) => {
                row.remove(i);
                self.len -= 1;
                true
            }
            Err(_) => false,
        }
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.iter().all(|(s, w)| other.contains(s, w))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RelationFile::from(self)).expect("relation serializes")
    }

    pub fn from_json(text: &str, states: usize) -> Result<Relation> {
        let file: RelationFile = serde_json::from_str(text)?;
        file.into_relation(states)
    }
}

/// On-disk form: `{"pairs": [[s,w],..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationFile {
    pub pairs: Vec<[usize; 2]>,
}

impl From<&Relation> for RelationFile {
    fn from(r: &Relation) -> Self {
        RelationFile { pairs: r.iter().map(|(s, w)| [s.0, w.0]).collect() }
    }
}

impl RelationFile {
    pub fn into_relation(self, states: usize) -> Result<Relation> {
        Relation::from_pairs(states, self.pairs.iter().map(|p| (StateId(p[0]), StateId(p[1]))))
    }
}
