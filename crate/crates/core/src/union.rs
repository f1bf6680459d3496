//! Refinement maps and the labeled disjoint union of a concrete and an
//! abstract system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lts::{build_lts, Lts, StateId};

/// Total map from concrete states to abstract states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementMap {
    map: Vec<StateId>,
}

impl RefinementMap {
    pub fn new(map: Vec<StateId>) -> RefinementMap {
        RefinementMap { map }
    }

    pub fn identity(states: usize) -> RefinementMap {
        RefinementMap { map: (0..states).map(StateId).collect() }
    }

    #[inline]
    pub fn apply(&self, s: StateId) -> StateId {
        self.map[s.0]
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_slice(&self) -> &[StateId] {
        &self.map
    }

    /// Checks totality over `concrete` and that every image lies in `abstract_`.
    pub fn validate(&self, concrete: &Lts, abstract_: &Lts) -> Result<()> {
        if self.map.len() != concrete.num_states() {
            return Err(Error::InvalidRefinementMap(format!(
                "map covers {} states but the concrete system has {}",
                self.map.len(),
                concrete.num_states()
            )));
        }
        if let Some((s, a)) = self.map.iter().enumerate().find(|(_, a)| a.0 >= abstract_.num_states()) {
            return Err(Error::InvalidRefinementMap(format!(
                "state {s} maps to {a}, outside the {} abstract states",
                abstract_.num_states()
            )));
        }
        Ok(())
    }

    /// JSON form: `{"map": [a0, a1, ..]}` indexed by concrete state.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serializes")
    }

    /// Also accepts a bare array.
    pub fn from_json(text: &str) -> Result<RefinementMap> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Form {
            Object(RefinementMap),
            Bare(Vec<StateId>),
        }
        Ok(match serde_json::from_str(text)? {
            Form::Object(m) => m,
            Form::Bare(map) => RefinementMap::new(map),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Concrete,
    Abstract,
}

/// `C ⊎ A`: concrete states come first, abstract states are shifted by `|S_C|`.
/// Concrete states carry the abstract label of their image.
#[derive(Debug, Clone)]
pub struct DisjointUnion {
    pub lts: Lts,
    concrete: usize,
    abstract_: usize,
}

/// Builds the labeled disjoint union used by skipping refinement.
///
/// The union's initial states are the embedded initial states of `concrete`.
pub fn disjoint_union(concrete: &Lts, abstract_: &Lts, r: &RefinementMap) -> Result<DisjointUnion> {
    r.validate(concrete, abstract_)?;
    let nc = concrete.num_states();
    let na = abstract_.num_states();
    let mut labels = Vec::with_capacity(nc + na);
    for s in concrete.states() {
        labels.push(abstract_.label(r.apply(s)).clone());
    }
    labels.extend(abstract_.labels().iter().cloned());
    let mut transitions = Vec::with_capacity(concrete.num_transitions() + abstract_.num_transitions());
    transitions.extend(concrete.transitions().map(|(s, u)| (s.0, u.0)));
    transitions.extend(abstract_.transitions().map(|(s, u)| (s.0 + nc, u.0 + nc)));
    let initial: Vec<usize> = concrete.initial().iter().map(|s| s.0).collect();
    let lts = build_lts(nc + na, &transitions, labels, &initial)?;
    Ok(DisjointUnion { lts, concrete: nc, abstract_: na })
}

impl DisjointUnion {
    #[inline]
    pub fn embed_concrete(&self, s: StateId) -> StateId {
        s
    }

    #[inline]
    pub fn embed_abstract(&self, a: StateId) -> StateId {
        StateId(a.0 + self.concrete)
    }

    pub fn tag_of(&self, s: StateId) -> Side {
        if s.0 < self.concrete {
            Side::Concrete
        } else {
            Side::Abstract
        }
    }

    /// Inverse of the embeddings.
    pub fn project(&self, s: StateId) -> (Side, StateId) {
        match self.tag_of(s) {
            Side::Concrete => (Side::Concrete, s),
            Side::Abstract => (Side::Abstract, StateId(s.0 - self.concrete)),
        }
    }

    pub fn concrete_states(&self) -> usize {
        self.concrete
    }

    pub fn abstract_states(&self) -> usize {
        self.abstract_
    }
}
