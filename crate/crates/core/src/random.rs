//! Seeded random systems for property testing.

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lts::{build_lts, Label, Lts};

/// Shape limits for [`random_lts`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub max_states: usize,
    pub max_labels: usize,
    pub max_out_degree: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { max_states: 6, max_labels: 3, max_out_degree: 2 }
    }
}

/// A random left-total system with initial state 0. Labels are `"a"`,
/// `"b"`, ... so systems with one label are common enough to exercise
/// pure stuttering.
pub fn random_lts<R: Rng>(rng: &mut R, shape: Shape) -> Lts {
    let n = rng.gen_range(1..=shape.max_states.max(1));
    let k = rng.gen_range(1..=shape.max_labels.max(1));
    let labels = (0..n).map(|_| Label::of(&((b'a' + rng.gen_range(0..k) as u8) as char).to_string())).collect();
    let mut transitions = Vec::new();
    for s in 0..n {
        let d = rng.gen_range(1..=shape.max_out_degree.clamp(1, n));
        for u in sample(rng, n, d) {
            transitions.push((s, u));
        }
    }
    build_lts(n, &transitions, labels, &[0]).expect("random systems are well formed")
}

/// `count` systems of the default shape from one seed.
pub fn corpus(seed: u64, count: usize) -> Vec<Lts> {
    corpus_with(seed, count, Shape::default())
}

pub fn corpus_with(seed: u64, count: usize, shape: Shape) -> Vec<Lts> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_lts(&mut rng, shape)).collect()
}
