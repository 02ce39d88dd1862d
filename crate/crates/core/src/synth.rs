//! Seeded synthetic corpora with token-level class signal, for experiments,
//! tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Dataset, LabeledExample, Task};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub task: Task,
    /// Number of examples whose tokens come from each class, by class id.
    pub class_sizes: Vec<usize>,
    pub tokens_per_example: usize,
    /// Probability that a token is drawn from the example's class pool rather
    /// than the shared pool.
    pub signal_rate: f64,
    /// Distinct words in each class pool.
    pub class_vocab: usize,
    /// Distinct words in the shared pool.
    pub shared_vocab: usize,
    /// Probability that the observed label is replaced by a different class.
    pub label_noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Balanced two-class corpus where every token identifies its class.
    pub fn separable(n: usize, seed: u64) -> Self {
        Self {
            task: Task::A,
            class_sizes: vec![n / 2, n - n / 2],
            tokens_per_example: 24,
            signal_rate: 1.0,
            class_vocab: 12,
            shared_vocab: 1,
            label_noise: 0.0,
            seed,
        }
    }
}

/// Word `i` of class pool `c`; distinct pools never share a word.
fn class_word(c: usize, i: usize) -> String {
    format!("c{c}w{i}")
}

pub fn generate(spec: &SyntheticSpec) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.task.scheme().num_classes();
    let mut examples = Vec::with_capacity(spec.class_sizes.iter().sum());
    for (class, &n) in spec.class_sizes.iter().enumerate() {
        for _ in 0..n {
            let words: Vec<String> = (0..spec.tokens_per_example)
                .map(|_| {
                    if spec.shared_vocab == 0 || rng.random_bool(spec.signal_rate) {
                        class_word(class, rng.random_range(0..spec.class_vocab))
                    } else {
                        format!("s{}", rng.random_range(0..spec.shared_vocab))
                    }
                })
                .collect();
            let mut label = class;
            if spec.label_noise > 0.0 && rng.random_bool(spec.label_noise) {
                label = (class + rng.random_range(1..k)) % k;
            }
            let id = format!("syn{}", examples.len());
            examples.push(LabeledExample::new(id, words.join(" ")).with_label(spec.task, label));
        }
    }
    Dataset::new(spec.task, examples, "synthetic").expect("generated ids are unique")
}
