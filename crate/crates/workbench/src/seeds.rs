//! Seeds derived from the master seed and a run's coordinates, never from
//! execution order.

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

/// Stable 64-bit tag for a string identifier.
pub fn tag(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Train,
    Test,
    Model,
}

impl Purpose {
    fn id(self) -> u64 {
        match self {
            Purpose::Train => 1,
            Purpose::Test => 2,
            Purpose::Model => 3,
        }
    }
}

/// Seed for one trial's training or test data. Independent of the model so
/// every model in a trial sees the same pairs.
pub fn data_seed(master: u64, experiment: &str, trial: usize, n: usize, per_class: usize, purpose: Purpose) -> u64 {
    derive(master, &[tag(experiment), trial as u64, n as u64, per_class as u64, purpose.id()])
}

pub fn model_seed(master: u64, experiment: &str, trial: usize, n: usize, per_class: usize, model: &str) -> u64 {
    derive(master, &[tag(experiment), trial as u64, n as u64, per_class as u64, Purpose::Model.id(), tag(model)])
}
