use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uuid::{Builder, Uuid};

/// Seeded source of UUID-formatted identifiers. This is the only randomness
/// in a scenario run, so equal seeds give equal ids.
#[derive(Debug, Clone)]
pub struct IdGenerator {
    rng: ChaCha8Rng,
}

impl IdGenerator {
    pub fn seeded(seed: u64) -> IdGenerator {
        IdGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Entropy-seeded generator for one-off parses.
    pub fn from_entropy() -> IdGenerator {
        IdGenerator {
            rng: ChaCha8Rng::from_rng(&mut rand::rng()),
        }
    }

    pub fn next_uuid(&mut self) -> Uuid {
        let mut bytes = [0u8; 16];
        self.rng.fill_bytes(&mut bytes);
        Builder::from_random_bytes(bytes).into_uuid()
    }

    pub fn next_id(&mut self) -> String {
        self.next_uuid().hyphenated().to_string()
    }
}
