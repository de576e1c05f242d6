use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one seed, one per consumer, so
/// that adding samples to one modality never shifts another.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub vision: ChaCha8Rng,
    pub classifier: ChaCha8Rng,
    pub voc: ChaCha8Rng,
    pub timing: ChaCha8Rng,
    pub consent: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        };
        RngStreams {
            vision: stream(1),
            classifier: stream(2),
            voc: stream(3),
            timing: stream(4),
            consent: stream(5),
        }
    }
}
