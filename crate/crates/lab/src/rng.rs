use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent substream `stream` of the run seed.
pub fn task_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = task_rng(7, 0).random();
        let b: u64 = task_rng(7, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, task_rng(7, 0).random::<u64>());
    }
}
