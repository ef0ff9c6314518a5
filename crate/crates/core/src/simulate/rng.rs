use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator number `stream` derived from a master seed.
///
/// The key is the master seed and the replicate index selects a ChaCha
/// stream, so replicates never share a key stream even when
/// `master ^ i == master' ^ j`.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}
