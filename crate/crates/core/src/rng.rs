//! Counter-based stream splitting: one root seed, one ChaCha8 stream per task.
//!
//! Task `k` of a run seeded with `root` draws from
//! `ChaCha8Rng::seed_from_u64(root)` with its stream id set to `k`. Batches are
//! cut into fixed-size chunks, each owning its own stream, so results do not
//! depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Samples per chunk; chunk boundaries are part of the reproducibility contract.
pub const CHUNK_SIZE: usize = 1000;

pub const SPLITTING_RULE: &str =
    "ChaCha8Rng::seed_from_u64(root).set_stream((task << 32) | chunk), chunk = 1000 samples";

pub fn stream(root: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(stream_id);
    rng
}

pub fn task_chunk_stream(root: u64, task: u32, chunk: u32) -> StreamRng {
    stream(root, (u64::from(task) << 32) | u64::from(chunk))
}

/// Runs `work(chunk_len, rng)` over `samples` split into chunks and returns the
/// per-chunk results in chunk order.
pub fn run_chunks<T, F>(samples: usize, root: u64, task: u32, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut StreamRng) -> T + Sync + Send,
{
    let chunks = samples.div_ceil(CHUNK_SIZE);
    let job = |c: usize| {
        let len = CHUNK_SIZE.min(samples - c * CHUNK_SIZE);
        let mut rng = task_chunk_stream(root, task, c as u32);
        work(len, &mut rng)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(job).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..chunks).map(job).collect()
    }
}
