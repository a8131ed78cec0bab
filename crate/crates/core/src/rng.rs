//! Reproducible per-replication random streams.
//!
//! Replication `rep` of a run seeded with `seed` always draws from ChaCha8
//! keyed by `seed` on stream `rep`, so the numbers a replication sees do not
//! depend on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Stream = ChaCha8Rng;

pub fn substream(seed: u64, rep: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Worker count for replication loops. `None` uses the global rayon pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Workers(pub Option<usize>);

impl Workers {
    pub const SERIAL: Workers = Workers(Some(1));
    pub const AUTO: Workers = Workers(None);
}

/// Evaluates `f(rep)` for `rep in 0..reps`, results in replication order.
pub fn map_reps<T, F>(reps: usize, workers: Workers, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match workers.0 {
        Some(1) => Ok((0..reps as u64).map(f).collect()),
        Some(0) => Err(Error::Config("worker count must be positive".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {k} workers: {e}")))?;
            Ok(pool.install(|| (0..reps as u64).into_par_iter().map(&f).collect()))
        }
        None => Ok((0..reps as u64).into_par_iter().map(f).collect()),
    }
}
