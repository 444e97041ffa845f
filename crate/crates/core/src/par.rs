//! Data-parallel helpers.
//!
//! Every sampling loop, multistart search and sweep in the crate goes through
//! [`map_indexed`]. With the `parallel` feature (default) work is spread over
//! the rayon pool; without it the same closures run sequentially. Results are
//! always collected in index order, so reductions over them are deterministic
//! regardless of the execution mode.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// How an indexed map is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Use rayon when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Auto,
    /// Always run on the calling thread.
    Sequential,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Auto
    }
}

/// Evaluates `f(0..n)` and returns results in index order.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps over a slice, keeping input order.
pub fn map_slice<S, T, F>(items: &[S], exec: Execution, f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(usize, &S) -> T + Sync + Send,
{
    map_indexed(items.len(), exec, |i| f(i, &items[i]))
}

/// Independent, reproducible RNG stream for sample `index` under `seed`.
///
/// Streams do not depend on thread scheduling, which keeps parallel and
/// sequential runs bit-identical.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
