//! Trial fan-out. With the `parallel` feature trials run on the rayon pool;
//! otherwise they run in order on the calling thread. Results are always
//! returned indexed by trial.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Runs `f(0..n)` and collects the results in trial order.
pub fn map_trials<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_trials_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_trials_seq(n, f)
    }
}

pub fn map_trials_seq<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_trials_par<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}
