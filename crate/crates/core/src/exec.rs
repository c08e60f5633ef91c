//! Execution strategy for the data-parallel inner loops.
//!
//! Every hot loop in the crate (amplitude kernels, distribution sums, shot
//! campaigns, Monte Carlo trials) goes through the helpers here. With the
//! `parallel` feature they fan out over rayon; without it, or when
//! [`Execution::Sequential`] is selected, they run on the calling thread.
//! Reductions use fixed-size chunks summed in order, so both strategies give
//! bit-identical floating-point results.

use std::sync::atomic::{AtomicU8, Ordering};

/// Work below this many elements is not worth splitting.
pub(crate) const MIN_PARALLEL_LEN: usize = 1 << 12;
/// Chunk size for deterministic reductions.
const REDUCE_CHUNK: usize = 1 << 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

static MODE: AtomicU8 = AtomicU8::new(if cfg!(feature = "parallel") { 1 } else { 0 });

impl Execution {
    /// The process-wide default used by the high-level API. A single-worker
    /// pool resolves to `Sequential`.
    pub fn current() -> Self {
        match MODE.load(Ordering::Relaxed) {
            0 => Execution::Sequential,
            _ if workers() < 2 => Execution::Sequential,
            _ => Execution::Parallel,
        }
    }

    /// Whether this strategy actually runs in parallel in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Sets the process-wide default strategy. Without the `parallel` feature
/// `Parallel` silently degrades to sequential execution.
pub fn set_execution(mode: Execution) {
    MODE.store(
        match mode {
            Execution::Sequential => 0,
            Execution::Parallel => 1,
        },
        Ordering::Relaxed,
    );
}

#[cfg(feature = "parallel")]
fn workers() -> usize {
    rayon::current_num_threads()
}

#[cfg(not(feature = "parallel"))]
fn workers() -> usize {
    1
}

#[cfg(feature = "parallel")]
mod imp {
    use rayon::prelude::*;

    pub fn for_each_mut<T, F>(data: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        data.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
    }

    pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }

    pub fn for_each_index_init<S, I, F>(n: usize, init: I, f: F)
    where
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, usize) + Sync + Send,
    {
        (0..n).into_par_iter().for_each_init(init, f);
    }

    pub fn for_each_chunk_init<T, S, I, F>(data: &mut [T], chunk: usize, init: I, f: F)
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, usize, &mut [T]) + Sync + Send,
    {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each_init(init, |s, (i, c)| f(s, i, c));
    }

    pub fn map<T, F>(n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

/// Runs `f` on every element with its index.
pub fn for_each_mut<T, F>(exec: Execution, data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && data.len() >= MIN_PARALLEL_LEN {
        return imp::for_each_mut(data, f);
    }
    let _ = exec;
    data.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
}

/// Runs `f` on consecutive chunks of length `chunk` (last may be shorter).
pub fn for_each_chunk_mut<T, F>(exec: Execution, data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && data.len() >= MIN_PARALLEL_LEN && data.len() > chunk {
        return imp::for_each_chunk_mut(data, chunk, f);
    }
    let _ = exec;
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Runs `f(scratch, index, chunk)` over consecutive chunks, with one scratch
/// value per worker.
pub fn for_each_chunk_init<T, S, I, F>(exec: Execution, data: &mut [T], chunk: usize, init: I, f: F)
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && data.len() >= MIN_PARALLEL_LEN && data.len() > chunk {
        return imp::for_each_chunk_init(data, chunk, init, f);
    }
    let _ = exec;
    let mut s = init();
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(&mut s, i, c));
}

/// Runs `f(scratch, i)` for `i in 0..n`, with one scratch value per worker.
/// `work` is the approximate element count touched, used to decide whether
/// splitting pays off.
pub fn for_each_index_init<S, I, F>(exec: Execution, n: usize, work: usize, init: I, f: F)
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && work >= MIN_PARALLEL_LEN && n > 1 {
        return imp::for_each_index_init(n, init, f);
    }
    let _ = (exec, work);
    let mut s = init();
    (0..n).for_each(|i| f(&mut s, i));
}

/// Collects `f(i)` for `i in 0..n` in index order. Intended for coarse work
/// items (shots, trials, instances), so it always splits when parallel.
pub fn map<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && n > 1 {
        return imp::map(n, f);
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Like [`map`], but only splits when `work` (approximate elements touched)
/// is large enough to pay for it.
pub fn map_sized<T, F>(exec: Execution, n: usize, work: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if work >= MIN_PARALLEL_LEN {
        return map(exec, n, f);
    }
    (0..n).map(f).collect()
}

/// Sums `f(i)` for `i in 0..n` in a fixed association order.
pub fn sum<F>(exec: Execution, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    let partial = |c: usize| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    };
    let parts = if n >= MIN_PARALLEL_LEN {
        map(exec, chunks, partial)
    } else {
        (0..chunks).map(partial).collect()
    };
    parts.into_iter().sum()
}
