//! Execution policy for the data-parallel loops.
//!
//! Reductions are split into fixed-size chunks whose boundaries do not depend
//! on the thread count; chunk partial sums are combined sequentially in chunk
//! order. Results are therefore bitwise identical between the sequential and
//! the parallel path and across thread counts.

/// Number of items per reduction chunk.
pub const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecPolicy {
    Sequential,
    #[default]
    Parallel,
}

impl ExecPolicy {
    /// Whether this build can actually run in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecPolicy::Parallel
    }
}

/// Deterministic sum of `f(i)` for `i in 0..len`.
pub fn sum_indexed<F>(policy: ExecPolicy, len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let nchunks = len.div_ceil(CHUNK);
    let chunk_sum = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(len);
        (lo..hi).map(&f).sum::<f64>()
    };
    let partials: Vec<f64> = map_indexed(policy, nchunks, chunk_sum);
    partials.iter().sum()
}

/// `(0..len).map(f).collect()`, in parallel when enabled.
pub fn map_indexed<T, F>(policy: ExecPolicy, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = policy;
    (0..len).map(f).collect()
}

/// Fill `out[i] = f(i)`.
pub fn fill_indexed<T, F>(policy: ExecPolicy, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.is_parallel() {
        use rayon::prelude::*;
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
        return;
    }
    let _ = policy;
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(i);
    }
}

/// Call `f(j, block)` on consecutive blocks of `width` elements of `out`.
pub fn fill_blocks<T, F>(policy: ExecPolicy, out: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.is_parallel() {
        use rayon::prelude::*;
        out.par_chunks_mut(width).enumerate().for_each(|(j, b)| f(j, b));
        return;
    }
    let _ = policy;
    for (j, b) in out.chunks_mut(width).enumerate() {
        f(j, b);
    }
}

/// Apply `f` to every element of `items`, preserving order of results.
pub fn map_slice<S, T, F>(policy: ExecPolicy, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_indexed(policy, items.len(), |i| f(&items[i]))
}
