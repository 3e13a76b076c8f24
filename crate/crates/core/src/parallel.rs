//! Deterministic data-parallel primitives.
//!
//! The solver is reproducible by contract: a fixed seed must give bit-identical
//! results. Floating-point addition is not associative, so naive parallel
//! reductions would tie the output to the thread count. Every reduction here is
//! therefore chunked with a *fixed* chunk length and the per-chunk partials are
//! combined sequentially in chunk order. Maps write each element into its own
//! slot. Under this scheme the threaded build, the single-threaded pool, and
//! the sequential fallback (built without the `parallel` feature) all produce
//! the same bits.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for ordered reductions over collocation points or probes.
pub const REDUCE_CHUNK: usize = 1024;

/// Row-block height for Gram/Jacobian block products.
pub const BLOCK_ROWS: usize = 64;

/// Configures the global thread pool. `0` keeps the library default
/// (number of cores). Later calls are ignored; the pool can be built once.
pub fn set_global_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

/// Runs `f` inside a local pool of the given size (used by the benches to
/// compare one thread against many without touching the global pool).
pub fn with_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("local thread pool")
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Ordered map over `0..n`: element `i` of the result is `f(i)`.
pub fn map_range<U: Send>(n: usize, f: impl Fn(usize) -> U + Send + Sync) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Applies `f(chunk_index, chunk)` to consecutive chunks of `out`, in place.
/// Chunks are disjoint, so the write pattern is thread-count independent.
pub fn for_chunks_mut<T: Send>(
    out: &mut [T],
    chunk: usize,
    f: impl Fn(usize, &mut [T]) + Send + Sync,
) {
    assert!(chunk > 0, "chunk length must be positive");
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}

/// Evaluates `f` on consecutive index ranges of length `chunk` (the last may
/// be shorter) and returns the partial results in range order.
pub fn chunk_partials<R: Send>(
    n: usize,
    chunk: usize,
    f: impl Fn(std::ops::Range<usize>) -> R + Send + Sync,
) -> Vec<R> {
    assert!(chunk > 0, "chunk length must be positive");
    let ranges: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(chunk)
        .map(|start| start..(start + chunk).min(n))
        .collect();
    #[cfg(feature = "parallel")]
    {
        ranges.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ranges.into_iter().map(f).collect()
    }
}

/// Deterministic chunked sum of `f(i)` over `0..n`.
pub fn sum_range(n: usize, f: impl Fn(usize) -> f64 + Send + Sync) -> f64 {
    chunk_partials(n, REDUCE_CHUNK, |r| {
        let mut acc = 0.0;
        for i in r {
            acc += f(i);
        }
        acc
    })
    .into_iter()
    .sum()
}

/// Deterministic chunked accumulation of per-index vectors: returns
/// `Σ_i f(i)` where each `f(i)` writes its contribution into a scratch slice.
pub fn sum_vectors(n: usize, len: usize, f: impl Fn(usize, &mut [f64]) + Send + Sync) -> Vec<f64> {
    let partials = chunk_partials(n, REDUCE_CHUNK, |r| {
        let mut acc = vec![0.0; len];
        let mut scratch = vec![0.0; len];
        for i in r {
            scratch.iter_mut().for_each(|v| *v = 0.0);
            f(i, &mut scratch);
            for (a, s) in acc.iter_mut().zip(&scratch) {
                *a += *s;
            }
        }
        acc
    });
    let mut total = vec![0.0; len];
    for p in partials {
        for (t, v) in total.iter_mut().zip(&p) {
            *t += v;
        }
    }
    total
}
