//! Execution policy for the data-parallel loops.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] fans work out
//! over the rayon pool. Without it every policy runs sequentially. Results are
//! identical under both policies: each output slot is computed by exactly one
//! closure call, and reductions happen afterwards in index order.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `0..len`, threading a per-worker scratch value built by `init`.
pub fn map_with_scratch<S, T, I, F>(exec: Execution, len: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Send + Sync,
    F: Fn(&mut S, usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map_init(&init, |s, i| f(s, i)).collect();
    }
    let _ = exec;
    let mut scratch = init();
    (0..len).map(|i| f(&mut scratch, i)).collect()
}

/// Fills consecutive `width`-sized chunks of `out`, chunk `r` via `f(r, chunk)`.
pub fn for_each_row<F>(exec: Execution, out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        out.par_chunks_mut(width)
            .enumerate()
            .for_each(|(r, row)| f(r, row));
        return;
    }
    let _ = exec;
    for (r, row) in out.chunks_mut(width).enumerate() {
        f(r, row);
    }
}
