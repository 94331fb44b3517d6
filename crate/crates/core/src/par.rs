//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) independent work items are spread
//! over the rayon pool; without it everything runs on the calling thread.
//! Results are returned in input order either way.

/// Execution strategy for a batch of independent items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Auto,
    Sequential,
    Parallel,
}

/// Maps `f` over `items` with the default strategy.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_with(Mode::Auto, items, f)
}

/// Maps `f` over `items`; `Parallel` degrades to sequential when the
/// `parallel` feature is off.
pub fn map_with<T, R, F>(mode: Mode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match mode {
        Mode::Sequential => items.iter().map(f).collect(),
        Mode::Auto | Mode::Parallel => parallel_map(items, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Runs `f` inside a pool of `threads` workers (0 = rayon default).
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}
