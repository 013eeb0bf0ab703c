//! Running many independent simulations.
//!
//! Each run owns its generator and state, so batches are embarrassingly
//! parallel. With the `parallel` feature (on by default) [`map`] fans out over
//! rayon's pool; without it, it falls back to a plain loop. Output order
//! always matches input order.

use crate::error::Result;
use crate::sim::{run, RunOutput, SimConfig};

pub fn map_sequential<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_parallel<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    map_parallel(items, f)
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    map_sequential(items, f)
}

/// Runs every configuration and reduces each output with `reduce` before
/// collecting, so full packet logs never pile up.
pub fn run_many<R, F>(configs: Vec<SimConfig>, reduce: F) -> Vec<Result<R>>
where
    R: Send,
    F: Fn(RunOutput) -> Result<R> + Sync + Send,
{
    map(configs, |cfg| run(&cfg).and_then(&reduce))
}
