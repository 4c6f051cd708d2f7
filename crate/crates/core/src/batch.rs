//! Independent jobs fanned out over a thread pool. With the `parallel`
//! feature off everything runs on the calling thread; results come back in
//! input order either way.

use crate::error::Result;
use crate::grid::GridMap;
use crate::planner::{astar, GridPath};
use crate::sim::{run_episode, EpisodeOptions, EpisodeReport, NullSink, WorldState};

/// Maps `f` over `items`, in parallel when the feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_jobs<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_jobs<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_jobs_sequential(items, f)
}

pub fn map_jobs_sequential<T, R, F: Fn(&T) -> R>(items: &[T], f: F) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Runs each world to completion with the same options, discarding telemetry.
pub fn run_batch(worlds: Vec<WorldState>, options: &EpisodeOptions) -> Vec<EpisodeReport> {
    map_jobs(&worlds, |w| run_episode(w.clone(), options, &mut NullSink))
}

pub fn run_batch_sequential(
    worlds: Vec<WorldState>,
    options: &EpisodeOptions,
) -> Vec<EpisodeReport> {
    map_jobs_sequential(&worlds, |w| run_episode(w.clone(), options, &mut NullSink))
}

pub fn plan_batch(maps: &[GridMap]) -> Vec<Result<GridPath>> {
    map_jobs(maps, astar)
}

pub fn plan_batch_sequential(maps: &[GridMap]) -> Vec<Result<GridPath>> {
    map_jobs_sequential(maps, astar)
}
