//! Parallel execution of independent tasks with index-ordered results.

use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

/// A task that failed; later tasks that had not started were skipped.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepFailure<E> {
    pub index: usize,
    pub error: E,
    /// Tasks that finished successfully before the sweep stopped.
    pub completed: usize,
}

enum Slot<R, E> {
    Done(R),
    Failed(E),
    Skipped,
}

/// Runs `f` on every task in a pool of `workers` threads.
///
/// Results come back in task order, so the output does not depend on the
/// worker count. After the first failure no new tasks are started; tasks
/// already running finish, and the failure with the lowest index is reported.
pub fn sweep_parallel<T, R, E, F>(tasks: &[T], workers: usize, f: F) -> Result<Vec<R>, SweepFailure<E>>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(usize, &T) -> Result<R, E> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool");
    pool.install(|| sweep_in_current_pool(tasks, f))
}

/// [`sweep_parallel`] on the current rayon pool.
pub fn sweep_in_current_pool<T, R, E, F>(tasks: &[T], f: F) -> Result<Vec<R>, SweepFailure<E>>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(usize, &T) -> Result<R, E> + Sync,
{
    let abort = AtomicBool::new(false);
    let slots: Vec<Slot<R, E>> = tasks
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            if abort.load(Ordering::Acquire) {
                return Slot::Skipped;
            }
            match f(i, t) {
                Ok(r) => Slot::Done(r),
                Err(e) => {
                    abort.store(true, Ordering::Release);
                    Slot::Failed(e)
                }
            }
        })
        .collect();
    let completed = slots.iter().filter(|s| matches!(s, Slot::Done(_))).count();
    let mut out = Vec::with_capacity(slots.len());
    let mut failure = None;
    for (index, s) in slots.into_iter().enumerate() {
        match s {
            Slot::Done(r) => out.push(r),
            Slot::Failed(error) if failure.is_none() => failure = Some(SweepFailure { index, error, completed }),
            _ => {}
        }
    }
    match failure {
        Some(f) => Err(f),
        None => Ok(out),
    }
}
