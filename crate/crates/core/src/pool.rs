//! Fixed-size worker pool over an indexed task queue.
//!
//! Results are written to the slot of their task index, so the output never
//! depends on worker count or completion order.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::Result;

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Runs `task(i)` for `i in 0..count` on up to `workers` threads.
///
/// On failure the error of the lowest failing index is returned.
pub fn run_indexed<T, F>(workers: usize, count: usize, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let workers = workers.max(1).min(count.max(1));
    if workers == 1 {
        return (0..count).map(task).collect();
    }
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..count).map(|_| None).collect());
    let errors = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if failed.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                match task(i) {
                    Ok(v) => slots.lock().unwrap()[i] = Some(v),
                    Err(e) => {
                        failed.store(true, Ordering::Relaxed);
                        errors.lock().unwrap().push((i, e));
                    }
                }
            });
        }
    });
    let mut errors = errors.into_inner().unwrap();
    if !errors.is_empty() {
        errors.sort_by_key(|(i, _)| *i);
        return Err(errors.swap_remove(0).1);
    }
    Ok(slots.into_inner().unwrap().into_iter().map(|s| s.expect("every task slot is filled")).collect())
}

/// Splits `0..len` into contiguous chunks of at most `size`.
pub fn chunks(len: usize, size: usize) -> Vec<std::ops::Range<usize>> {
    let size = size.max(1);
    (0..len).step_by(size).map(|s| s..(s + size).min(len)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn ordered_results_for_any_worker_count() {
        for w in [1, 2, 7] {
            let out = run_indexed(w, 50, |i| Ok(i * i)).unwrap();
            assert_eq!(out, (0..50).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn lowest_error_wins() {
        let r: Result<Vec<usize>> =
            run_indexed(1, 10, |i| if i >= 3 { Err(Error::Service(format!("t{i}"))) } else { Ok(i) });
        assert!(matches!(r, Err(Error::Service(m)) if m == "t3"));
    }

    #[test]
    fn chunking() {
        assert_eq!(chunks(5, 2), vec![0..2, 2..4, 4..5]);
        assert!(chunks(0, 3).is_empty());
    }
}
