use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

/// Runs `f` over `jobs` on up to `workers` threads. Jobs not yet started when
/// `stop` is raised are skipped; their slots come back as `None`.
pub(crate) fn run_pool<T: Sync, R: Send>(
    jobs: &[T],
    workers: usize,
    stop: &AtomicBool,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<Option<R>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let workers = workers.clamp(1, jobs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let r = f(&jobs[i]);
                results.lock().expect("pool results")[i] = Some(r);
            });
        }
    });
    results.into_inner().expect("pool results")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let jobs: Vec<u32> = (0..50).collect();
        let out = run_pool(&jobs, 4, &AtomicBool::new(false), |x| x * 2);
        assert_eq!(out, jobs.iter().map(|x| Some(x * 2)).collect::<Vec<_>>());
    }

    #[test]
    fn stop_skips_pending_jobs() {
        let stop = AtomicBool::new(false);
        let jobs: Vec<u32> = (0..10).collect();
        let out = run_pool(&jobs, 1, &stop, |x| {
            if *x == 2 {
                stop.store(true, Ordering::SeqCst);
            }
            *x
        });
        assert_eq!(out.iter().flatten().count(), 3);
    }
}
