//! Deterministic batch helper: maps a closure over an index range, optionally
//! on scoped threads. Results are collected by index, so the aggregation any
//! caller performs afterwards is independent of the thread count.

use alloc::vec::Vec;

#[cfg(feature = "std")]
pub fn map_indexed<R, F>(count: usize, threads: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    let threads = threads.max(1).min(count.max(1));
    if threads == 1 || count < 2 {
        return (0..count).map(&f).collect();
    }
    let mut out: Vec<Option<R>> = (0..count).map(|_| None).collect();
    let chunk = count.div_ceil(threads);
    std::thread::scope(|scope| {
        for (t, slot) in out.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                for (off, cell) in slot.iter_mut().enumerate() {
                    *cell = Some(f(t * chunk + off));
                }
            });
        }
    });
    out.into_iter().map(|r| r.unwrap()).collect()
}

#[cfg(not(feature = "std"))]
pub fn map_indexed<R, F>(count: usize, _threads: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    (0..count).map(f).collect()
}
