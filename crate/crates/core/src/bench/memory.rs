//! Peak memory: periodic RSS sampling on a side thread, plus an optional
//! allocation high-water mark.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

pub const MB: f64 = 1024.0 * 1024.0;

/// Resident set size of this process in bytes, if the platform exposes it.
pub fn current_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmRSS:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryReport {
    pub samples: Vec<u64>,
    pub peak_bytes: u64,
}

impl MemoryReport {
    pub fn peak_mb(&self) -> f64 {
        self.peak_bytes as f64 / MB
    }
}

/// Samples a memory reading every `interval` until stopped.
pub struct MemorySampler {
    stop: mpsc::Sender<()>,
    handle: thread::JoinHandle<Vec<u64>>,
}

impl MemorySampler {
    /// Samples RSS once per second.
    pub fn start() -> Self {
        Self::start_with(Duration::from_secs(1), || current_rss_bytes().unwrap_or(0))
    }

    /// Samples `source` immediately, then every `interval`, and once more
    /// when stopped.
    pub fn start_with<F>(interval: Duration, mut source: F) -> Self
    where
        F: FnMut() -> u64 + Send + 'static,
    {
        let (stop, rx) = mpsc::channel::<()>();
        let handle = thread::spawn(move || {
            let mut samples = vec![source()];
            loop {
                match rx.recv_timeout(interval) {
                    Err(mpsc::RecvTimeoutError::Timeout) => samples.push(source()),
                    _ => {
                        samples.push(source());
                        return samples;
                    }
                }
            }
        });
        Self { stop, handle }
    }

    pub fn stop(self) -> MemoryReport {
        let _ = self.stop.send(());
        let samples = self.handle.join().expect("sampler thread panicked");
        let peak_bytes = samples.iter().copied().max().unwrap_or(0);
        MemoryReport { samples, peak_bytes }
    }
}

/// Runs `task` under a 1 Hz RSS sampler.
pub fn measure_peak_memory<T>(task: impl FnOnce() -> T) -> (T, MemoryReport) {
    let sampler = MemorySampler::start();
    let out = task();
    (out, sampler.stop())
}

static INSTALLED: AtomicBool = AtomicBool::new(false);
static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

/// Global allocator wrapper that tracks live bytes and their high-water
/// mark. Install with `#[global_allocator]`.
pub struct TrackingAllocator;

impl TrackingAllocator {
    fn add(size: usize) {
        INSTALLED.store(true, Ordering::Relaxed);
        let now = CURRENT.fetch_add(size, Ordering::Relaxed) + size;
        PEAK.fetch_max(now, Ordering::Relaxed);
    }

    fn sub(size: usize) {
        CURRENT.fetch_sub(size, Ordering::Relaxed);
    }
}

unsafe impl GlobalAlloc for TrackingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            Self::add(layout.size());
        }
        p
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc_zeroed(layout);
        if !p.is_null() {
            Self::add(layout.size());
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        Self::sub(layout.size());
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = System.realloc(ptr, layout, new_size);
        if !p.is_null() {
            Self::sub(layout.size());
            Self::add(new_size);
        }
        p
    }
}

/// High-water mark of live heap bytes, when [`TrackingAllocator`] is the
/// global allocator.
pub fn tracked_peak_bytes() -> Option<usize> {
    INSTALLED
        .load(Ordering::Relaxed)
        .then(|| PEAK.load(Ordering::Relaxed))
}

/// Restarts the high-water mark from the current live size.
pub fn reset_tracked_peak() {
    PEAK.store(CURRENT.load(Ordering::Relaxed), Ordering::Relaxed);
}

/// Shared counter usable as an injected memory source in tests.
pub fn counter_source(counter: Arc<AtomicUsize>) -> impl FnMut() -> u64 + Send + 'static {
    move || counter.load(Ordering::SeqCst) as u64
}
