use std::time::Instant;

use crate::error::{Error, Result};
use crate::image::Rgb;
use crate::ingest::PosedView;
use crate::raster::render;
use crate::scene::GaussianCloud;

pub const MIN_LOOPS: usize = 10;
pub const MAX_LOOPS: usize = 20;

/// Seconds since an arbitrary origin.
pub trait Clock {
    fn now(&mut self) -> f64;
}

pub struct SystemClock(Instant);

impl SystemClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Mean of the five central values of the sorted rates. With 0-based
/// sorted index, the window starts at `k / 2 - 2`.
pub fn median5_mean(rates: &[f64]) -> f64 {
    let mut s = rates.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    assert!(k >= 5, "need at least 5 rates");
    let start = k / 2 - 2;
    s[start..start + 5].iter().sum::<f64>() / 5.0
}

/// Per-loop frame rates of `work`, which renders `frames` frames per loop.
pub fn loop_rates<C: Clock, F: FnMut()>(loops: usize, frames: usize, clock: &mut C, mut work: F) -> Vec<f64> {
    (0..loops)
        .map(|_| {
            let t0 = clock.now();
            work();
            let t1 = clock.now();
            frames as f64 / (t1 - t0).max(f64::MIN_POSITIVE)
        })
        .collect()
}

pub fn check_loops(loops: usize) -> Result<()> {
    if !(MIN_LOOPS..=MAX_LOOPS).contains(&loops) {
        return Err(Error::InvalidConfig(format!(
            "FPS loop count must lie in [{MIN_LOOPS}, {MAX_LOOPS}], got {loops}"
        )));
    }
    Ok(())
}

/// Renders the whole test set `loops` times and averages the five median
/// loop rates.
pub fn measure_fps_with<C: Clock>(
    cloud: &GaussianCloud,
    views: &[PosedView],
    background: Rgb,
    loops: usize,
    clock: &mut C,
) -> Result<f64> {
    check_loops(loops)?;
    if views.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let rates = loop_rates(loops, views.len(), clock, || {
        for v in views {
            std::hint::black_box(render(cloud, &v.camera, background));
        }
    });
    Ok(median5_mean(&rates))
}

pub fn measure_fps(cloud: &GaussianCloud, views: &[PosedView], background: Rgb, loops: usize) -> Result<f64> {
    measure_fps_with(cloud, views, background, loops, &mut SystemClock::new())
}

/// Replays scripted loop durations; for tests and offline traces.
pub struct ScriptedClock {
    durations: Vec<f64>,
    t: f64,
    ticks: usize,
}

impl ScriptedClock {
    pub fn new(durations: Vec<f64>) -> Self {
        Self {
            durations,
            t: 0.0,
            ticks: 0,
        }
    }
}

impl Clock for ScriptedClock {
    fn now(&mut self) -> f64 {
        // odd ticks close a loop
        if self.ticks % 2 == 1 {
            self.t += self.durations[self.ticks / 2];
        }
        self.ticks += 1;
        self.t
    }
}
