//! Wall and CPU clocks used by the codec counters and the benchmarks.

use std::time::{Duration, Instant};

/// CPU time consumed by the calling thread.
///
/// The benchmark regions are single-threaded, so the thread clock is the
/// one that stays below wall time even when other threads share the process.
pub fn thread_cpu_time() -> Duration {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid out-pointer for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return Duration::ZERO;
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

/// Elapsed wall and CPU time of one measured region.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timing {
    pub real: Duration,
    pub cpu: Duration,
}

/// Runs `f` and measures it. The CPU interval is taken strictly inside the
/// wall interval.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, Timing) {
    let real_start = Instant::now();
    let cpu_start = thread_cpu_time();
    let value = f();
    let cpu = thread_cpu_time().saturating_sub(cpu_start);
    let real = real_start.elapsed();
    (value, Timing { real, cpu })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpu_never_exceeds_real() {
        for _ in 0..20 {
            let (_, t) = measure(|| (0..50_000u64).map(|x| x.wrapping_mul(x)).sum::<u64>());
            assert!(t.cpu <= t.real, "{t:?}");
        }
    }

    #[test]
    fn thread_clock_advances() {
        let a = thread_cpu_time();
        let mut acc = 0u64;
        for i in 0..2_000_000u64 {
            acc = acc.wrapping_add(i ^ (acc >> 3));
        }
        std::hint::black_box(acc);
        assert!(thread_cpu_time() > a);
    }
}
