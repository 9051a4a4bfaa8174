//! Data-parallel helpers with a sequential fallback.
//!
//! Results are always collected in input order, so a parallel run produces
//! exactly the same output as a sequential one.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How per-WBAN and per-run work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this build can actually run work on the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub fn map<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

pub fn map_mut<T, U, F>(exec: Execution, items: &mut [T], f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(usize, &mut T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter_mut().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let _ = exec;
    items.iter_mut().enumerate().map(|(i, t)| f(i, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_agree() {
        let xs: Vec<u64> = (0..5000).collect();
        let f = |x: &u64| x.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(7);
        assert_eq!(map(Execution::Sequential, &xs, f), map(Execution::Parallel, &xs, f));
        let mut a = xs.clone();
        let mut b = xs;
        let g = |i: usize, x: &mut u64| {
            *x += i as u64;
            *x * 3
        };
        assert_eq!(map_mut(Execution::Sequential, &mut a, g), map_mut(Execution::Parallel, &mut b, g));
        assert_eq!(a, b);
    }
}
