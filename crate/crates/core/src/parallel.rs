//! Data-parallel map over independent work items. With the `parallel`
//! feature this runs on a rayon pool; without it, in order on the caller's
//! thread. Output order always matches input order.

/// Maps `f` over `items` with up to `jobs` workers (`0` means all cores).
pub fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if jobs == 1 {
            return sequential_map(items, f);
        }
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            Err(_) => sequential_map(items, f),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        sequential_map(items, f)
    }
}

/// The sequential reference path.
pub fn sequential_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Whether this build can use more than one worker.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = par_map(&xs, 0, |x| x * x);
        let b = sequential_map(&xs, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(par_map(&xs, 3, |x| x + 1)[999], 1000);
    }
}
