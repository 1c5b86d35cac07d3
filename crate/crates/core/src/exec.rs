//! Index-space execution: the data-parallel inner loops (paths, coefficient
//! draws, grid pull-backs) all map an index range through a pure function.
//!
//! With the `parallel` feature (default) the work runs on rayon; without it
//! the same code runs sequentially. Because every map is indexed and every
//! reduction happens on the ordered output, results are identical bit for
//! bit across modes and worker counts.

/// How to run an indexed map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// rayon when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Auto,
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

/// Maps `0..n` through `f`, preserving index order in the output.
pub fn map_indexed<T: Send>(
    mode: ExecMode,
    n: usize,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Vec<T> {
    match mode {
        ExecMode::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Auto | ExecMode::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        ExecMode::Auto => (0..n).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_bitwise() {
        let f = |i: usize| {
            let x = (i as f64 + 0.5).sqrt().sin();
            x * x + 1.0 / (i as f64 + 1.0)
        };
        let seq = map_indexed(ExecMode::Sequential, 10_000, f);
        let auto = map_indexed(ExecMode::Auto, 10_000, f);
        assert_eq!(seq, auto);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn worker_count_does_not_change_results() {
        let f = |i: usize| (i as f64).cos() * (i as f64 + 2.0).ln();
        let reference = map_indexed(ExecMode::Sequential, 50_000, f);
        for threads in [1, 2, 7] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let got = pool.install(|| map_indexed(ExecMode::Parallel, 50_000, f));
            assert_eq!(reference, got, "threads = {threads}");
        }
    }
}
