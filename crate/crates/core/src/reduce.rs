//! Deterministic reductions.
//!
//! Sums use a fixed pairwise tree whose shape depends only on the length of
//! the input, so the result is bit-identical for any thread count.

use rayon::prelude::*;

/// Leaves of the summation tree are summed left to right.
const LEAF: usize = 128;
/// Subtrees at least this long are split across threads.
const PARALLEL_CUTOFF: usize = 1 << 14;

/// Pairwise sum of `f(i)` for `i` in `0..len`.
pub fn pairwise_sum_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    sum_range(0, len, &f)
}

fn sum_range<F>(start: usize, end: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let len = end - start;
    if len <= LEAF {
        let mut acc = 0.0;
        for i in start..end {
            acc += f(i);
        }
        return acc;
    }
    let mid = start + len / 2;
    if len >= PARALLEL_CUTOFF {
        let (a, b) = rayon::join(|| sum_range(start, mid, f), || sum_range(mid, end, f));
        a + b
    } else {
        sum_range(start, mid, f) + sum_range(mid, end, f)
    }
}

/// Pairwise sum of a slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_sum_by(values.len(), |i| values[i])
}

/// Minimum and maximum of `f(i)` over `0..len`.
///
/// Returns `(+inf, -inf)` for an empty range. NaN values are skipped.
pub fn min_max_by<F>(len: usize, f: F) -> (f64, f64)
where
    F: Fn(usize) -> f64 + Sync,
{
    (0..len)
        .into_par_iter()
        .map(|i| {
            let v = f(i);
            (v, v)
        })
        .reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| (a.0.min(b.0), a.1.max(b.1)),
        )
}

/// Maximum of `f(i)` over `0..len`, `-inf` when empty.
pub fn max_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    min_max_by(len, f).1
}

/// Index of the first non-finite value, if any.
pub fn first_non_finite(values: &[f64]) -> Option<usize> {
    values.par_iter().position_first(|v| !v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_exact_sum_of_integers() {
        let v: Vec<f64> = (0..100_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 99_999.0 * 100_000.0 / 2.0);
    }

    #[test]
    fn independent_of_thread_count() {
        let v: Vec<f64> = (0..70_001).map(|i| (i as f64 * 0.37).sin()).collect();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| pairwise_sum(&v));
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| pairwise_sum(&v));
        assert_eq!(one.to_bits(), four.to_bits());
    }

    #[test]
    fn more_accurate_than_naive_summation() {
        // 0.1 is not representable; a long naive sum drifts by ~n * eps.
        let n = 1 << 20;
        let v = vec![0.1; n];
        let exact = 0.1 * n as f64;
        let naive: f64 = v.iter().sum();
        let pairwise = pairwise_sum(&v);
        assert!((pairwise - exact).abs() <= (naive - exact).abs());
        assert!((pairwise - exact).abs() < 1e-9);
    }

    #[test]
    fn extrema() {
        let v = [3.0, -1.0, f64::NAN, 7.5, 0.0];
        let (lo, hi) = min_max_by(v.len(), |i| v[i]);
        assert_eq!((lo, hi), (-1.0, 7.5));
        assert_eq!(first_non_finite(&v), Some(2));
        assert_eq!(min_max_by(0, |_| 0.0), (f64::INFINITY, f64::NEG_INFINITY));
    }
}
