//! Sample-parallel loops with a schedule-independent result.
//!
//! Sample indices are cut into fixed blocks. Blocks run on the current rayon
//! pool, each folds its indices in order, and the block results are merged
//! left to right. Neither the block layout nor the merge order depends on
//! the number of workers, so floating-point sums come out bit-identical
//! for any thread count.

use rayon::prelude::*;

use crate::error::Result;

/// Indices per block.
pub const BLOCK: u64 = 256;

fn blocks(count: u64) -> impl IndexedParallelIterator<Item = std::ops::Range<u64>> {
    let n = count.div_ceil(BLOCK) as usize;
    (0..n).into_par_iter().map(move |b| {
        let b = b as u64;
        b * BLOCK..((b + 1) * BLOCK).min(count)
    })
}

/// Folds `step` over sample indices `0..count`.
pub fn fold_samples<A, I, S, M>(count: u64, init: I, step: S, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, u64) -> Result<()> + Sync,
    M: Fn(A, A) -> A,
{
    let parts: Vec<A> = blocks(count)
        .map(|range| {
            let mut acc = init();
            for i in range {
                step(&mut acc, i)?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().fold(init(), merge))
}

/// `f(i)` for every index, in index order.
pub fn map_samples<R, F>(count: u64, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64) -> Result<R> + Sync + Send,
{
    (0..count as usize).into_par_iter().map(|i| f(i as u64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::PercolationError;

    fn noisy_sum(count: u64) -> f64 {
        fold_samples(count, || 0.0f64, |acc, i| {
            *acc += 1.0 / (1.0 + i as f64).powf(1.3);
            Ok(())
        }, |a, b| a + b)
        .unwrap()
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| noisy_sum(10_007));
        let b = four.install(|| noisy_sum(10_007));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn map_keeps_order_and_errors_propagate() {
        let v = map_samples(1000, |i| Ok(i * 2)).unwrap();
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i as u64));
        let e = map_samples(10, |i| if i == 7 { Err(PercolationError::Undefined("x".into())) } else { Ok(i) });
        assert!(e.is_err());
        assert_eq!(fold_samples(0, || 5u32, |_, _| Ok(()), |a, b| a + b).unwrap(), 5);
    }
}
