//! Data-parallel helpers with a sequential fallback.
//!
//! Everything in this crate that fans out over independent work items goes
//! through these shims. With the `parallel` feature (on by default) they
//! dispatch to rayon; without it they run plain loops. Results are always
//! collected in input order, so the two paths are bit-identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over a slice, collecting results in order.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map a fallible `f` over a slice, stopping at the first error.
pub fn try_map_slice<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map `f` over `0..n`, collecting results in order.
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Map a fallible `f` over `0..n`, stopping at the first error.
pub fn try_map_indexed<R, E, F>(n: usize, f: F) -> Result<Vec<R>, E>
where
    R: Send,
    E: Send,
    F: Fn(usize) -> Result<R, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Run `f` on every `width`-sized row of `data`, row index first.
pub fn for_each_row_mut<F>(data: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    debug_assert_eq!(data.len() % width.max(1), 0);
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(y, row)| f(y, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (y, row) in data.chunks_mut(width).enumerate() {
            f(y, row);
        }
    }
}

/// Configure the global thread pool used by the parallel paths.
///
/// A no-op without the `parallel` feature. Returns an error string if the
/// pool was already initialised with a different size.
#[allow(unused_variables)]
pub fn configure_threads(n: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let items: Vec<u64> = (0..1000).collect();
        let out = map_slice(&items, |&x| x * 2);
        assert_eq!(out, (0..1000).map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn try_map_propagates_error() {
        let items: Vec<u64> = (0..100).collect();
        let out = try_map_slice(&items, |&x| if x == 57 { Err(x) } else { Ok(x) });
        assert_eq!(out, Err(57));
    }

    #[test]
    fn rows_see_correct_indices() {
        let mut data = vec![0.0; 12];
        for_each_row_mut(&mut data, 4, |y, row| {
            for v in row.iter_mut() {
                *v = y as f64;
            }
        });
        assert_eq!(data[0], 0.0);
        assert_eq!(data[5], 1.0);
        assert_eq!(data[11], 2.0);
    }
}
