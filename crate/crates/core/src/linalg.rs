//! Dense kernels over the column-stored data matrix.
//!
//! Every kernel has a sequential and a data-parallel path. Both paths perform
//! the floating-point additions for each output entry in the same order, so
//! they produce bit-identical results; the parallel path only changes which
//! thread owns which output entries.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many multiply-adds the parallel path is not worth the dispatch.
pub const PAR_MIN_WORK: usize = 1 << 15;

/// Execution policy for the matrix kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Data-parallel when compiled with the `parallel` feature and the problem
    /// is large enough; sequential otherwise.
    #[default]
    Parallel,
}

impl Exec {
    fn use_parallel(self, work: usize) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel && work >= PAR_MIN_WORK
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `out = scale * Σ_i coeffs[i] * col_i` for a column-major `d × n` matrix.
///
/// Zero coefficients are skipped on both paths.
pub fn combine_columns(cols: &[f64], d: usize, coeffs: &[f64], scale: f64, out: &mut [f64], exec: Exec) {
    let n = coeffs.len();
    debug_assert_eq!(cols.len(), n * d);
    debug_assert_eq!(out.len(), d);
    if exec.use_parallel(n * d) {
        #[cfg(feature = "parallel")]
        {
            let threads = rayon::current_num_threads().max(1);
            let chunk = d.div_ceil(threads).max(64);
            out.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(c, block)| accumulate_rows(cols, d, coeffs, c * chunk, block));
        }
    } else {
        accumulate_rows(cols, d, coeffs, 0, out);
    }
    for o in out.iter_mut() {
        *o *= scale;
    }
}

fn accumulate_rows(cols: &[f64], d: usize, coeffs: &[f64], start: usize, block: &mut [f64]) {
    block.fill(0.0);
    let end = start + block.len();
    for (i, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let col = &cols[i * d + start..i * d + end];
        for (b, x) in block.iter_mut().zip(col) {
            *b += c * x;
        }
    }
}

/// `out[i] = <col_i, w>` for every column.
pub fn column_dots(cols: &[f64], d: usize, w: &[f64], out: &mut [f64], exec: Exec) {
    let n = out.len();
    debug_assert_eq!(cols.len(), n * d);
    debug_assert_eq!(w.len(), d);
    if d == 0 {
        out.fill(0.0);
        return;
    }
    if exec.use_parallel(n * d) {
        #[cfg(feature = "parallel")]
        out.par_iter_mut()
            .zip(cols.par_chunks(d))
            .for_each(|(o, col)| *o = dot(col, w));
    } else {
        for (o, col) in out.iter_mut().zip(cols.chunks(d)) {
            *o = dot(col, w);
        }
    }
}

/// Map `f` over `0..len`, in parallel when allowed; the output order is the index order.
pub fn map_indexed<T, F>(len: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if cfg!(feature = "parallel") && exec == Exec::Parallel && len > 1 {
        #[cfg(feature = "parallel")]
        return (0..len).into_par_iter().map(f).collect();
    }
    (0..len).map(f).collect()
}
