//! Row-major 2D FFT on top of `rustfft`.
//!
//! Each row (and, after a transpose, each column) is transformed by the same
//! plan with its own scratch buffer, so the output does not depend on how rayon
//! splits the work.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

fn transform_rows(data: &mut [Complex64], width: usize, direction: FftDirection) {
    let fft = FftPlanner::<f64>::new().plan_fft(width, direction);
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(width).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

fn transpose(data: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    out.par_chunks_mut(height).enumerate().for_each(|(col, dst)| {
        for (row, v) in dst.iter_mut().enumerate() {
            *v = data[row * width + col];
        }
    });
    out
}

/// Unnormalised 2D DFT of a `width x height` row-major array, in place.
pub(crate) fn fft2(data: &mut Vec<Complex64>, width: usize, height: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), width * height);
    transform_rows(data, width, direction);
    let mut t = transpose(data, width, height);
    transform_rows(&mut t, height, direction);
    *data = transpose(&t, height, width);
}
