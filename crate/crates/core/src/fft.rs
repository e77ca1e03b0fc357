//! Unitary DFT helpers on top of `rustfft`.
//!
//! Conventions: the forward transform is `X[m] = (1/sqrt(a)) sum_l x[l] e^{-j2 pi ml/a}`
//! and the inverse uses `e^{+j2 pi ml/a}` with the same scale, so both are
//! unitary and round-trip exactly (up to rounding).
//!
//! Plans are cached per length in a process-wide planner guarded by a mutex;
//! the returned `Arc<dyn Fft>` is then used without locking.

use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

/// Cached plan for length `len` in the given direction.
pub fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().unwrap_or_else(|e| e.into_inner());
    p.plan_fft(len, direction)
}

fn transform_in_place(buf: &mut [Complex64], direction: FftDirection) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    plan(n, direction).process(buf);
    let scale = 1.0 / (n as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Unitary forward DFT, in place.
pub fn dft_in_place(buf: &mut [Complex64]) {
    transform_in_place(buf, FftDirection::Forward);
}

/// Unitary inverse DFT, in place.
pub fn idft_in_place(buf: &mut [Complex64]) {
    transform_in_place(buf, FftDirection::Inverse);
}

pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let mut v = x.to_vec();
    dft_in_place(&mut v);
    v
}

pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let mut v = x.to_vec();
    idft_in_place(&mut v);
    v
}

/// Apply a unitary transform along every row (axis 1) of `a`.
pub fn along_rows(a: &mut Array2<Complex64>, direction: FftDirection) {
    let cols = a.ncols();
    if cols == 0 {
        return;
    }
    let fft = plan(cols, direction);
    let scale = 1.0 / (cols as f64).sqrt();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut tmp = vec![Complex64::new(0.0, 0.0); cols];
    for mut row in a.axis_iter_mut(Axis(0)) {
        match row.as_slice_mut() {
            Some(s) => {
                fft.process_with_scratch(s, &mut scratch);
                s.iter_mut().for_each(|v| *v *= scale);
            }
            None => {
                tmp.iter_mut().zip(row.iter()).for_each(|(t, v)| *t = *v);
                fft.process_with_scratch(&mut tmp, &mut scratch);
                row.iter_mut().zip(tmp.iter()).for_each(|(v, t)| *v = *t * scale);
            }
        }
    }
}

/// Apply a unitary transform along every column (axis 0) of `a`.
pub fn along_cols(a: &mut Array2<Complex64>, direction: FftDirection) {
    let rows = a.nrows();
    if rows == 0 {
        return;
    }
    let fft = plan(rows, direction);
    let scale = 1.0 / (rows as f64).sqrt();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut tmp = vec![Complex64::new(0.0, 0.0); rows];
    for mut col in a.axis_iter_mut(Axis(1)) {
        tmp.iter_mut().zip(col.iter()).for_each(|(t, v)| *t = *v);
        fft.process_with_scratch(&mut tmp, &mut scratch);
        col.iter_mut().zip(tmp.iter()).for_each(|(v, t)| *v = *t * scale);
    }
}
