//! Shared FFT plumbing on top of rustfft: 2-D transforms via row passes and
//! transposes, and padded-size selection.

use num_complex::Complex32;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Smallest 5-smooth integer >= n (sizes rustfft handles without Bluestein).
pub fn next_fast_len(n: usize) -> usize {
    fn smooth(mut m: usize) -> bool {
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        m == 1
    }
    let mut m = n.max(1);
    while !smooth(m) {
        m += 1;
    }
    m
}

/// Forward/inverse 2-D FFT pair for a fixed grid. Plans are reusable and
/// thread-safe; each call allocates its own scratch.
pub struct Fft2 {
    pub rows: usize,
    pub cols: usize,
    row_fwd: Arc<dyn Fft<f32>>,
    col_fwd: Arc<dyn Fft<f32>>,
    row_inv: Arc<dyn Fft<f32>>,
    col_inv: Arc<dyn Fft<f32>>,
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            col_fwd: planner.plan_fft_forward(rows),
            row_inv: planner.plan_fft_inverse(cols),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    /// In-place forward transform of a rows x cols row-major buffer.
    pub fn forward(&self, data: &mut [Complex32]) {
        self.pass(data, &self.row_fwd, &self.col_fwd);
    }

    /// In-place inverse transform, scaled by 1/(rows*cols).
    pub fn inverse(&self, data: &mut [Complex32]) {
        self.pass(data, &self.row_inv, &self.col_inv);
        let scale = 1.0 / (self.rows * self.cols) as f32;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn pass(&self, data: &mut [Complex32], row: &Arc<dyn Fft<f32>>, col: &Arc<dyn Fft<f32>>) {
        assert_eq!(data.len(), self.rows * self.cols);
        let mut scratch = vec![Complex32::ZERO; row.get_inplace_scratch_len()];
        for r in data.chunks_exact_mut(self.cols) {
            row.process_with_scratch(r, &mut scratch);
        }
        let mut t = transpose(data, self.rows, self.cols);
        let mut scratch = vec![Complex32::ZERO; col.get_inplace_scratch_len()];
        for c in t.chunks_exact_mut(self.rows) {
            col.process_with_scratch(c, &mut scratch);
        }
        let back = transpose(&t, self.cols, self.rows);
        data.copy_from_slice(&back);
    }
}

pub fn transpose(data: &[Complex32], rows: usize, cols: usize) -> Vec<Complex32> {
    let mut out = vec![Complex32::ZERO; data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_len_is_5_smooth_and_minimal() {
        assert_eq!(next_fast_len(1), 1);
        assert_eq!(next_fast_len(450), 450);
        assert_eq!(next_fast_len(451), 480);
        assert_eq!(next_fast_len(461), 480);
    }

    #[test]
    fn forward_inverse_round_trip() {
        let (r, c) = (6, 10);
        let plan = Fft2::new(r, c);
        let orig: Vec<Complex32> = (0..r * c)
            .map(|i| Complex32::new((i as f32 * 0.37).sin(), (i as f32 * 0.11).cos()))
            .collect();
        let mut buf = orig.clone();
        plan.forward(&mut buf);
        plan.inverse(&mut buf);
        for (a, b) in orig.iter().zip(&buf) {
            assert!((a - b).norm() < 1e-5);
        }
    }

    #[test]
    fn matches_direct_dft_on_impulse() {
        // FFT of a shifted impulse is a pure phase ramp.
        let (r, c) = (4, 5);
        let plan = Fft2::new(r, c);
        let mut buf = vec![Complex32::ZERO; r * c];
        buf[1 * c + 2] = Complex32::new(1.0, 0.0);
        plan.forward(&mut buf);
        for ky in 0..r {
            for kx in 0..c {
                let ang = -2.0 * std::f32::consts::PI
                    * (ky as f32 * 1.0 / r as f32 + kx as f32 * 2.0 / c as f32);
                let expect = Complex32::new(ang.cos(), ang.sin());
                assert!((buf[ky * c + kx] - expect).norm() < 1e-5);
            }
        }
    }
}
