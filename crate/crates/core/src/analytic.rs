//! Analytic image: the complex extension of a real frame with negative
//! frequencies suppressed, computed 1-D along rows (configurable axis).
//! This is the input to dominant component analysis.

use crate::raster::{ComplexImage, GrayImage};
use crate::{Error, Result};
use num_complex::Complex32;
use rustfft::FftPlanner;

/// Axis along which the 1-D analytic (Hilbert) construction runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HilbertAxis {
    #[default]
    Rows,
    Cols,
}

/// Computes the analytic image of a real frame.
///
/// Each row r is replaced by its 1-D analytic signal: with Z = DFT(row),
/// Z[k] is doubled for 0 < k < N/2, zeroed for k > N/2 and left unchanged at
/// k = 0 and k = N/2 (for odd N, doubled for 0 < k <= (N-1)/2, zeroed above).
/// The real part of the output equals the input row.
pub fn analytic_image(gray: &GrayImage) -> Result<ComplexImage> {
    analytic_image_along(gray, HilbertAxis::Rows)
}

pub fn analytic_image_along(gray: &GrayImage, axis: HilbertAxis) -> Result<ComplexImage> {
    if gray.is_empty() {
        return Err(Error::Parameter("analytic_image: empty image".into()));
    }
    match axis {
        HilbertAxis::Rows => Ok(analytic_rows(gray)),
        HilbertAxis::Cols => {
            let t = GrayImage {
                rows: gray.cols,
                cols: gray.rows,
                data: {
                    let mut d = vec![0.0f32; gray.data.len()];
                    for r in 0..gray.rows {
                        for c in 0..gray.cols {
                            d[c * gray.rows + r] = gray.at(r, c);
                        }
                    }
                    d
                },
            };
            let a = analytic_rows(&t);
            let mut data = vec![Complex32::ZERO; a.data.len()];
            for r in 0..a.rows {
                for c in 0..a.cols {
                    data[c * a.rows + r] = a.at(r, c);
                }
            }
            ComplexImage::new(gray.rows, gray.cols, data)
        }
    }
}

fn analytic_rows(gray: &GrayImage) -> ComplexImage {
    let n = gray.cols;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut scratch =
        vec![Complex32::ZERO; fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];

    // Index of the highest strictly-positive frequency bin.
    let pos_hi = if n % 2 == 0 { n / 2 - 1 } else { (n - 1) / 2 };

    let mut out = Vec::with_capacity(gray.data.len());
    let mut row = vec![Complex32::ZERO; n];
    for r in 0..gray.rows {
        for (dst, &src) in row.iter_mut().zip(&gray.data[r * n..(r + 1) * n]) {
            *dst = Complex32::new(src, 0.0);
        }
        fwd.process_with_scratch(&mut row, &mut scratch);
        for k in 1..=pos_hi {
            row[k] *= 2.0;
        }
        for v in row.iter_mut().skip(if n % 2 == 0 { n / 2 + 1 } else { pos_hi + 1 }) {
            *v = Complex32::ZERO;
        }
        inv.process_with_scratch(&mut row, &mut scratch);
        let scale = 1.0 / n as f32;
        out.extend(row.iter().map(|&v| v * scale));
    }
    ComplexImage {
        rows: gray.rows,
        cols: n,
        data: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn constant_image_passes_through() {
        let img = GrayImage::constant(4, 8, 0.37);
        let z = analytic_image(&img).unwrap();
        for v in &z.data {
            assert!((v.re - 0.37).abs() < 1e-6, "re {}", v.re);
            assert!(v.im.abs() < 1e-6, "im {}", v.im);
        }
    }

    #[test]
    fn bin_aligned_cosine_becomes_complex_exponential() {
        // row = cos(2*pi*8*x/64) -> exp(j*2*pi*8*x/64), closed form.
        let n = 64;
        let data: Vec<f32> = (0..n)
            .map(|x| (2.0 * std::f64::consts::PI * 8.0 * x as f64 / n as f64).cos() as f32)
            .collect();
        let img = GrayImage::new(1, n, data).unwrap();
        let z = analytic_image(&img).unwrap();
        for (x, v) in z.data.iter().enumerate() {
            let ang = 2.0 * std::f64::consts::PI * 8.0 * x as f64 / n as f64;
            let expect = Complex32::new(ang.cos() as f32, ang.sin() as f32);
            assert!((v - expect).norm() < 1e-5, "x={x} got {v} want {expect}");
        }
    }

    #[test]
    fn real_part_preserved_on_random_image() {
        let mut rng = crate::rng::stream(11, "analytic-test");
        let (r, c) = (9, 31); // odd row length exercises the odd-N branch
        let data: Vec<f32> = (0..r * c).map(|_| rng.random::<f32>()).collect();
        let img = GrayImage::new(r, c, data).unwrap();
        let z = analytic_image(&img).unwrap();
        for (a, b) in img.data.iter().zip(&z.data) {
            assert!((a - b.re).abs() < 1e-4);
        }
    }

    #[test]
    fn negative_frequencies_are_suppressed() {
        let mut rng = crate::rng::stream(12, "analytic-test2");
        let n = 48;
        let data: Vec<f32> = (0..n).map(|_| rng.random::<f32>()).collect();
        let img = GrayImage::new(1, n, data).unwrap();
        let z = analytic_image(&img).unwrap();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let mut buf = z.data.clone();
        fwd.process(&mut buf);
        let total: f32 = buf.iter().map(|v| v.norm()).sum();
        for k in n / 2 + 1..n {
            assert!(buf[k].norm() < 1e-6 * total.max(1.0), "bin {k} leaks");
        }
    }

    #[test]
    fn empty_image_is_rejected() {
        let img = GrayImage::zeros(0, 0);
        assert!(analytic_image(&img).is_err());
    }

    #[test]
    fn cols_axis_matches_transposed_rows() {
        let mut rng = crate::rng::stream(13, "analytic-axis");
        let (r, c) = (12, 7);
        let data: Vec<f32> = (0..r * c).map(|_| rng.random::<f32>()).collect();
        let img = GrayImage::new(r, c, data).unwrap();
        let along_cols = analytic_image_along(&img, HilbertAxis::Cols).unwrap();
        // Reference: transpose, run along rows, transpose back.
        let mut td = vec![0.0f32; r * c];
        for i in 0..r {
            for j in 0..c {
                td[j * r + i] = img.at(i, j);
            }
        }
        let t = GrayImage::new(c, r, td).unwrap();
        let zt = analytic_image(&t).unwrap();
        for i in 0..r {
            for j in 0..c {
                assert!((along_cols.at(i, j) - zt.at(j, i)).norm() < 1e-6);
            }
        }
    }
}
