//! Minimal dense-array kernel backing the fusion operators: rank-4 feature
//! tensors, 2D convolution, ReLU, row-wise softmax / layer norm, and
//! single-head scaled dot-product attention. Everything is `f64` and
//! forward-only.

mod ften;

pub use ften::{read_ften, write_ften};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense rank-4 array, row-major `[B, N, H, W]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    /// `(batch, channels, height, width)`.
    pub shape: (usize, usize, usize, usize),
    pub data: Vec<f64>,
}

impl FeatureTensor {
    pub fn zeros(b: usize, n: usize, h: usize, w: usize) -> Self {
        FeatureTensor {
            shape: (b, n, h, w),
            data: vec![0.0; b * n * h * w],
        }
    }

    pub fn from_vec(shape: (usize, usize, usize, usize), data: Vec<f64>) -> Self {
        let (b, n, h, w) = shape;
        assert_eq!(data.len(), b * n * h * w, "data length must match shape");
        FeatureTensor { shape, data }
    }

    /// Seeded uniform fill over `[-1, 1]`, for fixtures and benchmarks.
    pub fn seeded_uniform(shape: (usize, usize, usize, usize), seed: u64) -> Self {
        let (b, n, h, w) = shape;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-1.0, 1.0);
        let data = (0..b * n * h * w).map(|_| dist.sample(&mut rng)).collect();
        FeatureTensor { shape, data }
    }

    #[inline]
    pub fn index(&self, b: usize, c: usize, y: usize, x: usize) -> usize {
        let (_, n, h, w) = self.shape;
        ((b * n + c) * h + y) * w + x
    }

    #[inline]
    pub fn get(&self, b: usize, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.index(b, c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, b: usize, c: usize, y: usize, x: usize, v: f64) {
        let i = self.index(b, c, y, x);
        self.data[i] = v;
    }

    /// Sum of all elements; the benchmark checksum.
    pub fn checksum(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// Convolution weights for a stride-1, same-padded 2D convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvWeights {
    pub n_out: usize,
    pub n_in: usize,
    /// Odd kernel side length.
    pub k: usize,
    /// Row-major `[N_out, N_in, k, k]`.
    pub kernel: Vec<f64>,
    /// `N_out` biases.
    pub bias: Vec<f64>,
}

impl ConvWeights {
    pub fn zeros(n_out: usize, n_in: usize, k: usize) -> Self {
        assert!(k % 2 == 1, "kernel size must be odd");
        ConvWeights {
            n_out,
            n_in,
            k,
            kernel: vec![0.0; n_out * n_in * k * k],
            bias: vec![0.0; n_out],
        }
    }

    /// Channel-identity 1x1 (or centered k x k) kernel with zero bias.
    pub fn identity(n: usize, k: usize) -> Self {
        let mut w = Self::zeros(n, n, k);
        let center = (k / 2) * k + k / 2;
        for c in 0..n {
            w.kernel[(c * n + c) * k * k + center] = 1.0;
        }
        w
    }

    /// Seeded uniform init over `[-a, a]`, `a = sqrt(1 / (N_in * k^2))`.
    pub fn seeded(n_out: usize, n_in: usize, k: usize, seed: u64) -> Self {
        assert!(k % 2 == 1, "kernel size must be odd");
        let a = (1.0 / (n_in * k * k) as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-a, a);
        ConvWeights {
            n_out,
            n_in,
            k,
            kernel: (0..n_out * n_in * k * k)
                .map(|_| dist.sample(&mut rng))
                .collect(),
            bias: (0..n_out).map(|_| dist.sample(&mut rng)).collect(),
        }
    }
}

/// Same-padded stride-1 2D convolution.
///
/// Internally lowers to an im2col buffer and a GEMM so the 512-channel
/// fusion stacks stay fast; results match the quadruple-loop definition to
/// rounding.
pub fn conv2d(x: &FeatureTensor, w: &ConvWeights) -> Result<FeatureTensor> {
    let (b, n_in, h, wd) = x.shape;
    if n_in != w.n_in {
        return Err(Error::ChannelMismatch {
            expected: w.n_in,
            got: n_in,
        });
    }
    let k = w.k;
    let pad = (k - 1) / 2;
    let cols = h * wd;
    let rows = n_in * k * k;
    let mut out = FeatureTensor::zeros(b, w.n_out, h, wd);

    // im2col patch matrix, rebuilt per batch element
    let mut patches = vec![0.0f64; rows * cols];
    for bi in 0..b {
        patches.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..n_in {
            for ky in 0..k {
                for kx in 0..k {
                    let row = (c * k + ky) * k + kx;
                    let dy = ky as isize - pad as isize;
                    let dx = kx as isize - pad as isize;
                    for y in 0..h {
                        let sy = y as isize + dy;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        let src_base = x.index(bi, c, sy as usize, 0);
                        let dst_base = row * cols + y * wd;
                        let x_lo = (-dx).max(0) as usize;
                        let x_hi = (wd as isize).min(wd as isize - dx) as usize;
                        for xi in x_lo..x_hi {
                            patches[dst_base + xi] = x.data[src_base + (xi as isize + dx) as usize];
                        }
                    }
                }
            }
        }
        // out[bi] = kernel (n_out x rows) * patches (rows x cols)
        let dst = &mut out.data[bi * w.n_out * cols..(bi + 1) * w.n_out * cols];
        unsafe {
            matrixmultiply::dgemm(
                w.n_out,
                rows,
                cols,
                1.0,
                w.kernel.as_ptr(),
                rows as isize,
                1,
                patches.as_ptr(),
                cols as isize,
                1,
                0.0,
                dst.as_mut_ptr(),
                cols as isize,
                1,
            );
        }
        for o in 0..w.n_out {
            let bias = w.bias[o];
            if bias != 0.0 {
                for v in &mut dst[o * cols..(o + 1) * cols] {
                    *v += bias;
                }
            }
        }
    }
    Ok(out)
}

/// Element-wise `max(0, x)`.
pub fn relu(x: &FeatureTensor) -> FeatureTensor {
    FeatureTensor {
        shape: x.shape,
        data: x.data.iter().map(|&v| v.max(0.0)).collect(),
    }
}

/// Dense row-major 2D matrix used for token-space math and cost matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must match dims");
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Row-wise softmax with the usual max-shift for stability. Each output row
/// sums to 1 and is invariant under adding a constant to the source row.
pub fn softmax_lastdim(x: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(x.rows, x.cols);
    for r in 0..x.rows {
        let row = x.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for c in 0..x.cols {
            let e = (row[c] - max).exp();
            out.set(r, c, e);
            sum += e;
        }
        for c in 0..x.cols {
            out.set(r, c, out.get(r, c) / sum);
        }
    }
    out
}

/// Row-wise normalization to zero mean and unit variance (population
/// variance, no affine parameters). `eps` is added under the square root;
/// `LAYER_NORM_EPS` is the conventional default.
pub fn layer_norm_lastdim(x: &Matrix, eps: f64) -> Matrix {
    let mut out = Matrix::zeros(x.rows, x.cols);
    for r in 0..x.rows {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / x.cols as f64;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.cols as f64;
        let denom = (var + eps).sqrt();
        for c in 0..x.cols {
            let v = if denom > 0.0 {
                (row[c] - mean) / denom
            } else {
                0.0
            };
            out.set(r, c, v);
        }
    }
    out
}

/// Conventional layer-norm epsilon.
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Single-head scaled dot-product attention:
/// `softmax(q k^T / sqrt(d)) v` with `q: T x d`, `k, v: S x d`.
pub fn attention(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<Matrix> {
    if q.cols != k.cols {
        return Err(Error::DimMismatch(format!(
            "q is {}x{} but k is {}x{}",
            q.rows, q.cols, k.rows, k.cols
        )));
    }
    if k.rows != v.rows {
        return Err(Error::DimMismatch(format!(
            "k has {} rows but v has {}",
            k.rows, v.rows
        )));
    }
    let scale = 1.0 / (q.cols as f64).sqrt();
    let mut scores = Matrix::zeros(q.rows, k.rows);
    for t in 0..q.rows {
        for s in 0..k.rows {
            let mut dot = 0.0;
            for c in 0..q.cols {
                dot += q.get(t, c) * k.get(s, c);
            }
            scores.set(t, s, dot * scale);
        }
    }
    let weights = softmax_lastdim(&scores);
    let mut out = Matrix::zeros(q.rows, v.cols);
    for t in 0..q.rows {
        for c in 0..v.cols {
            let mut acc = 0.0;
            for s in 0..k.rows {
                acc += weights.get(t, s) * v.get(s, c);
            }
            out.set(t, c, acc);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Literal definition of same-padded stride-1 convolution.
    pub(crate) fn conv2d_naive(x: &FeatureTensor, w: &ConvWeights) -> FeatureTensor {
        let (b, n_in, h, wd) = x.shape;
        let k = w.k;
        let pad = (k / 2) as isize;
        let mut out = FeatureTensor::zeros(b, w.n_out, h, wd);
        for bi in 0..b {
            for o in 0..w.n_out {
                for y in 0..h {
                    for xo in 0..wd {
                        let mut acc = w.bias[o];
                        for c in 0..n_in {
                            for ky in 0..k {
                                for kx in 0..k {
                                    let sy = y as isize + ky as isize - pad;
                                    let sx = xo as isize + kx as isize - pad;
                                    if sy < 0 || sx < 0 || sy >= h as isize || sx >= wd as isize {
                                        continue;
                                    }
                                    acc += w.kernel[((o * n_in + c) * k + ky) * k + kx]
                                        * x.get(bi, c, sy as usize, sx as usize);
                                }
                            }
                        }
                        out.set(bi, o, y, xo, acc);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn identity_kernel_is_identity() {
        let x = FeatureTensor::seeded_uniform((2, 3, 4, 5), 7);
        let w = ConvWeights::identity(3, 1);
        let y = conv2d(&x, &w).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn delta_input_spreads_to_ones_block() {
        let mut x = FeatureTensor::zeros(1, 1, 5, 5);
        x.set(0, 0, 2, 2, 1.0);
        let mut w = ConvWeights::zeros(1, 1, 3);
        w.kernel.iter_mut().for_each(|v| *v = 1.0);
        let y = conv2d(&x, &w).unwrap();
        for yy in 0..5 {
            for xx in 0..5 {
                let inside = (1..=3).contains(&yy) && (1..=3).contains(&xx);
                assert_eq!(y.get(0, 0, yy, xx), if inside { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn channel_mismatch_rejected() {
        let x = FeatureTensor::zeros(1, 4, 2, 2);
        let w = ConvWeights::zeros(2, 8, 3);
        assert_eq!(
            conv2d(&x, &w),
            Err(Error::ChannelMismatch {
                expected: 8,
                got: 4
            })
        );
    }

    #[test]
    fn conv_matches_naive_oracle() {
        for (shape, n_out, k, seed) in [
            ((1, 3, 6, 7), 4, 3, 11u64),
            ((2, 5, 4, 4), 3, 1, 12),
            ((1, 2, 9, 3), 2, 5, 13),
        ] {
            let x = FeatureTensor::seeded_uniform(shape, seed);
            let w = ConvWeights::seeded(n_out, shape.1, k, seed + 100);
            let fast = conv2d(&x, &w).unwrap();
            let slow = conv2d_naive(&x, &w);
            assert_eq!(fast.shape, slow.shape);
            for (a, b) in fast.data.iter().zip(&slow.data) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn conv_is_linear_with_zero_bias() {
        let x = FeatureTensor::seeded_uniform((1, 3, 5, 5), 21);
        let y = FeatureTensor::seeded_uniform((1, 3, 5, 5), 22);
        let mut w = ConvWeights::seeded(2, 3, 3, 23);
        w.bias.iter_mut().for_each(|v| *v = 0.0);

        let (alpha, beta) = (0.7, -1.3);
        let mixed = FeatureTensor::from_vec(
            x.shape,
            x.data
                .iter()
                .zip(&y.data)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        );
        let lhs = conv2d(&mixed, &w).unwrap();
        let cx = conv2d(&x, &w).unwrap();
        let cy = conv2d(&y, &w).unwrap();
        for i in 0..lhs.data.len() {
            let rhs = alpha * cx.data[i] + beta * cy.data[i];
            assert!((lhs.data[i] - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn relu_clamps_below_zero() {
        let x = FeatureTensor::from_vec((1, 1, 1, 2), vec![-1.0, 2.0]);
        assert_eq!(relu(&x).data, vec![0.0, 2.0]);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let m = Matrix::from_vec(1, 1, vec![42.0]);
        assert_eq!(softmax_lastdim(&m).data, vec![1.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Matrix::from_vec(4, 6, (0..24).map(|_| rng.gen_range(-5.0..5.0)).collect());
        let s = softmax_lastdim(&m);
        for r in 0..4 {
            let sum: f64 = s.row(r).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(s.row(r).iter().all(|&p| p > 0.0 && p <= 1.0));
        }

        // shift invariance
        let shifted = Matrix::from_vec(4, 6, m.data.iter().map(|v| v + 17.5).collect());
        let s2 = softmax_lastdim(&shifted);
        for (a, b) in s.data.iter().zip(&s2.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn layer_norm_hand_case() {
        let m = Matrix::from_vec(1, 3, vec![1.0, 2.0, 3.0]);
        let n = layer_norm_lastdim(&m, LAYER_NORM_EPS);
        assert!((n.data[0] + 1.2247).abs() < 1e-3);
        assert!(n.data[1].abs() < 1e-9);
        assert!((n.data[2] - 1.2247).abs() < 1e-3);
    }

    #[test]
    fn layer_norm_zero_variance_row() {
        let m = Matrix::from_vec(1, 4, vec![5.0; 4]);
        let n = layer_norm_lastdim(&m, 0.0);
        assert_eq!(n.data, vec![0.0; 4]);
    }

    #[test]
    fn attention_single_key_broadcasts_value() {
        let q = Matrix::from_vec(3, 2, vec![1.0, 0.0, 0.5, 0.5, -2.0, 3.0]);
        let k = Matrix::from_vec(1, 2, vec![0.3, 0.4]);
        let v = Matrix::from_vec(1, 2, vec![7.0, -2.0]);
        let out = attention(&q, &k, &v).unwrap();
        for t in 0..3 {
            assert_eq!(out.row(t), &[7.0, -2.0]);
        }
    }

    #[test]
    fn attention_uniform_when_orthogonal() {
        // q orthogonal to both keys, identical value rows -> mean of values
        let q = Matrix::from_vec(1, 3, vec![0.0, 0.0, 1.0]);
        let k = Matrix::from_vec(2, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let v = Matrix::from_vec(2, 3, vec![2.0, 4.0, 6.0, 2.0, 4.0, 6.0]);
        let out = attention(&q, &k, &v).unwrap();
        for (o, e) in out.row(0).iter().zip([2.0, 4.0, 6.0]) {
            assert!((o - e).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_matches_three_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut rand_mat = |r: usize, c: usize| {
            Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-2.0..2.0)).collect())
        };
        let q = rand_mat(3, 4);
        let k = rand_mat(5, 4);
        let v = rand_mat(5, 4);
        let out = attention(&q, &k, &v).unwrap();

        // direct evaluation: scores, exp-normalize, weighted sum
        let scale = 1.0 / 2.0;
        for t in 0..3 {
            let logits: Vec<f64> = (0..5)
                .map(|s| {
                    (0..4)
                        .map(|c| q.get(t, c) * k.get(s, c))
                        .sum::<f64>()
                        * scale
                })
                .collect();
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            for c in 0..4 {
                let expect: f64 = (0..5).map(|s| exps[s] / z * v.get(s, c)).sum();
                assert!((out.get(t, c) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn attention_output_is_convex_combination() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mk = |r: usize, c: usize, rng: &mut ChaCha8Rng| {
            Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-3.0..3.0)).collect())
        };
        let q = mk(6, 3, &mut rng);
        let k = mk(4, 3, &mut rng);
        let v = mk(4, 3, &mut rng);
        let out = attention(&q, &k, &v).unwrap();
        for c in 0..3 {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for s in 0..4 {
                lo = lo.min(v.get(s, c));
                hi = hi.max(v.get(s, c));
            }
            for t in 0..6 {
                assert!(out.get(t, c) >= lo - 1e-12 && out.get(t, c) <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn dim_mismatch_rejected() {
        let q = Matrix::zeros(2, 3);
        let k = Matrix::zeros(2, 4);
        assert!(matches!(attention(&q, &k, &k), Err(Error::DimMismatch(_))));
    }
}
