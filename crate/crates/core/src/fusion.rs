//! RGB/depth feature-fusion operators.
//!
//! Five ways to merge a color feature tensor with a depth feature tensor:
//! channel concatenation, element-wise sum, a 1x1-conv MLP stack, a 3x3
//! conv block with a 1x1 skip, and spatial-token cross-attention. All of
//! them preserve `(B, H, W)`.

use crate::error::{Error, Result};
use crate::tensor::{attention, conv2d, layer_norm_lastdim, relu, ConvWeights, FeatureTensor, Matrix};

/// FPN pyramid levels carried through fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PyramidLevel {
    P2,
    P3,
    P4,
    P5,
}

impl PyramidLevel {
    pub const ALL: [PyramidLevel; 4] = [
        PyramidLevel::P2,
        PyramidLevel::P3,
        PyramidLevel::P4,
        PyramidLevel::P5,
    ];
}

/// Per-level fused tensors. Levels halve spatially from P2 to P5 and share
/// batch size and channel count.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedLevelSet {
    pub p2: FeatureTensor,
    pub p3: FeatureTensor,
    pub p4: FeatureTensor,
    pub p5: FeatureTensor,
}

impl FusedLevelSet {
    pub fn level(&self, level: PyramidLevel) -> &FeatureTensor {
        match level {
            PyramidLevel::P2 => &self.p2,
            PyramidLevel::P3 => &self.p3,
            PyramidLevel::P4 => &self.p4,
            PyramidLevel::P5 => &self.p5,
        }
    }

    /// Checks the pyramid invariants: `H` and `W` halve (ceiling division)
    /// at each level while `B` and `N` stay constant.
    pub fn validate(&self) -> Result<()> {
        let levels = [&self.p2, &self.p3, &self.p4, &self.p5];
        for pair in levels.windows(2) {
            let (b0, n0, h0, w0) = pair[0].shape;
            let (b1, n1, h1, w1) = pair[1].shape;
            if b1 != b0 || n1 != n0 || h1 != h0.div_ceil(2) || w1 != w0.div_ceil(2) {
                return Err(Error::ShapeMismatch {
                    a: vec![b0, n0, h0, w0],
                    b: vec![b1, n1, h1, w1],
                });
            }
        }
        Ok(())
    }
}

fn expect_same_spatial(xc: &FeatureTensor, xd: &FeatureTensor) -> Result<()> {
    let (bc, _, hc, wc) = xc.shape;
    let (bd, _, hd, wd) = xd.shape;
    if bc != bd || hc != hd || wc != wd {
        return Err(Error::SpatialMismatch {
            a: vec![xc.shape.0, xc.shape.1, xc.shape.2, xc.shape.3],
            b: vec![xd.shape.0, xd.shape.1, xd.shape.2, xd.shape.3],
        });
    }
    Ok(())
}

/// Channel concatenation; output carries `N_c + N_d` channels with the
/// color channels first.
pub fn fuse_concat(xc: &FeatureTensor, xd: &FeatureTensor) -> Result<FeatureTensor> {
    expect_same_spatial(xc, xd)?;
    let (b, nc, h, w) = xc.shape;
    let nd = xd.shape.1;
    let mut out = FeatureTensor::zeros(b, nc + nd, h, w);
    let plane = h * w;
    for bi in 0..b {
        let dst = &mut out.data[bi * (nc + nd) * plane..(bi + 1) * (nc + nd) * plane];
        dst[..nc * plane].copy_from_slice(&xc.data[bi * nc * plane..(bi + 1) * nc * plane]);
        dst[nc * plane..].copy_from_slice(&xd.data[bi * nd * plane..(bi + 1) * nd * plane]);
    }
    Ok(out)
}

/// Inverse of [`fuse_concat`]: splits channels at `n_c`.
pub fn split_channels(x: &FeatureTensor, n_c: usize) -> Result<(FeatureTensor, FeatureTensor)> {
    let (b, n, h, w) = x.shape;
    if n_c > n {
        return Err(Error::ChannelMismatch {
            expected: n,
            got: n_c,
        });
    }
    let plane = h * w;
    let n_d = n - n_c;
    let mut a = FeatureTensor::zeros(b, n_c, h, w);
    let mut d = FeatureTensor::zeros(b, n_d, h, w);
    for bi in 0..b {
        let src = &x.data[bi * n * plane..(bi + 1) * n * plane];
        a.data[bi * n_c * plane..(bi + 1) * n_c * plane].copy_from_slice(&src[..n_c * plane]);
        d.data[bi * n_d * plane..(bi + 1) * n_d * plane].copy_from_slice(&src[n_c * plane..]);
    }
    Ok((a, d))
}

/// Element-wise sum of identically shaped tensors.
pub fn fuse_sum(xc: &FeatureTensor, xd: &FeatureTensor) -> Result<FeatureTensor> {
    if xc.shape != xd.shape {
        return Err(Error::ShapeMismatch {
            a: vec![xc.shape.0, xc.shape.1, xc.shape.2, xc.shape.3],
            b: vec![xd.shape.0, xd.shape.1, xd.shape.2, xd.shape.3],
        });
    }
    Ok(FeatureTensor {
        shape: xc.shape,
        data: xc.data.iter().zip(&xd.data).map(|(a, b)| a + b).collect(),
    })
}

/// Weights for the per-pixel MLP fusion stack.
#[derive(Debug, Clone)]
pub struct MlpFusionParams {
    /// 1x1, `N -> N`.
    pub w1: ConvWeights,
    /// 1x1, `N -> N_o`.
    pub w2: ConvWeights,
    /// 1x1, `N_o -> N_o`.
    pub w3: ConvWeights,
}

impl MlpFusionParams {
    pub fn seeded(n: usize, n_o: usize, seed: u64) -> Self {
        MlpFusionParams {
            w1: ConvWeights::seeded(n, n, 1, seed),
            w2: ConvWeights::seeded(n_o, n, 1, seed.wrapping_add(1)),
            w3: ConvWeights::seeded(n_o, n_o, 1, seed.wrapping_add(2)),
        }
    }

    /// Identity stack (requires `n == n_o`), useful in tests.
    pub fn identity(n: usize) -> Self {
        MlpFusionParams {
            w1: ConvWeights::identity(n, 1),
            w2: ConvWeights::identity(n, 1),
            w3: ConvWeights::identity(n, 1),
        }
    }
}

/// Per-pixel MLP over the concatenated tensor:
/// `relu(1x1 N->N)`, `relu(1x1 N->N_o)`, then a linear `1x1 N_o->N_o`.
pub fn fuse_mlp(x_cat: &FeatureTensor, params: &MlpFusionParams) -> Result<FeatureTensor> {
    let x1 = relu(&conv2d(x_cat, &params.w1)?);
    let x2 = relu(&conv2d(&x1, &params.w2)?);
    conv2d(&x2, &params.w3)
}

/// Weights for the convolutional fusion block.
#[derive(Debug, Clone)]
pub struct ConvFusionParams {
    /// 3x3, `N -> N`.
    pub w1: ConvWeights,
    /// 3x3, `N -> N_o`.
    pub w2: ConvWeights,
    /// 1x1 skip, `N -> N_o`.
    pub w_skip: ConvWeights,
}

impl ConvFusionParams {
    pub fn seeded(n: usize, n_o: usize, seed: u64) -> Self {
        ConvFusionParams {
            w1: ConvWeights::seeded(n, n, 3, seed),
            w2: ConvWeights::seeded(n_o, n, 3, seed.wrapping_add(1)),
            w_skip: ConvWeights::seeded(n_o, n, 1, seed.wrapping_add(2)),
        }
    }
}

/// Spatial convolution over the concatenated tensor with a 1x1 skip path:
/// `conv3(relu(conv3(x))) + conv1(x)`.
pub fn fuse_conv(x_cat: &FeatureTensor, params: &ConvFusionParams) -> Result<FeatureTensor> {
    let x1 = relu(&conv2d(x_cat, &params.w1)?);
    let x2 = conv2d(&x1, &params.w2)?;
    let x3 = conv2d(x_cat, &params.w_skip)?;
    fuse_sum(&x2, &x3)
}

/// Cross-attention fusion: color tokens query depth tokens.
///
/// Both tensors are reshaped to `H*W` spatial tokens of width `N`; per batch
/// element the attention output is added back to the color tokens and
/// row-normalized. Channel counts must match (the output width would
/// otherwise be ambiguous), and the result keeps `N_o = N_c`.
pub fn fuse_cross_attention(xc: &FeatureTensor, xd: &FeatureTensor) -> Result<FeatureTensor> {
    if xc.shape != xd.shape {
        return Err(Error::ShapeMismatch {
            a: vec![xc.shape.0, xc.shape.1, xc.shape.2, xc.shape.3],
            b: vec![xd.shape.0, xd.shape.1, xd.shape.2, xd.shape.3],
        });
    }
    let (b, n, h, w) = xc.shape;
    let tokens = h * w;
    let mut out = FeatureTensor::zeros(b, n, h, w);

    let to_tokens = |x: &FeatureTensor, bi: usize| {
        let mut m = Matrix::zeros(tokens, n);
        for c in 0..n {
            for t in 0..tokens {
                m.set(t, c, x.data[x.index(bi, c, t / w, t % w)]);
            }
        }
        m
    };

    for bi in 0..b {
        let q = to_tokens(xc, bi);
        let kv = to_tokens(xd, bi);
        let attn = attention(&q, &kv, &kv)?;
        let mut residual = Matrix::zeros(tokens, n);
        for t in 0..tokens {
            for c in 0..n {
                residual.set(t, c, q.get(t, c) + attn.get(t, c));
            }
        }
        // exact variance normalization keeps token rows at unit variance
        let normed = layer_norm_lastdim(&residual, 0.0);
        for t in 0..tokens {
            for c in 0..n {
                out.set(bi, c, t / w, t % w, normed.get(t, c));
            }
        }
    }
    Ok(out)
}
