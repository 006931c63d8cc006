//! Multi-scale blur downsampling.
//!
//! A stride-1 max pool runs over every channel, the channels are split into
//! contiguous groups, and group `i` is low-pass filtered and subsampled by a
//! binomial kernel of increasing size (3, 5, 7).

use crate::error::{Error, Result};
use crate::nn::Tensor4;

/// Unnormalized 1-D taps for each supported kernel size.
pub fn raw_taps(size: usize) -> Option<&'static [f64]> {
    match size {
        3 => Some(&[1.0, 2.0, 1.0]),
        5 => Some(&[1.0, 4.0, 6.0, 4.0, 1.0]),
        7 => Some(&[1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0]),
        _ => None,
    }
}

/// Group kernel sizes in channel order.
pub const GROUP_KERNELS: [usize; 3] = [3, 5, 7];

#[derive(Debug, Clone, PartialEq)]
pub struct BlurKernel {
    size: usize,
    taps: Vec<f64>,
    weights: Vec<f64>,
}

impl BlurKernel {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Normalized 1-D taps.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Row-major `size × size` weights (outer product of the taps).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.size + col]
    }
}

pub fn make_blur_kernel(size: usize) -> Result<BlurKernel> {
    let raw = raw_taps(size).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "unsupported blur kernel size {size}; expected 3, 5 or 7"
        ))
    })?;
    let sum: f64 = raw.iter().sum();
    let taps: Vec<f64> = raw.iter().map(|v| v / sum).collect();
    let weights = taps
        .iter()
        .flat_map(|a| taps.iter().map(move |b| a * b))
        .collect();
    Ok(BlurKernel {
        size,
        taps,
        weights,
    })
}

/// Mirror index into `0..len` without repeating the edge sample.
#[inline]
pub(crate) fn reflect(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// 2×2 max over `(y, x)`, `(y, x+1)`, `(y+1, x)`, `(y+1, x+1)` with the
/// right/bottom edges replicated. Output has the input's size.
pub fn max_pool_stride1(x: &Tensor4) -> Tensor4 {
    let [n, c, h, w] = x.dims();
    Tensor4::from_fn([n, c, h, w], |b, ch, i, j| {
        let (i1, j1) = ((i + 1).min(h - 1), (j + 1).min(w - 1));
        x.get(b, ch, i, j)
            .max(x.get(b, ch, i, j1))
            .max(x.get(b, ch, i1, j))
            .max(x.get(b, ch, i1, j1))
    })
}

/// Plain 2×2 max pool with stride 2 (ceil mode, edges replicated).
pub fn max_pool_stride2(x: &Tensor4) -> Tensor4 {
    let [n, c, h, w] = x.dims();
    let pooled = max_pool_stride1(x);
    Tensor4::from_fn([n, c, h.div_ceil(2), w.div_ceil(2)], |b, ch, i, j| {
        pooled.get(b, ch, 2 * i, 2 * j)
    })
}

/// Depth-wise blur of the given channels with stride 2 and reflect padding.
pub fn blur_pool_channels(
    x: &Tensor4,
    channels: std::ops::Range<usize>,
    kernel: &BlurKernel,
) -> Tensor4 {
    let [n, _, h, w] = x.dims();
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let pad = (kernel.size() / 2) as isize;
    let k = kernel.size();
    let base = channels.start;
    Tensor4::from_fn([n, channels.len(), oh, ow], |b, ch, oi, oj| {
        let plane = x.plane(b, base + ch);
        let mut acc = 0.0;
        for a in 0..k {
            let row = reflect(2 * oi as isize + a as isize - pad, h);
            for bb in 0..k {
                let col = reflect(2 * oj as isize + bb as isize - pad, w);
                acc += kernel.weight(a, bb) * plane[row * w + col];
            }
        }
        acc
    })
}

/// Channel ranges for `n_groups` contiguous groups, remainder to the earliest.
pub fn split_channels(channels: usize, n_groups: usize) -> Vec<std::ops::Range<usize>> {
    let base = channels / n_groups;
    let rem = channels % n_groups;
    let mut start = 0;
    (0..n_groups)
        .map(|g| {
            let len = base + usize::from(g < rem);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

pub fn mbp_forward(x: &Tensor4, n_groups: usize) -> Result<Tensor4> {
    if n_groups == 0 || n_groups > GROUP_KERNELS.len() {
        return Err(Error::InvalidArgument(format!(
            "group count must be 1..={}, got {n_groups}",
            GROUP_KERNELS.len()
        )));
    }
    if x.channels() < n_groups {
        return Err(Error::InvalidArgument(format!(
            "{} channels cannot be split into {n_groups} groups",
            x.channels()
        )));
    }
    if x.height() == 0 || x.width() == 0 {
        return Err(Error::InvalidArgument("empty spatial extent".into()));
    }
    let pooled = max_pool_stride1(x);
    let [n, c, h, w] = x.dims();
    let mut out = Tensor4::zeros(n, c, h.div_ceil(2), w.div_ceil(2));
    for (g, range) in split_channels(c, n_groups).into_iter().enumerate() {
        let kernel = make_blur_kernel(GROUP_KERNELS[g])?;
        let blurred = blur_pool_channels(&pooled, range.clone(), &kernel);
        for b in 0..n {
            for (local, ch) in range.clone().enumerate() {
                out.plane_mut(b, ch)
                    .copy_from_slice(blurred.plane(b, local));
            }
        }
    }
    Ok(out)
}
