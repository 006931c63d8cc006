//! Multi-scale feature fusion block.
//!
//! ```text
//! E  = Expand(x)                         1×1 conv, C → N·C
//! G_1..G_N = split(E)                    N groups of C channels
//! G'_1 = K_1(G_1),  G'_i = K_i(G_i + G'_{i-1})
//! y  = x + Proj(concat(G'_1..G'_N) + E)  1×1 conv, N·C → C
//! ```
//!
//! `K_i` is a depth-wise convolution with kernel size `kernels[i]`, zero
//! "same" padding, and a bias.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::Tensor4;

#[derive(Debug, Clone, PartialEq)]
pub struct DepthwiseConv {
    pub kernel: usize,
    /// `channels × kernel × kernel`, row-major per channel.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MffConfig {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernels: Vec<usize>,
    /// `(N·C_in) × C_in`, row = output channel.
    pub expand_weight: Vec<f64>,
    pub expand_bias: Vec<f64>,
    pub branches: Vec<DepthwiseConv>,
    /// `C_out × (N·C_in)`.
    pub project_weight: Vec<f64>,
    pub project_bias: Vec<f64>,
}

impl MffConfig {
    /// All weights and biases zero; the block reduces to the identity.
    pub fn zeros(channels: usize, kernels: &[usize]) -> Self {
        Self::from_fn(channels, kernels, || 0.0)
    }

    /// Weights drawn uniformly from `[-scale, scale]`.
    pub fn random(channels: usize, kernels: &[usize], scale: f64, rng: &mut impl Rng) -> Self {
        Self::from_fn(channels, kernels, || rng.random_range(-scale..=scale))
    }

    fn from_fn(channels: usize, kernels: &[usize], mut f: impl FnMut() -> f64) -> Self {
        let n = kernels.len();
        let expanded = n * channels;
        let mut fill = |len: usize| (0..len).map(|_| f()).collect::<Vec<f64>>();
        let expand_weight = fill(expanded * channels);
        let expand_bias = fill(expanded);
        let branches = kernels
            .iter()
            .map(|&k| DepthwiseConv {
                kernel: k,
                weights: fill(channels * k * k),
                bias: fill(channels),
            })
            .collect();
        let project_weight = fill(channels * expanded);
        let project_bias = fill(channels);
        MffConfig {
            in_channels: channels,
            out_channels: channels,
            kernels: kernels.to_vec(),
            expand_weight,
            expand_bias,
            branches,
            project_weight,
            project_bias,
        }
    }

    pub fn expansion(&self) -> usize {
        self.kernels.len()
    }

    pub fn expanded_channels(&self) -> usize {
        self.kernels.len() * self.in_channels
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidNetwork(msg));
        let (c, n) = (self.in_channels, self.kernels.len());
        if c == 0 || self.out_channels == 0 {
            return bad("channel counts must be positive".into());
        }
        if n == 0 {
            return bad("kernel sequence is empty".into());
        }
        if let Some(k) = self.kernels.iter().find(|&&k| k == 0 || k % 2 == 0) {
            return bad(format!("kernel size {k} must be odd and positive"));
        }
        let nc = n * c;
        if self.expand_weight.len() != nc * c || self.expand_bias.len() != nc {
            return bad(format!("expansion tensors must be {nc}x{c} and {nc}"));
        }
        if self.branches.len() != n {
            return bad(format!(
                "{} branches for a {}-entry kernel sequence",
                self.branches.len(),
                n
            ));
        }
        for (i, (br, &k)) in self.branches.iter().zip(&self.kernels).enumerate() {
            if br.kernel != k {
                return bad(format!(
                    "branch {i} has kernel {} but the sequence says {k}",
                    br.kernel
                ));
            }
            if br.weights.len() != c * k * k || br.bias.len() != c {
                return bad(format!("branch {i} tensors must be {c}x{k}x{k} and {c}"));
            }
        }
        if self.project_weight.len() != self.out_channels * nc
            || self.project_bias.len() != self.out_channels
        {
            return bad(format!(
                "projection tensors must be {}x{nc} and {}",
                self.out_channels, self.out_channels
            ));
        }
        Ok(())
    }
}

/// Exact number of scalar parameters (weights and biases).
pub fn param_count(cfg: &MffConfig) -> usize {
    let c = cfg.in_channels;
    let nc = cfg.expanded_channels();
    let expansion = c * nc + nc;
    let depthwise: usize = cfg.kernels.iter().map(|k| k * k * c + c).sum();
    let projection = nc * cfg.out_channels + cfg.out_channels;
    expansion + depthwise + projection
}

fn pointwise(x: &Tensor4, weight: &[f64], bias: &[f64], out_channels: usize) -> Tensor4 {
    let [n, c, h, w] = x.dims();
    let mut out = Tensor4::zeros(n, out_channels, h, w);
    for b in 0..n {
        for o in 0..out_channels {
            let plane = out.plane_mut(b, o);
            plane.fill(bias[o]);
            for i in 0..c {
                let wt = weight[o * c + i];
                if wt == 0.0 {
                    continue;
                }
                for (dst, src) in plane.iter_mut().zip(x.plane(b, i)) {
                    *dst += wt * src;
                }
            }
        }
    }
    out
}

fn depthwise_same(
    plane: &[f64],
    h: usize,
    w: usize,
    kernel: &[f64],
    k: usize,
    bias: f64,
) -> Vec<f64> {
    let pad = (k / 2) as isize;
    let mut out = vec![bias; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for a in 0..k {
                let sy = y as isize + a as isize - pad;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for b in 0..k {
                    let sx = x as isize + b as isize - pad;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    acc += kernel[a * k + b] * plane[sy as usize * w + sx as usize];
                }
            }
            out[y * w + x] += acc;
        }
    }
    out
}

pub fn mff_forward(x: &Tensor4, cfg: &MffConfig) -> Result<Tensor4> {
    cfg.validate()?;
    if x.channels() != cfg.in_channels {
        return Err(Error::DimensionMismatch(format!(
            "input has {} channels, block expects {}",
            x.channels(),
            cfg.in_channels
        )));
    }
    if cfg.in_channels != cfg.out_channels {
        return Err(Error::InvalidNetwork(format!(
            "residual block needs equal in/out channels, got {} and {}",
            cfg.in_channels, cfg.out_channels
        )));
    }
    let [n, c, h, w] = x.dims();
    let nc = cfg.expanded_channels();
    let expanded = pointwise(x, &cfg.expand_weight, &cfg.expand_bias, nc);

    // Branch outputs plus the expanded-feature residual, in concat order.
    let mut fused = Tensor4::zeros(n, nc, h, w);
    for b in 0..n {
        for ch in 0..c {
            let mut carry: Option<Vec<f64>> = None;
            for (g, branch) in cfg.branches.iter().enumerate() {
                let slot = g * c + ch;
                let mut input = expanded.plane(b, slot).to_vec();
                if let Some(prev) = &carry {
                    for (v, p) in input.iter_mut().zip(prev) {
                        *v += p;
                    }
                }
                let k = branch.kernel;
                let kernel = &branch.weights[ch * k * k..(ch + 1) * k * k];
                let out = depthwise_same(&input, h, w, kernel, k, branch.bias[ch]);
                for ((dst, o), e) in fused
                    .plane_mut(b, slot)
                    .iter_mut()
                    .zip(&out)
                    .zip(expanded.plane(b, slot))
                {
                    *dst = o + e;
                }
                carry = Some(out);
            }
        }
    }
    let projected = pointwise(
        &fused,
        &cfg.project_weight,
        &cfg.project_bias,
        cfg.out_channels,
    );
    let data = x
        .data()
        .iter()
        .zip(projected.data())
        .map(|(a, b)| a + b)
        .collect();
    Tensor4::from_vec(x.dims(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn input(dims: [usize; 4]) -> Tensor4 {
        Tensor4::from_fn(dims, |b, c, y, x| {
            ((b * 7 + c * 5 + y * 3 + x) % 11) as f64 / 11.0 - 0.3
        })
    }

    #[test]
    fn zero_block_is_identity() {
        let x = input([2, 4, 6, 5]);
        let y = mff_forward(&x, &MffConfig::zeros(4, &[3, 5, 7])).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn projection_bias_adds_per_channel() {
        let x = input([1, 3, 4, 4]);
        let mut cfg = MffConfig::zeros(3, &[3, 5, 7]);
        cfg.project_bias = vec![0.5, -1.0, 2.0];
        let y = mff_forward(&x, &cfg).unwrap();
        for c in 0..3 {
            for (a, b) in y.plane(0, c).iter().zip(x.plane(0, c)) {
                assert_eq!(*a, b + cfg.project_bias[c]);
            }
        }
    }

    #[test]
    fn shape_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = MffConfig::random(5, &[3, 5, 7, 9], 0.2, &mut rng);
        let x = input([1, 5, 7, 3]);
        assert_eq!(mff_forward(&x, &cfg).unwrap().dims(), x.dims());
    }

    #[test]
    fn param_count_examples() {
        assert_eq!(param_count(&MffConfig::zeros(16, &[3, 5, 7])), 2976);
        assert_eq!(param_count(&MffConfig::zeros(1, &[3])), 14);
    }

    #[test]
    fn depthwise_term_is_linear_in_channels() {
        let dw = |c: usize| -> usize { [3usize, 5, 7].iter().map(|k| k * k * c + c).sum() };
        assert_eq!(dw(32), 2 * dw(16));
    }

    #[test]
    fn mismatches_are_rejected() {
        let x = input([1, 4, 4, 4]);
        assert!(matches!(
            mff_forward(&x, &MffConfig::zeros(3, &[3])),
            Err(Error::DimensionMismatch(_))
        ));
        let mut cfg = MffConfig::zeros(4, &[3, 5]);
        cfg.kernels = vec![3, 7];
        assert!(matches!(
            mff_forward(&x, &cfg),
            Err(Error::InvalidNetwork(_))
        ));
        let mut cfg = MffConfig::zeros(4, &[3, 5]);
        cfg.out_channels = 2;
        assert!(mff_forward(&x, &cfg).is_err());
        assert!(MffConfig::zeros(4, &[4]).validate().is_err());
    }
}
