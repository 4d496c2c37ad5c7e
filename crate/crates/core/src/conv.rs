//! Expansion of a 2-D convolution into an equivalent dense layer.
//!
//! Flattening contract, used for both the input and the output vector:
//! index = channel * height * width + row * width + column. The kernel is
//! indexed `[out_channel, in_channel, kernel_row, kernel_col]`.

use ndarray::{Array1, Array2, Array4};

use crate::error::{Error, Result};
use crate::model::{Activation, DenseLayer};

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2dSpec {
    pub in_height: usize,
    pub in_width: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: Array4<f64>,
    pub stride: (usize, usize),
    pub padding: (usize, usize),
}

impl Conv2dSpec {
    pub fn kernel_size(&self) -> (usize, usize) {
        let s = self.kernel.shape();
        (s[2], s[3])
    }

    /// Output height and width.
    pub fn output_size(&self) -> Result<(usize, usize)> {
        if self.in_height == 0 || self.in_width == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::InvalidSpec("dimensions must be positive".into()));
        }
        if self.stride.0 == 0 || self.stride.1 == 0 {
            return Err(Error::InvalidSpec("stride must be positive".into()));
        }
        let shape = self.kernel.shape();
        if shape[0] != self.out_channels || shape[1] != self.in_channels {
            return Err(Error::InvalidSpec(format!(
                "kernel shape {shape:?} does not match {} out / {} in channels",
                self.out_channels, self.in_channels
            )));
        }
        let (kh, kw) = self.kernel_size();
        let span_h = self.in_height + 2 * self.padding.0;
        let span_w = self.in_width + 2 * self.padding.1;
        if kh == 0 || kw == 0 || kh > span_h || kw > span_w {
            return Err(Error::InvalidSpec(format!(
                "kernel {kh}x{kw} does not fit padded input {span_h}x{span_w}"
            )));
        }
        Ok(((span_h - kh) / self.stride.0 + 1, (span_w - kw) / self.stride.1 + 1))
    }
}

/// Dense matrix whose product with the flattened input equals the
/// convolution. Bias is zero and the activation is ReLU.
pub fn conv2d_to_dense(spec: &Conv2dSpec) -> Result<DenseLayer> {
    let (oh, ow) = spec.output_size()?;
    let (kh, kw) = spec.kernel_size();
    let (h, w) = (spec.in_height, spec.in_width);
    let mut weights = Array2::zeros((spec.out_channels * oh * ow, spec.in_channels * h * w));

    for oc in 0..spec.out_channels {
        for orow in 0..oh {
            for ocol in 0..ow {
                let out = oc * oh * ow + orow * ow + ocol;
                for ic in 0..spec.in_channels {
                    for kr in 0..kh {
                        // Padded rows and columns contribute nothing.
                        let Some(r) = (orow * spec.stride.0 + kr).checked_sub(spec.padding.0) else { continue };
                        if r >= h {
                            continue;
                        }
                        for kc in 0..kw {
                            let Some(c) = (ocol * spec.stride.1 + kc).checked_sub(spec.padding.1) else { continue };
                            if c >= w {
                                continue;
                            }
                            weights[[out, ic * h * w + r * w + c]] += spec.kernel[[oc, ic, kr, kc]];
                        }
                    }
                }
            }
        }
    }

    let rows = weights.nrows();
    Ok(DenseLayer::new(weights, Array1::zeros(rows), Activation::Relu))
}
