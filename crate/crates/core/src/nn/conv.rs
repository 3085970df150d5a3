use crate::error::{config_err, Result};
use crate::tensor::{gemm, gemm_into, Layout, Real, Tensor};

/// Shape of a (possibly power-stacked) strided convolution.
///
/// `order` is the number of input powers each kernel tap sees; a plain
/// convolution has `order == 1`. Weights are laid out `[c_out × c_in × kernel × order]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Geometry {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub order: usize,
    pub stride: usize,
    pub pad_left: usize,
    pub pad_right: usize,
}

/// Zero-padded stack of input powers: row `q·c_in + i` holds `x_i^{q+1}`.
#[derive(Debug, Clone)]
pub(crate) struct PaddedStack<T: Real> {
    data: Vec<T>,
    rows: usize,
    len: usize,
    pad_left: usize,
    padded_len: usize,
}

impl<T: Real> PaddedStack<T> {
    /// Powers `x^1..x^order` by repeated multiplication.
    pub fn powers(x: &Tensor<T>, order: usize, pad_left: usize, pad_right: usize) -> Self {
        let (c, len) = x.shape();
        let padded_len = len + pad_left + pad_right;
        let rows = c * order;
        let mut data = vec![T::zero(); rows * padded_len];
        for q in 0..order {
            for i in 0..c {
                let dst = (q * c + i) * padded_len + pad_left;
                if q == 0 {
                    data[dst..dst + len].copy_from_slice(x.channel(i));
                } else {
                    let src = ((q - 1) * c + i) * padded_len + pad_left;
                    let base = x.channel(i);
                    for m in 0..len {
                        data[dst + m] = data[src + m] * base[m];
                    }
                }
            }
        }
        PaddedStack {
            data,
            rows,
            len,
            pad_left,
            padded_len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Unpadded row `r`.
    pub fn row(&self, r: usize) -> &[T] {
        let start = r * self.padded_len + self.pad_left;
        &self.data[start..start + self.len]
    }

    /// `[rows × out_len]` view read by kernel tap `tap`.
    fn tap_view(&self, tap: usize, out_len: usize, stride: usize) -> (&[T], Layout) {
        (
            &self.data[tap..],
            Layout {
                rows: self.rows,
                cols: out_len,
                rs: self.padded_len,
                cs: stride,
            },
        )
    }
}

impl Geometry {
    pub fn output_len(&self, len: usize) -> Result<usize> {
        if self.stride == 0 || self.kernel == 0 {
            return Err(config_err!("stride and kernel must be positive"));
        }
        let padded = len + self.pad_left + self.pad_right;
        if padded < self.kernel {
            return Err(config_err!(
                "input length {len} with padding ({}, {}) is shorter than kernel {}",
                self.pad_left,
                self.pad_right,
                self.kernel
            ));
        }
        Ok((padded - self.kernel) / self.stride + 1)
    }

    pub fn weight_len(&self) -> usize {
        self.c_out * self.c_in * self.kernel * self.order
    }

    fn stack_rows(&self) -> usize {
        self.c_in * self.order
    }

    pub fn stack<T: Real>(&self, x: &Tensor<T>) -> PaddedStack<T> {
        PaddedStack::powers(x, self.order, self.pad_left, self.pad_right)
    }

    fn weight_index(&self, k: usize, i: usize, r: usize, q: usize) -> usize {
        ((k * self.c_in + i) * self.kernel + r) * self.order + q
    }

    /// Per-tap `[c_out × c_in·order]` matrices matching the stack's row order.
    fn pack_taps<T: Real>(&self, weights: &[T]) -> Vec<T> {
        let cols = self.stack_rows();
        let mut packed = vec![T::zero(); self.kernel * self.c_out * cols];
        for r in 0..self.kernel {
            for k in 0..self.c_out {
                for q in 0..self.order {
                    for i in 0..self.c_in {
                        packed[(r * self.c_out + k) * cols + q * self.c_in + i] = weights[self.weight_index(k, i, r, q)];
                    }
                }
            }
        }
        packed
    }

    fn check_stack<T: Real>(&self, stack: &PaddedStack<T>) -> Result<()> {
        if stack.rows != self.stack_rows() || stack.padded_len != stack.len + self.pad_left + self.pad_right {
            return Err(config_err!(
                "stacked input has {} rows, layer expects {} (c_in {} × order {})",
                stack.rows,
                self.stack_rows(),
                self.c_in,
                self.order
            ));
        }
        Ok(())
    }

    /// `out[k] = bias[k] + Σ_{i,r,q} w[k,i,r,q] · x_i^q[m·stride + r − pad_left]`
    pub fn forward<T: Real>(&self, stack: &PaddedStack<T>, weights: &[T], bias: &[T]) -> Result<Tensor<T>> {
        self.check_stack(stack)?;
        if weights.len() != self.weight_len() || bias.len() != self.c_out {
            return Err(config_err!(
                "parameter sizes ({}, {}) do not match geometry ({}, {})",
                weights.len(),
                bias.len(),
                self.weight_len(),
                self.c_out
            ));
        }
        let out_len = self.output_len(stack.len)?;
        let cols = self.stack_rows();
        let packed = self.pack_taps(weights);
        let mut out = vec![T::zero(); self.c_out * out_len];
        for (row, &b) in out.chunks_exact_mut(out_len).zip(bias) {
            row.fill(b);
        }
        for r in 0..self.kernel {
            let w = &packed[r * self.c_out * cols..(r + 1) * self.c_out * cols];
            let (view, lv) = stack.tap_view(r, out_len, self.stride);
            gemm(w, Layout::row_major(self.c_out, cols), view, lv, &mut out, true);
        }
        Tensor::from_vec(self.c_out, out_len, out)
    }

    /// Returns `(d_stack, d_weights, d_bias)`; `d_stack` is unpadded, `[c_in·order × len]`.
    pub fn backward<T: Real>(
        &self,
        stack: &PaddedStack<T>,
        weights: &[T],
        d_out: &Tensor<T>,
    ) -> Result<(Tensor<T>, Vec<T>, Vec<T>)> {
        self.check_stack(stack)?;
        let out_len = self.output_len(stack.len)?;
        if d_out.shape() != (self.c_out, out_len) {
            return Err(config_err!(
                "output gradient shape {:?}, expected {:?}",
                d_out.shape(),
                (self.c_out, out_len)
            ));
        }
        let cols = self.stack_rows();
        let packed = self.pack_taps(weights);
        let mut d_packed = vec![T::zero(); self.kernel * self.c_out * cols];
        let mut d_padded = vec![T::zero(); cols * stack.padded_len];
        let l_out = Layout::row_major(self.c_out, out_len);
        for r in 0..self.kernel {
            let span = r * self.c_out * cols..(r + 1) * self.c_out * cols;
            let (view, lv) = stack.tap_view(r, out_len, self.stride);
            gemm(d_out.data(), l_out, view, lv.transposed(), &mut d_packed[span.clone()], false);
            let l_w = Layout::row_major(self.c_out, cols).transposed();
            gemm_into(&packed[span], l_w, d_out.data(), l_out, &mut d_padded[r..], lv, true);
        }
        let mut d_w = vec![T::zero(); self.weight_len()];
        for r in 0..self.kernel {
            for k in 0..self.c_out {
                for q in 0..self.order {
                    for i in 0..self.c_in {
                        d_w[self.weight_index(k, i, r, q)] = d_packed[(r * self.c_out + k) * cols + q * self.c_in + i];
                    }
                }
            }
        }
        let mut d_stack = Vec::with_capacity(cols * stack.len);
        for row in d_padded.chunks_exact(stack.padded_len) {
            d_stack.extend_from_slice(&row[self.pad_left..self.pad_left + stack.len]);
        }
        let d_stack = Tensor::from_vec(cols, stack.len, d_stack)?;
        let d_b = (0..self.c_out).map(|k| d_out.channel(k).iter().copied().sum()).collect();
        Ok((d_stack, d_w, d_b))
    }
}

/// Weights `[c_out × c_in × kernel]`, zero padding on both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<T: Real = f32> {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad_left: usize,
    pub pad_right: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> ConvParams<T> {
    pub fn zeros(c_in: usize, c_out: usize, kernel: usize, stride: usize, pad_left: usize, pad_right: usize) -> Self {
        ConvParams {
            c_in,
            c_out,
            kernel,
            stride,
            pad_left,
            pad_right,
            weights: vec![T::zero(); c_out * c_in * kernel],
            bias: vec![T::zero(); c_out],
        }
    }

    pub fn weight(&self, k: usize, i: usize, r: usize) -> T {
        self.weights[(k * self.c_in + i) * self.kernel + r]
    }

    pub fn output_len(&self, len: usize) -> Result<usize> {
        self.geometry().output_len(len)
    }

    pub(crate) fn geometry(&self) -> Geometry {
        Geometry {
            c_in: self.c_in,
            c_out: self.c_out,
            kernel: self.kernel,
            order: 1,
            stride: self.stride,
            pad_left: self.pad_left,
            pad_right: self.pad_right,
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.channels() != self.c_in {
            return Err(config_err!("conv1d expects {} input channels, got {}", self.c_in, x.channels()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads<T: Real = f32> {
    pub dx: Tensor<T>,
    pub dw: Vec<T>,
    pub db: Vec<T>,
}

pub fn conv1d<T: Real>(x: &Tensor<T>, p: &ConvParams<T>) -> Result<Tensor<T>> {
    p.check_input(x)?;
    let g = p.geometry();
    g.forward(&g.stack(x), &p.weights, &p.bias)
}

pub fn conv1d_grads<T: Real>(x: &Tensor<T>, p: &ConvParams<T>, d_out: &Tensor<T>) -> Result<ConvGrads<T>> {
    p.check_input(x)?;
    let g = p.geometry();
    let (dx, dw, db) = g.backward(&g.stack(x), &p.weights, d_out)?;
    Ok(ConvGrads { dx, dw, db })
}
