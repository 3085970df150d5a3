//! Rank-2 `[channels × length]` tensors and the scalar trait shared by every
//! numeric routine in the crate.
//!
//! Training and inference run in `f32`. The same code instantiated with `f64`
//! is what the gradient checks use.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive};

use crate::error::{config_err, Result};

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + Default
    + Debug
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    /// `c = alpha·a·b + beta·c` on strided row/column-major views.
    ///
    /// # Safety
    /// Pointers and strides must describe in-bounds `m×k`, `k×n` and `m×n` matrices.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite conversion")
    }

    fn lit(v: f64) -> Self {
        Self::from_f64_lossy(v)
    }
}

impl Real for f32 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Real for f64 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Layout of a dense matrix inside a slice, as (row stride, column stride).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub rows: usize,
    pub cols: usize,
    pub rs: usize,
    pub cs: usize,
}

impl Layout {
    pub fn row_major(rows: usize, cols: usize) -> Self {
        Layout { rows, cols, rs: cols, cs: 1 }
    }

    pub fn transposed(self) -> Self {
        Layout {
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
        }
    }

    fn max_index(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            0
        } else {
            (self.rows - 1) * self.rs + (self.cols - 1) * self.cs + 1
        }
    }
}

/// `c = a·b` (or `c += a·b` when `accumulate`), bounds-checked; `c` row-major.
pub(crate) fn gemm<T: Real>(a: &[T], la: Layout, b: &[T], lb: Layout, c: &mut [T], accumulate: bool) {
    let lc = Layout::row_major(la.rows, lb.cols);
    gemm_into(a, la, b, lb, c, lc, accumulate)
}

/// As [`gemm`] with an arbitrary strided destination.
pub(crate) fn gemm_into<T: Real>(a: &[T], la: Layout, b: &[T], lb: Layout, c: &mut [T], lc: Layout, accumulate: bool) {
    assert_eq!(la.cols, lb.rows, "gemm inner dimension");
    assert_eq!((lc.rows, lc.cols), (la.rows, lb.cols), "gemm output shape");
    assert!(a.len() >= la.max_index() && b.len() >= lb.max_index() && c.len() >= lc.max_index());
    if lc.rows == 0 || lc.cols == 0 {
        return;
    }
    let beta = if accumulate { T::one() } else { T::zero() };
    // SAFETY: the asserts above keep every strided access inside the slices.
    unsafe {
        T::gemm_raw(
            la.rows,
            la.cols,
            lb.cols,
            T::one(),
            a.as_ptr(),
            la.rs as isize,
            la.cs as isize,
            b.as_ptr(),
            lb.rs as isize,
            lb.cs as isize,
            beta,
            c.as_mut_ptr(),
            lc.rs as isize,
            lc.cs as isize,
        )
    }
}

/// Channel-contiguous `[channels × length]` array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T: Real = f32> {
    channels: usize,
    length: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(channels: usize, length: usize) -> Self {
        Tensor {
            channels,
            length,
            data: vec![T::zero(); channels * length],
        }
    }

    pub fn from_vec(channels: usize, length: usize, data: Vec<T>) -> Result<Self> {
        if channels == 0 || length == 0 {
            return Err(config_err!("tensor shape {channels}x{length} has an empty axis"));
        }
        if data.len() != channels * length {
            return Err(config_err!(
                "tensor data has {} values, shape {channels}x{length} needs {}",
                data.len(),
                channels * length
            ));
        }
        Ok(Tensor { channels, length, data })
    }

    /// Single-channel tensor over a copy of `samples`.
    pub fn from_signal(samples: &[T]) -> Result<Self> {
        Self::from_vec(1, samples.len(), samples.to_vec())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.length)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[T] {
        &self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            channels: self.channels,
            length: self.length,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            channels: self.channels,
            length: self.length,
            data: self
                .data
                .iter()
                .map(|v| U::from_f64_lossy(v.to_f64().unwrap_or(f64::NAN)))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Stacks tensors of equal length along the channel axis.
    pub fn concat_channels(parts: &[&Tensor<T>]) -> Result<Self> {
        let length = parts.first().map(|t| t.length).unwrap_or(0);
        if parts.iter().any(|t| t.length != length) {
            return Err(config_err!("concat_channels: length mismatch"));
        }
        let channels = parts.iter().map(|t| t.channels).sum();
        let mut data = Vec::with_capacity(channels * length);
        for t in parts {
            data.extend_from_slice(&t.data);
        }
        Self::from_vec(channels, length, data)
    }

    /// Splits off the channels `[0, at)` and `[at, channels)`.
    pub fn split_channels(&self, at: usize) -> Result<(Self, Self)> {
        if at == 0 || at >= self.channels {
            return Err(config_err!(
                "split_channels at {at} outside 1..{}",
                self.channels
            ));
        }
        let (lo, hi) = self.data.split_at(at * self.length);
        Ok((
            Tensor {
                channels: at,
                length: self.length,
                data: lo.to_vec(),
            },
            Tensor {
                channels: self.channels - at,
                length: self.length,
                data: hi.to_vec(),
            },
        ))
    }

    pub fn add_assign(&mut self, other: &Tensor<T>) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(config_err!(
                "add: shape {:?} vs {:?}",
                self.shape(),
                other.shape()
            ));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Tensor::<f32>::from_vec(2, 3, vec![0.0; 5]).is_err());
        assert!(Tensor::<f32>::from_vec(0, 3, vec![]).is_err());
    }

    #[test]
    fn concat_then_split_restores_parts() {
        let a = Tensor::from_vec(1, 2, vec![1.0f32, 2.0]).unwrap();
        let b = Tensor::from_vec(2, 2, vec![3.0f32, 4.0, 5.0, 6.0]).unwrap();
        let cat = Tensor::concat_channels(&[&a, &b]).unwrap();
        assert_eq!(cat.shape(), (3, 2));
        assert_eq!(cat.channel(2), &[5.0, 6.0]);
        let (x, y) = cat.split_channels(1).unwrap();
        assert_eq!(x, a);
        assert_eq!(y, b);
    }

    #[test]
    fn gemm_small() {
        // [1 2; 3 4] · [5; 6]
        let a = [1.0f64, 2.0, 3.0, 4.0];
        let b = [5.0f64, 6.0];
        let mut c = [0.0f64; 2];
        gemm(&a, Layout::row_major(2, 2), &b, Layout::row_major(2, 1), &mut c, false);
        assert_eq!(c, [17.0, 39.0]);
        // transposed A
        gemm(&a, Layout::row_major(2, 2).transposed(), &b, Layout::row_major(2, 1), &mut c, true);
        assert_eq!(c, [17.0 + 23.0, 39.0 + 34.0]);
    }
}
