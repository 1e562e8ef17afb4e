//! Dense NHWC tensor used by every kernel.

use crate::error::{Error, Result};
use num_traits::Float;
use std::fmt;
use std::ops::{AddAssign, MulAssign};

/// Scalar bound for the compute kernels. f32 for training/inference,
/// f64 for gradient verification.
pub trait Scalar:
    Float + AddAssign + MulAssign + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

/// (height, width, channels) of one activation map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Shape {
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl Shape {
    pub fn new(h: usize, w: usize, c: usize) -> Self {
        Shape { h, w, c }
    }

    pub fn elems(&self) -> usize {
        self.h * self.w * self.c
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.h, self.w, self.c)
    }
}

/// Dense N,H,W,C tensor, row-major with C fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S: Scalar = f32> {
    pub n: usize,
    pub shape: Shape,
    pub data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(n: usize, shape: Shape) -> Self {
        Tensor {
            n,
            shape,
            data: vec![S::zero(); n * shape.elems()],
        }
    }

    pub fn from_vec(n: usize, shape: Shape, data: Vec<S>) -> Result<Self> {
        if data.len() != n * shape.elems() {
            return Err(Error::ShapeMismatch(format!(
                "buffer of {} elements cannot hold {}x{}",
                data.len(),
                n,
                shape
            )));
        }
        Ok(Tensor { n, shape, data })
    }

    /// Single-image tensor (N = 1).
    pub fn single(shape: Shape, data: Vec<S>) -> Result<Self> {
        Self::from_vec(1, shape, data)
    }

    #[inline]
    pub fn at(&self, n: usize, y: usize, x: usize, c: usize) -> S {
        debug_assert!(n < self.n && y < self.shape.h && x < self.shape.w && c < self.shape.c);
        self.data[((n * self.shape.h + y) * self.shape.w + x) * self.shape.c + c]
    }

    #[inline]
    pub fn at_mut(&mut self, n: usize, y: usize, x: usize, c: usize) -> &mut S {
        debug_assert!(n < self.n && y < self.shape.h && x < self.shape.w && c < self.shape.c);
        &mut self.data[((n * self.shape.h + y) * self.shape.w + x) * self.shape.c + c]
    }

    /// Offset of the first channel at (n, y, x).
    #[inline]
    pub fn pixel_offset(&self, n: usize, y: usize, x: usize) -> usize {
        ((n * self.shape.h + y) * self.shape.w + x) * self.shape.c
    }

    /// View of batch item `i` as an N = 1 tensor (copies).
    pub fn item(&self, i: usize) -> Tensor<S> {
        let per = self.shape.elems();
        Tensor {
            n: 1,
            shape: self.shape,
            data: self.data[i * per..(i + 1) * per].to_vec(),
        }
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Tensor<S> {
        Tensor {
            n: self.n,
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Cast element-wise between scalar widths.
    pub fn cast<T: Scalar>(&self) -> Tensor<T> {
        Tensor {
            n: self.n,
            shape: self.shape,
            data: self.data.iter().map(|&v| T::from_f64(v.to_f64())).collect(),
        }
    }

    /// Stack single-image tensors of equal shape into one batch.
    pub fn stack(items: &[Tensor<S>]) -> Result<Tensor<S>> {
        let first = items
            .first()
            .ok_or_else(|| Error::EmptyDataset("cannot stack zero tensors".into()))?;
        let mut data = Vec::with_capacity(items.len() * first.shape.elems() * first.n);
        let mut n = 0;
        for t in items {
            if t.shape != first.shape {
                return Err(Error::ShapeMismatch(format!(
                    "stack of {} with {}",
                    first.shape, t.shape
                )));
            }
            n += t.n;
            data.extend_from_slice(&t.data);
        }
        Ok(Tensor {
            n,
            shape: first.shape,
            data,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_channel_fastest() {
        let mut t = Tensor::<f32>::zeros(1, Shape::new(2, 2, 3));
        *t.at_mut(0, 0, 0, 1) = 1.0;
        *t.at_mut(0, 1, 0, 0) = 2.0;
        assert_eq!(t.data[1], 1.0);
        assert_eq!(t.data[2 * 3], 2.0);
    }

    #[test]
    fn from_vec_rejects_wrong_len() {
        assert!(Tensor::<f32>::from_vec(1, Shape::new(2, 2, 1), vec![0.0; 3]).is_err());
    }

    #[test]
    fn stack_and_item_round_trip() {
        let a = Tensor::single(Shape::new(1, 2, 1), vec![1.0f32, 2.0]).unwrap();
        let b = Tensor::single(Shape::new(1, 2, 1), vec![3.0, 4.0]).unwrap();
        let s = Tensor::stack(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(s.n, 2);
        assert_eq!(s.item(0).data, a.data);
        assert_eq!(s.item(1).data, b.data);
    }
}
