use serde::Serialize;

use crate::scalar::Real;

/// Symmetric tensor in chart components (`dim` is 1 or 2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymTensor<T> {
    pub dim: usize,
    pub c: [[T; 2]; 2],
}

impl<T: Real> SymTensor<T> {
    pub fn diag(dim: usize, a: T, b: T) -> Self {
        let z = T::zero();
        SymTensor {
            dim,
            c: [[a, z], [z, if dim == 2 { b } else { z }]],
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.c[0][1] == self.c[1][0]
    }

    pub fn is_positive_definite(&self) -> bool {
        if self.dim == 1 {
            return self.c[0][0] > T::zero();
        }
        let det = self.c[0][0] * self.c[1][1] - self.c[0][1] * self.c[1][0];
        self.c[0][0] > T::zero() && det > T::zero()
    }
}

/// Symmetric tensor that is diagonal in the orthonormal frame adapted to the
/// symmetry (radial direction first). The diagonal entries are its
/// eigenvalues relative to the metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrameTensor<T> {
    pub dim: usize,
    pub diag: [T; 2],
}

impl<T: Real> FrameTensor<T> {
    pub fn new(dim: usize, a: T, b: T) -> Self {
        FrameTensor {
            dim,
            diag: [a, if dim == 2 { b } else { T::zero() }],
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, T::zero(), T::zero())
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.diag[..self.dim]
    }

    pub fn max_eig(&self) -> T {
        self.eigenvalues()
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max)
    }

    pub fn min_eig(&self) -> T {
        self.eigenvalues().iter().copied().fold(T::infinity(), T::min)
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.dim, self.diag[0] * s, self.diag[1] * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.dim, self.diag[0] + o.diag[0], self.diag[1] + o.diag[1])
    }

    /// Evaluates the tensor on the radial vector with frame component `g1`.
    pub fn radial(&self, g1: T) -> T {
        self.diag[0] * g1 * g1
    }

    /// Full tensor norm.
    pub fn norm(&self) -> T {
        self.eigenvalues()
            .iter()
            .fold(T::zero(), |acc, &d| acc + d * d)
            .sqrt()
    }

    /// Pairing `<self, other>` of two frame-diagonal tensors.
    pub fn inner(&self, other: &Self) -> T {
        self.eigenvalues()
            .iter()
            .zip(other.eigenvalues())
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    /// Chart components given the (diagonal) chart metric.
    pub fn to_chart(&self, metric: &SymTensor<T>) -> SymTensor<T> {
        SymTensor::diag(
            self.dim,
            self.diag[0] * metric.c[0][0],
            self.diag[1] * metric.c[1][1],
        )
    }
}
