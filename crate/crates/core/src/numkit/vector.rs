//! Flat dense vector of scalars.

use std::ops::{Index, IndexMut};

use crate::scalar::Real;

/// Dense vector; the state variable of every optimizer in the crate.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector<R> {
    data: Vec<R>,
}

impl<R: Real> Vector<R> {
    pub fn from_vec(data: Vec<R>) -> Self {
        assert!(!data.is_empty(), "vectors have positive length");
        Vector { data }
    }

    pub fn from_slice(data: &[R]) -> Self {
        Self::from_vec(data.to_vec())
    }

    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "vectors have positive length");
        Vector {
            data: vec![R::zero(); len],
        }
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> R) -> Self {
        assert!(len > 0, "vectors have positive length");
        Vector {
            data: (0..len).map(&mut f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[R] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [R] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<R> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, R> {
        self.data.iter()
    }

    pub fn dot(&self, other: &Self) -> R {
        assert_eq!(self.len(), other.len(), "dot: length mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(R::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn norm2(&self) -> R {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, c: R) -> Self {
        self.map(|x| x * c)
    }

    pub fn map(&self, f: impl Fn(R) -> R) -> Self {
        Vector {
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(R, R) -> R) -> Self {
        assert_eq!(self.len(), other.len(), "zip_map: length mismatch");
        Vector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// In-place `self += c * other`.
    pub fn axpy(&mut self, c: R, other: &Self) {
        assert_eq!(self.len(), other.len(), "axpy: length mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn fill(&mut self, value: R) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Relative L2 distance against a reference, guarded for tiny norms.
    pub fn rel_err(&self, reference: &Self) -> R {
        let denom = reference.norm2().max(R::of(1e-300));
        self.sub(reference).norm2() / denom
    }
}

impl<R: Real> Index<usize> for Vector<R> {
    type Output = R;
    fn index(&self, i: usize) -> &R {
        &self.data[i]
    }
}

impl<R: Real> IndexMut<usize> for Vector<R> {
    fn index_mut(&mut self, i: usize) -> &mut R {
        &mut self.data[i]
    }
}

impl<'a, R: Real> IntoIterator for &'a Vector<R> {
    type Item = &'a R;
    type IntoIter = std::slice::Iter<'a, R>;
    fn into_iter(self) -> Self::IntoIter {
        self.data.iter()
    }
}
