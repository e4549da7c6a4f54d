use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature vector stored as `(index, value)` pairs with strictly increasing
/// indices, all below `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a vector from unordered entries; repeated indices are summed
    /// and explicit zeros dropped.
    pub fn from_entries(dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(i, _)| i);
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if i >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: i + 1,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("feature {i}")));
            }
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let mut out = SparseVector { dim, indices, values };
        out.prune_zeros();
        Ok(out)
    }

    pub fn from_dense(values: &[f64]) -> Result<Self> {
        Self::from_entries(values.len(), values.iter().copied().enumerate().collect())
    }

    fn prune_zeros(&mut self) {
        let mut k = 0;
        for j in 0..self.indices.len() {
            if self.values[j] != 0.0 {
                self.indices[k] = self.indices[j];
                self.values[k] = self.values[j];
                k += 1;
            }
        }
        self.indices.truncate(k);
        self.values.truncate(k);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            d[i] = v;
        }
        d
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Adds `scale * self` into `dense`.
    pub fn axpy_into(&self, scale: f64, dense: &mut [f64]) {
        for (i, v) in self.iter() {
            dense[i] += scale * v;
        }
    }

    /// Restriction to `[start, start + len)`, re-based to 0.
    pub fn slice(&self, start: usize, len: usize) -> SparseVector {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, v) in self.iter() {
            if i >= start && i < start + len {
                indices.push(i - start);
                values.push(v);
            }
        }
        SparseVector { dim: len, indices, values }
    }

    /// Concatenation `[self | other]`.
    pub fn concat(&self, other: &SparseVector) -> SparseVector {
        let mut indices = self.indices.clone();
        let mut values = self.values.clone();
        indices.extend(other.indices.iter().map(|i| i + self.dim));
        values.extend_from_slice(&other.values);
        SparseVector {
            dim: self.dim + other.dim,
            indices,
            values,
        }
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.dim,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_sorted_and_merged() {
        let v = SparseVector::from_entries(5, vec![(3, 1.0), (1, 2.0), (3, 0.5), (4, 0.0)]).unwrap();
        assert_eq!(v.indices(), &[1, 3]);
        assert_eq!(v.values(), &[2.0, 1.5]);
        assert_eq!(v.get(4), 0.0);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(SparseVector::from_entries(2, vec![(2, 1.0)]).is_err());
        assert!(SparseVector::from_entries(2, vec![(0, f64::NAN)]).is_err());
    }

    #[test]
    fn slice_and_concat_roundtrip() {
        let a = SparseVector::from_dense(&[1.0, 0.0, 2.0]).unwrap();
        let b = SparseVector::from_dense(&[0.0, 3.0]).unwrap();
        let c = a.concat(&b);
        assert_eq!(c.to_dense(), vec![1.0, 0.0, 2.0, 0.0, 3.0]);
        assert_eq!(c.slice(0, 3), a);
        assert_eq!(c.slice(3, 2), b);
        assert_eq!(a.dot(&a), 5.0);
    }
}
