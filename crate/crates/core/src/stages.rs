use nalgebra::{DMatrix, DVector};

/// Fixed-size buffer of per-stage vectors, stored stage-major so each
/// stage is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Stages {
    dim: usize,
    len: usize,
    data: Vec<f64>,
}

impl Stages {
    pub fn zeros(dim: usize, len: usize) -> Self {
        Self {
            dim,
            len,
            data: vec![0.0; dim * len],
        }
    }

    /// Every stage set to `value`.
    pub fn repeat(value: &[f64], len: usize) -> Self {
        let mut out = Self::zeros(value.len(), len);
        for k in 0..len {
            out.stage_mut(k).copy_from_slice(value);
        }
        out
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        Some(Self {
            dim,
            len: rows.len(),
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn stage(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn stage_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dim..(k + 1) * self.dim]
    }

    /// Two distinct stages, the first mutable. Panics if `dst == src`.
    #[inline]
    pub fn stage_pair_mut(&mut self, dst: usize, src: usize) -> (&mut [f64], &[f64]) {
        assert_ne!(dst, src);
        let d = self.dim;
        if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * d);
            (&mut lo[dst * d..(dst + 1) * d], &hi[..d])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * d);
            (&mut hi[..d], &lo[src * d..(src + 1) * d])
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks(self.dim.max(1)).take(self.len)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    /// Copies `other` into `self` without reallocating.
    pub fn copy_from(&mut self, other: &Stages) {
        assert_eq!((self.dim, self.len), (other.dim, other.len));
        self.data.copy_from_slice(&other.data);
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn max_abs_diff(&self, other: &Stages) -> f64 {
        assert_eq!((self.dim, self.len), (other.dim, other.len));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// Column `k` of the returned matrix is stage `k`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.dim, self.len, &self.data)
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            dim: m.nrows(),
            len: m.ncols(),
            data: m.as_slice().to_vec(),
        }
    }

    pub fn stage_vector(&self, k: usize) -> DVector<f64> {
        DVector::from_column_slice(self.stage(k))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }
}
