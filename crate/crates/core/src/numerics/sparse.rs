//! Compressed-row complex matrices for matrix-free Lindblad right-hand sides.

use super::matrix::{ComplexMatrix, C64, ZERO};

#[derive(Clone, Debug)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let mut indptr = Vec::with_capacity(m.rows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                let v = m[(r, c)];
                if v != ZERO {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { rows: m.rows(), cols: m.cols(), indptr, indices, values }
    }

    /// Builds from (row, col, value) entries; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut entries: Vec<(usize, usize, C64)>) -> Self {
        entries.sort_by_key(|e| (e.0, e.1));
        let mut indptr = vec![0; rows + 1];
        let mut indices: Vec<usize> = Vec::with_capacity(entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (r, c, v) in entries {
            assert!(r < rows && c < cols, "triplet out of range");
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Self { rows, cols, indptr, indices, values }
    }

    /// Non-zero entries as (row, col, value).
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        (0..self.rows)
            .flat_map(|r| (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, k)))
            .map(|(r, k)| (r, self.indices[k], self.values[k]))
            .collect()
    }

    /// self† · self
    pub fn gram(&self) -> Self {
        let mut entries = Vec::new();
        for r in 0..self.rows {
            let row = self.indptr[r]..self.indptr[r + 1];
            for a in row.clone() {
                for b in row.clone() {
                    entries.push((self.indices[a], self.indices[b], self.values[a].conj() * self.values[b]));
                }
            }
        }
        Self::from_triplets(self.cols, self.cols, entries)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { values: self.values.iter().map(|v| s * v).collect(), ..self.clone() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.indices[k])] += self.values[k];
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_dense(&self.to_dense().adjoint())
    }

    /// out += s · (self · x), with x dense `cols × m`.
    pub fn mul_dense_acc(&self, x: &[C64], m: usize, s: C64, out: &mut [C64]) {
        for r in 0..self.rows {
            let orow = &mut out[r * m..(r + 1) * m];
            for k in self.indptr[r]..self.indptr[r + 1] {
                let v = s * self.values[k];
                let xrow = &x[self.indices[k] * m..(self.indices[k] + 1) * m];
                for (o, xv) in orow.iter_mut().zip(xrow) {
                    *o += v * xv;
                }
            }
        }
    }

    /// out += s · (x · self†), with x dense `n × cols`.
    pub fn dense_mul_adjoint_acc(&self, x: &[C64], n: usize, s: C64, out: &mut [C64]) {
        let oc = self.rows;
        let xc = self.cols;
        for j in 0..self.rows {
            for k in self.indptr[j]..self.indptr[j + 1] {
                let v = s * self.values[k].conj();
                let col = self.indices[k];
                for i in 0..n {
                    out[i * oc + j] += x[i * xc + col] * v;
                }
            }
        }
    }

    /// tr(self · x), with x dense `cols × rows`.
    pub fn trace_mul(&self, x: &[C64]) -> C64 {
        let n = self.rows;
        let mut acc = ZERO;
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k] * n + r];
            }
        }
        acc
    }

    /// out += s · self · x · self†, with x dense `cols × cols`.
    pub fn sandwich_acc(&self, x: &[C64], s: C64, scratch: &mut Vec<C64>, out: &mut [C64]) {
        let n = self.cols;
        scratch.clear();
        scratch.resize(self.rows * n, ZERO);
        self.mul_dense_acc(x, n, C64::new(1.0, 0.0), scratch);
        self.dense_mul_adjoint_acc(scratch, self.rows, s, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::pauli_y;

    #[test]
    fn triplets_round_trip_and_sum_duplicates() {
        let m = SparseMatrix::from_triplets(2, 3, vec![(1, 2, C64::new(1.0, 0.0)), (0, 0, C64::new(2.0, 0.0)), (1, 2, C64::new(0.5, 1.0))]);
        let d = m.to_dense();
        assert_eq!(d[(1, 2)], C64::new(1.5, 1.0));
        assert_eq!(d[(0, 0)], C64::new(2.0, 0.0));
        assert_eq!(m.nnz(), 2);
        assert_eq!(SparseMatrix::from_triplets(2, 3, m.triplets()).to_dense(), d);
    }

    #[test]
    fn sandwich_matches_dense() {
        let a = pauli_y().kron(&ComplexMatrix::from_real(&[&[1.0, 2.0], &[0.0, 3.0]]));
        let x = ComplexMatrix::from_fn(4, 4, |r, c| C64::new(r as f64 - c as f64, (r * c) as f64));
        let sa = SparseMatrix::from_dense(&a);
        let mut out = vec![ZERO; 16];
        let mut scratch = Vec::new();
        sa.sandwich_acc(x.data(), C64::new(2.0, 0.0), &mut scratch, &mut out);
        let expected = a.matmul(&x).matmul(&a.adjoint()).scale_real(2.0);
        let got = ComplexMatrix::new(4, 4, out).unwrap();
        assert!((&got - &expected).max_abs() < 1e-12);
    }

    #[test]
    fn gram_matches_dense() {
        let a = ComplexMatrix::from_fn(3, 2, |r, c| C64::new((r + 2 * c) as f64 % 3.0, r as f64 - c as f64));
        let g = SparseMatrix::from_dense(&a).gram().to_dense();
        assert!((&g - &a.adjoint().matmul(&a)).max_abs() < 1e-12);
    }
}
