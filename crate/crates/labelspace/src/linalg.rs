//! Dense row-major matrix and the few vector operations the model needs.
//!
//! Shape mismatches here are programmer error and panic via `assert!`; the
//! public model and training APIs validate dimensions and return `Result`
//! before reaching these hot paths.

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from row slices; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty(), "matrix needs at least one row");
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `self @ x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            out.push(dot(self.row(r), x));
        }
        out
    }

    /// `selfᵀ @ y` without materializing the transpose.
    pub fn matvec_transposed(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "matvec_transposed dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            let row = self.row(r);
            for (o, &v) in out.iter_mut().zip(row) {
                *o += yr * v;
            }
        }
        out
    }

    /// `self += scale · u vᵀ`.
    pub fn add_scaled_outer(&mut self, scale: f64, u: &[f64], v: &[f64]) {
        assert_eq!(u.len(), self.rows, "outer product row mismatch");
        assert_eq!(v.len(), self.cols, "outer product col mismatch");
        for (r, &ur) in u.iter().enumerate() {
            let factor = scale * ur;
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (cell, &vc) in row.iter_mut().zip(v) {
                *cell += factor * vc;
            }
        }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot dimension mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)] // oracle tests index on purpose
mod tests {
    use super::*;

    #[test]
    fn matvec_matches_naive_triple_loop() {
        let m = Matrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = [0.5, -1.0];
        let got = m.matvec(&x);
        // Naive re-computation, one entry at a time.
        let mut expected = vec![0.0; 3];
        for r in 0..3 {
            for c in 0..2 {
                expected[r] += m.get(r, c) * x[c];
            }
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn transposed_matvec_agrees_with_explicit_transpose() {
        let m = Matrix::from_vec(2, 3, vec![1.0, -2.0, 0.5, 3.0, 4.0, -1.0]);
        let y = [2.0, -0.5];
        let got = m.matvec_transposed(&y);
        let mut expected = vec![0.0; 3];
        for c in 0..3 {
            for r in 0..2 {
                expected[c] += m.get(r, c) * y[r];
            }
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn outer_product_accumulates() {
        let mut m = Matrix::zeros(2, 2);
        m.add_scaled_outer(2.0, &[1.0, 3.0], &[4.0, 5.0]);
        assert_eq!(m.as_slice(), &[8.0, 10.0, 24.0, 30.0]);
    }

    #[test]
    fn norm_is_pythagorean() {
        assert_eq!(l2_norm(&[3.0, 4.0]), 5.0);
    }
}
