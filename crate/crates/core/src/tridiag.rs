use alloc::vec::Vec;

/// Tridiagonal matrix stored by bands. `lower[0]` and `upper[n-1]` are
/// unused and kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: alloc::vec![0.0; n],
            diag: alloc::vec![0.0; n],
            upper: alloc::vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            out[i] = s;
        }
    }

    /// `I·shift + scale·self`.
    pub fn shifted(&self, shift: f64, scale: f64) -> Self {
        Self {
            lower: self.lower.iter().map(|v| scale * v).collect(),
            diag: self.diag.iter().map(|v| shift + scale * v).collect(),
            upper: self.upper.iter().map(|v| scale * v).collect(),
        }
    }

    /// Multiplies column `j` by `d[j]`.
    /// Entrywise absolute value.
    pub fn magnitude(&self) -> Self {
        let abs = |v: &[f64]| v.iter().map(|x| x.abs()).collect();
        Self { lower: abs(&self.lower), diag: abs(&self.diag), upper: abs(&self.upper) }
    }

    pub fn scale_columns(&mut self, d: &[f64]) {
        let n = self.len();
        for i in 0..n {
            self.diag[i] *= d[i];
            if i > 0 {
                self.lower[i] *= d[i - 1];
            }
            if i + 1 < n {
                self.upper[i] *= d[i + 1];
            }
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.lower[i] + self.diag[i] + self.upper[i]
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        let n = self.len();
        let mut s = self.diag[j];
        if j > 0 {
            s += self.upper[j - 1];
        }
        if j + 1 < n {
            s += self.lower[j + 1];
        }
        s
    }

    /// Thomas elimination without pivoting; stable for row or column
    /// diagonally dominant matrices. Returns `None` on a zero pivot.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        let mut c = alloc::vec![0.0; n];
        let mut d = alloc::vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot == 0.0 || !pivot.is_finite() {
            return None;
        }
        c[0] = self.upper[0] / pivot;
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i] * c[i - 1];
            if pivot == 0.0 || !pivot.is_finite() {
                return None;
            }
            c[i] = if i + 1 < n { self.upper[i] / pivot } else { 0.0 };
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Some(d)
    }
}
