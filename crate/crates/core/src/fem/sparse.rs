use std::sync::Arc;

/// Compressed sparse row structure (square, sorted column indices).
#[derive(Clone, Debug, PartialEq)]
pub struct CsrPattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
}

impl CsrPattern {
    /// Builds a pattern from per-row column lists (need not be sorted or unique).
    pub fn from_rows(mut rows: Vec<Vec<u32>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            cols.extend_from_slice(r);
            row_ptr.push(cols.len());
        }
        CsrPattern { n, row_ptr, cols }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row(i);
        self.cols[r.clone()]
            .binary_search(&(j as u32))
            .ok()
            .map(|k| r.start + k)
    }
}

/// Sparse matrix sharing a pattern.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub pattern: Arc<CsrPattern>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<CsrPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        CsrMatrix { pattern, values }
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let p = &*self.pattern;
        for (i, yi) in y.iter_mut().enumerate().take(p.n) {
            let mut s = 0.0;
            for k in p.row(i) {
                s += self.values[k] * x[p.cols[k] as usize];
            }
            *yi = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.matvec(x, &mut y);
        y
    }

    /// Multiplies a row-major block X (n x k) from the left: Y = A X.
    pub fn matmul_block(&self, x: &[f64], k: usize, y: &mut [f64]) {
        let p = &*self.pattern;
        for i in 0..p.n {
            let yi = &mut y[i * k..(i + 1) * k];
            yi.fill(0.0);
            for q in p.row(i) {
                let a = self.values[q];
                let j = p.cols[q] as usize;
                for (t, xv) in yi.iter_mut().zip(&x[j * k..(j + 1) * k]) {
                    *t += a * xv;
                }
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        CsrMatrix {
            pattern: self.pattern.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut d = vec![vec![0.0; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            for k in self.pattern.row(i) {
                row[self.pattern.cols[k] as usize] = self.values[k];
            }
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
