use super::sparse::CsrMatrix;
use crate::error::{Result, SgfemError};

/// Envelope (skyline) Cholesky factor L of a symmetric positive definite matrix.
///
/// Row i of L is stored densely from column first[i] to the diagonal.
#[derive(Clone, Debug)]
pub struct ProfileCholesky {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl ProfileCholesky {
    /// Factors A using its lower triangle.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let p = &*a.pattern;
        let n = p.n;
        let mut first = vec![0usize; n];
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            let r = p.row(i);
            let f = p.cols[r].iter().map(|&c| c as usize).min().unwrap_or(i).min(i);
            first[i] = f;
            start[i + 1] = start[i] + (i - f + 1);
        }
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            for k in p.row(i) {
                let j = p.cols[k] as usize;
                if j <= i {
                    data[start[i] + j - first[i]] = a.values[k];
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (head, tail) = data.split_at_mut(start[i]);
            let row_i = &mut tail[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let row_j = &head[start[j]..start[j + 1]];
                let mut s = row_i[j - fi];
                let ri = &row_i[lo - fi..j - fi];
                let rj = &row_j[lo - fj..j - fj];
                for (x, y) in ri.iter().zip(rj) {
                    s -= x * y;
                }
                row_i[j - fi] = s / row_j[j - fj];
            }
            let mut d = row_i[i - fi];
            for x in &row_i[..i - fi] {
                d -= x * x;
            }
            if !(d > 0.0) {
                return Err(SgfemError::NotPositiveDefinite { pivot: i, value: d });
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(ProfileCholesky { n, first, start, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries of L.
    pub fn profile_size(&self) -> usize {
        self.data.len()
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.start[i]..self.start[i + 1]]
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.solve_multi(b, 1);
    }

    /// Solves A X = B in place for a row-major block B (n x k).
    pub fn solve_multi(&self, b: &mut [f64], k: usize) {
        let n = self.n;
        let mut acc = vec![0.0; k];
        // L y = b
        for i in 0..n {
            let fi = self.first[i];
            let row = self.row(i);
            acc.copy_from_slice(&b[i * k..(i + 1) * k]);
            for (jj, &l) in row[..i - fi].iter().enumerate() {
                let j = fi + jj;
                for (a, y) in acc.iter_mut().zip(&b[j * k..(j + 1) * k]) {
                    *a -= l * y;
                }
            }
            let d = row[i - fi];
            for (dst, a) in b[i * k..(i + 1) * k].iter_mut().zip(&acc) {
                *dst = a / d;
            }
        }
        // L^T x = y
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            let d = row[i - fi];
            let (head, tail) = b.split_at_mut(i * k);
            let xi = &mut tail[..k];
            for v in xi.iter_mut() {
                *v /= d;
            }
            for (jj, &l) in row[..i - fi].iter().enumerate() {
                let j = fi + jj;
                for (t, x) in head[j * k..(j + 1) * k].iter_mut().zip(xi.iter()) {
                    *t -= l * x;
                }
            }
        }
    }
}
