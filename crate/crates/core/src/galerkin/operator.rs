use rayon::prelude::*;

use crate::fem::TermMatrices;
use crate::polychaos::SpectralMatrix;

/// Sum over gamma of G_gamma (x) K_gamma acting on node-major blocks.
///
/// Input X has n rows of `cols_in` parametric coefficients (X[i, a] at
/// `i * cols_in + a`); output Y has `cols_out` per row with
/// Y[i, b] = sum_gamma sum_a G_gamma[a, b] (K_gamma X)[i, a].
#[derive(Clone, Debug)]
pub struct KroneckerOperator {
    pub spectral: Vec<SpectralMatrix>,
    pub stiffness: TermMatrices,
}

impl KroneckerOperator {
    pub fn new(spectral: Vec<SpectralMatrix>, stiffness: TermMatrices) -> Self {
        assert_eq!(
            spectral.len(),
            stiffness.nterms,
            "one stiffness matrix per spectral term"
        );
        KroneckerOperator { spectral, stiffness }
    }

    pub fn n(&self) -> usize {
        self.stiffness.pattern.n
    }

    pub fn cols_in(&self) -> usize {
        self.spectral.first().map_or(0, |g| g.rows)
    }

    pub fn cols_out(&self) -> usize {
        self.spectral.first().map_or(0, |g| g.cols)
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (ci, co) = (self.cols_in(), self.cols_out());
        let nt = self.spectral.len();
        let pat = &*self.stiffness.pattern;
        let vals = &self.stiffness.values;
        assert_eq!(x.len(), pat.n * ci);
        assert_eq!(y.len(), pat.n * co);
        y.par_chunks_mut(co.max(1)).enumerate().for_each_init(
            || vec![0.0; nt * ci],
            |acc, (i, yi)| {
                acc.fill(0.0);
                for k in pat.row(i) {
                    let j = pat.cols[k] as usize;
                    let xj = &x[j * ci..(j + 1) * ci];
                    for (t, &v) in vals[k * nt..(k + 1) * nt].iter().enumerate() {
                        if v == 0.0 {
                            continue;
                        }
                        for (a, xv) in acc[t * ci..(t + 1) * ci].iter_mut().zip(xj) {
                            *a += v * xv;
                        }
                    }
                }
                yi.fill(0.0);
                for (t, g) in self.spectral.iter().enumerate() {
                    let a = &acc[t * ci..(t + 1) * ci];
                    for &(r, c, v) in &g.entries {
                        yi[c as usize] += v * a[r as usize];
                    }
                }
            },
        );
    }
}

/// Block-major (entry i + k n) to node-major (entry i p + k).
pub fn to_node_major(block: &[f64], n: usize, p: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * p];
    for k in 0..p {
        for i in 0..n {
            out[i * p + k] = block[i + k * n];
        }
    }
    out
}

/// Node-major to block-major.
pub fn to_block_major(node: &[f64], n: usize, p: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * p];
    for i in 0..n {
        for k in 0..p {
            out[i + k * n] = node[i * p + k];
        }
    }
    out
}
