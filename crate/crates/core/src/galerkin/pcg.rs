use crate::error::{Result, SgfemError};
use crate::fem::{dot, norm2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PcgStats {
    pub iterations: usize,
    /// ||b - A x|| / ||b|| of the recursively updated residual
    pub residual: f64,
}

/// Preconditioned conjugate gradients from a zero initial guess.
///
/// Stops when the Euclidean residual satisfies ||r|| <= rel_tol ||b||.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    precondition: impl Fn(&mut [f64]),
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, PcgStats)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bn = norm2(b);
    if bn == 0.0 {
        return Ok((
            x,
            PcgStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut z = r.clone();
    precondition(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut res = 1.0;
    for it in 1..=max_iter {
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) || !(rz > 0.0) {
            return Err(SgfemError::NotPositiveDefinite { pivot: it, value: pq });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        res = norm2(&r) / bn;
        if res <= rel_tol {
            return Ok((
                x,
                PcgStats {
                    iterations: it,
                    residual: res,
                },
            ));
        }
        z.copy_from_slice(&r);
        precondition(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SgfemError::NotConverged {
        iterations: max_iter,
        residual: res,
    })
}
