use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SgfemError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// One eigenpair of the 1D exponential covariance operator
/// (phi maps to the integral of exp(-|x - x'| / ell) phi(x') over the interval).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KLEigenpair {
    pub lambda: f64,
    pub omega: f64,
    pub kind: Parity,
    /// Spatial direction this pair belongs to (1 or 2).
    pub direction: u8,
    center: f64,
    norm: f64,
}

impl KLEigenpair {
    /// Unit L2-norm eigenfunction and its derivative.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let t = self.omega * (x - self.center);
        match self.kind {
            Parity::Even => (self.norm * t.cos(), -self.norm * self.omega * t.sin()),
            Parity::Odd => (self.norm * t.sin(), self.norm * self.omega * t.cos()),
        }
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo * fhi > 0.0 {
        return None;
    }
    while hi - lo > 1e-14 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// The `count` largest eigenpairs on [center - half, center + half] with
/// correlation length `ell`, in decreasing order of eigenvalue.
pub fn kl_1d(ell: f64, center: f64, half: f64, count: usize, direction: u8) -> Result<Vec<KLEigenpair>> {
    let c = 1.0 / ell;
    let ca = c * half;
    let mut out = Vec::with_capacity(count);
    let eps = 1e-12;
    for j in 0..count {
        let k = (j / 2 + 1) as f64;
        let (kind, theta) = if j % 2 == 0 {
            // c cos(w a) - w sin(w a) = 0
            let g = |t: f64| ca * t.cos() - t * t.sin();
            let th = bisect(g, (k - 1.0) * PI + eps, (k - 0.5) * PI - eps).ok_or(SgfemError::RootBracketing {
                mode: j,
                parity: "even",
            })?;
            (Parity::Even, th)
        } else {
            // w cos(w a) + c sin(w a) = 0
            let g = |t: f64| t * t.cos() + ca * t.sin();
            let th = bisect(g, (k - 0.5) * PI + eps, k * PI - eps)
                .ok_or(SgfemError::RootBracketing { mode: j, parity: "odd" })?;
            (Parity::Odd, th)
        };
        let omega = theta / half;
        let lambda = 2.0 * c / (omega * omega + c * c);
        let s = (2.0 * omega * half).sin() / (2.0 * omega);
        let norm_sq = match kind {
            Parity::Even => half + s,
            Parity::Odd => half - s,
        };
        out.push(KLEigenpair {
            lambda,
            omega,
            kind,
            direction,
            center,
            norm: 1.0 / norm_sq.sqrt(),
        });
    }
    Ok(out)
}

/// A separable 2D mode: sigma^2 lambda_1 lambda_2 with eigenfunction phi_1(x1) phi_2(x2).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KLMode2d {
    pub lambda: f64,
    pub index: (usize, usize),
    pub first: KLEigenpair,
    pub second: KLEigenpair,
}

impl KLMode2d {
    pub fn eval(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        let (f1, d1) = self.first.eval(x[0]);
        let (f2, d2) = self.second.eval(x[1]);
        (f1 * f2, [d1 * f2, f1 * d2])
    }
}

/// Leading `m` modes of sigma^2 exp(-|x1-x1'|/ell1 - |x2-x2'|/ell2) on a rectangle.
///
/// Ties in the eigenvalue are broken by the pair of 1D indices, lexicographically.
pub fn kl_2d(sigma: f64, ell: [f64; 2], lo: [f64; 2], hi: [f64; 2], m: usize) -> Result<Vec<KLMode2d>> {
    let n1 = m + 1;
    let e1 = kl_1d(ell[0], 0.5 * (lo[0] + hi[0]), 0.5 * (hi[0] - lo[0]), n1, 1)?;
    let e2 = kl_1d(ell[1], 0.5 * (lo[1] + hi[1]), 0.5 * (hi[1] - lo[1]), n1, 2)?;
    let mut modes = Vec::with_capacity(n1 * n1);
    for (i, a) in e1.iter().enumerate() {
        for (j, b) in e2.iter().enumerate() {
            modes.push(KLMode2d {
                lambda: sigma * sigma * a.lambda * b.lambda,
                index: (i, j),
                first: *a,
                second: *b,
            });
        }
    }
    modes.sort_by(|x, y| y.lambda.total_cmp(&x.lambda).then(x.index.cmp(&y.index)));
    modes.truncate(m);
    Ok(modes)
}
