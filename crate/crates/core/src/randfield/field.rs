use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::kl::{kl_2d, KLMode2d};
use crate::error::{Result, SgfemError};

/// Axis-aligned rectangle [lo, hi].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Rect { lo, hi }
    }

    /// (-1, 1)^2
    pub fn bi_unit() -> Self {
        Rect::new([-1.0, -1.0], [1.0, 1.0])
    }

    /// (0, 1)^2
    pub fn unit() -> Self {
        Rect::new([0.0, 0.0], [1.0, 1.0])
    }

    pub fn area(&self) -> f64 {
        (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
    }

    pub fn is_square(&self) -> bool {
        ((self.hi[0] - self.lo[0]) - (self.hi[1] - self.lo[1])).abs() < 1e-14
    }
}

/// A scalar function on D with its gradient.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SpatialFn {
    Constant(f64),
    /// c + g . x
    Linear {
        c: f64,
        g: [f64; 2],
    },
    /// sqrt(lambda) phi(x) for a separable KL mode.
    Kl {
        scale: f64,
        mode: KLMode2d,
    },
    /// amp cos(2 pi b1 x1) cos(2 pi b2 x2)
    Cosine {
        amp: f64,
        b1: f64,
        b2: f64,
    },
}

impl SpatialFn {
    #[inline]
    pub fn eval(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        match self {
            SpatialFn::Constant(c) => (*c, [0.0, 0.0]),
            SpatialFn::Linear { c, g } => (c + g[0] * x[0] + g[1] * x[1], *g),
            SpatialFn::Kl { scale, mode } => {
                let (v, g) = mode.eval(x);
                (scale * v, [scale * g[0], scale * g[1]])
            }
            SpatialFn::Cosine { amp, b1, b2 } => {
                let (w1, w2) = (2.0 * PI * b1, 2.0 * PI * b2);
                let (s1, c1) = (w1 * x[0]).sin_cos();
                let (s2, c2) = (w2 * x[1]).sin_cos();
                (amp * c1 * c2, [-amp * w1 * s1 * c2, -amp * w2 * c1 * s2])
            }
        }
    }
}

/// a(x, y) = a_0(x) + sum_m a_m(x) y_m.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineField {
    pub domain: Rect,
    pub a0: SpatialFn,
    pub terms: Vec<SpatialFn>,
}

impl AffineField {
    pub fn new(domain: Rect, a0: SpatialFn, terms: Vec<SpatialFn>) -> Self {
        AffineField { domain, a0, terms }
    }

    /// Number of parameters M.
    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    /// Fills `vals[0..=M]` and `grads[0..=M]` with a_0, a_1, ..., a_M at x.
    #[inline]
    pub fn eval_all(&self, x: [f64; 2], vals: &mut [f64], grads: &mut [[f64; 2]]) {
        let (v, g) = self.a0.eval(x);
        vals[0] = v;
        grads[0] = g;
        for (m, f) in self.terms.iter().enumerate() {
            let (v, g) = f.eval(x);
            vals[m + 1] = v;
            grads[m + 1] = g;
        }
    }

    /// a(x, y).
    pub fn value(&self, x: [f64; 2], y: &[f64]) -> f64 {
        let mut a = self.a0.eval(x).0;
        for (f, ym) in self.terms.iter().zip(y) {
            a += f.eval(x).0 * ym;
        }
        a
    }
}

/// Truncated KL expansion of a field with mean one and separable exponential covariance.
pub fn kl_field(sigma: f64, ell1: f64, ell2: f64, m: usize, domain: Rect) -> Result<AffineField> {
    if !(sigma > 0.0 && ell1 > 0.0 && ell2 > 0.0) || m == 0 {
        return Err(SgfemError::Config(
            "KL field needs sigma, ell1, ell2 > 0 and M >= 1".into(),
        ));
    }
    let modes = kl_2d(sigma, [ell1, ell2], domain.lo, domain.hi, m)?;
    let terms = modes
        .into_iter()
        .map(|mode| SpatialFn::Kl {
            scale: mode.lambda.sqrt(),
            mode,
        })
        .collect();
    Ok(AffineField::new(domain, SpatialFn::Constant(1.0), terms))
}

/// Frequencies (beta_1(m), beta_2(m)) of the m-th cosine mode, m >= 1.
pub fn cosine_frequencies(m: usize) -> (usize, usize) {
    // largest k with k(k+1)/2 <= m
    let mut k = 0;
    while (k + 1) * (k + 2) / 2 <= m {
        k += 1;
    }
    let b1 = m - k * (k + 1) / 2;
    (b1, k - b1)
}

/// a_0 = 1, a_m = alpha_bar m^(-sigma_tilde) cos(2 pi b1 x1) cos(2 pi b2 x2) on (0,1)^2.
pub fn cosine_field(alpha_bar: f64, sigma_tilde: f64, m: usize) -> Result<AffineField> {
    if !(alpha_bar > 0.0) || !(sigma_tilde > 1.0) || m == 0 {
        return Err(SgfemError::Config(
            "cosine field needs alpha_bar > 0, sigma_tilde > 1 and M >= 1".into(),
        ));
    }
    let terms = (1..=m)
        .map(|i| {
            let (b1, b2) = cosine_frequencies(i);
            SpatialFn::Cosine {
                amp: alpha_bar * (i as f64).powf(-sigma_tilde),
                b1: b1 as f64,
                b2: b2 as f64,
            }
        })
        .collect();
    Ok(AffineField::new(Rect::unit(), SpatialFn::Constant(1.0), terms))
}
