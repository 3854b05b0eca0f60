use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Result, SgfemError};

const STIELTJES_PANELS: usize = 8;
const STIELTJES_POINTS: usize = 25;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on [a, b].
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, points: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(points);
    let len = (b - a) / panels as f64;
    let mut x = Vec::with_capacity(panels * points);
    let mut w = Vec::with_capacity(panels * points);
    for p in 0..panels {
        let lo = a + p as f64 * len;
        for (xi, wi) in gx.iter().zip(&gw) {
            x.push(lo + 0.5 * len * (xi + 1.0));
            w.push(0.5 * len * wi);
        }
    }
    (x, w)
}

/// Quadrature rule for the truncated Gaussian probability measure on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&y, &w)| w * f(y)).sum()
    }
}

/// Orthonormal polynomials for the truncated Gaussian weight
/// p(y) = exp(-y^2 / (2 sigma0^2)) / (sigma0 sqrt(2 pi) erf(1 / (sqrt(2) sigma0))) on [-1, 1].
///
/// Recurrence: sqrt(b_{k+1}) P_{k+1} = (y - a_k) P_k - sqrt(b_k) P_{k-1}, P_0 = 1.
#[derive(Debug)]
pub struct UnivariateBasis {
    sigma0: f64,
    norm_const: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    rules: Vec<OnceLock<GaussRule>>,
}

impl UnivariateBasis {
    /// Recurrence coefficients a_0..a_{n_max}, b_0..b_{n_max} by the discretized
    /// Stieltjes procedure.
    pub fn new(sigma0: f64, n_max: usize) -> Result<Self> {
        if !(sigma0 > 0.0) || n_max < 1 {
            return Err(SgfemError::Config(format!(
                "basis needs sigma0 > 0 and n_max >= 1 (got {sigma0}, {n_max})"
            )));
        }
        let (x, w0) = composite_gauss_legendre(-1.0, 1.0, STIELTJES_PANELS, STIELTJES_POINTS);
        let dens: Vec<f64> = x.iter().map(|&y| (-y * y / (2.0 * sigma0 * sigma0)).exp()).collect();
        let mass: f64 = w0.iter().zip(&dens).map(|(w, d)| w * d).sum();
        let norm_const = 1.0 / mass;
        let w: Vec<f64> = w0.iter().zip(&dens).map(|(a, d)| a * d * norm_const).collect();

        // monic Stieltjes on the discrete measure
        let n_pts = x.len();
        let mut alpha = Vec::with_capacity(n_max + 1);
        let mut beta = Vec::with_capacity(n_max + 1);
        let mut prev = vec![0.0; n_pts];
        let mut cur = vec![1.0; n_pts];
        let mut prev_norm = 1.0;
        for k in 0..=n_max {
            let norm: f64 = (0..n_pts).map(|i| w[i] * cur[i] * cur[i]).sum();
            let b = if k == 0 { norm } else { norm / prev_norm };
            if !(b > 0.0) || !b.is_finite() {
                return Err(SgfemError::RecurrenceBreakdown { degree: k, beta: b });
            }
            let mut a = (0..n_pts).map(|i| w[i] * x[i] * cur[i] * cur[i]).sum::<f64>() / norm;
            if a.abs() < 1e-13 {
                // the weight is even, so the centres vanish exactly
                a = 0.0;
            }
            alpha.push(a);
            beta.push(b);
            let next: Vec<f64> = (0..n_pts)
                .map(|i| (x[i] - a) * cur[i] - if k == 0 { 0.0 } else { b * prev[i] })
                .collect();
            prev = std::mem::replace(&mut cur, next);
            prev_norm = norm;
        }
        let rules = (0..=n_max).map(|_| OnceLock::new()).collect();
        Ok(UnivariateBasis {
            sigma0,
            norm_const,
            alpha,
            beta,
            rules,
        })
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn n_max(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn alpha_rec(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta_rec(&self) -> &[f64] {
        &self.beta
    }

    /// Constant c such that c exp(-y^2 / (2 sigma0^2)) has unit mass on [-1, 1].
    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    pub fn density(&self, y: f64) -> f64 {
        self.norm_const * (-y * y / (2.0 * self.sigma0 * self.sigma0)).exp()
    }

    /// Values P_0(y), ..., P_{out.len()-1}(y).
    pub fn eval_into(&self, y: f64, out: &mut [f64]) {
        let n = out.len();
        assert!(
            n <= self.alpha.len(),
            "degree {} beyond basis capacity",
            n.saturating_sub(1)
        );
        if n == 0 {
            return;
        }
        out[0] = 1.0;
        if n == 1 {
            return;
        }
        out[1] = (y - self.alpha[0]) / self.beta[1].sqrt();
        for k in 1..n - 1 {
            out[k + 1] = ((y - self.alpha[k]) * out[k] - self.beta[k].sqrt() * out[k - 1]) / self.beta[k + 1].sqrt();
        }
    }

    pub fn eval(&self, degree: usize, y: f64) -> Vec<f64> {
        let mut v = vec![0.0; degree + 1];
        self.eval_into(y, &mut v);
        v
    }

    /// The n-point Gauss rule of the measure (Golub–Welsch), cached per n.
    pub fn gauss_rule(&self, n: usize) -> Result<&GaussRule> {
        if n == 0 || n > self.n_max() {
            return Err(SgfemError::DegreeOutOfRange {
                requested: n,
                capacity: self.n_max(),
            });
        }
        if let Some(r) = self.rules[n].get() {
            return Ok(r);
        }
        let rule = self.golub_welsch(n)?;
        Ok(self.rules[n].get_or_init(|| rule))
    }

    fn golub_welsch(&self, n: usize) -> Result<GaussRule> {
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            jac[(k, k)] = self.alpha[k];
            if k + 1 < n {
                let b = self.beta[k + 1].sqrt();
                jac[(k, k + 1)] = b;
                jac[(k + 1, k)] = b;
            }
        }
        let eig = SymmetricEigen::try_new(jac, 1e-15, 10_000).ok_or(SgfemError::EigenFailure)?;
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], self.beta[0] * v0 * v0)
            })
            .collect();
        if pairs.iter().any(|(x, w)| !x.is_finite() || !(*w > 0.0)) {
            return Err(SgfemError::EigenFailure);
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // enforce the symmetry of the measure exactly
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (pairs[j].0 - pairs[i].0);
            let w = 0.5 * (pairs[i].1 + pairs[j].1);
            pairs[i] = (-x, w);
            pairs[j] = (x, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Ok(GaussRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent 200-point rule for integrals against p.
    fn oracle(sigma0: f64) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = composite_gauss_legendre(-1.0, 1.0, 10, 20);
        let d: Vec<f64> = x.iter().map(|&y| (-y * y / (2.0 * sigma0 * sigma0)).exp()).collect();
        let z: f64 = w.iter().zip(&d).map(|(a, b)| a * b).sum();
        let w = w.iter().zip(&d).map(|(a, b)| a * b / z).collect();
        (x, w)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        for deg in 0..14u32 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "deg {deg}: {q} vs {exact}");
        }
    }

    #[test]
    fn centres_vanish_and_unit_mass() {
        let b = UnivariateBasis::new(1.0, 10).unwrap();
        assert!(b.alpha_rec().iter().all(|a| a.abs() < 1e-12));
        assert!((b.beta_rec()[0] - 1.0).abs() < 1e-14);
        assert!(b.beta_rec().iter().all(|&x| x > 0.0));
    }

    #[test]
    fn normalization_matches_erf_formula() {
        // 1 / (sqrt(2 pi) erf(1/sqrt 2)) with erf(1/sqrt 2) = 0.682689492137086
        let b = UnivariateBasis::new(1.0, 4).unwrap();
        let expected = 1.0 / ((2.0 * PI).sqrt() * 0.682_689_492_137_086);
        assert!((b.norm_const() - expected).abs() < 1e-13);
    }

    #[test]
    fn gram_matrix_is_identity() {
        for &s in &[0.5, 1.0, 3.0] {
            let b = UnivariateBasis::new(s, 30).unwrap();
            let (x, w) = oracle(s);
            let n = 31;
            let mut g = vec![0.0; n * n];
            let mut v = vec![0.0; n];
            for (y, wq) in x.iter().zip(&w) {
                b.eval_into(*y, &mut v);
                for i in 0..n {
                    for j in 0..n {
                        g[i * n + j] += wq * v[i] * v[j];
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (g[i * n + j] - e).abs() < 1e-10,
                        "sigma0 {s} ({i},{j}) {}",
                        g[i * n + j]
                    );
                }
            }
        }
    }

    #[test]
    fn gauss_rule_properties() {
        let b = UnivariateBasis::new(1.0, 30).unwrap();
        let r = b.gauss_rule(5).unwrap();
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(r.integrate(|y| y).abs() < 1e-12);
        assert!(r.nodes.iter().all(|&y| y > -1.0 && y < 1.0));
        assert!(r.weights.iter().all(|&w| w > 0.0));

        let (x, w) = oracle(1.0);
        let m2: f64 = x.iter().zip(&w).map(|(y, w)| w * y * y).sum();
        let r8 = b.gauss_rule(8).unwrap();
        assert!((r8.integrate(|y| y * y) - m2).abs() < 1e-12);
        // exactness up to degree 2n - 1
        for deg in 0..16 {
            let o: f64 = x.iter().zip(&w).map(|(y, w)| w * y.powi(deg)).sum();
            assert!((r8.integrate(|y| y.powi(deg)) - o).abs() < 1e-13, "degree {deg}");
        }
    }

    #[test]
    fn rule_out_of_range_is_an_error() {
        let b = UnivariateBasis::new(1.0, 6).unwrap();
        assert!(b.gauss_rule(7).is_err());
        assert!(b.gauss_rule(0).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(UnivariateBasis::new(0.0, 5).is_err());
        assert!(UnivariateBasis::new(1.0, 0).is_err());
    }
}
