use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::field::AffineField;
use crate::error::Result;
use crate::polychaos::{IndexSet, MultiIndex, UnivariateBasis};

/// Extra Gauss points added to max(gamma) for the 1D integrals of exp(a_m y).
pub const EXP_EXTRA_POINTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientKind {
    /// T = exp(a)
    Exp,
    /// T = a^2
    Square,
}

/// The diffusion coefficient T(x, y) = exp(a) or a^2 together with its gPC
/// expansion coefficients t_gamma(x).
#[derive(Clone, Debug)]
pub struct CoefficientModel {
    pub kind: CoefficientKind,
    pub field: AffineField,
    pub basis: Arc<UnivariateBasis>,
    /// moments[k][n] = integral of y^k P_n p, for k <= 2 and n <= 2
    moments: [[f64; 3]; 3],
}

impl CoefficientModel {
    pub fn new(kind: CoefficientKind, field: AffineField, basis: Arc<UnivariateBasis>) -> Result<Self> {
        let rule = basis.gauss_rule(4)?;
        let mut moments = [[0.0; 3]; 3];
        let mut pv = [0.0; 3];
        for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
            basis.eval_into(y, &mut pv);
            for (k, row) in moments.iter_mut().enumerate() {
                for n in 0..3 {
                    row[n] += w * y.powi(k as i32) * pv[n];
                }
            }
        }
        // exact zeros: degree n above k, or odd k + n under the symmetric measure
        for (k, row) in moments.iter_mut().enumerate() {
            for (n, v) in row.iter_mut().enumerate() {
                if n > k || (k + n) % 2 == 1 {
                    *v = 0.0;
                }
            }
        }
        moments[0][0] = 1.0;
        Ok(CoefficientModel {
            kind,
            field,
            basis,
            moments,
        })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    /// Integral of y^k P_n p dy.
    #[inline]
    pub fn moment(&self, k: usize, n: u32) -> f64 {
        if n > 2 {
            0.0
        } else {
            self.moments[k][n as usize]
        }
    }

    /// Finite support of gamma -> t_gamma when it exists (T = a^2 only).
    pub fn support(&self) -> Option<IndexSet> {
        match self.kind {
            CoefficientKind::Exp => None,
            CoefficientKind::Square => Some(IndexSet::complete(self.dim(), 2)),
        }
    }

    /// Restricts a candidate set of gammas to the support of the expansion.
    pub fn restrict(&self, gammas: &IndexSet) -> IndexSet {
        match self.support() {
            Some(s) => gammas.intersection(&s),
            None => gammas.clone(),
        }
    }

    /// T(x, y).
    pub fn coefficient(&self, x: [f64; 2], y: &[f64]) -> f64 {
        let a = self.field.value(x, y);
        match self.kind {
            CoefficientKind::Exp => a.exp(),
            CoefficientKind::Square => a * a,
        }
    }

    pub fn evaluator(&self, gammas: &[MultiIndex]) -> Result<TermEvaluator<'_>> {
        TermEvaluator::new(self, gammas)
    }

    pub fn t_gamma(&self, gamma: &MultiIndex, x: [f64; 2]) -> Result<f64> {
        let ev = self.evaluator(std::slice::from_ref(gamma))?;
        let mut s = ev.scratch();
        let mut v = [0.0];
        ev.eval(x, &mut s, &mut v, None);
        Ok(v[0])
    }

    pub fn grad_t_gamma(&self, gamma: &MultiIndex, x: [f64; 2]) -> Result<[f64; 2]> {
        let ev = self.evaluator(std::slice::from_ref(gamma))?;
        let mut s = ev.scratch();
        let mut v = [0.0];
        let mut g = [[0.0; 2]];
        ev.eval(x, &mut s, &mut v, Some(&mut g));
        Ok(g[0])
    }

    /// Minimum and maximum of T over a 17 x 17 spatial grid times the parameter
    /// vertices and midpoints {-1, 0, 1}^M.
    pub fn sample_bounds(&self) -> (f64, f64) {
        let d = self.field.domain;
        let m = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut vals = vec![0.0; m + 1];
        let mut grads = vec![[0.0; 2]; m + 1];
        let combos = 3usize.pow(m as u32);
        for i in 0..17 {
            for j in 0..17 {
                let x = [
                    d.lo[0] + (d.hi[0] - d.lo[0]) * i as f64 / 16.0,
                    d.lo[1] + (d.hi[1] - d.lo[1]) * j as f64 / 16.0,
                ];
                self.field.eval_all(x, &mut vals, &mut grads);
                for c in 0..combos {
                    let mut a = vals[0];
                    let mut r = c;
                    for v in vals.iter().skip(1) {
                        a += v * ((r % 3) as f64 - 1.0);
                        r /= 3;
                    }
                    let t = match self.kind {
                        CoefficientKind::Exp => a.exp(),
                        CoefficientKind::Square => a * a,
                    };
                    lo = lo.min(t);
                    hi = hi.max(t);
                }
            }
        }
        (lo, hi)
    }
}

/// Per-point scratch space for [`TermEvaluator`].
pub struct EvalScratch {
    a: Vec<f64>,
    ga: Vec<[f64; 2]>,
    /// I_m[n] (row-major, stride = max entry + 1)
    i1: Vec<f64>,
    /// J_m[n] = integral of y exp(a_m y) P_n p
    j1: Vec<f64>,
    prefix: Vec<f64>,
}

/// Evaluates t_gamma and grad t_gamma for a fixed list of gammas at many points.
pub struct TermEvaluator<'a> {
    model: &'a CoefficientModel,
    gammas: Vec<MultiIndex>,
    stride: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// P_n(y_q) for q over nodes, n <= max entry
    pvals: Vec<f64>,
}

impl<'a> TermEvaluator<'a> {
    fn new(model: &'a CoefficientModel, gammas: &[MultiIndex]) -> Result<Self> {
        let max_entry = gammas.iter().map(|g| g.max_entry()).max().unwrap_or(0) as usize;
        let stride = max_entry + 1;
        let (nodes, weights, pvals) = match model.kind {
            CoefficientKind::Exp => {
                let rule = model.basis.gauss_rule(max_entry + EXP_EXTRA_POINTS)?;
                let mut pv = vec![0.0; rule.len() * stride];
                for (q, &y) in rule.nodes.iter().enumerate() {
                    model.basis.eval_into(y, &mut pv[q * stride..(q + 1) * stride]);
                }
                (rule.nodes.clone(), rule.weights.clone(), pv)
            }
            CoefficientKind::Square => (Vec::new(), Vec::new(), Vec::new()),
        };
        Ok(TermEvaluator {
            model,
            gammas: gammas.to_vec(),
            stride,
            nodes,
            weights,
            pvals,
        })
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn scratch(&self) -> EvalScratch {
        let m = self.model.dim();
        EvalScratch {
            a: vec![0.0; m + 1],
            ga: vec![[0.0; 2]; m + 1],
            i1: vec![0.0; m * self.stride],
            j1: vec![0.0; m * self.stride],
            prefix: vec![0.0; m + 1],
        }
    }

    /// Writes t_gamma(x) into `vals` (and gradients into `grads` if given),
    /// in the order of the gamma list.
    pub fn eval(&self, x: [f64; 2], s: &mut EvalScratch, vals: &mut [f64], grads: Option<&mut [[f64; 2]]>) {
        self.model.field.eval_all(x, &mut s.a, &mut s.ga);
        match self.model.kind {
            CoefficientKind::Exp => self.eval_exp(s, vals, grads),
            CoefficientKind::Square => self.eval_square(s, vals, grads),
        }
    }

    fn eval_exp(&self, s: &mut EvalScratch, vals: &mut [f64], grads: Option<&mut [[f64; 2]]>) {
        let m_dim = self.model.dim();
        let st = self.stride;
        let want_grad = grads.is_some();
        for m in 0..m_dim {
            let am = s.a[m + 1];
            let (i_row, j_row) = (&mut s.i1[m * st..(m + 1) * st], &mut s.j1[m * st..(m + 1) * st]);
            i_row.fill(0.0);
            j_row.fill(0.0);
            if am == 0.0 {
                // orthogonality gives the integrals exactly
                i_row[0] = 1.0;
                for n in 0..st.min(3) {
                    j_row[n] = self.model.moment(1, n as u32);
                }
                continue;
            }
            for (q, (&y, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
                let e = w * (am * y).exp();
                let p = &self.pvals[q * st..(q + 1) * st];
                for n in 0..st {
                    i_row[n] += e * p[n];
                }
                if want_grad {
                    for n in 0..st {
                        j_row[n] += e * y * p[n];
                    }
                }
            }
        }
        let e0 = s.a[0].exp();
        match grads {
            None => {
                for (v, g) in vals.iter_mut().zip(&self.gammas) {
                    let mut p = 1.0;
                    for m in 0..m_dim {
                        p *= s.i1[m * st + g[m] as usize];
                    }
                    *v = e0 * p;
                }
            }
            Some(grads) => {
                for ((v, gr), g) in vals.iter_mut().zip(grads.iter_mut()).zip(&self.gammas) {
                    // prefix[m] = product of I_i for i < m
                    s.prefix[0] = 1.0;
                    for m in 0..m_dim {
                        s.prefix[m + 1] = s.prefix[m] * s.i1[m * st + g[m] as usize];
                    }
                    let t = e0 * s.prefix[m_dim];
                    *v = t;
                    let mut gx = s.ga[0][0] * t;
                    let mut gy = s.ga[0][1] * t;
                    let mut suffix = 1.0;
                    for m in (0..m_dim).rev() {
                        let c = e0 * s.prefix[m] * suffix * s.j1[m * st + g[m] as usize];
                        gx += s.ga[m + 1][0] * c;
                        gy += s.ga[m + 1][1] * c;
                        suffix *= s.i1[m * st + g[m] as usize];
                    }
                    *gr = [gx, gy];
                }
            }
        }
    }

    fn eval_square(&self, s: &mut EvalScratch, vals: &mut [f64], mut grads: Option<&mut [[f64; 2]]>) {
        let md = self.model;
        let m_dim = md.dim();
        let a = &s.a;
        let ga = &s.ga;
        for (k, g) in self.gammas.iter().enumerate() {
            let nz: Vec<usize> = (0..m_dim).filter(|&m| g[m] != 0).collect();
            let mut t = 0.0;
            let mut gr = [0.0; 2];
            if nz.len() <= 2 {
                let covered = |set: &[usize]| nz.iter().all(|i| set.contains(i));
                if nz.is_empty() {
                    t += a[0] * a[0];
                    for d in 0..2 {
                        gr[d] += 2.0 * a[0] * ga[0][d];
                    }
                }
                for m in 0..m_dim {
                    if !covered(&[m]) {
                        continue;
                    }
                    let c1 = md.moment(1, g[m]);
                    let c2 = md.moment(2, g[m]);
                    t += 2.0 * a[0] * a[m + 1] * c1 + a[m + 1] * a[m + 1] * c2;
                    for d in 0..2 {
                        gr[d] +=
                            2.0 * (ga[0][d] * a[m + 1] + a[0] * ga[m + 1][d]) * c1 + 2.0 * a[m + 1] * ga[m + 1][d] * c2;
                    }
                }
                for m in 0..m_dim {
                    for n in 0..m {
                        if !covered(&[m, n]) {
                            continue;
                        }
                        let c = md.moment(1, g[m]) * md.moment(1, g[n]);
                        if c == 0.0 {
                            continue;
                        }
                        t += 2.0 * a[m + 1] * a[n + 1] * c;
                        for d in 0..2 {
                            gr[d] += 2.0 * (ga[m + 1][d] * a[n + 1] + a[m + 1] * ga[n + 1][d]) * c;
                        }
                    }
                }
            }
            vals[k] = t;
            if let Some(gs) = grads.as_deref_mut() {
                gs[k] = gr;
            }
        }
    }
}
