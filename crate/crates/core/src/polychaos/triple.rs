use std::collections::HashMap;

use super::basis::UnivariateBasis;
use super::multi_index::{IndexSet, MultiIndex};
use crate::error::{Result, SgfemError};

/// True when no one of i, j, k exceeds the sum of the other two.
#[inline]
pub fn triangle_ok(i: u32, j: u32, k: u32) -> bool {
    i <= j + k && j <= i + k && k <= i + j
}

/// <P_i P_j P_k> under the univariate measure.
///
/// Zero without quadrature when the triangle condition fails or when
/// i + j + k is odd (the measure is symmetric).
pub fn triple_product(basis: &UnivariateBasis, i: u32, j: u32, k: u32) -> Result<f64> {
    if !triangle_ok(i, j, k) || (i + j + k) % 2 == 1 {
        return Ok(0.0);
    }
    let n = ((i + j + k) / 2 + 1) as usize;
    let top = i.max(j).max(k) as usize;
    if top > basis.n_max() {
        return Err(SgfemError::DegreeOutOfRange {
            requested: top,
            capacity: basis.n_max(),
        });
    }
    let rule = basis.gauss_rule(n)?;
    let mut v = vec![0.0; top + 1];
    let mut s = 0.0;
    for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
        basis.eval_into(y, &mut v);
        s += w * v[i as usize] * v[j as usize] * v[k as usize];
    }
    Ok(s)
}

/// All triple products with indices up to `max_degree`.
#[derive(Clone, Debug)]
pub struct TripleTable {
    max_degree: usize,
    data: Vec<f64>,
}

impl TripleTable {
    pub fn new(basis: &UnivariateBasis, max_degree: usize) -> Result<Self> {
        let d = max_degree;
        let n = 3 * d / 2 + 1;
        if d > basis.n_max() {
            return Err(SgfemError::DegreeOutOfRange {
                requested: d,
                capacity: basis.n_max(),
            });
        }
        let rule = basis.gauss_rule(n)?;
        let s = d + 1;
        let mut vals = vec![0.0; rule.len() * s];
        for (q, &y) in rule.nodes.iter().enumerate() {
            basis.eval_into(y, &mut vals[q * s..(q + 1) * s]);
        }
        let mut data = vec![0.0; s * s * s];
        for i in 0..s {
            for j in i..s {
                for k in j..s {
                    let (iu, ju, ku) = (i as u32, j as u32, k as u32);
                    if !triangle_ok(iu, ju, ku) || (i + j + k) % 2 == 1 {
                        continue;
                    }
                    let mut acc = 0.0;
                    for (q, w) in rule.weights.iter().enumerate() {
                        let p = &vals[q * s..(q + 1) * s];
                        acc += w * p[i] * p[j] * p[k];
                    }
                    for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                        data[(a * s + b) * s + c] = acc;
                    }
                }
            }
        }
        Ok(TripleTable { max_degree: d, data })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    #[inline]
    pub fn get(&self, i: u32, j: u32, k: u32) -> f64 {
        let s = self.max_degree + 1;
        self.data[(i as usize * s + j as usize) * s + k as usize]
    }

    /// Product over components of <P_{a_m} P_{b_m} P_{g_m}>.
    pub fn product(&self, a: &MultiIndex, b: &MultiIndex, g: &MultiIndex) -> f64 {
        let mut v = 1.0;
        for m in 0..a.dim() {
            v *= self.get(a[m], b[m], g[m]);
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    }
}

/// Sparse spectral matrix G_gamma with rows indexed by P and columns by Q.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMatrix {
    pub rows: usize,
    pub cols: usize,
    /// (row, col, value) with row = position of alpha in P, col = position of beta in Q.
    pub entries: Vec<(u32, u32, f64)>,
}

impl SpectralMatrix {
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for &(i, j, v) in &self.entries {
            d[i as usize][j as usize] += v;
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.2.abs()))
    }
}

/// G_gamma for a single gamma.
pub fn spectral_matrix(gamma: &MultiIndex, p: &IndexSet, q: &IndexSet, table: &TripleTable) -> SpectralMatrix {
    let mut entries = Vec::new();
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            let v = table.product(a, b, gamma);
            if v != 0.0 {
                entries.push((i as u32, j as u32, v));
            }
        }
    }
    SpectralMatrix {
        rows: p.len(),
        cols: q.len(),
        entries,
    }
}

/// The family {G_gamma} for gamma in N(P, Q), optionally intersected with `restrict`.
#[derive(Clone, Debug)]
pub struct SpectralTerms {
    pub gammas: IndexSet,
    pub mats: Vec<SpectralMatrix>,
}

/// Matrices whose largest entry is below this are treated as zero.
pub const DROP_TOL: f64 = 1e-14;

impl SpectralTerms {
    pub fn build(p: &IndexSet, q: &IndexSet, table: &TripleTable, restrict: Option<&IndexSet>) -> Self {
        let dim = p.dim();
        let mut acc: HashMap<MultiIndex, Vec<(u32, u32, f64)>> = HashMap::new();
        let mut choices: Vec<Vec<u32>> = vec![Vec::new(); dim];
        let mut cur = vec![0u32; dim];
        for (i, a) in p.iter().enumerate() {
            for (j, b) in q.iter().enumerate() {
                // per component only gamma_m of matching parity inside the triangle survive
                for m in 0..dim {
                    let lo = a[m].abs_diff(b[m]);
                    let hi = a[m] + b[m];
                    choices[m].clear();
                    choices[m].extend((lo..=hi).step_by(2));
                }
                enumerate_product(&choices, 0, &mut cur, &mut |g| {
                    let gi = MultiIndex::new(g.to_vec());
                    if let Some(r) = restrict {
                        if !r.contains(&gi) {
                            return;
                        }
                    }
                    let v = table.product(a, b, &gi);
                    if v != 0.0 {
                        acc.entry(gi).or_default().push((i as u32, j as u32, v));
                    }
                });
            }
        }
        let mut pairs: Vec<(MultiIndex, Vec<(u32, u32, f64)>)> = acc.into_iter().collect();
        pairs.sort_by(|x, y| x.0.cmp(&y.0));
        let mut gammas = Vec::new();
        let mut mats = Vec::new();
        for (g, mut e) in pairs {
            e.sort_by_key(|t| (t.0, t.1));
            let m = SpectralMatrix {
                rows: p.len(),
                cols: q.len(),
                entries: e,
            };
            if m.max_abs() >= DROP_TOL {
                gammas.push(g);
                mats.push(m);
            }
        }
        SpectralTerms {
            gammas: IndexSet::from_indices(dim, gammas),
            mats,
        }
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }
}

fn enumerate_product(choices: &[Vec<u32>], m: usize, cur: &mut [u32], f: &mut impl FnMut(&[u32])) {
    if m == choices.len() {
        f(cur);
        return;
    }
    for &c in &choices[m] {
        cur[m] = c;
        enumerate_product(choices, m + 1, cur, f);
    }
}
