//! Detail space of piecewise bilinear bubbles: on each element, the Q1 hat
//! functions of the once-refined element attached to the four edge midpoints
//! and to the centroid.

use super::assembly::SquareRule;
use super::grid::UniformGrid;
use crate::polychaos::gauss_legendre;

/// Bubbles per element: bottom, right, top, left edge midpoints, then centroid.
pub const NB: usize = 5;

const CENTRES: [[f64; 2]; NB] = [[0.5, 0.0], [1.0, 0.5], [0.5, 1.0], [0.0, 0.5], [0.5, 0.5]];

#[inline]
fn hat(t: f64, c: f64) -> (f64, f64) {
    let d = t - c;
    if d.abs() >= 0.5 {
        (0.0, 0.0)
    } else {
        (1.0 - 2.0 * d.abs(), if d < 0.0 { 2.0 } else { -2.0 })
    }
}

/// Value and reference gradient of bubble k at xi (not on a subcell interface).
pub fn bubble_eval(k: usize, xi: [f64; 2]) -> (f64, [f64; 2]) {
    let c = CENTRES[k];
    let (vx, dx) = hat(xi[0], c[0]);
    let (vy, dy) = hat(xi[1], c[1]);
    (vx * vy, [dx * vy, vx * dy])
}

/// Point of side `side` (bottom, right, top, left) at arc parameter s in [0, 1];
/// s runs in the positive coordinate direction.
pub fn side_point(side: usize, s: f64) -> [f64; 2] {
    match side {
        0 => [s, 0.0],
        1 => [1.0, s],
        2 => [s, 1.0],
        _ => [0.0, s],
    }
}

/// 3 x 3 Gauss rule on each of the four subcells with bubble tables.
#[derive(Clone, Debug)]
pub struct BubbleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// [q][k]
    pub vals: Vec<[f64; NB]>,
    /// [q][k], reference gradients
    pub grads: Vec<[[f64; 2]; NB]>,
}

impl BubbleRule {
    pub fn new() -> Self {
        let base = SquareRule::gauss(3);
        let mut points = Vec::with_capacity(36);
        let mut weights = Vec::with_capacity(36);
        for (ox, oy) in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)] {
            for (p, w) in base.points.iter().zip(&base.weights) {
                points.push([ox + 0.5 * p[0], oy + 0.5 * p[1]]);
                weights.push(0.25 * w);
            }
        }
        let mut vals = Vec::with_capacity(36);
        let mut grads = Vec::with_capacity(36);
        for p in &points {
            let mut v = [0.0; NB];
            let mut g = [[0.0; 2]; NB];
            for k in 0..NB {
                let (a, b) = bubble_eval(k, *p);
                v[k] = a;
                g[k] = b;
            }
            vals.push(v);
            grads.push(g);
        }
        BubbleRule {
            points,
            weights,
            vals,
            grads,
        }
    }

    /// Reference stiffness of the bubbles (weight 1); equal to the physical one in 2D.
    pub fn laplace_matrix(&self) -> [[f64; NB]; NB] {
        let mut a = [[0.0; NB]; NB];
        for (q, w) in self.weights.iter().enumerate() {
            let g = &self.grads[q];
            for k in 0..NB {
                for l in 0..NB {
                    a[k][l] += w * (g[k][0] * g[l][0] + g[k][1] * g[l][1]);
                }
            }
        }
        a
    }
}

impl Default for BubbleRule {
    fn default() -> Self {
        Self::new()
    }
}

/// Three Gauss points on each half of a unit edge, with the trace of the
/// edge bubble (a hat peaking at the midpoint).
#[derive(Clone, Debug)]
pub struct EdgeRule {
    pub s: Vec<f64>,
    pub weights: Vec<f64>,
    pub trace: Vec<f64>,
}

impl EdgeRule {
    pub fn new() -> Self {
        let (x, w) = gauss_legendre(3);
        let mut s = Vec::with_capacity(6);
        let mut weights = Vec::with_capacity(6);
        for o in [0.0, 0.5] {
            for (xi, wi) in x.iter().zip(&w) {
                s.push(o + 0.25 * (xi + 1.0));
                weights.push(0.25 * wi);
            }
        }
        let trace = s.iter().map(|&t| hat(t, 0.5).0).collect();
        EdgeRule { s, weights, trace }
    }
}

impl Default for EdgeRule {
    fn default() -> Self {
        Self::new()
    }
}

/// Global numbering of the detail space Y(h): one dof per edge midpoint
/// (horizontal edges first, then vertical) and one per element centroid.
#[derive(Clone, Debug)]
pub struct BubbleSpace {
    pub grid: UniformGrid,
}

impl BubbleSpace {
    pub fn new(grid: UniformGrid) -> Self {
        BubbleSpace { grid }
    }

    pub fn num_edges(&self) -> usize {
        let n = self.grid.n();
        2 * n * (n + 1)
    }

    pub fn num_dofs(&self) -> usize {
        self.num_edges() + self.grid.num_elements()
    }

    /// Global dof numbers of the five local bubbles of element e.
    pub fn element_dofs(&self, e: usize) -> [usize; NB] {
        let n = self.grid.n();
        let (ex, ey) = (e % n, e / n);
        let h_edge = |i: usize, j: usize| i + j * n;
        let v_edge = |i: usize, j: usize| n * (n + 1) + i + j * (n + 1);
        [
            h_edge(ex, ey),
            v_edge(ex + 1, ey),
            h_edge(ex, ey + 1),
            v_edge(ex, ey),
            self.num_edges() + e,
        ]
    }

    /// Whether a dof sits on the boundary (and is therefore excluded).
    pub fn is_boundary(&self, dof: usize) -> bool {
        let n = self.grid.n();
        if dof < n * (n + 1) {
            let j = dof / n;
            j == 0 || j == n
        } else if dof < self.num_edges() {
            let i = (dof - n * (n + 1)) % (n + 1);
            i == 0 || i == n
        } else {
            false
        }
    }

    pub fn num_free(&self) -> usize {
        (0..self.num_dofs()).filter(|&d| !self.is_boundary(d)).count()
    }
}
