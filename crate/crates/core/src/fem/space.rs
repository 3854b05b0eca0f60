use serde::{Deserialize, Serialize};

use super::grid::UniformGrid;

pub const NOT_FREE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementKind {
    /// Bilinear
    Q1,
    /// Biquadratic
    Q2,
}

impl ElementKind {
    pub fn order(self) -> usize {
        match self {
            ElementKind::Q1 => 1,
            ElementKind::Q2 => 2,
        }
    }

    /// Local dofs per element.
    pub fn nloc(self) -> usize {
        (self.order() + 1) * (self.order() + 1)
    }
}

/// 1D Lagrange basis on [0, 1] with equispaced nodes: values and derivatives.
#[inline]
fn lagrange_1d(order: usize, t: f64, v: &mut [f64; 3], d: &mut [f64; 3]) {
    match order {
        1 => {
            *v = [1.0 - t, t, 0.0];
            *d = [-1.0, 1.0, 0.0];
        }
        _ => {
            *v = [2.0 * (t - 0.5) * (t - 1.0), -4.0 * t * (t - 1.0), 2.0 * t * (t - 0.5)];
            *d = [4.0 * t - 3.0, -8.0 * t + 4.0, 4.0 * t - 1.0];
        }
    }
}

/// Tensor shape functions on the reference square [0, 1]^2, local node (a, b)
/// at position a + b (order + 1). Gradients are with respect to reference coordinates.
pub fn shape_functions(kind: ElementKind, xi: [f64; 2], vals: &mut [f64], grads: &mut [[f64; 2]]) {
    let p = kind.order();
    let (mut vx, mut dx, mut vy, mut dy) = ([0.0; 3], [0.0; 3], [0.0; 3], [0.0; 3]);
    lagrange_1d(p, xi[0], &mut vx, &mut dx);
    lagrange_1d(p, xi[1], &mut vy, &mut dy);
    for b in 0..=p {
        for a in 0..=p {
            let k = a + b * (p + 1);
            vals[k] = vx[a] * vy[b];
            grads[k] = [dx[a] * vy[b], vx[a] * dy[b]];
        }
    }
}

/// Continuous Q1 or Q2 finite element space with homogeneous Dirichlet
/// conditions imposed by eliminating boundary nodes.
#[derive(Clone, Debug)]
pub struct FESpace {
    pub grid: UniformGrid,
    pub kind: ElementKind,
    /// global node -> free dof number, or NOT_FREE on the boundary
    free_of_node: Vec<u32>,
    free_nodes: Vec<u32>,
    elem_nodes: Vec<u32>,
}

impl FESpace {
    pub fn new(grid: UniformGrid, kind: ElementKind) -> Self {
        let p = kind.order();
        let n = grid.n();
        let np = n * p + 1;
        let mut free_of_node = vec![NOT_FREE; np * np];
        let mut free_nodes = Vec::new();
        for j in 0..np {
            for i in 0..np {
                if i > 0 && j > 0 && i + 1 < np && j + 1 < np {
                    free_of_node[i + j * np] = free_nodes.len() as u32;
                    free_nodes.push((i + j * np) as u32);
                }
            }
        }
        let nloc = kind.nloc();
        let mut elem_nodes = Vec::with_capacity(n * n * nloc);
        for ey in 0..n {
            for ex in 0..n {
                for b in 0..=p {
                    for a in 0..=p {
                        elem_nodes.push(((ex * p + a) + (ey * p + b) * np) as u32);
                    }
                }
            }
        }
        FESpace {
            grid,
            kind,
            free_of_node,
            free_nodes,
            elem_nodes,
        }
    }

    /// Nodes per side.
    pub fn side_nodes(&self) -> usize {
        self.grid.n() * self.kind.order() + 1
    }

    /// All nodes, boundary included.
    pub fn num_nodes(&self) -> usize {
        self.free_of_node.len()
    }

    pub fn num_free(&self) -> usize {
        self.free_nodes.len()
    }

    pub fn nloc(&self) -> usize {
        self.kind.nloc()
    }

    pub fn element_nodes(&self, e: usize) -> &[u32] {
        let k = self.nloc();
        &self.elem_nodes[e * k..(e + 1) * k]
    }

    pub fn free_index(&self, node: usize) -> Option<usize> {
        let f = self.free_of_node[node];
        (f != NOT_FREE).then_some(f as usize)
    }

    pub fn free_of_node(&self) -> &[u32] {
        &self.free_of_node
    }

    pub fn free_nodes(&self) -> &[u32] {
        &self.free_nodes
    }

    pub fn node_coord(&self, node: usize) -> [f64; 2] {
        let np = self.side_nodes();
        let hs = self.grid.h() / self.kind.order() as f64;
        let lo = self.grid.domain.lo;
        [lo[0] + (node % np) as f64 * hs, lo[1] + (node / np) as f64 * hs]
    }

    /// Expands a free-dof vector to all nodes (zero on the boundary).
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.num_nodes()];
        for (k, &node) in self.free_nodes.iter().enumerate() {
            full[node as usize] = free[k];
        }
        full
    }

    /// Nodal interpolant restricted to free dofs.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.free_nodes
            .iter()
            .map(|&n| f(self.node_coord(n as usize)))
            .collect()
    }

    /// Value and physical gradient of a finite element function (all-node vector)
    /// at reference point xi of element e.
    pub fn eval_element(&self, e: usize, full: &[f64], xi: [f64; 2]) -> (f64, [f64; 2]) {
        let k = self.nloc();
        let mut v = [0.0; 9];
        let mut g = [[0.0; 2]; 9];
        shape_functions(self.kind, xi, &mut v[..k], &mut g[..k]);
        let inv_h = 1.0 / self.grid.h();
        let mut val = 0.0;
        let mut grad = [0.0; 2];
        for (a, &node) in self.element_nodes(e).iter().enumerate() {
            let c = full[node as usize];
            val += c * v[a];
            grad[0] += c * g[a][0] * inv_h;
            grad[1] += c * g[a][1] * inv_h;
        }
        (val, grad)
    }
}
