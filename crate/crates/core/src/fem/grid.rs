use serde::{Deserialize, Serialize};

use crate::error::{Result, SgfemError};
use crate::randfield::Rect;

/// Uniform grid of n x n square elements, n = 2^level.
///
/// Nodes are numbered x-fastest: node (i, j) has index i + j (n + 1).
/// Elements likewise: element (ex, ey) has index ex + ey n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub domain: Rect,
    pub level: u32,
}

impl UniformGrid {
    pub fn new(domain: Rect, level: u32) -> Result<Self> {
        if !domain.is_square() {
            return Err(SgfemError::Config("uniform grids need a square domain".into()));
        }
        if level > 12 {
            return Err(SgfemError::Config(format!("grid level {level} is too large")));
        }
        Ok(UniformGrid { domain, level })
    }

    pub fn refine(&self) -> Self {
        UniformGrid {
            domain: self.domain,
            level: self.level + 1,
        }
    }

    /// Elements per side.
    pub fn n(&self) -> usize {
        1 << self.level
    }

    /// Edge length h = 2^-level sqrt(|D|).
    pub fn h(&self) -> f64 {
        (self.domain.hi[0] - self.domain.lo[0]) / self.n() as f64
    }

    pub fn num_elements(&self) -> usize {
        self.n() * self.n()
    }

    pub fn num_vertices(&self) -> usize {
        (self.n() + 1) * (self.n() + 1)
    }

    pub fn vertex(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.h();
        [self.domain.lo[0] + i as f64 * h, self.domain.lo[1] + j as f64 * h]
    }

    /// Lower-left corner of element (ex, ey).
    pub fn element_origin(&self, e: usize) -> [f64; 2] {
        let n = self.n();
        self.vertex(e % n, e / n)
    }

    /// Interior edges: vertical edges between (ex-1, ey) and (ex, ey), then horizontal ones.
    pub fn interior_edges(&self) -> Vec<Edge> {
        let n = self.n();
        let mut out = Vec::with_capacity(2 * n * (n - 1));
        for ey in 0..n {
            for ex in 1..n {
                out.push(Edge {
                    minus: ex - 1 + ey * n,
                    plus: ex + ey * n,
                    vertical: true,
                });
            }
        }
        for ey in 1..n {
            for ex in 0..n {
                out.push(Edge {
                    minus: ex + (ey - 1) * n,
                    plus: ex + ey * n,
                    vertical: false,
                });
            }
        }
        out
    }

    /// Local edges of element e lying on the domain boundary, in the order
    /// bottom, right, top, left.
    pub fn boundary_sides(&self, e: usize) -> [bool; 4] {
        let n = self.n();
        let (ex, ey) = (e % n, e / n);
        [ey == 0, ex == n - 1, ey == n - 1, ex == 0]
    }
}

/// An interior edge shared by elements `minus` (left or below) and `plus`.
/// The unit normal points from `minus` to `plus`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub minus: usize,
    pub plus: usize,
    pub vertical: bool,
}
