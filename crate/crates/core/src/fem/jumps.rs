use super::bubble::{side_point, EdgeRule};
use super::grid::Edge;
use super::space::FESpace;

/// Reference points of an interior edge seen from its two elements:
/// (side of `minus`, side of `plus`).
pub fn edge_sides(edge: &Edge) -> (usize, usize) {
    if edge.vertical {
        (1, 3)
    } else {
        (2, 0)
    }
}

/// Normal derivative jump (grad u|minus - grad u|plus) . n at each edge rule
/// point, with n pointing from `minus` to `plus`.
pub fn normal_jumps(space: &FESpace, full: &[f64], edge: &Edge, rule: &EdgeRule, out: &mut [f64]) {
    let (sm, sp) = edge_sides(edge);
    let d = if edge.vertical { 0 } else { 1 };
    for (q, &s) in rule.s.iter().enumerate() {
        let gm = space.eval_element(edge.minus, full, side_point(sm, s)).1;
        let gp = space.eval_element(edge.plus, full, side_point(sp, s)).1;
        out[q] = gm[d] - gp[d];
    }
}

/// Integrals of w [[du/dn]] psi_E over every interior edge, where psi_E is the
/// edge-midpoint bubble. Order follows `UniformGrid::interior_edges`.
pub fn edge_jump_integrals(space: &FESpace, full: &[f64], w: impl Fn([f64; 2]) -> f64) -> Vec<(Edge, f64)> {
    let rule = EdgeRule::new();
    let grid = &space.grid;
    let h = grid.h();
    let mut jumps = vec![0.0; rule.s.len()];
    grid.interior_edges()
        .into_iter()
        .map(|edge| {
            normal_jumps(space, full, &edge, &rule, &mut jumps);
            let (sm, _) = edge_sides(&edge);
            let o = grid.element_origin(edge.minus);
            let mut s = 0.0;
            for (q, &t) in rule.s.iter().enumerate() {
                let r = side_point(sm, t);
                let x = [o[0] + h * r[0], o[1] + h * r[1]];
                s += rule.weights[q] * h * w(x) * jumps[q] * rule.trace[q];
            }
            (edge, s)
        })
        .collect()
}
