//! Built-in host graphs: paths, boxes, weighted disks.
//!
//! Interior nodes sit on an integer lattice. Boundary nodes are exactly the
//! lattice points outside the interior that touch it, so every boundary node
//! has an interior neighbour.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::operator::{DiscreteOperator, Edge, Graph};

/// Path with `n` interior nodes `1..=n` and boundary nodes `0`, `n+1`.
pub fn path(n: usize, conductance: f64, potential: f64) -> Result<DiscreteOperator> {
    path_with(n, |_| conductance, |_| 1.0, |_| potential)
}

/// Path with per-edge conductance `a(i)` on edge `(i, i+1)`, measure `m(i)` and
/// potential `c(i)` per node.
pub fn path_with(
    n: usize,
    a: impl Fn(usize) -> f64,
    m: impl Fn(usize) -> f64,
    c: impl Fn(usize) -> f64,
) -> Result<DiscreteOperator> {
    if n == 0 {
        return Err(invalid("path needs at least one interior node"));
    }
    let total = n + 2;
    let edges = (0..=n).map(|i| Edge { x: i, y: i + 1, conductance: a(i) }).collect();
    let measure = (0..total).map(&m).collect();
    let graph =
        Graph::new(total, edges, measure, &[0, n + 1])?.with_coords((0..total).map(|i| vec![i as f64]).collect())?;
    let potential = (0..total).map(|i| if i == 0 || i == n + 1 { 0.0 } else { c(i) }).collect();
    DiscreteOperator::symmetric(Arc::new(graph), potential)
}

/// Centre node of [`path`].
pub fn path_center(n: usize) -> usize {
    n.div_ceil(2).max(1)
}

struct Lattice {
    points: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
    boundary: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

/// Lattice nodes with `inside(p)` as interior plus their outer neighbours.
fn lattice(dim: usize, reach: i64, inside: impl Fn(&[i64]) -> bool) -> Lattice {
    let mut interior = Vec::new();
    let mut p = vec![-reach; dim];
    loop {
        if inside(&p) {
            interior.push(p.clone());
        }
        let mut k = 0;
        while k < dim {
            p[k] += 1;
            if p[k] <= reach {
                break;
            }
            p[k] = -reach;
            k += 1;
        }
        if k == dim {
            break;
        }
    }
    let mut points = interior.clone();
    let mut index: HashMap<Vec<i64>, usize> = interior.iter().enumerate().map(|(i, q)| (q.clone(), i)).collect();
    let mut boundary = Vec::new();
    let mut edges = Vec::new();
    for i in 0..interior.len() {
        for d in 0..dim {
            for s in [-1, 1] {
                let mut q = interior[i].clone();
                q[d] += s;
                let j = match index.get(&q) {
                    Some(&j) => j,
                    None => {
                        let j = points.len();
                        points.push(q.clone());
                        index.insert(q, j);
                        boundary.push(j);
                        j
                    }
                };
                if j > i || j >= interior.len() {
                    edges.push((i, j));
                }
            }
        }
    }
    Lattice { points, index, boundary, edges }
}

fn lattice_operator(
    lat: &Lattice,
    conductance: impl Fn(&[f64]) -> f64,
    measure: impl Fn(&[f64]) -> f64,
    potential: f64,
) -> Result<DiscreteOperator> {
    let coords: Vec<Vec<f64>> = lat.points.iter().map(|p| p.iter().map(|&v| v as f64).collect()).collect();
    let edges = lat
        .edges
        .iter()
        .map(|&(x, y)| {
            let mid: Vec<f64> = coords[x].iter().zip(&coords[y]).map(|(a, b)| 0.5 * (a + b)).collect();
            Edge { x, y, conductance: conductance(&mid) }
        })
        .collect();
    let m = coords.iter().map(|c| measure(c)).collect();
    let n = coords.len();
    let graph = Graph::new(n, edges, m, &lat.boundary)?.with_coords(coords)?;
    let mut c = vec![potential; n];
    for &b in &lat.boundary {
        c[b] = 0.0;
    }
    DiscreteOperator::symmetric(Arc::new(graph), c)
}

/// `(2h+1)²` interior box centred at the origin, unit conductances.
pub fn grid2d(half: usize, potential: f64) -> Result<DiscreteOperator> {
    let h = half as i64;
    let lat = lattice(2, h + 1, |p| p.iter().all(|v| v.abs() <= h));
    lattice_operator(&lat, |_| 1.0, |_| 1.0, potential)
}

/// `(2h+1)³` interior box centred at the origin, unit conductances.
pub fn grid3d(half: usize, potential: f64) -> Result<DiscreteOperator> {
    let h = half as i64;
    let lat = lattice(3, h + 1, |p| p.iter().all(|v| v.abs() <= h));
    lattice_operator(&lat, |_| 1.0, |_| 1.0, potential)
}

/// Lattice disk `|x| ≤ radius` with conductance and measure `|x|^β` outside the
/// unit ball (`1` inside). This is the symmetric form of
/// `−Δ − β χ_{|x|>1} r⁻¹ ∂_r` in `L²(|x|^β dx)`.
pub fn radial_disk(radius: f64, beta: f64) -> Result<DiscreteOperator> {
    if !(radius >= 1.0) {
        return Err(invalid("disk radius must be ≥ 1"));
    }
    let reach = radius.ceil() as i64 + 1;
    let lat = lattice(2, reach, |p| ((p[0] * p[0] + p[1] * p[1]) as f64).sqrt() <= radius);
    let w = move |c: &[f64]| {
        let r = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 1.0 {
            r.powf(beta)
        } else {
            1.0
        }
    };
    lattice_operator(&lat, w, w, 0.0)
}

/// Node index of the origin in a lattice generator's graph.
pub fn origin(op: &DiscreteOperator) -> Option<usize> {
    op.graph().coords()?.iter().position(|c| c.iter().all(|&v| v == 0.0))
}

/// 2D box Laplacian plus the upwind discretization of the radial drift
/// `−(b χ_{r>1}/r) ∂_r`.
pub fn grid2d_radial_drift(half: usize, b: f64) -> Result<DiscreteOperator> {
    let h = half as i64;
    let lat = lattice(2, h + 1, |p| p.iter().all(|v| v.abs() <= h));
    let base = lattice_operator(&lat, |_| 1.0, |_| 1.0, 0.0)?;
    let graph = base.graph_arc();
    let mut drift = Vec::new();
    for x in graph.interior() {
        let p = &lat.points[x];
        let r = ((p[0] * p[0] + p[1] * p[1]) as f64).sqrt();
        if r <= 1.0 {
            continue;
        }
        let kappa = -b / r;
        for d in 0..2 {
            let w = kappa * p[d] as f64 / r;
            if w == 0.0 {
                continue;
            }
            // w ∂_d u ≈ |w| (u(x) − u(upwind neighbour))
            let mut q = p.clone();
            q[d] -= w.signum() as i64;
            let y = lat.index[&q];
            drift.push((x, y, w.abs()));
        }
    }
    DiscreteOperator::new(graph, base.potential().to_vec(), &drift, &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_layout() {
        let op = path(5, 1.0, 0.0).unwrap();
        assert_eq!(op.n(), 7);
        assert_eq!(op.graph().boundary(), vec![0, 6]);
        assert_eq!(path_center(5), 3);
    }

    #[test]
    fn box_sizes() {
        let g2 = grid2d(2, 0.0).unwrap();
        assert_eq!(g2.graph().interior().len(), 25);
        assert_eq!(g2.graph().boundary().len(), 20);
        let g3 = grid3d(1, 0.0).unwrap();
        assert_eq!(g3.graph().interior().len(), 27);
        assert_eq!(g3.graph().boundary().len(), 54);
        assert!(origin(&g2).is_some());
    }

    #[test]
    fn disk_weights() {
        let op = radial_disk(4.0, -1.0).unwrap();
        let g = op.graph();
        let o = origin(&op).unwrap();
        assert_eq!(g.measure()[o], 1.0);
        let far = g.coords().unwrap().iter().position(|c| c == &vec![3.0, 0.0]).unwrap();
        assert!((g.measure()[far] - 1.0 / 3.0).abs() < 1e-15);
    }
}
