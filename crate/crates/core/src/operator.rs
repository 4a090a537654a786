//! Divergence-form elliptic operators on finite weighted graphs.
//!
//! A [`DiscreteOperator`] acts on node functions by
//!
//! ```text
//! (P u)(x) = (1/m(x)) [ Σ_y a_xy (u(x) − u(y))
//!                      + Σ_y b_xy (u(x) − u(y))
//!                      + Σ_y (b̃_xy u(x) − b̃_yx u(y)) ] + c(x) u(x)
//! ```
//!
//! on interior nodes. `b` is the gradient-form drift (`b·∇u`), `b̃` the
//! divergence-form drift (`−div(u b̃)`), both stored per directed edge. The
//! boundary carries a Dirichlet condition: boundary rows of `apply` are the
//! identity. With this split the formal adjoint in `L²(m)` is exactly the
//! operator with `b` and `b̃` exchanged.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Csr;

/// Undirected edge with a strictly positive conductance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub x: usize,
    pub y: usize,
    pub conductance: f64,
}

/// Finite weighted graph with a node measure and a Dirichlet boundary.
#[derive(Debug, Clone)]
pub struct Graph {
    edges: Vec<Edge>,
    measure: Vec<f64>,
    boundary: Vec<bool>,
    neighbors: Vec<Vec<(usize, f64)>>,
    coords: Option<Vec<Vec<f64>>>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<Edge>, measure: Vec<f64>, boundary: &[usize]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        if measure.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: measure.len() });
        }
        for (x, &mx) in measure.iter().enumerate() {
            if !(mx.is_finite() && mx > 0.0) {
                return Err(Error::InvalidGraph(format!("measure at node {x} is {mx}, must be finite and > 0")));
            }
        }
        let mut is_boundary = vec![false; n];
        for &b in boundary {
            if b >= n {
                return Err(Error::InvalidGraph(format!("boundary node {b} out of range")));
            }
            is_boundary[b] = true;
        }
        let mut neighbors = vec![Vec::new(); n];
        let mut seen = BTreeMap::new();
        for e in &edges {
            if e.x >= n || e.y >= n {
                return Err(Error::InvalidGraph(format!("edge ({}, {}) out of range", e.x, e.y)));
            }
            if e.x == e.y {
                return Err(Error::InvalidGraph(format!("self-loop at node {}", e.x)));
            }
            if !(e.conductance.is_finite() && e.conductance > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "conductance on edge ({}, {}) is {}, must be finite and > 0",
                    e.x, e.y, e.conductance
                )));
            }
            let key = (e.x.min(e.y), e.x.max(e.y));
            if seen.insert(key, ()).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", key.0, key.1)));
            }
            neighbors[e.x].push((e.y, e.conductance));
            neighbors[e.y].push((e.x, e.conductance));
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(y, _)| y);
        }
        let graph = Self { edges, measure, boundary: is_boundary, neighbors, coords: None };
        if graph.interior().is_empty() {
            return Err(Error::InvalidGraph("graph has no interior nodes".into()));
        }
        if !graph.is_connected(|_| true) {
            return Err(Error::InvalidGraph("graph is disconnected".into()));
        }
        if !graph.is_connected(|x| !graph.boundary[x]) {
            return Err(Error::InvalidGraph("interior is disconnected".into()));
        }
        Ok(graph)
    }

    pub fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: coords.len() });
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.measure.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn is_boundary(&self, x: usize) -> bool {
        self.boundary[x]
    }

    pub fn boundary(&self) -> Vec<usize> {
        (0..self.n()).filter(|&x| self.boundary[x]).collect()
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.n()).filter(|&x| !self.boundary[x]).collect()
    }

    /// Neighbours of `x` with their conductances, sorted by index.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.neighbors[x]
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn conductance(&self, x: usize, y: usize) -> Option<f64> {
        self.neighbors[x].binary_search_by_key(&y, |&(z, _)| z).ok().map(|i| self.neighbors[x][i].1)
    }

    fn is_connected(&self, keep: impl Fn(usize) -> bool) -> bool {
        let nodes: Vec<usize> = (0..self.n()).filter(|&x| keep(x)).collect();
        let Some(&start) = nodes.first() else { return true };
        let mut visited = vec![false; self.n()];
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.neighbors[x] {
                if !visited[y] && keep(y) {
                    visited[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == nodes.len()
    }

    /// Hop distance from `center` to every node (`usize::MAX` if unreachable).
    pub fn hop_distances(&self, center: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        dist[center] = 0;
        let mut queue = VecDeque::from([center]);
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.neighbors[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// True when the induced subgraph on `nodes` is connected.
    pub fn is_connected_subset(&self, nodes: &[usize]) -> bool {
        let mut member = vec![false; self.n()];
        for &x in nodes {
            member[x] = true;
        }
        self.is_connected(|x| member[x])
    }
}

/// Subset of interior nodes on which Dirichlet problems are posed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    nodes: Vec<usize>,
    local: Vec<Option<usize>>,
}

impl Domain {
    pub fn new(graph: &Graph, mut nodes: Vec<usize>) -> Result<Self> {
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("empty domain".into()));
        }
        let mut local = vec![None; graph.n()];
        for (i, &x) in nodes.iter().enumerate() {
            if x >= graph.n() {
                return Err(Error::InvalidArgument(format!("domain node {x} out of range")));
            }
            if graph.is_boundary(x) {
                return Err(Error::InvalidArgument(format!("domain node {x} lies on the boundary")));
            }
            local[x] = Some(i);
        }
        Ok(Self { nodes, local })
    }

    pub fn interior(graph: &Graph) -> Self {
        Self::new(graph, graph.interior()).expect("interior is a valid domain")
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn local_index(&self, x: usize) -> Option<usize> {
        self.local.get(x).copied().flatten()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.local_index(x).is_some()
    }

    pub fn is_subset_of(&self, other: &Domain) -> bool {
        self.nodes.iter().all(|&x| other.contains(x))
    }
}

/// Directed-edge coefficient table, `coef[x]` lists `(y, value)` sorted by `y`.
type DirectedTable = Vec<Vec<(usize, f64)>>;

fn directed_table(n: usize, entries: &[(usize, usize, f64)], graph: &Graph, what: &str) -> Result<DirectedTable> {
    let mut table: DirectedTable = vec![Vec::new(); n];
    for &(x, y, v) in entries {
        if x >= n || y >= n {
            return Err(Error::InvalidGraph(format!("{what} entry ({x}, {y}) out of range")));
        }
        if graph.conductance(x, y).is_none() {
            return Err(Error::InvalidGraph(format!("{what} entry ({x}, {y}) is not on an edge")));
        }
        if !v.is_finite() {
            return Err(Error::InvalidGraph(format!("{what} entry ({x}, {y}) is not finite")));
        }
        if v == 0.0 {
            continue;
        }
        match table[x].binary_search_by_key(&y, |&(z, _)| z) {
            Ok(_) => return Err(Error::InvalidGraph(format!("duplicate {what} entry ({x}, {y})"))),
            Err(pos) => table[x].insert(pos, (y, v)),
        }
    }
    Ok(table)
}

fn lookup(table: &DirectedTable, x: usize, y: usize) -> f64 {
    table[x].binary_search_by_key(&y, |&(z, _)| z).map(|i| table[x][i].1).unwrap_or(0.0)
}

/// Discretized `P u = −div(A∇u + u b̃) + b·∇u + c u` on a [`Graph`].
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    graph: Arc<Graph>,
    drift: DirectedTable,
    div_drift: DirectedTable,
    potential: Vec<f64>,
}

impl DiscreteOperator {
    /// `drift` holds `(x, y, b_xy)`, `div_drift` holds `(x, y, b̃_xy)`.
    pub fn new(
        graph: Arc<Graph>,
        potential: Vec<f64>,
        drift: &[(usize, usize, f64)],
        div_drift: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let n = graph.n();
        if potential.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: potential.len() });
        }
        if let Some(x) = potential.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidGraph(format!("potential at node {x} is not finite")));
        }
        let drift = directed_table(n, drift, &graph, "drift")?;
        let div_drift = directed_table(n, div_drift, &graph, "drift_div")?;
        Ok(Self { graph, drift, div_drift, potential })
    }

    /// Pure principal part plus potential, no drift.
    pub fn symmetric(graph: Arc<Graph>, potential: Vec<f64>) -> Result<Self> {
        Self::new(graph, potential, &[], &[])
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn graph_arc(&self) -> Arc<Graph> {
        Arc::clone(&self.graph)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn measure(&self) -> &[f64] {
        self.graph.measure()
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn drift(&self, x: usize, y: usize) -> f64 {
        lookup(&self.drift, x, y)
    }

    pub fn div_drift(&self, x: usize, y: usize) -> f64 {
        lookup(&self.div_drift, x, y)
    }

    pub fn drift_entries(&self) -> Vec<(usize, usize, f64)> {
        flatten(&self.drift)
    }

    pub fn div_drift_entries(&self) -> Vec<(usize, usize, f64)> {
        flatten(&self.div_drift)
    }

    /// True iff `b ≡ b̃`.
    pub fn is_symmetric(&self) -> bool {
        self.drift == self.div_drift
    }

    pub fn has_drift(&self) -> bool {
        self.drift.iter().chain(&self.div_drift).any(|row| !row.is_empty())
    }

    /// Same graph and drift, new potential.
    pub fn with_potential(&self, potential: Vec<f64>) -> Result<Self> {
        if potential.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: potential.len() });
        }
        Ok(Self { potential, ..self.clone() })
    }

    /// `P − ε V`: subtracts `ε V` from the potential.
    pub fn perturbed(&self, eps: f64, v: &[f64]) -> Result<Self> {
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: v.len() });
        }
        let c = self.potential.iter().zip(v).map(|(c, v)| c - eps * v).collect();
        self.with_potential(c)
    }

    /// Formal adjoint in `L²(m)`: swaps gradient and divergence drift.
    pub fn adjoint(&self) -> Self {
        Self {
            graph: Arc::clone(&self.graph),
            drift: self.div_drift.clone(),
            div_drift: self.drift.clone(),
            potential: self.potential.clone(),
        }
    }

    /// Row `x` of the form matrix `K = diag(m)·P` over all neighbour columns,
    /// diagonal entry first.
    pub fn form_row(&self, x: usize) -> (f64, Vec<(usize, f64)>) {
        let g = &self.graph;
        let mut diag = self.potential[x] * g.measure()[x];
        let mut off = Vec::with_capacity(g.neighbors(x).len());
        for &(y, a) in g.neighbors(x) {
            let b = lookup(&self.drift, x, y);
            let bt_out = lookup(&self.div_drift, x, y);
            let bt_in = lookup(&self.div_drift, y, x);
            diag += a + b + bt_out;
            off.push((y, -a - b - bt_in));
        }
        (diag, off)
    }

    /// `P u` on all nodes; boundary rows return `u` itself.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if u.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: u.len() });
        }
        let m = self.measure();
        Ok((0..n)
            .map(|x| {
                if self.graph.is_boundary(x) {
                    return u[x];
                }
                let (d, off) = self.form_row(x);
                let s = d * u[x] + off.iter().map(|&(y, k)| k * u[y]).sum::<f64>();
                s / m[x]
            })
            .collect())
    }

    /// Dense `n × n` matrix of [`apply`](Self::apply).
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let m = self.measure();
        let mut mat = DMatrix::zeros(n, n);
        for x in 0..n {
            if self.graph.is_boundary(x) {
                mat[(x, x)] = 1.0;
                continue;
            }
            let (d, off) = self.form_row(x);
            mat[(x, x)] = d / m[x];
            for (y, k) in off {
                mat[(x, y)] = k / m[x];
            }
        }
        mat
    }

    /// Dense form matrix `K_DD = diag(m)·P` restricted to `domain`, with
    /// Dirichlet zero off the domain. Its inverse is the Green table.
    pub fn form_matrix(&self, domain: &Domain) -> DMatrix<f64> {
        let k = domain.len();
        let mut mat = DMatrix::zeros(k, k);
        for (i, &x) in domain.nodes().iter().enumerate() {
            let (d, off) = self.form_row(x);
            mat[(i, i)] = d;
            for (y, v) in off {
                if let Some(j) = domain.local_index(y) {
                    mat[(i, j)] = v;
                }
            }
        }
        mat
    }

    /// Sparse form matrix on `domain`.
    pub fn form_csr(&self, domain: &Domain) -> Csr {
        let mut rows = Vec::with_capacity(domain.len());
        for (i, &x) in domain.nodes().iter().enumerate() {
            let (d, off) = self.form_row(x);
            let mut row = vec![(i, d)];
            row.extend(off.into_iter().filter_map(|(y, v)| domain.local_index(y).map(|j| (j, v))));
            row.sort_by_key(|&(j, _)| j);
            rows.push(row);
        }
        Csr::from_rows(domain.len(), rows)
    }

    pub fn ellipticity(&self, regions: &[Vec<usize>]) -> EllipticityReport {
        let edges: Vec<(usize, usize, f64)> = self.graph.edges().iter().map(|e| (e.x, e.y, e.conductance)).collect();
        check_ellipticity(&edges, self.measure(), &self.potential, regions)
    }
}

fn flatten(table: &DirectedTable) -> Vec<(usize, usize, f64)> {
    table.iter().enumerate().flat_map(|(x, row)| row.iter().map(move |&(y, v)| (x, y, v))).collect()
}

/// Conductance bounds over one node region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionEllipticity {
    pub region: usize,
    pub edges: usize,
    pub min_conductance: f64,
    pub max_conductance: f64,
    /// `max/min`; the discrete analogue of `λ_K²`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub regions: Vec<RegionEllipticity>,
    /// Edges with nonpositive or non-finite conductance.
    pub violations: Vec<(usize, usize, f64)>,
    pub measure_range: (f64, f64),
    pub max_abs_potential: f64,
}

impl EllipticityReport {
    pub fn is_elliptic(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Per-region conductance condition numbers. An edge belongs to a region when
/// either endpoint does; an empty `regions` slice means one region of all nodes.
pub fn check_ellipticity(
    edges: &[(usize, usize, f64)],
    measure: &[f64],
    potential: &[f64],
    regions: &[Vec<usize>],
) -> EllipticityReport {
    let violations: Vec<_> = edges.iter().copied().filter(|&(_, _, a)| !(a.is_finite() && a > 0.0)).collect();
    let all: Vec<usize> = (0..measure.len()).collect();
    let regions: Vec<&[usize]> =
        if regions.is_empty() { vec![&all[..]] } else { regions.iter().map(|r| r.as_slice()).collect() };
    let reports = regions
        .iter()
        .enumerate()
        .map(|(i, region)| {
            let mut member = vec![false; measure.len()];
            for &x in *region {
                if x < member.len() {
                    member[x] = true;
                }
            }
            let (mut lo, mut hi, mut count) = (f64::INFINITY, f64::NEG_INFINITY, 0);
            for &(x, y, a) in edges {
                if member.get(x).copied().unwrap_or(false) || member.get(y).copied().unwrap_or(false) {
                    lo = lo.min(a);
                    hi = hi.max(a);
                    count += 1;
                }
            }
            let ratio = if count > 0 && lo > 0.0 { hi / lo } else { f64::INFINITY };
            RegionEllipticity { region: i, edges: count, min_conductance: lo, max_conductance: hi, ratio }
        })
        .collect();
    let measure_range = measure.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &m| (lo.min(m), hi.max(m)));
    let max_abs_potential = potential.iter().fold(0.0_f64, |acc, c| acc.max(c.abs()));
    EllipticityReport { regions: reports, violations, measure_range, max_abs_potential }
}

/// JSON-compatible operator description.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub nodes: usize,
    /// `[x, y, a_xy]` triples.
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub measure: Option<Vec<f64>>,
    #[serde(default)]
    pub potential: Option<Vec<f64>>,
    /// `[x, y, b_xy]` gradient-form drift per directed edge.
    #[serde(default)]
    pub drift: Vec<(usize, usize, f64)>,
    /// `[x, y, b̃_xy]` divergence-form drift per directed edge.
    #[serde(default)]
    pub drift_div: Vec<(usize, usize, f64)>,
    pub boundary: Vec<usize>,
    #[serde(default)]
    pub coords: Option<Vec<Vec<f64>>>,
}

impl OperatorSpec {
    pub fn from_operator(op: &DiscreteOperator) -> Self {
        let g = op.graph();
        Self {
            nodes: g.n(),
            edges: g.edges().iter().map(|e| (e.x, e.y, e.conductance)).collect(),
            measure: Some(g.measure().to_vec()),
            potential: Some(op.potential().to_vec()),
            drift: op.drift_entries(),
            drift_div: op.div_drift_entries(),
            boundary: g.boundary(),
            coords: g.coords().map(|c| c.to_vec()),
        }
    }

    pub fn ellipticity(&self, regions: &[Vec<usize>]) -> EllipticityReport {
        let measure = self.measure.clone().unwrap_or_else(|| vec![1.0; self.nodes]);
        let potential = self.potential.clone().unwrap_or_else(|| vec![0.0; self.nodes]);
        check_ellipticity(&self.edges, &measure, &potential, regions)
    }
}

/// Validates `spec` and assembles the operator.
pub fn build_operator(spec: &OperatorSpec) -> Result<DiscreteOperator> {
    let n = spec.nodes;
    let edges = spec.edges.iter().map(|&(x, y, conductance)| Edge { x, y, conductance }).collect();
    let measure = spec.measure.clone().unwrap_or_else(|| vec![1.0; n]);
    let mut graph = Graph::new(n, edges, measure, &spec.boundary)?;
    if let Some(coords) = &spec.coords {
        graph = graph.with_coords(coords.clone())?;
    }
    let potential = spec.potential.clone().unwrap_or_else(|| vec![0.0; n]);
    DiscreteOperator::new(Arc::new(graph), potential, &spec.drift, &spec.drift_div)
}

pub fn load_operator(path: &std::path::Path) -> Result<DiscreteOperator> {
    let text = std::fs::read_to_string(path)?;
    let spec: OperatorSpec = serde_json::from_str(&text)?;
    build_operator(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn random_operator(seed: u64) -> DiscreteOperator {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let base = generators::path(6, 1.0, 0.0).unwrap();
        let g = base.graph_arc();
        let mut drift = Vec::new();
        let mut div = Vec::new();
        for e in g.edges() {
            drift.push((e.x, e.y, rng.random_range(0.0..1.0)));
            div.push((e.y, e.x, rng.random_range(0.0..1.0)));
        }
        let c = (0..g.n()).map(|_| rng.random_range(0.0..1.0)).collect();
        DiscreteOperator::new(g, c, &drift, &div).unwrap()
    }

    #[test]
    fn path_laplacian_stencil() {
        let op = generators::path(5, 1.0, 0.0).unwrap();
        let u: Vec<f64> = (0..7).map(|i| (i * i) as f64).collect();
        let pu = op.apply(&u).unwrap();
        for x in 1..=5 {
            assert!((pu[x] - (2.0 * u[x] - u[x - 1] - u[x + 1])).abs() < 1e-14);
        }
        assert_eq!(pu[0], u[0]);
        assert_eq!(pu[6], u[6]);
        assert!(op.is_symmetric());
    }

    #[test]
    fn potential_adds_identity() {
        let lap = generators::path(5, 1.0, 0.0).unwrap();
        let op = generators::path(5, 1.0, 1.0).unwrap();
        let u: Vec<f64> = (0..7).map(|i| (i as f64).sin()).collect();
        let a = lap.apply(&u).unwrap();
        let b = op.apply(&u).unwrap();
        for x in 1..=5 {
            assert!((b[x] - a[x] - u[x]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_and_constant_inputs() {
        let op = generators::path(5, 1.0, 0.3).unwrap();
        assert!(op.apply(&[0.0; 7]).unwrap().iter().all(|&v| v == 0.0));
        let mut ones = vec![1.0; 7];
        ones[0] = 1.0;
        let pu = op.apply(&ones).unwrap();
        for x in 1..=5 {
            assert!((pu[x] - 0.3).abs() < 1e-14);
        }
        assert!(matches!(op.apply(&[0.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn drift_grid_is_nonsymmetric() {
        let op = generators::grid2d_radial_drift(4, -1.0).unwrap();
        assert!(!op.is_symmetric());
        let d = Domain::interior(op.graph());
        let k = op.form_matrix(&d);
        assert!((&k - k.transpose()).amax() > 1e-3);
    }

    #[test]
    fn adjoint_of_two_node_drift() {
        // nodes 0,1 interior; 2,3 boundary
        let edges = vec![
            Edge { x: 0, y: 1, conductance: 1.0 },
            Edge { x: 0, y: 2, conductance: 1.0 },
            Edge { x: 1, y: 3, conductance: 1.0 },
        ];
        let g = Arc::new(Graph::new(4, edges, vec![1.0; 4], &[2, 3]).unwrap());
        let op = DiscreteOperator::new(g, vec![0.0; 4], &[(0, 1, 0.5)], &[]).unwrap();
        let d = Domain::interior(op.graph());
        let k = op.form_matrix(&d);
        // hand computation: row 0 = [2 + 0.5, -1 - 0.5], row 1 = [-1, 2]
        assert_eq!(k, DMatrix::from_row_slice(2, 2, &[2.5, -1.5, -1.0, 2.0]));
        let ka = op.adjoint().form_matrix(&d);
        assert_eq!(ka, DMatrix::from_row_slice(2, 2, &[2.5, -1.0, -1.5, 2.0]));
    }

    #[test]
    fn adjoint_is_weighted_transpose() {
        for seed in 0..10 {
            let op = random_operator(seed);
            let adj = op.adjoint();
            let d = Domain::interior(op.graph());
            let k = op.form_matrix(&d);
            let ka = adj.form_matrix(&d);
            assert!((&ka - k.transpose()).amax() < 1e-14);
            let back = adj.adjoint();
            assert_eq!(back.form_matrix(&d), k);
            assert_eq!(back.drift_entries(), op.drift_entries());
        }
    }

    #[test]
    fn symmetric_operator_is_self_adjoint_in_l2m() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let base = generators::grid2d(3, 0.0).unwrap();
        let g = base.graph_arc();
        let b: Vec<_> = g.edges().iter().flat_map(|e| [(e.x, e.y, 0.3), (e.y, e.x, 0.1)]).collect();
        let c = (0..g.n()).map(|_| rng.random_range(0.0..2.0)).collect();
        let op = DiscreteOperator::new(g, c, &b, &b).unwrap();
        assert!(op.is_symmetric());
        let m = op.measure().to_vec();
        for _ in 0..20 {
            let mut u: Vec<f64> = (0..op.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut v: Vec<f64> = (0..op.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
            for x in op.graph().boundary() {
                u[x] = 0.0;
                v[x] = 0.0;
            }
            let pu = op.apply(&u).unwrap();
            let pv = op.apply(&v).unwrap();
            let interior = op.graph().interior();
            let lhs: f64 = interior.iter().map(|&x| pu[x] * v[x] * m[x]).sum();
            let rhs: f64 = interior.iter().map(|&x| u[x] * pv[x] * m[x]).sum();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));
        }
    }

    #[test]
    fn m_matrix_sign_pattern() {
        let op = generators::grid2d(4, 0.5).unwrap();
        let d = Domain::interior(op.graph());
        let k = op.form_matrix(&d);
        for i in 0..k.nrows() {
            let off: f64 = (0..k.ncols()).filter(|&j| j != i).map(|j| k[(i, j)]).sum();
            assert!(k[(i, i)] > 0.0);
            assert!((0..k.ncols()).filter(|&j| j != i).all(|j| k[(i, j)] <= 0.0));
            assert!(k[(i, i)] + off >= 0.0);
        }
    }

    #[test]
    fn rejects_bad_graphs() {
        let e = |x, y, a| Edge { x, y, conductance: a };
        assert!(Graph::new(3, vec![e(0, 1, 1.0), e(1, 2, 0.0)], vec![1.0; 3], &[0]).is_err());
        assert!(Graph::new(3, vec![e(0, 1, 1.0), e(1, 2, 1.0)], vec![1.0, 0.0, 1.0], &[0]).is_err());
        // interior {1, 3} disconnected through boundary node 2
        let r = Graph::new(4, vec![e(0, 1, 1.0), e(1, 2, 1.0), e(2, 3, 1.0)], vec![1.0; 4], &[0, 2]);
        assert!(matches!(r, Err(Error::InvalidGraph(msg)) if msg.contains("interior")));
        assert!(Graph::new(4, vec![e(0, 1, 1.0), e(2, 3, 1.0)], vec![1.0; 4], &[0]).is_err());
    }

    #[test]
    fn ellipticity_ratios() {
        let op = generators::path(5, 1.0, 0.0).unwrap();
        let r = op.ellipticity(&[]);
        assert_eq!(r.regions[0].ratio, 1.0);
        assert!(r.is_elliptic());
        let spec = OperatorSpec {
            nodes: 3,
            edges: vec![(0, 1, 0.5), (1, 2, 2.0)],
            boundary: vec![0, 2],
            ..Default::default()
        };
        assert_eq!(spec.ellipticity(&[]).regions[0].ratio, 4.0);
        let bad = OperatorSpec { edges: vec![(0, 1, -1.0), (1, 2, 2.0)], ..spec.clone() };
        let r = bad.ellipticity(&[]);
        assert!(!r.is_elliptic());
        assert_eq!(r.violations, vec![(0, 1, -1.0)]);
        assert!(build_operator(&bad).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let op = generators::grid2d_radial_drift(3, -1.0).unwrap();
        let spec = OperatorSpec::from_operator(&op);
        let text = serde_json::to_string(&spec).unwrap();
        let back = build_operator(&serde_json::from_str(&text).unwrap()).unwrap();
        let d = Domain::interior(op.graph());
        assert_eq!(back.form_matrix(&d), op.form_matrix(&d));
    }
}
