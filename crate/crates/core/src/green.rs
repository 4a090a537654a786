//! Dirichlet and minimal Green functions.
//!
//! Pole convention: column `y` of a [`GreenMatrix`] solves
//! `P G(·, y) = δ_y / m(y)` on the domain with zero Dirichlet data outside, so
//! the table equals the inverse of the form matrix `diag(m)·P` on the domain.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dense_inverse, solve_sparse, DENSE_LIMIT};
use crate::operator::{DiscreteOperator, Domain, Graph};

/// Nested connected interior subsets `M_1 ⊂ … ⊂ M_J`, last one the whole interior.
#[derive(Debug, Clone)]
pub struct Exhaustion {
    levels: Vec<Domain>,
}

impl Exhaustion {
    pub fn new(graph: &Graph, levels: Vec<Vec<usize>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(invalid("exhaustion needs at least one level"));
        }
        let levels = levels.into_iter().map(|l| Domain::new(graph, l)).collect::<Result<Vec<_>>>()?;
        for (j, level) in levels.iter().enumerate() {
            if !graph.is_connected_subset(level.nodes()) {
                return Err(invalid(format!("exhaustion level {j} is not connected")));
            }
            if j > 0 {
                let prev = &levels[j - 1];
                if !prev.is_subset_of(level) || prev.len() == level.len() {
                    return Err(invalid(format!("exhaustion level {j} does not strictly contain level {}", j - 1)));
                }
            }
        }
        if levels.last().map(Domain::len) != Some(graph.interior().len()) {
            return Err(invalid("last exhaustion level must be the whole interior"));
        }
        Ok(Self { levels })
    }

    /// Interior hop balls of the given radii around `center`, followed by the
    /// full interior when the largest ball does not already cover it.
    pub fn by_radius(graph: &Graph, center: usize, radii: &[usize]) -> Result<Self> {
        if center >= graph.n() || graph.is_boundary(center) {
            return Err(invalid(format!("exhaustion centre {center} must be an interior node")));
        }
        let dist = interior_distances(graph, center);
        let interior = graph.interior();
        let mut levels: Vec<Vec<usize>> = Vec::new();
        let mut sorted = radii.to_vec();
        sorted.sort_unstable();
        for r in sorted {
            let ball: Vec<usize> = interior.iter().copied().filter(|&x| dist[x] <= r).collect();
            if levels.last().map(Vec::len) != Some(ball.len()) {
                levels.push(ball);
            }
        }
        if levels.last().map(Vec::len) != Some(interior.len()) {
            levels.push(interior);
        }
        Self::new(graph, levels)
    }

    pub fn levels(&self) -> &[Domain] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `M_j* = interior ∖ M_j`.
    pub fn complement(&self, j: usize) -> Vec<usize> {
        let host = self.levels.last().expect("nonempty");
        host.nodes().iter().copied().filter(|&x| !self.levels[j].contains(x)).collect()
    }
}

fn interior_distances(graph: &Graph, center: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; graph.n()];
    dist[center] = 0;
    let mut queue = std::collections::VecDeque::from([center]);
    while let Some(x) = queue.pop_front() {
        for &(y, _) in graph.neighbors(x) {
            if !graph.is_boundary(y) && dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                queue.push_back(y);
            }
        }
    }
    dist
}

/// Table of the Dirichlet Green function on a domain.
#[derive(Debug, Clone)]
pub struct GreenMatrix {
    domain: Domain,
    n_nodes: usize,
    measure: Vec<f64>,
    values: DMatrix<f64>,
    convergence_trace: Vec<f64>,
}

impl GreenMatrix {
    pub fn from_parts(domain: Domain, n_nodes: usize, measure: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        let k = domain.len();
        if values.nrows() != k || values.ncols() != k {
            return Err(Error::DimensionMismatch { expected: k, got: values.nrows() });
        }
        if measure.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: measure.len() });
        }
        Ok(Self { domain, n_nodes, measure, values, convergence_trace: Vec::new() })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    /// Number of nodes of the host graph.
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Measure on domain nodes, in local order.
    pub fn local_measure(&self) -> &[f64] {
        &self.measure
    }

    /// Values in local (domain) indices.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn convergence_trace(&self) -> &[f64] {
        &self.convergence_trace
    }

    /// `G(x, y)` by node ids; zero off the domain.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        match (self.domain.local_index(x), self.domain.local_index(y)) {
            (Some(i), Some(j)) => self.values[(i, j)],
            _ => 0.0,
        }
    }

    /// `G(·, y)` as a node function on the host.
    pub fn column(&self, y: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes];
        if let Some(j) = self.domain.local_index(y) {
            for (i, &x) in self.domain.nodes().iter().enumerate() {
                out[x] = self.values[(i, j)];
            }
        }
        out
    }

    /// Restricts a host node function to local order.
    pub fn restrict(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.n_nodes {
            return Err(Error::DimensionMismatch { expected: self.n_nodes, got: f.len() });
        }
        Ok(self.domain.nodes().iter().map(|&x| f[x]).collect())
    }

    /// Extends a local vector by zero to the host.
    pub fn extend(&self, local: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes];
        for (i, &x) in self.domain.nodes().iter().enumerate() {
            out[x] = local[i];
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.values.amax();
        (&self.values - self.values.transpose()).amax() <= tol * scale
    }

    pub fn domain_hash(&self) -> u64 {
        domain_hash(self.domain.nodes())
    }

    /// `x,y,value` lines with host node ids.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,value")?;
        for (i, &x) in self.domain.nodes().iter().enumerate() {
            for (j, &y) in self.domain.nodes().iter().enumerate() {
                writeln!(w, "{x},{y},{:e}", self.values[(i, j)])?;
            }
        }
        Ok(())
    }

    /// Binary layout, little endian: magic `GRNM`, `u32` version, `u64` n,
    /// `u64` domain hash, `f64` tolerance, `u64` host size, n `u64` domain node
    /// ids, then `n·n` `f64` values row-major.
    pub fn write_binary<W: Write>(&self, mut w: W, tolerance: f64) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.domain_hash().to_le_bytes())?;
        w.write_all(&tolerance.to_le_bytes())?;
        w.write_all(&(self.n_nodes as u64).to_le_bytes())?;
        for &x in self.domain.nodes() {
            w.write_all(&(x as u64).to_le_bytes())?;
        }
        for i in 0..self.len() {
            for j in 0..self.len() {
                w.write_all(&self.values[(i, j)].to_le_bytes())?;
            }
        }
        Ok(())
    }
}

const BINARY_MAGIC: &[u8; 4] = b"GRNM";
const BINARY_VERSION: u32 = 1;

/// Table read back from [`GreenMatrix::write_binary`].
#[derive(Debug, Clone, PartialEq)]
pub struct GreenTable {
    pub domain_hash: u64,
    pub tolerance: f64,
    pub n_nodes: usize,
    pub nodes: Vec<usize>,
    pub values: DMatrix<f64>,
}

pub fn read_green_binary<R: Read>(mut r: R) -> Result<GreenTable> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(invalid("not a Green table (bad magic)"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != BINARY_VERSION {
        return Err(invalid("unsupported Green table version"));
    }
    let mut next_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let n = next_u64(&mut r)? as usize;
    let domain_hash = next_u64(&mut r)?;
    let tolerance = f64::from_bits(next_u64(&mut r)?);
    let n_nodes = next_u64(&mut r)? as usize;
    let nodes = (0..n).map(|_| next_u64(&mut r).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            values[(i, j)] = f64::from_bits(next_u64(&mut r)?);
        }
    }
    if domain_hash != self::domain_hash(&nodes) {
        return Err(invalid("Green table domain hash mismatch"));
    }
    Ok(GreenTable { domain_hash, tolerance, n_nodes, nodes, values })
}

/// First eight bytes of SHA-256 over the little-endian node ids.
pub fn domain_hash(nodes: &[usize]) -> u64 {
    let mut hasher = Sha256::new();
    for &x in nodes {
        hasher.update((x as u64).to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn check_positive(values: &DMatrix<f64>, what: &str) -> Result<()> {
    if let Some((k, v)) = values.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        let (i, j) = (k % values.nrows(), k / values.nrows());
        return Err(Error::MaximumPrinciple(format!("{what} entry ({i}, {j}) = {v} is not positive")));
    }
    Ok(())
}

fn check_domain(op: &DiscreteOperator, domain: &Domain) -> Result<()> {
    if domain.nodes().iter().any(|&x| x >= op.n()) {
        return Err(invalid("domain does not belong to this operator's graph"));
    }
    if !op.graph().is_connected_subset(domain.nodes()) {
        return Err(invalid("domain is not connected"));
    }
    Ok(())
}

/// Solves `K g = e_y` for each requested local column.
fn solve_columns(op: &DiscreteOperator, domain: &Domain, local_cols: &[usize]) -> Result<DMatrix<f64>> {
    let k = domain.len();
    let mut out = DMatrix::zeros(k, local_cols.len());
    if k <= DENSE_LIMIT {
        let lu = op.form_matrix(domain).lu();
        for (c, &j) in local_cols.iter().enumerate() {
            let mut e = nalgebra::DVector::zeros(k);
            e[j] = 1.0;
            let sol = lu.solve(&e).ok_or_else(|| Error::NotSubcritical("form matrix is singular".into()))?;
            out.set_column(c, &sol);
        }
    } else {
        let a = op.form_csr(domain);
        let cols: Vec<Vec<f64>> = local_cols
            .par_iter()
            .map(|&j| {
                let mut e = vec![0.0; k];
                e[j] = 1.0;
                solve_sparse(&a, &e).map_err(|err| match err {
                    Error::NoConvergence(m) => Error::NotSubcritical(m),
                    other => other,
                })
            })
            .collect::<Result<_>>()?;
        for (c, col) in cols.iter().enumerate() {
            for i in 0..k {
                out[(i, c)] = col[i];
            }
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotSubcritical("non-finite Green values".into()));
    }
    Ok(out)
}

/// Condition numbers above this are treated as singular.
const MAX_CONDITION: f64 = 1e13;

fn row_sum_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Dirichlet Green table of `op` on `domain`.
pub fn dirichlet_green(op: &DiscreteOperator, domain: &Domain) -> Result<GreenMatrix> {
    check_domain(op, domain)?;
    let k = domain.len();
    let values = if k <= DENSE_LIMIT {
        let form = op.form_matrix(domain);
        let inv = dense_inverse(&form).ok_or_else(|| Error::NotSubcritical("form matrix is singular".into()))?;
        let cond = row_sum_norm(&form) * row_sum_norm(&inv);
        if !(cond < MAX_CONDITION) {
            return Err(Error::NotSubcritical(format!("form matrix is numerically singular (condition ≈ {cond:e})")));
        }
        inv
    } else {
        let cols: Vec<usize> = (0..k).collect();
        solve_columns(op, domain, &cols)?
    };
    check_positive(&values, "Green")?;
    let measure = domain.nodes().iter().map(|&x| op.measure()[x]).collect();
    GreenMatrix::from_parts(domain.clone(), op.n(), measure, values)
}

/// Green columns `G(·, y)` for `poles` (node ids in the domain), rows in local order.
pub fn green_columns(op: &DiscreteOperator, domain: &Domain, poles: &[usize]) -> Result<DMatrix<f64>> {
    check_domain(op, domain)?;
    let local: Vec<usize> = poles
        .iter()
        .map(|&y| domain.local_index(y).ok_or_else(|| invalid(format!("pole {y} not in domain"))))
        .collect::<Result<_>>()?;
    let cols = solve_columns(op, domain, &local)?;
    check_positive(&cols, "Green column")?;
    Ok(cols)
}

/// Qualitative behaviour of Green values along an exhaustion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExhaustionTrend {
    Converged,
    /// Increments do not decay: the finite-scale signature of criticality.
    LimitBlowup,
    Undetermined,
}

/// Green values on the fixed probe block `M_1 × M_1` across levels.
#[derive(Debug, Clone, Serialize)]
pub struct ExhaustionTrace {
    pub level_sizes: Vec<usize>,
    pub probe_nodes: Vec<usize>,
    /// `max_{x,y ∈ M_1} G_{M_j}(x, y)` per level.
    pub probe_max: Vec<f64>,
    /// `‖B_j − B_{j−1}‖_max / ‖B_j‖_max` on the probe block between
    /// consecutive levels.
    pub rel_change: Vec<f64>,
    pub converged: bool,
    pub trend: ExhaustionTrend,
}

/// Consecutive levels required below tolerance to declare convergence.
pub const CONVERGENCE_RUN: usize = 3;

/// Increment ratio above which growth counts as non-decaying.
const BLOWUP_INCREMENT_RATIO: f64 = 0.75;

/// Probe-block version of the exhaustion limit: solves only the `M_1` columns
/// on each level, so it scales to large hosts.
pub fn exhaustion_probe(op: &DiscreteOperator, exhaustion: &Exhaustion, tol: f64) -> Result<ExhaustionTrace> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let levels = exhaustion.levels();
    let probe = levels[0].nodes().to_vec();
    let mut blocks: Vec<DMatrix<f64>> = Vec::with_capacity(levels.len());
    let mut prev: Option<(DMatrix<f64>, &Domain)> = None;
    for level in levels {
        let cols = green_columns(op, level, &probe)?;
        if let Some((prev_cols, prev_level)) = &prev {
            // rows of the previous level are common indices
            let scale = prev_cols.amax();
            for (pi, &x) in prev_level.nodes().iter().enumerate() {
                let i = level.local_index(x).expect("nested");
                for c in 0..probe.len() {
                    if cols[(i, c)] < prev_cols[(pi, c)] - 1e-10 * scale {
                        return Err(Error::MaximumPrinciple(format!(
                            "Green value at ({x}, {}) decreased from {} to {} along the exhaustion",
                            probe[c],
                            prev_cols[(pi, c)],
                            cols[(i, c)]
                        )));
                    }
                }
            }
        }
        let rows: Vec<usize> = probe.iter().map(|&x| level.local_index(x).expect("nested")).collect();
        blocks.push(DMatrix::from_fn(probe.len(), probe.len(), |a, b| cols[(rows[a], b)]));
        prev = Some((cols, level));
    }
    let probe_max: Vec<f64> = blocks.iter().map(|b| b.amax()).collect();
    let rel_change: Vec<f64> = blocks.windows(2).map(|w| (&w[1] - &w[0]).amax() / w[1].amax()).collect();
    let converged = rel_change.len() >= CONVERGENCE_RUN
        && rel_change[rel_change.len() - CONVERGENCE_RUN..].iter().all(|&c| c < tol);
    let increments: Vec<f64> = probe_max.windows(2).map(|w| w[1] - w[0]).collect();
    let trend = if converged {
        ExhaustionTrend::Converged
    } else if increments.len() >= 2 {
        let (a, b) = (increments[increments.len() - 2], increments[increments.len() - 1]);
        if a > 0.0 && b >= BLOWUP_INCREMENT_RATIO * a && rel_change.last().is_some_and(|&c| c >= tol) {
            ExhaustionTrend::LimitBlowup
        } else {
            ExhaustionTrend::Undetermined
        }
    } else {
        ExhaustionTrend::Undetermined
    };
    Ok(ExhaustionTrace {
        level_sizes: levels.iter().map(Domain::len).collect(),
        probe_nodes: probe,
        probe_max,
        rel_change,
        converged,
        trend,
    })
}

/// Minimal Green function as the monotone limit along `exhaustion`.
#[derive(Debug, Clone)]
pub struct MinimalGreen {
    pub green: GreenMatrix,
    pub trace: ExhaustionTrace,
}

/// Full table on the last level plus the probe-block convergence trace.
pub fn minimal_green_exhaustion(op: &DiscreteOperator, exhaustion: &Exhaustion, tol: f64) -> Result<MinimalGreen> {
    let trace = exhaustion_probe(op, exhaustion, tol)?;
    let mut green = dirichlet_green(op, exhaustion.levels().last().expect("nonempty"))?;
    green.convergence_trace = trace.rel_change.clone();
    Ok(MinimalGreen { green, trace })
}

fn check_weight(mu: &[f64], n: usize) -> Result<()> {
    if mu.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: mu.len() });
    }
    if let Some(x) = mu.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(invalid(format!("weight must be finite and nonnegative (node {x})")));
    }
    Ok(())
}

/// `G_μ(x) = Σ_y G(x, y) μ(y) m(y)`, zero off the domain.
pub fn green_potential(green: &GreenMatrix, mu: &[f64]) -> Result<Vec<f64>> {
    check_weight(mu, green.n_nodes())?;
    let local: Vec<f64> = green.domain().nodes().iter().zip(green.local_measure()).map(|(&y, &m)| mu[y] * m).collect();
    if local.iter().all(|&v| v == 0.0) {
        return Err(invalid("μ vanishes on the domain"));
    }
    let gm = green.values() * nalgebra::DVector::from_vec(local);
    Ok(green.extend(gm.as_slice()))
}

/// Torsion function `G_1` (solves `P G_1 = 1`) and rigidity `T = Σ G_1 m`.
#[derive(Debug, Clone, Serialize)]
pub struct Torsion {
    pub function: Vec<f64>,
    pub rigidity: f64,
}

pub fn torsion_function(op: &DiscreteOperator, domain: &Domain) -> Result<Torsion> {
    check_domain(op, domain)?;
    let m: Vec<f64> = domain.nodes().iter().map(|&x| op.measure()[x]).collect();
    let local = if domain.len() <= DENSE_LIMIT {
        op.form_matrix(domain)
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&m))
            .ok_or_else(|| Error::NotSubcritical("form matrix is singular".into()))?
            .as_slice()
            .to_vec()
    } else {
        solve_sparse(&op.form_csr(domain), &m)?
    };
    if let Some(i) = local.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::MaximumPrinciple(format!("torsion function not positive at node {}", domain.nodes()[i])));
    }
    let rigidity = local.iter().zip(&m).map(|(g, m)| g * m).sum();
    let mut function = vec![0.0; op.n()];
    for (i, &x) in domain.nodes().iter().enumerate() {
        function[x] = local[i];
    }
    Ok(Torsion { function, rigidity })
}

#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    pub max_abs_deviation: f64,
    pub max_green: f64,
    pub holds: bool,
}

/// Compares `G_{P*}(x, y)` with `G_P(y, x)`.
pub fn check_duality(op: &DiscreteOperator, domain: &Domain, tol: f64) -> Result<DualityReport> {
    let g = dirichlet_green(op, domain)?;
    let gs = dirichlet_green(&op.adjoint(), domain)?;
    let max_abs_deviation = (gs.values() - g.values().transpose()).amax();
    let max_green = g.values().amax();
    Ok(DualityReport { max_abs_deviation, max_green, holds: max_abs_deviation <= tol })
}

/// `max |P G(·, y) − δ_y/m(y)|·m(y)` over domain rows and columns.
pub fn reproduction_residual(op: &DiscreteOperator, green: &GreenMatrix) -> Result<f64> {
    let nodes = green.domain().nodes();
    let worst = nodes
        .par_iter()
        .map(|&y| -> Result<f64> {
            let col = green.column(y);
            let pg = op.apply(&col)?;
            let my = op.measure()[y];
            Ok(nodes
                .iter()
                .map(|&x| {
                    let target = if x == y { 1.0 / my } else { 0.0 };
                    (pg[x] - target).abs() * my
                })
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn path_green_exact(n: usize, i: usize, j: usize) -> f64 {
        (i.min(j) * (n + 1 - i.max(j))) as f64 / (n + 1) as f64
    }

    #[test]
    fn path_green_closed_form() {
        for n in 1..=10 {
            let op = generators::path(n, 1.0, 0.0).unwrap();
            let g = dirichlet_green(&op, &Domain::interior(op.graph())).unwrap();
            for i in 1..=n {
                for j in 1..=n {
                    assert!((g.get(i, j) - path_green_exact(n, i, j)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_node_green() {
        // one interior node linked to two boundary nodes, conductances 0.7 and 1.3
        let op = generators::path_with(1, |i| if i == 0 { 0.7 } else { 1.3 }, |_| 1.0, |_| 0.0).unwrap();
        let g = dirichlet_green(&op, &Domain::interior(op.graph())).unwrap();
        assert!((g.get(1, 1) * 2.0 - 1.0).abs() < 1e-15);
        // the pole convention makes G independent of m at a single node
        let op = generators::path_with(1, |_| 1.0, |_| 3.0, |_| 0.0).unwrap();
        let g = dirichlet_green(&op, &Domain::interior(op.graph())).unwrap();
        assert!((g.get(1, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn potential_lowers_green() {
        let lap = generators::path(8, 1.0, 0.0).unwrap();
        let pot = generators::path(8, 1.0, 5.0).unwrap();
        let d = Domain::interior(lap.graph());
        let g0 = dirichlet_green(&lap, &d).unwrap();
        let g1 = dirichlet_green(&pot, &d).unwrap();
        assert!(g1.values().zip_map(g0.values(), |a, b| b - a).iter().all(|&v| v > 0.0));
    }

    #[test]
    fn supercritical_is_rejected() {
        let op = generators::path(5, 1.0, -1.0).unwrap();
        let err = dirichlet_green(&op, &Domain::interior(op.graph())).unwrap_err();
        assert!(matches!(err, Error::MaximumPrinciple(_) | Error::NotSubcritical(_)));
        // exactly singular: λ_1 of the 5-node path is 2(1 − cos(π/6))
        let lam = 2.0 * (1.0 - (std::f64::consts::PI / 6.0).cos());
        let op = generators::path(5, 1.0, -lam).unwrap();
        assert!(dirichlet_green(&op, &Domain::interior(op.graph())).is_err());
    }

    #[test]
    fn reproduction_and_symmetry() {
        let op = generators::grid2d(3, 0.2).unwrap();
        let g = dirichlet_green(&op, &Domain::interior(op.graph())).unwrap();
        assert!(reproduction_residual(&op, &g).unwrap() < 1e-10);
        assert!(g.is_symmetric(1e-12));
    }

    #[test]
    fn green_potential_cases() {
        let op = generators::path(5, 1.0, 0.0).unwrap();
        let g = dirichlet_green(&op, &Domain::interior(op.graph())).unwrap();
        let mut delta = vec![0.0; 7];
        delta[2] = 1.0;
        let gm = green_potential(&g, &delta).unwrap();
        assert_eq!(gm, g.column(2));
        let ones = vec![1.0; 7];
        let g1 = green_potential(&g, &ones).unwrap();
        for i in 1..=5 {
            assert!((g1[i] - (i * (6 - i)) as f64 / 2.0).abs() < 1e-12);
        }
        assert!(green_potential(&g, &[0.0; 7]).is_err());
        let mut neg = vec![0.0; 7];
        neg[1] = -1.0;
        assert!(green_potential(&g, &neg).is_err());
    }

    #[test]
    fn torsion_cases() {
        let op = generators::path(1, 1.0, 0.0).unwrap();
        let t = torsion_function(&op, &Domain::interior(op.graph())).unwrap();
        assert!((t.function[1] - 0.5).abs() < 1e-15 && (t.rigidity - 0.5).abs() < 1e-15);
        let op = generators::path(5, 1.0, 0.0).unwrap();
        let t = torsion_function(&op, &Domain::interior(op.graph())).unwrap();
        assert!((t.rigidity - 17.5).abs() < 1e-12);
        // doubling m with a, c fixed: G_1 = K⁻¹ m doubles and T = mᵀK⁻¹m quadruples
        let op2 = generators::path_with(5, |_| 1.0, |_| 2.0, |_| 0.0).unwrap();
        let t2 = torsion_function(&op2, &Domain::interior(op2.graph())).unwrap();
        assert!((t2.rigidity - 4.0 * 17.5).abs() < 1e-11);
    }

    #[test]
    fn duality_for_drift() {
        let op = generators::grid2d_radial_drift(3, -1.0).unwrap();
        let r = check_duality(&op, &Domain::interior(op.graph()), 1e-12).unwrap();
        assert!(r.holds, "{r:?}");
        let g = dirichlet_green(&op, &Domain::interior(op.graph())).unwrap();
        assert!(!g.is_symmetric(1e-6));
    }

    #[test]
    fn exhaustion_validation() {
        let op = generators::path(9, 1.0, 0.0).unwrap();
        let g = op.graph();
        let e = Exhaustion::by_radius(g, 5, &[1, 2, 3]).unwrap();
        assert_eq!(e.len(), 4);
        assert_eq!(e.levels()[0].nodes(), &[4, 5, 6]);
        assert_eq!(e.complement(0).len(), 6);
        assert!(Exhaustion::new(g, vec![vec![4, 5], vec![4, 5]]).is_err());
        assert!(Exhaustion::new(g, vec![vec![2, 5]]).is_err());
        assert!(Exhaustion::by_radius(g, 0, &[1]).is_err());
    }

    #[test]
    fn subcritical_path_converges() {
        let op = generators::path(801, 1.0, 0.1).unwrap();
        let center = generators::path_center(801);
        let e = Exhaustion::by_radius(op.graph(), center, &[2, 25, 50, 100, 200, 300]).unwrap();
        let trace = exhaustion_probe(&op, &e, 1e-8).unwrap();
        assert!(trace.converged, "{trace:?}");
        assert_eq!(trace.trend, ExhaustionTrend::Converged);
        // limit agrees with the whole-line Green function of −Δ + 0.1
        let q = 1.0 + 0.05 - (0.05f64 * 2.0 + 0.05 * 0.05).sqrt();
        let exact = 1.0 / (2.1 - 2.0 * q); // G(0,0) = 1 / (2 + c − 2q)
        let g00 = trace.probe_max.last().unwrap();
        assert!((g00 - exact).abs() < 1e-9, "{g00} vs {exact}");
    }

    #[test]
    fn recurrent_line_blows_up() {
        let op = generators::path(1001, 1.0, 0.0).unwrap();
        let center = generators::path_center(1001);
        let e = Exhaustion::by_radius(op.graph(), center, &[2, 31, 62, 125, 250]).unwrap();
        let trace = exhaustion_probe(&op, &e, 1e-8).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.trend, ExhaustionTrend::LimitBlowup);
        // G_{[c−R, c+R]}(c, c) = (R + 1)/2
        assert!((trace.probe_max[1] - 16.0).abs() < 1e-9);
    }

    #[test]
    fn single_level_matches_dirichlet() {
        let op = generators::grid2d(2, 0.0).unwrap();
        let g = op.graph();
        let e = Exhaustion::new(g, vec![g.interior()]).unwrap();
        let mg = minimal_green_exhaustion(&op, &e, 1e-8).unwrap();
        let direct = dirichlet_green(&op, &Domain::interior(g)).unwrap();
        assert_eq!(mg.green.values(), direct.values());
    }

    #[test]
    fn binary_round_trip() {
        let op = generators::path(4, 1.0, 0.0).unwrap();
        let g = dirichlet_green(&op, &Domain::interior(op.graph())).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf, 1e-8).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 8 * 4 + 8 * 4 + 8 * 16);
        let t = read_green_binary(&buf[..]).unwrap();
        assert_eq!(&t.values, g.values());
        assert_eq!(t.nodes, vec![1, 2, 3, 4]);
        assert_eq!(t.tolerance, 1e-8);
        let mut csv = Vec::new();
        g.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 17);
    }
}
