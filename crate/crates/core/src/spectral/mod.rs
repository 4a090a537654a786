//! Principal eigenvalues, spectra of symmetric truncations, the weighted
//! Green operator and its Perron data, heat traces, the torsion eigenvalue
//! bound, and criticality probes.

mod liouville;

pub use liouville::{liouville_compare, LiouvilleInput, LiouvilleReport, LiouvilleVerdict};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::green::{exhaustion_probe, green_columns, Exhaustion, ExhaustionTrend, GreenMatrix};
use crate::linalg::{general_eigenvalues, symmetric_eigen, DENSE_LIMIT};
use crate::operator::{DiscreteOperator, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMethod {
    /// Generalized symmetric eigenproblem for `(K, diag(W m))`, support reduced
    /// by a Schur complement.
    Pencil,
    /// Symmetric eigenproblem for `D^{1/2} G_SS D^{1/2}` built from Green columns.
    Kernel,
    /// Power iteration with Collatz–Wielandt bounds on `G_SS · D`.
    Perron,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrincipalEigen {
    pub lambda0: f64,
    /// Positive on the domain, zero elsewhere, max-normalized.
    pub ground_state: Vec<f64>,
    pub method: EigenMethod,
    pub iterations: usize,
    /// Bracket on `λ0` (equal ends for the direct methods).
    pub bracket: (f64, f64),
}

/// Relative bracket width at which power iteration stops.
pub const PERRON_RTOL: f64 = 1e-12;
pub const PERRON_MAX_ITER: usize = 200_000;

fn support(op: &DiscreteOperator, w: &[f64], domain: &Domain) -> Result<(Vec<usize>, Vec<f64>)> {
    if w.len() != op.n() {
        return Err(Error::DimensionMismatch { expected: op.n(), got: w.len() });
    }
    if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(invalid("W must be finite and nonnegative"));
    }
    let m = op.measure();
    let (s, d): (Vec<usize>, Vec<f64>) =
        domain.nodes().iter().enumerate().filter(|(_, &x)| w[x] > 0.0).map(|(i, &x)| (i, w[x] * m[x])).unzip();
    if s.is_empty() {
        return Err(invalid("W vanishes on the domain; λ0 is undefined"));
    }
    Ok((s, d))
}

fn normalize_positive(v: &mut [f64]) -> Result<()> {
    let s = v.iter().copied().fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
    if s == 0.0 {
        return Err(Error::NoConvergence("zero eigenvector".into()));
    }
    v.iter_mut().for_each(|x| *x /= s);
    Ok(())
}

fn extend(op: &DiscreteOperator, domain: &Domain, local: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; op.n()];
    for (i, &x) in domain.nodes().iter().enumerate() {
        out[x] = local[i];
    }
    out
}

/// `λ0(P, W, domain)`: pencil for small symmetric problems, Green-kernel
/// eigenproblem for large symmetric ones, Perron iteration otherwise.
pub fn principal_eigenvalue(op: &DiscreteOperator, w: &[f64], domain: &Domain) -> Result<PrincipalEigen> {
    if op.is_symmetric() {
        if domain.len() <= DENSE_LIMIT {
            principal_eigenvalue_pencil(op, w, domain)
        } else {
            principal_eigenvalue_kernel(op, w, domain)
        }
    } else {
        principal_eigenvalue_perron(op, w, domain)
    }
}

/// Smallest eigenvalue of `K φ = λ diag(W m) φ`; never forms `G`.
pub fn principal_eigenvalue_pencil(op: &DiscreteOperator, w: &[f64], domain: &Domain) -> Result<PrincipalEigen> {
    if !op.is_symmetric() {
        return Err(invalid("the pencil route needs a symmetric operator"));
    }
    let (s, d) = support(op, w, domain)?;
    let k = op.form_matrix(domain);
    let n = domain.len();
    let in_s: Vec<bool> = {
        let mut v = vec![false; n];
        s.iter().for_each(|&i| v[i] = true);
        v
    };
    let z: Vec<usize> = (0..n).filter(|&i| !in_s[i]).collect();
    let sub = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |a, b| k[(rows[a], cols[b])]);
    let k_ss = sub(&s, &s);
    let (k_eff, coupling) = if z.is_empty() {
        (k_ss, None)
    } else {
        let lu = sub(&z, &z).lu();
        let k_zs = sub(&z, &s);
        let x = lu
            .solve(&k_zs)
            .ok_or_else(|| Error::NotSubcritical("form matrix is singular off the support of W".into()))?;
        (k_ss - sub(&s, &z) * &x, Some(x))
    };
    let inv_sqrt: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut sym = DMatrix::from_fn(s.len(), s.len(), |a, b| inv_sqrt[a] * k_eff[(a, b)] * inv_sqrt[b]);
    sym = (&sym + sym.transpose()) * 0.5;
    let (vals, vecs) = symmetric_eigen(&sym);
    let lambda0 = vals[0];
    let phi_s: Vec<f64> = (0..s.len()).map(|a| vecs[(a, 0)] * inv_sqrt[a]).collect();
    let mut local = vec![0.0; n];
    for (a, &i) in s.iter().enumerate() {
        local[i] = phi_s[a];
    }
    if let Some(x) = coupling {
        let phi_z = -(x * DVector::from_column_slice(&phi_s));
        for (a, &i) in z.iter().enumerate() {
            local[i] = phi_z[a];
        }
    }
    normalize_positive(&mut local)?;
    Ok(PrincipalEigen {
        lambda0,
        ground_state: extend(op, domain, &local),
        method: EigenMethod::Pencil,
        iterations: 0,
        bracket: (lambda0, lambda0),
    })
}

/// Green columns on the support: rows are all domain nodes.
fn support_columns(op: &DiscreteOperator, domain: &Domain, s: &[usize]) -> Result<DMatrix<f64>> {
    let poles: Vec<usize> = s.iter().map(|&i| domain.nodes()[i]).collect();
    green_columns(op, domain, &poles)
}

fn kernel_ground_state(
    op: &DiscreteOperator,
    domain: &Domain,
    cols: &DMatrix<f64>,
    d: &[f64],
    v: &[f64],
) -> Result<Vec<f64>> {
    let dv: Vec<f64> = v.iter().zip(d).map(|(a, b)| a * b).collect();
    let mut local = (cols * DVector::from_vec(dv)).as_slice().to_vec();
    normalize_positive(&mut local)?;
    Ok(extend(op, domain, &local))
}

/// `λ0 = 1/λ_max(D^{1/2} G_SS D^{1/2})`, needing only `|supp W|` Green columns.
pub fn principal_eigenvalue_kernel(op: &DiscreteOperator, w: &[f64], domain: &Domain) -> Result<PrincipalEigen> {
    if !op.is_symmetric() {
        return Err(invalid("the kernel route needs a symmetric operator"));
    }
    let (s, d) = support(op, w, domain)?;
    let cols = support_columns(op, domain, &s)?;
    let sq: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
    let mut sym = DMatrix::from_fn(s.len(), s.len(), |a, b| sq[a] * cols[(s[a], b)] * sq[b]);
    sym = (&sym + sym.transpose()) * 0.5;
    let (vals, vecs) = symmetric_eigen(&sym);
    let top = *vals.last().expect("nonempty");
    let lambda0 = 1.0 / top;
    let v: Vec<f64> = (0..s.len()).map(|a| vecs[(a, s.len() - 1)] / sq[a]).collect();
    Ok(PrincipalEigen {
        lambda0,
        ground_state: kernel_ground_state(op, domain, &cols, &d, &v)?,
        method: EigenMethod::Kernel,
        iterations: 0,
        bracket: (lambda0, lambda0),
    })
}

#[derive(Debug, Clone)]
pub struct Perron {
    pub rho: f64,
    /// Normalized to unit sum.
    pub vector: Vec<f64>,
    /// Final Collatz–Wielandt bracket on `ρ`.
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Collatz–Wielandt power iteration for a positive matrix.
pub fn perron(a: &DMatrix<f64>) -> Result<Perron> {
    let n = a.nrows();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut best = (0.0_f64, f64::INFINITY);
    let mut stall = 0;
    for it in 1..=PERRON_MAX_ITER {
        let y = a * &x;
        let (lo, hi) = (0..n).fold((f64::INFINITY, 0.0_f64), |(lo, hi), i| {
            let r = y[i] / x[i];
            (lo.min(r), hi.max(r))
        });
        if !(lo > 0.0) || !hi.is_finite() {
            return Err(Error::NoConvergence("Perron iterate lost positivity".into()));
        }
        let improved = lo > best.0 * (1.0 + 1e-15) || hi < best.1 * (1.0 - 1e-15);
        best = (best.0.max(lo), best.1.min(hi));
        let nrm = y.sum();
        x = y / nrm;
        if (best.1 - best.0) <= PERRON_RTOL * best.1 {
            let rho = 0.5 * (best.0 + best.1);
            return Ok(Perron { rho, vector: x.as_slice().to_vec(), bracket: best, iterations: it });
        }
        stall = if improved { 0 } else { stall + 1 };
        if stall > 1000 {
            return Err(Error::NoConvergence(format!(
                "power iteration stagnated with bracket [{:e}, {:e}] after {it} steps",
                best.0, best.1
            )));
        }
    }
    Err(Error::NoConvergence(format!(
        "power iteration bracket [{:e}, {:e}] after {PERRON_MAX_ITER} steps",
        best.0, best.1
    )))
}

/// `λ0 = 1/ρ(𝒢)` by power iteration on the positive kernel `G_SS · diag(W m)`.
pub fn principal_eigenvalue_perron(op: &DiscreteOperator, w: &[f64], domain: &Domain) -> Result<PrincipalEigen> {
    let (s, d) = support(op, w, domain)?;
    let cols = support_columns(op, domain, &s)?;
    let kernel = DMatrix::from_fn(s.len(), s.len(), |a, b| cols[(s[a], b)] * d[b]);
    let Perron { rho, vector: v, bracket: (lo, hi), iterations } = perron(&kernel)?;
    Ok(PrincipalEigen {
        lambda0: 1.0 / rho,
        ground_state: kernel_ground_state(op, domain, &cols, &d, &v)?,
        method: EigenMethod::Perron,
        iterations,
        bracket: (1.0 / hi, 1.0 / lo),
    })
}

/// The weighted Green operator `𝒢 f = Σ_y G(·,y) W(y) f(y) m(y)` and its Perron data.
#[derive(Debug, Clone)]
pub struct WeightedGreenOperator {
    /// `G(x,y) W(y) m(y)` in local indices.
    pub kernel: DMatrix<f64>,
    /// `G(y,x) W(y) m(y)`: the kernel of the operator built from the adjoint.
    pub adjoint_kernel: DMatrix<f64>,
    /// Local indices of `supp W`.
    pub support: Vec<usize>,
    pub spectral_radius: f64,
    /// Right Perron vector on the whole domain (local order, max 1).
    pub perron_vector: Vec<f64>,
    /// Left Perron vector on the whole domain.
    pub adjoint_perron_vector: Vec<f64>,
    /// `1 − |μ_2|/ρ` over the support block.
    pub gap: f64,
    pub support_connected: bool,
}

impl WeightedGreenOperator {
    pub fn lambda0(&self) -> f64 {
        1.0 / self.spectral_radius
    }

    fn block(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        let s = &self.support;
        DMatrix::from_fn(s.len(), s.len(), |a, b| k[(s[a], s[b])])
    }

    /// Eigenvalues of the support block after the diagonal similarity by
    /// `φ_p = φ^{-1}(φ W φ̃)^{1/p}`, sorted by modulus then argument.
    pub fn weighted_eigenvalues(&self, w_local: &[f64], p: f64) -> Result<Vec<(f64, f64)>> {
        let s = &self.support;
        let scale: Vec<f64> = s
            .iter()
            .map(|&i| {
                let phi = self.perron_vector[i];
                let phit = self.adjoint_perron_vector[i];
                let base = phi * w_local[i] * phit;
                let root = if p.is_infinite() { 1.0 } else { base.powf(1.0 / p) };
                root / phi
            })
            .collect();
        let b = self.block(&self.kernel);
        let t = DMatrix::from_fn(s.len(), s.len(), |a, c| scale[a] * b[(a, c)] / scale[c]);
        sorted_eigenvalues(&t)
    }

    /// Largest deviation of the `p ∈ {1, 2, ∞}` similarity spectra from the plain one.
    pub fn p_independence_deviation(&self, w_local: &[f64]) -> Result<f64> {
        let base = sorted_eigenvalues(&self.block(&self.kernel))?;
        let scale = self.spectral_radius;
        let mut worst = 0.0_f64;
        for p in [1.0, 2.0, f64::INFINITY] {
            for (a, b) in self.weighted_eigenvalues(w_local, p)?.iter().zip(&base) {
                worst = worst.max((a.0 - b.0).hypot(a.1 - b.1) / scale);
            }
        }
        Ok(worst)
    }
}

fn sorted_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let mut ev = general_eigenvalues(a)?;
    ev.sort_by(|x, y| {
        let (mx, my) = (x.0.hypot(x.1), y.0.hypot(y.1));
        my.total_cmp(&mx).then(x.1.total_cmp(&y.1))
    });
    Ok(ev)
}

pub fn weighted_green_operator(
    green: &GreenMatrix,
    w: &[f64],
    graph: &crate::operator::Graph,
) -> Result<WeightedGreenOperator> {
    let wl = green.restrict(w)?;
    if wl.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(invalid("W must be finite and nonnegative"));
    }
    let dm: Vec<f64> = wl.iter().zip(green.local_measure()).map(|(w, m)| w * m).collect();
    let support: Vec<usize> = (0..dm.len()).filter(|&i| dm[i] > 0.0).collect();
    if support.is_empty() {
        return Err(invalid("W vanishes on the domain"));
    }
    let g = green.values();
    let n = green.len();
    let kernel = DMatrix::from_fn(n, n, |x, y| g[(x, y)] * dm[y]);
    let adjoint_kernel = DMatrix::from_fn(n, n, |x, y| g[(y, x)] * dm[y]);
    let s = &support;
    let block = |k: &DMatrix<f64>| DMatrix::from_fn(s.len(), s.len(), |a, b| k[(s[a], s[b])]);
    let Perron { rho, vector: v, .. } = perron(&block(&kernel))?;
    let vt = perron(&block(&adjoint_kernel))?.vector;
    let lift = |k: &DMatrix<f64>, v: &[f64]| -> Result<Vec<f64>> {
        let mut full: Vec<f64> =
            (0..n).map(|x| s.iter().zip(v).map(|(&j, vj)| k[(x, j)] * vj).sum::<f64>() / rho).collect();
        normalize_positive(&mut full)?;
        Ok(full)
    };
    let perron_vector = lift(&kernel, &v)?;
    let adjoint_perron_vector = lift(&adjoint_kernel, &vt)?;
    let ev = sorted_eigenvalues(&block(&kernel))?;
    let gap = match ev.get(1) {
        Some(z) => 1.0 - z.0.hypot(z.1) / rho,
        None => 1.0,
    };
    let nodes: Vec<usize> = support.iter().map(|&i| green.domain().nodes()[i]).collect();
    Ok(WeightedGreenOperator {
        kernel,
        adjoint_kernel,
        support_connected: graph.is_connected_subset(&nodes),
        support,
        spectral_radius: rho,
        perron_vector,
        adjoint_perron_vector,
        gap,
    })
}

/// Spectrum of a symmetric truncation with `m`-normalized eigenfunctions.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Column `j` holds `φ_j` in local order with `Σ φ_j² m = 1`.
    pub vectors: DMatrix<f64>,
    pub measure: Vec<f64>,
}

pub fn spectrum(op: &DiscreteOperator, domain: &Domain) -> Result<Spectrum> {
    if !op.is_symmetric() {
        return Err(invalid("spectrum needs a symmetric operator"));
    }
    if domain.len() > DENSE_LIMIT {
        return Err(invalid(format!("dense spectra are limited to {DENSE_LIMIT} nodes")));
    }
    let k = op.form_matrix(domain);
    let m: Vec<f64> = domain.nodes().iter().map(|&x| op.measure()[x]).collect();
    let n = m.len();
    let mut sym = DMatrix::from_fn(n, n, |a, b| k[(a, b)] / (m[a] * m[b]).sqrt());
    sym = (&sym + sym.transpose()) * 0.5;
    let (values, mut vectors) = symmetric_eigen(&sym);
    for a in 0..n {
        vectors.row_mut(a).scale_mut(1.0 / m[a].sqrt());
    }
    Ok(Spectrum { values, vectors, measure: m })
}

impl Spectrum {
    /// `k(x, x, t) = Σ_j e^{−λ_j t} φ_j(x)²` in local order.
    pub fn heat_diagonal(&self, t: f64) -> Vec<f64> {
        let e: Vec<f64> = self.values.iter().map(|l| (-l * t).exp()).collect();
        (0..self.measure.len())
            .map(|a| e.iter().enumerate().map(|(j, ej)| ej * self.vectors[(a, j)].powi(2)).sum())
            .collect()
    }
}

/// `Σ_j e^{−λ_j t}`.
pub fn heat_trace(eigenvalues: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid("t must be positive"));
    }
    Ok(eigenvalues.iter().map(|l| (-l * t).exp()).sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenvalueBound {
    pub c_beta: f64,
    pub c_n: f64,
    pub beta_branch: f64,
    pub n_branch: f64,
    pub bound: f64,
}

/// `C(β) = β^{β/(β+2)}/(β+2) · (2Γ((β+2)/2)/c̃)^{2/(β+2)}` with `0⁰ = 1`.
pub fn torsion_constant(beta: f64, c_hat: f64) -> f64 {
    let e = beta / (beta + 2.0);
    let lead = if beta == 0.0 { 1.0 } else { beta.powf(e) };
    lead / (beta + 2.0) * (2.0 * statrs::function::gamma::gamma((beta + 2.0) / 2.0) / c_hat).powf(2.0 / (beta + 2.0))
}

/// `min{C(β) T^{−2/(β+2)} j^{2/(β+2)}, C(N) T^{−2/(N+2)} j^{2/(N+2)}}`.
pub fn eigenvalue_lower_bound(rigidity: f64, beta: f64, dim: f64, c_hat: f64, j: usize) -> Result<EigenvalueBound> {
    if !(rigidity > 0.0) || !(c_hat > 0.0) || !(beta >= 0.0) || !(dim > 0.0) || j == 0 {
        return Err(invalid("need T > 0, c_hat > 0, β ≥ 0, N > 0 and j ≥ 1"));
    }
    let branch = |b: f64| {
        let c = torsion_constant(b, c_hat);
        (c, c * rigidity.powf(-2.0 / (b + 2.0)) * (j as f64).powf(2.0 / (b + 2.0)))
    };
    let (c_beta, beta_branch) = branch(beta);
    let (c_n, n_branch) = branch(dim);
    Ok(EigenvalueBound { c_beta, c_n, beta_branch, n_branch, bound: beta_branch.min(n_branch) })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub j: usize,
    pub lambda: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TorsionAudit {
    pub rigidity: f64,
    pub c_hat: f64,
    pub beta: f64,
    pub dim: f64,
    pub rows: Vec<BoundRow>,
    pub violations: Vec<usize>,
    pub passes: bool,
}

/// `logspace(−3, 3, 61)`.
pub fn audit_time_grid() -> Vec<f64> {
    (0..61).map(|i| 10f64.powf(-3.0 + 0.1 * i as f64)).collect()
}

/// Estimates `c_hat = sup_{t,x} k(x,x,t) max{t^{N/2}, t^{β/2}}` on the audit
/// grid and checks `λ_j ≥ bound_j` for `j ≥ 1`.
pub fn torsion_bound_audit(op: &DiscreteOperator, domain: &Domain, beta: f64, dim: f64) -> Result<TorsionAudit> {
    let spec = spectrum(op, domain)?;
    let rigidity = crate::green::torsion_function(op, domain)?.rigidity;
    let c_hat = audit_time_grid()
        .iter()
        .map(|&t| {
            let weight = t.powf(dim / 2.0).max(t.powf(beta / 2.0));
            spec.heat_diagonal(t).iter().fold(0.0_f64, |a, &k| a.max(k * weight))
        })
        .fold(0.0, f64::max);
    let rows = (1..spec.values.len())
        .map(|j| {
            let b = eigenvalue_lower_bound(rigidity, beta, dim, c_hat, j)?;
            Ok(BoundRow { j, lambda: spec.values[j], bound: b.bound })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations: Vec<usize> = rows.iter().filter(|r| r.lambda < r.bound).map(|r| r.j).collect();
    Ok(TorsionAudit { rigidity, c_hat, beta, dim, passes: violations.is_empty(), rows, violations })
}

/// `j,lambda,bound` lines.
pub fn bound_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from("j,lambda,bound\n");
    for r in rows {
        out.push_str(&format!("{},{:e},{:e}\n", r.j, r.lambda, r.bound));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalityVerdict {
    Subcritical,
    CriticalTrend,
    Supercritical,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalityProbe {
    pub level_sizes: Vec<usize>,
    pub lambda0: Vec<f64>,
    pub nonincreasing: bool,
    pub verdict: CriticalityVerdict,
    pub green_trend: Option<ExhaustionTrend>,
}

/// `λ0(M_J)` must fall below this for a critical trend.
pub const CRITICAL_LAMBDA: f64 = 1e-3;
/// Each level step must shrink `λ0` at least by this factor.
pub const CRITICAL_STEP_RATIO: f64 = 0.8;

/// `λ0(P, test_weight, M_j)` along an exhaustion whose levels double in radius.
pub fn criticality_probe(
    op: &DiscreteOperator,
    exhaustion: &Exhaustion,
    test_weight: &[f64],
) -> Result<CriticalityProbe> {
    if exhaustion.len() < 3 {
        return Err(invalid("criticality probe needs at least 3 levels"));
    }
    if test_weight.len() != op.n() {
        return Err(Error::DimensionMismatch { expected: op.n(), got: test_weight.len() });
    }
    let first = &exhaustion.levels()[0];
    if let Some(x) = (0..op.n()).find(|&x| test_weight[x] > 0.0 && !first.contains(x)) {
        return Err(invalid(format!("test weight must be supported in the first level (node {x})")));
    }
    let level_sizes: Vec<usize> = exhaustion.levels().iter().map(Domain::len).collect();
    let mut lambda0 = Vec::with_capacity(exhaustion.len());
    for level in exhaustion.levels() {
        match principal_eigenvalue(op, test_weight, level) {
            Ok(e) => lambda0.push(e.lambda0),
            Err(Error::NotSubcritical(_)) | Err(Error::MaximumPrinciple(_)) => {
                return Ok(CriticalityProbe {
                    level_sizes,
                    lambda0,
                    nonincreasing: false,
                    verdict: CriticalityVerdict::Supercritical,
                    green_trend: None,
                })
            }
            Err(e) => return Err(e),
        }
    }
    let nonincreasing = lambda0.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10));
    let shrinking = lambda0.windows(2).all(|w| w[1] <= CRITICAL_STEP_RATIO * w[0]);
    let last = *lambda0.last().expect("nonempty");
    let verdict = if last <= 0.0 {
        CriticalityVerdict::Supercritical
    } else if last < CRITICAL_LAMBDA && shrinking {
        CriticalityVerdict::CriticalTrend
    } else {
        CriticalityVerdict::Subcritical
    };
    let green_trend = exhaustion_probe(op, exhaustion, 1e-6).ok().map(|t| t.trend);
    Ok(CriticalityProbe { level_sizes, lambda0, nonincreasing, verdict, green_trend })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositiveCriticality {
    PositiveCriticalTrend,
    NullCriticalTrend,
    NotApplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct PositiveCriticalityReport {
    /// `Σ_{M_j} φ φ⋆ W m` per level.
    pub partial_sums: Vec<f64>,
    pub verdict: PositiveCriticality,
}

/// Cauchy test on the partial sums: the last relative increment must be below `tol`.
pub fn positive_criticality_check(
    phi: &[f64],
    phi_star: &[f64],
    w: &[f64],
    m: &[f64],
    exhaustion: &Exhaustion,
    tol: f64,
) -> Result<PositiveCriticalityReport> {
    let n = m.len();
    for f in [phi, phi_star, w] {
        if f.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.len() });
        }
    }
    let partial_sums: Vec<f64> = exhaustion
        .levels()
        .iter()
        .map(|l| l.nodes().iter().map(|&x| phi[x] * phi_star[x] * w[x] * m[x]).sum())
        .collect();
    let verdict = match partial_sums.as_slice() {
        [.., a, b] if *b > 0.0 => {
            if (b - a) / b <= tol {
                PositiveCriticality::PositiveCriticalTrend
            } else {
                PositiveCriticality::NullCriticalTrend
            }
        }
        _ => PositiveCriticality::NotApplicable,
    };
    Ok(PositiveCriticalityReport { partial_sums, verdict })
}

/// Composite report for one host.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub lambda0: f64,
    pub eigenvalues: Vec<f64>,
    pub ground_state: Vec<f64>,
    pub criticality_verdict: CriticalityVerdict,
    pub positive_criticality: PositiveCriticality,
}

/// `λ0(P, W)` on the last level, the spectrum when symmetric and small, the
/// criticality verdict for `test_weight`, and the `φ φ⋆ W` partial-sum trend.
pub fn spectral_report(
    op: &DiscreteOperator,
    w: &[f64],
    exhaustion: &Exhaustion,
    test_weight: &[f64],
) -> Result<SpectralReport> {
    let host = exhaustion.levels().last().expect("nonempty");
    let eig = principal_eigenvalue(op, w, host)?;
    let eigenvalues =
        if op.is_symmetric() && host.len() <= DENSE_LIMIT { spectrum(op, host)?.values } else { Vec::new() };
    let probe = criticality_probe(op, exhaustion, test_weight)?;
    let positive_criticality = if exhaustion.len() >= 2 {
        let adj = principal_eigenvalue(&op.adjoint(), w, host)?;
        positive_criticality_check(&eig.ground_state, &adj.ground_state, w, op.measure(), exhaustion, 1e-3)?.verdict
    } else {
        PositiveCriticality::NotApplicable
    };
    Ok(SpectralReport {
        lambda0: eig.lambda0,
        eigenvalues,
        ground_state: eig.ground_state,
        criticality_verdict: probe.verdict,
        positive_criticality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::green::{dirichlet_green, green_potential};
    use std::f64::consts::PI;

    fn ones(op: &DiscreteOperator) -> Vec<f64> {
        (0..op.n()).map(|x| if op.graph().is_boundary(x) { 0.0 } else { 1.0 }).collect()
    }

    fn path_lambda(n: usize, j: usize) -> f64 {
        2.0 * (1.0 - (j as f64 * PI / (n + 1) as f64).cos())
    }

    #[test]
    fn path_principal_eigenvalue_all_routes() {
        let op = generators::path(9, 1.0, 0.0).unwrap();
        let d = Domain::interior(op.graph());
        let w = ones(&op);
        let exact = path_lambda(9, 1);
        for e in [
            principal_eigenvalue_pencil(&op, &w, &d).unwrap(),
            principal_eigenvalue_kernel(&op, &w, &d).unwrap(),
            principal_eigenvalue_perron(&op, &w, &d).unwrap(),
        ] {
            assert!((e.lambda0 - exact).abs() < 1e-10, "{:?} {}", e.method, e.lambda0);
            for i in 1..=9 {
                let s = (i as f64 * PI / 10.0).sin();
                assert!((e.ground_state[i] - s).abs() < 1e-8, "{:?}", e.method);
            }
        }
    }

    #[test]
    fn pencil_with_partial_support() {
        let op = generators::path(7, 1.0, 0.0).unwrap();
        let d = Domain::interior(op.graph());
        let mut w = vec![0.0; op.n()];
        w[4] = 1.0;
        let g = dirichlet_green(&op, &d).unwrap();
        let e = principal_eigenvalue_pencil(&op, &w, &d).unwrap();
        assert!((e.lambda0 - 1.0 / g.get(4, 4)).abs() < 1e-12);
        // ground state is proportional to G(·, 4)
        for x in 1..=7 {
            assert!((e.ground_state[x] - g.get(x, 4) / g.get(4, 4)).abs() < 1e-12);
        }
        assert!(principal_eigenvalue(&op, &vec![0.0; op.n()], &d).is_err());
    }

    #[test]
    fn wmu_has_unit_eigenvalue_and_green_potential_perron_vector() {
        let op = generators::path(5, 1.0, 0.0).unwrap();
        let d = Domain::interior(op.graph());
        let g = dirichlet_green(&op, &d).unwrap();
        let mu = ones(&op);
        let g_mu = green_potential(&g, &mu).unwrap();
        let w: Vec<f64> = (0..op.n()).map(|x| if mu[x] > 0.0 { mu[x] / g_mu[x] } else { 0.0 }).collect();
        let e = principal_eigenvalue(&op, &w, &d).unwrap();
        assert!((e.lambda0 - 1.0).abs() < 1e-10);
        let wg = weighted_green_operator(&g, &w, op.graph()).unwrap();
        assert!((wg.spectral_radius - 1.0).abs() < 1e-10);
        let top = g_mu.iter().copied().fold(0.0, f64::max);
        for (i, &x) in d.nodes().iter().enumerate() {
            assert!((wg.perron_vector[i] - g_mu[x] / top).abs() < 1e-8);
        }
        assert!(wg.gap > 0.0);
        assert!(wg.p_independence_deviation(&g.restrict(&w).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn single_node_weight_is_rank_one() {
        let op = generators::path(6, 1.0, 0.2).unwrap();
        let d = Domain::interior(op.graph());
        let g = dirichlet_green(&op, &d).unwrap();
        let mut w = vec![0.0; op.n()];
        w[2] = 0.7;
        let wg = weighted_green_operator(&g, &w, op.graph()).unwrap();
        assert!((wg.spectral_radius - g.get(2, 2) * 0.7).abs() < 1e-14);
    }

    #[test]
    fn p_independence_nonsymmetric() {
        let op = generators::grid2d_radial_drift(3, -1.0).unwrap();
        let d = Domain::interior(op.graph());
        let g = dirichlet_green(&op, &d).unwrap();
        let w = ones(&op);
        let wg = weighted_green_operator(&g, &w, op.graph()).unwrap();
        assert!(wg.p_independence_deviation(&g.restrict(&w).unwrap()).unwrap() < 1e-10);
        let e = principal_eigenvalue(&op, &w, &d).unwrap();
        assert_eq!(e.method, EigenMethod::Perron);
        assert!((e.lambda0 * wg.spectral_radius - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spectrum_cases() {
        let op = generators::path(5, 1.0, 0.0).unwrap();
        let s = spectrum(&op, &Domain::interior(op.graph())).unwrap();
        for j in 1..=5 {
            assert!((s.values[j - 1] - path_lambda(5, j)).abs() < 1e-12);
        }
        // eigenfunctions are m-orthonormal
        let col = s.vectors.column(0);
        let norm: f64 = col.iter().zip(&s.measure).map(|(v, m)| v * v * m).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        let drift = generators::grid2d_radial_drift(2, -1.0).unwrap();
        assert!(spectrum(&drift, &Domain::interior(drift.graph())).is_err());
    }

    #[test]
    fn diagonal_operator_spectrum() {
        let op = generators::path_with(1, |_| 1.0, |_| 2.0, |_| 0.3).unwrap();
        let s = spectrum(&op, &Domain::interior(op.graph())).unwrap();
        assert!((s.values[0] - (2.0 / 2.0 + 0.3)).abs() < 1e-15);
        assert!((heat_trace(&s.values, 2.0).unwrap() - (-2.0 * s.values[0]).exp()).abs() < 1e-15);
    }

    #[test]
    fn heat_trace_matches_matrix_exponential() {
        let op = generators::path(5, 1.0, 0.0).unwrap();
        let d = Domain::interior(op.graph());
        let s = spectrum(&op, &d).unwrap();
        let k = op.form_matrix(&d);
        for t in [0.1, 1.0, 10.0] {
            let oracle = (k.clone() * -t).exp().trace();
            assert!((heat_trace(&s.values, t).unwrap() - oracle).abs() < 1e-10 * oracle);
        }
        assert!(heat_trace(&s.values, 0.0).is_err());
        let big = heat_trace(&s.values, 50.0).unwrap();
        assert!((big / (-50.0 * s.values[0]).exp() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn heat_diagonal_integrates_to_trace() {
        let op = generators::grid2d(2, 0.0).unwrap();
        let s = spectrum(&op, &Domain::interior(op.graph())).unwrap();
        let k = s.heat_diagonal(0.7);
        let integral: f64 = k.iter().zip(&s.measure).map(|(k, m)| k * m).sum();
        assert!((integral - heat_trace(&s.values, 0.7).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn torsion_constant_hand_values() {
        // β = 2, c̃ = 1: √2/4 · √(2Γ(2)) = 1/2
        assert!((torsion_constant(2.0, 1.0) - 0.5).abs() < 1e-15);
        // β = 0: 0⁰/2 · (2Γ(1)/c̃)^1 = 1/c̃
        assert!((torsion_constant(0.0, 4.0) - 0.25).abs() < 1e-15);
        let b = eigenvalue_lower_bound(1.0, 2.0, 2.0, 1.0, 1).unwrap();
        assert!((b.bound - 0.5).abs() < 1e-15);
        assert_eq!(b.beta_branch, b.n_branch);
        let b2 = eigenvalue_lower_bound(2.0, 2.0, 2.0, 1.0, 1).unwrap();
        assert!((b2.bound / b.bound - 2f64.powf(-0.5)).abs() < 1e-15);
        assert!(eigenvalue_lower_bound(1.0, 2.0, 2.0, 1.0, 0).is_err());
    }

    #[test]
    fn audit_path_passes() {
        let op = generators::path(20, 1.0, 0.0).unwrap();
        let a = torsion_bound_audit(&op, &Domain::interior(op.graph()), 1.0, 1.0).unwrap();
        assert!(a.passes, "{:?}", a.violations);
        assert_eq!(a.rows.len(), 19);
        assert_eq!(a.rows[0].j, 1);
        assert!(bound_csv(&a.rows).starts_with("j,lambda,bound\n1,"));
    }

    #[test]
    fn probe_verdicts_on_small_hosts() {
        let op = generators::path(801, 1.0, 0.1).unwrap();
        let c = generators::path_center(801);
        let e = Exhaustion::by_radius(op.graph(), c, &[2, 25, 50, 100, 200]).unwrap();
        let mut w = vec![0.0; op.n()];
        w[c] = 1.0;
        let p = criticality_probe(&op, &e, &w).unwrap();
        assert_eq!(p.verdict, CriticalityVerdict::Subcritical);
        assert!(p.nonincreasing);
        // G(c,c) → 1/√(0.41) on the infinite line
        assert!((p.lambda0.last().unwrap() - 0.41f64.sqrt()).abs() < 1e-9);
        w[0] = 1.0;
        assert!(criticality_probe(&op, &e, &w).is_err());
    }

    #[test]
    fn positive_criticality_cases() {
        let op = generators::path(101, 1.0, 0.0).unwrap();
        let c = generators::path_center(101);
        let e = Exhaustion::by_radius(op.graph(), c, &[5, 10, 20, 40]).unwrap();
        let one = vec![1.0; op.n()];
        let mut compact = vec![0.0; op.n()];
        compact[c] = 1.0;
        let r = positive_criticality_check(&one, &one, &compact, op.measure(), &e, 1e-12).unwrap();
        assert_eq!(r.verdict, PositiveCriticality::PositiveCriticalTrend);
        let r = positive_criticality_check(&one, &one, &ones(&op), op.measure(), &e, 1e-3).unwrap();
        assert_eq!(r.verdict, PositiveCriticality::NullCriticalTrend);
    }
}
