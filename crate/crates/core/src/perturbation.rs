//! Perturbation classes of a Green function: 3G constants, semismall tails,
//! quasimetric constants, iterated kernels, Neumann series and equivalence
//! ratios.
//!
//! All kernels act in local (domain) indices with the measure taken from the
//! [`GreenMatrix`]. Potentials are host node functions.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::green::{dirichlet_green, Exhaustion, GreenMatrix};
use crate::linalg::general_eigenvalues;
use crate::operator::{DiscreteOperator, Domain};

/// Default exhaustive-scan limit for triple scans.
pub const TRIPLE_CAP: usize = 300;

/// Monte-Carlo triples drawn beyond [`TRIPLE_CAP`].
pub const SAMPLED_TRIPLES: usize = 2_000_000;

/// `diag(V m)` entries in local order.
fn weighted(green: &GreenMatrix, v: &[f64], abs: bool) -> Result<Vec<f64>> {
    let local = green.restrict(v)?;
    Ok(local.iter().zip(green.local_measure()).map(|(&v, &m)| if abs { v.abs() * m } else { v * m }).collect())
}

fn scale_columns(g: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut out = g.clone();
    for (j, &dj) in d.iter().enumerate() {
        out.column_mut(j).scale_mut(dj);
    }
    out
}

/// `C0 = max_{x,y} Σ_z G(x,z)|V(z)|G(z,y) m(z) / G(x,y)`, diagonal pairs included.
pub fn three_g_constant(green: &GreenMatrix, v: &[f64]) -> Result<f64> {
    let d = weighted(green, v, true)?;
    let g = green.values();
    let ggg = scale_columns(g, &d) * g;
    Ok(ggg.zip_map(g, |num, den| num / den).max().max(0.0))
}

/// Trend verdict for a tail sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailVerdict {
    /// Nonincreasing and eventually below the threshold.
    VanishingTrend,
    NotVanishing,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailProfile {
    /// One value per exhaustion level; the last level has an empty complement.
    pub values: Vec<f64>,
    pub threshold: f64,
    pub verdict: TailVerdict,
}

/// Sequences compared to `threshold` are allowed this relative slack when
/// testing monotonicity.
const MONOTONE_SLACK: f64 = 1e-9;

fn tail_verdict(values: &[f64], threshold: f64) -> TailVerdict {
    // the final level has an empty complement, so judge the levels before it
    let body = if values.len() > 1 { &values[..values.len() - 1] } else { values };
    let monotone = body.windows(2).all(|w| w[1] <= w[0] * (1.0 + MONOTONE_SLACK) + f64::MIN_POSITIVE);
    let last = body.last().copied().unwrap_or(0.0);
    if monotone && last <= threshold {
        TailVerdict::VanishingTrend
    } else {
        TailVerdict::NotVanishing
    }
}

/// Anchored one-variable tail
/// `s_n = sup_{y∈M_n*} Σ_{z∈M_n*} G(x0,z)|V(z)|G(z,y) m(z) / G(x0,y)`.
pub fn semismall_profile(
    green: &GreenMatrix,
    v: &[f64],
    exhaustion: &Exhaustion,
    anchor: usize,
    threshold: f64,
) -> Result<TailProfile> {
    let a = green
        .domain()
        .local_index(anchor)
        .ok_or_else(|| invalid(format!("anchor {anchor} is not an interior node of the Green domain")))?;
    let d = weighted(green, v, true)?;
    let g = green.values();
    let values = (0..exhaustion.len())
        .map(|j| {
            let tail: Vec<usize> =
                exhaustion.complement(j).iter().filter_map(|&x| green.domain().local_index(x)).collect();
            tail.iter()
                .map(|&y| {
                    let s: f64 = tail.iter().map(|&z| g[(a, z)] * d[z] * g[(z, y)]).sum();
                    s / g[(a, y)]
                })
                .fold(0.0, f64::max)
        })
        .collect::<Vec<_>>();
    let verdict = tail_verdict(&values, threshold);
    Ok(TailProfile { values, threshold, verdict })
}

/// Two-variable tail `sup_{x,y∈M_n*} Σ_{z∈M_n*} G(x,z)|V(z)|G(z,y) m(z) / G(x,y)`.
pub fn small_profile(green: &GreenMatrix, v: &[f64], exhaustion: &Exhaustion, threshold: f64) -> Result<TailProfile> {
    let d = weighted(green, v, true)?;
    let g = green.values();
    let values = (0..exhaustion.len())
        .map(|j| {
            let tail: Vec<usize> =
                exhaustion.complement(j).iter().filter_map(|&x| green.domain().local_index(x)).collect();
            if tail.is_empty() {
                return 0.0;
            }
            let k = tail.len();
            let gt = DMatrix::from_fn(k, k, |a, b| g[(tail[a], tail[b])]);
            let dt: Vec<f64> = tail.iter().map(|&z| d[z]).collect();
            let num = scale_columns(&gt, &dt) * &gt;
            num.zip_map(&gt, |n, g| n / g).max().max(0.0)
        })
        .collect::<Vec<_>>();
    let verdict = tail_verdict(&values, threshold);
    Ok(TailProfile { values, threshold, verdict })
}

/// Result of a quasimetric triple scan with `d = 1/G`.
#[derive(Debug, Clone, Serialize)]
pub struct QuasimetricScan {
    pub constant: f64,
    pub triples: u64,
    /// Fraction of all ordered triples that were examined.
    pub coverage: f64,
    pub sampled: bool,
}

fn require_symmetric(green: &GreenMatrix) -> Result<()> {
    if !green.is_symmetric(1e-10) {
        return Err(invalid("quasimetric kernels must be symmetric; symmetrize the operator or skip this check"));
    }
    Ok(())
}

/// Smallest `C` with `d(x,y) ≤ C (d(x,z) + d(z,y))`, `d = 1/G`.
pub fn quasimetric_constant(green: &GreenMatrix, seed: u64) -> Result<QuasimetricScan> {
    quasimetric_constant_capped(green, TRIPLE_CAP, seed)
}

pub fn quasimetric_constant_capped(green: &GreenMatrix, cap: usize, seed: u64) -> Result<QuasimetricScan> {
    require_symmetric(green)?;
    let n = green.len();
    let d = green.values().map(|g| 1.0 / g);
    let total = (n as u64).pow(3);
    if n <= cap {
        let constant = (0..n)
            .into_par_iter()
            .map(|x| {
                let mut best = 0.0_f64;
                for y in 0..n {
                    let min_path = (0..n).map(|z| d[(x, z)] + d[(z, y)]).fold(f64::INFINITY, f64::min);
                    best = best.max(d[(x, y)] / min_path);
                }
                best
            })
            .reduce(|| 0.0, f64::max);
        return Ok(QuasimetricScan { constant, triples: total, coverage: 1.0, sampled: false });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut constant = 0.0_f64;
    for _ in 0..SAMPLED_TRIPLES {
        let (x, y, z) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
        constant = constant.max(d[(x, y)] / (d[(x, z)] + d[(z, y)]));
    }
    Ok(QuasimetricScan {
        constant,
        triples: SAMPLED_TRIPLES as u64,
        coverage: SAMPLED_TRIPLES as f64 / total as f64,
        sampled: true,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasimetricCheck {
    pub constant: f64,
    /// `max G(x,z)G(z,y) / (G(x,y) · C (G(x,z) + G(z,y)))`; ≤ 1 means pass.
    pub worst_ratio: f64,
    pub holds: bool,
}

/// Checks `G(x,z)G(z,y)/G(x,y) ≤ C (G(x,z) + G(z,y))` for all triples.
pub fn quasimetric_3g_check(green: &GreenMatrix, constant: f64) -> Result<QuasimetricCheck> {
    require_symmetric(green)?;
    let g = green.values();
    let n = green.len();
    let worst_ratio = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut worst = 0.0_f64;
            for y in 0..n {
                for z in 0..n {
                    let lhs = g[(x, z)] * g[(z, y)] / g[(x, y)];
                    worst = worst.max(lhs / (constant * (g[(x, z)] + g[(z, y)])));
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(QuasimetricCheck { constant, worst_ratio, holds: worst_ratio <= 1.0 + 1e-12 })
}

#[derive(Debug, Clone)]
pub struct IteratedKernels {
    /// `G^{(0)} = G, …, G^{(i_max)}`.
    pub kernels: Vec<DMatrix<f64>>,
    pub c0: f64,
    /// `max_i max_{x,y} |G^{(i)}(x,y)| / (C0^i G(x,y))` over `i ≥ 1`.
    pub worst_bound_ratio: f64,
    pub bound_holds: bool,
}

/// `G^{(i)}(x,y) = Σ_z G(x,z) V(z) G^{(i−1)}(z,y) m(z)` with the bound
/// `|G^{(i)}| ≤ C0^i G` checked entrywise.
pub fn iterated_kernels(green: &GreenMatrix, v: &[f64], i_max: usize) -> Result<IteratedKernels> {
    if i_max == 0 {
        return Err(invalid("i_max must be at least 1"));
    }
    let c0 = three_g_constant(green, v)?;
    let d = weighted(green, v, false)?;
    let g = green.values();
    let gd = scale_columns(g, &d);
    let mut kernels = vec![g.clone()];
    let mut worst = 0.0_f64;
    for i in 1..=i_max {
        let next = &gd * kernels.last().expect("nonempty");
        let bound = c0.powi(i as i32);
        let ratio = next.zip_map(g, |k, g| k.abs() / (bound * g)).max();
        if ratio.is_finite() {
            worst = worst.max(ratio);
        } else if next.amax() > 0.0 {
            worst = f64::INFINITY;
        }
        kernels.push(next);
    }
    Ok(IteratedKernels { kernels, c0, worst_bound_ratio: worst, bound_holds: worst <= 1.0 + 1e-10 })
}

/// Spectral radius of `G·diag(V m)`.
pub fn kernel_spectral_radius(green: &GreenMatrix, v: &[f64]) -> Result<f64> {
    let d = weighted(green, v, false)?;
    let gd = scale_columns(green.values(), &d);
    Ok(general_eigenvalues(&gd)?.iter().map(|z| z.0.hypot(z.1)).fold(0.0, f64::max))
}

#[derive(Debug, Clone)]
pub struct NeumannResult {
    pub h: DMatrix<f64>,
    /// Number of terms `ε^i G^{(i)}`, `i ≥ 1`, added.
    pub iterations: usize,
    /// `(C0|ε|)^{i+1}/(1 − C0|ε|) · sup G`; infinite when `C0|ε| ≥ 1`.
    pub tail_bound: f64,
    pub converged: bool,
    /// `ρ(G·diag(V m))`, the exact convergence gate is `|ε|ρ < 1`.
    pub spectral_radius: f64,
    pub c0: f64,
}

/// Terms beyond which a non-shrinking series is declared divergent.
pub const NEUMANN_MAX_TERMS: usize = 10_000;

/// Partial sums of `Σ ε^i G^{(i)}` until the term falls below `tol · sup G`.
pub fn neumann_series(green: &GreenMatrix, v: &[f64], eps: f64, tol: f64) -> Result<NeumannResult> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let c0 = three_g_constant(green, v)?;
    let spectral_radius = kernel_spectral_radius(green, v)?;
    let g = green.values();
    let sup_g = g.amax();
    let d = weighted(green, v, false)?;
    let egd = scale_columns(g, &d) * eps;
    let mut h = g.clone();
    let mut term = g.clone();
    let mut iterations = 0;
    let mut converged = eps == 0.0 || d.iter().all(|&x| x == 0.0);
    let gated = eps.abs() * spectral_radius < 1.0;
    while !converged && iterations < NEUMANN_MAX_TERMS {
        term = &egd * &term;
        h += &term;
        iterations += 1;
        let size = term.amax();
        if !size.is_finite() || size > 1e8 * sup_g {
            break;
        }
        if size < tol * sup_g {
            converged = gated;
            break;
        }
    }
    let q = c0 * eps.abs();
    let tail_bound = if q < 1.0 { q.powi(iterations as i32 + 1) / (1.0 - q) * sup_g } else { f64::INFINITY };
    Ok(NeumannResult { h, iterations, tail_bound, converged, spectral_radius, c0 })
}

/// `max |H − G − ε H diag(V m) G| / sup G`.
pub fn resolvent_check(green: &GreenMatrix, h: &DMatrix<f64>, v: &[f64], eps: f64) -> Result<f64> {
    if h.shape() != green.values().shape() {
        return Err(Error::DimensionMismatch { expected: green.len(), got: h.nrows() });
    }
    let d = weighted(green, v, false)?;
    let g = green.values();
    let residual = h - g - scale_columns(h, &d) * g * eps;
    Ok(residual.amax() / g.amax())
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub lower_constant: f64,
    pub upper_constant: f64,
    /// `min (G_pert − lower·G)/G`; nonnegative when the lower bound holds.
    pub lower_margin: f64,
    /// `min (upper·G − G_pert)/G`; nonnegative when the upper bound holds.
    pub upper_margin: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

/// Two-sided bound `(1−2|ε|C0)/(1−|ε|C0) G ≤ G_pert ≤ G/(1−|ε|C0)`.
pub fn sandwich_check(green: &GreenMatrix, perturbed: &GreenMatrix, eps: f64, c0: f64) -> Result<SandwichReport> {
    let q = eps.abs() * c0;
    if q >= 0.5 {
        return Err(invalid(format!("|ε|·C0 = {q} must be below 1/2")));
    }
    if perturbed.domain() != green.domain() {
        return Err(invalid("Green tables live on different domains"));
    }
    let lower_constant = (1.0 - 2.0 * q) / (1.0 - q);
    let upper_constant = 1.0 / (1.0 - q);
    let g = green.values();
    let gp = perturbed.values();
    let lower_margin = gp.zip_map(g, |p, g| (p - lower_constant * g) / g).min();
    let upper_margin = gp.zip_map(g, |p, g| (upper_constant * g - p) / g).min();
    let slack = -1e-12;
    Ok(SandwichReport {
        lower_constant,
        upper_constant,
        lower_margin,
        upper_margin,
        lower_holds: lower_margin >= slack,
        upper_holds: upper_margin >= slack,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    /// `min (G_{P−ε2 W} − G_{P−ε1 W}) / G_{P−ε1 W}`.
    pub worst_margin: f64,
    pub holds: bool,
}

/// Checks `G_{P−ε1 W} ≤ G_{P−ε2 W}` for `ε1 ≤ ε2`.
pub fn monotonicity_in_eps(
    op: &DiscreteOperator,
    w: &[f64],
    eps1: f64,
    eps2: f64,
    domain: &Domain,
) -> Result<MonotonicityReport> {
    if eps1 > eps2 {
        return Err(invalid("ε1 must not exceed ε2"));
    }
    if w.iter().any(|&x| x < 0.0) {
        return Err(invalid("W must be nonnegative"));
    }
    let g1 = dirichlet_green(&op.perturbed(eps1, w)?, domain)?;
    let g2 = dirichlet_green(&op.perturbed(eps2, w)?, domain)?;
    let worst_margin = g2.values().zip_map(g1.values(), |b, a| (b - a) / a).min();
    Ok(MonotonicityReport { worst_margin, holds: worst_margin >= -1e-12 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivalenceVerdict {
    Computed,
    /// `P − λW` has no positive Green function on the domain.
    NotSubcritical,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalencePoint {
    pub lambda: f64,
    /// `max (G_{P−λW}/G) / min (G_{P−λW}/G)`.
    pub ratio: Option<f64>,
    pub verdict: EquivalenceVerdict,
}

/// Equivalence ratios of `G_{P−λW}` against `G_P` along `lambdas`.
pub fn equivalence_interval(
    op: &DiscreteOperator,
    w: &[f64],
    lambdas: &[f64],
    domain: &Domain,
) -> Result<Vec<EquivalencePoint>> {
    if w.iter().any(|&x| x < 0.0) {
        return Err(invalid("W must be nonnegative"));
    }
    let base = dirichlet_green(op, domain)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let perturbed = op.perturbed(lambda, w)?;
            match dirichlet_green(&perturbed, domain) {
                Ok(gl) => {
                    let q = gl.values().zip_map(base.values(), |a, b| a / b);
                    Ok(EquivalencePoint {
                        lambda,
                        ratio: Some(q.max() / q.min()),
                        verdict: EquivalenceVerdict::Computed,
                    })
                }
                Err(Error::NotSubcritical(_)) | Err(Error::MaximumPrinciple(_)) => {
                    Ok(EquivalencePoint { lambda, ratio: None, verdict: EquivalenceVerdict::NotSubcritical })
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// `lambda,ratio,verdict` lines.
pub fn equivalence_csv(points: &[EquivalencePoint]) -> String {
    let mut out = String::from("lambda,ratio,verdict\n");
    for p in points {
        let ratio = p.ratio.map(|r| format!("{r:e}")).unwrap_or_default();
        let verdict = match p.verdict {
            EquivalenceVerdict::Computed => "computed",
            EquivalenceVerdict::NotSubcritical => "not-subcritical",
        };
        out.push_str(&format!("{:e},{ratio},{verdict}\n", p.lambda));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SchurReport {
    /// `√(A·B)` when the row and column inequalities hold.
    pub certified_bound: Option<f64>,
    /// `max_x (E0+δ) Σ_y G(x,y) u(y) W(y) m(y) / u(x)` over the support of W.
    pub row_constant: f64,
    pub column_constant: f64,
    /// `(E0+δ)/λ0`, the bound claimed by the test inequalities.
    pub hypothesis_bound: f64,
    /// `(E0+δ)/λ0 − A`; nonnegative when the row inequality holds.
    pub row_margin: f64,
    pub column_margin: f64,
    /// Operator norm of `T` on `L²(W dm)` from singular values.
    pub true_norm: f64,
}

/// Schur-test bound for `T f = (E0+δ) ∫ G(·,y) f(y) W(y) dm(y)` on `L²(W dm)`.
pub fn schur_bound(
    green: &GreenMatrix,
    w: &[f64],
    u: &[f64],
    e0: f64,
    delta: f64,
    lambda0: f64,
) -> Result<SchurReport> {
    if !(lambda0 > 0.0) {
        return Err(invalid("λ0 must be positive"));
    }
    if w.iter().any(|&x| x < 0.0) {
        return Err(invalid("W must be nonnegative"));
    }
    let s = e0 + delta;
    let hypothesis_bound = s / lambda0;
    let dw = weighted(green, w, false)?;
    let ul = green.restrict(u)?;
    let support: Vec<usize> = (0..dw.len()).filter(|&i| dw[i] > 0.0).collect();
    if support.is_empty() {
        return Ok(SchurReport {
            certified_bound: Some(0.0),
            row_constant: 0.0,
            column_constant: 0.0,
            hypothesis_bound,
            row_margin: hypothesis_bound,
            column_margin: hypothesis_bound,
            true_norm: 0.0,
        });
    }
    if support.iter().any(|&i| !(ul[i] > 0.0)) {
        return Err(invalid("test function u must be positive on the support of W"));
    }
    let g = green.values();
    let row_constant = support
        .iter()
        .map(|&x| s * support.iter().map(|&y| g[(x, y)] * ul[y] * dw[y]).sum::<f64>() / ul[x])
        .fold(0.0, f64::max);
    let column_constant = support
        .iter()
        .map(|&y| s * support.iter().map(|&x| ul[x] * g[(x, y)] * dw[x]).sum::<f64>() / ul[y])
        .fold(0.0, f64::max);
    let k = support.len();
    let sq: Vec<f64> = support.iter().map(|&i| dw[i].sqrt()).collect();
    let t = DMatrix::from_fn(k, k, |a, b| s * sq[a] * g[(support[a], support[b])] * sq[b]);
    let true_norm = crate::linalg::spectral_norm(&t);
    let tol = 1e-10 * hypothesis_bound;
    let row_margin = hypothesis_bound - row_constant;
    let column_margin = hypothesis_bound - column_constant;
    let certified_bound =
        (row_margin >= -tol && column_margin >= -tol).then(|| (row_constant * column_constant).sqrt());
    Ok(SchurReport {
        certified_bound,
        row_constant,
        column_constant,
        hypothesis_bound,
        row_margin,
        column_margin,
        true_norm,
    })
}

/// Classification thresholds and flags for a potential.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbationProfile {
    pub c0: f64,
    pub semismall_tail: TailProfile,
    pub small_tail: TailProfile,
    pub quasimetric_c: Option<f64>,
    pub g_bounded: bool,
    pub g_semibounded: bool,
    pub small: bool,
    pub semismall: bool,
}

pub fn perturbation_profile(
    green: &GreenMatrix,
    v: &[f64],
    exhaustion: &Exhaustion,
    anchor: usize,
    threshold: f64,
    seed: u64,
) -> Result<PerturbationProfile> {
    let c0 = three_g_constant(green, v)?;
    let semismall_tail = semismall_profile(green, v, exhaustion, anchor, threshold)?;
    let small_tail = small_profile(green, v, exhaustion, threshold)?;
    let quasimetric_c =
        if green.is_symmetric(1e-10) { Some(quasimetric_constant(green, seed)?.constant) } else { None };
    let g_semibounded = semismall_tail.values.first().is_some_and(|s| s.is_finite());
    Ok(PerturbationProfile {
        c0,
        g_bounded: c0.is_finite(),
        g_semibounded,
        small: small_tail.verdict == TailVerdict::VanishingTrend,
        semismall: semismall_tail.verdict == TailVerdict::VanishingTrend,
        semismall_tail,
        small_tail,
        quasimetric_c,
    })
}

/// Direct inverse of the form matrix of `P − εV`, as an oracle for the series.
pub fn direct_perturbed_green(op: &DiscreteOperator, v: &[f64], eps: f64, domain: &Domain) -> Result<GreenMatrix> {
    dirichlet_green(&op.perturbed(eps, v)?, domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::green::dirichlet_green;
    use crate::instances::random_subcritical;

    fn path_green(n: usize) -> (DiscreteOperator, GreenMatrix) {
        let op = generators::path(n, 1.0, 0.0).unwrap();
        let g = dirichlet_green(&op, &Domain::interior(op.graph())).unwrap();
        (op, g)
    }

    /// O(n³) triple loop, independent of the matrix-product route.
    fn brute_c0(g: &GreenMatrix, v: &[f64]) -> f64 {
        let nodes = g.domain().nodes();
        let mut best = 0.0_f64;
        for &x in nodes {
            for &y in nodes {
                let s: f64 = nodes
                    .iter()
                    .map(|&z| {
                        let m = g.local_measure()[g.domain().local_index(z).unwrap()];
                        g.get(x, z) * v[z].abs() * g.get(z, y) * m
                    })
                    .sum();
                best = best.max(s / g.get(x, y));
            }
        }
        best
    }

    #[test]
    fn c0_zero_potential() {
        let (_, g) = path_green(5);
        assert_eq!(three_g_constant(&g, &[0.0; 7]).unwrap(), 0.0);
    }

    #[test]
    fn c0_path_matches_brute_force() {
        let (_, g) = path_green(5);
        let mut v = vec![1.0; 7];
        v[0] = 0.0;
        v[6] = 0.0;
        let c0 = three_g_constant(&g, &v).unwrap();
        assert!((c0 - brute_c0(&g, &v)).abs() < 1e-12);
        // 35/6, cross-checked with an independent numpy computation
        assert!((c0 - 35.0 / 6.0).abs() < 1e-12, "{c0}");
    }

    #[test]
    fn c0_point_potential() {
        let (_, g) = path_green(5);
        let mut v = vec![0.0; 7];
        v[2] = 0.7;
        let c0 = three_g_constant(&g, &v).unwrap();
        let mut expect = 0.0_f64;
        for x in 1..=5 {
            for y in 1..=5 {
                expect = expect.max(g.get(x, 2) * 0.7 * g.get(2, y) / g.get(x, y));
            }
        }
        assert!((c0 - expect).abs() < 1e-14);
    }

    #[test]
    fn c0_random_matches_brute_force() {
        for seed in 0..5 {
            let inst = random_subcritical(seed, 8, true);
            let g = dirichlet_green(&inst.op, &Domain::interior(inst.op.graph())).unwrap();
            let c0 = three_g_constant(&g, &inst.v).unwrap();
            assert!((c0 - brute_c0(&g, &inst.v)).abs() < 1e-10 * c0);
        }
    }

    #[test]
    fn compact_potential_has_zero_semismall_tail() {
        let op = generators::path(41, 1.0, 0.1).unwrap();
        let g = dirichlet_green(&op, &Domain::interior(op.graph())).unwrap();
        let c = generators::path_center(41);
        let e = Exhaustion::by_radius(op.graph(), c, &[3, 8, 12, 16]).unwrap();
        let mut v = vec![0.0; op.n()];
        for x in c - 2..=c + 2 {
            v[x] = 1.0;
        }
        let p = semismall_profile(&g, &v, &e, c, 1e-6).unwrap();
        assert!(p.values.iter().all(|&s| s == 0.0));
        assert_eq!(p.verdict, TailVerdict::VanishingTrend);
        assert!(semismall_profile(&g, &v, &e, 0, 1e-6).is_err());
    }

    #[test]
    fn constant_potential_semismall_decreasing() {
        let op = generators::path(81, 1.0, 0.1).unwrap();
        let g = dirichlet_green(&op, &Domain::interior(op.graph())).unwrap();
        let c = generators::path_center(81);
        let e = Exhaustion::by_radius(op.graph(), c, &[5, 10, 20, 30, 35]).unwrap();
        let v: Vec<f64> = (0..op.n()).map(|x| if op.graph().is_boundary(x) { 0.0 } else { 1.0 }).collect();
        let p = semismall_profile(&g, &v, &e, c, f64::INFINITY).unwrap();
        for w in p.values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{:?}", p.values);
        }
        let small = small_profile(&g, &v, &e, f64::INFINITY).unwrap();
        assert!(small.values[0] >= p.values[0] - 1e-12);
    }

    #[test]
    fn quasimetric_two_nodes() {
        let (_, g) = path_green(2);
        let scan = quasimetric_constant(&g, 0).unwrap();
        let d = |x, y| 1.0 / g.get(x, y);
        let mut brute = 0.0_f64;
        for x in 1..=2 {
            for y in 1..=2 {
                for z in 1..=2 {
                    brute = brute.max(d(x, y) / (d(x, z) + d(z, y)));
                }
            }
        }
        assert_eq!(scan.triples, 8);
        assert!((scan.constant - brute).abs() < 1e-15);
        let check = quasimetric_3g_check(&g, scan.constant).unwrap();
        assert!(check.holds);
        assert!((check.worst_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quasimetric_path_golden() {
        let (_, g) = path_green(5);
        let scan = quasimetric_constant(&g, 0).unwrap();
        // attained at the two ends with z at the centre
        assert!((scan.constant - 1.5).abs() < 1e-12, "{}", scan.constant);
        assert!(quasimetric_3g_check(&g, scan.constant).unwrap().holds);
        let sampled = quasimetric_constant_capped(&g, 2, 1).unwrap();
        assert!(sampled.sampled && sampled.constant <= scan.constant + 1e-15);
    }

    #[test]
    fn quasimetric_rejects_nonsymmetric() {
        let op = generators::grid2d_radial_drift(2, -1.0).unwrap();
        let g = dirichlet_green(&op, &Domain::interior(op.graph())).unwrap();
        assert!(quasimetric_constant(&g, 0).is_err());
    }

    #[test]
    fn iterated_kernel_cases() {
        let (_, g) = path_green(3);
        let zero = iterated_kernels(&g, &[0.0; 5], 3).unwrap();
        assert!(zero.kernels[1..].iter().all(|k| k.amax() == 0.0));
        let mut point = vec![0.0; 5];
        point[2] = 0.5;
        let it = iterated_kernels(&g, &point, 1).unwrap();
        for x in 1..=3 {
            for y in 1..=3 {
                let expect = g.get(x, 2) * 0.5 * g.get(2, y);
                assert!((it.kernels[1][(x - 1, y - 1)] - expect).abs() < 1e-15);
            }
        }
        let mut ones = vec![1.0; 5];
        ones[0] = 0.0;
        ones[4] = 0.0;
        let it = iterated_kernels(&g, &ones, 5).unwrap();
        let gd = g.values().clone();
        let mut power = g.values().clone();
        for i in 1..=5 {
            power = &gd * power;
            assert!((&it.kernels[i] - &power).amax() < 1e-12 * power.amax());
        }
        assert!(it.bound_holds);
    }

    #[test]
    fn neumann_cases() {
        let (op, g) = path_green(5);
        let mut v = vec![1.0; 7];
        v[0] = 0.0;
        v[6] = 0.0;
        let r = neumann_series(&g, &v, 0.0, 1e-14).unwrap();
        assert_eq!(r.h, *g.values());
        assert!(r.converged);
        let rho = r.spectral_radius;
        let lam1 = 2.0 * (1.0 - (std::f64::consts::PI / 6.0).cos());
        assert!((rho - 1.0 / lam1).abs() < 1e-10);
        let d = Domain::interior(op.graph());
        let eps = 0.5 / rho;
        let r = neumann_series(&g, &v, eps, 1e-15).unwrap();
        let direct = direct_perturbed_green(&op, &v, eps, &d).unwrap();
        assert!(r.converged);
        assert!((&r.h - direct.values()).amax() / g.values().amax() < 1e-10);
        let bad = neumann_series(&g, &v, 1.2 / rho, 1e-14).unwrap();
        assert!(!bad.converged);
    }

    #[test]
    fn resolvent_cases() {
        let (op, g) = path_green(5);
        let mut v = vec![0.5; 7];
        v[0] = 0.0;
        v[6] = 0.0;
        assert_eq!(resolvent_check(&g, g.values(), &v, 0.0).unwrap(), 0.0);
        let direct = direct_perturbed_green(&op, &v, 0.3, &Domain::interior(op.graph())).unwrap();
        assert!(resolvent_check(&g, direct.values(), &v, 0.3).unwrap() < 1e-12);
    }

    #[test]
    fn sandwich_cases() {
        let (op, g) = path_green(5);
        let mut v = vec![1.0; 7];
        v[0] = 0.0;
        v[6] = 0.0;
        let c0 = three_g_constant(&g, &v).unwrap();
        let r = sandwich_check(&g, &g, 0.0, c0).unwrap();
        assert!(r.lower_holds && r.upper_holds);
        assert_eq!(r.lower_constant, 1.0);
        let d = Domain::interior(op.graph());
        for eps in [0.25 / c0, 0.4999 / c0] {
            let gp = direct_perturbed_green(&op, &v, eps, &d).unwrap();
            let r = sandwich_check(&g, &gp, eps, c0).unwrap();
            assert!(r.lower_holds && r.upper_holds, "{r:?}");
            assert!(r.lower_constant > 0.0);
        }
        assert!(sandwich_check(&g, &g, 0.6 / c0, c0).is_err());
    }

    #[test]
    fn monotonicity_cases() {
        let op = generators::path(12, 1.0, 0.0).unwrap();
        let d = Domain::interior(op.graph());
        let w: Vec<f64> = (0..op.n()).map(|x| if op.graph().is_boundary(x) { 0.0 } else { 1.0 }).collect();
        let lam0 = 2.0 * (1.0 - (std::f64::consts::PI / 13.0).cos());
        let same = monotonicity_in_eps(&op, &w, 0.01, 0.01, &d).unwrap();
        assert_eq!(same.worst_margin, 0.0);
        let r = monotonicity_in_eps(&op, &w, 0.1 * lam0, 0.2 * lam0, &d).unwrap();
        assert!(r.holds && r.worst_margin > 0.0);
    }

    #[test]
    fn equivalence_cases() {
        let op = generators::path(20, 1.0, 0.0).unwrap();
        let d = Domain::interior(op.graph());
        let w: Vec<f64> = (0..op.n()).map(|x| if op.graph().is_boundary(x) { 0.0 } else { 1.0 }).collect();
        let lam0 = 2.0 * (1.0 - (std::f64::consts::PI / 21.0).cos());
        let pts = equivalence_interval(&op, &w, &[0.0, 0.9 * lam0, 1.1 * lam0], &d).unwrap();
        assert_eq!(pts[0].ratio, Some(1.0));
        assert!(pts[1].ratio.unwrap() > 1.0);
        assert_eq!(pts[2].verdict, EquivalenceVerdict::NotSubcritical);
        assert!(equivalence_csv(&pts).lines().count() == 4);
    }

    #[test]
    fn schur_cases() {
        let (op, g) = path_green(5);
        let zero = schur_bound(&g, &[0.0; 7], &[1.0; 7], 0.1, 0.1, 1.0).unwrap();
        assert_eq!(zero.certified_bound, Some(0.0));
        assert_eq!(zero.true_norm, 0.0);
        let mut w = vec![1.0; 7];
        w[0] = 0.0;
        w[6] = 0.0;
        let lam0 = 2.0 * (1.0 - (std::f64::consts::PI / 6.0).cos());
        let u: Vec<f64> = (0..7).map(|i| (i as f64 * std::f64::consts::PI / 6.0).sin()).collect();
        let r = schur_bound(&g, &w, &u, 0.5 * lam0, 0.1 * lam0, lam0).unwrap();
        let cert = r.certified_bound.expect("hypotheses hold for the ground state");
        assert!(cert >= r.true_norm * (1.0 - 1e-12));
        assert!(cert < 1.0);
        assert!((r.true_norm - 0.6).abs() < 1e-10);
        // a poor test function breaks the row inequality
        let bad: Vec<f64> = (0..7).map(|i| if i == 3 { 1.0 } else { 0.01 }).collect();
        let r = schur_bound(&g, &w, &bad, 0.5 * lam0, 0.1 * lam0, lam0).unwrap();
        assert!(r.certified_bound.is_none() && r.row_margin < 0.0);
        let _ = op;
    }
}
