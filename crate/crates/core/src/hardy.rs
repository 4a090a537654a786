//! Hardy weights built from Green potentials: the optimal `P(v)/v` weight
//! with `v = √(G_φ u)`, the `h_±` supersolution pair, and the critical family
//! `W_μ = μ/G_μ` with its tail diagnostics.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::green::{green_potential, Exhaustion, GreenMatrix};
use crate::operator::DiscreteOperator;

/// Nonnegative node function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Weight {
    pub values: Vec<f64>,
    pub support: Vec<usize>,
}

impl Weight {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(x) = values.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(invalid(format!("weight must be finite and nonnegative (node {x})")));
        }
        let support = values.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(x, _)| x).collect();
        Ok(Self { values, support })
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionKind {
    Optimal,
    Critical,
}

#[derive(Debug, Clone, Serialize)]
pub struct HardyConstruction {
    pub kind: ConstructionKind,
    /// Weight values on all nodes; the optimal construction may be negative
    /// at isolated nodes.
    pub w: Vec<f64>,
    /// `√(G_φ u)` for the optimal weight, `G_μ` for the critical one.
    pub witness: Vec<f64>,
    /// `max |(P − W) witness| / max |P witness|` over interior nodes.
    pub residual: f64,
    pub negative_nodes: Vec<usize>,
    /// True when `W ≥ 0` everywhere.
    pub hardy_trend: bool,
    pub lambda: Option<f64>,
    pub alphas: Option<(f64, f64)>,
}

impl HardyConstruction {
    /// The weight as a [`Weight`]; fails when it has negative entries.
    pub fn weight(&self) -> Result<Weight> {
        Weight::new(self.w.clone())
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        self.alphas = Some(alpha_roots(lambda)?);
        self.lambda = Some(lambda);
        Ok(self)
    }
}

fn check_len(f: &[f64], n: usize) -> Result<()> {
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len() });
    }
    Ok(())
}

/// `max |((P − W) v)(x)|` over the interior, relative to the size of the
/// terms summed at `x`, so cancellation roundoff stays at machine level.
fn identity_residual(op: &DiscreteOperator, w: &[f64], witness: &[f64]) -> Result<f64> {
    let shifted = op.perturbed(1.0, w)?.apply(witness)?;
    let m = op.measure();
    let mut worst = 0.0_f64;
    for x in op.graph().interior() {
        let (diag, off) = op.form_row(x);
        let terms = diag.abs() * witness[x].abs()
            + off.iter().map(|&(y, k)| k.abs() * witness[y].abs()).sum::<f64>()
            + w[x].abs() * m[x] * witness[x].abs();
        let scale = terms / m[x];
        if scale > 0.0 {
            worst = worst.max(shifted[x].abs() / scale);
        }
    }
    Ok(worst)
}

/// `W = P v / v` with `v = √(G_φ u)`; `g_phi` and `u` are node functions that
/// must be positive on the interior.
pub fn optimal_hardy_weight(op: &DiscreteOperator, g_phi: &[f64], u: &[f64]) -> Result<HardyConstruction> {
    let n = op.n();
    check_len(g_phi, n)?;
    check_len(u, n)?;
    let graph = op.graph();
    let v: Vec<f64> =
        g_phi.iter().zip(u).map(|(&g, &u)| if g >= 0.0 && u >= 0.0 { (g * u).sqrt() } else { f64::NAN }).collect();
    if let Some(x) = (0..n).find(|&x| !(v[x] >= 0.0) || (!graph.is_boundary(x) && v[x] == 0.0)) {
        return Err(invalid(format!("√(G_φ u) must be positive on the interior (node {x})")));
    }
    let pv = op.apply(&v)?;
    let w: Vec<f64> = (0..n).map(|x| if graph.is_boundary(x) { 0.0 } else { pv[x] / v[x] }).collect();
    let negative_nodes: Vec<usize> = (0..n).filter(|&x| w[x] < 0.0).collect();
    let residual = identity_residual(op, &w, &v)?;
    Ok(HardyConstruction {
        kind: ConstructionKind::Optimal,
        hardy_trend: negative_nodes.is_empty(),
        w,
        witness: v,
        residual,
        negative_nodes,
        lambda: None,
        alphas: None,
    })
}

/// Roots of `4α(1−α) = λ`, smaller first.
pub fn alpha_roots(lambda: f64) -> Result<(f64, f64)> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(invalid(format!("λ = {lambda} must lie in (0, 1]")));
    }
    let plus = 0.5 * (1.0 + (1.0 - lambda).sqrt());
    // product form avoids cancellation as λ → 0
    let minus = lambda / (4.0 * plus);
    Ok((minus, plus))
}

/// `h_± = u^{1−α_±} G_φ^{α_±}`.
pub fn supersolution_pair(u: &[f64], g_phi: &[f64], lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(g_phi, u.len())?;
    let (am, ap) = alpha_roots(lambda)?;
    if u.iter().chain(g_phi).any(|&v| !(v >= 0.0)) {
        return Err(invalid("u and G_φ must be nonnegative"));
    }
    let h =
        |alpha: f64| -> Vec<f64> { u.iter().zip(g_phi).map(|(&u, &g)| u.powf(1.0 - alpha) * g.powf(alpha)).collect() };
    Ok((h(am), h(ap)))
}

/// `min_x ((P − λW) h)(x) / h(x)` over the interior; nonnegative for a supersolution.
pub fn supersolution_margin(op: &DiscreteOperator, w: &[f64], h: &[f64], lambda: f64) -> Result<f64> {
    let r = op.perturbed(lambda, w)?.apply(h)?;
    Ok(op.graph().interior().iter().map(|&x| r[x] / h[x]).fold(f64::INFINITY, f64::min))
}

/// `W_μ = μ / G_μ` with witness `G_μ`.
pub fn critical_hardy_weight(op: &DiscreteOperator, green: &GreenMatrix, mu: &[f64]) -> Result<HardyConstruction> {
    let g_mu = green_potential(green, mu)?;
    let w: Vec<f64> =
        (0..op.n()).map(|x| if green.domain().contains(x) && mu[x] > 0.0 { mu[x] / g_mu[x] } else { 0.0 }).collect();
    let residual = if green.len() == op.graph().interior().len() {
        identity_residual(op, &w, &g_mu)?
    } else {
        invariance_check(green, &w, &g_mu)?
    };
    Ok(HardyConstruction {
        kind: ConstructionKind::Critical,
        w,
        witness: g_mu,
        residual,
        negative_nodes: Vec::new(),
        hardy_trend: true,
        lambda: None,
        alphas: None,
    })
}

/// `max_x |Σ_y G(x,y) W(y) G_μ(y) m(y) − G_μ(x)| / G_μ(x)` over the domain.
pub fn invariance_check(green: &GreenMatrix, w: &[f64], g_mu: &[f64]) -> Result<f64> {
    let wl = green.restrict(w)?;
    let gl = green.restrict(g_mu)?;
    let f: Vec<f64> = (0..green.len()).map(|i| wl[i] * gl[i] * green.local_measure()[i]).collect();
    let lhs = green.values() * nalgebra::DVector::from_vec(f);
    Ok((0..green.len()).map(|i| (lhs[i] - gl[i]).abs() / gl[i]).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComparisonVerdict {
    ComparableTrend,
    NotComparable,
}

/// `G_μ / G(·, y0)` over one exhaustion shell `M_j ∖ M_{j−1}`.
#[derive(Debug, Clone, Serialize)]
pub struct ShellRatio {
    pub level: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VMuReport {
    /// `V_μ = μ / G(·, y0)` on all nodes.
    pub v_mu: Vec<f64>,
    pub shells: Vec<ShellRatio>,
    /// `min / max` of `V_μ / W_μ` where both are positive.
    pub v_over_w: Option<(f64, f64)>,
    pub verdict: ComparisonVerdict,
}

/// Relative change of the shell maxima tolerated by the comparable verdict.
const SHELL_STABILITY: f64 = 0.1;

pub fn v_mu_comparison(green: &GreenMatrix, mu: &[f64], anchor: usize, exhaustion: &Exhaustion) -> Result<VMuReport> {
    if !green.domain().contains(anchor) {
        return Err(invalid(format!("anchor {anchor} is not in the Green domain")));
    }
    let g_mu = green_potential(green, mu)?;
    let g0 = green.column(anchor);
    let n = green.n_nodes();
    let v_mu: Vec<f64> = (0..n).map(|x| if g0[x] > 0.0 { mu[x] / g0[x] } else { 0.0 }).collect();
    let mut shells = Vec::new();
    for (j, level) in exhaustion.levels().iter().enumerate() {
        let shell: Vec<usize> = level
            .nodes()
            .iter()
            .copied()
            .filter(|&x| j == 0 || !exhaustion.levels()[j - 1].contains(x))
            .filter(|&x| green.domain().contains(x))
            .collect();
        if shell.is_empty() {
            continue;
        }
        let ratios = shell.iter().map(|&x| g_mu[x] / g0[x]);
        let (lo, hi) = ratios.fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        shells.push(ShellRatio { level: j, ratio_min: lo, ratio_max: hi });
    }
    let mut v_over_w: Option<(f64, f64)> = None;
    for x in 0..n {
        if mu[x] > 0.0 && g0[x] > 0.0 {
            let r = v_mu[x] / (mu[x] / g_mu[x]);
            v_over_w = Some(match v_over_w {
                None => (r, r),
                Some((lo, hi)) => (lo.min(r), hi.max(r)),
            });
        }
    }
    let verdict = match shells.len() {
        0 | 1 => ComparisonVerdict::ComparableTrend,
        k => {
            let (a, b) = (shells[k - 2].ratio_max, shells[k - 1].ratio_max);
            if (b / a - 1.0).abs() <= SHELL_STABILITY {
                ComparisonVerdict::ComparableTrend
            } else {
                ComparisonVerdict::NotComparable
            }
        }
    };
    Ok(VMuReport { v_mu, shells, v_over_w, verdict })
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffTails {
    /// `t_k` for `k = 1, …, J−2` (levels whose complement is nonempty).
    pub t: Vec<f64>,
    pub threshold: f64,
    /// Nonincreasing and ending at or below the threshold.
    pub vanishing: bool,
}

/// `t_k = max_{M_k*} G_{μ_k} / G(·, y0)` with `μ_k = μ · 1_{interior ∖ M_{k−1}}`.
pub fn cutoff_tail_norms(
    green: &GreenMatrix,
    mu: &[f64],
    anchor: usize,
    exhaustion: &Exhaustion,
    threshold: f64,
) -> Result<CutoffTails> {
    if exhaustion.len() < 3 {
        return Err(invalid("cutoff tails need at least 3 exhaustion levels"));
    }
    if !green.domain().contains(anchor) {
        return Err(invalid(format!("anchor {anchor} is not in the Green domain")));
    }
    check_len(mu, green.n_nodes())?;
    let g0 = green.column(anchor);
    let t = (1..exhaustion.len() - 1)
        .map(|k| {
            let prev = &exhaustion.levels()[k - 1];
            let mu_k: Vec<f64> = (0..mu.len()).map(|x| if prev.contains(x) { 0.0 } else { mu[x] }).collect();
            if !mu_k.iter().any(|&v| v > 0.0) {
                return Ok(0.0);
            }
            let g_k = green_potential(green, &mu_k)?;
            Ok(exhaustion.complement(k).iter().map(|&x| g_k[x] / g0[x]).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    let monotone = t.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let vanishing = monotone && t.last().is_some_and(|&v| v <= threshold);
    Ok(CutoffTails { t, threshold, vanishing })
}

/// `k,value` lines.
pub fn sequence_csv(name: &str, values: &[f64]) -> String {
    let mut out = format!("k,{name}\n");
    for (k, v) in values.iter().enumerate() {
        out.push_str(&format!("{k},{v:e}\n"));
    }
    out
}
