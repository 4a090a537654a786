//! Radial continuum models: hyperbolic space `ℍ^N` and two planar operators
//! on `ℝ² ∖ B(0,1)`.
//!
//! The hyperbolic Green profile `G̃(r) = ∫_r^∞ sinh^{−(N−1)}` is evaluated
//! with `t = e^{−s}` and `τ = t e^r`, which maps the tail onto `[0, 1]`:
//! `G̃(r) = e^{−(N−1)r} ∫_0^1 2^{N−1} τ^{N−2} (1 − e^{−2r}τ²)^{−(N−1)} dτ`.

pub mod quadrature;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::hardy::alpha_roots;

/// Relative accuracy requested from the quadrature.
pub const QUAD_RTOL: f64 = 1e-13;

/// Finite-difference step of the residual checks.
pub const FD_STEP: f64 = 1e-3;

fn check_hyperbolic(dim: usize, r: f64) -> Result<()> {
    if dim < 2 {
        return Err(invalid(format!("dimension {dim} must be at least 2")));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid(format!("radius {r} must be positive and finite")));
    }
    Ok(())
}

/// `∫_0^1 2^{N−1} τ^{N−2} (1 − qτ²)^{−(N−1)} extra(qτ²) dτ` with `q = e^{−2r}`.
fn scaled_tail(dim: usize, r: f64, extra: impl Fn(f64) -> f64) -> Result<f64> {
    let k = (dim - 1) as i32;
    let lead = 2f64.powi(k);
    let integrand = |tau: f64| {
        if tau == 0.0 {
            return if dim == 2 { lead * extra(0.0) } else { 0.0 };
        }
        // 1 − qτ² without cancellation for small r and τ near 1
        let log_qt2 = -2.0 * r + 2.0 * tau.ln();
        let one_minus = -log_qt2.exp_m1();
        let qt2 = log_qt2.exp();
        lead * tau.powi(k - 1) * one_minus.powi(-k) * extra(qt2)
    };
    Ok(quadrature::integrate(integrand, 0.0, 1.0, 0.0, QUAD_RTOL)?.0)
}

/// `G̃(r) = ∫_r^∞ sinh^{−(N−1)}(s) ds`.
pub fn hyperbolic_green(dim: usize, r: f64) -> Result<f64> {
    check_hyperbolic(dim, r)?;
    Ok((-((dim - 1) as f64) * r).exp() * scaled_tail(dim, r, |_| 1.0)?)
}

/// `δ(r) = D(r)/G̃(r)` with `D(r) = ∫_r^∞ sinh^{−(N−1)}(s)(coth s − 1) ds`.
///
/// Since `sinh^{−(N−1)}(r) = (N−1)(G̃ + D)`, the Hardy weight is
/// `W = (N−1)²/4 (1 + δ)²` and its excess over `(N−1)²/4` needs no subtraction.
fn excess_ratio(dim: usize, r: f64) -> Result<f64> {
    let i = scaled_tail(dim, r, |_| 1.0)?;
    let d = scaled_tail(dim, r, |qt2| 2.0 * qt2 / (1.0 - qt2))?;
    Ok(d / i)
}

/// `W(r) = (1/4) sinh^{−2(N−1)}(r) / G̃(r)²`.
pub fn hyperbolic_hardy(dim: usize, r: f64) -> Result<f64> {
    check_hyperbolic(dim, r)?;
    let lead = ((dim - 1) as f64).powi(2) / 4.0;
    Ok(lead * (1.0 + excess_ratio(dim, r)?).powi(2))
}

/// `W(r) − (N−1)²/4`, free of cancellation.
pub fn hyperbolic_hardy_excess(dim: usize, r: f64) -> Result<f64> {
    check_hyperbolic(dim, r)?;
    let lead = ((dim - 1) as f64).powi(2) / 4.0;
    let delta = excess_ratio(dim, r)?;
    Ok(lead * delta * (2.0 + delta))
}

/// `((N−1)²/4, (N−1)³/(N+1))`.
pub fn hyperbolic_asymptotic_coeffs(dim: usize) -> (f64, f64) {
    let k = (dim - 1) as f64;
    (k * k / 4.0, k.powi(3) / (dim + 1) as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionFit {
    pub dim: usize,
    pub r_range: (f64, f64),
    /// Least-squares constant fitted to `e^{2r}(W − (N−1)²/4)`.
    pub fitted: f64,
    pub expected: f64,
    pub relative_error: f64,
    /// Largest relative spread of the samples around the fit.
    pub spread: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Fits `e^{2r}(W(r) − (N−1)²/4)` to a constant on `points` equispaced radii.
pub fn fit_expansion(dim: usize, r_range: (f64, f64), points: usize) -> Result<ExpansionFit> {
    let (lo, hi) = r_range;
    if !(lo >= 6.0 && hi <= 20.0 && lo < hi) || points < 2 {
        return Err(invalid(format!(
            "fit range [{lo}, {hi}] must be a proper subinterval of [6, 20] with at least 2 points"
        )));
    }
    let samples = (0..points)
        .into_par_iter()
        .map(|i| {
            let r = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            Ok((r, (2.0 * r).exp() * hyperbolic_hardy_excess(dim, r)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let fitted = samples.iter().map(|s| s.1).sum::<f64>() / points as f64;
    let spread = samples.iter().map(|s| (s.1 / fitted - 1.0).abs()).fold(0.0, f64::max);
    let expected = hyperbolic_asymptotic_coeffs(dim).1;
    Ok(ExpansionFit {
        dim,
        r_range,
        fitted,
        expected,
        relative_error: (fitted / expected - 1.0).abs(),
        spread,
        samples,
    })
}

/// Radial model operators `f ↦ −f'' − a(r) f'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadialModel {
    /// Radial Laplace–Beltrami part on `ℍ^N`: `a = (N−1) coth r`.
    Hyperbolic { dim: usize },
    /// `−Δ` on `ℝ²` with potential weight `1/r²`: `a = 1/r`.
    PlanarInverseSquare { lambda: f64 },
    /// `−Δ − b χ_{r>1} r⁻¹ ∂_r` on `ℝ²`: `a = (1 + b χ_{r>1})/r`.
    PlanarDrift { b: f64, lambda: f64 },
}

impl RadialModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Hyperbolic { dim } if dim < 2 => Err(invalid("ℍ^N needs N ≥ 2")),
            Self::PlanarInverseSquare { lambda } if !(lambda < 0.0) => Err(invalid("planar model needs λ < 0")),
            Self::PlanarDrift { b, lambda } if !(lambda < 0.0) || !(b < 0.0) => {
                Err(invalid("planar drift model needs b < 0 and λ < 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn first_order_coefficient(&self, r: f64) -> f64 {
        match *self {
            Self::Hyperbolic { dim } => (dim - 1) as f64 / r.tanh(),
            Self::PlanarInverseSquare { .. } => 1.0 / r,
            Self::PlanarDrift { b, .. } => (1.0 + if r > 1.0 { b } else { 0.0 }) / r,
        }
    }

    /// `(N−1)²/4` for hyperbolic space, zero for the planar models.
    pub fn spectral_shift(&self) -> f64 {
        match *self {
            Self::Hyperbolic { dim } => hyperbolic_asymptotic_coeffs(dim).0,
            _ => 0.0,
        }
    }

    /// The model's exact positive solution of `(P − λW)v = 0`, with its `λ` and `W`.
    pub fn exact_solution(&self) -> Option<(f64, Profile)> {
        match *self {
            Self::PlanarInverseSquare { lambda } => {
                let a = -(-lambda).sqrt();
                Some((lambda, Box::new(move |r: f64| r.powf(a))))
            }
            Self::PlanarDrift { b, lambda } => {
                let a = planar_drift_exponent(b, lambda);
                Some((lambda, Box::new(move |r: f64| r.powf(a))))
            }
            Self::Hyperbolic { .. } => None,
        }
    }
}

/// A radial profile `r ↦ v(r)`.
pub type Profile = Box<dyn Fn(f64) -> f64 + Sync>;

/// `(−b − √(b² − 4λ))/2`.
pub fn planar_drift_exponent(b: f64, lambda: f64) -> f64 {
    (-b - (b * b - 4.0 * lambda).sqrt()) / 2.0
}

/// `1/r²`, the weight of the planar models.
pub fn inverse_square(r: f64) -> f64 {
    1.0 / (r * r)
}

/// Five-point central first and second derivatives.
fn derivatives(v: &dyn Fn(f64) -> f64, r: f64, h: f64) -> (f64, f64, f64) {
    let (m2, m1, c, p1, p2) = (v(r - 2.0 * h), v(r - h), v(r), v(r + h), v(r + 2.0 * h));
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
    (c, d1, d2)
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialResidual {
    /// `sup |(P − λW)v| / |v|` on the grid.
    pub max_relative: f64,
    /// `min (P − λW)v / v`; nonnegative for a supersolution.
    pub min_signed: f64,
    /// `|max_relative(h) − max_relative(h/2)|`.
    pub halving_disagreement: f64,
    pub step: f64,
    pub rows: Vec<(f64, f64)>,
}

fn residual_rows(
    model: &RadialModel,
    v: &(dyn Fn(f64) -> f64 + Sync),
    lambda: f64,
    w: &(dyn Fn(f64) -> f64 + Sync),
    grid: &[f64],
    h: f64,
) -> Result<Vec<(f64, f64)>> {
    grid.par_iter()
        .map(|&r| {
            if r - 2.0 * h <= 0.0 {
                return Err(invalid(format!("grid point {r} too close to the origin for step {h}")));
            }
            let (c, d1, d2) = derivatives(v, r, h);
            if !(c > 0.0) {
                return Err(invalid(format!("profile must be positive (r = {r})")));
            }
            let pv = -d2 - model.first_order_coefficient(r) * d1;
            Ok((r, (pv - lambda * w(r) * c) / c))
        })
        .collect()
}

/// Relative residual of `(P − λW) v` by five-point differences with step
/// halving; fails when the two steps disagree by more than `10·tol`.
pub fn radial_residual(
    model: &RadialModel,
    v: &(dyn Fn(f64) -> f64 + Sync),
    lambda: f64,
    w: &(dyn Fn(f64) -> f64 + Sync),
    grid: &[f64],
    tol: f64,
) -> Result<RadialResidual> {
    radial_residual_with_step(model, v, lambda, w, grid, tol, FD_STEP)
}

pub fn radial_residual_with_step(
    model: &RadialModel,
    v: &(dyn Fn(f64) -> f64 + Sync),
    lambda: f64,
    w: &(dyn Fn(f64) -> f64 + Sync),
    grid: &[f64],
    tol: f64,
    h: f64,
) -> Result<RadialResidual> {
    model.validate()?;
    if grid.is_empty() {
        return Err(invalid("empty radial grid"));
    }
    let rows = residual_rows(model, v, lambda, w, grid, h)?;
    let half = residual_rows(model, v, lambda, w, grid, h / 2.0)?;
    let sup = |rows: &[(f64, f64)]| rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    let max_relative = sup(&rows);
    let halving_disagreement = (max_relative - sup(&half)).abs();
    if halving_disagreement > 10.0 * tol {
        return Err(Error::NoConvergence(format!(
            "step halving changed the residual by {halving_disagreement:e}; the grid is too coarse for this profile"
        )));
    }
    let min_signed = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(RadialResidual { max_relative, min_signed, halving_disagreement, step: h, rows })
}

/// `G̃^α` as a closure.
pub fn hyperbolic_power(dim: usize, alpha: f64) -> impl Fn(f64) -> f64 + Sync {
    move |r| hyperbolic_green(dim, r).map(|g| g.powf(alpha)).unwrap_or(f64::NAN)
}

/// `W` of `ℍ^N` as a closure.
pub fn hyperbolic_weight(dim: usize) -> impl Fn(f64) -> f64 + Sync {
    move |r| hyperbolic_hardy(dim, r).unwrap_or(f64::NAN)
}

/// Residuals of `G̃^{α_±}` for `(−Δ_{ℍ^N} − λW)`.
pub fn hyperbolic_pair_residuals(
    dim: usize,
    lambda: f64,
    grid: &[f64],
    tol: f64,
) -> Result<(RadialResidual, RadialResidual)> {
    let (am, ap) = alpha_roots(lambda)?;
    let model = RadialModel::Hyperbolic { dim };
    let w = hyperbolic_weight(dim);
    let minus = radial_residual(&model, &hyperbolic_power(dim, am), lambda, &w, grid, tol)?;
    let plus = radial_residual(&model, &hyperbolic_power(dim, ap), lambda, &w, grid, tol)?;
    Ok((minus, plus))
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanarRow {
    pub r: f64,
    pub g1: f64,
    pub g2: f64,
    /// `(1/4)(d/dr log(G1/G2))²` from the exponent.
    pub w: f64,
    /// Same quantity by five-point differences.
    pub w_numeric: f64,
    /// `|V1 − V2|/2 = |λ|/(2r²)`.
    pub half_potential_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanarReport {
    pub lambda: f64,
    pub b: f64,
    pub exponent: f64,
    pub rows: Vec<PlanarRow>,
    /// `|V1 − V2|/2 > W` at every grid point.
    pub inequality_violated_everywhere: bool,
    /// Range of `(|V1 − V2|/2) / W`.
    pub ratio_range: (f64, f64),
    /// `max |W − W_printed| / W_printed`, the printed closed form
    /// `|λ|/(4r²) − (b²/(8r²))(√(1 + 4|λ|/b²) − 1)` (for `b = 0`: `|λ|/(4r²)`).
    pub closed_form_deviation: f64,
}

/// Printed closed form of the planar Hardy weight.
pub fn planar_weight_closed_form(lambda: f64, b: f64, r: f64) -> f64 {
    let l = lambda.abs();
    let base = l / (4.0 * r * r);
    if b == 0.0 {
        base
    } else {
        base - b * b / (8.0 * r * r) * ((1.0 + 4.0 * l / (b * b)).sqrt() - 1.0)
    }
}

/// `G1 ≡ 1`, `G2 = r^a` with `a` the decaying root of `a² + ba + λ = 0`.
pub fn planar_example_report(lambda: f64, b: f64, grid: &[f64]) -> Result<PlanarReport> {
    if !(lambda < 0.0) || !(b <= 0.0) {
        return Err(invalid("planar examples need λ < 0 and b ≤ 0"));
    }
    if grid.iter().any(|&r| !(r > 1.0)) {
        return Err(invalid("planar grid must lie in r > 1"));
    }
    let a = planar_drift_exponent(b, lambda);
    let log_ratio = move |r: f64| -a * r.ln();
    let rows: Vec<PlanarRow> = grid
        .iter()
        .map(|&r| {
            let (_, d1, _) = derivatives(&log_ratio, r, FD_STEP);
            PlanarRow {
                r,
                g1: 1.0,
                g2: r.powf(a),
                w: 0.25 * (a / r).powi(2),
                w_numeric: 0.25 * d1 * d1,
                half_potential_gap: lambda.abs() / (2.0 * r * r),
            }
        })
        .collect();
    let ratios = rows.iter().map(|row| row.half_potential_gap / row.w);
    let ratio_range = ratios.fold((f64::INFINITY, 0.0_f64), |(lo, hi), q| (lo.min(q), hi.max(q)));
    let closed_form_deviation = rows
        .iter()
        .map(|row| {
            let printed = planar_weight_closed_form(lambda, b, row.r);
            (row.w - printed).abs() / printed
        })
        .fold(0.0, f64::max);
    Ok(PlanarReport {
        lambda,
        b,
        exponent: a,
        inequality_violated_everywhere: rows.iter().all(|row| row.half_potential_gap > row.w),
        rows,
        ratio_range,
        closed_form_deviation,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HBigReport {
    /// `(r, G/u, (G/u)^{α−}, (G/u)^{α+})`.
    pub rows: Vec<(f64, f64, f64, f64)>,
    pub alphas: (f64, f64),
    pub monotone_decay: bool,
    /// `(G/u)(r_last) / (G/u)(r_first)`.
    pub decay_factor: f64,
    /// Decay is monotone and the ratio falls by at least a factor 100.
    pub confirmed: bool,
}

pub fn hbig_probe(u: &dyn Fn(f64) -> f64, g: &dyn Fn(f64) -> f64, lambda: f64, grid: &[f64]) -> Result<HBigReport> {
    let alphas = alpha_roots(lambda)?;
    if grid.len() < 2 {
        return Err(invalid("h-big probe needs at least two radii"));
    }
    let rows = grid
        .iter()
        .map(|&r| {
            let (uv, gv) = (u(r), g(r));
            if !(uv > 0.0 && gv > 0.0) {
                return Err(invalid(format!("profiles must be positive (r = {r})")));
            }
            let q = gv / uv;
            Ok((r, q, q.powf(alphas.0), q.powf(alphas.1)))
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone_decay = rows.windows(2).all(|w| w[1].1 <= w[0].1);
    let decay_factor = rows.last().expect("nonempty").1 / rows[0].1;
    Ok(HBigReport { confirmed: monotone_decay && decay_factor <= 1e-2, rows, alphas, monotone_decay, decay_factor })
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiDecay {
    pub dim: usize,
    pub eps: f64,
    /// `(r, Φ(r) / (W(r) − (N−1)²/4))` with `Φ = e^{−(2−ε)r}`.
    pub rows: Vec<(f64, f64)>,
    pub increasing: bool,
}

/// Checks that `e^{−(2−ε)r}` dominates the Hardy-weight excess at infinity.
pub fn phi_decay_check(dim: usize, eps: f64, grid: &[f64]) -> Result<PhiDecay> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(invalid("ε must lie in (0, 2)"));
    }
    let rows = grid
        .iter()
        .map(|&r| Ok((r, (-(2.0 - eps) * r).exp() / hyperbolic_hardy_excess(dim, r)?)))
        .collect::<Result<Vec<_>>>()?;
    let increasing = rows.windows(2).all(|w| w[1].1 > w[0].1);
    Ok(PhiDecay { dim, eps, rows, increasing })
}

/// `r,green,weight,residual` rows for `ℍ^N`; the residual is that of `G̃^{1/2}`
/// for `−Δ − W`.
pub fn hyperbolic_table_csv(dim: usize, grid: &[f64]) -> Result<String> {
    let model = RadialModel::Hyperbolic { dim };
    let res = radial_residual(&model, &hyperbolic_power(dim, 0.5), 1.0, &hyperbolic_weight(dim), grid, 1e-6)?;
    let mut out = String::from("r,green,weight,residual\n");
    for (&r, row) in grid.iter().zip(&res.rows) {
        out.push_str(&format!("{r:e},{:e},{:e},{:e}\n", hyperbolic_green(dim, r)?, hyperbolic_hardy(dim, r)?, row.1));
    }
    Ok(out)
}

/// Equispaced grid with `points` radii on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn riemann(dim: usize, r: f64) -> f64 {
        // midpoint rule on [r, r + 40] after t = e^{−s}; tail beyond is < e^{−40(N−1)}
        let n = 2_000_000;
        let h = 40.0 / n as f64;
        (0..n).map(|i| (r + (i as f64 + 0.5) * h).sinh().powi(-((dim - 1) as i32)) * h).sum()
    }

    #[test]
    fn green_closed_forms() {
        for r in [0.5_f64, 1.0, 2.0, 0.05, 7.0] {
            let g2 = (1.0 / (r / 2.0).tanh()).ln();
            assert!((hyperbolic_green(2, r).unwrap() / g2 - 1.0).abs() < 1e-12, "N=2 r={r}");
            let g3 = 2.0 / (2.0 * r).exp_m1();
            assert!((hyperbolic_green(3, r).unwrap() / g3 - 1.0).abs() < 1e-12, "N=3 r={r}");
        }
        assert!(hyperbolic_green(3, 0.0).is_err());
        assert!(hyperbolic_green(1, 1.0).is_err());
    }

    #[test]
    fn green_n4_riemann_oracle() {
        let q = hyperbolic_green(4, 1.0).unwrap();
        assert!((q / riemann(4, 1.0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn hardy_limits() {
        assert!((hyperbolic_hardy(2, 18.0).unwrap() - 0.25).abs() < 1e-12);
        assert!((hyperbolic_hardy(3, 18.0).unwrap() - 1.0).abs() < 1e-12);
        // N = 3: W = (1/4) sinh^{−4} / (coth − 1)²
        let r: f64 = 1.0;
        let direct = 0.25 * r.sinh().powi(-4) / (1.0 / r.tanh() - 1.0).powi(2);
        assert!((hyperbolic_hardy(3, r).unwrap() / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coefficients() {
        assert_eq!(hyperbolic_asymptotic_coeffs(2), (0.25, 1.0 / 3.0));
        assert_eq!(hyperbolic_asymptotic_coeffs(3), (1.0, 2.0));
        let (l, s) = hyperbolic_asymptotic_coeffs(5);
        assert_eq!(l, 4.0);
        assert!((s - 64.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn fits_match_second_coefficient() {
        for dim in 2..=5 {
            let fit = fit_expansion(dim, (8.0, 15.0), 36).unwrap();
            assert!(fit.relative_error < 1e-3, "N={dim}: {} vs {}", fit.fitted, fit.expected);
        }
        assert!(fit_expansion(3, (2.0, 15.0), 10).is_err());
    }

    #[test]
    fn exact_planar_solutions() {
        let grid = linear_grid(1.5, 20.0, 40);
        for model in
            [RadialModel::PlanarInverseSquare { lambda: -1.0 }, RadialModel::PlanarDrift { b: -1.0, lambda: -1.0 }]
        {
            let (lambda, v) = model.exact_solution().unwrap();
            let res = radial_residual(&model, &*v, lambda, &inverse_square, &grid, 1e-8).unwrap();
            assert!(res.max_relative < 1e-8, "{model:?}: {}", res.max_relative);
        }
    }

    #[test]
    fn hyperbolic_pair_is_exact() {
        let grid = linear_grid(0.5, 8.0, 16);
        let (m, p) = hyperbolic_pair_residuals(3, 0.75, &grid, 1e-6).unwrap();
        assert!(m.max_relative < 1e-6 && p.max_relative < 1e-6, "{} {}", m.max_relative, p.max_relative);
    }

    #[test]
    fn fourth_order_convergence() {
        let model = RadialModel::PlanarInverseSquare { lambda: -1.0 };
        let (lambda, _) = model.exact_solution().unwrap();
        // λ = −1 gives the exact solution 1/r, so the residual is pure truncation error
        let v = |r: f64| 1.0 / r;
        let grid = [2.0, 3.0];
        let coarse = radial_residual_with_step(&model, &v, lambda, &inverse_square, &grid, 1.0, 0.2).unwrap();
        let fine = radial_residual_with_step(&model, &v, lambda, &inverse_square, &grid, 1.0, 0.1).unwrap();
        let order = (coarse.max_relative / fine.max_relative).log2();
        assert!(order >= 3.8, "order {order}");
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let model = RadialModel::PlanarInverseSquare { lambda: -1.0 };
        let v = |r: f64| (40.0 * r).sin() + 2.0;
        assert!(radial_residual_with_step(&model, &v, -1.0, &inverse_square, &[2.0], 1e-6, 0.05).is_err());
    }

    #[test]
    fn planar_reports() {
        let grid = linear_grid(1.1, 50.0, 30);
        let a = planar_example_report(-1.0, 0.0, &grid).unwrap();
        assert!(a.inequality_violated_everywhere);
        assert!((a.ratio_range.0 - 2.0).abs() < 1e-12 && (a.ratio_range.1 - 2.0).abs() < 1e-12);
        assert!(a.closed_form_deviation < 1e-12);
        let b = planar_example_report(-1.0, -1.0, &grid).unwrap();
        assert!(b.closed_form_deviation < 1e-10);
        assert!(b.inequality_violated_everywhere);
        // by hand: a = (1 − √5)/2, W r² = a²/4 = (3 − √5)/8
        let wr2 = (3.0 - 5f64.sqrt()) / 8.0;
        assert!((b.rows[0].w * 1.1 * 1.1 - wr2).abs() < 1e-14);
        for row in &b.rows {
            assert!((row.w_numeric / row.w - 1.0).abs() < 1e-8);
        }
        // b → 0⁻ recovers the b = 0 weight
        let near = planar_weight_closed_form(-1.0, -1e-7, 2.0);
        assert!((near - planar_weight_closed_form(-1.0, 0.0, 2.0)).abs() < 1e-7);
    }

    #[test]
    fn hbig_cases() {
        let grid = linear_grid(1.0, 10.0, 19);
        let g = |r: f64| hyperbolic_green(3, r).unwrap();
        let rep = hbig_probe(&|_| 1.0, &g, 0.75, &grid).unwrap();
        assert!(rep.confirmed);
        let last = rep.rows.last().unwrap();
        assert!(last.2 > last.3, "α− decays slower");
        let planar = hbig_probe(&|_| 1.0, &|r: f64| 1.0 / r, 0.5, &linear_grid(1.0, 1000.0, 50)).unwrap();
        assert!(planar.confirmed);
    }

    #[test]
    fn phi_dominates_weight_excess() {
        let grid = linear_grid(2.0, 15.0, 27);
        for eps in [0.1, 0.5] {
            assert!(phi_decay_check(3, eps, &grid).unwrap().increasing);
        }
    }

    #[test]
    fn table_has_small_residuals() {
        let csv = hyperbolic_table_csv(3, &linear_grid(0.5, 4.0, 8)).unwrap();
        assert_eq!(csv.lines().count(), 9);
        for line in csv.lines().skip(1) {
            let res: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
            assert!(res.abs() < 1e-6);
        }
    }
}
