//! Liouville comparison: given a critical `P1` with ground state `Φ` and a
//! subsolution `Ψ` of `P2`, check the hypotheses and run the maximal ε-trick.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::operator::DiscreteOperator;

pub struct LiouvilleInput<'a> {
    pub p1: &'a DiscreteOperator,
    pub p2: &'a DiscreteOperator,
    pub phi: &'a [f64],
    pub psi: &'a [f64],
    /// Nodes of the compact region `K` where the principal parts may differ.
    pub k_region: &'a [usize],
    /// Weight for the potential-difference inequality off `K`.
    pub w: Option<&'a [f64]>,
    /// Positive supersolution of `P2` for the ε-trick.
    pub f: &'a [f64],
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
    /// Signed margin; nonnegative when the hypothesis holds.
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiouvilleVerdict {
    /// `f − ε0 Ψ` vanishes: the critical signature.
    Critical,
    Inconclusive,
    HypothesisFailed,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiouvilleReport {
    pub hypotheses: Vec<Hypothesis>,
    /// `min (W − |V1 − V2|/2)` off `K`; `None` when no weight is supplied.
    pub potential_margin: Option<f64>,
    pub eps0: f64,
    /// `max |f − ε0 Ψ| / max f`.
    pub eps_residual: f64,
    /// Range of `Ψ/Φ` where `Ψ > 0`.
    pub psi_over_phi: (f64, f64),
    /// `max Ψ₊ / Φ`.
    pub comparison_constant: f64,
    pub verdict: LiouvilleVerdict,
}

fn hyp(name: &str, margin: f64) -> Hypothesis {
    Hypothesis { name: name.into(), holds: margin >= 0.0, margin }
}

/// Largest mismatch between the principal parts (all form-row entries except
/// the potential) of `P1` and `P2` at interior nodes outside `K`.
fn principal_part_mismatch(p1: &DiscreteOperator, p2: &DiscreteOperator, k_region: &[usize]) -> f64 {
    let g = p1.graph();
    let mut worst = 0.0_f64;
    for x in g.interior() {
        if k_region.contains(&x) {
            continue;
        }
        let (d1, o1) = p1.form_row(x);
        let (d2, o2) = p2.form_row(x);
        let m = g.measure()[x];
        let pure1 = d1 - p1.potential()[x] * m;
        let pure2 = d2 - p2.potential()[x] * m;
        worst = worst.max((pure1 - pure2).abs() / m);
        worst = worst.max((p1.measure()[x] - p2.measure()[x]).abs());
        for ((y1, k1), (y2, k2)) in o1.iter().zip(&o2) {
            if y1 != y2 {
                return f64::INFINITY;
            }
            worst = worst.max((k1 - k2).abs() / m);
        }
    }
    worst
}

pub fn liouville_compare(input: &LiouvilleInput) -> Result<LiouvilleReport> {
    let LiouvilleInput { p1, p2, phi, psi, k_region, w, f, tol } = *input;
    let n = p1.n();
    let same_edges = p1.graph().edges().len() == p2.graph().edges().len()
        && p1.graph().edges().iter().zip(p2.graph().edges()).all(|(a, b)| (a.x, a.y) == (b.x, b.y));
    if p2.n() != n || !same_edges {
        return Err(invalid("P1 and P2 must live on the same graph"));
    }
    for v in [phi, psi, f] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    let interior = p1.graph().interior();
    let mut hypotheses = Vec::new();

    let mismatch = principal_part_mismatch(p1, p2, k_region);
    hypotheses.push(hyp("principal parts agree off K", tol - mismatch));

    let phi_min = interior.iter().map(|&x| phi[x]).fold(f64::INFINITY, f64::min);
    let p1phi = p1.apply(phi)?;
    let phi_scale = interior.iter().map(|&x| phi[x].abs()).fold(0.0, f64::max);
    let phi_res = interior.iter().map(|&x| p1phi[x].abs()).fold(0.0, f64::max) / phi_scale.max(f64::MIN_POSITIVE);
    hypotheses.push(hyp("Phi > 0", phi_min));
    hypotheses.push(hyp("P1 Phi = 0", tol - phi_res));

    let psi_pos: Vec<usize> = interior.iter().copied().filter(|&x| psi[x] > 0.0).collect();
    let psi_scale = interior.iter().map(|&x| psi[x].abs()).fold(0.0, f64::max);
    hypotheses.push(hyp("Psi+ nonzero", if psi_pos.is_empty() { -1.0 } else { psi_scale }));
    let p2psi = p2.apply(psi)?;
    let sub = interior.iter().map(|&x| p2psi[x]).fold(f64::NEG_INFINITY, f64::max) / psi_scale.max(f64::MIN_POSITIVE);
    hypotheses.push(hyp("P2 Psi <= 0", tol - sub));

    let p2f = p2.apply(f)?;
    let f_scale = interior.iter().map(|&x| f[x].abs()).fold(0.0, f64::max);
    let f_min = interior.iter().map(|&x| f[x]).fold(f64::INFINITY, f64::min);
    let f_sup = interior.iter().map(|&x| p2f[x]).fold(f64::INFINITY, f64::min) / f_scale.max(f64::MIN_POSITIVE);
    hypotheses.push(hyp("f > 0", f_min));
    hypotheses.push(hyp("P2 f >= 0", f_sup + tol));

    let potential_margin = w.map(|w| {
        interior
            .iter()
            .filter(|x| !k_region.contains(x))
            .map(|&x| w[x] - 0.5 * (p1.potential()[x] - p2.potential()[x]).abs())
            .fold(f64::INFINITY, f64::min)
    });
    if let Some(m) = potential_margin {
        hypotheses.push(hyp("|V1 - V2|/2 <= W off K", m + tol));
    }

    let (lo, hi) =
        psi_pos.iter().map(|&x| psi[x] / phi[x]).fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
    let eps0 = psi_pos.iter().map(|&x| f[x] / psi[x]).fold(f64::INFINITY, f64::min);
    let eps_residual = if eps0.is_finite() {
        interior.iter().map(|&x| (f[x] - eps0 * psi[x]).abs()).fold(0.0, f64::max) / f_scale
    } else {
        f64::INFINITY
    };
    let verdict = if hypotheses.iter().any(|h| !h.holds) {
        LiouvilleVerdict::HypothesisFailed
    } else if eps_residual <= tol {
        LiouvilleVerdict::Critical
    } else {
        LiouvilleVerdict::Inconclusive
    };
    Ok(LiouvilleReport {
        hypotheses,
        potential_margin,
        eps0,
        eps_residual,
        psi_over_phi: (lo, hi),
        comparison_constant: hi,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::operator::Domain;
    use crate::spectral::principal_eigenvalue;

    fn critical_path(n: usize) -> (DiscreteOperator, Vec<f64>) {
        let op = generators::path(n, 1.0, 0.0).unwrap();
        let w: Vec<f64> = (0..op.n()).map(|x| if op.graph().is_boundary(x) { 0.0 } else { 1.0 }).collect();
        let e = principal_eigenvalue(&op, &w, &Domain::interior(op.graph())).unwrap();
        (op.perturbed(e.lambda0, &w).unwrap(), e.ground_state)
    }

    #[test]
    fn self_comparison_is_critical() {
        let (p, phi) = critical_path(30);
        let r = liouville_compare(&LiouvilleInput {
            p1: &p,
            p2: &p,
            phi: &phi,
            psi: &phi,
            k_region: &[],
            w: None,
            f: &phi,
            tol: 1e-9,
        })
        .unwrap();
        assert_eq!(r.verdict, LiouvilleVerdict::Critical, "{:?}", r.hypotheses);
        assert_eq!(r.eps0, 1.0);
        assert_eq!(r.eps_residual, 0.0);
    }

    #[test]
    fn mismatched_principal_part_is_reported() {
        let (p, phi) = critical_path(10);
        let q = generators::path_with(10, |i| if i == 5 { 2.0 } else { 1.0 }, |_| 1.0, |_| 0.0).unwrap();
        let r = liouville_compare(&LiouvilleInput {
            p1: &p,
            p2: &q,
            phi: &phi,
            psi: &phi,
            k_region: &[],
            w: None,
            f: &phi,
            tol: 1e-9,
        })
        .unwrap();
        assert_eq!(r.verdict, LiouvilleVerdict::HypothesisFailed);
        assert!(!r.hypotheses[0].holds);
        let r = liouville_compare(&LiouvilleInput {
            p1: &p,
            p2: &q,
            phi: &phi,
            psi: &phi,
            k_region: &[5, 6],
            w: None,
            f: &phi,
            tol: 1e-9,
        })
        .unwrap();
        assert!(r.hypotheses[0].holds);
    }

    #[test]
    fn non_supersolution_is_flagged() {
        let (p, phi) = critical_path(10);
        // P f = −λ0 · 0.1 < 0 in the middle of the path
        let f: Vec<f64> = (0..p.n()).map(|x| phi[x] + if p.graph().is_boundary(x) { 0.0 } else { 0.1 }).collect();
        let r = liouville_compare(&LiouvilleInput {
            p1: &p,
            p2: &p,
            phi: &phi,
            psi: &phi,
            k_region: &[],
            w: None,
            f: &f,
            tol: 1e-9,
        })
        .unwrap();
        assert_eq!(r.verdict, LiouvilleVerdict::HypothesisFailed);
        let failed: Vec<&str> = r.hypotheses.iter().filter(|h| !h.holds).map(|h| h.name.as_str()).collect();
        assert_eq!(failed, vec!["P2 f >= 0"]);
    }
}
