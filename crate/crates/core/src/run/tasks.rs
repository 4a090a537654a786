use std::sync::OnceLock;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::json;

use super::config::{weight_values, LiouvilleParams, RunConfig, Setup, Task};
use super::TaskCtx;
use crate::error::{Error, Result};
use crate::green::{
    check_duality, dirichlet_green, exhaustion_probe, green_potential, minimal_green_exhaustion, reproduction_residual,
    torsion_function, ExhaustionTrace, GreenMatrix,
};
use crate::hardy::{
    alpha_roots, critical_hardy_weight, cutoff_tail_norms, invariance_check, optimal_hardy_weight, sequence_csv,
    supersolution_margin, supersolution_pair, v_mu_comparison,
};
use crate::instances::random_subcritical;
use crate::linalg::DENSE_LIMIT;
use crate::operator::{Domain, OperatorSpec};
use crate::perturbation::{
    direct_perturbed_green, equivalence_csv, equivalence_interval, iterated_kernels, monotonicity_in_eps,
    neumann_series, perturbation_profile, quasimetric_3g_check, quasimetric_constant, resolvent_check, sandwich_check,
    schur_bound, three_g_constant, TRIPLE_CAP,
};
use crate::radial::{self, RadialModel};
use crate::spectral::{
    bound_csv, criticality_probe, heat_trace, liouville_compare, principal_eigenvalue, principal_eigenvalue_pencil,
    principal_eigenvalue_perron, spectral_report, spectrum, torsion_bound_audit, weighted_green_operator,
    LiouvilleInput,
};

/// Hosts up to this size get the quadratic-cost extras (spectra, heat traces,
/// similarity spectra, Green CSV).
const SMALL_HOST: usize = 600;
const GREEN_CSV_LIMIT: usize = 200;

pub(crate) struct Shared<'a> {
    pub config: &'a RunConfig,
    pub setup: Option<&'a Setup>,
    green: OnceLock<std::result::Result<GreenMatrix, String>>,
}

impl<'a> Shared<'a> {
    pub fn new(config: &'a RunConfig, setup: Option<&'a Setup>) -> Self {
        Self { config, setup, green: OnceLock::new() }
    }

    fn setup(&self) -> Result<&'a Setup> {
        self.setup.ok_or_else(|| Error::Config("no operator configured".into()))
    }

    fn host(&self) -> Result<Domain> {
        let s = self.setup()?;
        Ok(match &s.exhaustion {
            Some(e) => e.levels().last().expect("nonempty").clone(),
            None => Domain::interior(s.op.graph()),
        })
    }

    /// Dense Green table on the host, computed once.
    fn green(&self) -> Result<&GreenMatrix> {
        let host = self.host()?;
        if host.len() > DENSE_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "host has {} nodes; dense Green tables are limited to {DENSE_LIMIT}",
                host.len()
            )));
        }
        let setup = self.setup()?;
        self.green
            .get_or_init(|| dirichlet_green(&setup.op, &host).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::NotSubcritical(e.clone()))
    }
}

pub(crate) fn dispatch(task: Task, shared: &Shared, ctx: &mut TaskCtx) -> Result<()> {
    match task {
        Task::Green => green_task(shared, ctx),
        Task::Perturb => perturb_task(shared, ctx),
        Task::Hardy => hardy_task(shared, ctx),
        Task::Spectral => spectral_task(shared, ctx),
        Task::Radial => radial_task(shared, ctx),
        Task::Liouville => liouville_task(shared, ctx),
        Task::VerifyAll => unreachable!("expanded before dispatch"),
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn trace_csv(trace: &ExhaustionTrace) -> String {
    let mut out = String::from("level,size,probe_max,rel_change\n");
    for (j, (&size, &pm)) in trace.level_sizes.iter().zip(&trace.probe_max).enumerate() {
        let rc = if j == 0 { String::new() } else { format!("{:e}", trace.rel_change[j - 1]) };
        out.push_str(&format!("{j},{size},{pm:e},{rc}\n"));
    }
    out
}

fn green_task(shared: &Shared, ctx: &mut TaskCtx) -> Result<()> {
    let setup = shared.setup()?;
    let tol = &shared.config.tolerances;
    let expect = &shared.config.expect;
    let op = &setup.op;
    let host = shared.host()?;

    let spec = OperatorSpec::from_operator(op);
    ctx.op("build_operator");
    let rebuilt = crate::operator::build_operator(&spec)?;
    ctx.check("operator spec round trip", OperatorSpec::from_operator(&rebuilt) == spec);
    let regions: Vec<Vec<usize>> = match &setup.exhaustion {
        Some(e) => e.levels().iter().map(|l| l.nodes().to_vec()).collect(),
        None => vec![host.nodes().to_vec()],
    };
    ctx.op("check_ellipticity");
    let ell = spec.ellipticity(&regions);
    ctx.check("uniformly elliptic on every level", ell.is_elliptic());
    ctx.finding("ellipticity", &ell);

    if host.len() <= DENSE_LIMIT {
        ctx.op("dirichlet_green");
        let g = shared.green()?;
        ctx.op("apply");
        let rep = reproduction_residual(op, g)?;
        ctx.check_le("P G = δ/m on the host", rep, tol.residual);
        let sup = g.values().amax();
        if op.is_symmetric() {
            let asym = (g.values() - g.values().transpose()).amax() / sup;
            ctx.check_le("symmetric operator has symmetric Green table", asym, tol.residual);
        }
        ctx.op("adjoint");
        ctx.op("check_duality");
        let dual = check_duality(op, &host, tol.residual * sup)?;
        ctx.check_le("G_{P*}(x,y) = G_P(y,x)", dual.max_abs_deviation / sup, tol.residual);
        ctx.op("torsion_function");
        let torsion = torsion_function(op, &host)?;
        ctx.op("green_potential");
        let ones = weight_values(&super::WeightSpec::Ones, op, setup.anchor)?;
        let g1 = green_potential(g, &ones)?;
        let dev = max_abs(torsion.function.iter().zip(&g1).map(|(a, b)| a - b)) / max_abs(g1.iter().copied());
        ctx.check_le("torsion function equals G applied to 1", dev, tol.residual);
        ctx.finding("torsional_rigidity", torsion.rigidity);
        ctx.finding("sup_green", sup);
        ctx.finding("green_at_anchor", g.get(setup.anchor, setup.anchor));
        if g.len() <= GREEN_CSV_LIMIT {
            let mut buf = Vec::new();
            g.write_csv(&mut buf)?;
            ctx.artifact("table.csv", String::from_utf8(buf).expect("utf8"));
        }
    } else {
        ctx.finding("dense_table", "skipped: host exceeds the dense limit; probe columns only");
    }

    if let Some(ex) = &setup.exhaustion {
        let trace = if host.len() <= DENSE_LIMIT {
            ctx.op("minimal_green_exhaustion");
            minimal_green_exhaustion(op, ex, tol.exhaustion)?.trace
        } else {
            ctx.op("minimal_green_exhaustion");
            exhaustion_probe(op, ex, tol.exhaustion)?
        };
        ctx.check("Green values nondecreasing along the exhaustion", true);
        ctx.finding("exhaustion_trend", trace.trend);
        ctx.finding("exhaustion_converged", trace.converged);
        ctx.finding("probe_max", &trace.probe_max);
        ctx.finding("probe_rel_change", &trace.rel_change);
        if let Some(want) = expect.exhaustion_converged {
            ctx.check(format!("exhaustion converged = {want}"), trace.converged == want);
        }
        ctx.artifact("exhaustion.csv", trace_csv(&trace));
    }
    Ok(())
}

/// Neumann, resolvent, sandwich and iterated-kernel checks on one table.
struct PerturbCase {
    neumann_error: f64,
    resolvent: f64,
    converged: bool,
    sandwich: Option<(bool, bool)>,
    kernels_hold: Option<bool>,
}

fn perturb_case(
    op: &crate::DiscreteOperator,
    g: &GreenMatrix,
    v: &[f64],
    fraction: f64,
    tol: f64,
) -> Result<PerturbCase> {
    let c0 = three_g_constant(g, v)?;
    let eps = if c0 > 0.0 { fraction / c0 } else { 0.0 };
    let neumann = neumann_series(g, v, eps, tol * 1e-3)?;
    let direct = direct_perturbed_green(op, v, eps, g.domain())?;
    let sup = g.values().amax();
    let neumann_error = (&neumann.h - direct.values()).amax() / sup;
    let resolvent = resolvent_check(g, &neumann.h, v, eps)?;
    let nonnegative = v.iter().all(|&x| x >= 0.0);
    let (sandwich, kernels_hold) = if nonnegative && fraction < 0.5 {
        let s = sandwich_check(g, &direct, eps, c0)?;
        let k = iterated_kernels(g, v, 5)?;
        (Some((s.lower_holds, s.upper_holds)), Some(k.bound_holds))
    } else {
        (None, None)
    };
    Ok(PerturbCase { neumann_error, resolvent, converged: neumann.converged, sandwich, kernels_hold })
}

fn perturb_task(shared: &Shared, ctx: &mut TaskCtx) -> Result<()> {
    let setup = shared.setup()?;
    let cfg = shared.config;
    let tol = &cfg.tolerances;
    let params = &cfg.perturb;
    let op = &setup.op;
    let g = shared.green()?;
    let v = weight_values(&params.v, op, setup.anchor)?;

    ctx.op("three_g_constant");
    let c0 = three_g_constant(g, &v)?;
    ctx.finding("c0", c0);
    ctx.op("neumann_series");
    ctx.op("resolvent_check");
    let case = perturb_case(op, g, &v, params.eps_fraction, tol.neumann)?;
    ctx.check("Neumann series converged", case.converged);
    ctx.check_le("Neumann sum matches direct perturbed Green", case.neumann_error, tol.neumann);
    ctx.check_le("resolvent identity", case.resolvent, tol.neumann);
    if let Some((lo, hi)) = case.sandwich {
        ctx.op("sandwich_check");
        ctx.op("iterated_kernels");
        ctx.check("sandwich lower bound", lo);
        ctx.check("sandwich upper bound", hi);
        ctx.check("|G^(i)| <= C0^i G for i <= 5", case.kernels_hold.unwrap_or(false));
    }

    if v.iter().all(|&x| x >= 0.0) && v.iter().any(|&x| x > 0.0) {
        ctx.op("principal_eigenvalue");
        let host = shared.host()?;
        let e = principal_eigenvalue(op, &v, &host)?;
        ctx.finding("lambda0_v", e.lambda0);
        ctx.op("monotonicity_in_eps");
        let mono = monotonicity_in_eps(op, &v, 0.25 * e.lambda0, 0.5 * e.lambda0, &host)?;
        ctx.check("G_{P-e1 V} <= G_{P-e2 V} for e1 <= e2", mono.holds);
        ctx.op("schur_bound");
        let schur = schur_bound(g, &v, &e.ground_state, 0.0, 0.5 * e.lambda0, e.lambda0)?;
        match schur.certified_bound {
            Some(b) => ctx.check_le("Schur bound dominates the operator norm", schur.true_norm, b * (1.0 + 1e-10)),
            None => ctx.finding("schur_hypotheses", "not satisfied by the ground state"),
        }
        ctx.finding("schur", &schur);
    }

    if g.is_symmetric(1e-10) && g.len() <= TRIPLE_CAP {
        ctx.op("quasimetric_constant");
        let q = quasimetric_constant(g, cfg.seed)?;
        ctx.op("quasimetric_3g_check");
        let check = quasimetric_3g_check(g, q.constant)?;
        ctx.check("quasimetric constant implies the 3G bound", check.holds);
        ctx.finding("quasimetric_constant", q.constant);
    }

    if let Some(ex) = &setup.exhaustion {
        if ex.len() >= 3 {
            ctx.op("semismall_profile");
            let profile = perturbation_profile(g, &v, ex, setup.anchor, 1e-3, cfg.seed)?;
            ctx.finding("semismall_tail", &profile.semismall_tail);
            ctx.finding("small_tail", &profile.small_tail);
            ctx.finding(
                "classification",
                json!({
                    "g_bounded": profile.g_bounded,
                    "g_semibounded": profile.g_semibounded,
                    "small": profile.small,
                    "semismall": profile.semismall,
                }),
            );
        }
        equivalence_levels(shared, ctx, &v)?;
    }

    if params.instances > 0 {
        random_suite(shared, ctx)?;
    }
    Ok(())
}

/// Equivalence ratios `sup/inf` of `G_{P−λV}/G_P` per level with `λ` a
/// fraction of that level's `λ0`.
fn equivalence_levels(shared: &Shared, ctx: &mut TaskCtx, v: &[f64]) -> Result<()> {
    let setup = shared.setup()?;
    let ex = setup.exhaustion.as_ref().expect("checked");
    let op = &setup.op;
    if !op.is_symmetric() || v.iter().any(|&x| x < 0.0) || ex.levels().iter().any(|l| l.len() > DENSE_LIMIT) {
        return Ok(());
    }
    let fractions = &shared.config.perturb.equivalence_fractions;
    ctx.op("equivalence_interval");
    let mut last_ratios = Vec::new();
    let mut csv = String::new();
    for (j, level) in ex.levels().iter().enumerate() {
        let e = principal_eigenvalue(op, v, level)?;
        let lambdas: Vec<f64> = fractions.iter().map(|f| f * e.lambda0).collect();
        let points = equivalence_interval(op, v, &lambdas, level)?;
        for (f, p) in fractions.iter().zip(&points) {
            if *f == 0.0 {
                let r = p.ratio.unwrap_or(f64::NAN);
                ctx.check_le(format!("level {j}: ratio at lambda = 0 is 1"), (r - 1.0).abs(), 1e-12);
            }
        }
        for line in equivalence_csv(&points).lines().skip(usize::from(j > 0)) {
            if j == 0 && line.starts_with("lambda") {
                csv.push_str("level,");
                csv.push_str(line);
            } else {
                csv.push_str(&format!("{j},{line}"));
            }
            csv.push('\n');
        }
        last_ratios.push(points.last().and_then(|p| p.ratio));
    }
    ctx.finding("equivalence_ratio_at_largest_fraction", &last_ratios);
    if let Some(golden) = &shared.config.expect.equivalence_golden {
        if golden.len() != last_ratios.len() {
            ctx.check("golden ratios given for every level", false);
        }
        for (j, (g, r)) in golden.iter().zip(&last_ratios).enumerate() {
            let dev = r.map(|r| (r / g - 1.0).abs()).unwrap_or(f64::INFINITY);
            ctx.check_le(format!("level {j}: equivalence ratio within 5% of golden {g}"), dev, 0.05);
        }
    }
    ctx.artifact("equivalence.csv", csv);
    Ok(())
}

/// Seeded random subcritical instances: Neumann vs direct, resolvent, and
/// the sandwich and iterated-kernel bounds with `|V|`.
fn random_suite(shared: &Shared, ctx: &mut TaskCtx) -> Result<()> {
    let cfg = shared.config;
    let params = &cfg.perturb;
    let tol = cfg.tolerances.neumann;
    let cases: Vec<(PerturbCase, PerturbCase)> = (0..params.instances as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add(i);
            let n = 2 + (seed % (params.instance_size as u64 - 1)) as usize;
            let inst = random_subcritical(seed, n, i % 2 == 1);
            let d = Domain::interior(inst.op.graph());
            let g = dirichlet_green(&inst.op, &d)?;
            let signed = perturb_case(&inst.op, &g, &inst.v, 0.25, tol)?;
            let abs: Vec<f64> = inst.v.iter().map(|x| x.abs()).collect();
            let positive = perturb_case(&inst.op, &g, &abs, 0.25, tol)?;
            Ok((signed, positive))
        })
        .collect::<Result<_>>()?;
    let worst = |f: &dyn Fn(&PerturbCase) -> f64| cases.iter().map(|(a, b)| f(a).max(f(b))).fold(0.0, f64::max);
    ctx.check_le(
        format!("random suite ({} instances): Neumann vs direct", cases.len()),
        worst(&|c| c.neumann_error),
        tol,
    );
    ctx.check_le("random suite: resolvent identity", worst(&|c| c.resolvent), tol);
    ctx.check("random suite: every series converged", cases.iter().all(|(a, b)| a.converged && b.converged));
    ctx.check("random suite: sandwich bounds with |V|", cases.iter().all(|(_, b)| b.sandwich == Some((true, true))));
    ctx.check("random suite: iterated-kernel bound with |V|", cases.iter().all(|(_, b)| b.kernels_hold == Some(true)));
    Ok(())
}

fn normalized_deviation(a: &[f64], b: &[f64]) -> f64 {
    let (sa, sb) = (max_abs(a.iter().copied()), max_abs(b.iter().copied()));
    max_abs(a.iter().zip(b).map(|(x, y)| x / sa - y / sb))
}

fn hardy_task(shared: &Shared, ctx: &mut TaskCtx) -> Result<()> {
    let setup = shared.setup()?;
    let cfg = shared.config;
    let tol = &cfg.tolerances;
    let op = &setup.op;
    let g = shared.green()?;
    let graph = op.graph();

    for (k, spec) in cfg.hardy.mus.iter().enumerate() {
        let mu = weight_values(spec, op, setup.anchor)?;
        let tag = format!("mu[{k}]");
        ctx.op("critical_hardy_weight");
        let c = critical_hardy_weight(op, g, &mu)?;
        ctx.check_le(format!("{tag}: (P - W_mu) G_mu = 0"), c.residual, tol.identity);
        ctx.op("invariance_check");
        ctx.check_le(format!("{tag}: G W_mu G_mu = G_mu"), invariance_check(g, &c.w, &c.witness)?, tol.invariance);
        ctx.op("weighted_green_operator");
        let wg = weighted_green_operator(g, &c.w, graph)?;
        let g_mu_local = g.restrict(&c.witness)?;
        let dev = normalized_deviation(&wg.perron_vector, &g_mu_local);
        ctx.check_le(format!("{tag}: Perron vector of the weighted Green operator is G_mu"), dev, tol.eigen);
        ctx.check_le(format!("{tag}: 1/rho = 1"), (wg.lambda0() - 1.0).abs(), tol.eigen);

        if let Some(ex) = &setup.exhaustion {
            ctx.op("principal_eigenvalue");
            let lambdas: Vec<f64> = ex
                .levels()
                .iter()
                .map(|l| principal_eigenvalue(op, &c.w, l).map(|e| e.lambda0))
                .collect::<Result<_>>()?;
            let min = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
            ctx.check_ge(format!("{tag}: lambda0(P, W_mu, M_j) >= 1"), min, 1.0 - 1e-8);
            let nonincreasing = lambdas.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10));
            ctx.check(format!("{tag}: lambda0(P, W_mu, M_j) nonincreasing in j"), nonincreasing);
            ctx.finding(format!("{tag}: lambda0_levels"), &lambdas);
            if ex.len() >= 3 {
                ctx.op("v_mu_comparison");
                let vm = v_mu_comparison(g, &mu, setup.anchor, ex)?;
                ctx.finding(format!("{tag}: v_mu_verdict"), vm.verdict);
                ctx.finding(format!("{tag}: v_mu_shells"), &vm.shells);
                ctx.op("cutoff_tail_norms");
                let tails = cutoff_tail_norms(g, &mu, setup.anchor, ex, 1e-3)?;
                ctx.finding(format!("{tag}: cutoff_tails_vanishing"), tails.vanishing);
                ctx.artifact(format!("cutoff-tails-{k}.csv"), sequence_csv("t", &tails.t));
            }
        }
        ctx.artifact(format!("w-mu-{k}.csv"), sequence_csv("w", &c.w));
    }

    // optimal weight from G_φ (φ the anchor point mass) and the torsion function
    let phi = weight_values(&super::WeightSpec::Delta { node: None }, op, setup.anchor)?;
    let g_phi = green_potential(g, &phi)?;
    let u = torsion_function(op, g.domain())?.function;
    ctx.op("optimal_hardy_weight");
    let opt = optimal_hardy_weight(op, &g_phi, &u)?;
    ctx.check_le("optimal construction: (P - W) sqrt(G_phi u) = 0", opt.residual, tol.identity);
    ctx.finding("optimal_weight_negative_nodes", opt.negative_nodes.len());
    ctx.finding("optimal_weight_hardy_trend", opt.hardy_trend);
    ctx.op("alpha_roots");
    let (am, ap) = alpha_roots(cfg.hardy.lambda)?;
    ctx.check_le(
        "alpha roots solve 4a(1-a) = lambda",
        (4.0 * am * (1.0 - am) - cfg.hardy.lambda).abs().max((4.0 * ap * (1.0 - ap) - cfg.hardy.lambda).abs()),
        1e-14,
    );
    ctx.op("supersolution_pair");
    let (hm, hp) = supersolution_pair(&u, &g_phi, cfg.hardy.lambda)?;
    let interior = graph.interior();
    let (hm_i, hp_i): (Vec<f64>, Vec<f64>) = interior.iter().map(|&x| (hm[x], hp[x])).unzip();
    ctx.check("supersolution pair positive on the interior", hm_i.iter().chain(&hp_i).all(|&v| v > 0.0));
    ctx.finding(
        "supersolution_margins",
        json!({
            "minus": supersolution_margin(op, &opt.w, &hm, cfg.hardy.lambda)?,
            "plus": supersolution_margin(op, &opt.w, &hp, cfg.hardy.lambda)?,
        }),
    );
    Ok(())
}

fn spectral_task(shared: &Shared, ctx: &mut TaskCtx) -> Result<()> {
    let setup = shared.setup()?;
    let cfg = shared.config;
    let tol = &cfg.tolerances;
    let expect = &cfg.expect;
    let op = &setup.op;
    let host = shared.host()?;
    let w = weight_values(&cfg.weight, op, setup.anchor)?;

    ctx.op("principal_eigenvalue");
    let e = principal_eigenvalue(op, &w, &host)?;
    ctx.finding("lambda0", e.lambda0);
    ctx.finding("lambda0_method", e.method);
    let small = host.len() <= SMALL_HOST;
    if small {
        let pencil = principal_eigenvalue_pencil(op, &w, &host)?;
        let perron = principal_eigenvalue_perron(op, &w, &host)?;
        ctx.check_le(
            "pencil and Perron routes agree",
            (pencil.lambda0 - perron.lambda0).abs() / pencil.lambda0,
            tol.eigen,
        );
        let g = shared.green()?;
        ctx.op("weighted_green_operator");
        let wg = weighted_green_operator(g, &w, op.graph())?;
        if op.is_symmetric() {
            ctx.check_le(
                "1/rho matches the pencil eigenvalue",
                (wg.lambda0() - pencil.lambda0).abs() / pencil.lambda0,
                tol.eigen,
            );
        }
        ctx.check_le(
            "spectrum invariant under the phi_p similarity",
            wg.p_independence_deviation(&g.restrict(&w)?)?,
            tol.similarity,
        );
        ctx.finding("perron_gap", wg.gap);
    }

    if op.is_symmetric() && small {
        ctx.op("spectrum");
        let s = spectrum(op, &host)?;
        let form = op.form_matrix(&host);
        let m: Vec<f64> = host.nodes().iter().map(|&x| op.measure()[x]).collect();
        let a = DMatrix::from_fn(m.len(), m.len(), |i, j| form[(i, j)] / (m[i] * m[j]).sqrt());
        ctx.op("heat_trace");
        for t in [0.1, 1.0, 10.0] {
            let oracle = (&a * -t).exp().trace();
            let got = heat_trace(&s.values, t)?;
            ctx.check_le(format!("heat trace at t = {t} matches exp(-tA)"), (got - oracle).abs() / oracle, tol.heat);
        }
        ctx.finding("lowest_eigenvalues", &s.values[..s.values.len().min(5)]);
        if let Some(tp) = cfg.torsion {
            ctx.op("torsion_bound_audit");
            ctx.op("eigenvalue_lower_bound");
            let audit = torsion_bound_audit(op, &host, tp.beta, tp.dim)?;
            ctx.check(format!("every lambda_j exceeds the torsion bound ({} rows)", audit.rows.len()), audit.passes);
            ctx.finding(
                "torsion_audit",
                json!({ "rigidity": audit.rigidity, "c_hat": audit.c_hat, "violations": audit.violations }),
            );
            ctx.artifact("torsion-bound.csv", bound_csv(&audit.rows));
        }
    }

    if let Some(ex) = &setup.exhaustion {
        if ex.len() >= 3 {
            // the probe weight must live in the first level
            let first = &ex.levels()[0];
            let test_w: Vec<f64> = (0..op.n()).map(|x| if first.contains(x) { w[x] } else { 0.0 }).collect();
            ctx.op("criticality_probe");
            let probe = criticality_probe(op, ex, &test_w)?;
            ctx.check("lambda0(M_j) nonincreasing", probe.nonincreasing);
            ctx.finding("criticality_verdict", probe.verdict);
            ctx.finding("lambda0_levels", &probe.lambda0);
            ctx.finding("green_trend", probe.green_trend);
            if let Some(want) = expect.criticality {
                ctx.check(format!("criticality verdict is {want:?}"), probe.verdict == want);
            }
            if let Some(bound) = expect.lambda0_stable {
                let l = &probe.lambda0;
                let step = (l[l.len() - 1] - l[l.len() - 2]).abs() / l[l.len() - 2];
                ctx.check_le("lambda0 stabilized over the last level", step, bound);
            }
            let mut csv = String::from("level,size,lambda0\n");
            for (j, (s, l)) in probe.level_sizes.iter().zip(&probe.lambda0).enumerate() {
                csv.push_str(&format!("{j},{s},{l:e}\n"));
            }
            ctx.artifact("criticality.csv", csv);
            if host.len() <= DENSE_LIMIT {
                ctx.op("positive_criticality_check");
                let report = spectral_report(op, &w, ex, &test_w)?;
                ctx.finding("positive_criticality", report.positive_criticality);
            }
        }
    }
    Ok(())
}

fn radial_task(shared: &Shared, ctx: &mut TaskCtx) -> Result<()> {
    let cfg = shared.config;
    let tol = &cfg.tolerances;
    let params = cfg.radial.as_ref().expect("validated");
    let pair_grid = radial::linear_grid(0.5, 8.0, 31);

    for &dim in &params.dims {
        let tag = format!("N={dim}");
        ctx.op("hyperbolic_green");
        ctx.op("hyperbolic_hardy");
        ctx.op("hyperbolic_asymptotic_coeffs");
        if dim == 2 || dim == 3 {
            let dev = [0.5_f64, 1.0, 2.0]
                .iter()
                .map(|&r| {
                    let exact = if dim == 2 { (1.0 / (r / 2.0).tanh()).ln() } else { 2.0 / (2.0 * r).exp_m1() };
                    Ok((radial::hyperbolic_green(dim, r)? / exact - 1.0).abs())
                })
                .collect::<Result<Vec<f64>>>()?;
            ctx.check_le(format!("{tag}: Green profile matches its closed form"), max_abs(dev), 1e-10);
        }
        let tail = radial::linear_grid(6.0, 20.0, 29);
        let excess: Vec<f64> = tail.iter().map(|&r| radial::hyperbolic_hardy_excess(dim, r)).collect::<Result<_>>()?;
        ctx.check(
            format!("{tag}: W decreases to (N-1)^2/4 from above on [6, 20]"),
            excess.iter().all(|&e| e > 0.0) && excess.windows(2).all(|w| w[1] < w[0]),
        );
        ctx.op("fit_expansion");
        let fit = radial::fit_expansion(dim, params.fit_range, params.fit_points)?;
        ctx.check_le(format!("{tag}: fitted second coefficient"), fit.relative_error, tol.fit);
        ctx.finding(
            format!("{tag}: fit"),
            json!({ "fitted": fit.fitted, "expected": fit.expected, "spread": fit.spread }),
        );
        ctx.op("radial_residual");
        let (m, p) = radial::hyperbolic_pair_residuals(dim, params.lambda, &pair_grid, tol.radial)?;
        ctx.check_le(format!("{tag}: G^alpha- solves (P - lambda W) v = 0"), m.max_relative, tol.radial);
        ctx.check_le(format!("{tag}: G^alpha+ solves (P - lambda W) v = 0"), p.max_relative, tol.radial);
        ctx.op("hbig_probe");
        let hb = radial::hbig_probe(
            &|_| 1.0,
            &|r| radial::hyperbolic_green(dim, r).unwrap_or(f64::NAN),
            params.lambda,
            &radial::linear_grid(1.0, 12.0, 23),
        )?;
        ctx.finding(format!("{tag}: h-big mechanism confirmed"), hb.confirmed);
        for eps in [0.1, 0.5] {
            let d = radial::phi_decay_check(dim, eps, &radial::linear_grid(2.0, 15.0, 27))?;
            ctx.check(format!("{tag}: e^(-(2-{eps})r) / (W - (N-1)^2/4) increasing"), d.increasing);
        }
        ctx.artifact(
            format!("hyperbolic-N{dim}.csv"),
            radial::hyperbolic_table_csv(dim, &radial::linear_grid(0.25, 12.0, 48))?,
        );
        let mut csv = String::from("r,scaled_excess\n");
        for (r, v) in &fit.samples {
            csv.push_str(&format!("{r:e},{v:e}\n"));
        }
        ctx.artifact(format!("fit-N{dim}.csv"), csv);
    }

    if let Some(pl) = params.planar {
        let grid = radial::linear_grid(1.5, 40.0, 80);
        let model = if pl.b == 0.0 {
            RadialModel::PlanarInverseSquare { lambda: pl.lambda }
        } else {
            RadialModel::PlanarDrift { b: pl.b, lambda: pl.lambda }
        };
        let (lambda, v) = model.exact_solution().ok_or_else(|| Error::InvalidArgument("no exact solution".into()))?;
        ctx.op("radial_residual");
        let res = radial::radial_residual(&model, &*v, lambda, &radial::inverse_square, &grid, tol.radial)?;
        ctx.check_le("planar exact solution residual", res.max_relative, tol.radial);
        ctx.op("planar_example_report");
        let rep = radial::planar_example_report(pl.lambda, pl.b, &grid)?;
        ctx.check("|V1 - V2|/2 > W at every grid point", rep.inequality_violated_everywhere);
        if pl.b == 0.0 {
            ctx.check_le(
                "ratio (|V1 - V2|/2)/W is exactly 2",
                (rep.ratio_range.0 - 2.0).abs().max((rep.ratio_range.1 - 2.0).abs()),
                1e-12,
            );
        } else {
            ctx.check_le("W matches the printed closed form", rep.closed_form_deviation, 1e-10);
        }
        ctx.finding("planar_ratio_range", rep.ratio_range);
        ctx.finding("planar_exponent", rep.exponent);
        ctx.op("hbig_probe");
        let a = rep.exponent;
        let hb = radial::hbig_probe(&|_| 1.0, &|r: f64| r.powf(a), params.lambda, &radial::linear_grid(1.0, 1e4, 50))?;
        ctx.finding("planar h-big mechanism confirmed", hb.confirmed);
        let mut csv = String::from("r,g1,g2,w,half_potential_gap\n");
        for row in &rep.rows {
            csv.push_str(&format!("{:e},{:e},{:e},{:e},{:e}\n", row.r, row.g1, row.g2, row.w, row.half_potential_gap));
        }
        ctx.artifact("planar.csv", csv);
    }
    Ok(())
}

fn liouville_task(shared: &Shared, ctx: &mut TaskCtx) -> Result<()> {
    let cfg = shared.config;
    let expect = &cfg.expect;
    match cfg.liouville.expect("validated") {
        LiouvilleParams::SelfComparison => {
            let setup = shared.setup()?;
            let op = &setup.op;
            let host = shared.host()?;
            let w = weight_values(&cfg.weight, op, setup.anchor)?;
            ctx.op("principal_eigenvalue");
            let e = principal_eigenvalue(op, &w, &host)?;
            let p = op.perturbed(e.lambda0, &w)?;
            let phi = &e.ground_state;
            ctx.op("liouville_compare");
            let rep = liouville_compare(&LiouvilleInput {
                p1: &p,
                p2: &p,
                phi,
                psi: phi,
                k_region: &[],
                w: Some(&w),
                f: phi,
                tol: 1e-8,
            })?;
            ctx.check("self comparison is critical", rep.verdict == crate::spectral::LiouvilleVerdict::Critical);
            ctx.check_le("eps0 = 1", (rep.eps0 - 1.0).abs(), 1e-12);
            ctx.check_le("f - eps0 Psi = 0", rep.eps_residual, 1e-12);
            ctx.finding("verdict", rep.verdict);
            ctx.finding("hypotheses", &rep.hypotheses);
        }
        LiouvilleParams::Planar { lambda, b } => {
            ctx.op("planar_example_report");
            let grid = radial::linear_grid(1.5, 40.0, 80);
            let rep = radial::planar_example_report(lambda, b, &grid)?;
            let margin = rep.rows.iter().map(|r| r.w - r.half_potential_gap).fold(f64::INFINITY, f64::min);
            let holds = margin >= 0.0;
            ctx.finding("hypothesis", json!({ "name": "|V1 - V2|/2 <= W off K", "holds": holds, "margin": margin }));
            ctx.finding("gap_over_weight", rep.ratio_range);
            ctx.finding("verdict", if holds { "inconclusive" } else { "hypothesis-failed" });
            if let Some(want) = expect.hypothesis_violated {
                ctx.check(format!("potential-gap hypothesis violated = {want}"), !holds == want);
            }
            if b == 0.0 {
                let dev = rep.rows.iter().map(|r| (r.half_potential_gap - 2.0 * r.w).abs() / r.w).fold(0.0, f64::max);
                ctx.check_le("|V1 - V2|/2 = 2W at every grid point", dev, 1e-12);
            }
        }
    }
    Ok(())
}
