//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators;
use crate::green::Exhaustion;
use crate::instances::random_subcritical;
use crate::operator::{build_operator, load_operator, DiscreteOperator, OperatorSpec};
use crate::spectral::CriticalityVerdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Green,
    Perturb,
    Hardy,
    Spectral,
    Radial,
    Liouville,
    VerifyAll,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Self::Green => "green",
            Self::Perturb => "perturb",
            Self::Hardy => "hardy",
            Self::Spectral => "spectral",
            Self::Radial => "radial",
            Self::Liouville => "liouville",
            Self::VerifyAll => "verify-all",
        }
    }

    pub fn needs_operator(self) -> bool {
        matches!(self, Self::Green | Self::Perturb | Self::Hardy | Self::Spectral)
    }
}

/// Built-in operator families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Path {
        n: usize,
        #[serde(default = "one")]
        conductance: f64,
        #[serde(default)]
        potential: f64,
    },
    Grid2d {
        half: usize,
        #[serde(default)]
        potential: f64,
    },
    Grid3d {
        half: usize,
        #[serde(default)]
        potential: f64,
    },
    RadialDisk {
        radius: f64,
        beta: f64,
    },
    Grid2dRadialDrift {
        half: usize,
        b: f64,
    },
    Random {
        seed: u64,
        n: usize,
        #[serde(default)]
        drift: bool,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSource {
    Generator(GeneratorSpec),
    Inline(OperatorSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Graph hop distance.
    #[default]
    Hop,
    /// Max-norm distance between coordinates.
    Sup,
}

/// Either explicit nested levels or balls of increasing radius.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExhaustionSpec {
    /// Node at the centre of the balls; defaults to the generator's origin.
    #[serde(default)]
    pub center: Option<usize>,
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub levels: Option<Vec<Vec<usize>>>,
}

/// Node functions built from the operator and its anchor node.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    /// Indicator of the interior.
    #[default]
    Ones,
    /// `δ_x / m(x)` at `node` (default: the anchor).
    Delta {
        #[serde(default)]
        node: Option<usize>,
    },
    /// `e^{−rate·d(x, anchor)}` on the interior, hop distance.
    ExpDecay {
        rate: f64,
    },
    Values {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Reproduction, duality and symmetry of Green tables.
    pub residual: f64,
    /// Neumann series against the direct perturbed Green function.
    pub neumann: f64,
    /// Probe-block convergence along the exhaustion.
    pub exhaustion: f64,
    /// Agreement between eigenvalue routes.
    pub eigen: f64,
    /// `(P − W_μ) G_μ = 0`.
    pub identity: f64,
    pub invariance: f64,
    /// Spectra under the `φ_p` similarity.
    pub similarity: f64,
    pub heat: f64,
    /// Radial finite-difference residuals.
    pub radial: f64,
    /// Relative error of the asymptotic fits.
    pub fit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-10,
            neumann: 1e-9,
            exhaustion: 1e-8,
            eigen: 1e-8,
            identity: 1e-12,
            invariance: 1e-10,
            similarity: 1e-10,
            heat: 1e-8,
            radial: 1e-6,
            fit: 1e-2,
        }
    }
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, f64); 10] {
        [
            ("residual", self.residual),
            ("neumann", self.neumann),
            ("exhaustion", self.exhaustion),
            ("eigen", self.eigen),
            ("identity", self.identity),
            ("invariance", self.invariance),
            ("similarity", self.similarity),
            ("heat", self.heat),
            ("radial", self.radial),
            ("fit", self.fit),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbParams {
    pub v: WeightSpec,
    /// `ε = eps_fraction / C0`.
    pub eps_fraction: f64,
    /// Size of the seeded random-instance suite (0 disables it).
    pub instances: usize,
    /// Largest interior size of a random instance.
    pub instance_size: usize,
    /// `ε` grid for the equivalence probe, as fractions of `λ0` per level.
    pub equivalence_fractions: Vec<f64>,
}

impl Default for PerturbParams {
    fn default() -> Self {
        Self {
            v: WeightSpec::Ones,
            eps_fraction: 0.25,
            instances: 0,
            instance_size: 20,
            equivalence_fractions: vec![0.0, 0.5, 0.9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardyParams {
    /// The `μ` family for the critical construction.
    pub mus: Vec<WeightSpec>,
    /// `λ` of the supersolution pair.
    pub lambda: f64,
}

impl Default for HardyParams {
    fn default() -> Self {
        Self { mus: vec![WeightSpec::Ones], lambda: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorsionParams {
    pub beta: f64,
    pub dim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarParams {
    pub lambda: f64,
    #[serde(default)]
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadialParams {
    pub dims: Vec<usize>,
    pub fit_range: (f64, f64),
    pub fit_points: usize,
    /// `λ` of the exact pair `G̃^{α±}`.
    pub lambda: f64,
    pub planar: Option<PlanarParams>,
}

impl Default for RadialParams {
    fn default() -> Self {
        Self { dims: Vec::new(), fit_range: (8.0, 15.0), fit_points: 71, lambda: 0.75, planar: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LiouvilleParams {
    /// `P − λ0 W` against itself, `W` the configured weight.
    SelfComparison,
    /// The planar pair `G1 = 1`, `G2 = r^a` on `r > 1`.
    Planar { lambda: f64, b: f64 },
}

/// Preset-specific assertions on top of the universal invariants.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Expectations {
    pub criticality: Option<CriticalityVerdict>,
    pub exhaustion_converged: Option<bool>,
    /// Bound on the last relative step of `λ0(M_j)`.
    pub lambda0_stable: Option<f64>,
    /// Golden equivalence ratio at the largest fraction, one per level (±5%).
    pub equivalence_golden: Option<Vec<f64>>,
    /// The potential-gap hypothesis must fail (planar comparisons).
    pub hypothesis_violated: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub operator: Option<OperatorSource>,
    #[serde(default)]
    pub exhaustion: Option<ExhaustionSpec>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Weight `W` of the spectral task.
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default)]
    pub perturb: PerturbParams,
    #[serde(default)]
    pub hardy: HardyParams,
    #[serde(default)]
    pub torsion: Option<TorsionParams>,
    #[serde(default)]
    pub radial: Option<RadialParams>,
    #[serde(default)]
    pub liouville: Option<LiouvilleParams>,
    #[serde(default)]
    pub expect: Expectations,
}

fn default_output() -> PathBuf {
    PathBuf::from("crit-lab-out")
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    /// Parses JSON; errors name the offending key path, line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            config_error(format!("key `{path}`: {inner} (line {}, column {})", inner.line(), inner.column()))
        })?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        // operator files are relative to the config
        if let (Some(OperatorSource::File(f)), Some(dir)) = (&mut config.operator, path.parent()) {
            if f.is_relative() {
                *f = dir.join(&*f);
            }
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(config_error("key `tasks`: task list is empty"));
        }
        for (key, v) in self.tolerances.entries() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(config_error(format!("key `tolerances.{key}`: must be positive, got {v}")));
            }
        }
        let tasks = self.expanded_tasks();
        if tasks.iter().any(|t| t.needs_operator()) && self.operator.is_none() {
            return Err(config_error("key `operator`: required by the graph tasks"));
        }
        if tasks.contains(&Task::Radial) && self.radial.is_none() {
            return Err(config_error("key `radial`: required by the radial task"));
        }
        if tasks.contains(&Task::Liouville) && self.liouville.is_none() {
            return Err(config_error("key `liouville`: required by the liouville task"));
        }
        if let Some(OperatorSource::File(f)) = &self.operator {
            if !f.exists() {
                return Err(config_error(format!("key `operator.file`: {} does not exist", f.display())));
            }
        }
        if let Some(LiouvilleParams::SelfComparison) = self.liouville {
            if self.operator.is_none() {
                return Err(config_error("key `liouville`: self comparison needs an operator"));
            }
        }
        if let Some(r) = &self.radial {
            if r.dims.iter().any(|&d| d < 2) {
                return Err(config_error("key `radial.dims`: dimensions must be at least 2"));
            }
        }
        if self.perturb.instance_size < 2 {
            return Err(config_error("key `perturb.instance_size`: must be at least 2"));
        }
        Ok(())
    }

    /// Task list with `verify-all` expanded, deduplicated, in dependency order.
    pub fn expanded_tasks(&self) -> Vec<Task> {
        let mut out = Vec::new();
        for &t in &self.tasks {
            if t == Task::VerifyAll {
                if self.operator.is_some() {
                    out.extend([Task::Green, Task::Perturb, Task::Hardy, Task::Spectral]);
                }
                if self.radial.is_some() {
                    out.push(Task::Radial);
                }
                if self.liouville.is_some() {
                    out.push(Task::Liouville);
                }
            } else {
                out.push(t);
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

/// Assembled operator, exhaustion and anchor node.
pub struct Setup {
    pub op: DiscreteOperator,
    pub exhaustion: Option<Exhaustion>,
    pub anchor: usize,
}

pub fn build_setup(config: &RunConfig) -> Result<Option<Setup>> {
    let Some(source) = &config.operator else { return Ok(None) };
    let wrap = |e: Error| config_error(format!("key `operator`: {e}"));
    let (op, default_anchor) = match source {
        OperatorSource::Generator(g) => {
            let op = match *g {
                GeneratorSpec::Path { n, conductance, potential } => generators::path(n, conductance, potential),
                GeneratorSpec::Grid2d { half, potential } => generators::grid2d(half, potential),
                GeneratorSpec::Grid3d { half, potential } => generators::grid3d(half, potential),
                GeneratorSpec::RadialDisk { radius, beta } => generators::radial_disk(radius, beta),
                GeneratorSpec::Grid2dRadialDrift { half, b } => generators::grid2d_radial_drift(half, b),
                GeneratorSpec::Random { seed, n, drift } => {
                    if n == 0 {
                        return Err(config_error("key `operator.generator.n`: must be positive"));
                    }
                    Ok(random_subcritical(seed, n, drift).op)
                }
            }
            .map_err(wrap)?;
            let anchor = match *g {
                GeneratorSpec::Path { n, .. } => generators::path_center(n),
                _ => generators::origin(&op).unwrap_or_else(|| op.graph().interior()[0]),
            };
            (op, anchor)
        }
        OperatorSource::Inline(spec) => {
            let op = build_operator(spec).map_err(wrap)?;
            let anchor = op.graph().interior()[0];
            (op, anchor)
        }
        OperatorSource::File(path) => {
            let op = load_operator(path).map_err(wrap)?;
            let anchor = op.graph().interior()[0];
            (op, anchor)
        }
    };
    let ex = config.exhaustion.clone().unwrap_or_default();
    let anchor = ex.center.unwrap_or(default_anchor);
    if anchor >= op.n() || op.graph().is_boundary(anchor) {
        return Err(config_error(format!("key `exhaustion.center`: {anchor} is not an interior node")));
    }
    let exhaustion = match (&ex.levels, &ex.radii) {
        (Some(_), Some(_)) => return Err(config_error("key `exhaustion`: give either `levels` or `radii`, not both")),
        (Some(levels), None) => Some(Exhaustion::new(op.graph(), levels.clone())),
        (None, Some(radii)) => Some(balls(&op, anchor, radii, ex.metric)),
        (None, None) => None,
    }
    .transpose()
    .map_err(|e| config_error(format!("key `exhaustion`: {e}")))?;
    Ok(Some(Setup { op, exhaustion, anchor }))
}

fn balls(op: &DiscreteOperator, center: usize, radii: &[f64], metric: Metric) -> Result<Exhaustion> {
    let g = op.graph();
    let dist: Vec<f64> = match metric {
        Metric::Hop => g.hop_distances(center).iter().map(|&d| d as f64).collect(),
        Metric::Sup => {
            let coords = g.coords().ok_or_else(|| config_error("sup metric needs node coordinates"))?;
            let c = &coords[center];
            coords.iter().map(|p| p.iter().zip(c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)).collect()
        }
    };
    let interior = g.interior();
    let levels = radii.iter().map(|&r| interior.iter().copied().filter(|&x| dist[x] <= r).collect()).collect();
    Exhaustion::new(g, levels)
}

/// Evaluates a weight spec on `op` with anchor `anchor`.
pub fn weight_values(spec: &WeightSpec, op: &DiscreteOperator, anchor: usize) -> Result<Vec<f64>> {
    let g = op.graph();
    let n = op.n();
    let interior = |x: usize| !g.is_boundary(x);
    match spec {
        WeightSpec::Ones => Ok((0..n).map(|x| if interior(x) { 1.0 } else { 0.0 }).collect()),
        WeightSpec::Delta { node } => {
            let y = node.unwrap_or(anchor);
            if y >= n || !interior(y) {
                return Err(config_error(format!("delta weight node {y} is not interior")));
            }
            let mut w = vec![0.0; n];
            w[y] = 1.0 / op.measure()[y];
            Ok(w)
        }
        WeightSpec::ExpDecay { rate } => {
            let d = g.hop_distances(anchor);
            Ok((0..n).map(|x| if interior(x) { (-rate * d[x] as f64).exp() } else { 0.0 }).collect())
        }
        WeightSpec::Values { values } => {
            if values.len() != n {
                return Err(config_error(format!("weight has {} values for {n} nodes", values.len())));
            }
            Ok(values.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::from_json(text)
    }

    #[test]
    fn unknown_key_names_its_path_and_position() {
        let err = parse("{\n  \"name\": \"x\",\n  \"tasks\": [\"green\"],\n  \"tolerances\": { \"residul\": 1e-3 }\n}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("tolerances"), "{err}");
        assert!(err.contains("residul"), "{err}");
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn wrong_type_names_its_path() {
        let err = parse(r#"{"name":"x","tasks":["green"],"operator":{"generator":{"kind":"path","n":"ten"}}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("operator.generator"), "{err}");
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let cases = [
            (r#"{"name":"x","tasks":[]}"#, "tasks"),
            (r#"{"name":"x","tasks":["green"]}"#, "operator"),
            (r#"{"name":"x","tasks":["radial"]}"#, "radial"),
            (r#"{"name":"x","tasks":["radial"],"radial":{"dims":[1]}}"#, "radial.dims"),
            (r#"{"name":"x","tasks":["liouville"],"liouville":{"mode":"self-comparison"}}"#, "liouville"),
            (r#"{"name":"x","tasks":["radial"],"radial":{"dims":[3]},"tolerances":{"fit":-1}}"#, "tolerances.fit"),
            (r#"{"name":"x","tasks":["green"],"operator":{"file":"/nonexistent/op.json"}}"#, "operator.file"),
        ];
        for (text, key) in cases {
            let err = parse(text).and_then(|c| c.validate()).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{text}");
            assert!(err.to_string().contains(key), "{text}: {err}");
        }
    }

    #[test]
    fn verify_all_expands_by_section() {
        let c = parse(r#"{"name":"x","tasks":["verify-all","green"],"radial":{"dims":[2]}}"#).unwrap();
        assert_eq!(c.expanded_tasks(), vec![Task::Green, Task::Radial]);
        let c = parse(r#"{"name":"x","tasks":["verify-all"],"operator":{"generator":{"kind":"path","n":5}}}"#).unwrap();
        assert_eq!(c.expanded_tasks(), vec![Task::Green, Task::Perturb, Task::Hardy, Task::Spectral]);
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = parse(
            r#"{"name":"x","tasks":["green","spectral"],"seed":7,
                "operator":{"generator":{"kind":"grid2d","half":3}},
                "exhaustion":{"radii":[1,2,3],"metric":"sup"},"weight":{"kind":"exp-decay","rate":0.5}}"#,
        )
        .unwrap();
        let back = parse(&c.to_json()).unwrap();
        assert_eq!(back.to_json(), c.to_json());
    }

    #[test]
    fn balls_are_nested_and_centered() {
        let c = parse(
            r#"{"name":"x","tasks":["green"],"operator":{"generator":{"kind":"grid2d","half":3}},
                "exhaustion":{"radii":[0,1,3],"metric":"sup"}}"#,
        )
        .unwrap();
        let s = build_setup(&c).unwrap().unwrap();
        let ex = s.exhaustion.unwrap();
        let sizes: Vec<usize> = ex.levels().iter().map(|l| l.len()).collect();
        assert_eq!(sizes, vec![1, 9, 49]);
        assert_eq!(ex.levels()[0].nodes(), &[s.anchor]);
    }

    #[test]
    fn delta_weight_has_unit_mass() {
        let c = parse(r#"{"name":"x","tasks":["green"],"operator":{"generator":{"kind":"path","n":9}}}"#).unwrap();
        let s = build_setup(&c).unwrap().unwrap();
        let w = weight_values(&WeightSpec::Delta { node: None }, &s.op, s.anchor).unwrap();
        let mass: f64 = w.iter().zip(s.op.measure()).map(|(a, b)| a * b).sum();
        assert_eq!(mass, 1.0);
        assert!(weight_values(&WeightSpec::Values { values: vec![1.0] }, &s.op, s.anchor).is_err());
    }
}
