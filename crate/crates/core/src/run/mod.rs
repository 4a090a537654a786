//! Batch orchestration: a JSON config names an operator, an exhaustion and a
//! task list; `run` executes the tasks and writes `summary.json`,
//! `summary.txt` and per-task CSV files.
//!
//! Each task reports *assertions*, which must hold and decide the exit
//! status, and *findings*, which are finite-scale trends recorded as data.

mod config;
mod presets;
mod tasks;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    build_setup, weight_values, ExhaustionSpec, Expectations, GeneratorSpec, HardyParams, LiouvilleParams, Metric,
    OperatorSource, PerturbParams, PlanarParams, RadialParams, RunConfig, Setup, Task, Tolerances, TorsionParams,
    WeightSpec,
};
pub use presets::{preset, preset_names};

use crate::error::{Error, Result};

/// Operations a run can exercise; every one is reached by some preset.
pub const OPERATIONS: &[&str] = &[
    "build_operator",
    "apply",
    "adjoint",
    "check_ellipticity",
    "dirichlet_green",
    "minimal_green_exhaustion",
    "green_potential",
    "torsion_function",
    "check_duality",
    "three_g_constant",
    "semismall_profile",
    "quasimetric_constant",
    "iterated_kernels",
    "neumann_series",
    "resolvent_check",
    "sandwich_check",
    "monotonicity_in_eps",
    "equivalence_interval",
    "schur_bound",
    "quasimetric_3g_check",
    "optimal_hardy_weight",
    "alpha_roots",
    "supersolution_pair",
    "critical_hardy_weight",
    "invariance_check",
    "v_mu_comparison",
    "cutoff_tail_norms",
    "principal_eigenvalue",
    "weighted_green_operator",
    "spectrum",
    "heat_trace",
    "eigenvalue_lower_bound",
    "torsion_bound_audit",
    "criticality_probe",
    "positive_criticality_check",
    "liouville_compare",
    "hyperbolic_green",
    "hyperbolic_hardy",
    "hyperbolic_asymptotic_coeffs",
    "fit_expansion",
    "radial_residual",
    "planar_example_report",
    "hbig_probe",
];

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Finding {
    pub name: String,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskStatus {
    Passed,
    AssertionFailed,
    Errored,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TaskReport {
    pub task: Task,
    pub status: TaskStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub assertions: Vec<Check>,
    pub findings: Vec<Finding>,
    pub artifacts: Vec<String>,
    pub operations: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunSummary {
    pub name: String,
    pub seed: u64,
    pub passed: bool,
    pub tasks: Vec<TaskReport>,
    pub operations: Vec<String>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn task(&self, task: Task) -> Option<&TaskReport> {
        self.tasks.iter().find(|t| t.task == task)
    }

    pub fn finding(&self, task: Task, name: &str) -> Option<&serde_json::Value> {
        self.task(task)?.findings.iter().find(|f| f.name == name).map(|f| &f.value)
    }

    pub fn check(&self, task: Task, name: &str) -> Option<&Check> {
        self.task(task)?.assertions.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "run {} (seed {}): {verdict}", self.name, self.seed);
        for t in &self.tasks {
            let _ = writeln!(s, "\n[{}] {:?}", t.task.name(), t.status);
            if let Some(e) = &t.error {
                let _ = writeln!(s, "  error: {e}");
            }
            for c in &t.assertions {
                let mark = if c.passed { "ok  " } else { "FAIL" };
                let detail = match (c.value, c.bound) {
                    (Some(v), Some(b)) => format!(" ({v:.3e} vs {b:.3e})"),
                    (Some(v), None) => format!(" ({v:.6e})"),
                    _ => String::new(),
                };
                let _ = writeln!(s, "  {mark} {}{detail}", c.name);
            }
            for f in &t.findings {
                let mut v = f.value.to_string();
                if v.len() > 120 {
                    v.truncate(117);
                    v.push_str("...");
                }
                let _ = writeln!(s, "  finding {}: {v}", f.name);
            }
        }
        s
    }
}

/// Collector handed to each task.
#[derive(Default)]
pub(crate) struct TaskCtx {
    assertions: Vec<Check>,
    findings: Vec<Finding>,
    artifacts: BTreeMap<String, String>,
    ops: BTreeSet<&'static str>,
}

impl TaskCtx {
    pub(crate) fn op(&mut self, name: &'static str) {
        debug_assert!(OPERATIONS.contains(&name), "unknown operation {name}");
        self.ops.insert(name);
    }

    pub(crate) fn check(&mut self, name: impl Into<String>, passed: bool) {
        self.assertions.push(Check { name: name.into(), passed, value: None, bound: None });
    }

    /// Passes when `value ≤ bound` (NaN fails).
    pub(crate) fn check_le(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.assertions.push(Check {
            name: name.into(),
            passed: value <= bound,
            value: Some(value),
            bound: Some(bound),
        });
    }

    /// Passes when `value ≥ bound`.
    pub(crate) fn check_ge(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.assertions.push(Check {
            name: name.into(),
            passed: value >= bound,
            value: Some(value),
            bound: Some(bound),
        });
    }

    pub(crate) fn finding(&mut self, name: impl Into<String>, value: impl Serialize) {
        let value = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.findings.push(Finding { name: name.into(), value });
    }

    pub(crate) fn artifact(&mut self, file: impl Into<String>, content: String) {
        self.artifacts.insert(file.into(), content);
    }
}

/// Result of a run before anything is written.
pub struct RunOutput {
    pub summary: RunSummary,
    /// `(file name, contents)` of the CSV artifacts.
    pub artifacts: Vec<(String, String)>,
}

fn finish(task: Task, ctx: TaskCtx, outcome: Result<()>) -> (TaskReport, Vec<(String, String)>) {
    let error = outcome.err().map(|e| e.to_string());
    let status = if error.is_some() {
        TaskStatus::Errored
    } else if ctx.assertions.iter().all(|c| c.passed) {
        TaskStatus::Passed
    } else {
        TaskStatus::AssertionFailed
    };
    let artifacts: Vec<(String, String)> =
        ctx.artifacts.into_iter().map(|(f, c)| (format!("{}-{f}", task.name()), c)).collect();
    let report = TaskReport {
        task,
        status,
        error,
        assertions: ctx.assertions,
        findings: ctx.findings,
        artifacts: artifacts.iter().map(|a| a.0.clone()).collect(),
        operations: ctx.ops.iter().map(|s| s.to_string()).collect(),
    };
    (report, artifacts)
}

/// Validates and executes `config` without touching the file system.
/// Configuration problems come back as `Error::Config`; task failures are
/// isolated and recorded in the summary.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let setup = build_setup(config)?;
    let tasks = config.expanded_tasks();
    let shared = tasks::Shared::new(config, setup.as_ref());
    let (first, rest): (Vec<Task>, Vec<Task>) = tasks.iter().partition(|&&t| t == Task::Green);
    let mut results: Vec<(TaskReport, Vec<(String, String)>)> = Vec::new();
    // green first: the other graph tasks reuse its table
    for t in first {
        results.push(run_task(t, &shared));
    }
    results.extend(rest.par_iter().map(|&t| run_task(t, &shared)).collect::<Vec<_>>());
    let mut ops = BTreeSet::new();
    let mut artifacts = Vec::new();
    let mut reports = Vec::new();
    for (r, a) in results {
        ops.extend(r.operations.iter().cloned());
        artifacts.extend(a);
        reports.push(r);
    }
    let passed = reports.iter().all(|r| r.status == TaskStatus::Passed);
    Ok(RunOutput {
        summary: RunSummary {
            name: config.name.clone(),
            seed: config.seed,
            passed,
            tasks: reports,
            operations: ops.into_iter().collect(),
        },
        artifacts,
    })
}

fn run_task(task: Task, shared: &tasks::Shared) -> (TaskReport, Vec<(String, String)>) {
    let mut ctx = TaskCtx::default();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| tasks::dispatch(task, shared, &mut ctx)))
        .unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(Error::InvalidArgument(format!("task panicked: {msg}")))
        });
    finish(task, ctx, outcome)
}

/// Executes `config` and writes the report bundle into `out_dir`
/// (default: the config's `output_dir`).
pub fn run(config: &RunConfig, out_dir: Option<&Path>) -> Result<RunSummary> {
    let output = execute(config)?;
    let dir: PathBuf = out_dir.map(Path::to_path_buf).unwrap_or_else(|| config.output_dir.clone());
    write_bundle(&dir, &output)?;
    Ok(output.summary)
}

pub fn write_bundle(dir: &Path, output: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("summary.json"), output.summary.to_json() + "\n")?;
    std::fs::write(dir.join("summary.txt"), output.summary.to_text())?;
    for (name, content) in &output.artifacts {
        std::fs::write(dir.join(name), content)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_are_deterministic() {
        let c = preset("path1d-dirichlet").unwrap();
        let a = execute(&c).unwrap();
        let b = execute(&c).unwrap();
        assert_eq!(a.summary.to_json(), b.summary.to_json());
        assert_eq!(a.artifacts, b.artifacts);
        assert_eq!(a.summary.exit_code(), 0);
    }

    #[test]
    fn a_failing_task_does_not_stop_the_others() {
        let c = RunConfig::from_json(
            r#"{"name":"iso","tasks":["green","radial"],
                "operator":{"generator":{"kind":"path","n":9}},
                "radial":{"dims":[3],"planar":{"lambda":1.0,"b":0.0}}}"#,
        )
        .unwrap();
        let s = execute(&c).unwrap().summary;
        assert_eq!(s.task(Task::Green).unwrap().status, TaskStatus::Passed);
        let radial = s.task(Task::Radial).unwrap();
        assert_eq!(radial.status, TaskStatus::Errored);
        assert!(radial.error.as_deref().unwrap().contains("λ < 0"));
        assert!(!s.passed);
        assert_eq!(s.exit_code(), 1);
        assert!(s.to_text().contains("FAIL"));
    }

    #[test]
    fn failed_expectation_is_an_assertion_failure() {
        let c = RunConfig::from_json(
            r#"{"name":"expect","tasks":["liouville"],
                "liouville":{"mode":"planar","lambda":-1.0,"b":0.0},
                "expect":{"hypothesis_violated":false}}"#,
        )
        .unwrap();
        let s = execute(&c).unwrap().summary;
        assert_eq!(s.task(Task::Liouville).unwrap().status, TaskStatus::AssertionFailed);
        assert_eq!(s.exit_code(), 1);
    }

    #[test]
    fn config_errors_surface_before_any_task() {
        let c = RunConfig::from_json(r#"{"name":"x","tasks":[]}"#).unwrap();
        assert!(matches!(execute(&c), Err(Error::Config(_))));
    }

    #[test]
    fn bundle_contains_summary_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let s = run(&preset("hyperbolic-N3").unwrap(), Some(dir.path())).unwrap();
        assert!(s.passed);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(json["name"], "hyperbolic-N3");
        assert!(dir.path().join("summary.txt").exists());
        for t in &s.tasks {
            for a in &t.artifacts {
                assert!(dir.path().join(a).exists(), "{a}");
            }
        }
        let fitted = s.finding(Task::Radial, "N=3: fit").and_then(|v| v["fitted"].as_f64());
        assert!(fitted.is_some_and(|f| (f - 2.0).abs() < 1e-2), "{fitted:?}");
    }

    #[test]
    fn operation_names_are_unique() {
        let set: BTreeSet<_> = OPERATIONS.iter().collect();
        assert_eq!(set.len(), OPERATIONS.len());
    }
}
