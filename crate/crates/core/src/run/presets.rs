//! Named built-in scenarios.

use serde_json::{json, Value};

use super::config::RunConfig;
use crate::error::{Error, Result};

const NAMES: &[&str] = &[
    "path1d-subcritical",
    "path1d-dirichlet",
    "line1d-critical-trend",
    "grid2d",
    "grid3d-transient",
    "hyperbolic-N2",
    "hyperbolic-N3",
    "hyperbolic-N4",
    "hyperbolic-N5",
    "planar-exa",
    "planar-exb",
    "wmu-family",
    "torsion-audit",
    "liouville-self",
];

pub fn preset_names() -> &'static [&'static str] {
    NAMES
}

fn hyperbolic(dim: usize) -> Value {
    json!({
        "tasks": ["radial"],
        "radial": { "dims": [dim] },
    })
}

fn body(name: &str) -> Option<Value> {
    Some(match name {
        // c = 0 path of 100 nodes, three levels of 25, 51 and 100 nodes
        "path1d-subcritical" => json!({
            "operator": { "generator": { "kind": "path", "n": 100 } },
            "exhaustion": { "radii": [12, 25, 50] },
            "tasks": ["verify-all"],
            "hardy": { "mus": [{ "kind": "ones" }, { "kind": "exp-decay", "rate": 1.0 }] },
            "perturb": { "instances": 100, "equivalence_fractions": [0.0, 0.5, 0.9] },
            "expect": { "equivalence_golden": [10.49173, 13.47273, 15.56278] },
        }),
        // an explicit five-node path with a small potential, given inline
        "path1d-dirichlet" => json!({
            "operator": { "inline": {
                "nodes": 7,
                "edges": [[0, 1, 1.0], [1, 2, 1.0], [2, 3, 1.0], [3, 4, 1.0], [4, 5, 1.0], [5, 6, 1.0]],
                "potential": [0.0, 0.1, 0.1, 0.1, 0.1, 0.1, 0.0],
                "boundary": [0, 6],
            } },
            "tasks": ["verify-all"],
        }),
        // point-mass weight at the centre; λ0(M_R) = 2/(R+1)
        "line1d-critical-trend" => json!({
            "operator": { "generator": { "kind": "path", "n": 8193 } },
            "exhaustion": { "radii": [4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096] },
            "weight": { "kind": "delta" },
            "tasks": ["green", "spectral"],
            "expect": { "criticality": "critical-trend" },
        }),
        "grid2d" => json!({
            "operator": { "generator": { "kind": "grid2d", "half": 7 } },
            "exhaustion": { "radii": [2, 4, 7], "metric": "sup" },
            "weight": { "kind": "delta" },
            "hardy": { "mus": [{ "kind": "exp-decay", "rate": 0.5 }] },
            "torsion": { "beta": 0.0, "dim": 2.0 },
            "tasks": ["verify-all"],
        }),
        "grid3d-transient" => json!({
            "operator": { "generator": { "kind": "grid3d", "half": 16 } },
            "exhaustion": { "radii": [1, 2, 4, 6, 8, 10, 12, 14, 16], "metric": "sup" },
            "weight": { "kind": "delta" },
            "tolerances": { "exhaustion": 1e-2 },
            "tasks": ["green", "spectral"],
            "expect": { "criticality": "subcritical", "exhaustion_converged": true, "lambda0_stable": 1e-2 },
        }),
        "hyperbolic-N2" => hyperbolic(2),
        "hyperbolic-N3" => hyperbolic(3),
        "hyperbolic-N4" => hyperbolic(4),
        "hyperbolic-N5" => hyperbolic(5),
        "planar-exa" => json!({
            "tasks": ["radial", "liouville"],
            "radial": { "planar": { "lambda": -1.0, "b": 0.0 } },
            "liouville": { "mode": "planar", "lambda": -1.0, "b": 0.0 },
            "expect": { "hypothesis_violated": true },
        }),
        // the radial drift grid exercises the nonsymmetric Green machinery
        "planar-exb" => json!({
            "operator": { "generator": { "kind": "grid2d-radial-drift", "half": 8, "b": -1.0 } },
            "exhaustion": { "radii": [3, 5, 8], "metric": "sup" },
            "tasks": ["green", "perturb", "radial", "liouville"],
            "radial": { "planar": { "lambda": -1.0, "b": -1.0 } },
            "liouville": { "mode": "planar", "lambda": -1.0, "b": -1.0 },
            "expect": { "hypothesis_violated": true },
        }),
        "wmu-family" => json!({
            "operator": { "generator": { "kind": "path", "n": 201, "potential": 0.1 } },
            "exhaustion": { "radii": [5, 20, 40, 60, 80, 100] },
            "hardy": { "mus": [
                { "kind": "delta" },
                { "kind": "ones" },
                { "kind": "exp-decay", "rate": 1.0 },
                { "kind": "exp-decay", "rate": 0.05 },
            ] },
            "tasks": ["green", "hardy", "spectral"],
        }),
        "torsion-audit" => json!({
            "operator": { "generator": { "kind": "path", "n": 20 } },
            "torsion": { "beta": 0.0, "dim": 1.0 },
            "tasks": ["green", "spectral"],
        }),
        "liouville-self" => json!({
            "operator": { "generator": { "kind": "path", "n": 30 } },
            "tasks": ["liouville"],
            "liouville": { "mode": "self-comparison" },
        }),
        _ => return None,
    })
}

/// Config of the named preset, with `name` and an output directory set.
pub fn preset(name: &str) -> Result<RunConfig> {
    let mut value =
        body(name).ok_or_else(|| Error::Config(format!("unknown preset `{name}`; available: {}", NAMES.join(", "))))?;
    value["name"] = json!(name);
    value["output_dir"] = json!(format!("crit-lab-out/{name}"));
    RunConfig::from_json(&value.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_parses() {
        for name in NAMES {
            let c = preset(name).unwrap();
            c.validate().unwrap();
            assert_eq!(c.name, *name);
        }
        assert!(NAMES.contains(&"hyperbolic-N3"));
        assert!(matches!(preset("nope"), Err(Error::Config(_))));
    }
}
