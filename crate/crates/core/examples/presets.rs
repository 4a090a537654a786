//! Runs a built-in preset and a hand-written config through the batch layer.

use critlab::run::{execute, preset, preset_names, RunConfig};

fn main() -> critlab::Result<()> {
    println!("presets: {}", preset_names().join(", "));
    let out = execute(&preset("torsion-audit")?)?;
    print!("{}", out.summary.to_text());

    let config = RunConfig::from_json(
        r#"{
            "name": "small-grid",
            "operator": { "generator": { "kind": "grid2d", "half": 4, "potential": 0.2 } },
            "exhaustion": { "radii": [1, 2, 4], "metric": "sup" },
            "tasks": ["green", "spectral"]
        }"#,
    )?;
    let out = execute(&config)?;
    println!("\n{} -> exit code {}", out.summary.name, out.summary.exit_code());
    for (file, _) in &out.artifacts {
        println!("  artifact {file}");
    }
    Ok(())
}
