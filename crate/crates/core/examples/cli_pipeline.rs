//! Runs the `optimize` and `classify` subcommands from a configuration string.

use shapelab::cli::{run, Command, RunConfig};

fn main() -> shapelab::Result<()> {
    let dir = std::env::temp_dir().join("shapelab-example");
    let text = format!(
        r#"
[grid]
dim = 2
n = 128
box = 1.5

[data]
f = {{ kind = "gaussian", amp = 1.0, width = 0.5 }}
g = {{ kind = "gaussian", amp = 1.0, width = 0.5 }}
Q = {{ kind = "constant", value = 0.015625 }}
domain = {{ kind = "ball", radius = 0.8 }}

[optimize]
max_steps = 120
stop_tol = 1e-9
coarse_levels = 1

[output]
directory = "{}"
"#,
        dir.display()
    );
    let mut cfg = RunConfig::parse(&text)?;
    let out = run(Command::Optimize, &cfg)?;
    println!("optimize wrote {:?}", out.files);
    cfg.data.domain = shapelab::cli::config::DomainPreset::File { path: dir.join("final.fld") };
    let out = run(Command::Classify, &cfg)?;
    for (k, v) in &out.summary {
        println!("{k} = {v}");
    }
    Ok(())
}
