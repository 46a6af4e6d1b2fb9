//! Drives the command-line interface in-process: writes a custom instance
//! file and a run configuration, then solves, integrates and checks.

use std::fs;

use mflow::cli::run;

fn main() -> std::io::Result<()> {
    mflow::cli::init_logging();
    let dir = std::env::temp_dir().join("mflow-cli-example");
    fs::create_dir_all(&dir)?;
    let instance = dir.join("instance.json");
    fs::write(
        &instance,
        r#"{
  "tag": "box_quadratic",
  "a": {"kind": "quadratic", "params": {"b": [1.0, 2.0]}},
  "b": {"kind": "box", "params": {"lower": [-1.0], "upper": [1.0]}},
  "l": [[1.0, 1.0]],
  "gamma": 0.5,
  "mu": 0.5,
  "w_bar": {"p": [0.0, 0.0], "v": [0.0]},
  "x0": {"p": [0.0, 0.0], "v": [0.0]}
}
"#,
    )?;
    let config = dir.join("run.json");
    fs::write(&config, r#"{"mode": "discrete", "stop": {"max_iter": 50000}}"#)?;
    let out = dir.join("out");
    let (inst, cfg, out) = (instance.to_str().unwrap(), config.to_str().unwrap(), out.to_str().unwrap());

    let code = run(["mflow", "solve", "--instance", inst, "--config", cfg, "--out", out]);
    println!("solve exit code {code}");
    println!("{}", fs::read_to_string(dir.join("out/summary.json"))?);

    let code = run(["mflow", "integrate", "--instance", "paper_example_1", "--lambda", "0.2,0.1,0.05", "--out", out]);
    println!("integrate exit code {code}");

    let code = run(["mflow", "check", "--instance", "paper_example_2", "--out", out]);
    println!("check exit code {code}");
    let code = run(["mflow", "project", "[0,0]", "[1,0]", "[1,1]"]);
    println!("project exit code {code}");
    Ok(())
}
