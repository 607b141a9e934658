// Driving the command-line front end in-process: a JSON config file with a
// flag override, a CSV trajectory with its sidecar, and a machine-readable
// error.

use ncphase::cli::{run, sidecar_path};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("ncphase-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let config = dir.join("orbit.json");
    std::fs::write(&config, r#"{"command": "orbit", "params": {"theta": 0.5, "eta": 0.01}}"#)?;

    let mut out = Vec::new();
    let mut err = Vec::new();
    let cfg = config.to_str().ok_or("non-UTF-8 temp path")?;
    let code = run(["ncphase", "orbit", "--config", cfg, "--theta", "0.01"], &mut out, &mut err);
    println!("orbit exit {code}:\n{}", String::from_utf8(out)?);

    let csv = dir.join("kepler.csv");
    let csv_arg = csv.to_str().ok_or("non-UTF-8 temp path")?;
    let code = run(
        ["ncphase", "simulate", "--measure-period", "--reversal", "tau=T", "--out", csv_arg],
        &mut Vec::new(),
        &mut Vec::new(),
    );
    let text = std::fs::read_to_string(&csv)?;
    println!("simulate exit {code}: {} CSV lines, header {:?}", text.lines().count(), text.lines().next());
    println!("sidecar:\n{}", std::fs::read_to_string(sidecar_path(&csv))?);

    let mut out = Vec::new();
    let code = run(["ncphase", "repsolve", "--theta", "0.2", "--eta", "0.1", "--gamma", "0.01"], &mut out, &mut Vec::new());
    println!("repsolve exit {code}: {}", String::from_utf8(out)?);

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
