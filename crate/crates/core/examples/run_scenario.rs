//! What the `homdip` binary does, from library code: build a scenario,
//! override a field, run it and list the files written.
//!
//!     cargo run --release --example run_scenario

use homdip::commands;
use homdip::scenario::{Command, Scenario};

fn main() -> homdip::Result<()> {
    let text = r#"
        thetas_deg = [0, 16, 32, 40]

        [sample]
        kind = "waveplate_pbs"
        preset = "mo"

        [filter]
        enabled = true
    "#;
    let scenario = Scenario::from_toml_str(text, &["background.enabled=true".into()])?;
    scenario.validate()?;
    let out = std::env::temp_dir().join("homdip_run_scenario");
    for f in commands::run(Command::Sweep, &scenario, &out)? {
        println!("{}", f.display());
    }
    print!("{}", std::fs::read_to_string(out.join("sweep.csv"))?);
    Ok(())
}
