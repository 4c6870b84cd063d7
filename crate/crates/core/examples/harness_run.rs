//! Runs an experiment configuration and prints its checks.
//!
//! `cargo run --release --example harness_run -- configs/riccati_gaussian.toml`

use ds2::harness::run_config_file;

fn main() -> ds2::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/riccati_gaussian.toml".into());
    let m = run_config_file(&path)?;
    for c in &m.checks {
        println!("{} {} = {:.6e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value);
    }
    for a in &m.artifacts {
        println!("wrote {} ({} bytes)", a.path, a.bytes);
    }
    println!("status {:?}", m.status());
    Ok(())
}
