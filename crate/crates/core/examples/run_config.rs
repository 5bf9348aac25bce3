//! Layered run configuration: defaults, a TOML file, then `DHG_` variables.
//!
//!     DHG_TTA_STEPS=250 cargo run --example run_config [config.toml]

use dualgrasp::config::Config;

fn main() -> dualgrasp::Result<()> {
    let path = std::env::args().nth(1);
    let cfg = Config::load(path.as_deref().map(std::path::Path::new))?;
    print!("{}", cfg.to_toml());
    println!("# digest {}", cfg.digest());
    Ok(())
}
