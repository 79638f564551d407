//! Runs a convergence study described by a TOML document, the same way the
//! `hdgplus --config` command does, and writes its tables to a temporary
//! directory.

use hdgplus::cli::{run, StudyConfig};

const STUDY: &str = r#"
command = "converge"
family = "hexagon"
k = 1
levels = 4
problem = "varkappa"
"#;

pub fn run_example() -> hdgplus::Result<()> {
    let mut cfg = StudyConfig::from_toml_str(STUDY)?;
    cfg.out = std::env::temp_dir().join(format!("hdgplus-study-{}", std::process::id()));
    let outcome = run(&cfg)?;
    outcome.write(&cfg.out)?;
    print!("{}", outcome.rates_txt);
    println!("tables written to {}", cfg.out.display());
    std::fs::remove_dir_all(&cfg.out)?;
    assert!(outcome.passed());
    Ok(())
}

fn main() -> hdgplus::Result<()> {
    run_example()
}
