//! Runs a JSON experiment config through the same path as the `relaxlab`
//! binary and lists the files it wrote.

use galrelax::experiment::{run, ExperimentConfig};

fn main() -> galrelax::Result<()> {
    let text = std::env::args().nth(1).map(std::fs::read_to_string).transpose()?.unwrap_or_else(|| {
        r#"{ "kind": "profile", "params": { "eps": 0.05 } }"#.to_string()
    });
    let config = ExperimentConfig::from_json(&text)?;
    let dir = std::env::temp_dir().join(format!("galrelax-{}", config.hash()));
    let report = run(&config, &dir)?;
    for f in &report.metadata.files {
        println!("{:<20} {:>8} bytes  {}", f.name, f.bytes, &f.sha256[..16]);
    }
    print!("{}", std::fs::read_to_string(dir.join("summary.txt"))?);
    Ok(())
}
