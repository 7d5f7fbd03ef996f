//! The shipped sample configs stay loadable and valid.

use std::fs;
use std::path::Path;

use galrelax::experiment::ExperimentConfig;

#[test]
fn sample_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap();
            assert_eq!(ExperimentConfig::from_json(&cfg.canonical_json()).unwrap(), cfg);
            count += 1;
        }
    }
    assert!(count >= 9);
}
