//! Frozen leading trace rows for a few configurations, to catch behavioral
//! drift. Set `TRAVELWAVE_BLESS=1` to regenerate the files in `tests/data`.

use std::path::PathBuf;

use travelwave::cli::{self, ExperimentConfig};
use travelwave::oracles::GoldenTrace;

const ROWS: usize = 40;

fn check(config: &str, golden: &str) {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let mut cfg = ExperimentConfig::load(&root.join("../../configs").join(config)).unwrap();
    cfg.stopping.timing = false;
    cfg.output.dir = None;
    let outcome = cli::solve(&cfg).unwrap();
    let path = root.join("tests/data/golden").join(golden);
    let fp = cfg.fingerprint();
    if std::env::var_os("TRAVELWAVE_BLESS").is_some() {
        GoldenTrace::freeze(&fp, &outcome.trace.rows, ROWS).save(&path).unwrap();
        return;
    }
    let frozen = GoldenTrace::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    frozen.compare(&fp, &outcome.trace.rows, 1e-8).unwrap();
}

#[test]
fn classical_boussinesq_mpe() {
    check("boussinesq_classical.toml", "boussinesq_classical_mpe9.csv");
}

#[test]
fn nls_odd_mpe() {
    check("nls_odd.toml", "nls_odd_mpe8.csv");
}

#[test]
fn bbm_periodic_mpe() {
    check("bbm_periodic.toml", "bbm_periodic_mpe5.csv");
}

#[test]
fn refuses_a_different_configuration() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let frozen = GoldenTrace::load(&root.join("tests/data/golden/nls_odd_mpe8.csv")).unwrap();
    assert!(frozen.compare("0000000000000000", &frozen.rows, 1e-8).is_err());
}
