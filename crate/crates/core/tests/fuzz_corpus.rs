//! Replays the checked-in fuzz seeds through the properties the fuzz
//! targets assert, so the seeds and the invariants stay exercised on
//! stable toolchains.

use std::fs;
use std::path::PathBuf;

use rbfpdm::io::{format_particles, parse_manifest, parse_particles, RunConfig};
use rbfpdm::SdfGrid;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn accepted(results: &[(String, bool)]) -> Vec<&str> {
    results.iter().filter(|(_, ok)| *ok).map(|(n, _)| n.as_str()).collect()
}

#[test]
fn sdfgrid_seeds() {
    let results: Vec<(String, bool)> = seeds("sdfgrid_bytes")
        .into_iter()
        .map(|(name, bytes)| {
            let ok = match SdfGrid::from_bytes(&bytes) {
                Ok(g) => {
                    let again = SdfGrid::from_bytes(&g.to_bytes()).unwrap();
                    assert_eq!(again.to_bytes(), g.to_bytes(), "{name} is not stable under re-encoding");
                    true
                }
                Err(_) => false,
            };
            (name, ok)
        })
        .collect();
    assert_eq!(accepted(&results), ["plane_5", "sphere_3"]);
}

#[test]
fn particle_seeds() {
    let results: Vec<(String, bool)> = seeds("particles_text")
        .into_iter()
        .map(|(name, bytes)| {
            let text = String::from_utf8(bytes).unwrap();
            let ok = match parse_particles(&text, 0) {
                Ok(ps) => {
                    assert_eq!(parse_particles(&format_particles(&ps), 0).unwrap(), ps);
                    true
                }
                Err(_) => false,
            };
            (name, ok)
        })
        .collect();
    assert_eq!(accepted(&results), ["comments", "tetra"]);
}

#[test]
fn config_seeds() {
    let results: Vec<(String, bool)> = seeds("config_toml")
        .into_iter()
        .map(|(name, bytes)| {
            let text = String::from_utf8(bytes).unwrap();
            let ok = match RunConfig::parse(&text) {
                Ok(c) => {
                    assert_eq!(RunConfig::parse(&c.to_toml().unwrap()).unwrap(), c);
                    true
                }
                Err(_) => false,
            };
            (name, ok)
        })
        .collect();
    assert_eq!(accepted(&results), ["full", "minimal"]);
}

#[test]
fn manifest_seeds() {
    let results: Vec<(String, bool)> = seeds("manifest_csv")
        .into_iter()
        .map(|(name, bytes)| {
            let ok = parse_manifest(&String::from_utf8(bytes).unwrap()).is_ok();
            (name, ok)
        })
        .collect();
    assert_eq!(accepted(&results), ["two_rows"]);
}
