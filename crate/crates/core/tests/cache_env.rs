//! Operator cache location and entry format.

use std::process::Command as Process;

use serde_json::Value;
use solitonkit::cli::cache::{decode, encode, operator_key};
use solitonkit::cli::{OperatorCache, CACHE_ENV};
use solitonkit::deformation_kernel::e_operator;
use solitonkit::soliton_core::{model_pair, GridModel};

fn entries(dir: &std::path::Path) -> usize {
    let ops = dir.join("operators");
    if !ops.exists() {
        return 0;
    }
    std::fs::read_dir(ops).unwrap().map(|d| std::fs::read_dir(d.unwrap().path()).unwrap().count()).sum()
}

#[test]
fn environment_overrides_configured_directory() {
    let (env_dir, flag_dir, out) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let report = out.path().join("r.json");
    let output = Process::new(env!("CARGO_BIN_EXE_solitonkit"))
        .env(CACHE_ENV, env_dir.path())
        .args(["kernel-E", "--resolution", "32", "--cache-dir"])
        .arg(flag_dir.path())
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(entries(env_dir.path()) > 0);
    assert_eq!(entries(flag_dir.path()), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["provenance"]["cache_dir"], env_dir.path().display().to_string());
}

#[test]
fn entries_round_trip_and_reject_corruption() {
    let pair = model_pair(&GridModel::unit_sphere(), 16).unwrap();
    let op = e_operator(&pair).unwrap();
    let bytes = encode(&op);
    let back = decode(&bytes).unwrap();
    assert_eq!(back.matrix.indptr().raw_storage(), op.matrix.indptr().raw_storage());
    assert_eq!(back.matrix.indices(), op.matrix.indices());
    let bits = |m: &sprs::CsMat<f64>| m.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back.matrix), bits(&op.matrix));
    assert_eq!((back.label, back.domain, back.codomain, back.symmetry), (op.label.clone(), op.domain.clone(), op.codomain.clone(), op.symmetry));

    let mut bad = bytes.clone();
    let mid = bad.len() / 2;
    bad[mid] ^= 1;
    assert!(decode(&bad).is_err());
    assert!(decode(&bytes[..bytes.len() - 1]).is_err());
}

#[test]
fn corrupt_entry_is_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    let cache = OperatorCache::new(dir.path());
    let pair = model_pair(&GridModel::unit_sphere(), 16).unwrap();
    let fresh = cache.get_or_build("e", &pair, e_operator).unwrap();
    let path = cache.entry_path(&operator_key("e", &pair));
    std::fs::write(&path, b"garbage").unwrap();
    let rebuilt = cache.get_or_build("e", &pair, e_operator).unwrap();
    assert_eq!(rebuilt.matrix, fresh.matrix);
    assert!(cache.records().iter().all(|r| !r.hit));
    assert!(decode(&std::fs::read(&path).unwrap()).is_ok());
}
