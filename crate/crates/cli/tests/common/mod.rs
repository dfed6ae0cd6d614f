#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use rand::Rng;
use tensorkit::decomp::KruskalTensor;
use tensorkit::{DenseMatrix, Rng as TkRng};

pub fn tensorkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tensorkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Runs a command that must succeed and returns its `key=value` report.
pub fn report(args: &[&str]) -> BTreeMap<String, String> {
    let out = tensorkit(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    parse(&String::from_utf8(out.stdout).unwrap())
}

pub fn parse(text: &str) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let (k, v) = line.split_once('=').expect("key=value line");
        map.entry(k.to_string())
            .and_modify(|old: &mut String| {
                old.push(';');
                old.push_str(v)
            })
            .or_insert_with(|| v.to_string());
    }
    map
}

pub fn num(map: &BTreeMap<String, String>, key: &str) -> f64 {
    map.get(key)
        .unwrap_or_else(|| panic!("missing {key} in {map:?}"))
        .parse()
        .unwrap()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn random_kruskal(shape: &[usize], rank: usize, rng: &mut TkRng) -> KruskalTensor {
    let factors = shape
        .iter()
        .map(|&i| DenseMatrix::from_fn(i, rank, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let weights = (0..rank).map(|_| rng.random_range(0.5..2.0)).collect();
    KruskalTensor::new(weights, factors).unwrap()
}
