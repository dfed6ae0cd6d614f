mod common;

use common::{num, path_str, random_kruskal, report, tensorkit};
use rand::Rng;
use tensorkit::io::{load_model, write_tensor, Model};
use tensorkit::{seeded_rng, DenseTensor};

fn write(dir: &std::path::Path, name: &str, t: &DenseTensor) -> String {
    let p = dir.join(name);
    write_tensor(&p, t).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn info_reports_shape_and_norms() {
    let dir = tempfile::tempdir().unwrap();
    let t = DenseTensor::from_fn(&[2, 3, 2], |i| (i[0] + i[1] + i[2]) as f64);
    let r = report(&["info", &write(dir.path(), "a.tnsr", &t)]);
    assert_eq!(r["metric.order"], "3");
    assert_eq!(r["metric.shape"], "2×3×2");
    assert!((num(&r, "metric.frobenius") - t.frobenius()).abs() < 1e-12);
    assert!((num(&r, "metric.density") - 11.0 / 12.0).abs() < 1e-12);

    let r = report(&["info", &write(dir.path(), "z.tnsr", &DenseTensor::zeros(&[4, 2]))]);
    assert_eq!(num(&r, "metric.frobenius"), 0.0);
    assert_eq!(num(&r, "metric.density"), 0.0);
}

#[test]
fn info_json_is_one_object() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "a.tnsr", &DenseTensor::filled(&[3], 2.0));
    let out = tensorkit(&["info", &p, "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "info");
    assert_eq!(v["metrics"]["order"], 1);
    assert!(v["wall_time_ms"].is_number());
}

#[test]
fn malformed_files_exit_with_format_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "a.tnsr", &DenseTensor::zeros(&[2, 3, 2]));
    let mut bytes = std::fs::read(&p).unwrap();
    bytes.truncate(bytes.len() - 8);
    std::fs::write(&p, &bytes).unwrap();
    let out = tensorkit(&["info", &p]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("byte 40") && err.contains("expected 96 bytes, found 88"), "{err}");

    bytes[0] = b'Q';
    std::fs::write(&p, &bytes).unwrap();
    let out = tensorkit(&["info", &p]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte 0"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "a.tnsr", &DenseTensor::filled(&[3, 3], 1.0));
    let out = dir.path().join("m");
    let o = path_str(&out);
    assert_eq!(tensorkit(&["decompose", &p, "--method", "svd", "--out", o]).status.code(), Some(2));
    assert_eq!(tensorkit(&["decompose", &p, "--method", "cp", "--out", o]).status.code(), Some(2));
    assert_eq!(tensorkit(&["info", path_str(&dir.path().join("missing.tnsr"))]).status.code(), Some(3));
    let bad_rank = tensorkit(&["decompose", &p, "--method", "tucker", "--ranks", "4,1", "--out", o]);
    assert_eq!(bad_rank.status.code(), Some(5));
    assert_eq!(tensorkit(&["conv-compress", &p, "--form", "cp", "--rank", "1", "--out", o]).status.code(), Some(5));
    assert_eq!(tensorkit(&["rpca", &p, "--lambda", "-1", "--out", o]).status.code(), Some(2));
}

#[test]
fn decompose_cp_tucker_tt_mpca() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = seeded_rng(11);
    let k = random_kruskal(&[5, 6, 4], 2, &mut rng);
    let p = write(dir.path(), "x.tnsr", &k.to_tensor());

    let out = dir.path().join("cp");
    let r = report(&["decompose", &p, "--method", "cp", "--rank", "2", "--out", path_str(&out)]);
    assert!(num(&r, "metric.relative_error") < 1e-6, "{r:?}");
    assert_eq!(num(&r, "count.params_after"), 30.0);
    let Model::Kruskal(loaded) = load_model(&out).unwrap() else { panic!("expected kruskal") };
    assert!(loaded.to_tensor().relative_error(&k.to_tensor()) < 1e-6);

    let out = dir.path().join("tucker");
    let r = report(&["decompose", &p, "--method", "tucker", "--ranks", "5,6,4", "--out", path_str(&out)]);
    assert!(num(&r, "metric.relative_error") < 1e-10);
    assert_eq!(r["flag"], "no compression");

    let noisy = DenseTensor::from_fn(&[4, 5, 3, 4], |_| rng.random_range(-1.0..1.0));
    let q = write(dir.path(), "n.tnsr", &noisy);
    let out = dir.path().join("tt");
    let r = report(&["decompose", &q, "--method", "tt", "--tol", "0.05", "--out", path_str(&out)]);
    assert!(num(&r, "metric.relative_error") <= 0.05);
    assert!(matches!(load_model(&out).unwrap(), Model::Tt(_)));

    let out = dir.path().join("mpca");
    let r = report(&["decompose", &q, "--method", "mpca", "--ranks", "2,2,2", "--out", path_str(&out)]);
    assert!(num(&r, "metric.captured_scatter") > 0.0);
    assert!(matches!(load_model(&out).unwrap(), Model::Mpca(_)));
}

fn rank_one(shape: &[usize], rng: &mut tensorkit::Rng) -> DenseTensor {
    random_kruskal(shape, 1, rng).to_tensor()
}

#[test]
fn rpca_auto_lambda_on_clean_input() {
    let dir = tempfile::tempdir().unwrap();
    let x = rank_one(&[100, 100, 3], &mut seeded_rng(3));
    let p = write(dir.path(), "x.tnsr", &x);
    let out = dir.path().join("r");
    let r = report(&["rpca", &p, "--lambda", "auto", "--out", path_str(&out)]);
    assert!((num(&r, "param.lambda") - 0.1).abs() < 1e-15);
    assert!(num(&r, "metric.sparse_ratio") < 1e-6, "{r:?}");
    assert!(num(&r, "metric.feasibility") < 1e-6);
    assert!(out.join("L.tnsr").exists() && out.join("S.tnsr").exists());
}

#[test]
fn rpca_recovers_corrupted_signal() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = seeded_rng(5);
    let l = rank_one(&[10, 10, 10], &mut rng);
    let rms = l.frobenius() / (l.len() as f64).sqrt();
    let mut x = l.clone();
    for _ in 0..50 {
        let i = rng.random_range(0..x.len());
        x.data_mut()[i] = l.data()[i] + if rng.random_bool(0.5) { 10.0 } else { -10.0 } * rms;
    }
    let p = write(dir.path(), "x.tnsr", &x);
    let t = write(dir.path(), "l.tnsr", &l);
    let r = report(&["rpca", &p, "--out", path_str(&dir.path().join("r")), "--truth", &t]);
    assert!(num(&r, "metric.recovery_error") < 1e-3, "{r:?}");
}

#[test]
fn conv_compress_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = seeded_rng(8);
    let k = random_kruskal(&[4, 3, 3, 3], 2, &mut rng);
    let p = write(dir.path(), "k.tnsr", &k.to_tensor());
    let r = report(&["conv-compress", &p, "--form", "cp", "--rank", "2", "--out", path_str(&dir.path().join("a"))]);
    assert!(num(&r, "metric.max_abs_deviation") <= 1e-10, "{r:?}");
    assert_eq!(num(&r, "count.params_before"), 108.0);
    assert_eq!(num(&r, "count.params_after"), 26.0);

    let out = dir.path().join("b");
    let r = report(&["conv-compress", &p, "--form", "tucker", "--ranks", "4,3,3,3", "--out", path_str(&out)]);
    assert!(num(&r, "metric.compression_ratio") >= 1.0);
    assert_eq!(r["flag"], "no compression");
    assert!(num(&r, "metric.max_abs_deviation") <= 1e-10);
    assert!(matches!(load_model(&out).unwrap(), Model::ConvKernel(_)));

    let big = DenseTensor::from_fn(&[64, 64, 3, 3], |_| rng.random_range(-1.0..1.0));
    let q = write(dir.path(), "big.tnsr", &big);
    let r = report(&["conv-compress", &q, "--form", "cp", "--rank", "16", "--out", path_str(&dir.path().join("c"))]);
    assert_eq!(num(&r, "count.params_after"), 2144.0);
    assert_eq!(num(&r, "count.params_before"), 36864.0);
}
