use std::fs;
use std::path::Path;

use xray_cluster_cli::{run_with, EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["xray-cluster"];
    argv.extend_from_slice(args);
    let code = run_with(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn blobs(dir: &Path) -> std::path::PathBuf {
    let f = dir.join("f.csv");
    let o = cli(&["synth", "--kind", "blobs", "--n-per-blob", "20", "--dim", "4", "--seed", "3", "--out", p(&f)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    f
}

#[test]
fn sweep_writes_report_and_chart() {
    let dir = tempfile::tempdir().unwrap();
    let f = blobs(dir.path());
    let report = dir.path().join("report.csv");
    let chart = dir.path().join("chart.svg");
    let o = cli(&[
        "sweep", "--features", p(&f), "--k", "2..6", "--algos", "all", "--seed", "7", "--out", p(&report), "--svg",
        p(&chart),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let text = fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().count(), 46);
    assert!(text.starts_with("algorithm,k,silhouette,runtime_ms,converged\nK-Means,2,"));
    let svg = fs::read_to_string(&chart).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 9);

    let again = dir.path().join("again.csv");
    cli(&["sweep", "--features", p(&f), "--seed", "7", "--out", p(&again)]);
    assert_eq!(fs::read(&report).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = blobs(dir.path());
    let o = cli(&["cluster", "--algo", "kmeanz", "--features", p(&f)]);
    assert_eq!(o.code, EXIT_USAGE);
    for name in ["kmeans", "minibatch", "spectral", "ward", "average", "birch", "gmm-tied", "gmm-diag", "gmm-full"] {
        assert!(o.stderr.contains(name), "{}", o.stderr);
    }
    assert_eq!(cli(&["sweep", "--algos", "kmeans,nope", "--features", p(&f)]).code, EXIT_USAGE);
    assert_eq!(cli(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(cli(&["sweep", "--features", p(&f), "--bogus"]).code, EXIT_USAGE);
    assert_eq!(cli(&["--help"]).code, EXIT_OK);
}

#[test]
fn missing_weights_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.csv");
    fs::write(&manifest, "path,crop_x,crop_y,crop_w,crop_h,age,sex\n").unwrap();
    let missing = dir.path().join("missing.bin");
    let o = cli(&["extract", "--weights", p(&missing), "--manifest", p(&manifest), "--out", "unused.csv"]);
    assert_eq!(o.code, EXIT_DATA);
    assert!(o.stderr.contains("missing.bin"), "{}", o.stderr);
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("ragged.csv");
    fs::write(&f, "id,f0,f1\na,1,2\nb,3\n").unwrap();
    let o = cli(&["cluster", "--algo", "kmeans", "--features", p(&f)]);
    assert_eq!(o.code, EXIT_DATA);
    assert!(o.stderr.contains("line 3"), "{}", o.stderr);

    let w = dir.path().join("w.bin");
    fs::write(&w, b"NOPE\x01").unwrap();
    let m = dir.path().join("m.csv");
    fs::write(&m, "path,crop_x,crop_y,crop_w,crop_h,age,sex\n").unwrap();
    let o = cli(&["extract", "--weights", p(&w), "--manifest", p(&m), "--out", "unused.csv"]);
    assert_eq!(o.code, EXIT_DATA);
    assert!(o.stderr.contains("bad magic") && o.stderr.contains("byte 0"), "{}", o.stderr);

    fs::write(dir.path().join("t.pgm"), b"P5 4 4 255\n0123456789abcde").unwrap();
    fs::write(&m, "path,crop_x,crop_y,crop_w,crop_h,age,sex\nt.pgm,,,,,,\n").unwrap();
    let o = cli(&["preprocess", "--manifest", p(&m), "--out", p(&dir.path().join("pp")), "--size", "4"]);
    assert_eq!(o.code, EXIT_DATA);
    assert!(o.stderr.contains("t.pgm") && o.stderr.contains("byte 26"), "{}", o.stderr);

    fs::write(&m, "path,crop_x,crop_y,crop_w,crop_h,age,sex\nt.pgm,,,,,abc,\n").unwrap();
    let o = cli(&["preprocess", "--manifest", p(&m), "--out", p(&dir.path().join("pp"))]);
    assert_eq!(o.code, EXIT_DATA);
    assert!(o.stderr.contains("line 2, field age"), "{}", o.stderr);
}

#[test]
fn cluster_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let f = blobs(dir.path());
    let labels = dir.path().join("labels.csv");
    let o = cli(&["cluster", "--algo", "gmm-diag", "--k", "2", "--features", p(&f), "--out", p(&labels)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let o = cli(&["evaluate", "--features", p(&f), "--labels", p(&labels)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let score: f64 = o.stdout.lines().next().unwrap().strip_prefix("silhouette,").unwrap().parse().unwrap();
    assert!(score > 0.5, "{score}");

    let one = dir.path().join("one.csv");
    let ids: Vec<String> = fs::read_to_string(&labels).unwrap().lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect();
    let body: String = ids.iter().map(|id| format!("{id},0\n")).collect();
    fs::write(&one, format!("id,cluster\n{body}")).unwrap();
    assert_eq!(cli(&["evaluate", "--features", p(&f), "--labels", p(&one)]).code, EXIT_NUMERIC);

    let o = cli(&["cluster", "--algo", "kmeans", "--k", "500", "--features", p(&f)]);
    assert_eq!(o.code, EXIT_DATA);
}

#[test]
fn image_path_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    let o = cli(&["synth", "--kind", "images", "--count", "6", "--size", "40", "--seed", "1", "--out", p(&raw)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let pre = dir.path().join("pre");
    let o = cli(&["preprocess", "--manifest", p(&raw.join("manifest.csv")), "--out", p(&pre), "--size", "32"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let w = dir.path().join("w.bin");
    let feats = dir.path().join("feats.csv");
    let o = cli(&[
        "extract", "--manifest", p(&pre.join("manifest.csv")), "--size", "32", "--seed", "5", "--save-weights", p(&w),
        "--out", p(&feats),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let feats2 = dir.path().join("feats2.csv");
    let o = cli(&["extract", "--manifest", p(&pre.join("manifest.csv")), "--size", "32", "--weights", p(&w), "--out", p(&feats2)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let a = fs::read_to_string(&feats).unwrap();
    assert_eq!(a, fs::read_to_string(&feats2).unwrap());
    assert!(a.starts_with("id,f0,f1,f2,f3,f4,f5,f6,f7,f8,f9,f10,f11,f12,f13,f14,f15\nimg_000,"));
    assert_eq!(a.lines().count(), 7);
}
