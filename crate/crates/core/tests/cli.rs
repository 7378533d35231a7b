//! End-to-end runs of the command-line binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_astar-rec"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn encode_decode_reproduces_samples() {
    let dir = tempfile::tempdir().unwrap();
    let msg = dir.path().join("msg.bin");
    let enc = dir.path().join("enc.json");
    let dec = dir.path().join("dec.json");
    let cases: [(&str, &[&str]); 6] = [
        ("example_pair.json", &["--exact", "ad"]),
        ("example_pair.json", &["--exact", "as"]),
        ("example_pairs.json", &["--exact", "pfr"]),
        ("example_pairs.json", &["--dad", "10"]),
        ("example_pair.json", &["--mrc", "6"]),
        ("example_blocks.json", &["--extra-bits", "3"]),
    ];
    for (model, coder) in cases {
        let model = configs().join(model);
        let mut args = vec![
            "encode",
            "--model",
            s(&model),
            "--seed",
            "11",
            "--out",
            s(&msg),
            "--samples",
            s(&enc),
        ];
        args.extend_from_slice(coder);
        let out = run(&args);
        assert!(
            out.status.success(),
            "{coder:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let out = run(&[
            "decode",
            "--model",
            s(&model),
            "--seed",
            "11",
            "--in",
            s(&msg),
            "--samples",
            s(&dec),
        ]);
        assert!(
            out.status.success(),
            "{coder:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert_eq!(
            std::fs::read(&enc).unwrap(),
            std::fs::read(&dec).unwrap(),
            "{coder:?}"
        );
    }
}

#[test]
fn bench_runtime_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    std::fs::write(
        &cfg,
        r#"{"algorithms":["as_star","ad_star"],"cells":[{"family":"uniform","d_kl_nats":1.0},{"family":"gaussian_centered","d_kl_nats":0.5}],"trials":7}"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let summary = dir.path().join("summary.json");
    let out = run(&[
        "bench-runtime",
        "--config",
        s(&cfg),
        "--out",
        s(&csv),
        "--summary",
        s(&summary),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), astar_rec::bench::CSV_HEADER);
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 7);
    let cells: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(cells.as_array().unwrap().len(), 4);

    let stdout = run(&["bench-runtime", "--config", s(&cfg)]);
    assert!(stdout.status.success());
    assert_eq!(String::from_utf8(stdout.stdout).unwrap(), text);
}

#[test]
fn verify_and_isokl_subcommands() {
    let out = run(&["verify", "--suite", "shrinkage", "--trials", "2000"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .all(|l| l.starts_with("PASS")));

    let out = run(&["isokl", "--k", "1.0", "--r", "2.0"]);
    assert!(out.status.success());
    let pair: astar_rec::PairSpec = serde_json::from_slice(&out.stdout).unwrap();
    assert!((pair.analytic_kl().unwrap() - 1.0).abs() < 1e-9);

    let out = run(&[
        "isokl",
        "--uniform",
        "--nu",
        "0",
        "--rho",
        "2",
        "--kappa",
        "1",
        "--beta",
        "-0.5",
    ]);
    assert!(out.status.success());
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    assert_eq!(run(&["encode"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["isokl", "--k", "3.0", "--r", "1.0"]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("bad.json");
    std::fs::write(&model, r#"{"target":{"family":"gaussian","mean":0,"variance":1},"proposal":{"family":"uniform","center":0,"width":1}}"#)
        .unwrap();
    let msg = dir.path().join("m.bin");
    let out = run(&[
        "encode",
        "--model",
        s(&model),
        "--seed",
        "0",
        "--exact",
        "ad",
        "--out",
        s(&msg),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn corrupt_message_fails_to_decode() {
    let dir = tempfile::tempdir().unwrap();
    let msg = dir.path().join("m.bin");
    std::fs::write(&msg, [0xFFu8; 3]).unwrap();
    let model = configs().join("example_pair.json");
    let out = run(&[
        "decode",
        "--model",
        s(&model),
        "--seed",
        "0",
        "--in",
        s(&msg),
    ]);
    assert!(!out.status.success());
}
