use std::io::Write;
use std::process::{Command, Output, Stdio};

fn bisp(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_bisp"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(stdin).unwrap();
    child.wait_with_output().unwrap()
}

fn ok(args: &[&str], stdin: &[u8]) -> Vec<u8> {
    let out = bisp(args, stdin);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

#[test]
fn plan_reports_exact_plane() {
    let out = ok(&["plan", "--partitions", "31", "--json"], b"");
    assert!(String::from_utf8_lossy(&out).contains("\"cardinality\":6"));
    let v = json(&out);
    assert_eq!(v["base"]["kind"], "plane");
    assert_eq!(v["base"]["q"], 5);
    let text = String::from_utf8(ok(&["plan", "--partitions", "9"], b"")).unwrap();
    assert!(text.contains("cardinality: 4"), "{text}");
}

#[test]
fn gen_partition_metrics_pipeline() {
    let edges = ok(&["gen", "--model", "complete", "--nodes", "10"], b"");
    assert_eq!(edges.iter().filter(|&&b| b == b'\n').count(), 100);
    let parts = ok(
        &[
            "partition",
            "--partitions",
            "7",
            "--algo",
            "bisp",
            "--seed",
            "1",
            "--mode",
            "hash",
        ],
        &edges,
    );
    let metrics = json(&ok(&["metrics", "--partitions", "7"], &parts));
    assert_eq!(metrics["edges"], 100);
    assert!(metrics["rf_max"].as_u64().unwrap() <= 3);

    // same seed, same output; threads do not change it
    let again = ok(
        &[
            "partition",
            "--partitions",
            "7",
            "--seed",
            "1",
            "--threads",
            "3",
        ],
        &edges,
    );
    assert_eq!(parts, again);
}

#[test]
fn grid_rejects_prime_partition_counts() {
    let out = bisp(
        &[
            "partition",
            "--algo",
            "grid",
            "--partitions",
            "7",
            "--seed",
            "1",
        ],
        b"0 1\n",
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid shape"));
    let out = ok(
        &[
            "partition",
            "--algo",
            "grid",
            "--partitions",
            "9",
            "--seed",
            "1",
        ],
        b"0 1\n2 3\n",
    );
    assert_eq!(out.iter().filter(|&&b| b == b'\n').count(), 2);
}

#[test]
fn exit_codes() {
    // randomized commands need a seed
    let out = bisp(&["partition", "--partitions", "7"], b"0 1\n");
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert_eq!(bisp(&["plan"], b"").status.code(), Some(1));
    assert_eq!(bisp(&["--help"], b"").status.code(), Some(0));
    // malformed data
    let out = bisp(
        &["partition", "--partitions", "7", "--seed", "3"],
        b"0 1\nbad\n",
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let out = bisp(&["metrics", "--partitions", "2"], b"0\t1\t5\n");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn extract_then_verify() {
    let edges = ok(&["gen", "--model", "complete", "--nodes", "20"], b"");
    let parts = ok(
        &["partition", "--partitions", "7", "--seed", "0x2a"],
        &edges,
    );
    let metrics = json(&ok(&["metrics", "--partitions", "7"], &parts));
    let system = ok(&["extract", "--nodes", "20", "--partitions", "7"], &parts);
    let report = json(&ok(&["system", "verify"], &system));
    assert_eq!(report["intersecting"], true);
    assert!(report["cardinality"].as_u64().unwrap() <= 3);
    let gap = report["epsilon"].as_f64().unwrap() - (metrics["imbalance"].as_f64().unwrap() - 1.0);
    assert!(gap.abs() < 1e-9);
}

#[test]
fn system_materialize_extend_verify() {
    let fano = ok(&["system", "materialize", "--partitions", "7"], b"");
    let report = json(&ok(&["system", "verify", "--tol", "1e-12"], &fano));
    assert_eq!(report["balanced"], true);
    assert_eq!(report["cardinality"], 3);
    let extended = ok(&["system", "extend", "--block", "2"], &fano);
    let v = json(&extended);
    assert_eq!(v["n"], 9);
    let report = json(&ok(&["system", "verify"], &extended));
    assert_eq!(report["balanced"], true);
    assert_eq!(report["cardinality"], 4);
    assert_eq!(
        bisp(&["system", "extend", "--block", "4"], &fano)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn generators_and_bench_subset() {
    let er = ok(
        &[
            "gen", "--model", "er", "--nodes", "50", "--edges", "200", "--seed", "7",
        ],
        b"",
    );
    assert_eq!(
        er,
        ok(
            &["gen", "--model", "er", "--nodes", "50", "--edges", "200", "--seed", "7"],
            b""
        )
    );
    assert_eq!(er.iter().filter(|&&b| b == b'\n').count(), 200);
    assert_eq!(
        bisp(
            &["gen", "--model", "powerlaw", "--nodes", "50", "--edges", "9"],
            b""
        )
        .status
        .code(),
        Some(1)
    );

    let report = json(&ok(&["bench", "--check", "2", "--check", "8"], b""));
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    assert!(checks.iter().all(|c| c["passed"] == true));
    assert_eq!(report["cardinality_table"].as_array().unwrap().len(), 1000);
}
