use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradcodec"))
        .args(args)
        .current_dir(dir)
        .env_remove("GRADCODEC_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn values(text: &str) -> Vec<f64> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| l.split_whitespace().map(|t| t.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .collect()
}

#[test]
fn dithering_example_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.txt"), "(3 4)\n").unwrap();
    let c = run(&["compress", "x.txt", "--op", "dsd", "--nu", "0.1", "--out", "x.gcv"], dir.path());
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    assert!(stdout(&c).contains("distortion\t3.2"));
    let bytes = std::fs::read(dir.path().join("x.gcv")).unwrap();
    assert_eq!(&bytes[..4], b"GCV1");
    let d = run(&["decompress", "x.gcv"], dir.path());
    assert!(d.status.success());
    let v = values(&stdout(&d));
    assert_eq!(v.len(), 2);
    assert!((v[0] - 2.2).abs() < 1e-6 && (v[1] - 4.4).abs() < 1e-6, "{v:?}");
    assert!(stdout(&d).contains("# operator: dsd(nu=0.1)"));
}

#[test]
fn random_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ops: [&[&str]; 5] = [
        &["--op", "rsd", "--nu", "0.25"],
        &["--op", "sc", "--alpha", "0.8"],
        &["--op", "topk", "--k", "2"],
        &["--op", "natural"],
        &["--op", "dither", "--levels", "3"],
    ];
    let mut state = 0x1234_5678u64;
    for i in 0..100 {
        let d = 2 + i % 7;
        let x: Vec<String> = (0..d)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                format!("{}", ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 10.0)
            })
            .collect();
        let input = format!("x{i}.txt");
        std::fs::write(dir.path().join(&input), x.join(" ")).unwrap();
        let mut args = vec!["compress", input.as_str(), "--message", "3", "--seed", "11"];
        args.extend_from_slice(ops[i % ops.len()]);
        let c = run(&args, dir.path());
        assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
        let msg = format!("{input}.gcv");
        let a = stdout(&run(&["decompress", &msg], dir.path()));
        let b = stdout(&run(&["decompress", &msg], dir.path()));
        assert_eq!(a, b);
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("{msg}.json"))).unwrap()).unwrap();
        let orig: Vec<f64> = x.iter().map(|s| s.parse().unwrap()).collect();
        let dec = values(&a);
        let num: f64 = orig.iter().zip(&dec).map(|(p, q)| (p - q) * (p - q)).sum();
        let den: f64 = orig.iter().map(|p| p * p).sum();
        let recorded = side["distortion"].as_f64().unwrap();
        assert!((num / den - recorded).abs() <= 1e-9 * recorded.max(1.0), "{num} {den} {recorded}");
    }
}

#[test]
fn unknown_operator_tag_is_a_decode_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = b"GCV1".to_vec();
    bytes.push(42);
    bytes.extend_from_slice(&2u32.to_le_bytes());
    bytes.extend_from_slice(&0u32.to_le_bytes());
    std::fs::write(dir.path().join("bad.gcv"), bytes).unwrap();
    let o = run(&["decompress", "bad.gcv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown operator tag 42"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["compress", "missing.txt"], dir.path()).status.code(), Some(2));
    std::fs::write(dir.path().join("x.txt"), "1 2 3").unwrap();
    assert_eq!(run(&["compress", "x.txt", "--op", "fft"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["compress", "x.txt", "--op", "dsd", "--nu", "-1"], dir.path()).status.code(), Some(1));
    std::fs::write(dir.path().join("y.txt"), "1 two").unwrap();
    assert_eq!(run(&["compress", "y.txt", "--nu", "0.1"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.txt"), "1 2 3").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gradcodec"))
        .args(["compress", "x.txt", "--op", "rsd", "--nu", "0.5"])
        .current_dir(dir.path())
        .env("GRADCODEC_SEED", "99")
        .output()
        .unwrap();
    assert!(o.status.success());
    let side = std::fs::read_to_string(dir.path().join("x.txt.gcv.json")).unwrap();
    assert!(side.contains("\"seed\": 99"));
}

#[test]
fn bounds_table_reports_savings() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bounds", "--alpha", "0.25", "--d", "100,1000"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    let savings = |method: &str| -> Vec<String> {
        out.lines()
            .filter(|l| l.starts_with(method))
            .map(|l| l.rsplit('\t').next().unwrap().to_string())
            .collect()
    };
    assert_eq!(savings("Randomized SD"), vec!["9.90", "9.90"]);
    assert_eq!(savings("Natural compression"), vec!["3.16", "3.16"]);
    assert!(out.contains(" ± "));
    let csv = run(&["bounds", "--alpha", "0.5", "--d", "2", "--format", "csv"], dir.path());
    assert!(stdout(&csv).contains("error: "), "domain errors are reported inline");
    assert_eq!(run(&["bounds", "--format", "svg"], dir.path()).status.code(), Some(1));
}

#[test]
fn bench_with_eps_one_stops_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["bench", "--dataset", "synth:ridge,d=8,n=30", "--eps", "1", "--format", "csv", "--out", "out", "--run", "dsd:nu=0.1"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut files = 0;
    for entry in std::fs::read_dir(dir.path().join("out")).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows, vec!["t,bits,rel_err,distortion", "0,0,1e0,0e0"]);
        assert!(text.contains("# seed: "));
        files += 1;
    }
    assert_eq!(files, 3);
}

#[test]
fn bench_compressed_runs_beat_basic() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bench", "--dataset", "synth:ridge,d=50,n=200,seed=7", "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let ratio = |label: &str| -> f64 {
        let line = out.lines().find(|l| l.starts_with(label)).unwrap();
        assert!(line.contains("converged"), "{line}");
        line.split('\t').nth(4).unwrap().parse().unwrap()
    };
    assert_eq!(ratio("Basic"), 1.0);
    for label in ["dsd(", "rsd(", "sc("] {
        assert!(ratio(label) < 1.0, "{label}");
    }
    assert!(out.contains("Best Top-k"));
    let svg = std::fs::read_to_string(dir.path().join("out/bench.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("Best Top-k") && svg.contains("version: "));
}

#[test]
fn sweep_outputs_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["sweep", "--dataset", "synth:ridge,d=10,n=40", "--family", "rsd", "--grid", "0.1,0.5", "--seeds", "2", "--out", "out"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep_rsd.csv")).unwrap();
    assert!(csv.contains("# base_seed: 1") && csv.contains("# seeds: 2"));
    let svg = std::fs::read_to_string(dir.path().join("out/sweep_rsd.svg")).unwrap();
    assert!(svg.contains("1 + X") && svg.contains("1 / (1 - X)"));
    assert_eq!(run(&["sweep", "--grid="], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--family", "fft", "--grid", "0.5"], dir.path()).status.code(), Some(1));
}

#[test]
fn selftest_passes_and_detects_an_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["selftest", "--criteria", "9,10", "--scale", "0.05"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("PASS criterion 10"));
    let bad = run(&["selftest", "--criteria", "1", "--scale", "0.01", "--inject-fault", "golomb-rice"], dir.path());
    assert_eq!(bad.status.code(), Some(3));
    let out = stdout(&bad);
    assert!(out.contains("FAIL criterion 1") && out.contains("[FAIL] sc("), "{out}");
    assert_eq!(run(&["selftest", "--criteria", "11"], dir.path()).status.code(), Some(1));
}
