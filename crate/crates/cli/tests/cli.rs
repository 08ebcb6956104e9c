use std::path::Path;
use std::process::{Command, Output};

fn ville(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ville")).args(args).output().expect("run ville")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn golden(name: &str) -> Vec<u8> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden").join(name);
    std::fs::read(path).unwrap()
}

#[test]
fn build_text() {
    let out = ville(&["build", "--family", "always-only", "--length", "6", "--threshold", "exp:3", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "010101\n");

    let out = ville(&["build", "--family", "two-fn", "--length", "7"]);
    assert_eq!(stdout(&out), "0101001\n");
}

#[test]
fn empty_length() {
    for format in ["text", "packed"] {
        let out = ville(&["build", "--family", "mixed-5", "--length", "0", "--format", format]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn base_two_is_rejected() {
    let out = ville(&["build", "--family", "two-fn", "--length", "10", "--threshold", "exp:2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("r > 2"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("bad.fam");
    std::fs::write(&fam, "f1 = always\nf3 = contains_one\n").unwrap();
    let out = ville(&["build", "--family", fam.to_str().unwrap(), "--length", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    let table = dir.path().join("t.txt");
    std::fs::write(&table, "3\n4\n").unwrap();
    let arg = format!("table:{}", table.display());
    let out = ville(&["build", "--family", "infinite", "--length", "100", "--threshold", &arg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("capacity(2) = 4"), "{}", stderr(&out));

    let out = ville(&["build", "--family", "no-such-family", "--length", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn custom_family_file_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("two.fam");
    std::fs::write(&fam, "# same as two-fn\nf1 = always\nf2 = last_bit(1)\n").unwrap();
    let table = dir.path().join("t.txt");
    let caps: String = (1..=20).map(|i| format!("{}\n", 3u64.pow(i))).collect();
    std::fs::write(&table, caps).unwrap();
    let arg = format!("table:{}", table.display());
    let from_file = ville(&["build", "--family", fam.to_str().unwrap(), "--length", "3000", "--threshold", &arg]);
    let builtin = ville(&["build", "--family", "two-fn", "--length", "3000"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, builtin.stdout);
}

#[test]
fn golden_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["always-only", "two-fn", "mixed-5", "infinite"] {
        let out = ville(&["build", "--family", name, "--length", "4096", "--format", "text"]);
        assert_eq!(out.stdout, golden(&format!("{name}.txt")), "{name}");
        let path = dir.path().join(format!("{name}.bin"));
        let out = ville(&[
            "build", "--family", name, "--length", "4096", "--format", "packed", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(std::fs::read(&path).unwrap(), golden(&format!("{name}.bin")), "{name}");
    }
}

#[test]
fn csv_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = ville(&[
        "build", "--family", "two-fn", "--length", "7", "--format", "csv", "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "n,bit\n1,0\n2,1\n3,0\n4,1\n5,0\n6,0\n7,1\n");
    let trace = std::fs::read_to_string(trace).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "n,cutoff,witness,active_set,bit");
    assert_eq!(lines[1], "1,1,1,1,0");
    assert_eq!(lines[5], "5,2,1,1;2,0");
    assert_eq!(lines[6], "6,2,1,1,0");
    assert_eq!(lines.len(), 8);
}

#[test]
fn failed_run_leaves_no_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.txt");
    std::fs::write(&table, "3\n5\n").unwrap();
    let trace = dir.path().join("trace.csv");
    let arg = format!("table:{}", table.display());
    let out = ville(&[
        "build", "--family", "infinite", "--length", "500", "--threshold", &arg, "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("exhausted"));
    assert!(!trace.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn verify_defaults_pass() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["always-only", "two-fn", "mixed-5", "infinite"] {
        let report = dir.path().join(format!("{name}.json"));
        let out = ville(&["verify", "--family", name, "--length", "100000", "--report", report.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stdout(&out));
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
        assert_eq!(json["pass"], true);
        let checks = json["checks"].as_array().unwrap();
        assert_eq!(checks.len(), 7);
        for c in checks.iter().filter(|c| c["hard"] == true) {
            assert_ne!(c["verdict"], "fail", "{name}: {c}");
        }
    }
}

#[test]
fn verify_finite_bound() {
    let out = ville(&["verify", "--family", "mixed-5", "--length", "20000", "--checks", "finite-bound"]);
    assert_eq!(out.status.code(), Some(0));
    let out = ville(&["verify", "--family", "infinite", "--length", "1000", "--checks", "finite-bound"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("finite family"));
}

#[test]
fn verify_input_file() {
    let dir = tempfile::tempdir().unwrap();
    let ones = dir.path().join("ones.txt");
    std::fs::write(&ones, "1111111111\n").unwrap();
    let out = ville(&["verify", "--input", ones.to_str().unwrap(), "--checks", "half"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));

    let good = dir.path().join("good.txt");
    std::fs::write(&good, golden("mixed-5.txt")).unwrap();
    let out = ville(&["verify", "--input", good.to_str().unwrap(), "--checks", "half"]);
    assert_eq!(out.status.code(), Some(0));

    let out = ville(&["verify", "--input", good.to_str().unwrap(), "--checks", "alternation"]);
    assert_eq!(out.status.code(), Some(2));

    let junk = dir.path().join("junk.txt");
    std::fs::write(&junk, "0102").unwrap();
    let out = ville(&["verify", "--input", junk.to_str().unwrap(), "--checks", "half"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("'2'"));
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn analyze_first_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = ville(&[
        "analyze", "--family", "infinite", "--length", "65536", "--select", "1", "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let header = std::fs::read_to_string(dir.path().join("select_1.csv")).unwrap();
    assert!(header.starts_with("m,n_m,bit,S_l,two_delta\n"));
    let rows = rows(&dir.path().join("select_1.csv"));
    assert_eq!(rows.len(), 65536);
    let last: i64 = rows.last().unwrap()[4].parse().unwrap();
    assert!(last <= 0);
    assert!(rows.iter().all(|r| r[4].parse::<i64>().unwrap() <= 0));

    let summary = rows_of(dir.path(), "summary.csv");
    assert_eq!(summary.len(), 1);
    assert_eq!(summary[0][0], "1");
    assert_eq!(summary[0][4], "0");
    let checkpoints = rows_of(dir.path(), "checkpoints.csv");
    assert_eq!(checkpoints.len(), 17);
}

fn rows_of(dir: &Path, name: &str) -> Vec<Vec<String>> {
    rows(&dir.join(name))
}

#[test]
fn analyze_caring_stages_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = ville(&[
        "analyze", "--family", "two-fn", "--length", "2000", "--select", "2", "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let bits = stdout(&ville(&["build", "--family", "two-fn", "--length", "2000"]));
    let bits: Vec<u8> = bits.trim().bytes().map(|b| b - b'0').collect();
    let caring: Vec<usize> = (2..=2000).filter(|&n| bits[n - 2] == 1).collect();
    let rows = rows_of(dir.path(), "select_2.csv");
    let positions: Vec<usize> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(positions, caring);
    for r in &rows {
        let n: usize = r[1].parse().unwrap();
        assert_eq!(r[2].parse::<u8>().unwrap(), bits[n - 1]);
    }
}

#[test]
fn analyze_unknown_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = ville(&[
        "analyze", "--family", "two-fn", "--length", "100", "--select", "3", "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--select 3"));
}

#[test]
fn catalog_lists_everything() {
    let out = ville(&["catalog"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for name in [
        "always", "last_bit", "contains_one", "suffix", "periodic", "zeros_run", "majority_ones", "suffix_binary",
        "always-only", "two-fn", "mixed-5", "infinite",
    ] {
        assert!(text.contains(name), "{name}");
    }
}
