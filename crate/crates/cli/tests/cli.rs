use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

fn corpus(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel)
}

fn mbtrain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbtrain")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_exit_codes() {
    let model = corpus("xppu.plant");
    let ok = mbtrain(&["validate", path(&model), path(&corpus("replace_pickalpha.lesson"))]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok), "0 violations\n");

    let bad = mbtrain(&["validate", path(&model), path(&corpus("perturbed/swap_electrical_pneumatic.lesson"))]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).starts_with("1 violation\nprecedence [steps 3,4]"));

    let missing = mbtrain(&["validate", path(&model), "/nonexistent.lesson"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nonexistent"));

    assert_eq!(mbtrain(&[]).status.code(), Some(2));
    assert_eq!(mbtrain(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mbtrain(&["--help"]).status.code(), Some(0));
}

#[test]
fn parse_faults_exit_two_with_positions() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.plant");
    std::fs::write(&bad, "model m\nblock A kind=plastic\n").unwrap();
    let out = mbtrain(&["validate", path(&bad), path(&corpus("replace_pickalpha.lesson"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.plant:2:"));
}

#[test]
fn render_to_stdout_and_file() {
    let model = corpus("xppu.plant");
    let lesson = corpus("replace_pickalpha.lesson");
    let dot = mbtrain(&["render", path(&model), path(&lesson), "--step", "3", "--format", "dot"]);
    assert_eq!(dot.status.code(), Some(0));
    assert!(stdout(&dot).starts_with("graph \"xppu\" {"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.svg");
    let svg = mbtrain(&["render", path(&model), path(&lesson), "--step", "3", "--out", path(&out)]);
    assert_eq!(svg.status.code(), Some(0));
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/step3.svg");
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(golden).unwrap());

    let beyond = mbtrain(&["render", path(&model), path(&lesson), "--step", "14"]);
    assert_eq!(beyond.status.code(), Some(2));
}

#[test]
fn score_flags_unattainable_means() {
    let recall = corpus("eval/recall.jsonl");
    let clean = mbtrain(&["score", "--recall", path(&recall)]);
    assert_eq!(clean.status.code(), Some(0));
    assert!(stdout(&clean).contains("group experiment: n=5 mean=0.8"));

    let flagged = mbtrain(&["score", "--recall", path(&recall), "--reported", "experiment=0.8", "--reported", "control=2.6"]);
    assert_eq!(flagged.status.code(), Some(1));
    let text = stdout(&flagged);
    assert!(text.contains("reported control 2.6: computed=2.5 nearest_attainable=2.5 gap=0.100 unattainable"), "{text}");

    let json = mbtrain(&["score", "--recall", path(&recall), "--json"]);
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(value["score"]["group_means"]["experiment"], 0.8);

    let with_lesson = mbtrain(&[
        "score",
        "--recall",
        path(&recall),
        "--model",
        path(&corpus("xppu.plant")),
        "--lesson",
        path(&corpus("replace_pickalpha.lesson")),
    ]);
    assert_eq!(with_lesson.status.code(), Some(0));
    let orphan = mbtrain(&["score", "--recall", path(&recall), "--lesson", path(&corpus("replace_pickalpha.lesson"))]);
    assert_eq!(orphan.status.code(), Some(2));
}

#[test]
fn audit_reports_swapped_columns() {
    let out = mbtrain(&["audit", "--tables", path(&corpus("eval/tables.jsonl"))]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    let fun = text
        .lines()
        .find(|l| l.contains("It is fun to use.") && l.contains("vts"))
        .unwrap();
    assert!(fun.contains("ok-if-swapped"), "{fun}");

    let json = mbtrain(&["audit", "--tables", path(&corpus("eval/tables.jsonl")), "--json"]);
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(value["rows"].as_array().unwrap().len(), 90);
}

struct Served {
    child: Child,
    tcp: String,
}

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn serve(log: &Path) -> Served {
    let mut child = Command::new(env!("CARGO_BIN_EXE_mbtrain"))
        .args([
            "serve",
            path(&corpus("xppu.plant")),
            path(&corpus("replace_pickalpha.lesson")),
            "--listen",
            "127.0.0.1:0",
            "--log",
            path(log),
        ])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut first = String::new();
    BufReader::new(child.stdout.as_mut().unwrap()).read_line(&mut first).unwrap();
    let tcp = first.trim().strip_prefix("tcp ").expect("serve prints its address").to_owned();
    Served { child, tcp }
}

fn wait_for_end(log: &Path) -> String {
    let deadline = Instant::now() + Duration::from_secs(5);
    while Instant::now() < deadline {
        let text = std::fs::read_to_string(log).unwrap_or_default();
        if text.contains("\"dir\":\"end\"") {
            return text;
        }
        std::thread::sleep(Duration::from_millis(20));
    }
    panic!("no end record in {}", log.display());
}

#[test]
fn served_session_log_replays() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("serve.jsonl");
    let served = serve(&log);

    let stream = TcpStream::connect(&served.tcp).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    let mut read_until = |prefix: &str| loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        assert!(!line.is_empty(), "connection closed before {prefix}");
        if line.starts_with(prefix) {
            return line;
        }
    };
    writeln!(writer, "HELLO remote").unwrap();
    assert_eq!(read_until("WELCOME"), "WELCOME s1 13\n");
    for k in 1..=13 {
        writeln!(writer, "NEXT").unwrap();
        read_until(&format!("STEP {k} "));
    }
    writeln!(writer, "SUPPORT").unwrap();
    read_until("OK");
    writeln!(writer, "BYE").unwrap();
    read_until("OK");
    wait_for_end(&log);
    drop(served);

    let out = mbtrain(&["replay", path(&log)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("session s1: step=13 penalties=1 visited={0,1,2,3,4,5,6,7,8,9,10,11,12,13} ended"), "{text}");

    // Editing one outbound line breaks exact replay.
    let tampered = dir.path().join("tampered.jsonl");
    let edited = std::fs::read_to_string(&log).unwrap().replacen("WELCOME s1 13", "WELCOME s1 12", 1);
    std::fs::write(&tampered, edited).unwrap();
    assert_eq!(mbtrain(&["replay", path(&tampered)]).status.code(), Some(1));

    let garbage = dir.path().join("garbage.jsonl");
    std::fs::write(&garbage, "not json\n").unwrap();
    assert_eq!(mbtrain(&["replay", path(&garbage)]).status.code(), Some(2));
}
