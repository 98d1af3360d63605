//! One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use itertools::Itertools;
use mbtrain_core::eval::{
    audit_tables, compare_reported, descriptive_stats, score_recall, AuditTolerance, Group, RecallRecord, RowVerdict,
    SdConvention, TableRow,
};
use mbtrain_core::format::{parse_lesson_in, parse_model, parse_model_in, serialize_model};
use mbtrain_core::model::{Block, Comparator, ConnStatus, Discipline, ModelOp, PlantModel, Port, PortKind};
use mbtrain_core::procedure::{
    check_reversal, enumerate_valid_orders, order_is_valid, step_annotation, validate_lesson, Constraint,
    HighlightKind, Lesson, Step,
};
use mbtrain_core::protocol::log::{replay, RecordedSession};
use mbtrain_core::protocol::{decode, encode, ClientId, Message, Role, SessionContext, ViewVerb};
use mbtrain_core::{Exact, Model};
use proptest::prelude::*;
use proptest::sample::Index;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn corpus(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel)
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(corpus(rel)).unwrap()
}

fn model() -> Model {
    parse_model_in("xppu.plant", &read("xppu.plant")).unwrap()
}

fn lesson(rel: &str) -> Lesson {
    parse_lesson_in(rel, &read(rel), &model()).unwrap()
}

fn bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mbtrain")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Draws `cases` values from a strategy with a fixed seed.
fn samples<S: Strategy>(strategy: S, cases: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::deterministic();
    (0..cases).map(|_| strategy.new_tree(&mut runner).unwrap().current()).collect()
}

fn corpus_validity() -> Check {
    let start = Instant::now();
    let out = bin(&["validate", p(&corpus("xppu.plant")), p(&corpus("replace_pickalpha.lesson"))]);
    let elapsed = start.elapsed();
    let text = String::from_utf8_lossy(&out.stdout);
    ensure(out.status.code() == Some(0), format!("exit {:?}", out.status.code()))?;
    ensure(text == "0 violations\n", format!("output {text:?}"))?;
    ensure(lesson("replace_pickalpha.lesson").step_count() == 13, "step count")?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("13 steps, 0 violations in {elapsed:.0?}"))
}

fn ordering_sensitivity() -> Check {
    let m = model();
    for (file, rule, steps) in [
        ("perturbed/swap_electrical_pneumatic.lesson", "precedence", vec![3, 4]),
        ("perturbed/swap_mechanical_electrical.lesson", "precedence", vec![5, 6]),
        ("perturbed/verify_omitted.lesson", "verify-between", vec![1, 3]),
    ] {
        let report = validate_lesson(&lesson(file), &m);
        ensure(report.op_faults.is_empty() && report.violations.len() == 1, format!("{file}: {report}"))?;
        let v = &report.violations[0];
        ensure(v.rule == rule && v.step_indices == steps, format!("{file}: {v:?}"))?;
        let out = bin(&["validate", p(&corpus("xppu.plant")), p(&corpus(file))]);
        ensure(out.status.code() == Some(1), format!("{file}: exit {:?}", out.status.code()))?;
    }
    Ok("3 fixtures, one violation each at [3,4] [5,6] [1,3]".into())
}

const CLASSES: [&str; 4] = ["a", "b", "c", "d"];

fn small_model() -> PlantModel<f64> {
    parse_model(
        "model m\nblock M kind=mechatronic_module\nblock A kind=mechanical parent=M\nblock B kind=software\n\
         port A.p kind=pneumatic\nport B.p kind=pneumatic\nport A.e kind=electrical\nport B.e kind=electrical\n\
         connect c_p A.p B.p\nconnect c_e A.e B.e initial=disconnected\nobservable x = 6\n",
    )
    .unwrap()
}

fn arb_small_lesson() -> impl Strategy<Value = Lesson<f64>> {
    let op = prop_oneof![
        Just(None),
        (0usize..2, any::<bool>()).prop_map(|(c, on)| {
            let c = ["c_p", "c_e"][c].to_owned();
            Some(if on { ModelOp::Connect(c) } else { ModelOp::Disconnect(c) })
        }),
        (0i64..2).prop_map(|v| Some(ModelOp::SetObservable { name: "x".into(), value: v as f64 })),
        (0i64..2).prop_map(|v| Some(ModelOp::Verify { name: "x".into(), comparator: Comparator::Eq, value: v as f64 })),
    ];
    let steps = proptest::collection::vec((0usize..3, 0usize..4, op), 1..=6);
    let constraint = prop_oneof![
        (0usize..4, 0usize..4, any::<bool>()).prop_map(|(b, a, scoped)| Constraint::Precedence {
            before: CLASSES[b].into(),
            after: CLASSES[(a + usize::from(a == b)) % 4].into(),
            scope: scoped.then(|| "M".into()),
        }),
        (0usize..4, 0usize..4, 0i64..2).prop_map(|(a, b, v)| Constraint::VerifyBetween {
            observable: "x".into(),
            comparator: Comparator::Eq,
            value: v as f64,
            after_class: CLASSES[a].into(),
            before_class: CLASSES[b].into(),
        }),
    ];
    (steps, proptest::collection::vec(constraint, 1..5)).prop_map(|(steps, constraints)| {
        let mut l = Lesson::new("l", "m");
        l.steps = steps
            .into_iter()
            .enumerate()
            .map(|(i, (t, c, op))| Step {
                index: i + 1,
                instruction: String::new(),
                target: ["M", "A", "B"][t].into(),
                class: CLASSES[c].into(),
                op,
            })
            .collect();
        l.constraints = constraints;
        l
    })
}

fn brute_force_oracle() -> Check {
    let start = Instant::now();
    let (m, l) = (model(), lesson("replace_pickalpha.lesson"));
    let slice: Vec<Step> = [1, 2, 4, 6, 7].iter().map(|&k| l.step(k).unwrap().clone()).collect();
    let count = enumerate_valid_orders(&slice, &m, &l.constraints, 4).map_err(|e| e.to_string())?;
    ensure((count.count, count.total) == (1, 120), format!("slice count {}/{}", count.count, count.total))?;

    let small = small_model();
    let mut permutations = 0;
    let mut valid = 0;
    for lesson in samples(arb_small_lesson(), 200) {
        for perm in (0..lesson.step_count()).permutations(lesson.step_count()) {
            let order: Vec<&Step<f64>> = perm.iter().map(|&i| &lesson.steps[i]).collect();
            let mut permuted = lesson.clone();
            permuted.steps = order.iter().map(|s| (*s).clone()).collect();
            permuted.renumber();
            let ours = validate_lesson(&permuted, &small).is_empty();
            let oracle = order_is_valid(&order, &small, &lesson.constraints);
            ensure(ours == oracle, format!("disagreement on {perm:?} of {lesson:?}"))?;
            permutations += 1;
            valid += usize::from(ours);
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;
    Ok(format!("slice 1/120; 200 sets, {permutations} orders agree ({valid} valid) in {elapsed:.1?}"))
}

fn reversal() -> Check {
    let ok = check_reversal(&lesson("replace_pickalpha.lesson")).map_err(|e| e.to_string())?;
    ensure(ok.holds, format!("corpus: {:?}", ok.mismatch))?;
    let moved = check_reversal(&lesson("perturbed/moved_mount.lesson")).map_err(|e| e.to_string())?;
    ensure(!moved.holds, "moved-mount fixture passed")?;
    Ok(format!("corpus holds; moved-mount: {}", moved.mismatch.unwrap_or_default()))
}

const DISCIPLINES: [Discipline; 4] = [
    Discipline::MechatronicModule,
    Discipline::ElectricElectronic,
    Discipline::Software,
    Discipline::Mechanical,
];

fn arb_model() -> impl Strategy<Value = PlantModel<f64>> {
    (1usize..8)
        .prop_flat_map(|nb| {
            (
                proptest::collection::vec((0usize..4, any::<Option<Index>>()), nb),
                proptest::collection::vec((any::<Index>(), 0usize..4), 0..14),
                proptest::collection::vec((any::<Index>(), any::<Index>(), any::<bool>()), 0..10),
                proptest::collection::btree_map("[a-z][a-z0-9_]{0,6}", -4000i64..4000, 0..4),
            )
        })
        .prop_map(|(blocks, ports, conns, obs)| {
            let mut m = PlantModel::new("m");
            for (i, (d, parent)) in blocks.iter().enumerate() {
                let mut b = Block::new(format!("B{i}"), DISCIPLINES[*d]);
                if let Some(p) = parent.filter(|_| i > 0) {
                    b = b.with_parent(format!("B{}", p.index(i)));
                }
                m.blocks.push(b);
            }
            for (j, (owner, kind)) in ports.iter().enumerate() {
                m.ports.push(Port::new(format!("B{}", owner.index(blocks.len())), &format!("p{j}"), PortKind::ALL[*kind]));
            }
            let mut n = 0;
            for (a, b, off) in conns {
                if m.ports.is_empty() {
                    break;
                }
                let pa = m.ports[a.index(m.ports.len())].clone();
                let others: Vec<String> = m.ports.iter().filter(|q| q.kind == pa.kind && q.id != pa.id).map(|q| q.id.clone()).collect();
                if let Some(pb) = (!others.is_empty()).then(|| &others[b.index(others.len())]) {
                    let status = if off { ConnStatus::Disconnected } else { ConnStatus::Connected };
                    m.connect(&format!("c{n}"), &pa.id, pb, status);
                    n += 1;
                }
            }
            m.observables = obs.into_iter().map(|(k, v)| (k, v as f64 / 8.0)).collect();
            m
        })
}

fn shuffled(text: &str, seed: usize) -> String {
    let mut lines: Vec<&str> = text.lines().collect();
    let header = lines.remove(0);
    lines.reverse();
    if !lines.is_empty() {
        let len = lines.len();
        lines.rotate_left(seed % len);
    }
    std::iter::once(header).chain(lines).map(|l| format!("{l}\n")).collect()
}

fn format_round_trips() -> Check {
    let m = model();
    let text = serialize_model(&m).map_err(|e| e.to_string())?;
    let again: Model = parse_model(&text).map_err(|e| format!("{e:?}"))?;
    ensure(again.structurally_eq(&m), "corpus model changed")?;
    for (i, generated) in samples(arb_model(), 500).into_iter().enumerate() {
        let text = serialize_model(&generated).map_err(|e| e.to_string())?;
        let parsed: PlantModel<f64> = parse_model(&text).map_err(|e| format!("model {i}: {e:?}"))?;
        ensure(parsed.structurally_eq(&generated), format!("model {i} changed"))?;
        let permuted: PlantModel<f64> = parse_model(&shuffled(&text, i)).map_err(|e| format!("model {i} permuted: {e:?}"))?;
        ensure(serialize_model(&permuted).map_err(|e| e.to_string())? == text, format!("model {i} bytes moved"))?;
    }
    Ok("corpus + 500 generated models, stable under line permutation".into())
}

fn arb_message() -> impl Strategy<Value = Message> {
    let word = "[A-Za-z0-9_.]{1,10}";
    let text = "[^\r\n]{0,30}";
    let value = (-400i64..400).prop_map(|v| v as f64 / 4.0);
    let role = prop_oneof![Just(Role::Display), Just(Role::Remote), Just(Role::Support)];
    let verb = prop_oneof![Just(ViewVerb::Pan), Just(ViewVerb::Zoom), Just(ViewVerb::Rotate)];
    prop_oneof![
        role.prop_map(Message::Hello),
        Just(Message::Next),
        Just(Message::Prev),
        (0usize..50).prop_map(Message::Goto),
        (verb, proptest::collection::vec(value.clone(), 1..=2)).prop_map(|(v, a)| Message::View(v, a)),
        any::<bool>().prop_map(Message::Mirror),
        Just(Message::Support),
        Just(Message::Bye),
        (word, 0usize..50).prop_map(|(session, steps)| Message::Welcome { session, steps }),
        (0usize..50, text).prop_map(|(index, instruction)| Message::Step { index, instruction }),
        word.prop_map(Message::Target),
        (word, any::<bool>()).prop_map(|(c, r)| Message::Hilite(c, if r { HighlightKind::Remove } else { HighlightKind::Establish })),
        (word, value).prop_map(|(n, v)| Message::Obs(n, v)),
        (400u16..410, text).prop_map(|(c, t)| Message::Err(c, t)),
        Just(Message::Ok),
    ]
}

fn scripted_walk() -> Result<(), String> {
    let ctx = SessionContext::new(lesson("replace_pickalpha.lesson"), model()).map_err(|r| r.to_string())?;
    let mut rec = RecordedSession::open("s1", &ctx, &read("xppu.plant"), &read("replace_pickalpha.lesson"), Some(300));
    let c = ClientId::new("c1");
    let mut t = 0;
    let mut script = vec!["HELLO remote".to_owned()];
    script.extend((0..13).map(|_| "NEXT".to_owned()));
    script.insert(7, "SUPPORT".into());
    script.push("BYE".into());
    for line in &script {
        t += 500;
        rec.input(&ctx, t, &c, line);
    }
    let sessions = replay(&rec.drain()).map_err(|e| e.to_string())?;
    let report = sessions[0].1.report.clone().ok_or("session still active")?;
    ensure(report.penalties == 1, format!("penalties {}", report.penalties))?;
    ensure(report.steps_visited == (0..=13).collect::<BTreeSet<_>>(), format!("visited {:?}", report.steps_visited))
}

fn serve_and_replay() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log = dir.path().join("serve.jsonl");
    let mut child = Command::new(env!("CARGO_BIN_EXE_mbtrain"))
        .args(["serve", p(&corpus("xppu.plant")), p(&corpus("replace_pickalpha.lesson")), "--listen", "127.0.0.1:0"])
        .args(["--log", p(&log)])
        .stdout(Stdio::piped())
        .spawn()
        .map_err(|e| e.to_string())?;
    let result = (|| -> Result<(), String> {
        let mut first = String::new();
        BufReader::new(child.stdout.as_mut().unwrap()).read_line(&mut first).map_err(|e| e.to_string())?;
        let addr = first.trim().strip_prefix("tcp ").ok_or("no address printed")?.to_owned();
        let stream = TcpStream::connect(addr).map_err(|e| e.to_string())?;
        stream.set_read_timeout(Some(Duration::from_secs(5))).map_err(|e| e.to_string())?;
        let mut reader = BufReader::new(stream.try_clone().map_err(|e| e.to_string())?);
        let mut writer = stream;
        let mut expect = |send: &str, prefix: &str| -> Result<(), String> {
            writeln!(writer, "{send}").map_err(|e| e.to_string())?;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).map_err(|e| e.to_string())? == 0 {
                    return Err(format!("closed waiting for {prefix}"));
                }
                if line.starts_with(prefix) {
                    return Ok(());
                }
            }
        };
        expect("HELLO remote", "WELCOME")?;
        for k in 1..=13 {
            expect("NEXT", &format!("STEP {k} "))?;
        }
        expect("SUPPORT", "OK")?;
        expect("BYE", "OK")?;
        let deadline = Instant::now() + Duration::from_secs(5);
        while !std::fs::read_to_string(&log).unwrap_or_default().contains("\"dir\":\"end\"") {
            ensure(Instant::now() < deadline, "no end record")?;
            std::thread::sleep(Duration::from_millis(20));
        }
        Ok(())
    })();
    let _ = child.kill();
    let _ = child.wait();
    result?;
    let out = bin(&["replay", p(&log)]);
    ensure(out.status.code() == Some(0), format!("replay exit {:?}", out.status.code()))
}

fn protocol() -> Check {
    let messages = samples(arb_message(), 1000);
    for m in &messages {
        let back = decode::<f64>(&encode(m)).map_err(|e| format!("{m:?}: {e}"))?;
        ensure(&back == m, format!("{m:?} came back as {back:?}"))?;
    }
    scripted_walk()?;
    serve_and_replay()?;
    Ok("1000 messages; walk 0..13 with one SUPPORT gives penalties=1; served log replays".into())
}

fn renderer_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures");
    for format in ["svg", "dot"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{run}.{format}"));
            let status = bin(&[
                "render",
                p(&corpus("xppu.plant")),
                p(&corpus("replace_pickalpha.lesson")),
                "--step",
                "3",
                "--format",
                format,
                "--out",
                p(&out),
            ]);
            ensure(status.status.code() == Some(0), format!("render {format} failed"))?;
            outputs.push(std::fs::read(out).map_err(|e| e.to_string())?);
        }
        ensure(outputs[0] == outputs[1], format!("{format} differs between runs"))?;
        let frozen = std::fs::read(golden.join(format!("step3.{format}"))).map_err(|e| e.to_string())?;
        ensure(outputs[0] == frozen, format!("{format} differs from the frozen bytes"))?;
    }
    let a = step_annotation(&lesson("replace_pickalpha.lesson"), 3).map_err(|e| e.to_string())?;
    ensure(a.highlights == vec![("c_air".to_owned(), HighlightKind::Remove)], format!("{:?}", a.highlights))?;
    Ok("step 3 SVG/DOT identical over 2 runs and to frozen bytes; highlights {c_air: remove}".into())
}

fn recall_records() -> Vec<RecallRecord> {
    read("eval/recall.jsonl").lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn published_arithmetic() -> Check {
    let rows: Vec<TableRow> = read("eval/tables.jsonl").lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let row = rows
        .iter()
        .find(|r| r.table == "table3" && r.item == "It is frustrating." && r.cohort == "vts")
        .ok_or("row missing")?;
    let stats = descriptive_stats::<Exact>(&vec![1; row.n], SdConvention::Sample).map_err(|e| e.to_string())?;
    let one = Exact::from_integer(1);
    ensure(stats.mean == one && stats.median == one && stats.sd == Exact::from_integer(0), format!("{stats:?}"))?;
    ensure((row.mean, row.median, row.sd) == (Some(1.0), Some(1.0), Some(0.0)), "printed row differs")?;

    let records = recall_records();
    let total: usize = records
        .iter()
        .filter(|r| r.group == Group::Experiment)
        .map(|r| r.per_step.iter().filter(|s| s.is_error()).count())
        .sum();
    let score = score_recall::<Exact>(&records, Some(13)).map_err(|e| e.to_string())?;
    ensure(total == 4 && score.group_sizes[&Group::Experiment] == 5, format!("{total} errors"))?;
    ensure(score.group_means[&Group::Experiment] == Exact::new(4, 5), "experiment mean")?;
    Ok("frustrating (vts) = 1/1/0 exactly; experiment mean 4/5".into())
}

fn table_audit() -> Check {
    let start = Instant::now();
    let rows: Vec<TableRow> = read("eval/tables.jsonl").lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let report = audit_tables(&rows, &AuditTolerance::<f64>::default());
    let fun = report.find("table2", "It is fun to use.", "vts").ok_or("row missing")?;
    ensure(fun.verdict == RowVerdict::OkIfSwapped, format!("verdict {}", fun.verdict))?;
    ensure(fun.as_printed.as_ref().is_some_and(|v| !v.feasible), "feasible as printed")?;
    let witness = fun.swapped.as_ref().and_then(|v| v.witness.clone()).ok_or("no swapped witness")?;

    let score = score_recall::<f64>(&recall_records(), Some(13)).map_err(|e| e.to_string())?;
    let check = compare_reported(&score, &[(Group::Control, 2.6)]).remove(0);
    ensure(check.n == 4 && !check.attainable(), format!("{check:?}"))?;
    ensure((check.nearest_attainable - 2.5).abs() < 1e-9 && (check.gap - 0.1).abs() < 1e-9, format!("{check:?}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), format!("took {elapsed:?}"))?;
    Ok(format!(
        "fun-to-use infeasible as printed, swapped witness {witness:?}; control 2.6 unattainable, nearest 2.5 (gap 0.1); {elapsed:.1?}"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("corpus validity", corpus_validity),
        ("ordering sensitivity", ordering_sensitivity),
        ("brute-force oracle", brute_force_oracle),
        ("reversal", reversal),
        ("format round-trips", format_round_trips),
        ("protocol", protocol),
        ("renderer determinism", renderer_determinism),
        ("published arithmetic", published_arithmetic),
        ("table audit", table_audit),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into())) {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
