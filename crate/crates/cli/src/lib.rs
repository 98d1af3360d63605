//! `mbtrain` subcommands. [`run`] maps an argument vector to an exit code:
//! 0 on success, 1 when findings are reported, 2 on usage or I/O errors.
//! Machine output goes to stdout and diagnostics to stderr.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use mbtrain_core::eval::{audit_tables, compare_reported, score_recall, AuditTolerance, Group, RecallRecord, RowVerdict, TableRow};
use mbtrain_core::format::{parse_lesson_in, parse_model_in, ParseFault};
use mbtrain_core::procedure::{state_at, step_annotation, validate_lesson};
use mbtrain_core::protocol::log::{read_log, replay, ReplayError};
use mbtrain_core::protocol::DEFAULT_TIME_LIMIT_SECS;
use mbtrain_core::render::{render, Format, RenderSpec};
use mbtrain_core::{Lesson, Model};
use mbtrain_server::{LessonBundle, Server, ServerConfig};
use serde::de::DeserializeOwned;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "mbtrain", version, about = "Model-based maintenance training engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Dot,
    Svg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a lesson against its plant model and ordering rules.
    Validate { model: PathBuf, lesson: PathBuf },
    /// Draw the plant state after a step.
    Render {
        model: PathBuf,
        lesson: PathBuf,
        #[arg(long, default_value_t = 0)]
        step: usize,
        #[arg(long, value_enum, default_value = "svg")]
        format: FormatArg,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Host live sessions for a lesson.
    Serve {
        model: PathBuf,
        lesson: PathBuf,
        /// Raw line socket.
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: SocketAddr,
        /// WebSocket and `/step/<k>.svg` endpoint.
        #[arg(long)]
        http: Option<SocketAddr>,
        /// Seconds per session; 0 disables the limit.
        #[arg(long, default_value_t = DEFAULT_TIME_LIMIT_SECS)]
        time_limit: u64,
        /// JSON-lines session log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Re-run a session log and check every logged output.
    Replay { log: PathBuf },
    /// Score recall trials.
    Score {
        #[arg(long)]
        recall: PathBuf,
        /// Checks each record's step count against this lesson.
        #[arg(long, requires = "model")]
        lesson: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Published group mean to compare, e.g. `control=2.6`.
        #[arg(long = "reported", value_parser = parse_reported)]
        reported: Vec<(Group, f64)>,
        #[arg(long)]
        json: bool,
    },
    /// Check published (mean, median, SD) rows for arithmetic feasibility.
    Audit {
        #[arg(long)]
        tables: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn parse_reported(text: &str) -> Result<(Group, f64), String> {
    let (group, value) = text.split_once('=').ok_or("expected group=value")?;
    let group = match group {
        "experiment" => Group::Experiment,
        "control" => Group::Control,
        other => return Err(format!("unknown group {other}")),
    };
    let value = value.parse::<f64>().map_err(|e| e.to_string())?;
    Ok((group, value))
}

/// Failure that ends a subcommand with exit code 2.
struct Fatal(String);

impl<E: Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Fatal> {
    fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn report_faults(faults: &[ParseFault]) -> Fatal {
    Fatal(faults.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))
}

fn load(model: &Path, lesson: &Path) -> Result<(Model, Lesson), Fatal> {
    let model_text = read(model)?;
    let m = parse_model_in(&model.display().to_string(), &model_text).map_err(|f| report_faults(&f))?;
    let lesson_text = read(lesson)?;
    let l = parse_lesson_in(&lesson.display().to_string(), &lesson_text, &m).map_err(|f| report_faults(&f))?;
    Ok((m, l))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Fatal> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Fatal(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}

fn validate(model: &Path, lesson: &Path) -> Result<i32, Fatal> {
    let (m, l) = load(model, lesson)?;
    let report = validate_lesson(&l, &m);
    emit(&report.to_string());
    Ok(if report.is_empty() { EXIT_OK } else { EXIT_FINDINGS })
}

fn render_cmd(model: &Path, lesson: &Path, step: usize, format: FormatArg, out: Option<&Path>) -> Result<i32, Fatal> {
    let (m, l) = load(model, lesson)?;
    let state = state_at(&l, &m, step)?;
    let annotation = step_annotation(&l, step).ok();
    let mut spec = RenderSpec::new(&m, &state);
    if let Some(a) = &annotation {
        spec = spec.with_annotation(a);
    }
    let format = match format {
        FormatArg::Dot => Format::Dot,
        FormatArg::Svg => Format::Svg,
    };
    let text = render(&spec, format)?;
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Fatal(format!("{}: {e}", path.display())))?,
        None => emit(&text),
    }
    Ok(EXIT_OK)
}

fn serve(
    model: &Path,
    lesson: &Path,
    listen: SocketAddr,
    http: Option<SocketAddr>,
    time_limit: u64,
    log: Option<PathBuf>,
) -> Result<i32, Fatal> {
    let bundle = LessonBundle::load(
        &model.display().to_string(),
        read(model)?,
        &lesson.display().to_string(),
        read(lesson)?,
    )?;
    let config = ServerConfig {
        listen: Some(listen),
        http,
        time_limit: (time_limit > 0).then_some(time_limit),
        log_path: log,
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let server = Server::start(bundle, config).await?;
        if let Some(addr) = server.tcp_addr {
            emit(&format!("tcp {addr}\n"));
        }
        if let Some(addr) = server.http_addr {
            emit(&format!("http {addr}\n"));
        }
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = server.wait() => {}
        }
        Ok::<_, Fatal>(EXIT_OK)
    })
}

fn replay_cmd(path: &Path) -> Result<i32, Fatal> {
    let records = read_log(&read(path)?)?;
    match replay(&records) {
        Ok(sessions) => {
            for (id, s) in sessions {
                let visited: Vec<String> = s.state.steps_visited.iter().map(ToString::to_string).collect();
                let mut line = format!(
                    "session {id}: step={} penalties={} visited={{{}}}",
                    s.state.current_step,
                    s.state.penalties,
                    visited.join(",")
                );
                match &s.report {
                    Some(r) => line.push_str(&format!(" ended duration={}s early={}", r.duration_secs(), r.ended_early)),
                    None => line.push_str(" active"),
                }
                emit(&(line + "\n"));
            }
            Ok(EXIT_OK)
        }
        Err(e @ ReplayError::Divergence { .. }) => {
            eprintln!("{e}");
            Ok(EXIT_FINDINGS)
        }
        Err(e) => Err(e.into()),
    }
}

fn score(
    recall: &Path,
    lesson: Option<&Path>,
    model: Option<&Path>,
    reported: &[(Group, f64)],
    json: bool,
) -> Result<i32, Fatal> {
    let records: Vec<RecallRecord> = read_jsonl(recall)?;
    let steps = match (model, lesson) {
        (Some(m), Some(l)) => Some(load(m, l)?.1.step_count()),
        _ => None,
    };
    let score = score_recall::<f64>(&records, steps)?;
    let checks = compare_reported(&score, reported);
    let findings = checks
        .iter()
        .any(|c| !c.attainable() || (c.reported - c.computed).abs() > 1e-9);
    if json {
        let value = serde_json::json!({ "score": score, "reported": checks });
        emit(&format!("{value}\n"));
    } else {
        let mut text = String::new();
        for (p, e) in &score.per_participant_errors {
            text.push_str(&format!("participant {p}: errors={} penalties={}\n", e, score.penalties[p]));
        }
        for (g, m) in &score.group_means {
            text.push_str(&format!("group {}: n={} mean={m}\n", group_name(*g), score.group_sizes[g]));
        }
        for c in &checks {
            text.push_str(&format!(
                "reported {} {}: computed={} nearest_attainable={} gap={:.3}{}\n",
                group_name(c.group),
                c.reported,
                c.computed,
                c.nearest_attainable,
                c.gap,
                if c.attainable() { "" } else { " unattainable" }
            ));
        }
        emit(&text);
    }
    Ok(if findings { EXIT_FINDINGS } else { EXIT_OK })
}

fn group_name(group: Group) -> &'static str {
    match group {
        Group::Experiment => "experiment",
        Group::Control => "control",
    }
}

fn audit(tables: &Path, json: bool) -> Result<i32, Fatal> {
    let rows: Vec<TableRow> = read_jsonl(tables)?;
    let report = audit_tables(&rows, &AuditTolerance::<f64>::default());
    if json {
        emit(&format!("{}\n", serde_json::to_string(&report)?));
    } else {
        emit(&report.to_string());
    }
    let findings = report
        .rows
        .iter()
        .any(|r| matches!(r.verdict, RowVerdict::OkIfSwapped | RowVerdict::InfeasibleBoth));
    Ok(if findings { EXIT_FINDINGS } else { EXIT_OK })
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Validate { model, lesson } => validate(&model, &lesson),
        Command::Render {
            model,
            lesson,
            step,
            format,
            out,
        } => render_cmd(&model, &lesson, step, format, out.as_deref()),
        Command::Serve {
            model,
            lesson,
            listen,
            http,
            time_limit,
            log,
        } => serve(&model, &lesson, listen, http, time_limit, log),
        Command::Replay { log } => replay_cmd(&log),
        Command::Score {
            recall,
            lesson,
            model,
            reported,
            json,
        } => score(&recall, lesson.as_deref(), model.as_deref(), &reported, json),
        Command::Audit { tables, json } => audit(&tables, json),
    };
    match result {
        Ok(code) => code,
        Err(Fatal(message)) => {
            eprintln!("error: {message}");
            EXIT_USAGE
        }
    }
}
