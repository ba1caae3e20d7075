//! Driving an external SMT-LIB 2 solver over stdin/stdout.
//!
//! A [`SolverSession`] keeps one solver process alive. Every `check-sat` is
//! bounded twice: the solver's own `:timeout` option, and an external deadline
//! (`timeout + grace`) after which the process is killed and the answer is
//! reported as unknown.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use num_rational::BigRational;

use super::rational::parse_value;
use super::sexpr::{paren_balance, parse};
use crate::error::{Error, Result};
use crate::partition::Status;

/// Environment variable naming the solver executable.
pub const SOLVER_ENV: &str = "FAIRCHECK_SOLVER";
pub const DEFAULT_GRACE_S: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub program: PathBuf,
    pub args: Vec<String>,
    pub seed: u64,
    /// Seconds allowed past the solver-side timeout before the process is killed.
    pub grace_s: f64,
}

impl SolverConfig {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        let program = program.into();
        let args = default_args(&program);
        SolverConfig {
            program,
            args,
            seed: 0,
            grace_s: DEFAULT_GRACE_S,
        }
    }

    /// `$FAIRCHECK_SOLVER`, falling back to `z3` on the `PATH`.
    pub fn from_env() -> Self {
        match std::env::var_os(SOLVER_ENV) {
            Some(p) if !p.is_empty() => Self::new(p),
            _ => Self::new("z3"),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_grace(mut self, grace_s: f64) -> Self {
        self.grace_s = grace_s;
        self
    }
}

fn default_args(program: &std::path::Path) -> Vec<String> {
    let stem = program
        .file_stem()
        .map(|s| s.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    let args: &[&str] = if stem.starts_with("cvc") {
        &["--lang=smt2", "--incremental"]
    } else if stem.starts_with("z3") {
        &["-in", "-smt2"]
    } else {
        &[]
    };
    args.iter().map(|s| s.to_string()).collect()
}

/// Result of one `check-sat`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutcome {
    pub status: Status,
    /// Values of the requested variables when `status` is SAT.
    pub model: Option<BTreeMap<String, BigRational>>,
    pub wall_time_s: f64,
    /// The external deadline fired and the process was killed.
    pub killed: bool,
}

enum Line {
    Text(String),
    Eof,
}

pub struct SolverSession {
    config: SolverConfig,
    child: Option<Child>,
    stdin: Option<ChildStdin>,
    lines: Option<Receiver<Line>>,
    stderr: Option<thread::JoinHandle<String>>,
}

impl SolverSession {
    /// Starts the solver. The process stays alive until dropped or killed by
    /// a deadline; a killed session restarts lazily on the next use.
    pub fn start(config: &SolverConfig) -> Result<Self> {
        let mut s = SolverSession {
            config: config.clone(),
            child: None,
            stdin: None,
            lines: None,
            stderr: None,
        };
        s.spawn()?;
        Ok(s)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn spawn(&mut self) -> Result<()> {
        let mut child = Command::new(&self.config.program)
            .args(&self.config.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| {
                Error::Backend(format!(
                    "cannot start solver `{}`: {e}",
                    self.config.program.display()
                ))
            })?;
        let stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                match line {
                    Ok(l) => {
                        if tx.send(Line::Text(l)).is_err() {
                            return;
                        }
                    }
                    Err(_) => break,
                }
            }
            let _ = tx.send(Line::Eof);
        });
        self.stderr = Some(thread::spawn(move || {
            let mut s = String::new();
            let _ = stderr.read_to_string(&mut s);
            s
        }));
        self.stdin = child.stdin.take();
        self.lines = Some(rx);
        self.child = Some(child);
        self.send(&format!(
            "(set-option :print-success false)\n(set-option :produce-models true)\n(set-option :random-seed {})\n",
            self.config.seed % (1 << 31)
        ))
    }

    fn ensure_alive(&mut self) -> Result<()> {
        if self.child.is_none() {
            self.spawn()?;
        }
        Ok(())
    }

    /// Kills the solver process. The next call starts a fresh one.
    pub fn kill(&mut self) {
        self.stdin = None;
        if let Some(mut c) = self.child.take() {
            let _ = c.kill();
            let _ = c.wait();
        }
        self.lines = None;
        self.stderr = None;
    }

    fn crash_message(&mut self) -> String {
        let status = self.child.as_mut().and_then(|c| c.wait().ok());
        let stderr = self
            .stderr
            .take()
            .and_then(|h| h.join().ok())
            .unwrap_or_default();
        let mut msg = match status {
            Some(s) => format!("solver exited ({s})"),
            None => "solver exited".to_string(),
        };
        let stderr = stderr.trim();
        if !stderr.is_empty() {
            msg.push_str(": ");
            msg.push_str(stderr.lines().next().unwrap_or_default());
        }
        msg
    }

    /// Sends raw SMT-LIB text.
    pub fn send(&mut self, text: &str) -> Result<()> {
        self.ensure_alive()?;
        let stdin = self.stdin.as_mut().expect("live session has stdin");
        let res = stdin.write_all(text.as_bytes()).and_then(|_| stdin.flush());
        if let Err(e) = res {
            let msg = self.crash_message();
            self.kill();
            return Err(Error::Backend(format!("writing to solver failed: {e}; {msg}")));
        }
        Ok(())
    }

    fn next_line(&mut self, deadline: Instant) -> Result<Option<String>> {
        let rx = self.lines.as_ref().expect("live session has a reader");
        let now = Instant::now();
        let wait = deadline.saturating_duration_since(now);
        match rx.recv_timeout(wait) {
            Ok(Line::Text(l)) => Ok(Some(l)),
            Ok(Line::Eof) | Err(RecvTimeoutError::Disconnected) => {
                let msg = self.crash_message();
                self.kill();
                Err(Error::Backend(msg))
            }
            Err(RecvTimeoutError::Timeout) => Ok(None),
        }
    }

    /// `(check-sat)` with a solver-side timeout of `timeout_s`. Returns the
    /// status and whether the external deadline killed the process.
    pub fn check(&mut self, timeout_s: f64) -> Result<(Status, bool)> {
        let ms = (timeout_s.max(0.0) * 1000.0).ceil() as u64;
        self.send(&format!("(set-option :timeout {})\n(check-sat)\n", ms.max(1)))?;
        let deadline = Instant::now() + Duration::from_secs_f64(timeout_s.max(0.0) + self.config.grace_s.max(0.0));
        loop {
            let Some(line) = self.next_line(deadline)? else {
                self.kill();
                return Ok((Status::Unknown, true));
            };
            let t = line.trim();
            match t {
                "sat" => return Ok((Status::Sat, false)),
                "unsat" => return Ok((Status::Unsat, false)),
                "unknown" | "timeout" => return Ok((Status::Unknown, false)),
                "" | "success" | "unsupported" => continue,
                _ if t.starts_with("(error") => {
                    // the solver may still answer; drop the session so stale
                    // output cannot leak into the next query
                    self.kill();
                    return Err(Error::Backend(format!("solver reported {t}")));
                }
                _ => {
                    self.kill();
                    return Err(Error::Backend(format!("unexpected solver output `{t}`")));
                }
            }
        }
    }

    /// `(get-value (..))` after a SAT answer.
    pub fn get_values(&mut self, names: &[String], timeout_s: f64) -> Result<BTreeMap<String, BigRational>> {
        if names.is_empty() {
            return Ok(BTreeMap::new());
        }
        self.send(&format!("(get-value ({}))\n", names.join(" ")))?;
        let deadline = Instant::now() + Duration::from_secs_f64(timeout_s.max(0.0) + self.config.grace_s.max(0.0));
        let mut text = String::new();
        loop {
            let Some(line) = self.next_line(deadline)? else {
                self.kill();
                return Err(Error::Protocol("solver did not return a model in time".into()));
            };
            if text.is_empty() && line.trim().is_empty() {
                continue;
            }
            text.push_str(&line);
            text.push('\n');
            if paren_balance(&text) <= 0 {
                break;
            }
        }
        let t = text.trim();
        if t.starts_with("(error") {
            return Err(Error::Protocol(format!("model unavailable: {t}")));
        }
        let e = parse(t).map_err(|e| Error::Protocol(e.to_string()))?;
        let pairs = e
            .as_list()
            .ok_or_else(|| Error::Protocol(format!("malformed model `{t}`")))?;
        let mut out = BTreeMap::new();
        for p in pairs {
            match p.as_list() {
                Some([name, value]) => {
                    let name = name
                        .as_atom()
                        .ok_or_else(|| Error::Protocol(format!("malformed model entry `{p}`")))?;
                    out.insert(name.to_string(), parse_value(value)?);
                }
                _ => return Err(Error::Protocol(format!("malformed model entry `{p}`"))),
            }
        }
        for n in names {
            if !out.contains_key(n) {
                return Err(Error::Protocol(format!("model lacks a value for `{n}`")));
            }
        }
        Ok(out)
    }

    /// Runs `body` inside a push/pop scope, checks it and fetches `names` on SAT.
    pub fn check_scoped(&mut self, body: &str, names: &[String], timeout_s: f64) -> Result<SolverOutcome> {
        let start = Instant::now();
        self.send("(push 1)\n")?;
        self.send(body)?;
        let (status, killed) = self.check(timeout_s)?;
        let model = if status == Status::Sat {
            Some(self.get_values(names, timeout_s)?)
        } else {
            None
        };
        if !killed {
            self.send("(pop 1)\n")?;
        }
        Ok(SolverOutcome {
            status,
            model,
            wall_time_s: start.elapsed().as_secs_f64(),
            killed,
        })
    }
}

impl Drop for SolverSession {
    fn drop(&mut self) {
        if let Some(stdin) = self.stdin.as_mut() {
            let _ = stdin.write_all(b"(exit)\n");
        }
        self.kill();
    }
}

/// True if the configured solver starts and answers a trivial query.
pub fn solver_available(config: &SolverConfig) -> bool {
    let Ok(mut s) = SolverSession::start(config) else {
        return false;
    };
    matches!(s.check_scoped("(assert true)\n", &[], 5.0), Ok(o) if o.status == Status::Sat)
}

/// The solver's self-reported name and version, if it answers `get-info`.
pub fn solver_version(config: &SolverConfig) -> Option<String> {
    let mut s = SolverSession::start(config).ok()?;
    s.send("(get-info :name)\n(get-info :version)\n").ok()?;
    let deadline = Instant::now() + Duration::from_secs_f64(config.grace_s.clamp(0.1, 5.0));
    let mut parts = Vec::new();
    while parts.len() < 2 {
        let line = s.next_line(deadline).ok()??;
        let e = parse(line.trim()).ok()?;
        if let Some([_, v]) = e.as_list() {
            parts.push(v.as_atom()?.trim_matches('"').to_string());
        }
    }
    Some(parts.join(" "))
}
