//! Line-oriented adapter for an external candidate generator process.
//!
//! The prompt is written to the child's stdin; candidates are read one per
//! line from stdout. The budget is passed in `PROMPTEVO_BUDGET`; output past
//! it is ignored. A non-zero exit status or a timeout fails the call.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::CandidateSet;

pub const BUDGET_ENV: &str = "PROMPTEVO_BUDGET";

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error("external generator command is empty")]
    EmptyCommand,
    #[error("failed to launch `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("generator exited with {status}: {stderr}")]
    Exit { status: String, stderr: String },
    #[error("generator timed out after {0:?}")]
    Timeout(Duration),
    #[error("generator i/o failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalCommand {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

const POLL: Duration = Duration::from_millis(5);

impl ExternalCommand {
    pub fn from_argv(argv: &[String], timeout: Duration) -> Result<Self, GenerationError> {
        let (program, args) = argv.split_first().ok_or(GenerationError::EmptyCommand)?;
        Ok(Self { program: program.clone(), args: args.to_vec(), timeout })
    }

    pub fn generate(&self, prompt: &str, budget: usize) -> Result<CandidateSet, GenerationError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .env(BUDGET_ENV, budget.to_string())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| GenerationError::Spawn { program: self.program.clone(), source })?;

        let mut stdin = child.stdin.take().expect("stdin is piped");
        let input = prompt.as_bytes().to_vec();
        // A child that never reads stdin produces a broken pipe; that is not our failure.
        let writer = thread::spawn(move || {
            let _ = stdin.write_all(&input);
        });
        let mut stdout = child.stdout.take().expect("stdout is piped");
        let reader = thread::spawn(move || {
            let mut buf = Vec::new();
            stdout.read_to_end(&mut buf).map(|_| buf)
        });
        let mut stderr = child.stderr.take().expect("stderr is piped");
        let err_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
            buf
        });

        let deadline = Instant::now() + self.timeout;
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Err(GenerationError::Timeout(self.timeout));
            }
            thread::sleep(POLL);
        };
        let _ = writer.join();
        let out = reader.join().expect("stdout reader panicked")?;
        let err = err_reader.join().expect("stderr reader panicked");
        if !status.success() {
            return Err(GenerationError::Exit {
                status: status.to_string(),
                stderr: String::from_utf8_lossy(&err).trim().to_string(),
            });
        }
        let text = String::from_utf8_lossy(&out);
        let lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l)).filter(|l| !l.is_empty());
        Ok(CandidateSet::from_iter_capped(lines.map(str::to_string), budget))
    }
}
