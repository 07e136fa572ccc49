//! Report envelope shared by all commands.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::{json, Value};

use nullag::{Error, Settings};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 2;
pub const EXIT_INPUT: u8 = 3;

pub struct Outcome {
    pub passed: bool,
    pub value: Value,
    pub text: String,
}

impl Outcome {
    pub fn new(passed: bool, value: Value, text: String) -> Self {
        Outcome { passed, value, text }
    }
}

#[derive(Serialize)]
struct Tolerances {
    eps_eq: f64,
    eps_act: f64,
    eps_drift: f64,
    eps_guard: f64,
    n_eq: usize,
}

#[derive(Serialize)]
pub struct Report {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    tolerances: Tolerances,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<Value>,
    #[serde(skip)]
    text: String,
    #[serde(skip)]
    exit: u8,
}

pub fn error_json(e: &Error) -> Value {
    let mut v = json!({"code": e.code(), "message": e.to_string()});
    if let Some(w) = e.witness() {
        v["witness"] = serde_json::to_value(w).unwrap_or(Value::Null);
    }
    v
}

impl Report {
    pub fn new(command: &'static str, s: &Settings, outcome: nullag::Result<Outcome>) -> Self {
        let tolerances = Tolerances {
            eps_eq: s.eps_eq,
            eps_act: s.eps_act,
            eps_drift: s.eps_drift,
            eps_guard: s.eps_guard,
            n_eq: s.n_eq,
        };
        let base = Report {
            tool: "nullag",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: s.seed,
            tolerances,
            passed: false,
            result: None,
            error: None,
            text: String::new(),
            exit: EXIT_FAIL,
        };
        match outcome {
            Ok(o) => Report {
                passed: o.passed,
                result: Some(o.value),
                text: o.text,
                exit: if o.passed { EXIT_PASS } else { EXIT_FAIL },
                ..base
            },
            Err(e) => Report {
                text: format!("error [{}]: {e}", e.code()),
                error: Some(error_json(&e)),
                exit: if e.is_input_error() { EXIT_INPUT } else { EXIT_FAIL },
                ..base
            },
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.exit
    }

    /// Write errors (a closed pipe) are ignored.
    pub fn print(&self, as_json: bool) {
        let _ = if as_json {
            writeln!(io::stdout(), "{}", serde_json::to_string_pretty(self).expect("report serializes"))
        } else if self.error.is_some() {
            writeln!(io::stderr(), "{}", self.text)
        } else {
            let verdict = if self.passed { "PASS" } else { "FAIL" };
            writeln!(io::stdout(), "{}\nnullag {} seed {:#x}: {verdict}", self.text, self.version, self.seed)
        };
    }
}
