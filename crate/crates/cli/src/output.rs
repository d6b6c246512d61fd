use std::fmt::Display;
use std::io::Write;

/// Collects results as ordered key/value records. Machine mode prints one
/// `key value` line per record; human mode prints `key: value`, plus free
/// text lines that machine mode drops.
#[derive(Debug, Default)]
pub struct Output {
    machine: bool,
}

impl Output {
    pub fn new(machine: bool) -> Output {
        Output { machine }
    }

    pub fn kv(&self, key: &str, value: impl Display) {
        if self.machine {
            emit(format_args!("{key} {value}\n"));
        } else {
            emit(format_args!("{key}: {value}\n"));
        }
    }

    pub fn text(&self, line: impl Display) {
        if !self.machine {
            emit(format_args!("{line}\n"));
        }
    }

    /// Text printed in both modes, such as a file body.
    pub fn raw(&self, text: impl Display) {
        emit(format_args!("{text}"));
    }
}

// A closed pipe (`| head`) is not an error worth a panic.
fn emit(args: std::fmt::Arguments<'_>) {
    let _ = std::io::stdout().lock().write_fmt(args);
}
