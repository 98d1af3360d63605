//! On-disk representations: the plant-model file and the lesson script.
//!
//! Both grammars are line based: one declaration per line, `#` comments,
//! blank lines ignored, tokens separated by spaces. Parsers never panic;
//! malformed input yields a list of [`ParseFault`]s ordered by position.

mod lesson_file;
mod lexer;
mod model_file;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use lesson_file::{parse_lesson, parse_lesson_in, serialize_lesson};
pub use model_file::{parse_model, parse_model_in, serialize_model, InvalidModel};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaultCode {
    Syntax,
    UnknownKeyword,
    DuplicateId,
    DanglingRef,
    KindMismatch,
    BadNumber,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFault {
    pub span: SourceSpan,
    pub code: FaultCode,
    pub message: String,
}

impl fmt::Display for ParseFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {:?}: {}",
            self.span.file, self.span.line, self.span.column, self.code, self.message
        )
    }
}

/// Accumulates faults for one input file.
pub(crate) struct Faults<'a> {
    file: &'a str,
    faults: Vec<ParseFault>,
}

impl<'a> Faults<'a> {
    pub fn new(file: &'a str) -> Self {
        Faults {
            file,
            faults: Vec::new(),
        }
    }

    pub fn push(&mut self, line: usize, column: usize, code: FaultCode, message: impl Into<String>) {
        self.faults.push(ParseFault {
            span: SourceSpan {
                file: self.file.to_owned(),
                line,
                column,
            },
            code,
            message: message.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.faults.is_empty()
    }

    pub fn into_sorted(mut self) -> Vec<ParseFault> {
        self.faults.sort_by_key(|f| (f.span.line, f.span.column));
        self.faults
    }
}

/// Iterates over `(1-based line number, line text)` with a trailing CR removed.
pub(crate) fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, line)| (i + 1, line.strip_suffix('\r').unwrap_or(line)))
}
