#![allow(dead_code)]

use std::path::PathBuf;

use mbtrain_core::format::{parse_lesson_in, parse_model_in};
use mbtrain_core::{Lesson, Model};

pub fn corpus_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(corpus_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn model() -> Model {
    parse_model_in("xppu.plant", &read("xppu.plant")).expect("corpus model parses")
}

pub fn lesson_file(rel: &str) -> Lesson {
    parse_lesson_in(rel, &read(rel), &model()).expect("lesson parses")
}

pub fn lesson() -> Lesson {
    lesson_file("replace_pickalpha.lesson")
}
