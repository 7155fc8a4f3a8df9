//! Front end for the supercocycle kernel: the form-expression grammar, JSON
//! input files, verification suites and their reports.

pub mod expr;
pub mod report;
pub mod spec;
pub mod verify;
