//! Acceptance suite in one test binary: the numbered criteria, the
//! command-line contract and randomized properties.
//!
//! Each numbered criterion prints one `criterion N PASS|FAIL` line to stderr,
//! visible without `--nocapture`.

mod cli;
mod criteria;
mod properties;
mod support;
