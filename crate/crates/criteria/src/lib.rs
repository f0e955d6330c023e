//! Acceptance checks for the experiment suite live in `tests/acceptance.rs`
//! and run with `cargo test --test acceptance`. They print one PASS or FAIL
//! line per criterion and fail the run if any criterion fails.
//!
//! This package sits apart from `halo-core` so that cargo runs it after the
//! core crate's own tests.
